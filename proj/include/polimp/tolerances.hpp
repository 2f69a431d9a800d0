#pragma once

#include <cstddef>

// Numerical thresholds shared by every module.
namespace polimp::tol {

// Probabilities at or below this count as zero (supports, graph edges).
inline constexpr double kSupport = 1e-12;

// Row sums read from files may deviate from 1 by this much before rejection.
inline constexpr double kInputRowSum = 1e-9;
// Row sums after validation / for derived kernels.
inline constexpr double kRowSum = 1e-12;

inline constexpr double kBellmanResidual = 1e-10;
inline constexpr double kOccupancyRowSum = 1e-9;
inline constexpr double kImprovementIdentity = 1e-8;
inline constexpr double kStationaryResidual = 1e-10;

// Cone membership and the value-regression guard in improve_policy.
inline constexpr double kConeSlack = 1e-9;
inline constexpr double kValueRegression = 1e-9;

inline constexpr double kVertexDedup = 1e-10;

// Grid values closer than this (relative to max(1, |best|)) count as ties,
// resolved toward the lowest grid index.
inline constexpr double kArgmaxTie = 1e-12;

inline constexpr double kCesaro = 1e-12;
inline constexpr long kCesaroMaxSteps = 1'000'000;

inline constexpr double kFiniteDifferenceStep = 1e-5;
inline constexpr double kRolloutBias = 1e-6;

inline constexpr std::size_t kMaxGridPoints = 20'000'000;

}  // namespace polimp::tol
