#pragma once

#include <string_view>

#include "polimp/pomdp.hpp"

// Average-reward machinery: chain structure, stationary distributions,
// spectral mixing diagnostics.
namespace polimp {

struct ChainReport {
  bool irreducible = false;
  /// For reducible chains: lcm of the periods of the closed classes.
  int period = 1;
  bool aperiodic = true;
  /// irreducible && aperiodic
  bool satisfies_star = false;
};

enum class StationaryMethod { linear_solve, cesaro };

std::string_view to_string(StationaryMethod m);

struct StationaryResult {
  Distribution dist;
  StationaryMethod method;
  /// ||p T - p||_inf
  double residual;
};

struct SpectralReport {
  double lambda2_abs = 0.0;
  /// exp(slope) of a least-squares fit of log ||mu_t - p||_inf; 0 if the
  /// error underflows before the fit window.
  double decay_fit = 0.0;
};

/// Graph analysis of the entries above the support threshold.
ChainReport analyze_chain(const Matrix& t);

/// Irreducible chains: unique solution of p T = p, sum p = 1 (mu ignored).
/// Otherwise: limit of period-window averages of mu_t, which equals the
/// Cesaro limit. Throws ContractViolation when the window averages fail to
/// settle within tol::kCesaroMaxSteps.
StationaryResult stationary_distribution(const Matrix& t, const Distribution& mu);

double average_reward(const Pomdp& p, const Policy& pi, const Distribution& mu);

/// Requires the chain to be irreducible and aperiodic (ValidationError otherwise).
SpectralReport spectral_analysis(const Matrix& t, const Distribution& mu, int horizon);

}  // namespace polimp
