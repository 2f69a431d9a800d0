#pragma once

#include <optional>
#include <span>
#include <vector>

#include "polimp/pomdp.hpp"

// Discounted-to-average limit experiments and simplex reward surfaces.
namespace polimp {

/// Evaluation target of a sweep: R^gamma_mu when gamma is set, R_mu otherwise.
struct EvalMode {
  std::optional<double> gamma;

  static EvalMode discounted(double g) { return EvalMode{g}; }
  static EvalMode average() { return EvalMode{std::nullopt}; }
  bool is_average() const { return !gamma.has_value(); }
};

/// Four world states, three sensor values, three actions. States 1 and 2 both
/// emit sensor 1 and favor different actions; at states 0 and 3 every action
/// has the same transitions and reward. All transition entries are positive,
/// so every policy induces an irreducible aperiodic chain.
struct BuiltinExample {
  Pomdp pomdp;
  Distribution mu;
  int sensor;
};

BuiltinExample builtin_example();

struct SurfaceRow {
  int idx = 0;
  Vector point;
  double value = 0.0;
  /// Average mode only: the chain of this policy is reducible or periodic.
  bool flagged = false;
};

struct SurfaceTable {
  int sensor = 0;
  int resolution = 0;
  std::vector<SurfaceRow> rows;
};

/// Evaluates every lattice point q of the action simplex as row `s` of
/// fixed_rows. Row order equals grid order.
SurfaceTable reward_surface(const Pomdp& p, const Distribution& mu, int s, const Policy& fixed_rows,
                            int resolution, EvalMode mode, int threads = 1);

/// Policies obtained by substituting each grid point into row s.
std::vector<Policy> sensor_grid_policies(const Policy& fixed_rows, int s, int resolution);

struct GammaSweepRow {
  int policy_id = 0;
  std::vector<double> discounted;  // one per gamma
  double average = 0.0;
};

struct GammaSweep {
  std::vector<double> gammas;
  std::vector<GammaSweepRow> rows;  // star-satisfying policies only
  std::vector<double> sup_gap;      // per gamma, max_rows |R^gamma - R|
  std::vector<double> max_value;    // per gamma, max_rows R^gamma
  std::vector<int> argmax;          // per gamma, lowest policy id attaining max_value
  int excluded = 0;                 // policies violating irreducibility/aperiodicity
};

GammaSweep gamma_convergence_sweep(const Pomdp& p, const Distribution& mu,
                                   std::span<const Policy> grid, std::span<const double> gammas,
                                   int threads = 1);

struct MaximizerRecord {
  double gamma = 0.0;
  int argmax = 0;
  double discounted_value = 0.0;
  double average_at_argmax = 0.0;
};

struct MaximizerTrack {
  std::vector<MaximizerRecord> records;
  int average_argmax = 0;
  double average_max = 0.0;
  int excluded = 0;
};

/// Per gamma, the grid argmax of R^gamma_mu (ties to the lowest index) and the
/// average reward at that policy; also the grid argmax of R_mu itself.
MaximizerTrack maximizer_track(const Pomdp& p, const Distribution& mu,
                               std::span<const Policy> grid, std::span<const double> gammas,
                               int threads = 1);

/// Default gamma sequence for limit sweeps.
std::vector<double> default_gammas();

/// Lowest index whose value is within the tie tolerance of the maximum.
int argmax_lowest(std::span<const double> values);

/// Sensor with the most consistent world states (lowest index on ties).
int most_ambiguous_sensor(const Pomdp& p);

}  // namespace polimp
