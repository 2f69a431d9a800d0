#include "polimp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "polimp/errors.hpp"
#include "polimp/parallel.hpp"
#include "polimp/stationary.hpp"
#include "polimp/tolerances.hpp"
#include "polimp/value.hpp"

namespace polimp {

BuiltinExample builtin_example() {
  // Constants were picked by a seeded random search over POMDPs with the
  // structure described in the header, keeping the first candidate where
  //  - the 861-point grid argmax of R^0.6 at sensor 1 mixes exactly two actions,
  //  - those two actions differ from {argmax_a Q(1, a), argmax_a Q(2, a)},
  //  - the average-reward argmax agrees with the R^0.9999 argmax on the grid.
  RawPomdp raw;
  raw.n_world = 4;
  raw.n_sensor = 3;
  raw.n_action = 3;
  const std::vector<double> from0{0.65, 0.10, 0.08, 0.17};
  const std::vector<double> from3{0.08, 0.45, 0.22, 0.25};
  raw.alpha = {
      {from0, from0, from0},
      {{0.28, 0.10, 0.55, 0.07}, {0.16, 0.71, 0.02, 0.11}, {0.08, 0.64, 0.06, 0.22}},
      {{0.05, 0.16, 0.16, 0.63}, {0.55, 0.14, 0.15, 0.16}, {0.54, 0.05, 0.16, 0.25}},
      {from3, from3, from3},
  };
  raw.beta = {{1, 0, 0}, {0, 1, 0}, {0, 1, 0}, {0, 0, 1}};
  raw.reward = {
      {-0.5, -0.5, -0.5},
      {0.4, -0.9, -0.4},
      {-0.5, 0.8, 0.7},
      {0.0, 0.0, 0.0},
  };
  return BuiltinExample{validate_pomdp(raw), Distribution::uniform(4), 1};
}

std::vector<double> default_gammas() { return {0.6, 0.9, 0.99, 0.999, 0.9999}; }

int argmax_lowest(std::span<const double> values) {
  if (values.empty()) return -1;
  const double best = *std::max_element(values.begin(), values.end());
  const double tie = tol::kArgmaxTie * std::max(1.0, std::abs(best));
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] >= best - tie) return static_cast<int>(i);
  return -1;
}

int most_ambiguous_sensor(const Pomdp& p) {
  int best = 0;
  std::size_t best_k = 0;
  for (int s = 0; s < p.n_sensor(); ++s) {
    const std::size_t k = sensor_support(p, s).size();
    if (k > best_k) {
      best = s;
      best_k = k;
    }
  }
  return best;
}

std::vector<Policy> sensor_grid_policies(const Policy& fixed_rows, int s, int resolution) {
  const SimplexGrid grid = simplex_grid(fixed_rows.n_action(), resolution);
  std::vector<Policy> out;
  out.reserve(grid.size());
  for (const auto& q : grid.points) out.push_back(fixed_rows.with_row(s, q));
  return out;
}

SurfaceTable reward_surface(const Pomdp& p, const Distribution& mu, int s, const Policy& fixed_rows,
                            int resolution, EvalMode mode, int threads) {
  detail::check_policy_shape(p, fixed_rows);
  detail::check_distribution_size(p, mu);
  if (s < 0 || s >= p.n_sensor()) {
    throw ValidationError("sensor index " + std::to_string(s) + " out of range");
  }
  const SimplexGrid grid = simplex_grid(p.n_action(), resolution);

  SurfaceTable table{s, resolution, std::vector<SurfaceRow>(grid.size())};
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    const Policy pi = fixed_rows.with_row(s, grid.points[i]);
    SurfaceRow& row = table.rows[i];
    row.idx = static_cast<int>(i);
    row.point = grid.points[i];
    if (mode.is_average()) {
      row.flagged = !analyze_chain(world_transition(p, pi)).satisfies_star;
      row.value = average_reward(p, pi, mu);
    } else {
      row.value = discounted_reward(p, pi, *mode.gamma, mu);
    }
  });
  return table;
}

GammaSweep gamma_convergence_sweep(const Pomdp& p, const Distribution& mu,
                                   std::span<const Policy> grid, std::span<const double> gammas,
                                   int threads) {
  detail::check_distribution_size(p, mu);
  for (double g : gammas) detail::check_gamma(g);

  struct Slot {
    bool star = false;
    GammaSweepRow row;
  };
  std::vector<Slot> slots(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    const Policy& pi = grid[i];
    Slot& slot = slots[i];
    slot.star = analyze_chain(world_transition(p, pi)).satisfies_star;
    if (!slot.star) return;
    slot.row.policy_id = static_cast<int>(i);
    for (double g : gammas) slot.row.discounted.push_back(discounted_reward(p, pi, g, mu));
    slot.row.average = average_reward(p, pi, mu);
  });

  GammaSweep sweep;
  sweep.gammas.assign(gammas.begin(), gammas.end());
  for (auto& slot : slots) {
    if (slot.star) {
      sweep.rows.push_back(std::move(slot.row));
    } else {
      ++sweep.excluded;
    }
  }
  std::vector<double> column(sweep.rows.size());
  for (std::size_t k = 0; k < gammas.size(); ++k) {
    double gap = 0.0;
    for (std::size_t r = 0; r < sweep.rows.size(); ++r) {
      const auto& row = sweep.rows[r];
      gap = std::max(gap, std::abs(row.discounted[k] - row.average));
      column[r] = row.discounted[k];
    }
    const int best = argmax_lowest(column);
    sweep.sup_gap.push_back(gap);
    sweep.max_value.push_back(best < 0 ? -std::numeric_limits<double>::infinity()
                                       : column[static_cast<std::size_t>(best)]);
    sweep.argmax.push_back(best < 0 ? -1 : sweep.rows[static_cast<std::size_t>(best)].policy_id);
  }
  return sweep;
}

MaximizerTrack maximizer_track(const Pomdp& p, const Distribution& mu,
                               std::span<const Policy> grid, std::span<const double> gammas,
                               int threads) {
  const GammaSweep sweep = gamma_convergence_sweep(p, mu, grid, gammas, threads);
  if (sweep.rows.empty()) {
    throw ValidationError("maximizer_track: no grid policy induces an irreducible aperiodic chain");
  }
  MaximizerTrack track;
  track.excluded = sweep.excluded;
  std::vector<double> averages;
  for (const auto& row : sweep.rows) averages.push_back(row.average);
  const auto best = static_cast<std::size_t>(argmax_lowest(averages));
  track.average_argmax = sweep.rows[best].policy_id;
  track.average_max = averages[best];
  for (std::size_t k = 0; k < gammas.size(); ++k) {
    const auto it = std::find_if(sweep.rows.begin(), sweep.rows.end(), [&](const GammaSweepRow& r) {
      return r.policy_id == sweep.argmax[k];
    });
    track.records.push_back({gammas[k], sweep.argmax[k], it->discounted[k], it->average});
  }
  return track;
}

}  // namespace polimp
