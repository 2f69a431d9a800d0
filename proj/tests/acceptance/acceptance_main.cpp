// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances are pinned here, not taken from the library.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "polimp/cli.hpp"
#include "polimp/cone.hpp"
#include "polimp/experiments.hpp"
#include "polimp/io.hpp"
#include "polimp/rollout.hpp"
#include "polimp/stationary.hpp"
#include "polimp/value.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace polimp;
using namespace polimp::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  const char* id;
  const char* title;
  double time_limit_s;  // <= 0: none
  std::function<Outcome()> body;
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome bellman_correctness() {
  double worst = 0.0;
  int failures = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Pomdp p = random_pomdp(seed, {6, 6, 6}, seed % 2 == 1);
    CounterRng rng(seed, 101);
    const Policy pi = random_policy(rng, p.n_sensor(), p.n_action());
    for (double gamma : {0.0, 0.5, 0.95}) {
      try {
        const double r = solve_value(p, pi, gamma).bellman_residual();
        worst = std::max(worst, r);
        failures += r > 1e-10;
      } catch (const std::exception&) {
        ++failures;
      }
    }
  }
  return {failures == 0, "max residual " + fmt(worst) + " over 300 solves"};
}

Outcome improvement_identity() {
  double worst = 0.0;
  int pairs = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Pomdp p = random_pomdp(seed + 200, {6, 6, 6});
    CounterRng rng(seed, 102);
    for (int j = 0; j < 100; ++j, ++pairs) {
      const Policy pi = random_policy(rng, p.n_sensor(), p.n_action());
      const Policy pj = random_policy(rng, p.n_sensor(), p.n_action());
      worst = std::max(worst, improvement_identity_residual(p, pi, pj, 0.95));
    }
  }
  return {worst <= 1e-8, "max residual " + fmt(worst) + " over " + std::to_string(pairs) + " pairs"};
}

Outcome cone_lemma() {
  const double gamma = 0.9;
  double worst_gain = 0.0;
  double worst_bound = 0.0;
  int instances = 0, samples = 0, short_instances = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed, ++instances) {
    const Pomdp p = random_pomdp(seed + 300, {5, 4, 5});
    CounterRng rng(seed, 103);
    const Policy pi = random_policy(rng, p.n_sensor(), p.n_action());
    const ValueBundle vb = solve_value(p, pi, gamma);
    std::vector<ConeSpec> cones;
    for (int s = 0; s < p.n_sensor(); ++s) cones.push_back(cone_forms(p, pi, vb, s));
    const Policy target = improve_policy(p, pi, gamma).policy;

    // The cone is a product over sensors, so rejection runs row by row.
    // Proposals cycle through random steps away from pi(.|s), mixtures of
    // the improved row with simplex points, and random convex combinations
    // of the vertices of simplex-cut-by-forms. The last kind matters when
    // the cone section is thin. Every proposal still goes through the
    // membership test.
    std::vector<std::vector<Vector>> corners;
    for (const auto& c : cones) {
      VPolytope poly = VPolytope::simplex(p.n_action());
      for (std::size_t i = 0; i < c.forms.size(); ++i) poly.clip(c.forms[i], c.thresholds[static_cast<Eigen::Index>(i)]);
      corners.push_back(poly.vertices());
    }
    auto sample_row = [&](int s) -> std::optional<Vector> {
      const auto& vs = corners[static_cast<std::size_t>(s)];
      for (int draw = 0; draw < 100000; ++draw) {
        const Vector r = random_simplex_point(rng, p.n_action());
        const double mix = rng.uniform();
        Vector row;
        if (draw % 3 == 0) {
          row = pi.row(s) + mix * (r - pi.row(s));
        } else if (draw % 3 == 1 || vs.empty()) {
          row = mix * target.row(s) + (1.0 - mix) * r;
        } else {
          const Vector w = random_simplex_point(rng, static_cast<int>(vs.size()));
          row = Vector::Zero(p.n_action());
          for (std::size_t j = 0; j < vs.size(); ++j) row += w[static_cast<Eigen::Index>(j)] * vs[j];
        }
        if (cone_membership(cones[static_cast<std::size_t>(s)], row).inside) return row;
      }
      return std::nullopt;
    };
    int accepted = 0;
    for (int draw = 0; draw < 100; ++draw) {
      Matrix t(p.n_sensor(), p.n_action());
      bool complete = true;
      for (int s = 0; s < p.n_sensor() && complete; ++s) {
        const auto row = sample_row(s);
        complete = row.has_value();
        if (complete) t.row(s) = row->transpose();
      }
      if (!complete) continue;
      const Policy pj = Policy::from_table(t);
      ++accepted;
      const Vector gain = solve_value(p, pj, gamma).values - vb.values;
      const Vector d = occupancy(p, pj, gamma).diagonal;
      const Matrix delta = pj.table() - pi.table();
      for (int w = 0; w < p.n_world(); ++w) {
        double form = 0.0;
        for (int s = 0; s < p.n_sensor(); ++s) form += p.beta()(w, s) * delta.row(s).dot(vb.action_values.row(w));
        worst_gain = std::min(worst_gain, gain[w]);
        worst_bound = std::min(worst_bound, gain[w] - d[w] * form);
      }
    }
    samples += accepted;
    short_instances += accepted < 100;
  }
  const bool pass = short_instances == 0 && worst_gain >= -1e-9 && worst_bound >= -1e-9;
  return {pass, std::to_string(samples) + " cone samples on " + std::to_string(instances) +
                    " instances; min gain " + fmt(worst_gain) + ", min (gain - d*form) " + fmt(worst_bound)};
}

Outcome dimension_lemma() {
  CounterRng rng(404, 104);
  double worst_slack = std::numeric_limits<double>::infinity();
  int support_violations = 0, oracle_cases = 0, oracle_failures = 0;
  const std::vector<Vector> lattice = oracle::lattice3(200);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = random_int(rng, 1, 6);
    const int k = random_int(rng, 1, n);
    std::vector<Vector> forms;
    for (int i = 0; i < k; ++i) {
      Vector f(n);
      for (int j = 0; j < n; ++j) f[j] = 2.0 * rng.uniform() - 1.0;
      forms.push_back(f);
    }
    const Vector base = random_simplex_point(rng, n);
    const Vector q = face_reduce(forms, base);
    for (const auto& f : forms) worst_slack = std::min(worst_slack, f.dot(q) - f.dot(base));
    support_violations += support_size(q) > k;

    if (n == 3) {
      ++oracle_cases;
      double lip = 0.0;
      for (const auto& f : forms) lip = std::max(lip, f.maxCoeff() - f.minCoeff());
      double best_feasible = -1e300;
      bool low_support_near = false;
      for (const Vector& x : lattice) {
        double slack = std::numeric_limits<double>::infinity();
        for (const auto& f : forms) slack = std::min(slack, f.dot(x) - f.dot(base));
        if (slack >= 0.0) best_feasible = std::max(best_feasible, forms[0].dot(x));
        if (support_size(x) <= k && slack >= -lip / 200.0) low_support_near = true;
      }
      const bool agree = best_feasible <= forms[0].dot(q) + 1e-9 && low_support_near;
      oracle_failures += !agree;
    }
  }
  const bool pass = worst_slack >= -1e-12 && support_violations == 0 && oracle_failures == 0;
  return {pass, "min slack " + fmt(worst_slack) + ", support violations " + std::to_string(support_violations) +
                    ", lattice disagreements " + std::to_string(oracle_failures) + "/" +
                    std::to_string(oracle_cases)};
}

Outcome theorem1_desk_scale() {
  const BuiltinExample ex = builtin_example();
  const Policy fixed = Policy::uniform(3, 3);
  bool pass = true;
  std::string detail;
  for (double gamma : {0.6, 0.9}) {
    const GridArgmax g = grid_argmax(ex.pomdp, ex.mu, EvalMode::discounted(gamma), ex.sensor, fixed, 40);
    const Policy start = fixed.with_row(ex.sensor, g.point);
    const ImprovedPolicy imp = improve_policy(ex.pomdp, start, gamma);
    const int support = imp.support_sizes[static_cast<std::size_t>(ex.sensor)];
    const double value = discounted_reward(ex.pomdp, imp.policy, gamma, ex.mu);
    pass = pass && support <= 2 && value >= g.value - 1e-9;
    detail += "gamma " + fmt(gamma) + ": support " + std::to_string(support) + ", R " + fmt(value) +
              " vs grid max " + fmt(g.value) + "; ";
  }
  return {pass, detail};
}

Outcome closed_form_values() {
  const Pomdp a = fix_a();
  const Policy pi = fix_a_policy(0.5);
  // Oracles first.
  const Vector v_oracle = oracle::truncated_values(a, pi.table(), 0.9);
  const Vector p_oracle = oracle::power_iteration(oracle::transition(a, pi.table()), Vector::Unit(2, 0));
  const double oracle_err = std::max({std::abs(v_oracle[0] - 4.5), std::abs(v_oracle[1] - 5.5),
                                      std::abs(p_oracle[0] - 0.5), std::abs(p_oracle[1] - 0.5)});
  const ValueBundle b = solve_value(a, pi, 0.9);
  const StationaryResult st = stationary_distribution(world_transition(a, pi), Distribution::point_mass(2, 0));
  const double err = std::max({std::abs(b.values[0] - 4.5), std::abs(b.values[1] - 5.5),
                               std::abs(discounted_reward(a, pi, 0.9, Distribution::point_mass(2, 0)) - 0.45),
                               std::abs(st.dist[0] - 0.5), std::abs(st.dist[1] - 0.5),
                               std::abs(average_reward(a, pi, Distribution::point_mass(2, 0)) - 0.5)});
  return {oracle_err <= 1e-12 && err <= 1e-12,
          "oracle error " + fmt(oracle_err) + ", library error " + fmt(err)};
}

Outcome gradient_check() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Pomdp p = random_pomdp(seed + 700, {5, 5, 5});
    CounterRng rng(seed, 107);
    const Policy pi = random_policy(rng, p.n_sensor(), p.n_action(), 0.02);
    worst = std::max(worst, gradient_fd_check(p, pi, 0.9, 1e-5));
  }
  return {worst <= 1e-5, "max relative error " + fmt(worst) + " over 20 interior policies"};
}

Outcome uniform_convergence() {
  const BuiltinExample ex = builtin_example();
  const auto grid = sensor_grid_policies(Policy::uniform(3, 3), ex.sensor, 40);
  const std::vector<double> gammas = {0.6, 0.9, 0.99, 0.999};
  const GammaSweep s = gamma_convergence_sweep(ex.pomdp, ex.mu, grid, gammas);
  bool pass = s.rows.size() == 861 && s.excluded == 0;
  for (std::size_t k = 1; k < gammas.size(); ++k) pass = pass && s.sup_gap[k] < s.sup_gap[k - 1];
  pass = pass && s.sup_gap[2 + 1] <= s.sup_gap[1] / 10.0;
  std::string detail = "sup_gap";
  for (double g : s.sup_gap) detail += " " + fmt(g);
  return {pass, detail};
}

Outcome maximizer_convergence() {
  const BuiltinExample ex = builtin_example();
  const Policy fixed = Policy::uniform(3, 3);
  const auto grid = sensor_grid_policies(fixed, ex.sensor, 40);
  const std::vector<double> gammas = {0.9999};
  const MaximizerTrack t = maximizer_track(ex.pomdp, ex.mu, grid, gammas);
  const double gap = std::abs(t.records[0].average_at_argmax - t.average_max);

  const Policy avg_best = grid[static_cast<std::size_t>(t.average_argmax)];
  const ImprovedPolicy imp = improve_policy(ex.pomdp, avg_best, 0.9999);
  const int support = imp.support_sizes[static_cast<std::size_t>(ex.sensor)];
  const double avg_after = average_reward(ex.pomdp, imp.policy, ex.mu);
  const double post_gap = std::abs(avg_after - t.average_max);
  const bool pass = gap <= 1e-6 && support <= 2 && post_gap <= 1e-4;
  return {pass, "|R(argmax_0.9999) - max R| " + fmt(gap) + "; improved support " + std::to_string(support) +
                    ", |R(improved) - max R| " + fmt(post_gap)};
}

Outcome monte_carlo_consistency() {
  int hits = 0;
  double worst_z = 0.0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    const Pomdp p = random_pomdp(trial + 1000, {6, 6, 6});
    CounterRng rng(trial, 110);
    const Policy pi = random_policy(rng, p.n_sensor(), p.n_action());
    const int w0 = random_int(rng, 0, p.n_world() - 1);
    const double exact = solve_value(p, pi, 0.9).values[w0];
    const RolloutEstimate e = rollout_value(p, pi, 0.9, w0, 10000, 5000 + trial);
    const double err = std::abs(e.mean - exact);
    hits += err <= 3.0 * e.std_error + e.bias;
    if (e.std_error > 0.0) worst_z = std::max(worst_z, err / e.std_error);
  }
  return {hits >= 99, std::to_string(hits) + "/100 within 3 stderr + bias (max |z| " + fmt(worst_z) + ")"};
}

Outcome grid_cardinality() {
  const std::size_t n = simplex_grid(3, 40).size();
  return {n == 861, std::to_string(n) + " points"};
}

Outcome cli_determinism() {
  std::random_device rd;
  const fs::path dir = fs::temp_directory_path() / ("polimp_acceptance_" + std::to_string(rd()));
  fs::create_directories(dir);
  const std::string ex = (dir / "example.json").string();
  std::ostringstream sink_out, sink_err;
  bool pass = cli::run({"example", "--out", ex}, sink_out, sink_err) == 0;
  std::vector<std::string> csvs;
  const char* thread_counts[] = {"1", "1", "4"};
  for (int i = 0; i < 3 && pass; ++i) {
    const std::string out = (dir / ("sweep" + std::to_string(i) + ".csv")).string();
    pass = cli::run({"--threads", thread_counts[i], "sweep", "--pomdp", ex, "--sensor", "1", "--resolution",
                     "40", "--gamma", "0.6", "--out", out},
                    sink_out, sink_err) == 0;
    if (pass) csvs.push_back(io::read_text(out));
  }
  pass = pass && csvs.size() == 3 && csvs[0] == csvs[1] && csvs[0] == csvs[2] && !csvs[0].empty();
  const std::size_t bytes = csvs.empty() ? 0 : csvs[0].size();
  fs::remove_all(dir);
  return {pass, "3 runs, " + std::to_string(bytes) + " bytes each, identical: " + (pass ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"AC1", "Bellman correctness", 5.0, bellman_correctness},
      {"AC2", "Policy improvement identity", 10.0, improvement_identity},
      {"AC3", "Cone lemma", 0.0, cone_lemma},
      {"AC4", "Dimension lemma", 0.0, dimension_lemma},
      {"AC5", "Support bound at desk scale", 30.0, theorem1_desk_scale},
      {"AC6", "Closed-form values", 0.0, closed_form_values},
      {"AC7", "Gradient check", 0.0, gradient_check},
      {"AC8", "Uniform convergence trend", 0.0, uniform_convergence},
      {"AC9", "Maximizer convergence", 0.0, maximizer_convergence},
      {"AC10", "Monte-Carlo consistency", 60.0, monte_carlo_consistency},
      {"AC11", "Grid cardinality", 0.0, grid_cardinality},
      {"AC12", "CLI determinism", 0.0, cli_determinism},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_s > 0.0 && secs >= c.time_limit_s) {
      o.pass = false;
      o.detail += " [time limit " + fmt(c.time_limit_s) + " s exceeded]";
    }
    failed += !o.pass;
    std::printf("%s %-5s %-30s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
