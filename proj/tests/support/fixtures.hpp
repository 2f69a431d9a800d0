#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "polimp/pomdp.hpp"
#include "polimp/rollout.hpp"

namespace polimp::testing {

// "Blind toggle": two world states seen through a single sensor value;
// action a moves to state a; reward 1 exactly in state 1.
inline Pomdp fix_a() {
  RawPomdp raw;
  raw.n_world = 2;
  raw.n_sensor = 1;
  raw.n_action = 2;
  raw.alpha = {{{1, 0}, {0, 1}}, {{1, 0}, {0, 1}}};
  raw.beta = {{1}, {1}};
  raw.reward = {{0, 0}, {1, 1}};
  return validate_pomdp(raw);
}

/// pi(1|s0) = q
inline Policy fix_a_policy(double q) {
  Matrix t(1, 2);
  t << 1.0 - q, q;
  return Policy::from_table(t);
}

// Single self-looping state, three actions with rewards 0, 1, 2.
inline Pomdp fix_b() {
  RawPomdp raw;
  raw.n_world = 1;
  raw.n_sensor = 1;
  raw.n_action = 3;
  raw.alpha = {{{1}, {1}, {1}}};
  raw.beta = {{1}};
  raw.reward = {{0, 1, 2}};
  return validate_pomdp(raw);
}

// Two world states sharing one sensor value, three actions, strictly positive
// transitions (numpy default_rng(20170901), rounded to 3 decimals).
inline Pomdp fix_c() {
  RawPomdp raw;
  raw.n_world = 2;
  raw.n_sensor = 1;
  raw.n_action = 3;
  raw.alpha = {
      {{0.544, 0.456}, {0.265, 0.735}, {0.221, 0.779}},
      {{0.356, 0.644}, {0.597, 0.403}, {0.571, 0.429}},
  };
  raw.beta = {{1}, {1}};
  raw.reward = {{0.67, 0.423, 0.535}, {0.705, -0.42, 0.973}};
  return validate_pomdp(raw);
}

inline Vector random_simplex_point(CounterRng& rng, int n) {
  // Exponential spacings give a uniform point of the simplex.
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = -std::log(1.0 - rng.uniform());
  return v / v.sum();
}

inline Vector random_interior_point(CounterRng& rng, int n, double margin) {
  Vector v = random_simplex_point(rng, n);
  // Mix with the barycenter so that every entry is at least `margin`.
  const double w = margin * n;
  return (1.0 - w) * v + Vector::Constant(n, margin);
}

struct RandomSizes {
  int max_world = 6;
  int max_sensor = 6;
  int max_action = 6;
};

inline int random_int(CounterRng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.uniform() * (hi - lo + 1));
}

/// Random POMDP; with `sparse`, about a third of the kernel entries are zero
/// (each row keeps at least one positive entry).
inline Pomdp random_pomdp(std::uint64_t seed, RandomSizes sizes = {}, bool sparse = false) {
  CounterRng rng(seed, 0xF1C7);
  RawPomdp raw;
  raw.n_world = random_int(rng, 1, sizes.max_world);
  raw.n_sensor = random_int(rng, 1, sizes.max_sensor);
  raw.n_action = random_int(rng, 1, sizes.max_action);
  auto row = [&](int n) {
    Vector v = random_simplex_point(rng, n);
    if (sparse) {
      const int keep = random_int(rng, 0, n - 1);
      for (int i = 0; i < n; ++i)
        if (i != keep && rng.uniform() < 0.33) v[i] = 0.0;
      v /= v.sum();
    }
    return std::vector<double>(v.data(), v.data() + n);
  };
  raw.alpha.resize(static_cast<std::size_t>(raw.n_world));
  for (int w = 0; w < raw.n_world; ++w) {
    for (int a = 0; a < raw.n_action; ++a) raw.alpha[static_cast<std::size_t>(w)].push_back(row(raw.n_world));
    raw.beta.push_back(row(raw.n_sensor));
    std::vector<double> r;
    for (int a = 0; a < raw.n_action; ++a) r.push_back(2.0 * rng.uniform() - 1.0);
    raw.reward.push_back(r);
  }
  return validate_pomdp(raw);
}

inline Policy random_policy(CounterRng& rng, int n_sensor, int n_action, double margin = 0.0) {
  Matrix t(n_sensor, n_action);
  for (int s = 0; s < n_sensor; ++s) {
    t.row(s) = (margin > 0.0 ? random_interior_point(rng, n_action, margin)
                             : random_simplex_point(rng, n_action))
                   .transpose();
  }
  return Policy::from_table(t);
}

/// Fully observable MDP (beta = identity) with positive transitions.
inline Pomdp fully_observable_mdp(std::uint64_t seed, int n_world = 4, int n_action = 3) {
  CounterRng rng(seed, 0x3D9);
  RawPomdp raw;
  raw.n_world = n_world;
  raw.n_sensor = n_world;
  raw.n_action = n_action;
  raw.alpha.resize(static_cast<std::size_t>(n_world));
  for (int w = 0; w < n_world; ++w) {
    for (int a = 0; a < n_action; ++a) {
      const Vector v = random_simplex_point(rng, n_world);
      raw.alpha[static_cast<std::size_t>(w)].emplace_back(v.data(), v.data() + n_world);
    }
    std::vector<double> b(static_cast<std::size_t>(n_world), 0.0);
    b[static_cast<std::size_t>(w)] = 1.0;
    raw.beta.push_back(b);
    std::vector<double> r;
    for (int a = 0; a < n_action; ++a) r.push_back(2.0 * rng.uniform() - 1.0);
    raw.reward.push_back(r);
  }
  return validate_pomdp(raw);
}

/// Every reward equal to c, random kernels.
inline Pomdp constant_reward(std::uint64_t seed, double c) {
  RawPomdp raw = random_pomdp(seed, {4, 3, 3}).to_raw();
  for (auto& row : raw.reward)
    for (auto& r : row) r = c;
  return validate_pomdp(raw);
}

}  // namespace polimp::testing
