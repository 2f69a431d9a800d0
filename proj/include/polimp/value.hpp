#pragma once

#include <vector>

#include "polimp/pomdp.hpp"

// Discounted-reward algebra: Bellman solves, occupancy measures, advantages and
// the exact policy gradient.
namespace polimp {

/// V^pi, Q^pi and the per-state mean reward for one (policy, gamma) pair.
struct ValueBundle {
  double gamma = 0.0;
  Vector values;          // V(w)
  Matrix action_values;   // Q(w, a)
  Vector mean_reward;     // r_pi(w) = sum_a p^pi(a|w) R(w, a)
  Matrix world_policy;    // p^pi(a|w), kept for residual checks
  Matrix transition;      // T_pi

  /// max_w |V(w) - sum_a p^pi(a|w) Q(w, a)|
  double bellman_residual() const;
};

/// Discounted visit counts: matrix = (I - gamma T_pi)^-1, diagonal = d^pi.
struct Occupancy {
  Matrix matrix;
  Vector diagonal;
};

/// eps(w) = sum_a p^{pi'}(a|w) Q^pi(w, a) - V^pi(w).
struct AdvantageVector {
  Vector eps;
};

/// Dense (w0, s, a) tensor of dV(w0)/dpi(a|s).
class GradientTensor {
 public:
  GradientTensor(int n_world, int n_sensor, int n_action)
      : n_world_(n_world), n_sensor_(n_sensor), n_action_(n_action),
        data_(static_cast<std::size_t>(n_world) * n_sensor * n_action, 0.0) {}

  double& operator()(int w0, int s, int a) { return data_[index(w0, s, a)]; }
  double operator()(int w0, int s, int a) const { return data_[index(w0, s, a)]; }

  int n_world() const { return n_world_; }
  int n_sensor() const { return n_sensor_; }
  int n_action() const { return n_action_; }
  double max_abs() const;

 private:
  std::size_t index(int w0, int s, int a) const {
    return (static_cast<std::size_t>(w0) * n_sensor_ + s) * n_action_ + a;
  }
  int n_world_, n_sensor_, n_action_;
  std::vector<double> data_;
};

/// Solves (I - gamma T_pi) V = r_pi by partial-pivoting LU. Throws
/// ValidationError for gamma outside [0, 1) and ContractViolation when the
/// Bellman residual exceeds tol::kBellmanResidual.
ValueBundle solve_value(const Pomdp& p, const Policy& pi, double gamma);

/// (1 - gamma) <mu, V^pi>
double discounted_reward(const Pomdp& p, const Policy& pi, double gamma, const Distribution& mu);

Occupancy occupancy(const Pomdp& p, const Policy& pi, double gamma);

AdvantageVector advantage_eps(const Pomdp& p, const Policy& pi, const Policy& pi_new, double gamma);

/// max_w |V^{pi'}(w) - V^pi(w) - (Occ(pi') eps)(w)|; zero in exact arithmetic.
double improvement_identity_residual(const Pomdp& p, const Policy& pi, const Policy& pi_new,
                                     double gamma);

/// Entry (w0, s, a) = sum_w Occ(w0, w) beta(s|w) Q^pi(w, a): the derivative of
/// V^pi(w0) along the unconstrained table coordinate pi(a|s).
GradientTensor policy_gradient_exact(const Pomdp& p, const Policy& pi, double gamma);

/// Largest relative error between policy_gradient_exact and central
/// differences of V in raw table coordinates (no renormalization). The
/// relative error of an entry is |g - fd| / max(|g|, |fd|, 1). Requires every
/// policy entry to be at least 2 * step.
double gradient_fd_check(const Pomdp& p, const Policy& pi, double gamma,
                         double step = 1e-5);

namespace detail {
// Bellman solve for an arbitrary (possibly sub-stochastic) S x A table.
ValueBundle solve_value_table(const Pomdp& p, const Matrix& policy_table, double gamma);
void check_gamma(double gamma);
}  // namespace detail

}  // namespace polimp
