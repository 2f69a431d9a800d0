#include "polimp/value.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "polimp/errors.hpp"
#include "polimp/io.hpp"
#include "polimp/tolerances.hpp"

namespace polimp {

double ValueBundle::bellman_residual() const {
  const Vector expected = world_policy.cwiseProduct(action_values).rowwise().sum();
  return (values - expected).cwiseAbs().maxCoeff();
}

double GradientTensor::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

namespace detail {

void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ValidationError("discount factor " + io::format_double(gamma) + " outside [0, 1)");
  }
}

ValueBundle solve_value_table(const Pomdp& p, const Matrix& policy_table, double gamma) {
  check_gamma(gamma);
  const int nw = p.n_world();

  ValueBundle b;
  b.gamma = gamma;
  b.world_policy = effective_table(p, policy_table);
  b.transition = world_transition_table(p, b.world_policy);
  b.mean_reward = b.world_policy.cwiseProduct(p.reward()).rowwise().sum();

  const Matrix system = Matrix::Identity(nw, nw) - gamma * b.transition;
  b.values = system.partialPivLu().solve(b.mean_reward);

  b.action_values = p.reward();
  for (int a = 0; a < p.n_action(); ++a) {
    b.action_values.col(a).noalias() += gamma * (p.transition(a) * b.values);
  }

  const double residual = b.bellman_residual();
  if (!(residual <= tol::kBellmanResidual)) {
    throw ContractViolation("Bellman residual " + io::format_double(residual) +
                            " exceeds " + io::format_double(tol::kBellmanResidual) +
                            " at gamma=" + io::format_double(gamma));
  }
  return b;
}

}  // namespace detail

ValueBundle solve_value(const Pomdp& p, const Policy& pi, double gamma) {
  detail::check_policy_shape(p, pi);
  return detail::solve_value_table(p, pi.table(), gamma);
}

double discounted_reward(const Pomdp& p, const Policy& pi, double gamma, const Distribution& mu) {
  detail::check_distribution_size(p, mu);
  const ValueBundle b = solve_value(p, pi, gamma);
  return (1.0 - gamma) * mu.probs().dot(b.values);
}

Occupancy occupancy(const Pomdp& p, const Policy& pi, double gamma) {
  detail::check_gamma(gamma);
  const Matrix t = world_transition(p, pi);
  const int nw = p.n_world();
  Occupancy occ;
  occ.matrix = (Matrix::Identity(nw, nw) - gamma * t).partialPivLu().inverse();
  occ.diagonal = occ.matrix.diagonal();
  return occ;
}

AdvantageVector advantage_eps(const Pomdp& p, const Policy& pi, const Policy& pi_new,
                              double gamma) {
  detail::check_policy_shape(p, pi_new);
  const ValueBundle b = solve_value(p, pi, gamma);
  const Matrix new_world = effective_policy(p, pi_new).table;
  return AdvantageVector{new_world.cwiseProduct(b.action_values).rowwise().sum() - b.values};
}

double improvement_identity_residual(const Pomdp& p, const Policy& pi, const Policy& pi_new,
                                     double gamma) {
  const ValueBundle old_b = solve_value(p, pi, gamma);
  const ValueBundle new_b = solve_value(p, pi_new, gamma);
  const AdvantageVector eps = advantage_eps(p, pi, pi_new, gamma);
  const Occupancy occ = occupancy(p, pi_new, gamma);
  const Vector lhs = new_b.values - old_b.values;
  return (lhs - occ.matrix * eps.eps).cwiseAbs().maxCoeff();
}

GradientTensor policy_gradient_exact(const Pomdp& p, const Policy& pi, double gamma) {
  const ValueBundle b = solve_value(p, pi, gamma);
  const Occupancy occ = occupancy(p, pi, gamma);
  GradientTensor g(p.n_world(), p.n_sensor(), p.n_action());
  for (int w0 = 0; w0 < p.n_world(); ++w0) {
    // (S x A) = beta^T diag(Occ(w0, .)) Q
    const Matrix slice =
        p.beta().transpose() * occ.matrix.row(w0).transpose().asDiagonal() * b.action_values;
    for (int s = 0; s < p.n_sensor(); ++s)
      for (int a = 0; a < p.n_action(); ++a) g(w0, s, a) = slice(s, a);
  }
  return g;
}

double gradient_fd_check(const Pomdp& p, const Policy& pi, double gamma, double step) {
  detail::check_policy_shape(p, pi);
  if (!(step > 0.0)) throw ValidationError("finite-difference step must be positive");
  const double margin = pi.table().minCoeff();
  if (margin < 2.0 * step) {
    throw ValidationError("finite-difference margin violated: min policy entry " +
                          io::format_double(margin) + " < 2*step=" + io::format_double(2 * step));
  }
  const GradientTensor exact = policy_gradient_exact(p, pi, gamma);

  double worst = 0.0;
  for (int s = 0; s < p.n_sensor(); ++s) {
    for (int a = 0; a < p.n_action(); ++a) {
      Matrix plus = pi.table();
      Matrix minus = pi.table();
      plus(s, a) += step;
      minus(s, a) -= step;
      const Vector vp = detail::solve_value_table(p, plus, gamma).values;
      const Vector vm = detail::solve_value_table(p, minus, gamma).values;
      for (int w0 = 0; w0 < p.n_world(); ++w0) {
        const double fd = (vp[w0] - vm[w0]) / (2.0 * step);
        const double g = exact(w0, s, a);
        const double denom = std::max({std::abs(g), std::abs(fd), 1.0});
        worst = std::max(worst, std::abs(g - fd) / denom);
      }
    }
  }
  return worst;
}

}  // namespace polimp
