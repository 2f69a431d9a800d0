#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace polimp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A probability vector over a finite set (world states unless noted).
class Distribution {
 public:
  /// Validates nonnegativity and unit sum (input tolerance), then renormalizes.
  static Distribution from(const Vector& probs);
  static Distribution uniform(int n);
  static Distribution point_mass(int n, int index);

  const Vector& probs() const { return probs_; }
  int size() const { return static_cast<int>(probs_.size()); }
  double operator[](int i) const { return probs_[i]; }

 private:
  explicit Distribution(Vector probs) : probs_(std::move(probs)) {}
  Vector probs_;
};

/// Memoryless stationary policy pi(a|s); rows indexed by sensor state.
class Policy {
 public:
  static Policy from_table(const Matrix& table);
  static Policy uniform(int n_sensor, int n_action);

  const Matrix& table() const { return table_; }
  int n_sensor() const { return static_cast<int>(table_.rows()); }
  int n_action() const { return static_cast<int>(table_.cols()); }
  Vector row(int s) const { return table_.row(s).transpose(); }

  /// Copy with row s replaced by q (q must lie in the simplex).
  Policy with_row(int s, const Vector& q) const;

 private:
  explicit Policy(Matrix table) : table_(std::move(table)) {}
  Matrix table_;
};

/// Effective world-state policy p^pi(a|w), rows indexed by world state.
struct WorldPolicy {
  Matrix table;
};

/// Unvalidated kernel tables, as read from a file.
struct RawPomdp {
  int n_world = 0;
  int n_sensor = 0;
  int n_action = 0;
  std::vector<std::vector<std::vector<double>>> alpha;  // [w][a][w']
  std::vector<std::vector<double>> beta;                // [w][s]
  std::vector<std::vector<double>> reward;              // [w][a]
};

/// Validated tuple (W, S, A, alpha, beta, R). Immutable.
class Pomdp {
 public:
  int n_world() const { return n_world_; }
  int n_sensor() const { return n_sensor_; }
  int n_action() const { return n_action_; }

  /// W x W transition matrix of action a: entry (w, w') = alpha(w'|w, a).
  const Matrix& transition(int a) const { return alpha_[static_cast<std::size_t>(a)]; }
  double alpha(int w, int a, int w_next) const { return transition(a)(w, w_next); }
  /// W x S observation matrix: entry (w, s) = beta(s|w).
  const Matrix& beta() const { return beta_; }
  /// W x A reward table.
  const Matrix& reward() const { return reward_; }
  double max_abs_reward() const { return reward_.cwiseAbs().maxCoeff(); }

  RawPomdp to_raw() const;

 private:
  friend Pomdp validate_pomdp(const RawPomdp& raw);
  Pomdp() = default;

  int n_world_ = 0;
  int n_sensor_ = 0;
  int n_action_ = 0;
  std::vector<Matrix> alpha_;
  Matrix beta_;
  Matrix reward_;
};

/// Barycentric lattice {k/m : k in N^dim, sum k = m}.
struct SimplexGrid {
  int dim = 0;
  int resolution = 0;
  std::vector<Vector> points;

  std::size_t size() const { return points.size(); }
};

/// Throws ValidationError naming the offending index on any violated invariant.
Pomdp validate_pomdp(const RawPomdp& raw);

WorldPolicy effective_policy(const Pomdp& p, const Policy& pi);

/// W x W chain of world states under pi.
Matrix world_transition(const Pomdp& p, const Policy& pi);

/// World states w with beta(s|w) above the support threshold, ascending.
std::vector<int> sensor_support(const Pomdp& p, int s);

/// Lattice points ordered by their integer compositions, first coordinate
/// descending: (m,0,..,0), (m-1,1,0,..), ... , (0,..,0,m).
SimplexGrid simplex_grid(int dim, int resolution);

/// Number of lattice points, binomial(m + d - 1, d - 1); saturates at SIZE_MAX.
std::size_t simplex_grid_size(int dim, int resolution);

/// Coordinates above the support threshold.
int support_size(const Vector& q);

namespace detail {

// Unvalidated variants used where sub-stochastic policy tables are needed
// (finite-difference perturbations). table is S x A.
Matrix effective_table(const Pomdp& p, const Matrix& policy_table);
Matrix world_transition_table(const Pomdp& p, const Matrix& world_policy);
void check_policy_shape(const Pomdp& p, const Policy& pi);
void check_distribution_size(const Pomdp& p, const Distribution& mu);

}  // namespace detail

}  // namespace polimp
