#include "polimp/pomdp.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "polimp/errors.hpp"
#include "polimp/io.hpp"
#include "polimp/tolerances.hpp"

namespace polimp {
namespace {

// Checks one probability row and returns it renormalized to an exact unit sum.
// `where` renders the index tuple identifying the row, e.g. "w=0,a=1".
Vector checked_row(const std::vector<double>& row, const std::string& table,
                   const std::string& where) {
  double sum = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double x = row[j];
    if (!std::isfinite(x)) {
      throw ValidationError(table + ": non-finite probability at (" + where +
                            ",j=" + std::to_string(j) + ")");
    }
    if (x < 0.0) {
      throw ValidationError(table + ": negative probability " + io::format_double(x) +
                            " at (" + where + ",j=" + std::to_string(j) + ")");
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > tol::kInputRowSum) {
    throw ValidationError(table + ": row sum " + io::format_double(sum) + " at (" + where + ")");
  }
  Vector v(static_cast<Eigen::Index>(row.size()));
  for (std::size_t j = 0; j < row.size(); ++j) v[static_cast<Eigen::Index>(j)] = row[j] / sum;
  return v;
}

void expect_size(std::size_t got, int expected, const std::string& what) {
  if (got != static_cast<std::size_t>(expected)) {
    throw ValidationError("dimension mismatch: " + what + " has " + std::to_string(got) +
                          " entries, expected " + std::to_string(expected));
  }
}

Vector checked_vector_row(const Vector& v, const std::string& table, const std::string& where) {
  return checked_row(std::vector<double>(v.data(), v.data() + v.size()), table, where);
}

}  // namespace

// ---------------------------------------------------------------------------
// Distribution / Policy

Distribution Distribution::from(const Vector& probs) {
  if (probs.size() == 0) throw ValidationError("distribution: empty vector");
  return Distribution(checked_vector_row(probs, "distribution", "i"));
}

Distribution Distribution::uniform(int n) {
  if (n <= 0) throw ValidationError("distribution: size must be positive");
  return Distribution(Vector::Constant(n, 1.0 / n));
}

Distribution Distribution::point_mass(int n, int index) {
  if (n <= 0 || index < 0 || index >= n) {
    throw ValidationError("distribution: point mass index " + std::to_string(index) +
                          " out of range for size " + std::to_string(n));
  }
  Vector v = Vector::Zero(n);
  v[index] = 1.0;
  return Distribution(std::move(v));
}

Policy Policy::from_table(const Matrix& table) {
  if (table.rows() == 0 || table.cols() == 0) throw ValidationError("policy: empty table");
  Matrix out(table.rows(), table.cols());
  for (Eigen::Index s = 0; s < table.rows(); ++s) {
    out.row(s) = checked_vector_row(table.row(s).transpose(), "policy",
                                    "s=" + std::to_string(s))
                     .transpose();
  }
  return Policy(std::move(out));
}

Policy Policy::uniform(int n_sensor, int n_action) {
  if (n_sensor <= 0 || n_action <= 0) throw ValidationError("policy: sizes must be positive");
  return Policy(Matrix::Constant(n_sensor, n_action, 1.0 / n_action));
}

Policy Policy::with_row(int s, const Vector& q) const {
  if (s < 0 || s >= n_sensor()) {
    throw ValidationError("policy: sensor index " + std::to_string(s) + " out of range");
  }
  if (q.size() != table_.cols()) {
    throw ValidationError("dimension mismatch: policy row has " + std::to_string(q.size()) +
                          " entries, expected " + std::to_string(table_.cols()));
  }
  Matrix t = table_;
  t.row(s) = checked_vector_row(q, "policy", "s=" + std::to_string(s)).transpose();
  return Policy(std::move(t));
}

// ---------------------------------------------------------------------------
// Pomdp

Pomdp validate_pomdp(const RawPomdp& raw) {
  if (raw.n_world <= 0 || raw.n_sensor <= 0 || raw.n_action <= 0) {
    throw ValidationError("dimension mismatch: n_world, n_sensor and n_action must be positive");
  }
  const int nw = raw.n_world, ns = raw.n_sensor, na = raw.n_action;

  expect_size(raw.alpha.size(), nw, "alpha");
  expect_size(raw.beta.size(), nw, "beta");
  expect_size(raw.reward.size(), nw, "reward");

  Pomdp p;
  p.n_world_ = nw;
  p.n_sensor_ = ns;
  p.n_action_ = na;
  p.alpha_.assign(static_cast<std::size_t>(na), Matrix::Zero(nw, nw));
  p.beta_ = Matrix::Zero(nw, ns);
  p.reward_ = Matrix::Zero(nw, na);

  for (int w = 0; w < nw; ++w) {
    const auto& by_action = raw.alpha[static_cast<std::size_t>(w)];
    expect_size(by_action.size(), na, "alpha[" + std::to_string(w) + "]");
    for (int a = 0; a < na; ++a) {
      const auto& row = by_action[static_cast<std::size_t>(a)];
      expect_size(row.size(), nw, "alpha[" + std::to_string(w) + "][" + std::to_string(a) + "]");
      const Vector v =
          checked_row(row, "alpha", "w=" + std::to_string(w) + ",a=" + std::to_string(a));
      p.alpha_[static_cast<std::size_t>(a)].row(w) = v.transpose();
    }

    const auto& brow = raw.beta[static_cast<std::size_t>(w)];
    expect_size(brow.size(), ns, "beta[" + std::to_string(w) + "]");
    p.beta_.row(w) = checked_row(brow, "beta", "w=" + std::to_string(w)).transpose();

    const auto& rrow = raw.reward[static_cast<std::size_t>(w)];
    expect_size(rrow.size(), na, "reward[" + std::to_string(w) + "]");
    for (int a = 0; a < na; ++a) {
      const double r = rrow[static_cast<std::size_t>(a)];
      if (!std::isfinite(r)) {
        throw ValidationError("reward: non-finite entry at (w=" + std::to_string(w) +
                              ",a=" + std::to_string(a) + ")");
      }
      p.reward_(w, a) = r;
    }
  }
  return p;
}

RawPomdp Pomdp::to_raw() const {
  RawPomdp raw;
  raw.n_world = n_world_;
  raw.n_sensor = n_sensor_;
  raw.n_action = n_action_;
  raw.alpha.resize(static_cast<std::size_t>(n_world_));
  raw.beta.resize(static_cast<std::size_t>(n_world_));
  raw.reward.resize(static_cast<std::size_t>(n_world_));
  for (int w = 0; w < n_world_; ++w) {
    auto& by_action = raw.alpha[static_cast<std::size_t>(w)];
    by_action.resize(static_cast<std::size_t>(n_action_));
    for (int a = 0; a < n_action_; ++a) {
      for (int v = 0; v < n_world_; ++v) by_action[static_cast<std::size_t>(a)].push_back(alpha(w, a, v));
      raw.reward[static_cast<std::size_t>(w)].push_back(reward_(w, a));
    }
    for (int s = 0; s < n_sensor_; ++s) raw.beta[static_cast<std::size_t>(w)].push_back(beta_(w, s));
  }
  return raw;
}

// ---------------------------------------------------------------------------
// Derived kernels

namespace detail {

void check_policy_shape(const Pomdp& p, const Policy& pi) {
  if (pi.n_sensor() != p.n_sensor() || pi.n_action() != p.n_action()) {
    throw ValidationError("dimension mismatch: policy is " + std::to_string(pi.n_sensor()) + "x" +
                          std::to_string(pi.n_action()) + ", POMDP expects " +
                          std::to_string(p.n_sensor()) + "x" + std::to_string(p.n_action()));
  }
}

void check_distribution_size(const Pomdp& p, const Distribution& mu) {
  if (mu.size() != p.n_world()) {
    throw ValidationError("dimension mismatch: distribution has " + std::to_string(mu.size()) +
                          " entries, expected n_world=" + std::to_string(p.n_world()));
  }
}

Matrix effective_table(const Pomdp& p, const Matrix& policy_table) {
  return p.beta() * policy_table;
}

Matrix world_transition_table(const Pomdp& p, const Matrix& world_policy) {
  Matrix t = Matrix::Zero(p.n_world(), p.n_world());
  for (int a = 0; a < p.n_action(); ++a) {
    t.noalias() += world_policy.col(a).asDiagonal() * p.transition(a);
  }
  return t;
}

}  // namespace detail

WorldPolicy effective_policy(const Pomdp& p, const Policy& pi) {
  detail::check_policy_shape(p, pi);
  return WorldPolicy{detail::effective_table(p, pi.table())};
}

Matrix world_transition(const Pomdp& p, const Policy& pi) {
  return detail::world_transition_table(p, effective_policy(p, pi).table);
}

std::vector<int> sensor_support(const Pomdp& p, int s) {
  if (s < 0 || s >= p.n_sensor()) {
    throw ValidationError("sensor index " + std::to_string(s) + " out of range [0," +
                          std::to_string(p.n_sensor()) + ")");
  }
  std::vector<int> out;
  for (int w = 0; w < p.n_world(); ++w) {
    if (p.beta()(w, s) > tol::kSupport) out.push_back(w);
  }
  return out;
}

int support_size(const Vector& q) {
  return static_cast<int>((q.array() > tol::kSupport).count());
}

// ---------------------------------------------------------------------------
// Simplex lattice

std::size_t simplex_grid_size(int dim, int resolution) {
  // binomial(m + d - 1, d - 1), computed incrementally; exact at every step.
  const std::size_t k = static_cast<std::size_t>(dim - 1);
  const std::size_t n = static_cast<std::size_t>(resolution) + k;
  std::size_t c = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    const std::size_t num = n - k + i;
    if (c > std::numeric_limits<std::size_t>::max() / num) {
      return std::numeric_limits<std::size_t>::max();
    }
    c = c * num / i;
  }
  return c;
}

SimplexGrid simplex_grid(int dim, int resolution) {
  if (dim < 1) throw ValidationError("simplex_grid: dim must be >= 1");
  if (resolution < 1) throw ValidationError("simplex_grid: resolution must be >= 1");
  const std::size_t count = simplex_grid_size(dim, resolution);
  if (count > tol::kMaxGridPoints) {
    throw ValidationError("simplex_grid: " + std::to_string(count) +
                          " points exceed the configured maximum " +
                          std::to_string(tol::kMaxGridPoints));
  }

  SimplexGrid grid{dim, resolution, {}};
  grid.points.reserve(count);
  const double m = resolution;

  // Odometer over compositions; k[0] starts at m and counts down.
  std::vector<int> k(static_cast<std::size_t>(dim), 0);
  k[0] = resolution;
  while (true) {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = k[static_cast<std::size_t>(i)] / m;
    grid.points.push_back(std::move(v));

    // Next composition in reverse-lexicographic order: find the rightmost
    // position i < dim-1 with k[i] > 0, move one unit to i+1 and gather the
    // tail mass there.
    int i = dim - 2;
    while (i >= 0 && k[static_cast<std::size_t>(i)] == 0) --i;
    if (i < 0) break;
    const int tail = k[static_cast<std::size_t>(dim - 1)];
    k[static_cast<std::size_t>(dim - 1)] = 0;
    --k[static_cast<std::size_t>(i)];
    k[static_cast<std::size_t>(i + 1)] += 1 + tail;
  }
  return grid;
}

}  // namespace polimp
