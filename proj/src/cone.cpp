#include "polimp/cone.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>

#include "polimp/errors.hpp"
#include "polimp/io.hpp"
#include "polimp/tolerances.hpp"

namespace polimp {
namespace {

// Absolute tolerance for "on the hyperplane" tests of a form.
double plane_tolerance(const Vector& form) {
  return 1e-13 * std::max(1.0, form.cwiseAbs().maxCoeff());
}

bool lex_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

std::string dump_point(const Vector& q) {
  std::string out = "(";
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (i) out += ", ";
    out += io::format_double(q[i]);
  }
  return out + ")";
}

}  // namespace

// ---------------------------------------------------------------------------
// VPolytope

VPolytope VPolytope::simplex(int n) {
  if (n < 1) throw ValidationError("VPolytope: dimension must be positive");
  VPolytope poly;
  poly.n_ = n;
  for (int j = 0; j < n; ++j) poly.normals_.push_back(Vector::Unit(n, j));
  for (int i = 0; i < n; ++i) {
    poly.vertices_.push_back(Vector::Unit(n, i));
    ActiveSet tight;
    for (int j = 0; j < n; ++j)
      if (j != i) tight.push_back(j);
    poly.active_.push_back(std::move(tight));
  }
  return poly;
}

bool VPolytope::adjacent(const ActiveSet& a, const ActiveSet& b) const {
  ActiveSet common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  // The common tight constraints together with sum(x) = 1 must cut out a line.
  if (static_cast<int>(common.size()) < n_ - 2) return false;
  Matrix rows(static_cast<Eigen::Index>(common.size()) + 1, n_);
  rows.row(0).setOnes();
  rows.row(0) /= std::sqrt(static_cast<double>(n_));
  for (std::size_t i = 0; i < common.size(); ++i) {
    rows.row(static_cast<Eigen::Index>(i) + 1) =
        normals_[static_cast<std::size_t>(common[i])].transpose();
  }
  Eigen::FullPivLU<Matrix> lu(rows);
  lu.setThreshold(1e-10);
  return lu.rank() == n_ - 1;
}

void VPolytope::clip(const Vector& normal, double offset) {
  if (normal.size() != n_) {
    throw ValidationError("dimension mismatch: clip normal has " + std::to_string(normal.size()) +
                          " entries, polytope lives in dimension " + std::to_string(n_));
  }
  const int index = static_cast<int>(normals_.size());
  const double norm = normal.norm();
  normals_.push_back(norm > 0.0 ? Vector(normal / norm) : Vector(Vector::Zero(n_)));

  const double tol_plane = plane_tolerance(normal);
  std::vector<double> value(vertices_.size());
  for (std::size_t i = 0; i < vertices_.size(); ++i) value[i] = normal.dot(vertices_[i]) - offset;

  std::vector<Vector> kept;
  std::vector<ActiveSet> kept_active;
  auto add_vertex = [&](Vector x, ActiveSet tight) {
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if ((kept[i] - x).cwiseAbs().maxCoeff() <= tol::kVertexDedup) {
        ActiveSet merged;
        std::set_union(kept_active[i].begin(), kept_active[i].end(), tight.begin(), tight.end(),
                       std::back_inserter(merged));
        kept_active[i] = std::move(merged);
        return;
      }
    }
    kept.push_back(std::move(x));
    kept_active.push_back(std::move(tight));
  };

  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (value[i] < -tol_plane) continue;
    ActiveSet tight = active_[i];
    if (value[i] <= tol_plane) tight.push_back(index);
    add_vertex(vertices_[i], std::move(tight));
  }

  // Edges from strictly inside to strictly outside contribute one new vertex.
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (value[i] <= tol_plane) continue;
    for (std::size_t j = 0; j < vertices_.size(); ++j) {
      if (value[j] >= -tol_plane) continue;
      if (!adjacent(active_[i], active_[j])) continue;
      const double t = value[i] / (value[i] - value[j]);
      Vector x = (1.0 - t) * vertices_[i] + t * vertices_[j];
      ActiveSet tight;
      std::set_intersection(active_[i].begin(), active_[i].end(), active_[j].begin(),
                            active_[j].end(), std::back_inserter(tight));
      tight.push_back(index);
      add_vertex(std::move(x), std::move(tight));
    }
  }

  vertices_ = std::move(kept);
  active_ = std::move(kept_active);
}

Vector VPolytope::argmax(const Vector& form) const {
  if (vertices_.empty()) throw ContractViolation("VPolytope::argmax on an empty polytope");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : vertices_) best = std::max(best, form.dot(v));
  const double tie = 1e-12 * std::max(1.0, std::abs(best));
  const Vector* chosen = nullptr;
  for (const auto& v : vertices_) {
    if (form.dot(v) < best - tie) continue;
    if (chosen == nullptr || lex_less(v, *chosen)) chosen = &v;
  }
  return *chosen;
}

// ---------------------------------------------------------------------------
// Cones

ConeSpec cone_forms(const Pomdp& p, const Policy& pi, const ValueBundle& values, int s) {
  detail::check_policy_shape(p, pi);
  ConeSpec cone;
  cone.sensor = s;
  cone.world_states = sensor_support(p, s);
  cone.base = pi.row(s);
  cone.thresholds.resize(static_cast<Eigen::Index>(cone.world_states.size()));
  for (std::size_t i = 0; i < cone.world_states.size(); ++i) {
    Vector form = values.action_values.row(cone.world_states[i]).transpose();
    cone.thresholds[static_cast<Eigen::Index>(i)] = form.dot(cone.base);
    cone.forms.push_back(std::move(form));
  }
  return cone;
}

ConeSpec cone_forms(const Pomdp& p, const Policy& pi, double gamma, int s) {
  return cone_forms(p, pi, solve_value(p, pi, gamma), s);
}

Membership cone_membership(const ConeSpec& cone, const Vector& q) {
  if (!cone.observed()) return {true, std::numeric_limits<double>::infinity()};
  double min_slack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cone.forms.size(); ++i) {
    if (cone.forms[i].size() != q.size()) {
      throw ValidationError("dimension mismatch: point has " + std::to_string(q.size()) +
                            " coordinates, cone forms have " +
                            std::to_string(cone.forms[i].size()));
    }
    min_slack = std::min(min_slack,
                         cone.forms[i].dot(q) - cone.thresholds[static_cast<Eigen::Index>(i)]);
  }
  return {min_slack >= -tol::kConeSlack, min_slack};
}

Vector face_reduce(std::span<const Vector> forms, const Vector& base) {
  const int n = static_cast<int>(base.size());
  VPolytope poly = VPolytope::simplex(n);
  if (forms.empty()) return poly.argmax(Vector::Zero(n));

  for (std::size_t i = forms.size() - 1; i >= 1; --i) {
    poly.clip(forms[i], forms[i].dot(base));
    if (poly.empty()) {
      std::ostringstream msg;
      msg << "face_reduce: polytope became empty after clipping by form " << i
          << "; base=" << dump_point(base) << " form=" << dump_point(forms[i]);
      throw ContractViolation(msg.str());
    }
  }
  return poly.argmax(forms[0]);
}

// ---------------------------------------------------------------------------
// Improvement

namespace {

std::string certificate_dump(const std::vector<std::vector<CertificateEntry>>& cert) {
  std::ostringstream out;
  for (std::size_t s = 0; s < cert.size(); ++s) {
    out << " s=" << s << ":";
    for (const auto& e : cert[s]) out << " (w=" << e.world_state << ", slack=" << io::format_double(e.slack) << ")";
  }
  return out.str();
}

}  // namespace

ImprovedPolicy improve_policy(const Pomdp& p, const Policy& pi, double gamma) {
  const ValueBundle before = solve_value(p, pi, gamma);

  Matrix table = pi.table();
  std::vector<int> support_sizes;
  std::vector<std::vector<CertificateEntry>> certificate;
  for (int s = 0; s < p.n_sensor(); ++s) {
    const ConeSpec cone = cone_forms(p, pi, before, s);
    const Vector q = face_reduce(cone.forms, cone.base);
    table.row(s) = q.transpose();
    support_sizes.push_back(support_size(q));

    std::vector<CertificateEntry> entries;
    for (std::size_t i = 0; i < cone.forms.size(); ++i) {
      entries.push_back({static_cast<int>(i), cone.world_states[i],
                         cone.forms[i].dot(q) - cone.thresholds[static_cast<Eigen::Index>(i)]});
    }
    certificate.push_back(std::move(entries));
  }

  for (int s = 0; s < p.n_sensor(); ++s) {
    const int bound = std::max<int>(1, static_cast<int>(sensor_support(p, s).size()));
    if (support_sizes[static_cast<std::size_t>(s)] > bound) {
      throw ContractViolation("improve_policy: support " +
                              std::to_string(support_sizes[static_cast<std::size_t>(s)]) +
                              " exceeds bound " + std::to_string(bound) + " at s=" +
                              std::to_string(s) + ";" + certificate_dump(certificate));
    }
    for (const auto& e : certificate[static_cast<std::size_t>(s)]) {
      if (e.slack < -tol::kConeSlack) {
        throw ContractViolation("improve_policy: cone slack below tolerance;" +
                                certificate_dump(certificate));
      }
    }
  }

  Policy improved = Policy::from_table(table);
  const ValueBundle after = solve_value(p, improved, gamma);
  const double regression = (before.values - after.values).maxCoeff();
  if (regression > tol::kValueRegression) {
    throw ContractViolation("improve_policy: value decreased by " + io::format_double(regression) +
                            ";" + certificate_dump(certificate));
  }
  return ImprovedPolicy{std::move(improved), std::move(support_sizes), std::move(certificate),
                        before.values, after.values};
}

IterationResult improvement_iterate(const Pomdp& p, const Policy& pi0, double gamma,
                                    int max_iters, double tol, const Distribution& mu) {
  detail::check_distribution_size(p, mu);
  if (max_iters < 0) throw ValidationError("improvement_iterate: max_iters must be >= 0");

  IterationResult result{pi0, {}, false};
  const ValueBundle initial = solve_value(p, pi0, gamma);
  result.trace.push_back({0, initial.values.minCoeff(), (1.0 - gamma) * mu.probs().dot(initial.values)});

  for (int it = 1; it <= max_iters; ++it) {
    ImprovedPolicy step = improve_policy(p, result.policy, gamma);
    const double change = (step.values_after - step.values_before).cwiseAbs().maxCoeff();
    result.policy = std::move(step.policy);
    result.trace.push_back({it, step.values_after.minCoeff(),
                            (1.0 - gamma) * mu.probs().dot(step.values_after)});
    if (change < tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace polimp
