#pragma once

#include <span>
#include <vector>

#include "polimp/pomdp.hpp"
#include "polimp/value.hpp"

// Policy improvement cones and the face-reduction construction that yields
// improved policies randomizing over at most k_s actions at sensor s.
namespace polimp {

/// Improvement cone at sensor s: the points q of the action simplex with
/// forms[i] . q >= thresholds[i] for every world state consistent with s.
struct ConeSpec {
  int sensor = 0;
  std::vector<int> world_states;  // sensor_support(p, s)
  std::vector<Vector> forms;      // forms[i] = Q(world_states[i], .)
  Vector base;                    // pi(.|s)
  Vector thresholds;              // forms[i] . base

  /// False when no world state emits s; the cone is then the whole simplex.
  bool observed() const { return !forms.empty(); }
};

struct Membership {
  bool inside = false;
  double min_slack = 0.0;
};

/// Convex polytope in the action simplex held as a vertex list. Each vertex
/// carries the set of constraints tight at it; simplex facets are indices
/// 0..n-1 (x_j >= 0) and clipping halfspaces follow in insertion order.
class VPolytope {
 public:
  static VPolytope simplex(int n);

  /// Intersects with {x : normal . x >= offset}. Vertices within the plane
  /// tolerance count as satisfying it.
  void clip(const Vector& normal, double offset);

  const std::vector<Vector>& vertices() const { return vertices_; }
  bool empty() const { return vertices_.empty(); }
  int ambient_dim() const { return n_; }

  /// Vertex maximizing form . x; ties within tolerance go to the
  /// lexicographically smallest vertex.
  Vector argmax(const Vector& form) const;

 private:
  using ActiveSet = std::vector<int>;  // sorted constraint indices

  bool adjacent(const ActiveSet& a, const ActiveSet& b) const;

  int n_ = 0;
  std::vector<Vector> normals_;  // unit normals of every constraint
  std::vector<Vector> vertices_;
  std::vector<ActiveSet> active_;
};

ConeSpec cone_forms(const Pomdp& p, const Policy& pi, double gamma, int s);
ConeSpec cone_forms(const Pomdp& p, const Policy& pi, const ValueBundle& values, int s);

/// inside iff min_i (forms[i] . q - thresholds[i]) >= -tol::kConeSlack.
Membership cone_membership(const ConeSpec& cone, const Vector& q);

/// Returns q in the simplex with forms[i] . q >= forms[i] . base for all i
/// and at most max(k, 1) nonzero coordinates. Clips the simplex by forms
/// k-1 .. 1 (descending), then takes the vertex maximizing forms[0].
Vector face_reduce(std::span<const Vector> forms, const Vector& base);

struct CertificateEntry {
  int form_index = 0;
  int world_state = 0;
  double slack = 0.0;
};

struct ImprovedPolicy {
  Policy policy;
  std::vector<int> support_sizes;
  std::vector<std::vector<CertificateEntry>> certificate;  // per sensor
  Vector values_before;
  Vector values_after;
};

/// One face-reduction step per sensor. Verifies cone membership and
/// V^{pi'} >= V^pi - tol::kValueRegression before returning; a failure is a
/// ContractViolation carrying the certificate.
ImprovedPolicy improve_policy(const Pomdp& p, const Policy& pi, double gamma);

struct IterationRecord {
  int iteration = 0;
  double min_value = 0.0;
  double discounted_reward = 0.0;
};

struct IterationResult {
  Policy policy;
  std::vector<IterationRecord> trace;
  bool converged = false;
};

/// Applies improve_policy until max_w |Delta V(w)| < tol or max_iters steps.
/// The trace starts with iteration 0 (the initial policy).
IterationResult improvement_iterate(const Pomdp& p, const Policy& pi0, double gamma,
                                    int max_iters, double tol, const Distribution& mu);

}  // namespace polimp
