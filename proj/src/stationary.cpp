#include "polimp/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <queue>
#include <string>

#include <Eigen/Eigenvalues>

#include "polimp/errors.hpp"
#include "polimp/io.hpp"
#include "polimp/tolerances.hpp"

namespace polimp {
namespace {

using Adjacency = std::vector<std::vector<int>>;

Adjacency support_graph(const Matrix& t) {
  const int n = static_cast<int>(t.rows());
  Adjacency adj(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (t(i, j) > tol::kSupport) adj[static_cast<std::size_t>(i)].push_back(j);
  return adj;
}

std::vector<char> reachable_from(const Adjacency& adj, int root) {
  std::vector<char> seen(adj.size(), 0);
  std::vector<int> stack{root};
  seen[static_cast<std::size_t>(root)] = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

// gcd of (level(u) + 1 - level(v)) over edges inside a closed class, with
// levels from a BFS rooted in the class.
int class_period(const Adjacency& adj, const std::vector<int>& members) {
  std::vector<int> level(adj.size(), -1);
  std::queue<int> q;
  level[static_cast<std::size_t>(members.front())] = 0;
  q.push(members.front());
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (level[static_cast<std::size_t>(v)] < 0) {
        level[static_cast<std::size_t>(v)] = level[static_cast<std::size_t>(u)] + 1;
        q.push(v);
      }
    }
  }
  int g = 0;
  for (int u : members)
    for (int v : adj[static_cast<std::size_t>(u)])
      g = std::gcd(g, std::abs(level[static_cast<std::size_t>(u)] + 1 -
                               level[static_cast<std::size_t>(v)]));
  return g == 0 ? 1 : g;
}

void check_square(const Matrix& t) {
  if (t.rows() != t.cols() || t.rows() == 0) {
    throw ValidationError("dimension mismatch: transition matrix must be square and non-empty");
  }
}

Vector stationary_by_solve(const Matrix& t) {
  const Eigen::Index n = t.rows();
  Matrix system = t.transpose() - Matrix::Identity(n, n);
  system.row(n - 1).setOnes();
  Vector rhs = Vector::Zero(n);
  rhs[n - 1] = 1.0;
  Vector p = system.partialPivLu().solve(rhs);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (p[i] < -tol::kStationaryResidual) {
      throw ContractViolation("stationary solve produced negative mass " +
                              io::format_double(p[i]) + " at w=" + std::to_string(i));
    }
    p[i] = std::max(p[i], 0.0);
  }
  return p / p.sum();
}

// Window average over one full period of the propagated distribution; stops
// once mu_t repeats with the chain period to within tol::kCesaro for a whole
// window.
Vector stationary_by_window_average(const Matrix& t, const Vector& mu, int period) {
  std::deque<Vector> window;
  Vector current = mu;
  window.push_back(current);
  int settled = 0;
  for (long step = 1; step <= tol::kCesaroMaxSteps; ++step) {
    current = (current.transpose() * t).transpose();
    window.push_back(current);
    if (static_cast<int>(window.size()) > period + 1) window.pop_front();
    if (static_cast<int>(window.size()) == period + 1) {
      const double change = (window.back() - window.front()).cwiseAbs().maxCoeff();
      settled = change < tol::kCesaro ? settled + 1 : 0;
      if (settled >= period) {
        Vector avg = Vector::Zero(t.rows());
        for (std::size_t i = 1; i < window.size(); ++i) avg += window[i];
        avg /= period;
        return avg / avg.sum();
      }
    }
  }
  throw ContractViolation("Cesaro average did not converge within " +
                          std::to_string(tol::kCesaroMaxSteps) + " steps");
}

}  // namespace

std::string_view to_string(StationaryMethod m) {
  return m == StationaryMethod::linear_solve ? "linear_solve" : "cesaro";
}

ChainReport analyze_chain(const Matrix& t) {
  check_square(t);
  const int n = static_cast<int>(t.rows());
  const Adjacency adj = support_graph(t);

  std::vector<std::vector<char>> reach;
  reach.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) reach.push_back(reachable_from(adj, i));

  // Closed communicating classes: i reaches j implies j reaches i.
  std::vector<char> assigned(static_cast<std::size_t>(n), 0);
  int period = 1;
  int n_classes = 0;
  for (int i = 0; i < n; ++i) {
    if (assigned[static_cast<std::size_t>(i)]) continue;
    std::vector<int> members;
    bool closed = true;
    for (int j = 0; j < n; ++j) {
      const bool fwd = reach[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      const bool back = reach[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
      if (fwd && back) members.push_back(j);
      if (fwd && !back) closed = false;
    }
    for (int j : members) assigned[static_cast<std::size_t>(j)] = 1;
    ++n_classes;
    if (closed) period = std::lcm(period, class_period(adj, members));
  }

  ChainReport r;
  r.irreducible = n_classes == 1;
  r.period = period;
  r.aperiodic = period == 1;
  r.satisfies_star = r.irreducible && r.aperiodic;
  return r;
}

StationaryResult stationary_distribution(const Matrix& t, const Distribution& mu) {
  check_square(t);
  if (mu.size() != t.rows()) {
    throw ValidationError("dimension mismatch: distribution has " + std::to_string(mu.size()) +
                          " entries, chain has " + std::to_string(t.rows()) + " states");
  }
  const ChainReport chain = analyze_chain(t);
  Vector p;
  StationaryMethod method;
  if (chain.irreducible) {
    p = stationary_by_solve(t);
    method = StationaryMethod::linear_solve;
  } else {
    p = stationary_by_window_average(t, mu.probs(), chain.period);
    method = StationaryMethod::cesaro;
  }
  const double residual = (p.transpose() * t - p.transpose()).cwiseAbs().maxCoeff();
  if (method == StationaryMethod::linear_solve && !(residual <= tol::kStationaryResidual)) {
    throw ContractViolation("stationary residual " + io::format_double(residual) + " exceeds " +
                            io::format_double(tol::kStationaryResidual));
  }
  return StationaryResult{Distribution::from(p), method, residual};
}

double average_reward(const Pomdp& p, const Policy& pi, const Distribution& mu) {
  detail::check_distribution_size(p, mu);
  const Matrix world = effective_policy(p, pi).table;
  const Matrix t = detail::world_transition_table(p, world);
  const Vector r = world.cwiseProduct(p.reward()).rowwise().sum();
  return stationary_distribution(t, mu).dist.probs().dot(r);
}

SpectralReport spectral_analysis(const Matrix& t, const Distribution& mu, int horizon) {
  check_square(t);
  if (horizon < 2) throw ValidationError("spectral_analysis: horizon must be >= 2");
  if (!analyze_chain(t).satisfies_star) {
    throw ValidationError("spectral_analysis: chain is not irreducible and aperiodic");
  }
  const Eigen::Index n = t.rows();

  SpectralReport rep;
  if (n >= 2) {
    Eigen::EigenSolver<Matrix> es(t, false);
    std::vector<double> mags;
    for (Eigen::Index i = 0; i < n; ++i) mags.push_back(std::abs(es.eigenvalues()[i]));
    std::sort(mags.begin(), mags.end(), std::greater<>());
    rep.lambda2_abs = std::min(mags[1], 1.0);
  }

  const Vector stationary = stationary_distribution(t, mu).dist.probs();
  constexpr double kFloor = 1e-13;
  std::vector<double> ts, logs;
  Vector current = mu.probs();
  for (int step = 0; step <= horizon; ++step) {
    if (step >= horizon / 2) {
      const double err = (current - stationary).cwiseAbs().maxCoeff();
      if (err > kFloor) {
        ts.push_back(step);
        logs.push_back(std::log(err));
      }
    }
    current = (current.transpose() * t).transpose();
  }
  if (ts.size() >= 2) {
    const double tm = std::accumulate(ts.begin(), ts.end(), 0.0) / static_cast<double>(ts.size());
    const double lm = std::accumulate(logs.begin(), logs.end(), 0.0) / static_cast<double>(logs.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      sxy += (ts[i] - tm) * (logs[i] - lm);
      sxx += (ts[i] - tm) * (ts[i] - tm);
    }
    rep.decay_fit = std::exp(sxy / sxx);
  }
  return rep;
}

}  // namespace polimp
