#include "polimp/cli.hpp"

#include <array>
#include <cmath>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "polimp/cone.hpp"
#include "polimp/errors.hpp"
#include "polimp/experiments.hpp"
#include "polimp/io.hpp"
#include "polimp/parallel.hpp"
#include "polimp/rollout.hpp"
#include "polimp/tolerances.hpp"
#include "polimp/stationary.hpp"
#include "polimp/value.hpp"

namespace polimp::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Options {
  // global
  int threads = 0;
  std::string manifest;
  // shared
  std::string pomdp;
  std::string policy;
  std::string mu;
  std::string out;
  double gamma = 0.0;
  // stationary
  int horizon = 200;
  // iterate
  int max_iters = 100;
  double tol = 1e-10;
  std::string policy_out;
  // sweep family
  int sensor = -1;
  int resolution = 40;
  bool average = false;
  std::vector<double> gammas;
  // mc-check
  long n = 10000;
  std::uint64_t seed = 0;
  int w0 = -1;
  double bias = tol::kRolloutBias;
};

std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("SHA-256 computation failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return hex.str();
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json matrix_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vector_json(m.row(i).transpose()));
  return a;
}

class Session {
 public:
  Session(const Options& opt, std::ostream& out, std::ostream& err)
      : opt_(opt), out_(out), err_(err), threads_(resolve_threads(opt.threads)) {}

  Pomdp pomdp() {
    input_text_ = io::read_text(opt_.pomdp);
    return io::parse_pomdp(input_text_);
  }
  Policy policy_or_uniform(const Pomdp& p) {
    return opt_.policy.empty() ? Policy::uniform(p.n_sensor(), p.n_action())
                               : io::load_policy(opt_.policy);
  }
  Distribution mu(const Pomdp& p) {
    return opt_.mu.empty() ? Distribution::uniform(p.n_world()) : io::load_distribution(opt_.mu);
  }
  int sensor(const Pomdp& p) {
    return opt_.sensor >= 0 ? opt_.sensor : most_ambiguous_sensor(p);
  }

  void emit(const std::string& text) {
    if (opt_.out.empty()) {
      out_ << text;
    } else {
      io::write_text(opt_.out, text);
    }
  }
  void emit_json(const json& doc) { out_ << doc.dump(2) << "\n"; }

  std::ostream& err() { return err_; }
  int threads() const { return threads_; }
  const std::string& input_text() const { return input_text_; }

 private:
  const Options& opt_;
  std::ostream& out_;
  std::ostream& err_;
  int threads_;
  std::string input_text_;
};

// ---------------------------------------------------------------------------
// Subcommands

void cmd_validate(Session& ss) {
  const Pomdp p = ss.pomdp();
  json supports = json::array();
  for (int s = 0; s < p.n_sensor(); ++s) supports.push_back(sensor_support(p, s));
  ss.emit_json({{"valid", true},
                {"n_world", p.n_world()},
                {"n_sensor", p.n_sensor()},
                {"n_action", p.n_action()},
                {"sensor_support", supports}});
}

void cmd_value(Session& ss, const Options& opt) {
  const Pomdp p = ss.pomdp();
  const Policy pi = io::load_policy(opt.policy);
  const Distribution mu = ss.mu(p);
  const ValueBundle b = solve_value(p, pi, opt.gamma);
  ss.emit_json({{"gamma", opt.gamma},
                {"V", vector_json(b.values)},
                {"Q", matrix_json(b.action_values)},
                {"mu", vector_json(mu.probs())},
                {"discounted_reward", discounted_reward(p, pi, opt.gamma, mu)},
                {"bellman_residual", b.bellman_residual()}});
}

void cmd_stationary(Session& ss, const Options& opt) {
  const Pomdp p = ss.pomdp();
  const Policy pi = io::load_policy(opt.policy);
  const Distribution mu = ss.mu(p);
  const Matrix t = world_transition(p, pi);
  const ChainReport chain = analyze_chain(t);
  const StationaryResult st = stationary_distribution(t, mu);

  json doc{{"chain",
            {{"irreducible", chain.irreducible},
             {"period", chain.period},
             {"aperiodic", chain.aperiodic},
             {"satisfies_star", chain.satisfies_star}}},
           {"method", std::string(to_string(st.method))},
           {"stationary", vector_json(st.dist.probs())},
           {"residual", st.residual},
           {"average_reward", average_reward(p, pi, mu)}};
  if (chain.satisfies_star) {
    const SpectralReport sp = spectral_analysis(t, mu, opt.horizon);
    doc["spectral"] = {{"lambda2_abs", sp.lambda2_abs}, {"decay_fit", sp.decay_fit}};
  } else {
    doc["spectral"] = nullptr;
    ss.err() << "warning: chain is not irreducible and aperiodic; the limit depends on mu and "
                "optimal policies may fail to exist\n";
  }
  ss.emit_json(doc);
}

void cmd_improve(Session& ss, const Options& opt) {
  const Pomdp p = ss.pomdp();
  const Policy pi = io::load_policy(opt.policy);
  const ImprovedPolicy ip = improve_policy(p, pi, opt.gamma);

  json bounds = json::array();
  json cert = json::array();
  for (int s = 0; s < p.n_sensor(); ++s) {
    bounds.push_back(sensor_support(p, s).size());
    json entries = json::array();
    for (const auto& e : ip.certificate[static_cast<std::size_t>(s)]) {
      entries.push_back({{"world_state", e.world_state}, {"slack", e.slack}});
    }
    cert.push_back({{"sensor", s}, {"entries", entries}});
  }
  ss.emit_json({{"gamma", opt.gamma},
                {"policy", matrix_json(ip.policy.table())},
                {"support_sizes", ip.support_sizes},
                {"support_bounds", bounds},
                {"certificate", cert},
                {"values_before", vector_json(ip.values_before)},
                {"values_after", vector_json(ip.values_after)}});
  if (!opt.out.empty()) io::write_text(opt.out, io::policy_to_json(ip.policy));
}

void cmd_iterate(Session& ss, const Options& opt) {
  const Pomdp p = ss.pomdp();
  const Policy pi = io::load_policy(opt.policy);
  const IterationResult res =
      improvement_iterate(p, pi, opt.gamma, opt.max_iters, opt.tol, ss.mu(p));
  std::ostringstream csv;
  io::CsvWriter w(csv);
  w.header({"iteration", "min_value", "discounted_reward"});
  for (const auto& r : res.trace) {
    w.field(r.iteration).field(r.min_value).field(r.discounted_reward).end_row();
  }
  ss.emit(csv.str());
  if (!opt.policy_out.empty()) io::write_text(opt.policy_out, io::policy_to_json(res.policy));
  ss.err() << (res.converged ? "converged" : "iteration cap reached") << " after "
           << res.trace.back().iteration << " iterations\n";
}

std::vector<std::string> action_columns(int n_action) {
  std::vector<std::string> cols;
  for (int a = 0; a < n_action; ++a) cols.push_back("p_a" + std::to_string(a));
  return cols;
}

void cmd_sweep(Session& ss, const Options& opt) {
  const Pomdp p = ss.pomdp();
  const Policy fixed = ss.policy_or_uniform(p);
  const EvalMode mode = opt.average ? EvalMode::average() : EvalMode::discounted(opt.gamma);
  const SurfaceTable table =
      reward_surface(p, ss.mu(p), opt.sensor, fixed, opt.resolution, mode, ss.threads());

  std::ostringstream csv;
  io::CsvWriter w(csv);
  std::vector<std::string> header{"idx"};
  for (auto& c : action_columns(p.n_action())) header.push_back(c);
  header.push_back("value");
  header.push_back("flag");
  w.header(header);
  int flagged = 0;
  for (const auto& row : table.rows) {
    w.field(row.idx);
    for (Eigen::Index a = 0; a < row.point.size(); ++a) w.field(row.point[a]);
    w.field(row.value).field(row.flagged ? 1 : 0).end_row();
    flagged += row.flagged ? 1 : 0;
  }
  ss.emit(csv.str());
  if (flagged > 0) {
    ss.err() << "warning: " << flagged
             << " grid policies induce a reducible or periodic chain (flag=1)\n";
  }
}

std::vector<Policy> sweep_grid(Session& ss, const Options& opt, const Pomdp& p) {
  return sensor_grid_policies(ss.policy_or_uniform(p), ss.sensor(p), opt.resolution);
}

void cmd_gamma_sweep(Session& ss, const Options& opt) {
  const Pomdp p = ss.pomdp();
  const std::vector<Policy> grid = sweep_grid(ss, opt, p);
  const GammaSweep sweep = gamma_convergence_sweep(p, ss.mu(p), grid, opt.gammas, ss.threads());
  std::ostringstream csv;
  io::CsvWriter w(csv);
  w.header({"gamma", "sup_gap", "max_value", "argmax_idx"});
  for (std::size_t k = 0; k < sweep.gammas.size(); ++k) {
    w.field(sweep.gammas[k]).field(sweep.sup_gap[k]).field(sweep.max_value[k]);
    w.field(sweep.argmax[k]).end_row();
  }
  ss.emit(csv.str());
  if (sweep.excluded > 0) {
    ss.err() << "warning: excluded " << sweep.excluded
             << " grid policies whose chain is reducible or periodic\n";
  }
}

void cmd_track_max(Session& ss, const Options& opt) {
  const Pomdp p = ss.pomdp();
  const int s = ss.sensor(p);
  const std::vector<Policy> grid = sweep_grid(ss, opt, p);
  const MaximizerTrack track = maximizer_track(p, ss.mu(p), grid, opt.gammas, ss.threads());

  std::ostringstream csv;
  io::CsvWriter w(csv);
  std::vector<std::string> header{"gamma", "argmax_idx"};
  for (auto& c : action_columns(p.n_action())) header.push_back(c);
  header.push_back("discounted_value");
  header.push_back("average_at_argmax");
  w.header(header);
  auto point_fields = [&](int idx) {
    const Vector q = grid[static_cast<std::size_t>(idx)].row(s);
    for (Eigen::Index a = 0; a < q.size(); ++a) w.field(q[a]);
  };
  for (const auto& r : track.records) {
    w.field(r.gamma).field(r.argmax);
    point_fields(r.argmax);
    w.field(r.discounted_value).field(r.average_at_argmax).end_row();
  }
  w.field(std::string("average")).field(track.average_argmax);
  point_fields(track.average_argmax);
  w.field(track.average_max).field(track.average_max).end_row();
  ss.emit(csv.str());
  if (track.excluded > 0) {
    ss.err() << "warning: excluded " << track.excluded
             << " grid policies whose chain is reducible or periodic\n";
  }
}

void cmd_mc_check(Session& ss, const Options& opt) {
  const Pomdp p = ss.pomdp();
  const Policy pi = io::load_policy(opt.policy);
  const ValueBundle exact = solve_value(p, pi, opt.gamma);
  json results = json::array();
  bool all_consistent = true;
  const int first = opt.w0 >= 0 ? opt.w0 : 0;
  const int last = opt.w0 >= 0 ? opt.w0 : p.n_world() - 1;
  for (int w0 = first; w0 <= last; ++w0) {
    const RolloutEstimate est = rollout_value(p, pi, opt.gamma, w0, opt.n, opt.seed, std::nullopt,
                                              opt.bias, ss.threads());
    const double err = std::abs(est.mean - exact.values[w0]);
    const bool ok = err <= 3.0 * est.std_error + est.bias;
    all_consistent = all_consistent && ok;
    results.push_back({{"w0", w0},
                       {"mean", est.mean},
                       {"std_error", est.std_error},
                       {"bias", est.bias},
                       {"horizon", est.horizon},
                       {"exact", exact.values[w0]},
                       {"abs_error", err},
                       {"consistent", ok}});
  }
  ss.emit_json({{"gamma", opt.gamma},
                {"n", opt.n},
                {"seed", opt.seed},
                {"results", results},
                {"all_consistent", all_consistent}});
}

void cmd_example(Session& ss) { ss.emit(io::pomdp_to_json(builtin_example().pomdp)); }

// ---------------------------------------------------------------------------

void write_manifest(const Options& opt, const std::string& command_line, const Session& ss,
                    bool uses_seed, double wall_seconds, std::ostream& err) {
  json m{{"command_line", command_line},
         {"input_sha256", ss.input_text().empty() && opt.pomdp.empty()
                              ? json(nullptr)
                              : json(sha256_hex(ss.input_text()))},
         {"seed", uses_seed ? json(opt.seed) : json(nullptr)},
         {"tool_version", kToolVersion},
         {"wall_time_s", wall_seconds}};
  std::string target = opt.manifest;
  if (target.empty() && !opt.out.empty()) target = opt.out + ".manifest.json";
  if (target.empty()) {
    err << "manifest " << m.dump() << "\n";
  } else {
    io::write_text(target, m.dump(2) + "\n");
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"Exact evaluation and improvement of memoryless POMDP policies"};
  app.name("polimp");
  app.require_subcommand(1);
  app.add_option("--threads", opt.threads,
                 "Worker threads for sweeps (default: $POLIMP_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--manifest", opt.manifest,
                 "Run manifest path (default: <out>.manifest.json, else stderr)");

  auto add_pomdp = [&](CLI::App* c) {
    c->add_option("--pomdp", opt.pomdp, "POMDP JSON file")->required();
  };
  auto add_gamma = [&](CLI::App* c) {
    return c->add_option("--gamma", opt.gamma, "Discount factor in [0, 1)");
  };

  auto* validate = app.add_subcommand("validate", "Validate a POMDP file");
  add_pomdp(validate);

  auto* value = app.add_subcommand("value", "Exact V, Q and discounted reward");
  add_pomdp(value);
  value->add_option("--policy", opt.policy, "Policy JSON [s][a]")->required();
  add_gamma(value)->required();
  value->add_option("--mu", opt.mu, "Start distribution JSON (default uniform)");

  auto* stationary = app.add_subcommand("stationary", "Chain structure, stationary distribution, average reward");
  add_pomdp(stationary);
  stationary->add_option("--policy", opt.policy, "Policy JSON [s][a]")->required();
  stationary->add_option("--mu", opt.mu, "Start distribution JSON (default uniform)");
  stationary->add_option("--horizon", opt.horizon, "Propagation horizon for the decay fit");

  auto* improve = app.add_subcommand("improve", "One face-reduction improvement step");
  add_pomdp(improve);
  improve->add_option("--policy", opt.policy, "Policy JSON [s][a]")->required();
  add_gamma(improve)->required();
  improve->add_option("--out", opt.out, "Write the improved policy JSON here");

  auto* iterate = app.add_subcommand("iterate", "Repeated improvement; trace CSV");
  add_pomdp(iterate);
  iterate->add_option("--policy", opt.policy, "Initial policy JSON [s][a]")->required();
  add_gamma(iterate)->required();
  iterate->add_option("--max-iters", opt.max_iters, "Iteration cap");
  iterate->add_option("--tol", opt.tol, "Stop when max |dV| falls below this");
  iterate->add_option("--mu", opt.mu, "Start distribution for the reward trace");
  iterate->add_option("--out", opt.out, "Trace CSV (default stdout)");
  iterate->add_option("--policy-out", opt.policy_out, "Write the final policy JSON here");

  auto* sweep = app.add_subcommand("sweep", "Reward surface over the action simplex at one sensor");
  add_pomdp(sweep);
  sweep->add_option("--sensor", opt.sensor, "Sensor index (0-based)")->required();
  sweep->add_option("--policy", opt.policy, "Fixed rows for the other sensors (default uniform)");
  sweep->add_option("--resolution", opt.resolution, "Lattice resolution m")->required();
  auto* sweep_gamma = add_gamma(sweep);
  auto* sweep_avg = sweep->add_flag("--average", opt.average, "Evaluate average reward");
  sweep_gamma->excludes(sweep_avg);
  sweep_avg->excludes(sweep_gamma);
  sweep->add_option("--mu", opt.mu, "Start distribution JSON (default uniform)");
  sweep->add_option("--out", opt.out, "CSV path (default stdout)");

  auto add_limit_flags = [&](CLI::App* c) {
    add_pomdp(c);
    c->add_option("--grid-resolution", opt.resolution, "Lattice resolution m")->required();
    c->add_option("--gammas", opt.gammas, "Comma-separated discount factors")
        ->required()
        ->delimiter(',');
    c->add_option("--sensor", opt.sensor, "Sensor index (default: largest support)");
    c->add_option("--policy", opt.policy, "Fixed rows for the other sensors (default uniform)");
    c->add_option("--mu", opt.mu, "Start distribution JSON (default uniform)");
    c->add_option("--out", opt.out, "CSV path (default stdout)");
  };
  auto* gamma_sweep = app.add_subcommand("gamma-sweep", "Uniform gap between R^gamma and R per gamma");
  add_limit_flags(gamma_sweep);
  auto* track_max = app.add_subcommand("track-max", "Grid maximizers of R^gamma as gamma grows");
  add_limit_flags(track_max);

  auto* mc = app.add_subcommand("mc-check", "Monte-Carlo rollouts against the exact values");
  add_pomdp(mc);
  mc->add_option("--policy", opt.policy, "Policy JSON [s][a]")->required();
  add_gamma(mc)->required();
  mc->add_option("--n", opt.n, "Trajectories per start state")->required();
  mc->add_option("--seed", opt.seed, "RNG seed")->required();
  mc->add_option("--w0", opt.w0, "Single start state (default: all)");
  mc->add_option("--bias", opt.bias, "Truncation bias target");

  auto* example = app.add_subcommand("example", "Write the built-in example POMDP");
  example->add_option("--out", opt.out, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidationError;
  }

  std::string command_line;
  for (int i = 0; i < argc; ++i) {
    if (i) command_line += ' ';
    command_line += argv[i];
  }

  const auto start = std::chrono::steady_clock::now();
  Session ss(opt, out, err);
  try {
    if (sweep->parsed() && !opt.average && sweep_gamma->count() == 0) {
      throw ValidationError("sweep: one of --gamma or --average is required");
    }
    if (validate->parsed()) cmd_validate(ss);
    else if (value->parsed()) cmd_value(ss, opt);
    else if (stationary->parsed()) cmd_stationary(ss, opt);
    else if (improve->parsed()) cmd_improve(ss, opt);
    else if (iterate->parsed()) cmd_iterate(ss, opt);
    else if (sweep->parsed()) cmd_sweep(ss, opt);
    else if (gamma_sweep->parsed()) cmd_gamma_sweep(ss, opt);
    else if (track_max->parsed()) cmd_track_max(ss, opt);
    else if (mc->parsed()) cmd_mc_check(ss, opt);
    else if (example->parsed()) cmd_example(ss);

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(opt, command_line, ss, mc->parsed(), wall, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const ContractViolation& e) {
    err << "numerical contract violation: " << e.what() << "\n";
    return kContractViolation;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIoError;
  }
  return kOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"polimp"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace polimp::cli
