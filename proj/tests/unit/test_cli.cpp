#include "doctest.h"

#include <filesystem>
#include <random>
#include <sstream>

#include "json.hpp"
#include "polimp/cli.hpp"
#include "polimp/errors.hpp"
#include "polimp/experiments.hpp"
#include "polimp/io.hpp"
#include "support/fixtures.hpp"

using namespace polimp;
using namespace polimp::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("polimp_test_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  fs::path path;
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("format_double round-trips") {
  for (double x : {0.0, 1.0, -0.5, 0.1, 1.0 / 3.0, 4.5, 1e-300, 6.02214076e23, -2.5e-7}) {
    const std::string s = io::format_double(x);
    CHECK(std::stod(s) == x);
  }
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(4.5) == "4.5");
}

TEST_CASE("POMDP JSON round trip") {
  const Pomdp p = builtin_example().pomdp;
  const Pomdp q = io::parse_pomdp(io::pomdp_to_json(p));
  CHECK(q.n_world() == p.n_world());
  for (int a = 0; a < p.n_action(); ++a) CHECK(q.transition(a) == p.transition(a));
  CHECK(q.beta() == p.beta());
  CHECK(q.reward() == p.reward());
}

TEST_CASE("JSON parsing errors") {
  CHECK_THROWS_AS(io::parse_pomdp("{not json"), ValidationError);
  CHECK_THROWS_AS(io::parse_pomdp("[]"), ValidationError);
  CHECK_THROWS_AS(io::parse_pomdp(R"({"n_world": 1})"), ValidationError);
  CHECK_THROWS_AS(io::parse_pomdp(R"({"n_world": 1, "n_sensor": 1, "n_action": 1,
      "alpha": [[[1]]], "beta": [[1]], "reward": [["x"]]})"),
                  ValidationError);
  CHECK_THROWS_AS(io::parse_pomdp(R"({"n_world": 1, "n_sensor": 1, "n_action": 1,
      "alpha": [[[0.5]]], "beta": [[1]], "reward": [[0]]})"),
                  ValidationError);
  CHECK_THROWS_AS(io::parse_policy("[[0.5, 0.5], [1]]"), ValidationError);
  CHECK_THROWS_AS(io::parse_distribution("[0.5, 0.6]"), ValidationError);
  CHECK(io::parse_policy("[[0.25, 0.75]]").table()(0, 1) == 0.75);
  CHECK(io::parse_distribution("[0.25, 0.75]")[0] == 0.25);
  CHECK_THROWS_AS(io::read_text("/nonexistent/polimp/file.json"), IoError);
}

TEST_CASE("CSV writer") {
  std::ostringstream s;
  io::CsvWriter w(s);
  w.header({"a", "b", "c"});
  w.field(1).field(0.5).field(std::string("x")).end_row();
  CHECK(s.str() == "a,b,c\n1,0.5,x\n");
}

TEST_CASE("example then validate") {
  TempDir dir;
  const std::string ex = dir.file("ex.json");
  CHECK(run({"example", "--out", ex}).code == 0);
  CHECK(fs::exists(ex + ".manifest.json"));
  const Run v = run({"validate", "--pomdp", ex});
  CHECK(v.code == 0);
  const json doc = json::parse(v.out);
  CHECK(doc["valid"] == true);
  CHECK(doc["sensor_support"][1] == json::array({1, 2}));
}

TEST_CASE("value on the blind toggle") {
  TempDir dir;
  io::write_text(dir.file("a.json"), io::pomdp_to_json(fix_a()));
  io::write_text(dir.file("pi.json"), "[[0.5, 0.5]]");
  io::write_text(dir.file("mu.json"), "[1, 0]");
  const Run r = run({"value", "--pomdp", dir.file("a.json"), "--policy", dir.file("pi.json"), "--gamma",
                     "0.9", "--mu", dir.file("mu.json")});
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  CHECK(std::abs(doc["V"][0].get<double>() - 4.5) <= 1e-12);
  CHECK(std::abs(doc["V"][1].get<double>() - 5.5) <= 1e-12);
  CHECK(std::abs(doc["discounted_reward"].get<double>() - 0.45) <= 1e-12);
  CHECK(r.err.find("manifest {") != std::string::npos);
}

TEST_CASE("stationary, improve, iterate and mc-check commands") {
  TempDir dir;
  io::write_text(dir.file("a.json"), io::pomdp_to_json(fix_a()));
  io::write_text(dir.file("pi.json"), "[[0.5, 0.5]]");
  io::write_text(dir.file("det.json"), "[[1, 0]]");
  const std::string pomdp = dir.file("a.json");

  const Run st = run({"stationary", "--pomdp", pomdp, "--policy", dir.file("pi.json")});
  REQUIRE(st.code == 0);
  const json sdoc = json::parse(st.out);
  CHECK(sdoc["method"] == "linear_solve");
  CHECK(std::abs(sdoc["average_reward"].get<double>() - 0.5) <= 1e-12);
  CHECK(sdoc["chain"]["satisfies_star"] == true);

  const Run red = run({"stationary", "--pomdp", pomdp, "--policy", dir.file("det.json")});
  REQUIRE(red.code == 0);
  CHECK(json::parse(red.out)["method"] == "cesaro");
  CHECK(json::parse(red.out)["spectral"].is_null());
  CHECK(red.err.find("warning") != std::string::npos);

  const Run imp = run({"improve", "--pomdp", pomdp, "--policy", dir.file("pi.json"), "--gamma", "0.9",
                       "--out", dir.file("better.json")});
  REQUIRE(imp.code == 0);
  const json idoc = json::parse(imp.out);
  CHECK(idoc["support_sizes"][0].get<int>() <= 2);
  CHECK(io::load_policy(dir.file("better.json")).table()(0, 1) == 1.0);

  const Run it = run({"iterate", "--pomdp", pomdp, "--policy", dir.file("pi.json"), "--gamma", "0.9",
                      "--max-iters", "5", "--tol", "1e-12"});
  REQUIRE(it.code == 0);
  CHECK(it.out.rfind("iteration,min_value,discounted_reward\n0,", 0) == 0);

  const Run mc = run({"mc-check", "--pomdp", pomdp, "--policy", dir.file("pi.json"), "--gamma", "0.9",
                      "--n", "2000", "--seed", "3"});
  REQUIRE(mc.code == 0);
  const json mdoc = json::parse(mc.out);
  CHECK(mdoc["results"].size() == 2);
  CHECK(mc.err.find("\"seed\":3") != std::string::npos);
}

TEST_CASE("sweep emits one row per grid point") {
  TempDir dir;
  const std::string ex = dir.file("ex.json");
  REQUIRE(run({"example", "--out", ex}).code == 0);
  const std::string csv = dir.file("sweep.csv");
  const Run r = run({"sweep", "--pomdp", ex, "--sensor", "1", "--resolution", "40", "--gamma", "0.6",
                     "--out", csv});
  REQUIRE(r.code == 0);
  const std::string text = io::read_text(csv);
  CHECK(text.rfind("idx,p_a0,p_a1,p_a2,value,flag\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 862);
  const json manifest = json::parse(io::read_text(csv + ".manifest.json"));
  CHECK(manifest["tool_version"] == cli::kToolVersion);
  CHECK(manifest["input_sha256"].get<std::string>().size() == 64);
  CHECK(manifest.contains("wall_time_s"));
  CHECK(manifest["command_line"].get<std::string>().find("sweep") != std::string::npos);
}

TEST_CASE("sweep output is byte-identical across runs and worker counts") {
  TempDir dir;
  const std::string ex = dir.file("ex.json");
  REQUIRE(run({"example", "--out", ex}).code == 0);
  std::vector<std::string> outputs;
  for (const char* threads : {"1", "1", "3"}) {
    const Run r = run({"--threads", threads, "sweep", "--pomdp", ex, "--sensor", "1", "--resolution", "20",
                       "--average"});
    REQUIRE(r.code == 0);
    outputs.push_back(r.out);
  }
  CHECK(outputs[0] == outputs[1]);
  CHECK(outputs[0] == outputs[2]);
}

TEST_CASE("gamma-sweep and track-max CSV schemas") {
  TempDir dir;
  const std::string ex = dir.file("ex.json");
  REQUIRE(run({"example", "--out", ex}).code == 0);
  const Run g = run({"gamma-sweep", "--pomdp", ex, "--grid-resolution", "10", "--gammas", "0.6,0.9,0.99"});
  REQUIRE(g.code == 0);
  CHECK(g.out.rfind("gamma,sup_gap,max_value,argmax_idx\n0.6,", 0) == 0);
  CHECK(std::count(g.out.begin(), g.out.end(), '\n') == 4);

  const Run t = run({"track-max", "--pomdp", ex, "--grid-resolution", "10", "--gammas", "0.6,0.9"});
  REQUIRE(t.code == 0);
  CHECK(t.out.rfind("gamma,argmax_idx,p_a0,p_a1,p_a2,discounted_value,average_at_argmax\n", 0) == 0);
  CHECK(t.out.find("\naverage,") != std::string::npos);
}

TEST_CASE("exit codes") {
  TempDir dir;
  const std::string ex = dir.file("ex.json");
  REQUIRE(run({"example", "--out", ex}).code == 0);
  io::write_text(dir.file("bad.json"), R"({"n_world": 1, "n_sensor": 1, "n_action": 1,
      "alpha": [[[0.5]]], "beta": [[1]], "reward": [[0]]})");
  io::write_text(dir.file("pi.json"), "[[1, 0, 0], [1, 0, 0], [1, 0, 0]]");

  CHECK(run({"validate", "--pomdp", dir.file("bad.json")}).code == cli::kValidationError);
  CHECK(run({"validate", "--pomdp", dir.file("missing.json")}).code == cli::kIoError);
  CHECK(run({"value", "--pomdp", ex, "--policy", dir.file("pi.json"), "--gamma", "1.0"}).code ==
        cli::kValidationError);
  CHECK(run({"sweep", "--pomdp", ex, "--sensor", "1", "--resolution", "4"}).code == cli::kValidationError);
  CHECK(run({"sweep", "--pomdp", ex, "--sensor", "1", "--resolution", "4", "--gamma", "0.5", "--average"})
            .code == cli::kValidationError);
  CHECK(run({"frobnicate"}).code == cli::kValidationError);
  CHECK(run({"example", "--out", "/nonexistent/dir/x.json"}).code == cli::kIoError);
  CHECK(run({"--help"}).code == cli::kOk);
  CHECK(run({"sweep", "--help"}).code == cli::kOk);
  const Run err = run({"validate", "--pomdp", dir.file("bad.json")});
  CHECK(err.out.empty());
  CHECK(err.err.find("row sum") != std::string::npos);
}
