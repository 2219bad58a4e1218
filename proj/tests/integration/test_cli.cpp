#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;  // stdout and stderr
};

Result run(const std::string& args) {
  const std::string command = std::string(SLOWFAST_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buffer{};
  while (std::fgets(buffer.data(), buffer.size(), pipe)) r.output += buffer.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Fresh working directory per test case.
class Workdir {
 public:
  explicit Workdir(const std::string& name) : path_(fs::current_path() / "cli_work" / name) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  fs::path file(const std::string& name, const std::string& contents) const {
    const fs::path p = path_ / name;
    std::ofstream(p) << contents;
    return p;
  }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

std::string arg(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run("--help").code == 0);
  CHECK(run("").code == 2);
  CHECK(run("teleport").code == 2);
  CHECK(run("analyze").code == 2);  // --config is required
  CHECK(run("simulate --config /nonexistent.yaml").code == 2);
}

TEST_CASE("analyze writes the decomposition and the certificate") {
  Workdir w("analyze");
  const auto cfg = w.file("toy.yaml",
                          "model: {name: toy, params: {n: 2}}\n"
                          "simulation: {v0: \"+-\"}\n"
                          "analysis: {target_z0: 0.5}\n");
  const auto r = run("analyze --config " + arg(cfg) + " --out " + arg(w / "out"));
  INFO(r.output);
  REQUIRE(r.code == 0);
  const std::string cert = slurp(w / "out" / "certificate.txt");
  CHECK(cert.find("\nn_tilde = 1\n") != std::string::npos);
  CHECK(cert.find("\nz0 = 0.5\n") != std::string::npos);
  CHECK(cert.find("# model = toy n=2") != std::string::npos);
  const std::string absorption = slurp(w / "out" / "absorption.csv");
  CHECK(absorption.find("v_label,q_1,q_2\n") != std::string::npos);
  CHECK(absorption.find("\n+-,0.5,0.5\n") != std::string::npos);
  CHECK(fs::exists(w / "out" / "stationary.csv"));
  CHECK(slurp(w / "out" / "limit_law.csv").find("\n++,0.5\n") != std::string::npos);
}

TEST_CASE("a single particle has two classes and no transient states") {
  Workdir w("single");
  const auto cfg = w.file("one.yaml", "model: {name: toy, params: {n: 1}}\n");
  const auto r = run("analyze --config " + arg(cfg) + " --out " + arg(w / "out"));
  REQUIRE(r.code == 0);
  const std::string d = slurp(w / "out" / "decomposition.txt");
  CHECK(d.find("\nclass_count = 2\n") != std::string::npos);
  CHECK(d.find("\ntransient_count = 0\n") != std::string::npos);
}

TEST_CASE("class structure changing across the grid is an assumption violation") {
  Workdir w("varies");
  const auto cfg = w.file("nav.yaml",
                          "model:\n"
                          "  name: coupled_navigation\n"
                          "  params: {n: 2, beta: 1, compromise_below: 0}\n"
                          "analysis:\n"
                          "  x: [0.5, 0.0]\n"
                          "  grid: [[0.5, 0.0], [-0.5, 0.0]]\n");
  const auto r = run("analyze --config " + arg(cfg) + " --out " + arg(w / "out"));
  CHECK(r.code == 3);
  CHECK(r.output.find("ClassStructureVaries") != std::string::npos);
}

TEST_CASE("configuration errors exit with status 2 and a line number") {
  Workdir w("config");
  const auto unknown = w.file("a.yaml", "model: {name: toy}\nsimulation:\n  t_end: 1\n  speed: 3\n");
  auto r = run("simulate --config " + arg(unknown));
  CHECK(r.code == 2);
  CHECK(r.output.find("line 4") != std::string::npos);

  const auto no_model = w.file("b.yaml", "simulation: {t_end: 1}\n");
  CHECK(run("simulate --config " + arg(no_model) + " --out " + arg(w / "o")).code == 2);

  const auto bad_state = w.file("c.yaml", "model: {name: toy}\nsimulation: {v0: \"+?\"}\n");
  CHECK(run("simulate --config " + arg(bad_state) + " --out " + arg(w / "o")).code == 2);

  const auto bad_dim = w.file("d.yaml", "model: {name: toy}\nsimulation: {x0: [0, 0, 0]}\n");
  CHECK(run("simulate --config " + arg(bad_dim) + " --out " + arg(w / "o")).code == 2);

  const auto bad_param = w.file("e.yaml", "model: {name: toy, params: {n: 40}}\n");
  CHECK(run("analyze --config " + arg(bad_param) + " --out " + arg(w / "o")).code == 2);
}

TEST_CASE("simulate is reproducible and seed-sensitive") {
  Workdir w("simulate");
  const auto cfg = w.file("sim.yaml",
                          "model: {name: coupled_navigation, params: {n: 2, beta: 2, lambda: 20}}\n"
                          "simulation:\n"
                          "  x0: [0.3, -0.2]\n"
                          "  v0: \"+-\"\n"
                          "  t_end: 1\n"
                          "  report_dt: 0.1\n"
                          "  h: 0.01\n"
                          "  processes: [coupled, frozen, averaged]\n"
                          "  replicas: 500\n");
  REQUIRE(run("simulate --config " + arg(cfg) + " --out " + arg(w / "a")).code == 0);
  REQUIRE(run("simulate --config " + arg(cfg) + " --out " + arg(w / "b")).code == 0);
  REQUIRE(run("simulate --config " + arg(cfg) + " --seed 99 --out " + arg(w / "c")).code == 0);
  for (const char* name : {"trajectory_coupled.csv", "trajectory_frozen.csv", "trajectory_averaged.csv",
                           "simulate_summary.txt"}) {
    const std::string a = slurp(w / "a" / name);
    CHECK(!a.empty());
    CHECK(a == slurp(w / "b" / name));
  }
  CHECK(slurp(w / "a" / "trajectory_coupled.csv") != slurp(w / "c" / "trajectory_coupled.csv"));
  const std::string csv = slurp(w / "a" / "trajectory_coupled.csv");
  CHECK(csv.find("\nt,x_1,x_2,v_label,jumped\n0,0.3,-0.2,+-,0\n") != std::string::npos);
  const std::string summary = slurp(w / "a" / "simulate_summary.txt");
  CHECK(summary.find("coupled.jump_count = ") != std::string::npos);
  CHECK(summary.find("monte_carlo.mean = ") != std::string::npos);
}

TEST_CASE("converge writes experiment reports and warns when noise dominates") {
  Workdir w("converge");
  const auto cfg = w.file("conv.yaml",
                          "model: {name: toy, params: {n: 2}}\n"
                          "simulation: {v0: \"+-\"}\n"
                          "experiment:\n"
                          "  kinds: [weak_error, decay]\n"
                          "  lambda_grid: [10, 100]\n"
                          "  replicas: 2000\n"
                          "  dominance_ratio: 1.0e-9\n");
  const auto r = run("converge --config " + arg(cfg) + " --out " + arg(w / "out"));
  INFO(r.output);
  REQUIRE(r.code == 0);
  CHECK(r.output.find("MCErrorDominates") != std::string::npos);
  const std::string weak = slurp(w / "out" / "weak_error.csv");
  CHECK(weak.find("lambda,coupled_mean,coupled_halfwidth,averaged_expectation,error,error_halfwidth,"
                  "plain_error,mc_dominates\n") != std::string::npos);
  CHECK(slurp(w / "out" / "weak_error_summary.txt").find("mc_error_dominates = true") !=
        std::string::npos);
  CHECK(fs::exists(w / "out" / "decay.csv"));
  CHECK(fs::exists(w / "out" / "decay_envelope.csv"));
  CHECK(slurp(w / "out" / "decay_summary.txt").find("report = fast_decay") != std::string::npos);
}

TEST_CASE("sequence gap outside the ball is an assumption violation") {
  Workdir w("gap");
  const auto cfg = w.file("gap.yaml",
                          "model: {name: coupled_navigation, params: {n: 2, beta: 2}}\n"
                          "simulation: {x0: [0.3, -0.2], v0: \"+-\"}\n"
                          "experiment:\n"
                          "  kinds: [gap]\n"
                          "  gap: {deltas: [5.0], marginal_lambdas: []}\n");
  const auto r = run("converge --config " + arg(cfg) + " --out " + arg(w / "out"));
  CHECK(r.code == 3);
  CHECK(r.output.find("BallViolation") != std::string::npos);
}

TEST_CASE("verify reports are byte-identical across runs") {
  Workdir w("verify");
  const auto cfg = w.file("v.yaml", "verify: {criteria: [1, 3, 4]}\n");
  const auto a = run("verify --config " + arg(cfg) + " --out " + arg(w / "a"));
  const auto b = run("verify --config " + arg(cfg) + " --out " + arg(w / "b"));
  INFO(a.output);
  CHECK(a.code == 0);
  CHECK(b.code == 0);
  const std::string report = slurp(w / "a" / "acceptance_report.txt");
  CHECK(report.find("criterion 1 (") != std::string::npos);
  CHECK(report.find("overall = PASS") != std::string::npos);
  CHECK(report == slurp(w / "b" / "acceptance_report.txt"));
}

TEST_CASE("verify exits with status 4 when a criterion fails") {
  Workdir w("verify_fail");
  const auto cfg = w.file("v.yaml", "verify: {criteria: [3], decay_min_r_squared: 1.5}\n");
  const auto r = run("verify --config " + arg(cfg) + " --out " + arg(w / "out"));
  CHECK(r.code == 4);
  CHECK(r.output.find("FAIL") != std::string::npos);
}
