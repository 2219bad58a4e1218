#include <catch_amalgamated.hpp>

#include <string>

#include "config.hpp"

using slowfast_cli::ConfigError;
using slowfast_cli::parse_config_text;

namespace {

int error_line(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  FAIL("configuration was accepted");
  return -1;
}

}  // namespace

TEST_CASE("a full configuration parses") {
  const auto c = parse_config_text(R"(model:
  name: coupled_navigation
  params: {n: 2, beta: 2, compromise_below: -.inf}
analysis:
  x: [0.1, 0.2]
  grid: [[0, 0], [0.5, -0.5]]
  target_z0: 0.5
simulation:
  x0: [0.3, -0.2]
  v0: "+-"
  t_end: 2
  lambda: 100
  M: 500
  seed: 7
  h: 0.01
  report_dt: 0.1
  frozen_measure_mode: anchored_at_x0
  processes: [coupled, averaged]
experiment:
  kinds: [weak_error, gap]
  lambda_grid: [10, 100]
  observable: {kind: coordinate, coordinate: 2}
  replicas: 2000
  gap: {deltas: [0.01], lambda: 20, marginal_lambdas: []}
output:
  directory: results
  formats: [csv]
verify:
  seed: 3
  criteria: [1, 2]
  absorption_replicas: 1000
)");
  REQUIRE(c.model);
  CHECK(c.model->name == "coupled_navigation");
  CHECK(c.model->params.at("beta") == 2.0);
  CHECK(c.model->params.at("compromise_below") < -1e300);
  CHECK(c.analysis.grid.size() == 2);
  CHECK(c.simulation.replicas == 500);
  CHECK(c.simulation.v0 == "+-");
  CHECK(*c.simulation.lambda == 100.0);
  CHECK(c.simulation.frozen_measure_mode == "anchored_at_x0");
  CHECK(c.simulation.processes.size() == 2);
  CHECK(c.experiment.observable.kind == "coordinate");
  CHECK(c.experiment.observable.coordinate == 2);
  CHECK(c.experiment.gap_lambda == 20.0);
  CHECK(c.experiment.gap_marginal_lambdas.empty());
  CHECK(c.output.directory == "results");
  CHECK(*c.verify.seed == 3);
  CHECK(c.verify.criteria == std::vector<int>{1, 2});
  CHECK(c.verify.tolerances.at("absorption_replicas") == 1000.0);
}

TEST_CASE("defaults apply to omitted sections") {
  const auto c = parse_config_text("model: {name: toy}\n");
  CHECK(c.simulation.t_end == 1.0);
  CHECK(c.simulation.frozen_measure_mode == "state_dependent");
  CHECK(c.experiment.lambda_grid.size() == 4);
  CHECK(c.output.formats.size() == 2);
  CHECK(c.experiment.observable.kind == "tanh");
}

TEST_CASE("scalar observables name the kind") {
  const auto c = parse_config_text("experiment: {observable: bump}\n");
  CHECK(c.experiment.observable.kind == "bump");
}

TEST_CASE("errors carry the offending line") {
  CHECK(error_line("model:\n  name: toy\n  colour: red\n") == 3);
  CHECK(error_line("simulation:\n  t_end: -1\n") == 2);
  CHECK(error_line("simulation:\n  seed: abc\n") == 2);
  CHECK(error_line("simulation:\n  h: 0.03\n  report_dt: 0.1\n") > 0);
  CHECK(error_line("experiment:\n  observable: {kind: cosine}\n") == 2);
  CHECK(error_line("experiment:\n  observable: {kind: tanh, coordinate: 0}\n") == 2);
  CHECK(error_line("simulation:\n  processes: [coupled, teleport]\n") == 2);
  CHECK(error_line("verify:\n  criteria: [9]\n") == 2);
  CHECK(error_line("bogus: 1\n") == 1);
  CHECK(error_line("model: [1, 2\n") > 0);
  CHECK(error_line("simulation:\n  frozen_measure_mode: sometimes\n") == 2);
}

TEST_CASE("messages include the line number") {
  try {
    parse_config_text("output:\n  formats: [pdf]\n");
    FAIL("accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).rfind("line 2: ", 0) == 0);
  }
}

TEST_CASE("empty configurations and missing files are rejected") {
  CHECK_THROWS_AS(parse_config_text(""), ConfigError);
  CHECK_THROWS_AS(slowfast_cli::load_config("/nonexistent/run.yaml"), ConfigError);
}
