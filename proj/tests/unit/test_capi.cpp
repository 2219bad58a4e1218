#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "slowfast/slowfast.h"

namespace {

sf_model* toy(int n, double lambda) {
  const char* keys[] = {"n", "lambda"};
  const double values[] = {static_cast<double>(n), lambda};
  sf_model* m = nullptr;
  REQUIRE(sf_model_create("toy", keys, values, 2, &m) == SF_OK);
  return m;
}

// Two states, x-independent drift +-1 and a row that switches with
// probability 1/2 toward state 1 only when x > 0.
void custom_row(const double* x, size_t v, double* probs, void*) {
  if (v == 1) {
    probs[0] = 0.0;
    probs[1] = 1.0;
    return;
  }
  const double p = x[0] > 0 ? 0.5 : 0.25;
  probs[0] = 1.0 - p;
  probs[1] = p;
}

void custom_drift(const double*, size_t v, double* out, void*) { out[0] = v == 0 ? 1.0 : -1.0; }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("model handles expose structure") {
  sf_model* m = toy(3, 2.0);
  CHECK(sf_model_dim(m) == 3);
  CHECK(sf_model_state_count(m) == 8);
  CHECK(sf_model_rate(m) == 6.0);
  CHECK(std::string(sf_model_state_label(m, 1)) == "++-");
  size_t v = 0;
  CHECK(sf_model_state_index(m, "-+-", &v) == SF_OK);
  CHECK(v == 5);
  CHECK(sf_model_state_index(m, "???", &v) == SF_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(sf_last_error()) > 0);
  std::vector<double> p(64);
  const double x[] = {0, 0, 0};
  CHECK(sf_model_transition_matrix(m, x, p.data()) == SF_OK);
  CHECK(p[0] == 1.0);
  double a[3];
  CHECK(sf_model_drift(m, x, 5, a) == SF_OK);
  CHECK(a[0] == -1.0);
  CHECK(std::string(sf_last_error()).empty());
  sf_model* faster = nullptr;
  CHECK(sf_model_with_lambda(m, 10.0, &faster) == SF_OK);
  CHECK(sf_model_rate(faster) == 30.0);
  sf_model_destroy(faster);
  sf_model_destroy(m);
}

TEST_CASE("invalid arguments map to status codes") {
  sf_model* m = nullptr;
  CHECK(sf_model_create("nope", nullptr, nullptr, 0, &m) == SF_ERR_INVALID_ARGUMENT);
  CHECK(m == nullptr);
  CHECK(sf_model_create("toy", nullptr, nullptr, 0, nullptr) == SF_ERR_INVALID_ARGUMENT);
  CHECK(std::string(sf_status_name(SF_ERR_CLASS_STRUCTURE_VARIES)) == "ClassStructureVaries");
  sf_model_destroy(nullptr);
}

TEST_CASE("frozen analysis through the C interface") {
  sf_model* m = toy(3, 1.0);
  const double x[] = {0, 0, 0};
  sf_analysis* a = nullptr;
  REQUIRE(sf_analyze(m, x, &a) == SF_OK);
  CHECK(sf_analysis_class_count(a) == 2);
  CHECK(sf_analysis_transient_count(a) == 6);
  double q = 0.0;
  CHECK(sf_analysis_absorption(a, 1, 1, &q) == SF_OK);
  CHECK(std::abs(q - 0.4) < 1e-14);
  CHECK(sf_analysis_absorption(a, 1, 7, &q) == SF_ERR_CLASS_MISSING);
  std::vector<double> law(8);
  CHECK(sf_analysis_limit_law(a, 1, law.data()) == SF_OK);
  CHECK(std::abs(law[7] - 0.4) < 1e-14);
  sf_analysis_destroy(a);

  sf_certificate cert{};
  CHECK(sf_certify(m, x, 1, 100, 1.0, &cert) == SF_OK);
  CHECK(cert.classes_stable == 1);
  CHECK(cert.z0 < 1.0);

  std::vector<double> pl(8);
  double tv = 0.0;
  CHECK(sf_poissonized_law(m, x, 1, 2.0, 1e-12, pl.data(), &tv) == SF_OK);
  CHECK(tv > 0.0);
  CHECK(tv < 2.0);
  sf_model_destroy(m);
}

TEST_CASE("class structure violations surface as their own status") {
  const char* keys[] = {"beta", "compromise_below"};
  const double values[] = {1.0, 0.0};
  sf_model* m = nullptr;
  REQUIRE(sf_model_create("coupled_navigation", keys, values, 2, &m) == SF_OK);
  const double grid[] = {0.5, 0.0, -0.5, 0.0};
  sf_certificate cert{};
  CHECK(sf_certify(m, grid, 2, 100, 1.0, &cert) == SF_ERR_CLASS_STRUCTURE_VARIES);
  sf_model_destroy(m);
}

TEST_CASE("custom models use caller callbacks") {
  const char* labels[] = {"up", "down"};
  sf_custom_model spec{};
  spec.description = "custom";
  spec.dim = 1;
  spec.state_count = 2;
  spec.labels = labels;
  spec.row = custom_row;
  spec.drift = custom_drift;
  spec.lipschitz_bound = 1e9;
  spec.drift_bound = 1.0;
  spec.drift_x_independent = 1;
  spec.lambda = 5.0;
  spec.clock_multiplicity = 1.0;
  sf_model* m = nullptr;
  REQUIRE(sf_model_create_custom(&spec, &m) == SF_OK);
  CHECK(sf_model_state_count(m) == 2);
  const double x[] = {1.0};
  std::vector<double> p(4);
  CHECK(sf_model_transition_matrix(m, x, p.data()) == SF_OK);
  CHECK(p[1] == 0.5);
  sf_trajectory* t = nullptr;
  CHECK(sf_simulate_coupled(m, x, 0, 1.0, 3, nullptr, &t) == SF_OK);
  CHECK(sf_trajectory_has_slow(t) == 1);
  sf_trajectory_destroy(t);
  sf_model_destroy(m);

  spec.row = nullptr;
  CHECK(sf_model_create_custom(&spec, &m) == SF_ERR_INVALID_ARGUMENT);
}

TEST_CASE("simulation through the C interface") {
  sf_model* m = toy(2, 5.0);
  const double x0[] = {0, 0};
  sf_sim_options o = sf_sim_options_default();
  o.report_dt = 0.5;
  o.h = 0.01;
  sf_trajectory* a = nullptr;
  sf_trajectory* b = nullptr;
  REQUIRE(sf_simulate_coupled(m, x0, 1, 1.0, 9, &o, &a) == SF_OK);
  REQUIRE(sf_simulate_frozen(m, x0, 1, 1.0, 9, &o, &b) == SF_OK);
  CHECK(sf_trajectory_jump_count(a) == sf_trajectory_jump_count(b));
  CHECK(sf_trajectory_has_slow(b) == 0);
  CHECK(sf_trajectory_time(a, sf_trajectory_length(a) - 1) == 1.0);
  double x[2];
  CHECK(sf_trajectory_slow_state(a, 0, x) == SF_OK);
  CHECK(x[0] == 0.0);
  CHECK(sf_trajectory_slow_state(b, 0, x) == SF_ERR_INVALID_ARGUMENT);

  const auto dir = std::filesystem::temp_directory_path() / "slowfast_capi_test";
  const std::string p1 = (dir / "a.csv").string();
  const std::string p2 = (dir / "b.csv").string();
  sf_trajectory* again = nullptr;
  REQUIRE(sf_simulate_coupled(m, x0, 1, 1.0, 9, &o, &again) == SF_OK);
  CHECK(sf_trajectory_write_csv(a, m, p1.c_str(), "run") == SF_OK);
  CHECK(sf_trajectory_write_csv(again, m, p2.c_str(), "run") == SF_OK);
  CHECK(slurp(p1) == slurp(p2));
  std::filesystem::remove_all(dir);

  size_t zeta = 99;
  sf_trajectory* avg = nullptr;
  CHECK(sf_simulate_averaged(m, x0, 1, 1.0, 9, SF_STATE_DEPENDENT, &o, &zeta, &avg) == SF_OK);
  CHECK(zeta < 2);
  sf_trajectory_destroy(avg);

  const double points[] = {0.0, 0.0};
  sf_trajectory* seq = nullptr;
  CHECK(sf_simulate_sequence_driven(m, x0, 1, points, 1, 5.0, 9, &o, &seq) ==
        SF_ERR_SEQUENCE_TOO_SHORT);

  double mean = 0, var = 0;
  CHECK(sf_monte_carlo(m, x0, 1, 1.0, "tanh", 0, 2000, 1, 0.0, &mean, &var) == SF_OK);
  CHECK(mean > 0.0);
  CHECK(var > 0.0);
  CHECK(sf_monte_carlo(m, x0, 1, 1.0, "cosine", 0, 2000, 1, 0.0, &mean, &var) ==
        SF_ERR_INVALID_ARGUMENT);
  sf_trajectory_destroy(a);
  sf_trajectory_destroy(b);
  sf_trajectory_destroy(again);
  sf_model_destroy(m);
}

TEST_CASE("experiment reports through the C interface") {
  sf_model* m = toy(2, 1.0);
  const double x0[] = {0, 0};
  const double lambdas[] = {10, 100};
  sf_weak_error_options o = sf_weak_error_options_default();
  o.x0 = x0;
  o.v0 = 1;
  o.lambdas = lambdas;
  o.lambda_count = 2;
  o.replicas = 5000;
  sf_report* r = nullptr;
  REQUIRE(sf_weak_error(m, &o, &r) == SF_OK);
  CHECK(std::string(sf_report_name(r)) == "weak_error");
  CHECK(sf_report_row_count(r) == 2);
  CHECK(std::string(sf_report_column(r, 0)) == "lambda");
  CHECK(sf_report_value(r, 1, 0) == 100.0);
  CHECK(sf_report_summary_value(r, "fitted_slope") != nullptr);
  CHECK(sf_report_summary_value(r, "nothing") == nullptr);
  sf_report_destroy(r);

  sf_decay_options d = sf_decay_options_default();
  d.x = x0;
  d.v0 = 1;
  sf_report* decay = nullptr;
  sf_report* envelope = nullptr;
  REQUIRE(sf_fast_decay(m, &d, &decay, &envelope) == SF_OK);
  CHECK(std::abs(std::stod(sf_report_summary_value(decay, "c1_hat")) - 1.0) < 1e-6);
  CHECK(sf_report_row_count(envelope) == 51);
  sf_report_destroy(decay);
  sf_report_destroy(envelope);

  const double x1[] = {0.3, -0.2};
  const char* keys[] = {"beta"};
  const double values[] = {2.0};
  sf_model* nav = nullptr;
  REQUIRE(sf_model_create("coupled_navigation", keys, values, 1, &nav) == SF_OK);
  sf_gap_options g = sf_gap_options_default();
  g.x0 = x1;
  g.v0 = 1;
  g.marginal_count = 0;
  sf_report* gap = nullptr;
  REQUIRE(sf_sequence_gap(nav, &g, &gap) == SF_OK);
  CHECK(std::stod(sf_report_summary_value(gap, "ratio_variation")) < 0.5);
  sf_report_destroy(gap);
  const double big[] = {5.0};
  g.deltas = big;
  g.delta_count = 1;
  CHECK(sf_sequence_gap(nav, &g, &gap) == SF_ERR_BALL_VIOLATION);
  sf_model_destroy(nav);
  sf_model_destroy(m);
}

TEST_CASE("verify runs a subset of criteria") {
  sf_verify_options o = sf_verify_options_default();
  const int criteria[] = {1, 3};
  o.criteria = criteria;
  o.criteria_count = 2;
  int passed = 0;
  int calls = 0;
  auto progress = [](int, const char*, int, const char*, double, void* user) {
    ++*static_cast<int*>(user);
  };
  CHECK(sf_verify(&o, nullptr, nullptr, progress, &calls, &passed) == SF_OK);
  CHECK(passed == 1);
  CHECK(calls == 2);
}
