#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "nhpp_sched/nhpp_sched.h"

namespace {

struct ModelDeleter {
  void operator()(nhps_model* m) const { nhps_model_free(m); }
};
using ModelPtr = std::unique_ptr<nhps_model, ModelDeleter>;

struct ReportDeleter {
  void operator()(nhps_report* r) const { nhps_report_free(r); }
};
using ReportPtr = std::unique_ptr<nhps_report, ReportDeleter>;

ModelPtr parse(const char* text) {
  nhps_model* m = nullptr;
  REQUIRE(nhps_model_parse(text, &m) == NHPS_OK);
  return ModelPtr(m);
}

template <class Fn>
std::string read_text(Fn fn) {
  size_t needed = 0;
  REQUIRE(fn(nullptr, 0, &needed) == NHPS_BUFFER_TOO_SMALL);
  std::string s(needed, '\0');
  REQUIRE(fn(s.data(), s.size(), &needed) == NHPS_OK);
  s.resize(needed - 1);
  return s;
}

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::string(nhps_version()).size() > 0);
  CHECK(std::string(nhps_status_name(NHPS_OK)) == "ok");
  CHECK(std::string(nhps_status_name(NHPS_DIVERGENCE)) == "divergence");
  CHECK(std::string(nhps_status_name(NHPS_BUFFER_TOO_SMALL)) == "buffer_too_small");
}

TEST_CASE("model handles") {
  nhps_model* bad = nullptr;
  CHECK(nhps_model_parse("warp:1", &bad) == NHPS_INVALID_ARGUMENT);
  CHECK(bad == nullptr);
  CHECK(std::string(nhps_last_error()).size() > 0);
  CHECK(nhps_model_parse(nullptr, &bad) == NHPS_INVALID_ARGUMENT);
  CHECK(nhps_model_parse("constant:-1", &bad) != NHPS_OK);

  const auto m = parse("constant:0.4");
  double v = 0.0;
  CHECK(nhps_model_rate(m.get(), 3.0, &v) == NHPS_OK);
  CHECK(v == doctest::Approx(0.4));
  CHECK(nhps_model_cumulative(m.get(), 1.0, 3.5, &v) == NHPS_OK);
  CHECK(v == doctest::Approx(1.0));
  CHECK(nhps_model_inverse(m.get(), 2.0, &v) == NHPS_OK);
  CHECK(v == doctest::Approx(5.0));
  CHECK(nhps_model_rate(nullptr, 0.0, &v) == NHPS_INVALID_ARGUMENT);
  CHECK(nhps_model_rate(m.get(), 0.0, nullptr) == NHPS_INVALID_ARGUMENT);
  nhps_model_free(nullptr);

  const auto described = read_text([&](char* b, size_t c, size_t* n) { return nhps_model_describe(m.get(), b, c, n); });
  const auto j = nlohmann::json::parse(described);
  CHECK(j.at("kind") == "Constant");
  const auto round = parse(described.c_str());
  CHECK(nhps_model_rate(round.get(), 1.0, &v) == NHPS_OK);
  CHECK(v == doctest::Approx(0.4));
  const auto label = read_text([&](char* b, size_t c, size_t* n) { return nhps_model_label(m.get(), b, c, n); });
  CHECK(!label.empty());
  char tiny[2];
  size_t needed = 0;
  CHECK(nhps_model_label(m.get(), tiny, sizeof tiny, &needed) == NHPS_BUFFER_TOO_SMALL);
  CHECK(needed == label.size() + 1);
}

TEST_CASE("sort orders") {
  const double tasks[] = {3.0, 3.0, 1.0};
  size_t perm[3];
  REQUIRE(nhps_sort_order(tasks, 3, NHPS_SPT, perm) == NHPS_OK);
  CHECK(std::vector<size_t>(perm, perm + 3) == std::vector<size_t>{3, 1, 2});
  REQUIRE(nhps_sort_order(tasks, 3, NHPS_LPT, perm) == NHPS_OK);
  CHECK(std::vector<size_t>(perm, perm + 3) == std::vector<size_t>{1, 2, 3});
  CHECK(nhps_sort_order(tasks, 0, NHPS_SPT, perm) == NHPS_INVALID_ARGUMENT);
}

TEST_CASE("estimates through the C interface") {
  const auto m = parse("constant:1");
  const double one[] = {1.0};
  nhps_estimate_options o;
  nhps_estimate_options_init(&o);
  CHECK(o.replications > 0);
  o.replications = 100000;
  o.threads = 1;
  nhps_estimate e{};
  REQUIRE(nhps_estimate_makespan(m.get(), one, 1, nullptr, &o, &e) == NHPS_OK);
  CHECK(std::abs(e.mean - (std::numbers::e - 1.0)) <= 3.0 * e.std_error);
  CHECK(e.replications == 100000);
  CHECK(e.max_makespan >= 1.0);

  o.replications = 1;
  CHECK(nhps_estimate_makespan(m.get(), one, 1, nullptr, &o, &e) == NHPS_INVALID_ARGUMENT);

  const auto hot = parse("constant:5");
  const double long_task[] = {10.0};
  o.replications = 10;
  o.restart_cap = 1000;
  CHECK(nhps_estimate_makespan(hot.get(), long_task, 1, nullptr, &o, &e) == NHPS_DIVERGENCE);
  CHECK(std::string(nhps_last_error()).find("restarts") != std::string::npos);

  const size_t bad_perm[] = {1, 1};
  const double two[] = {1.0, 2.0};
  o.restart_cap = 0;
  CHECK(nhps_estimate_makespan(m.get(), two, 2, bad_perm, &o, &e) == NHPS_INVALID_ARGUMENT);
}

TEST_CASE("exact and single-failure values") {
  const auto m = parse("constant:0.4");
  const double tasks[] = {2.0, 4.0, 6.0, 8.0};
  double want = 0.0;
  for (double a : tasks) want += std::expm1(0.4 * a) / 0.4;
  double v = 0.0;
  double h = 0.0;
  REQUIRE(nhps_exact_makespan(m.get(), tasks, 4, nullptr, 1e-4, 0.0, &v, &h) == NHPS_OK);
  CHECK(std::abs(v - want) / want < 1e-4);
  CHECK(h > 0.0);
  CHECK(nhps_exact_makespan(m.get(), tasks, 4, nullptr, -1.0, 0.0, &v, nullptr) == NHPS_INVALID_ARGUMENT);

  const auto unit = parse("constant:1");
  const double two[] = {1.0, 2.0};
  const size_t lpt[] = {2, 1};
  const double e = std::numbers::e;
  double diff = 0.0;
  REQUIRE(nhps_single_failure_difference(unit.get(), two, 2, lpt, &diff) == NHPS_OK);
  CHECK(diff == doctest::Approx(-1.0 / e + 2.0 / (e * e) - 1.0 / (e * e * e)));
  double s = 0.0;
  double l = 0.0;
  REQUIRE(nhps_single_failure_makespan(unit.get(), two, 2, nullptr, &s) == NHPS_OK);
  REQUIRE(nhps_single_failure_makespan(unit.get(), two, 2, lpt, &l) == NHPS_OK);
  CHECK(std::abs((s - l) - diff) < 1e-9);

  const auto thr = read_text(
      [&](char* b, size_t c, size_t* n) { return nhps_thresholds_json(unit.get(), two, 2, b, c, n); });
  CHECK(nlohmann::json::parse(thr).is_array());
}

TEST_CASE("experiments") {
  nhps_report* raw = nullptr;
  CHECK(nhps_experiment_run("{\"tasks\": [1]}", nullptr, &raw) == NHPS_CONFIG);
  CHECK(raw == nullptr);

  const auto dir = std::filesystem::temp_directory_path() / "nhpp_sched_capi_test";
  std::filesystem::remove_all(dir);
  const char* config = R"({"tasks": [2, 4], "families": [{"name": "z", "model": "zero"}],
                           "replications": 10, "record_timing": false})";
  REQUIRE(nhps_experiment_run(config, dir.string().c_str(), &raw) == NHPS_OK);
  const ReportPtr report(raw);
  CHECK_FALSE(std::filesystem::exists(dir));
  const auto csv = read_text(
      [&](char* b, size_t c, size_t* n) { return nhps_report_text(report.get(), NHPS_CSV, b, c, n); });
  CHECK(csv.find("z,\"1,2\",mc,6,0,10,") != std::string::npos);
  const auto js = read_text(
      [&](char* b, size_t c, size_t* n) { return nhps_report_text(report.get(), NHPS_JSON, b, c, n); });
  CHECK(nlohmann::json::parse(js).at("rows").size() == 1);
  size_t written = 0;
  REQUIRE(nhps_report_write(report.get(), &written) == NHPS_OK);
  CHECK(written == 2);
  CHECK(std::filesystem::exists(dir / "report.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("self test through the C interface") {
  size_t failures = 99;
  size_t needed = 0;
  CHECK(nhps_selftest(nullptr, 0, &needed, &failures) == NHPS_BUFFER_TOO_SMALL);
  std::string text(needed, '\0');
  REQUIRE(nhps_selftest(text.data(), text.size(), &needed, &failures) == NHPS_OK);
  CHECK(failures == 0);
  CHECK(text.find("PASS") == 0);
}
