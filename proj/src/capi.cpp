#include "nhpp_sched/nhpp_sched.h"

#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "nhpp_sched/error.hpp"
#include "nhpp_sched/exact_solver.hpp"
#include "nhpp_sched/harness.hpp"
#include "nhpp_sched/optimizer.hpp"
#include "nhpp_sched/rate_model.hpp"
#include "nhpp_sched/simulation.hpp"
#include "nhpp_sched/single_failure.hpp"

struct nhps_model {
  nhpp_sched::RateModel model;
};

struct nhps_report {
  nhpp_sched::ExperimentConfig config;
  nhpp_sched::ExperimentReport report;
};

namespace {

using namespace nhpp_sched;

thread_local std::string g_last_error;

nhps_status status_of(ErrorCode code) {
  return static_cast<nhps_status>(static_cast<int>(code));
}

/// Runs fn, translating exceptions into status codes.
template <typename Fn>
nhps_status guard(Fn&& fn) {
  g_last_error.clear();
  try {
    return fn();
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return NHPS_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return NHPS_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return NHPS_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) fail(ErrorCode::InvalidArgument, what);
}

nhps_status emit_text(const std::string& text, char* buf, std::size_t capacity, std::size_t* needed) {
  require(needed != nullptr, "needed must not be NULL");
  *needed = text.size() + 1;
  if (buf == nullptr || capacity < text.size() + 1) {
    g_last_error = "buffer too small";
    return NHPS_BUFFER_TOO_SMALL;
  }
  std::memcpy(buf, text.c_str(), text.size() + 1);
  return NHPS_OK;
}

TaskBatch batch_of(const double* tasks, std::size_t n) {
  require(tasks != nullptr && n > 0, "tasks must be a non-empty array");
  return TaskBatch(std::vector<double>(tasks, tasks + n));
}

Permutation perm_of(const std::size_t* perm, std::size_t n) {
  if (perm == nullptr) return Permutation::identity(n);
  return Permutation::from_one_based(std::vector<std::size_t>(perm, perm + n));
}

const RateModel& model_of(const nhps_model* m) {
  require(m != nullptr, "model must not be NULL");
  return m->model;
}

}  // namespace

extern "C" {

const char* nhps_version(void) { return NHPP_SCHED_VERSION; }

const char* nhps_status_name(nhps_status status) {
  switch (status) {
    case NHPS_OK: return "ok";
    case NHPS_BUFFER_TOO_SMALL: return "buffer_too_small";
    case NHPS_INTERNAL: return "internal";
    default:
      if (status >= NHPS_INVALID_ARGUMENT && status <= NHPS_IO) return error_code_name(static_cast<ErrorCode>(status));
      return "unknown";
  }
}

const char* nhps_last_error(void) { return g_last_error.c_str(); }

nhps_status nhps_model_parse(const char* descriptor, nhps_model** out) {
  return guard([&] {
    require(descriptor != nullptr && out != nullptr, "descriptor and out must not be NULL");
    *out = nullptr;
    *out = new nhps_model{RateModel::parse(descriptor)};
    return NHPS_OK;
  });
}

void nhps_model_free(nhps_model* model) { delete model; }

nhps_status nhps_model_rate(const nhps_model* model, double t, double* out) {
  return guard([&] {
    require(out != nullptr, "out must not be NULL");
    *out = model_of(model).rate(t);
    return NHPS_OK;
  });
}

nhps_status nhps_model_cumulative(const nhps_model* model, double t1, double t2, double* out) {
  return guard([&] {
    require(out != nullptr, "out must not be NULL");
    *out = model_of(model).cumulative(t1, t2);
    return NHPS_OK;
  });
}

nhps_status nhps_model_inverse(const nhps_model* model, double x, double* out) {
  return guard([&] {
    require(out != nullptr, "out must not be NULL");
    *out = model_of(model).inverse_cumulative(x);
    return NHPS_OK;
  });
}

nhps_status nhps_model_describe(const nhps_model* model, char* buf, size_t capacity, size_t* needed) {
  return guard([&] { return emit_text(model_of(model).to_json_text(), buf, capacity, needed); });
}

nhps_status nhps_model_label(const nhps_model* model, char* buf, size_t capacity, size_t* needed) {
  return guard([&] { return emit_text(model_of(model).label(), buf, capacity, needed); });
}

nhps_status nhps_sort_order(const double* tasks, size_t n, nhps_order order, size_t* perm_out) {
  return guard([&] {
    require(perm_out != nullptr, "perm_out must not be NULL");
    require(order == NHPS_SPT || order == NHPS_LPT, "order must be NHPS_SPT or NHPS_LPT");
    const auto batch = batch_of(tasks, n);
    const auto p = order == NHPS_SPT ? spt(batch) : lpt(batch);
    for (std::size_t k = 0; k < n; ++k) perm_out[k] = p[k] + 1;
    return NHPS_OK;
  });
}

void nhps_estimate_options_init(nhps_estimate_options* options) {
  if (options == nullptr) return;
  const EstimateOptions d;
  options->replications = d.replications;
  options->seed = d.seed;
  options->threads = d.threads;
  options->sampling = NHPS_INVERSION;
  options->variant = NHPS_PREEMPT_REPEAT;
  options->restart_cap = d.sim.restart_cap;
}

nhps_status nhps_estimate_makespan(const nhps_model* model, const double* tasks, size_t n, const size_t* perm,
                                   const nhps_estimate_options* options, nhps_estimate* out) {
  return guard([&] {
    require(options != nullptr && out != nullptr, "options and out must not be NULL");
    require(options->sampling == NHPS_INVERSION || options->sampling == NHPS_THINNING, "unknown sampling method");
    require(options->variant == NHPS_PREEMPT_REPEAT || options->variant == NHPS_SINGLE_FAILURE, "unknown variant");
    EstimateOptions eo;
    eo.replications = options->replications;
    eo.seed = options->seed;
    eo.threads = options->threads;
    eo.sim.method = options->sampling == NHPS_INVERSION ? SamplingMethod::Inversion : SamplingMethod::Thinning;
    eo.sim.restart_cap = options->restart_cap;
    eo.variant = options->variant == NHPS_PREEMPT_REPEAT ? SimVariant::PreemptRepeat : SimVariant::SingleFailure;
    const auto est = estimate_makespan(model_of(model), batch_of(tasks, n), perm_of(perm, n), eo);
    *out = {est.mean, est.std_error, est.replications, est.mean_restarts, est.max_restarts, est.max_makespan};
    return NHPS_OK;
  });
}

nhps_status nhps_exact_makespan(const nhps_model* model, const double* tasks, size_t n, const size_t* perm, double tol,
                                double t_close, double* value_out, double* step_out) {
  return guard([&] {
    require(value_out != nullptr, "value_out must not be NULL");
    RefineOptions ro;
    if (t_close > 0.0) ro.t_close = t_close;
    const auto res = refine_until(model_of(model), batch_of(tasks, n), perm_of(perm, n), tol, ro);
    *value_out = res.value;
    if (step_out != nullptr) *step_out = res.h;
    return NHPS_OK;
  });
}

nhps_status nhps_single_failure_makespan(const nhps_model* model, const double* tasks, size_t n, const size_t* perm,
                                         double* out) {
  return guard([&] {
    require(out != nullptr, "out must not be NULL");
    *out = expected_makespan_single_failure(model_of(model), batch_of(tasks, n), perm_of(perm, n)).expected_makespan;
    return NHPS_OK;
  });
}

nhps_status nhps_single_failure_difference(const nhps_model* model, const double* tasks, size_t n, const size_t* perm,
                                           double* out) {
  return guard([&] {
    require(out != nullptr, "out must not be NULL");
    const auto batch = batch_of(tasks, n);
    const auto p = perm_of(perm, n);
    // Re-express the order against the ascending layout so SPT is the identity.
    const auto rank = spt(batch).inverse();
    std::vector<std::size_t> relabelled(n);
    for (std::size_t k = 0; k < n; ++k) relabelled[k] = rank[p[k]];
    *out = pairwise_difference(model_of(model), batch.sorted(), Permutation(std::move(relabelled)));
    return NHPS_OK;
  });
}

nhps_status nhps_thresholds_json(const nhps_model* model, const double* tasks, size_t n, char* buf, size_t capacity,
                                 size_t* needed) {
  return guard([&] { return emit_text(thresholds_json(model_of(model), batch_of(tasks, n)), buf, capacity, needed); });
}

nhps_status nhps_experiment_run(const char* config_json, const char* out_dir, nhps_report** out) {
  return guard([&] {
    require(config_json != nullptr && out != nullptr, "config_json and out must not be NULL");
    *out = nullptr;
    auto config = ExperimentConfig::from_json_text(config_json);
    if (out_dir != nullptr) config.out_dir = out_dir;
    auto report = run_experiment(config);
    *out = new nhps_report{std::move(config), std::move(report)};
    return NHPS_OK;
  });
}

void nhps_report_free(nhps_report* report) { delete report; }

nhps_status nhps_report_text(const nhps_report* report, nhps_format format, char* buf, size_t capacity,
                             size_t* needed) {
  return guard([&] {
    require(report != nullptr, "report must not be NULL");
    require(format == NHPS_CSV || format == NHPS_JSON, "unknown format");
    return emit_text(format == NHPS_CSV ? report->report.to_csv() : report->report.to_json(), buf, capacity, needed);
  });
}

nhps_status nhps_report_write(const nhps_report* report, size_t* written) {
  return guard([&] {
    require(report != nullptr, "report must not be NULL");
    const auto paths = write_report(report->report, report->config);
    if (written != nullptr) *written = paths.size();
    return NHPS_OK;
  });
}

nhps_status nhps_selftest(char* buf, size_t capacity, size_t* needed, size_t* failures) {
  return guard([&] {
    const auto cases = run_selftest();
    std::ostringstream os;
    std::size_t failed = 0;
    for (const auto& c : cases) {
      failed += c.passed ? 0 : 1;
      os << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    }
    if (failures != nullptr) *failures = failed;
    return emit_text(os.str(), buf, capacity, needed);
  });
}

}  // extern "C"
