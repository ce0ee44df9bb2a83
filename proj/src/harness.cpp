#include "nhpp_sched/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nhpp_sched/error.hpp"
#include "nhpp_sched/exact_solver.hpp"
#include "nhpp_sched/optimizer.hpp"
#include "nhpp_sched/rng.hpp"
#include "nhpp_sched/simulation.hpp"
#include "nhpp_sched/single_failure.hpp"

namespace nhpp_sched {

namespace {

using nlohmann::json;

constexpr std::size_t kMaxAllPermutations = 7;

[[noreturn]] void config_error(const std::string& what) { fail(ErrorCode::Config, "config: " + what); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Quotes a CSV field when it holds a delimiter or quote.
std::string csv_field(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

json num_or_null(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? json(*v) : json(nullptr);
}

RateModel model_from_json(const json& j) {
  try {
    if (j.is_string()) return RateModel::parse(j.get<std::string>());
    if (j.is_object()) return RateModel::from_json_text(j.dump());
  } catch (const Error& e) {
    config_error(e.what());
  }
  config_error("family 'model' must be a descriptor string or object");
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) config_error("unknown key '" + k + "' in " + where);
}

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    config_error("key '" + key + "' has the wrong type");
  }
}

double wall_seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::vector<ThresholdReport> threshold_reports(const RateModel& model, const TaskBatch& batch) {
  const TaskBatch sorted = batch.sorted();
  std::vector<ThresholdReport> out;
  auto guarded = [&](const char* check, auto&& fn) {
    try {
      out.push_back(fn());
    } catch (const Error& e) {
      ThresholdReport r;
      r.check = check;
      r.hypothesis_failures.push_back(std::string("evaluation failed: ") + e.what());
      out.push_back(std::move(r));
    }
  };
  if (sorted.size() >= 2) {
    guarded("theorem1", [&] { return theorem1_threshold(model, sorted); });
    guarded("theorem2", [&] { return theorem2_threshold(model, ShortTaskSpec{1.0, sorted}); });
  }
  if (sorted.size() == 2 && sorted[0] < sorted[1])
    guarded("prop2", [&] { return prop2_cutoffs(model, sorted[0], sorted[1]); });
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    config_error(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) config_error("top level must be an object");
  check_keys(j,
             {"name", "description", "tasks", "families", "permutations", "methods", "replications", "seed", "threads",
              "sampling", "exact", "output", "record_timing"},
             "config");

  ExperimentConfig c;
  if (j.contains("name")) c.name = get_as<std::string>(j, "name");
  if (!j.contains("tasks")) config_error("missing 'tasks'");
  try {
    c.tasks = TaskBatch(get_as<std::vector<double>>(j, "tasks"));
  } catch (const Error& e) {
    config_error(e.what());
  }
  if (c.tasks.empty()) config_error("'tasks' must not be empty");

  if (!j.contains("families") || !j.at("families").is_array() || j.at("families").empty())
    config_error("'families' must be a non-empty array");
  for (const auto& f : j.at("families")) {
    if (!f.is_object() || !f.contains("model")) config_error("each family needs a 'model'");
    check_keys(f, {"name", "model"}, "family");
    RateModel m = model_from_json(f.at("model"));
    std::string name = f.contains("name") ? get_as<std::string>(f, "name") : std::string(kind_name(m.kind()));
    c.families.push_back({std::move(name), std::move(m)});
  }

  if (j.contains("permutations")) {
    const auto& p = j.at("permutations");
    if (p.is_string()) {
      const auto s = p.get<std::string>();
      if (s == "spt_lpt") c.permutations = PermutationSet::SptLpt;
      else if (s == "all") c.permutations = PermutationSet::All;
      else config_error("'permutations' must be \"spt_lpt\", \"all\" or a list");
    } else if (p.is_array()) {
      c.permutations = PermutationSet::Explicit;
      for (const auto& item : p) {
        try {
          auto perm = Permutation::from_one_based(item.get<std::vector<std::size_t>>());
          if (perm.size() != c.tasks.size()) config_error("explicit permutation size does not match 'tasks'");
          c.explicit_permutations.push_back(std::move(perm));
        } catch (const json::exception&) {
          config_error("explicit permutations must be arrays of one-based task indices");
        } catch (const Error& e) {
          if (e.code() == ErrorCode::Config) throw;
          config_error(e.what());
        }
      }
      if (c.explicit_permutations.empty()) config_error("explicit permutation list is empty");
    } else {
      config_error("'permutations' has the wrong type");
    }
  }
  if (c.permutations == PermutationSet::All && c.tasks.size() > kMaxAllPermutations)
    config_error("'all' permutations supports at most 7 tasks");

  if (j.contains("methods")) {
    c.run_mc = false;
    for (const auto& m : get_as<std::vector<std::string>>(j, "methods")) {
      if (m == "mc") c.run_mc = true;
      else if (m == "exact") c.run_exact = true;
      else if (m == "single_failure") c.run_single_failure = true;
      else if (m == "thresholds") c.run_thresholds = true;
      else config_error("unknown method '" + m + "'");
    }
  }
  if (j.contains("replications")) {
    const auto& r = j.at("replications");
    if (!r.is_number_integer() || r.get<std::int64_t>() < 2) config_error("'replications' must be an integer >= 2");
    c.replications = r.get<std::uint64_t>();
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) config_error("'seed' must be a non-negative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("threads")) {
    if (!j.at("threads").is_number_unsigned()) config_error("'threads' must be a non-negative integer");
    c.threads = j.at("threads").get<unsigned>();
  }
  if (j.contains("sampling")) {
    try {
      c.sampling = sampling_method_from_name(get_as<std::string>(j, "sampling"));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Config) throw;
      config_error(e.what());
    }
  }
  if (j.contains("exact")) {
    const auto& e = j.at("exact");
    if (!e.is_object()) config_error("'exact' must be an object");
    check_keys(e, {"tol", "t_close"}, "exact");
    if (e.contains("tol")) c.exact_tol = get_as<double>(e, "tol");
    if (!(c.exact_tol > 0.0)) config_error("'exact.tol' must be > 0");
    if (e.contains("t_close") && !e.at("t_close").is_null()) c.t_close = get_as<double>(e, "t_close");
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    if (!o.is_object()) config_error("'output' must be an object");
    check_keys(o, {"dir", "stem", "formats"}, "output");
    if (o.contains("dir")) c.out_dir = get_as<std::string>(o, "dir");
    if (o.contains("stem")) c.stem = get_as<std::string>(o, "stem");
    if (o.contains("formats")) {
      c.write_csv = c.write_json = false;
      for (const auto& f : get_as<std::vector<std::string>>(o, "formats")) {
        if (f == "csv") c.write_csv = true;
        else if (f == "json") c.write_json = true;
        else config_error("unknown output format '" + f + "'");
      }
    }
  }
  if (j.contains("record_timing")) c.record_timing = get_as<bool>(j, "record_timing");
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::vector<Permutation> ExperimentConfig::permutation_list() const {
  switch (permutations) {
    case PermutationSet::All: return all_permutations(tasks.size());
    case PermutationSet::Explicit: return explicit_permutations;
    case PermutationSet::SptLpt: {
      std::vector<Permutation> out{spt(tasks)};
      auto l = lpt(tasks);
      if (l != out.front()) out.push_back(std::move(l));
      return out;
    }
  }
  return {};
}

std::vector<ReportRow> summarize(const std::vector<EvalRecord>& records) {
  std::vector<ReportRow> rows;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.family, r.evaluator);
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(key, rows.size());
      rows.push_back({r.family, r.evaluator, r.permutation, r.mean, r.permutation, r.mean, 0.0});
      continue;
    }
    auto& row = rows[it->second];
    if (r.mean < row.best_value) {
      row.best = r.permutation;
      row.best_value = r.mean;
    }
    if (r.mean > row.worst_value) {
      row.worst = r.permutation;
      row.worst_value = r.mean;
    }
  }
  for (auto& row : rows)
    row.mis_sequencing_pct = row.best_value > 0.0 ? 100.0 * (row.worst_value - row.best_value) / row.best_value : 0.0;
  return rows;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  ExperimentReport report;
  report.name = config.name;
  report.tasks = config.tasks.lengths();
  report.seed = config.seed;
  const auto perms = config.permutation_list();

  for (const auto& fam : config.families) {
    for (const auto& perm : perms) {
      auto context = [&](const Error& e) {
        return "family '" + fam.name + "', permutation " + perm.to_string() + ": " + e.what();
      };
      try {
        if (config.run_mc) {
          const auto t0 = std::chrono::steady_clock::now();
          EstimateOptions eo;
          eo.replications = config.replications;
          eo.seed = config.seed;
          eo.threads = config.threads;
          eo.sim.method = config.sampling;
          const auto est = estimate_makespan(fam.model, config.tasks, perm, eo);
          EvalRecord rec{fam.name, perm, "mc", est.mean, est.std_error, est.replications, {}, est.max_makespan};
          if (config.record_timing) rec.runtime_seconds = wall_seconds(t0);
          report.records.push_back(std::move(rec));
        }
        if (config.run_exact) {
          const auto t0 = std::chrono::steady_clock::now();
          RefineOptions ro;
          ro.t_close = config.t_close;
          const auto res = refine_until(fam.model, config.tasks, perm, config.exact_tol, ro);
          EvalRecord rec{fam.name, perm, "exact", res.value, 0.0, 0, {}, {}};
          if (config.record_timing) rec.runtime_seconds = wall_seconds(t0);
          report.records.push_back(std::move(rec));
        }
        if (config.run_single_failure) {
          const auto t0 = std::chrono::steady_clock::now();
          const auto res = expected_makespan_single_failure(fam.model, config.tasks, perm);
          EvalRecord rec{fam.name, perm, "single_failure", res.expected_makespan, 0.0, 0, {}, {}};
          if (config.record_timing) rec.runtime_seconds = wall_seconds(t0);
          report.records.push_back(std::move(rec));
        }
      } catch (const DivergenceError& e) {
        throw DivergenceError(context(e), e.task_position(), e.expected_attempts());
      } catch (const Error& e) {
        throw Error(e.code(), context(e));
      }
    }
    if (config.run_thresholds)
      for (auto& r : threshold_reports(fam.model, config.tasks)) report.thresholds.emplace_back(fam.name, std::move(r));
  }
  report.rows = summarize(report.records);
  return report;
}

std::string ExperimentReport::to_csv() const {
  std::ostringstream os;
  os << "family,permutation,evaluator,mean,std_error,replications,runtime_seconds\n";
  for (const auto& r : records) {
    os << csv_field(r.family) << ',' << csv_field(r.permutation.to_string()) << ',' << r.evaluator << ',' << fmt(r.mean) << ','
       << fmt(r.std_error) << ',' << r.replications << ',';
    if (r.runtime_seconds) os << fmt(*r.runtime_seconds);
    os << '\n';
  }
  return os.str();
}

std::string ExperimentReport::to_json() const {
  json j;
  j["name"] = name;
  j["tasks"] = tasks;
  j["seed"] = seed;
  json recs = json::array();
  for (const auto& r : records) {
    recs.push_back({{"family", r.family},
                    {"permutation", r.permutation.to_string()},
                    {"evaluator", r.evaluator},
                    {"mean", r.mean},
                    {"std_error", r.std_error},
                    {"replications", r.replications},
                    {"runtime_seconds", num_or_null(r.runtime_seconds)},
                    {"max_makespan", num_or_null(r.max_makespan)}});
  }
  j["records"] = recs;
  json rows_j = json::array();
  for (const auto& r : rows) {
    rows_j.push_back({{"family", r.family},
                      {"evaluator", r.evaluator},
                      {"best_permutation", r.best.to_string()},
                      {"best", r.best_value},
                      {"worst_permutation", r.worst.to_string()},
                      {"worst", r.worst_value},
                      {"mis_sequencing_pct", r.mis_sequencing_pct}});
  }
  j["rows"] = rows_j;
  json th = json::array();
  for (const auto& [family, r] : thresholds) th.push_back({{"family", family}, {"report", json::parse(r.to_json())}});
  j["thresholds"] = th;
  return j.dump(2);
}

std::vector<std::string> write_report(const ExperimentReport& report, const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create output directory '" + config.out_dir + "': " + ec.message());
  std::vector<std::string> written;
  auto put = [&](const std::string& ext, const std::string& body) {
    const auto path = (fs::path(config.out_dir) / (config.stem + ext)).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot write '" + path + "'");
    out << body;
    if (!out) fail(ErrorCode::Io, "write failed for '" + path + "'");
    written.push_back(path);
  };
  if (config.write_csv) put(".csv", report.to_csv());
  if (config.write_json) put(".json", report.to_json() + "\n");
  return written;
}

std::string thresholds_json(const RateModel& model, const TaskBatch& batch) {
  json arr = json::array();
  for (const auto& r : threshold_reports(model, batch)) arr.push_back(json::parse(r.to_json()));
  return arr.dump(2);
}

std::vector<SelftestCase> run_selftest() {
  std::vector<SelftestCase> out;
  auto check = [&](const std::string& name, double got, double want, double tol) {
    std::ostringstream os;
    os << "got " << fmt(got) << ", expected " << fmt(want) << " +/- " << tol;
    out.push_back({name, std::abs(got - want) <= tol, os.str()});
  };
  auto guarded = [&](const std::string& name, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      out.push_back({name, false, e.what()});
    }
  };
  const double e = std::numbers::e;
  guarded("constant-rate single task", [&] { check("constant-rate single task", constant_rate_single(1.0, 1.0), e - 1.0, 1e-12); });
  guarded("constant-rate batch", [&] {
    check("constant-rate batch", constant_rate_batch(1.0, TaskBatch({1.0, 2.0})), (e - 1.0) + (e * e - 1.0), 1e-12);
  });
  guarded("zero-then-constant closed forms", [&] {
    const auto v = special_two_task(1.0, 2.0, 1.0);
    check("zero-then-constant a first", v.a_first, 2.0 + e * e - e, 1e-12);
    check("zero-then-constant b first", v.b_first, 2.0 + e - 1.0, 1e-12);
  });
  guarded("two-phase difference", [&] {
    check("two-phase difference", two_phase_delta(1.0, 2.0, 0.5, 1.0), (std::exp(0.5) - e) / 0.5 - (e - e * e), 1e-12);
  });
  guarded("single-failure difference", [&] {
    check("single-failure difference",
          pairwise_difference(RateModel::constant(1.0), TaskBatch({1.0, 2.0}), Permutation::reversal(2)),
          -1.0 / e + 2.0 / (e * e) - 1.0 / (e * e * e), 1e-12);
  });
  guarded("chain solver, constant rate", [&] {
    ChainOptions co;
    co.h = 1e-3;
    const std::vector<double> seq{1.0, 2.0};
    check("chain solver, constant rate", solve_chain(RateModel::constant(1.0), seq, co).expected_makespan(),
          (e - 1.0) + (e * e - 1.0), 1e-4);
  });
  guarded("chain solver, zero-then-constant", [&] {
    ChainOptions co;
    co.h = 1e-3;
    const auto z = RateModel::zero_then_constant(2.0, 1.0);
    check("chain solver, zero-then-constant a first", solve_chain(z, std::vector<double>{1.0, 2.0}, co).expected_makespan(),
          2.0 + e * e - e, 1e-4);
    check("chain solver, zero-then-constant b first", solve_chain(z, std::vector<double>{2.0, 1.0}, co).expected_makespan(),
          2.0 + e - 1.0, 1e-4);
  });
  guarded("zero-rate simulation", [&] {
    EstimateOptions eo;
    eo.replications = 10;
    eo.threads = 1;
    const auto est = estimate_makespan(RateModel::zero(), TaskBatch({2.0, 4.0}), Permutation::identity(2), eo);
    check("zero-rate simulation", est.mean, 6.0, 0.0);
  });
  guarded("generalized inverse across a flat", [&] {
    check("generalized inverse across a flat", RateModel::zero_then_constant(2.0, 1.0).inverse_cumulative(0.5), 2.5,
          1e-12);
  });
  guarded("philox known answer", [&] {
    const auto v = philox4x32_10({0, 0, 0, 0}, {0, 0});
    const bool ok = v[0] == 0x6627e8d5u && v[1] == 0xe169c58du && v[2] == 0xbc57ac4cu && v[3] == 0x9b00dbd8u;
    out.push_back({"philox known answer", ok, ok ? "match" : "mismatch"});
  });
  return out;
}

}  // namespace nhpp_sched
