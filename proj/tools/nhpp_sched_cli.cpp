// Command-line front end. Talks to the library only through the C interface.
#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nhpp_sched/nhpp_sched.h"

namespace {

using nlohmann::json;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct ApiFailure {
  nhps_status status;
  std::string message;
};

void check(nhps_status st) {
  if (st != NHPS_OK) throw ApiFailure{st, nhps_last_error()};
}

struct UsageError {
  std::string message;
};

template <typename Fn>
std::string fetch_text(Fn&& fn) {
  std::size_t needed = 0;
  nhps_status st = fn(nullptr, 0, &needed);
  if (st == NHPS_BUFFER_TOO_SMALL) {
    std::string buf(needed, '\0');
    check(fn(buf.data(), buf.size(), &needed));
    buf.resize(needed - 1);
    return buf;
  }
  check(st);
  return {};
}

using ModelPtr = std::unique_ptr<nhps_model, decltype(&nhps_model_free)>;
using ReportPtr = std::unique_ptr<nhps_report, decltype(&nhps_report_free)>;

ModelPtr load_model(const std::string& descriptor) {
  nhps_model* m = nullptr;
  const nhps_status st = nhps_model_parse(descriptor.c_str(), &m);
  if (st != NHPS_OK) throw UsageError{"--model '" + descriptor + "': " + nhps_last_error()};
  return {m, nhps_model_free};
}

std::string format_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::vector<std::size_t> parse_order(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument("bad index");
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError{"--perm: '" + text + "' is not a comma-separated list of one-based task indices"};
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> all_orders(std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i + 1;
  std::vector<std::vector<std::size_t>> out;
  do out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

std::string order_text(const std::vector<std::size_t>& p) {
  std::string s;
  for (std::size_t k = 0; k < p.size(); ++k) s += (k ? "," : "") + std::to_string(p[k]);
  return s;
}

struct Options {
  std::vector<std::string> models;
  std::vector<double> tasks;
  std::string perm = "spt";
  std::string format = "csv";
  std::string out;
  unsigned threads = 0;
  std::uint64_t reps = 100'000;
  std::uint64_t seed = 20240601;
  std::string sampling = "inversion";
  double tol = 1e-4;
  double t_close = 0.0;
  bool no_timing = false;
  std::string config;
};

/// Orders named by --perm. "all" is returned as the marker string in JSON.
json permutations_json(const Options& o) {
  if (o.perm == "all") return "all";
  json list = json::array();
  std::stringstream ss(o.perm);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item == "spt" || item == "lpt") {
      std::vector<std::size_t> p(o.tasks.size());
      check(nhps_sort_order(o.tasks.data(), o.tasks.size(), item == "spt" ? NHPS_SPT : NHPS_LPT, p.data()));
      list.push_back(p);
    } else {
      list.push_back(parse_order(item));
    }
  }
  if (list.empty()) throw UsageError{"--perm must not be empty"};
  return list;
}

std::vector<std::vector<std::size_t>> permutation_list(const Options& o) {
  const json p = permutations_json(o);
  if (p.is_string()) return all_orders(o.tasks.size());
  return p.get<std::vector<std::vector<std::size_t>>>();
}

void require_inputs(const Options& o) {
  if (o.models.empty()) throw UsageError{"--model is required"};
  if (o.tasks.empty()) throw UsageError{"--tasks is required"};
  for (const auto& m : o.models) load_model(m);
}

json base_config(const Options& o, const std::string& name, const std::vector<std::string>& methods) {
  json families = json::array();
  for (const auto& m : o.models) families.push_back({{"name", m}, {"model", m}});
  json c = {{"name", name},
            {"tasks", o.tasks},
            {"families", families},
            {"permutations", permutations_json(o)},
            {"methods", methods},
            {"replications", o.reps},
            {"seed", o.seed},
            {"threads", o.threads},
            {"sampling", o.sampling},
            {"exact", {{"tol", o.tol}}},
            {"record_timing", !o.no_timing},
            {"output", {{"dir", o.out.empty() ? std::string("out") : o.out}, {"stem", name}}}};
  if (o.t_close > 0.0) c["exact"]["t_close"] = o.t_close;
  return c;
}

int run_config(const json& config, const Options& o) {
  nhps_report* raw = nullptr;
  check(nhps_experiment_run(config.dump().c_str(), o.out.empty() ? nullptr : o.out.c_str(), &raw));
  ReportPtr report(raw, nhps_report_free);
  const nhps_format fmt = o.format == "json" ? NHPS_JSON : NHPS_CSV;
  std::cout << fetch_text([&](char* b, std::size_t c, std::size_t* n) { return nhps_report_text(report.get(), fmt, b, c, n); });
  if (fmt == NHPS_JSON) std::cout << '\n';
  if (!o.out.empty()) {
    std::size_t written = 0;
    check(nhps_report_write(report.get(), &written));
    std::cerr << "wrote " << written << " report file(s) to " << o.out << '\n';
  }
  return 0;
}

void write_file(const std::string& dir, const std::string& name, const std::string& body) {
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream out(path);
  out << body;
  if (!out) throw ApiFailure{NHPS_IO, "cannot write " + path.string()};
  std::cerr << "wrote " << path.string() << '\n';
}

int cmd_single_failure(const Options& o) {
  require_inputs(o);
  json rows = json::array();
  std::ostringstream csv;
  csv << "model,permutation,expected_makespan,spt_minus_this\n";
  for (const auto& desc : o.models) {
    auto model = load_model(desc);
    for (const auto& p : permutation_list(o)) {
      if (p.size() != o.tasks.size()) throw UsageError{"--perm size does not match --tasks"};
      double value = 0.0, diff = 0.0;
      check(nhps_single_failure_makespan(model.get(), o.tasks.data(), o.tasks.size(), p.data(), &value));
      check(nhps_single_failure_difference(model.get(), o.tasks.data(), o.tasks.size(), p.data(), &diff));
      rows.push_back({{"model", desc}, {"permutation", order_text(p)}, {"expected_makespan", value}, {"spt_minus_this", diff}});
      csv << '"' << desc << "\",\"" << order_text(p) << "\"," << format_num(value) << ',' << format_num(diff) << '\n';
    }
  }
  const std::string body = o.format == "json" ? rows.dump(2) + "\n" : csv.str();
  std::cout << body;
  if (!o.out.empty()) write_file(o.out, o.format == "json" ? "single_failure.json" : "single_failure.csv", body);
  return 0;
}

int cmd_thresholds(const Options& o) {
  require_inputs(o);
  json all = json::array();
  for (const auto& desc : o.models) {
    auto model = load_model(desc);
    const auto text = fetch_text([&](char* b, std::size_t c, std::size_t* n) {
      return nhps_thresholds_json(model.get(), o.tasks.data(), o.tasks.size(), b, c, n);
    });
    all.push_back({{"model", desc}, {"checks", json::parse(text)}});
  }
  const std::string body = all.dump(2) + "\n";
  std::cout << body;
  if (!o.out.empty()) write_file(o.out, "thresholds.json", body);
  return 0;
}

int cmd_sweep(const Options& o, const CLI::App& sub) {
  std::ifstream in(o.config);
  if (!in) throw ApiFailure{NHPS_IO, "cannot open config '" + o.config + "'"};
  json config;
  try {
    config = json::parse(in);
  } catch (const json::exception& e) {
    throw ApiFailure{NHPS_CONFIG, std::string("config: invalid JSON: ") + e.what()};
  }
  if (sub.count("--reps")) config["replications"] = o.reps;
  if (sub.count("--seed")) config["seed"] = o.seed;
  if (sub.count("--threads")) config["threads"] = o.threads;
  if (sub.count("--tol")) config["exact"]["tol"] = o.tol;
  if (o.no_timing) config["record_timing"] = false;
  return run_config(config, o);
}

int cmd_selftest() {
  std::size_t failures = 0;
  std::cout << fetch_text([&](char* b, std::size_t c, std::size_t* n) { return nhps_selftest(b, c, n, &failures); });
  std::cout << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
  return failures == 0 ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Expected makespan of task batches under non-homogeneous Poisson disruptions"};
  app.set_version_flag("--version", std::string(nhps_version()));
  app.require_subcommand(1);
  Options o;

  auto add_inputs = [&](CLI::App* s) {
    s->add_option("--model", o.models, "Rate model descriptor, e.g. constant:0.4 (repeatable)")->required();
    s->add_option("--tasks", o.tasks, "Task lengths, comma separated")->delimiter(',')->required();
  };
  auto add_perm = [&](CLI::App* s) {
    s->add_option("--perm", o.perm, "spt | lpt | all | explicit one-based order (several separated by ';')");
  };
  auto add_output = [&](CLI::App* s) {
    s->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    s->add_option("--out", o.out, "Directory for report files");
  };
  auto add_threads = [&](CLI::App* s) { s->add_option("--threads", o.threads, "Worker threads (0 = default)"); };
  auto add_timing = [&](CLI::App* s) {
    s->add_flag("--no-timing", o.no_timing, "Omit runtimes so that reports are byte-reproducible");
  };

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimate of the expected makespan");
  add_inputs(simulate);
  add_perm(simulate);
  add_output(simulate);
  add_threads(simulate);
  add_timing(simulate);
  simulate->add_option("--reps", o.reps, "Replications")->check(CLI::Range(std::uint64_t{2}, std::uint64_t{1} << 40));
  simulate->add_option("--seed", o.seed, "Base seed");
  simulate->add_option("--method", o.sampling, "Arrival sampling")->check(CLI::IsMember({"inversion", "thinning"}));

  auto* exact = app.add_subcommand("exact", "Numerical solution of the renewal equations");
  add_inputs(exact);
  add_perm(exact);
  add_output(exact);
  add_timing(exact);
  exact->add_option("--tol", o.tol, "Refinement tolerance")->check(CLI::PositiveNumber);
  exact->add_option("--t-close", o.t_close, "Time at which the tail closure starts (default: automatic)");

  auto* single = app.add_subcommand("single-failure", "At-most-one-failure expected makespan and differences");
  add_inputs(single);
  add_perm(single);
  add_output(single);

  auto* thresholds = app.add_subcommand("thresholds", "Sufficient conditions for SPT or LPT optimality");
  add_inputs(thresholds);
  thresholds->add_option("--out", o.out, "Directory for the report file");

  auto* sweep = app.add_subcommand("sweep", "Run a full experiment config");
  sweep->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", o.out, "Override the configured output directory");
  sweep->add_option("--format", o.format, "Format printed to stdout")->check(CLI::IsMember({"csv", "json"}));
  sweep->add_option("--reps", o.reps, "Override replications")->check(CLI::Range(std::uint64_t{2}, std::uint64_t{1} << 40));
  sweep->add_option("--seed", o.seed, "Override seed");
  sweep->add_option("--tol", o.tol, "Override exact tolerance")->check(CLI::PositiveNumber);
  add_threads(sweep);
  add_timing(sweep);

  app.add_subcommand("selftest", "Closed-form oracle suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      require_inputs(o);
      return run_config(base_config(o, "simulate", {"mc"}), o);
    }
    if (exact->parsed()) {
      require_inputs(o);
      return run_config(base_config(o, "exact", {"exact"}), o);
    }
    if (single->parsed()) return cmd_single_failure(o);
    if (thresholds->parsed()) return cmd_thresholds(o);
    if (sweep->parsed()) return cmd_sweep(o, *sweep);
    return cmd_selftest();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.message << "\n";
    return kExitUsage;
  } catch (const ApiFailure& e) {
    std::cerr << "error (" << nhps_status_name(e.status) << "): " << e.message << "\n";
    return e.status == NHPS_CONFIG || e.status == NHPS_INVALID_ARGUMENT ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
