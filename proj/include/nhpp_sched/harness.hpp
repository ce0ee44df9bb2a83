#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nhpp_sched/rate_model.hpp"
#include "nhpp_sched/sampler.hpp"
#include "nhpp_sched/task_batch.hpp"
#include "nhpp_sched/theory_check.hpp"

namespace nhpp_sched {

struct FamilySpec {
  std::string name;
  RateModel model;
};

enum class PermutationSet { SptLpt, All, Explicit };

/// One experiment: every family crossed with every requested permutation and
/// evaluator. Loaded from JSON; see configs/ for examples.
struct ExperimentConfig {
  std::string name = "experiment";
  TaskBatch tasks;
  std::vector<FamilySpec> families;
  PermutationSet permutations = PermutationSet::SptLpt;
  std::vector<Permutation> explicit_permutations;
  bool run_mc = true;
  bool run_exact = false;
  bool run_single_failure = false;
  bool run_thresholds = false;
  std::uint64_t replications = 200'000;
  std::uint64_t seed = 20240601;
  unsigned threads = 0;
  SamplingMethod sampling = SamplingMethod::Inversion;
  double exact_tol = 1e-4;
  std::optional<double> t_close;
  std::string out_dir = "out";
  std::string stem = "report";
  bool write_csv = true;
  bool write_json = true;
  bool record_timing = true;

  /// Throws Config on malformed or invalid input.
  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);

  std::vector<Permutation> permutation_list() const;
};

/// One evaluator applied to one (family, permutation).
struct EvalRecord {
  std::string family;
  Permutation permutation;
  std::string evaluator;  // "mc", "exact" or "single_failure"
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t replications = 0;
  std::optional<double> runtime_seconds;
  std::optional<double> max_makespan;
};

/// Best and worst permutation of one family under one evaluator.
struct ReportRow {
  std::string family;
  std::string evaluator;
  Permutation best;
  double best_value = 0.0;
  Permutation worst;
  double worst_value = 0.0;
  /// 100 (worst - best) / best
  double mis_sequencing_pct = 0.0;
};

struct ExperimentReport {
  std::string name;
  std::vector<double> tasks;
  std::uint64_t seed = 0;
  std::vector<EvalRecord> records;
  std::vector<ReportRow> rows;
  std::vector<std::pair<std::string, ThresholdReport>> thresholds;

  std::string to_csv() const;
  std::string to_json() const;
};

ExperimentReport run_experiment(const ExperimentConfig& config);

/// Writes the requested formats into config.out_dir and returns the paths.
std::vector<std::string> write_report(const ExperimentReport& report, const ExperimentConfig& config);

/// Summary rows computed from a set of records.
std::vector<ReportRow> summarize(const std::vector<EvalRecord>& records);

/// Theorem and proposition checks that apply to the batch, as a JSON array.
std::string thresholds_json(const RateModel& model, const TaskBatch& batch);

struct SelftestCase {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Fast closed-form oracle suite.
std::vector<SelftestCase> run_selftest();

}  // namespace nhpp_sched
