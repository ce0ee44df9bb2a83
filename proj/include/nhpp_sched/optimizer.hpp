#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "nhpp_sched/task_batch.hpp"

namespace nhpp_sched {

enum class SortOrder { SPT, LPT };

std::string_view sort_order_name(SortOrder o);

/// Ascending length, ties by ascending index.
Permutation spt(const TaskBatch& batch);
/// Descending length, ties by ascending index.
Permutation lpt(const TaskBatch& batch);

/// Tasks pinned to positions; every other task may go to any free slot.
struct PrecedenceSpec {
  /// slot (0-based position) -> task (0-based index)
  std::map<std::size_t, std::size_t> fixed;

  /// Throws InvalidArgument unless slots and tasks are in range and distinct.
  void validate(std::size_t n) const;
  bool admits(const Permutation& perm) const;
};

/// Free tasks sorted by `order` into the free slots; pinned tasks stay put.
Permutation relative_sort(const TaskBatch& batch, const PrecedenceSpec& spec, SortOrder order);

/// Permutations that respect the spec, in lexicographic order.
std::vector<Permutation> feasible_permutations(std::size_t n, const PrecedenceSpec& spec = {});

using SequenceEvaluator = std::function<double(const Permutation&)>;

struct ExhaustiveResult {
  Permutation best;
  double best_value = 0.0;
  Permutation worst;
  double worst_value = 0.0;
  /// Every scanned permutation with its value, lexicographic order.
  std::vector<std::pair<Permutation, double>> values;
};

/// Minimum over all feasible permutations; ties within 1e-12 relative go to
/// the lexicographically first. Throws GuardExceeded for more than max_n tasks.
ExhaustiveResult best_sequence_exhaustive(const SequenceEvaluator& evaluator, const TaskBatch& batch,
                                          const std::optional<PrecedenceSpec>& spec = std::nullopt,
                                          std::size_t max_n = 10);

}  // namespace nhpp_sched
