#include "nhpp_sched/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "nhpp_sched/error.hpp"

namespace nhpp_sched {

namespace {

std::vector<std::size_t> sorted_indices(const TaskBatch& batch, std::vector<std::size_t> ids, SortOrder order) {
  if (order == SortOrder::SPT)
    std::stable_sort(ids.begin(), ids.end(), [&](std::size_t x, std::size_t y) { return batch[x] < batch[y]; });
  else
    std::stable_sort(ids.begin(), ids.end(), [&](std::size_t x, std::size_t y) { return batch[x] > batch[y]; });
  return ids;
}

bool better(double candidate, double incumbent) {
  return candidate < incumbent - 1e-12 * std::max(1.0, std::abs(incumbent));
}

}  // namespace

std::string_view sort_order_name(SortOrder o) { return o == SortOrder::SPT ? "SPT" : "LPT"; }

Permutation spt(const TaskBatch& batch) {
  std::vector<std::size_t> ids(batch.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  return Permutation(sorted_indices(batch, std::move(ids), SortOrder::SPT));
}

Permutation lpt(const TaskBatch& batch) {
  std::vector<std::size_t> ids(batch.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  return Permutation(sorted_indices(batch, std::move(ids), SortOrder::LPT));
}

void PrecedenceSpec::validate(std::size_t n) const {
  std::set<std::size_t> tasks;
  for (const auto& [slot, task] : fixed) {
    if (slot >= n || task >= n) fail(ErrorCode::InvalidArgument, "precedence spec: slot or task out of range");
    if (!tasks.insert(task).second) fail(ErrorCode::InvalidArgument, "precedence spec: task pinned to two slots");
  }
}

bool PrecedenceSpec::admits(const Permutation& perm) const {
  for (const auto& [slot, task] : fixed)
    if (slot >= perm.size() || perm[slot] != task) return false;
  return true;
}

Permutation relative_sort(const TaskBatch& batch, const PrecedenceSpec& spec, SortOrder order) {
  const std::size_t n = batch.size();
  spec.validate(n);
  std::vector<bool> pinned(n, false);
  for (const auto& [slot, task] : spec.fixed) pinned[task] = true;
  std::vector<std::size_t> free_tasks;
  for (std::size_t i = 0; i < n; ++i)
    if (!pinned[i]) free_tasks.push_back(i);
  free_tasks = sorted_indices(batch, std::move(free_tasks), order);

  std::vector<std::size_t> out(n);
  std::size_t next = 0;
  for (std::size_t slot = 0; slot < n; ++slot) {
    const auto it = spec.fixed.find(slot);
    out[slot] = it != spec.fixed.end() ? it->second : free_tasks[next++];
  }
  return Permutation(std::move(out));
}

std::vector<Permutation> feasible_permutations(std::size_t n, const PrecedenceSpec& spec) {
  spec.validate(n);
  std::vector<Permutation> out;
  for (auto& p : all_permutations(n))
    if (spec.admits(p)) out.push_back(std::move(p));
  return out;
}

ExhaustiveResult best_sequence_exhaustive(const SequenceEvaluator& evaluator, const TaskBatch& batch,
                                          const std::optional<PrecedenceSpec>& spec, std::size_t max_n) {
  if (batch.size() > max_n)
    fail(ErrorCode::GuardExceeded, "best_sequence_exhaustive: " + std::to_string(batch.size()) +
                                       " tasks exceed the exhaustive limit of " + std::to_string(max_n) +
                                       "; use the SPT/LPT rules instead");
  const auto perms = feasible_permutations(batch.size(), spec.value_or(PrecedenceSpec{}));
  if (perms.empty()) fail(ErrorCode::InvalidArgument, "best_sequence_exhaustive: no feasible permutation");
  ExhaustiveResult res;
  res.values.reserve(perms.size());
  for (std::size_t i = 0; i < perms.size(); ++i) {
    const double v = evaluator(perms[i]);
    res.values.emplace_back(perms[i], v);
    if (i == 0 || better(v, res.best_value)) {
      res.best = perms[i];
      res.best_value = v;
    }
    if (i == 0 || better(res.worst_value, v)) {
      res.worst = perms[i];
      res.worst_value = v;
    }
  }
  return res;
}

}  // namespace nhpp_sched
