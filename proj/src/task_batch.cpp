#include "nhpp_sched/task_batch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nhpp_sched/error.hpp"

namespace nhpp_sched {

TaskBatch::TaskBatch(std::vector<double> lengths) : lengths_(std::move(lengths)) {
  for (double a : lengths_)
    if (!(std::isfinite(a) && a > 0.0)) fail(ErrorCode::InvalidArgument, "task lengths must be finite and > 0");
}

double TaskBatch::total() const { return std::accumulate(lengths_.begin(), lengths_.end(), 0.0); }

double TaskBatch::max_length() const {
  return lengths_.empty() ? 0.0 : *std::max_element(lengths_.begin(), lengths_.end());
}

double TaskBatch::min_length() const {
  return lengths_.empty() ? 0.0 : *std::min_element(lengths_.begin(), lengths_.end());
}

bool TaskBatch::is_ascending() const { return std::is_sorted(lengths_.begin(), lengths_.end()); }

TaskBatch TaskBatch::sorted() const {
  auto copy = lengths_;
  std::stable_sort(copy.begin(), copy.end());
  return TaskBatch(std::move(copy));
}

void TaskBatch::require_ascending(const char* who) const {
  if (!is_ascending())
    fail(ErrorCode::InvalidArgument, std::string(who) + ": task batch must be in ascending order");
}

Permutation::Permutation(std::vector<std::size_t> order) : order_(std::move(order)) {
  std::vector<bool> seen(order_.size(), false);
  for (std::size_t v : order_) {
    if (v >= order_.size() || seen[v]) fail(ErrorCode::InvalidArgument, "permutation is not a bijection");
    seen[v] = true;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<std::size_t> o(n);
  std::iota(o.begin(), o.end(), std::size_t{0});
  return Permutation(std::move(o));
}

Permutation Permutation::reversal(std::size_t n) {
  std::vector<std::size_t> o(n);
  for (std::size_t k = 0; k < n; ++k) o[k] = n - 1 - k;
  return Permutation(std::move(o));
}

Permutation Permutation::from_one_based(const std::vector<std::size_t>& order) {
  std::vector<std::size_t> o;
  o.reserve(order.size());
  for (std::size_t v : order) {
    if (v == 0) fail(ErrorCode::InvalidArgument, "one-based permutation contains 0");
    o.push_back(v - 1);
  }
  return Permutation(std::move(o));
}

Permutation Permutation::inverse() const {
  std::vector<std::size_t> inv(order_.size());
  for (std::size_t k = 0; k < order_.size(); ++k) inv[order_[k]] = k;
  return Permutation(std::move(inv));
}

bool Permutation::is_identity() const {
  for (std::size_t k = 0; k < order_.size(); ++k)
    if (order_[k] != k) return false;
  return true;
}

std::string Permutation::to_string() const {
  std::string out;
  for (std::size_t k = 0; k < order_.size(); ++k) {
    if (k) out += ',';
    out += std::to_string(order_[k] + 1);
  }
  return out;
}

std::vector<double> sequence(const TaskBatch& batch, const Permutation& perm) {
  if (perm.size() != batch.size()) fail(ErrorCode::InvalidArgument, "permutation size does not match batch");
  std::vector<double> out(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) out[k] = batch[perm[k]];
  return out;
}

std::vector<double> prefix_sums(std::span<const double> xs) {
  std::vector<double> out(xs.size());
  std::partial_sum(xs.begin(), xs.end(), out.begin());
  return out;
}

std::vector<Permutation> all_permutations(std::size_t n) {
  std::vector<std::size_t> o(n);
  std::iota(o.begin(), o.end(), std::size_t{0});
  std::vector<Permutation> out;
  do {
    out.emplace_back(o);
  } while (std::next_permutation(o.begin(), o.end()));
  return out;
}

}  // namespace nhpp_sched
