#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace nhpp_sched {

/// Task lengths a_1..a_n in their original index order.
class TaskBatch {
 public:
  TaskBatch() = default;
  explicit TaskBatch(std::vector<double> lengths);

  std::size_t size() const { return lengths_.size(); }
  bool empty() const { return lengths_.empty(); }
  double operator[](std::size_t i) const { return lengths_[i]; }
  const std::vector<double>& lengths() const { return lengths_; }
  double total() const;
  double max_length() const;
  double min_length() const;

  /// Non-decreasing, the canonical a_1 <= ... <= a_n layout.
  bool is_ascending() const;
  TaskBatch sorted() const;
  /// Throws InvalidArgument unless the batch is in canonical order.
  void require_ascending(const char* who) const;

 private:
  std::vector<double> lengths_;
};

/// A processing order: position k processes task order()[k] (0-based ids).
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<std::size_t> order);
  static Permutation identity(std::size_t n);
  static Permutation reversal(std::size_t n);
  static Permutation from_one_based(const std::vector<std::size_t>& order);

  std::size_t size() const { return order_.size(); }
  std::size_t operator[](std::size_t k) const { return order_[k]; }
  const std::vector<std::size_t>& order() const { return order_; }
  Permutation inverse() const;
  bool is_identity() const;

  /// One-based, comma separated ("2,1,3").
  std::string to_string() const;

  auto operator<=>(const Permutation&) const = default;

 private:
  std::vector<std::size_t> order_;
};

/// Lengths in processing order.
std::vector<double> sequence(const TaskBatch& batch, const Permutation& perm);

/// Running sums S_k = x_0 + ... + x_k.
std::vector<double> prefix_sums(std::span<const double> xs);

/// All n! permutations in lexicographic order.
std::vector<Permutation> all_permutations(std::size_t n);

}  // namespace nhpp_sched
