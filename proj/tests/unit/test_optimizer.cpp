#include <doctest.h>

#include <cmath>

#include "nhpp_sched/error.hpp"
#include "nhpp_sched/exact_solver.hpp"
#include "nhpp_sched/optimizer.hpp"
#include "nhpp_sched/single_failure.hpp"

using namespace nhpp_sched;

TEST_CASE("SPT and LPT") {
  const TaskBatch b({2.0, 4.0, 6.0, 8.0});
  CHECK(spt(b) == Permutation::identity(4));
  CHECK(lpt(b) == Permutation::reversal(4));
  CHECK(spt(TaskBatch({3.0, 3.0, 1.0})) == Permutation({2, 0, 1}));
  CHECK(lpt(TaskBatch({3.0, 3.0, 1.0})) == Permutation({0, 1, 2}));
  CHECK(spt(TaskBatch({5.0})) == Permutation::identity(1));
  const TaskBatch mixed({4.0, 1.0, 7.0, 2.5});
  const auto s = spt(mixed).order();
  const auto l = lpt(mixed).order();
  CHECK(std::equal(s.begin(), s.end(), l.rbegin()));
  CHECK(sort_order_name(SortOrder::LPT) == "LPT");
}

TEST_CASE("relative sorting around pinned tasks") {
  const TaskBatch b({1.0, 5.0, 2.0});
  CHECK(relative_sort(b, {}, SortOrder::SPT) == spt(b));
  CHECK(relative_sort(b, {}, SortOrder::LPT) == lpt(b));

  PrecedenceSpec all_fixed{{{0, 2}, {1, 0}, {2, 1}}};
  CHECK(relative_sort(b, all_fixed, SortOrder::SPT) == Permutation({2, 0, 1}));

  PrecedenceSpec middle{{{1, 1}}};
  CHECK(relative_sort(b, middle, SortOrder::SPT) == Permutation({0, 1, 2}));
  CHECK(relative_sort(b, middle, SortOrder::LPT) == Permutation({2, 1, 0}));
  CHECK(feasible_permutations(3, middle).size() == 2);
  for (const auto& p : feasible_permutations(3, middle)) CHECK(middle.admits(p));

  // Sorting the already-sorted sequence again changes nothing.
  const auto once = relative_sort(b, middle, SortOrder::SPT);
  const TaskBatch reordered(sequence(b, once));
  PrecedenceSpec moved{{{1, 1}}};
  CHECK(relative_sort(reordered, moved, SortOrder::SPT) == Permutation::identity(3));

  CHECK_THROWS_AS((PrecedenceSpec{{{0, 0}, {1, 0}}}.validate(3)), Error);
  CHECK_THROWS_AS((PrecedenceSpec{{{5, 0}}}.validate(3)), Error);
}

TEST_CASE("exhaustive search") {
  const TaskBatch b({1.0, 2.0, 3.0});
  const auto flat = best_sequence_exhaustive([&](const Permutation&) { return constant_rate_batch(0.4, b); }, b);
  CHECK(flat.best == Permutation::identity(3));
  CHECK(flat.values.size() == 6);
  for (const auto& [p, v] : flat.values) CHECK(std::abs(v - flat.best_value) < 1e-9);

  const auto sf = best_sequence_exhaustive(
      [&](const Permutation& p) {
        return expected_makespan_single_failure(RateModel::constant(1.0), b, p).expected_makespan;
      },
      b);
  CHECK(sf.best == Permutation::identity(3));
  CHECK(sf.worst_value >= sf.best_value);

  const auto v = special_two_task(1.0, 2.0, 1.0);
  const TaskBatch two({1.0, 2.0});
  const auto z = best_sequence_exhaustive(
      [&](const Permutation& p) { return p.is_identity() ? v.a_first : v.b_first; }, two);
  CHECK(z.best == Permutation::reversal(2));

  PrecedenceSpec pin{{{0, 2}}};
  const auto pinned = best_sequence_exhaustive(
      [&](const Permutation& p) { return static_cast<double>(p[1]); }, b, pin);
  CHECK(pinned.best == Permutation({2, 0, 1}));
  CHECK(pinned.values.size() == 2);

  try {
    best_sequence_exhaustive([](const Permutation&) { return 0.0; }, TaskBatch(std::vector<double>(11, 1.0)));
    FAIL("expected guard");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GuardExceeded);
  }
}
