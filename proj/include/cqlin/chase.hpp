#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cqlin/database.hpp"
#include "cqlin/query.hpp"

namespace cqlin {

inline constexpr std::uint64_t kDefaultChaseBudget = 1'000'000;

struct ChaseEvent {
  std::size_t tgd_index = 0;
  Tuple frontier;

  friend bool operator==(const ChaseEvent&, const ChaseEvent&) = default;
};

struct ChaseResult {
  Database instance;
  bool terminated = false;
  std::uint64_t steps = 0;
  std::vector<ChaseEvent> frontier_log;  // in application order
};

// Skolem chase. A rule fires at a frontier image c̄ when its body matches
// and the head facts with the Skolem nulls for c̄ are not all present yet.
// Events are processed first come, first served; reaching the budget with
// an applicable event left stops the run with terminated = false.
ChaseResult skolem_chase(const Database& input, const TgdSet& tgds, std::uint64_t step_budget = kDefaultChaseBudget);

// skolem_chase that throws BudgetExhausted instead of returning a partial run.
Database chase_to_fixpoint(const Database& input, const TgdSet& tgds, std::uint64_t step_budget = kDefaultChaseBudget);

// ch_T(q) read back as a query with the same answer variables. Atoms of q
// come first (duplicates dropped), then the chase atoms in instance order;
// each null becomes a fresh variable n<k>_<var>.
ConjunctiveQuery chase_query(const ConjunctiveQuery& q, const TgdSet& tgds,
                             std::uint64_t step_budget = kDefaultChaseBudget);

// Minimal retract of the query under endomorphisms that fix answer
// variables. Cheap single-variable collapses run before the retract search.
ConjunctiveQuery core_of_query(const ConjunctiveQuery& q);

// Minimal subinstance homomorphically equivalent to db.
Database core_of_database(const Database& db);

// Throws PreconditionError unless tgds are full or non-recursive, and
// DomainError when the arities differ.
bool equiv_wrt(const ConjunctiveQuery& q1, const ConjunctiveQuery& q2, const TgdSet& tgds);

// Drops atoms in index order while equivalence under tgds holds,
// restarting after each removal.
ConjunctiveQuery minimize_wrt(const ConjunctiveQuery& q, const TgdSet& tgds);

// Adds A_x(x) for every variable x; relation names are made fresh if needed.
ConjunctiveQuery colored_query(const ConjunctiveQuery& q);

}  // namespace cqlin
