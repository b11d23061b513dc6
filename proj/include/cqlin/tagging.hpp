#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cqlin/database.hpp"
#include "cqlin/homomorphism.hpp"
#include "cqlin/query.hpp"

namespace cqlin {

struct SjfSource {
  Symbol relation;
  std::vector<Symbol> args;
};

// Self-join-free version: atom i over R becomes R__i with the same arguments.
struct SjfQuery {
  ConjunctiveQuery query;
  std::map<Symbol, SjfSource> renaming;
  std::vector<Symbol> atom_relation;  // new symbol per atom index
};

SjfQuery sjf_version(const ConjunctiveQuery& q);

// For atom i = R(ȳ) and each fact R__i(c̄), emits R(ȳ⊗c̄). Relations outside
// the sjf schema raise SchemaError.
Database tag_database(const Database& db, const SjfQuery& sjf);
Database tag_database(const Database& db, const ConjunctiveQuery& q);

// Keeps tuples tagged exactly with answer_vars, position by position.
AnswerSet untag_answers(const AnswerSet& answers, const std::vector<Symbol>& answer_vars);

// Copies every R-fact into each R__i derived from R.
Database expand_for_selfjoins(const Database& db, const SjfQuery& sjf);
// R(c̄) survives iff c̄ is in every R__i derived from R.
Database contract_from_selfjoins(const Database& db, const SjfQuery& sjf);

enum class CostClass { Linear, LinearPlusDomSquared };
std::string to_string(CostClass c);

enum class CompanionMethod { Flood, Filter };
enum class FloodCondition { HeadArity, Frontier };
std::string to_string(CompanionMethod m);
std::string to_string(FloodCondition c);

struct BuildStats {
  std::uint64_t steps = 0;  // facts read, candidate tuples visited, membership probes
  std::uint64_t filtered = 0;
  std::uint64_t flooded = 0;
};

// A tagging companion q' of q together with the recipe that turns a
// database over the schema of q'_sjf into a tagged database satisfying T.
struct CompanionResult {
  CompanionMethod method = CompanionMethod::Filter;
  ConjunctiveQuery companion;
  SjfQuery sjf;
  CostClass cost_class = CostClass::Linear;
  std::size_t k = 0;
  FloodCondition condition = FloodCondition::HeadArity;
  // Flooding only: atoms of ch_T(q') that are not atoms of q'.
  std::vector<Atom> flood_atoms;

  Database build(const Database& db, BuildStats* stats = nullptr) const;
};

// Flooding for non-recursive sets; NotApplicable outside the class.
CompanionResult companion_nonrecursive(const ConjunctiveQuery& q, const TgdSet& tgds, std::size_t k,
                                       FloodCondition condition);
// Filtering for frontier-guarded full sets; NotApplicable outside the class.
CompanionResult companion_fg_full(const ConjunctiveQuery& q, const TgdSet& tgds);

// Filtering first, then flooding with k = 1, then k = 2.
std::optional<CompanionResult> best_companion(const ConjunctiveQuery& q, const TgdSet& tgds);

}  // namespace cqlin
