#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "cqlin/database.hpp"
#include "cqlin/query.hpp"

namespace cqlin {

using Assignment = std::map<Symbol, Value>;

struct Homomorphism {
  Assignment mapping;

  friend bool operator==(const Homomorphism&, const Homomorphism&) = default;
};

using AnswerSet = std::set<Tuple>;

// Calls visit for each homomorphism from atoms into db that extends fixed;
// stops early when visit returns false. Atoms are matched most-bound-first.
void for_each_homomorphism(std::span<const Atom> atoms, const Database& db, const Assignment& fixed,
                           const std::function<bool(const Assignment&)>& visit);

std::vector<Homomorphism> find_homomorphisms(std::span<const Atom> atoms, const Database& db,
                                             const Assignment& fixed = {},
                                             std::optional<std::size_t> limit = std::nullopt);
std::vector<Homomorphism> find_homomorphisms(const ConjunctiveQuery& q, const Database& db,
                                             const Assignment& fixed = {},
                                             std::optional<std::size_t> limit = std::nullopt);

// Homomorphisms between databases: every term of src is treated as a variable.
using ValueMap = std::map<Value, Value>;
std::vector<ValueMap> find_homomorphisms(const Database& src, const Database& dst, const ValueMap& fixed = {},
                                         std::optional<std::size_t> limit = std::nullopt);

// Variables become constants named after themselves.
Database canonical_database(const ConjunctiveQuery& q);
Database canonical_database(std::span<const Atom> atoms);

AnswerSet brute_force_answers(const ConjunctiveQuery& q, const Database& db);

struct TgdViolation {
  std::size_t tgd_index = 0;
  Assignment body_match;
  std::vector<Value> frontier_image;
};

struct SatisfactionResult {
  bool satisfied = true;
  std::optional<TgdViolation> witness;

  explicit operator bool() const { return satisfied; }
};

SatisfactionResult satisfies_tgds(const Database& db, const TgdSet& tgds);

}  // namespace cqlin
