#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cqlin/database.hpp"
#include "cqlin/errors.hpp"
#include "cqlin/query.hpp"

namespace cqlin::detail {

// Backtracking matcher of an atom list into a database, compiled once.
// Variables live in numbered slots; slots listed as prebound must be filled
// by the caller before run().
class Matcher {
 public:
  Matcher(std::span<const Atom> atoms, std::span<const Symbol> prebound);

  const std::vector<Symbol>& slots() const { return slots_; }
  int slot_of(Symbol v) const;

  // Calls visit(values) per match; returns false if visit stopped the search.
  template <typename Visit>
  bool run(const Database& db, std::vector<Value>& values, Visit&& visit) const {
    return step(db, 0, values, visit);
  }

 private:
  struct Step {
    Symbol relation;
    std::size_t arity = 0;
    std::vector<std::uint32_t> bound_positions;
    std::vector<int> bound_slots;
    std::vector<std::pair<std::uint32_t, int>> assign;  // position, slot first bound here
    std::vector<std::pair<std::uint32_t, int>> check;   // position, slot bound earlier in this atom
  };

  template <typename Visit>
  bool step(const Database& db, std::size_t depth, std::vector<Value>& values, Visit& visit) const {
    if (depth == steps_.size()) return visit(static_cast<const std::vector<Value>&>(values));
    const Step& s = steps_[depth];
    const RowSet* rows = db.rows(s.relation);
    if (rows == nullptr) return true;
    if (rows->width() != s.arity) throw ArityError(s.relation.name(), rows->width(), s.arity);
    auto try_row = [&](std::span<const Value> row) -> bool {
      for (auto [pos, slot] : s.assign) values[slot] = row[pos];
      for (auto [pos, slot] : s.check) {
        if (values[slot] != row[pos]) return true;
      }
      return step(db, depth + 1, values, visit);
    };
    if (s.bound_positions.empty()) {
      for (std::uint32_t i = 0; i < rows->size(); ++i) {
        if (!try_row(rows->row(i))) return false;
      }
      return true;
    }
    std::vector<Value> key(s.bound_slots.size());
    for (std::size_t i = 0; i < key.size(); ++i) key[i] = values[s.bound_slots[i]];
    const RelationIndex& idx = db.index(s.relation, s.bound_positions);
    for (std::uint32_t id : idx.lookup(key)) {
      if (!try_row(rows->row(id))) return false;
    }
    return true;
  }

  std::vector<Symbol> slots_;
  std::vector<Step> steps_;
};

}  // namespace cqlin::detail
