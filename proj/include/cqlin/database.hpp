#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cqlin/row_set.hpp"
#include "cqlin/symbol.hpp"
#include "cqlin/value.hpp"

namespace cqlin {

struct Fact {
  Symbol relation;
  Tuple args;

  friend bool operator==(const Fact&, const Fact&) = default;
};

// Hash index of one relation on a set of argument positions.
class RelationIndex {
 public:
  RelationIndex(std::vector<std::uint32_t> positions) : positions_(std::move(positions)), keys_(positions_.size()) {}

  const std::vector<std::uint32_t>& positions() const { return positions_; }
  std::span<const std::uint32_t> lookup(std::span<const Value> key) const;

  void add(std::uint32_t row_id, std::span<const Value> row);

 private:
  std::vector<std::uint32_t> positions_;
  RowSet keys_;
  std::vector<std::vector<std::uint32_t>> buckets_;
};

class Database {
 public:
  Database() = default;
  Database(const Database& other);
  Database& operator=(const Database& other);
  Database(Database&&) noexcept = default;
  Database& operator=(Database&&) noexcept = default;

  // Declares a relation; throws ArityError if already declared differently.
  void declare(Symbol relation, std::size_t arity);

  // Returns false for a duplicate. Declares the relation on first use.
  bool add_fact(Symbol relation, std::span<const Value> args);
  bool add_fact(const Fact& fact) { return add_fact(fact.relation, fact.args); }

  bool contains(Symbol relation, std::span<const Value> args) const;
  bool contains(const Fact& fact) const { return contains(fact.relation, fact.args); }

  std::optional<std::size_t> arity(Symbol relation) const;
  // Relations in declaration order.
  const std::vector<Symbol>& relations() const { return order_; }
  // Null for an undeclared relation.
  const RowSet* rows(Symbol relation) const;
  std::size_t relation_size(Symbol relation) const;

  std::size_t size() const { return fact_count_; }
  bool empty() const { return fact_count_ == 0; }
  std::vector<Fact> facts() const;

  // Active domain in first-appearance order; this order is the base order
  // for lexicographic answer ranking.
  const std::vector<Value>& domain() const { return domain_; }
  std::optional<std::uint32_t> rank(Value v) const;
  // Replaces the domain order; must be a permutation of the current domain.
  void set_domain_order(std::vector<Value> order);

  // Lazily built and cached; kept in sync by add_fact.
  const RelationIndex& index(Symbol relation, const std::vector<std::uint32_t>& positions) const;

  friend bool operator==(const Database& a, const Database& b);

 private:
  struct RelationData {
    std::size_t arity = 0;
    RowSet rows;
  };

  RelationData& data_for(Symbol relation, std::size_t arity);

  std::vector<Symbol> order_;
  std::unordered_map<Symbol, RelationData> relations_;
  std::size_t fact_count_ = 0;
  std::vector<Value> domain_;
  std::unordered_map<Value, std::uint32_t> ranks_;

  mutable std::unique_ptr<std::mutex> index_mutex_ = std::make_unique<std::mutex>();
  mutable std::map<std::pair<Symbol, std::vector<std::uint32_t>>, std::unique_ptr<RelationIndex>> indexes_;
};

}  // namespace cqlin
