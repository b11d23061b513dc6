#include "cqlin/database.hpp"

#include <algorithm>

#include "cqlin/errors.hpp"

namespace cqlin {

std::span<const std::uint32_t> RelationIndex::lookup(std::span<const Value> key) const {
  auto id = keys_.find(key);
  if (!id) return {};
  return buckets_[*id];
}

void RelationIndex::add(std::uint32_t row_id, std::span<const Value> row) {
  Value key[16];
  std::vector<Value> big;
  Value* k = key;
  if (positions_.size() > 16) {
    big.resize(positions_.size());
    k = big.data();
  }
  for (std::size_t i = 0; i < positions_.size(); ++i) k[i] = row[positions_[i]];
  auto [id, inserted] = keys_.insert({k, positions_.size()});
  if (inserted) buckets_.emplace_back();
  buckets_[id].push_back(row_id);
}

Database::Database(const Database& other)
    : order_(other.order_),
      relations_(other.relations_),
      fact_count_(other.fact_count_),
      domain_(other.domain_),
      ranks_(other.ranks_) {}

Database& Database::operator=(const Database& other) {
  if (this != &other) {
    Database copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Database::RelationData& Database::data_for(Symbol relation, std::size_t arity) {
  auto it = relations_.find(relation);
  if (it == relations_.end()) {
    order_.push_back(relation);
    it = relations_.emplace(relation, RelationData{arity, RowSet(arity)}).first;
  } else if (it->second.arity != arity) {
    throw ArityError(relation.name(), it->second.arity, arity);
  }
  return it->second;
}

void Database::declare(Symbol relation, std::size_t arity) { data_for(relation, arity); }

bool Database::add_fact(Symbol relation, std::span<const Value> args) {
  auto& data = data_for(relation, args.size());
  auto [row_id, inserted] = data.rows.insert(args);
  if (!inserted) return false;
  ++fact_count_;
  for (Value v : args) {
    if (ranks_.try_emplace(v, static_cast<std::uint32_t>(domain_.size())).second) domain_.push_back(v);
  }
  std::lock_guard lock(*index_mutex_);
  for (auto it = indexes_.lower_bound({relation, {}}); it != indexes_.end() && it->first.first == relation; ++it) {
    it->second->add(row_id, data.rows.row(row_id));
  }
  return true;
}

bool Database::contains(Symbol relation, std::span<const Value> args) const {
  auto it = relations_.find(relation);
  return it != relations_.end() && it->second.arity == args.size() && it->second.rows.contains(args);
}

std::optional<std::size_t> Database::arity(Symbol relation) const {
  auto it = relations_.find(relation);
  if (it == relations_.end()) return std::nullopt;
  return it->second.arity;
}

const RowSet* Database::rows(Symbol relation) const {
  auto it = relations_.find(relation);
  return it == relations_.end() ? nullptr : &it->second.rows;
}

std::size_t Database::relation_size(Symbol relation) const {
  const RowSet* r = rows(relation);
  return r ? r->size() : 0;
}

std::vector<Fact> Database::facts() const {
  std::vector<Fact> out;
  out.reserve(fact_count_);
  for (Symbol rel : order_) {
    const RowSet& rs = relations_.at(rel).rows;
    for (std::uint32_t i = 0; i < rs.size(); ++i) {
      auto r = rs.row(i);
      out.push_back({rel, Tuple(r.begin(), r.end())});
    }
  }
  return out;
}

std::optional<std::uint32_t> Database::rank(Value v) const {
  auto it = ranks_.find(v);
  if (it == ranks_.end()) return std::nullopt;
  return it->second;
}

void Database::set_domain_order(std::vector<Value> order) {
  if (order.size() != domain_.size()) throw DomainError("domain order must be a permutation of the active domain");
  std::unordered_map<Value, std::uint32_t> ranks;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (!ranks_.count(order[i]) || !ranks.emplace(order[i], static_cast<std::uint32_t>(i)).second) {
      throw DomainError("domain order must be a permutation of the active domain");
    }
  }
  domain_ = std::move(order);
  ranks_ = std::move(ranks);
}

const RelationIndex& Database::index(Symbol relation, const std::vector<std::uint32_t>& positions) const {
  std::lock_guard lock(*index_mutex_);
  auto key = std::make_pair(relation, positions);
  if (auto it = indexes_.find(key); it != indexes_.end()) return *it->second;
  auto idx = std::make_unique<RelationIndex>(positions);
  if (auto it = relations_.find(relation); it != relations_.end()) {
    const RowSet& rs = it->second.rows;
    for (std::uint32_t i = 0; i < rs.size(); ++i) idx->add(i, rs.row(i));
  }
  return *indexes_.emplace(std::move(key), std::move(idx)).first->second;
}

bool operator==(const Database& a, const Database& b) {
  if (a.fact_count_ != b.fact_count_) return false;
  for (const auto& [rel, data] : a.relations_) {
    for (std::uint32_t i = 0; i < data.rows.size(); ++i) {
      if (!b.contains(rel, data.rows.row(i))) return false;
    }
  }
  return true;
}

}  // namespace cqlin
