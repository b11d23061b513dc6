#include "cqlin/engines.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

#include "cqlin/errors.hpp"
#include "cqlin/structure.hpp"
#include "relational.hpp"

namespace cqlin {

std::string to_string(EvalMode m) {
  switch (m) {
    case EvalMode::SingleTest: return "single_test";
    case EvalMode::AllTest: return "all_test";
    case EvalMode::Count: return "count";
    case EvalMode::DirectAccess: return "direct_access";
    case EvalMode::Enumerate: return "enumerate";
  }
  return "?";
}

std::optional<EvalMode> parse_eval_mode(std::string_view text) {
  if (text == "single" || text == "single_test" || text == "boolean") return EvalMode::SingleTest;
  if (text == "all" || text == "all_test") return EvalMode::AllTest;
  if (text == "count") return EvalMode::Count;
  if (text == "access" || text == "direct_access") return EvalMode::DirectAccess;
  if (text == "enum" || text == "enumerate") return EvalMode::Enumerate;
  return std::nullopt;
}

std::string to_string(EnginePath p) { return p == EnginePath::Tractable ? "tractable" : "fallback"; }

namespace detail {

std::vector<NodeRel> atom_relations(const ConjunctiveQuery& q, const Database& db, const std::map<Symbol, Value>& fixed,
                                    std::uint64_t& steps) {
  std::vector<NodeRel> nodes;
  for (const Atom& a : q.atoms()) nodes.push_back(atom_relation(a, db, fixed, steps));
  if (nodes.empty()) {
    NodeRel unit;
    unit.rows.insert(Tuple{});
    nodes.push_back(std::move(unit));
  }
  return nodes;
}

// Relations over answer variables only, fully reduced along a join tree;
// their join is exactly q(D).
struct FreeConnexPlan {
  std::vector<NodeRel> nodes;
  JoinTree tree;
};

std::unique_ptr<FreeConnexPlan> build_free_connex(const ConjunctiveQuery& q, const Database& db, std::uint64_t& steps) {
  if (!gyo_join_tree(q, JoinTreeMode::Full) || !is_free_connex(q).free_connex) return nullptr;
  const std::set<Symbol> protect(q.answer_vars().begin(), q.answer_vars().end());
  Elimination e = eliminate(atom_relations(q, db, {}, steps), protect, steps);
  if (!e.success) return nullptr;
  Hypergraph h;
  for (const NodeRel& n : e.nodes) h.push_back(n.vars);
  auto tree = gyo_join_tree(h);
  if (!tree) return nullptr;
  auto plan = std::make_unique<FreeConnexPlan>();
  plan->nodes = std::move(e.nodes);
  plan->tree = std::move(*tree);
  full_reduce(plan->nodes, plan->tree, steps);
  return plan;
}

// Answer-variable relations whose join is q(D); no join tree needed, so a
// cyclic body is fine as long as elimination succeeds.
std::unique_ptr<FreeConnexPlan> build_probe_plan(const ConjunctiveQuery& q, const Database& db, std::uint64_t& steps) {
  const std::set<Symbol> protect(q.answer_vars().begin(), q.answer_vars().end());
  Elimination e = eliminate(atom_relations(q, db, {}, steps), protect, steps);
  if (!e.success) return nullptr;
  auto plan = std::make_unique<FreeConnexPlan>();
  plan->nodes = std::move(e.nodes);
  plan->tree.parent.assign(plan->nodes.size(), std::nullopt);
  return plan;
}

std::unique_ptr<FreeConnexPlan> materialized_plan(const ConjunctiveQuery& q, const Database& db, std::uint64_t& steps) {
  auto plan = std::make_unique<FreeConnexPlan>();
  plan->nodes.push_back(materialize(atom_relations(q, db, {}, steps), q.answer_vars(), steps));
  plan->tree.parent.assign(1, std::nullopt);
  return plan;
}

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) throw DomainError("answer count exceeds 64 bits");
  return r;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_add_overflow(a, b, &r)) throw DomainError("answer count exceeds 64 bits");
  return r;
}

// Number of tuples in the join of a fully reduced acyclic plan.
std::uint64_t join_count(const FreeConnexPlan& plan, std::uint64_t& steps) {
  const std::size_t n = plan.nodes.size();
  std::vector<std::vector<std::uint64_t>> weight(n);
  for (std::size_t i = 0; i < n; ++i) weight[i].assign(plan.nodes[i].rows.size(), 1);
  std::uint64_t total = 1;
  for (std::size_t u : post_order(plan.tree)) {
    const NodeRel& rel = plan.nodes[u];
    if (!plan.tree.parent[u]) {
      std::uint64_t sum = 0;
      for (std::uint64_t w : weight[u]) {
        ++steps;
        sum = checked_add(sum, w);
      }
      total = checked_mul(total, sum);
      continue;
    }
    const std::size_t p = *plan.tree.parent[u];
    const NodeRel& prel = plan.nodes[p];
    const auto shared = shared_vars(rel.vars, prel.vars);
    const auto cpos = positions_of(rel.vars, shared);
    const auto ppos = positions_of(prel.vars, shared);
    RowSet keys(shared.size());
    std::vector<std::uint64_t> sums;
    Tuple k(shared.size());
    for (std::uint32_t id = 0; id < rel.rows.size(); ++id) {
      ++steps;
      const auto row = rel.rows.row(id);
      for (std::size_t i = 0; i < cpos.size(); ++i) k[i] = row[cpos[i]];
      auto [kid, inserted] = keys.insert(k);
      if (inserted) sums.push_back(0);
      sums[kid] = checked_add(sums[kid], weight[u][id]);
    }
    for (std::uint32_t id = 0; id < prel.rows.size(); ++id) {
      ++steps;
      const auto row = prel.rows.row(id);
      for (std::size_t i = 0; i < ppos.size(); ++i) k[i] = row[ppos[i]];
      auto kid = keys.find(k);
      weight[p][id] = kid ? checked_mul(weight[p][id], sums[*kid]) : 0;
    }
  }
  return total;
}

}  // namespace detail

using detail::FreeConnexPlan;
using detail::NodeRel;

SingleTestResult single_test(const ConjunctiveQuery& q, const Database& db, std::span<const Value> tuple) {
  if (tuple.size() != q.arity()) {
    throw DomainError("tuple has " + std::to_string(tuple.size()) + " values, query arity is " +
                      std::to_string(q.arity()));
  }
  SingleTestResult r;
  std::map<Symbol, Value> fixed;
  for (std::size_t i = 0; i < tuple.size(); ++i) fixed.emplace(q.answer_vars()[i], tuple[i]);
  auto nodes = detail::atom_relations(q, db, fixed, r.steps);
  if (gyo_join_tree(q, JoinTreeMode::Weak)) {
    auto e = detail::eliminate(std::move(nodes), {}, r.steps);
    if (e.success) {
      r.member = std::all_of(e.nodes.begin(), e.nodes.end(), [](const NodeRel& n) { return !n.rows.empty(); });
      return r;
    }
    nodes = detail::atom_relations(q, db, fixed, r.steps);
  }
  r.path = EnginePath::Fallback;
  r.member = !detail::materialize(std::move(nodes), {}, r.steps).rows.empty();
  return r;
}

AllTester::AllTester(const ConjunctiveQuery& q, const Database& db)
    : arity_(q.arity()), path_(EnginePath::Tractable), answer_vars_(q.answer_vars()) {
  plan_ = detail::build_probe_plan(q, db, preprocess_steps_);
  if (!plan_) {
    path_ = EnginePath::Fallback;
    plan_ = detail::materialized_plan(q, db, preprocess_steps_);
  }
}

AllTester::~AllTester() = default;
AllTester::AllTester(AllTester&&) noexcept = default;
AllTester& AllTester::operator=(AllTester&&) noexcept = default;

bool AllTester::test(std::span<const Value> tuple, std::uint64_t* steps) const {
  if (tuple.size() != arity_) {
    throw DomainError("tuple has " + std::to_string(tuple.size()) + " values, query arity is " +
                      std::to_string(arity_));
  }
  std::uint64_t local = 0;
  bool member = true;
  Tuple key;
  for (const NodeRel& n : plan_->nodes) {
    ++local;
    key.clear();
    for (std::uint32_t p : detail::positions_of(answer_vars_, n.vars)) key.push_back(tuple[p]);
    if (!n.rows.contains(key)) {
      member = false;
      break;
    }
  }
  if (steps) *steps += local;
  return member;
}

CountResult count_answers(const ConjunctiveQuery& q, const Database& db) {
  CountResult r;
  auto plan = detail::build_free_connex(q, db, r.steps);
  if (plan) {
    r.count = detail::join_count(*plan, r.steps);
    return r;
  }
  r.path = EnginePath::Fallback;
  r.count = detail::materialize(detail::atom_relations(q, db, {}, r.steps), q.answer_vars(), r.steps).rows.size();
  return r;
}

// ---------------------------------------------------------------------------
// Prefix counting and direct access.

PrefixConstraint PrefixConstraint::from_sets(const std::vector<std::vector<Value>>& sets, const Database& db) {
  PrefixConstraint c;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto& s = sets[i];
    if (s.empty()) throw DomainError("malformed prefix constraint: empty value set at position " + std::to_string(i + 1));
    if (i + 1 < sets.size()) {
      if (s.size() != 1) {
        throw DomainError("malformed prefix constraint: position " + std::to_string(i + 1) + " must hold one value");
      }
      c.fixed.push_back(s.front());
      continue;
    }
    std::vector<std::uint32_t> ranks;
    for (Value v : s) {
      auto r = db.rank(v);
      if (!r) throw DomainError("malformed prefix constraint: value " + render(v) + " is outside the domain");
      ranks.push_back(*r);
    }
    std::sort(ranks.begin(), ranks.end());
    ranks.erase(std::unique(ranks.begin(), ranks.end()), ranks.end());
    if (ranks.back() - ranks.front() + 1 != ranks.size()) {
      throw DomainError("malformed prefix constraint: the last value set is not contiguous in the domain order");
    }
    c.range = std::make_pair(db.domain()[ranks.front()], db.domain()[ranks.back()]);
  }
  return c;
}

namespace detail {

struct Layer {
  std::vector<std::size_t> key_idx;  // order positions of the key variables, increasing
  std::optional<std::size_t> parent;
  std::vector<std::size_t> children;
  RowSet keys;
  std::vector<std::uint32_t> start;  // bucket offsets, keys.size() + 1 entries
  std::vector<Value> value;
  std::vector<std::uint32_t> rank;
  std::vector<std::uint64_t> cum;  // inclusive prefix sums within each bucket
  RowSet members;                  // (key..., value)
};

struct LayeredPlan {
  std::vector<Layer> layers;

  std::optional<std::uint32_t> bucket(std::size_t j, const std::vector<Value>& prefix) const {
    const Layer& l = layers[j];
    Tuple k;
    for (std::size_t idx : l.key_idx) k.push_back(prefix[idx]);
    return l.keys.find(k);
  }
  std::uint64_t bucket_total(std::size_t j, std::uint32_t b) const {
    const Layer& l = layers[j];
    return l.start[b + 1] == l.start[b] ? 0 : l.cum[l.start[b + 1] - 1];
  }
  // Product of subtree totals for layers after r hanging off layers before r.
  std::uint64_t outside_factor(std::size_t r, const std::vector<Value>& prefix, std::uint64_t& steps) const {
    std::uint64_t f = 1;
    for (std::size_t j = r + 1; j < layers.size(); ++j) {
      const auto& p = layers[j].parent;
      if (p && *p >= r) continue;
      ++steps;
      auto b = bucket(j, prefix);
      if (!b) return 0;
      f *= bucket_total(j, *b);
    }
    return f;
  }
};

std::unique_ptr<LayeredPlan> build_layers(const FreeConnexPlan& fc, const std::vector<Symbol>& order, const Database& db,
                                          std::uint64_t& steps) {
  const std::size_t n = order.size();
  auto plan = std::make_unique<LayeredPlan>();
  plan->layers.resize(n);
  auto idx_of = [&](Symbol v) { return static_cast<std::size_t>(std::find(order.begin(), order.end(), v) - order.begin()); };
  const std::size_t dom = db.domain().size();
  for (std::size_t i = 0; i < n; ++i) {
    std::set<std::size_t> v_idx;
    for (const NodeRel& node : fc.nodes) {
      if (std::find(node.vars.begin(), node.vars.end(), order[i]) == node.vars.end()) continue;
      for (Symbol v : node.vars) {
        if (idx_of(v) <= i) v_idx.insert(idx_of(v));
      }
    }
    std::vector<Symbol> layout;
    Layer& layer = plan->layers[i];
    for (std::size_t idx : v_idx) {
      if (idx == i) continue;
      layer.key_idx.push_back(idx);
      layout.push_back(order[idx]);
    }
    layout.push_back(order[i]);
    const NodeRel* host = nullptr;
    for (const NodeRel& node : fc.nodes) {
      if (subset_of(layout, node.vars)) {
        host = &node;
        break;
      }
    }
    if (host == nullptr) return nullptr;
    if (!layer.key_idx.empty()) layer.parent = layer.key_idx.back();
    if (layer.parent) plan->layers[*layer.parent].children.push_back(i);
    NodeRel rows = project(*host, layout, steps);
    const std::size_t kw = layer.key_idx.size();

    // Counting sort on the rank of the layer variable, then a stable split
    // into buckets keeps every bucket sorted by rank.
    std::vector<std::uint32_t> by_rank(dom + 1, 0);
    std::vector<std::uint32_t> row_rank(rows.rows.size());
    for (std::uint32_t id = 0; id < rows.rows.size(); ++id) {
      ++steps;
      row_rank[id] = *db.rank(rows.rows.row(id)[kw]);
      ++by_rank[row_rank[id] + 1];
    }
    for (std::size_t k = 1; k <= dom; ++k) by_rank[k] += by_rank[k - 1];
    std::vector<std::uint32_t> sorted(rows.rows.size());
    for (std::uint32_t id = 0; id < rows.rows.size(); ++id) sorted[by_rank[row_rank[id]]++] = id;

    layer.keys = RowSet(kw);
    std::vector<std::uint32_t> key_of(rows.rows.size());
    std::vector<std::uint32_t> bucket_size;
    for (std::uint32_t id : sorted) {
      ++steps;
      const auto row = rows.rows.row(id);
      auto [kid, inserted] = layer.keys.insert(row.first(kw));
      if (inserted) bucket_size.push_back(0);
      ++bucket_size[kid];
      key_of[id] = kid;
    }
    layer.start.assign(layer.keys.size() + 1, 0);
    for (std::size_t b = 0; b < bucket_size.size(); ++b) layer.start[b + 1] = layer.start[b] + bucket_size[b];
    std::vector<std::uint32_t> fill(layer.start.begin(), layer.start.end() - 1);
    layer.value.resize(rows.rows.size());
    layer.rank.resize(rows.rows.size());
    layer.cum.assign(rows.rows.size(), 1);
    layer.members = RowSet(kw + 1);
    for (std::uint32_t id : sorted) {
      const auto row = rows.rows.row(id);
      const std::uint32_t at = fill[key_of[id]]++;
      layer.value[at] = row[kw];
      layer.rank[at] = row_rank[id];
      layer.members.insert(row);
    }
  }

  // Weights, last layer first: an entry weighs the product of its children's
  // bucket totals under the entry's values.
  for (std::size_t i = n; i-- > 0;) {
    Layer& layer = plan->layers[i];
    std::vector<Value> prefix(n);
    for (std::uint32_t b = 0; b < layer.keys.size(); ++b) {
      const auto key = layer.keys.row(b);
      for (std::size_t k = 0; k < layer.key_idx.size(); ++k) prefix[layer.key_idx[k]] = key[k];
      std::uint64_t running = 0;
      for (std::uint32_t at = layer.start[b]; at < layer.start[b + 1]; ++at) {
        ++steps;
        prefix[i] = layer.value[at];
        std::uint64_t w = 1;
        for (std::size_t c : layer.children) {
          auto cb = plan->bucket(c, prefix);
          w = checked_mul(w, cb ? plan->bucket_total(c, *cb) : 0);
        }
        running = checked_add(running, w);
        layer.cum[at] = running;
      }
    }
  }
  return plan;
}

}  // namespace detail

PrefixCounter::PrefixCounter(const ConjunctiveQuery& q, std::vector<Symbol> order, const Database& db)
    : db_(&db), answer_vars_(q.answer_vars()), order_(std::move(order)), path_(EnginePath::Tractable) {
  {
    std::set<Symbol> seen;
    for (Symbol v : order_) {
      if (!q.is_answer_var(v)) throw DomainError("order variable " + v.name() + " is not an answer variable");
      if (!seen.insert(v).second) throw DomainError("order lists " + v.name() + " twice");
    }
    if (order_.size() != q.arity()) throw DomainError("order must list every answer variable");
  }
  if (!find_disruptive_trio(q, order_)) {
    auto fc = detail::build_free_connex(q, db, preprocess_steps_);
    if (fc) plan_ = detail::build_layers(*fc, order_, db, preprocess_steps_);
    if (plan_) {
      if (order_.empty()) {
        total_ = std::all_of(fc->nodes.begin(), fc->nodes.end(), [](const NodeRel& n) { return !n.rows.empty(); }) ? 1 : 0;
      } else {
        total_ = 1;
        std::vector<Value> prefix(order_.size());
        for (std::size_t j = 0; j < plan_->layers.size(); ++j) {
          if (plan_->layers[j].parent) continue;
          auto b = plan_->bucket(j, prefix);
          total_ = detail::checked_mul(total_, b ? plan_->bucket_total(j, *b) : 0);
        }
      }
      return;
    }
  }
  path_ = EnginePath::Fallback;
  const NodeRel answers =
      detail::materialize(detail::atom_relations(q, db, {}, preprocess_steps_), order_, preprocess_steps_);
  for (std::uint32_t id = 0; id < answers.rows.size(); ++id) {
    const auto row = answers.rows.row(id);
    sorted_.emplace_back(row.begin(), row.end());
  }
  std::sort(sorted_.begin(), sorted_.end(), [&](const Tuple& a, const Tuple& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto ra = *db.rank(a[i]);
      const auto rb = *db.rank(b[i]);
      if (ra != rb) return ra < rb;
    }
    return false;
  });
  preprocess_steps_ += sorted_.size();
  total_ = sorted_.size();
}

PrefixCounter::~PrefixCounter() = default;
PrefixCounter::PrefixCounter(PrefixCounter&&) noexcept = default;
PrefixCounter& PrefixCounter::operator=(PrefixCounter&&) noexcept = default;

std::uint64_t PrefixCounter::count(const PrefixConstraint& c, std::uint64_t* steps) const {
  std::vector<Value> fixed = c.fixed;
  std::optional<std::pair<Value, Value>> range = c.range;
  if (!range && !fixed.empty()) {
    range = std::make_pair(fixed.back(), fixed.back());
    fixed.pop_back();
  }
  if (!range) return total_;
  const std::size_t r = fixed.size();
  if (r >= order_.size()) throw DomainError("prefix constraint is longer than the order");
  const auto lo = db_->rank(range->first);
  const auto hi = db_->rank(range->second);
  if (!lo || !hi) throw DomainError("malformed prefix constraint: range end outside the domain");
  if (*lo > *hi) throw DomainError("malformed prefix constraint: empty range");
  std::uint64_t local = 0;
  std::uint64_t result = 0;
  if (path_ == EnginePath::Fallback) {
    for (const Tuple& t : sorted_) {
      ++local;
      if (!std::equal(fixed.begin(), fixed.end(), t.begin())) continue;
      const auto rk = *db_->rank(t[r]);
      if (rk >= *lo && rk <= *hi) ++result;
    }
  } else {
    std::vector<Value> prefix(order_.size());
    std::copy(fixed.begin(), fixed.end(), prefix.begin());
    bool ok = true;
    Tuple member;
    for (std::size_t j = 0; j < r && ok; ++j) {
      ++local;
      const auto& layer = plan_->layers[j];
      member.clear();
      for (std::size_t idx : layer.key_idx) member.push_back(prefix[idx]);
      member.push_back(prefix[j]);
      ok = layer.members.contains(member);
    }
    auto b = ok ? plan_->bucket(r, prefix) : std::nullopt;
    if (b) {
      const auto& layer = plan_->layers[r];
      auto first = layer.rank.begin() + layer.start[*b];
      auto last = layer.rank.begin() + layer.start[*b + 1];
      local += 2;
      auto from = std::lower_bound(first, last, *lo) - layer.rank.begin();
      auto to = std::upper_bound(first, last, *hi) - layer.rank.begin();
      if (to > from) {
        const std::uint64_t before = from == layer.start[*b] ? 0 : layer.cum[from - 1];
        result = (layer.cum[to - 1] - before) * plan_->outside_factor(r, prefix, local);
      }
    }
  }
  if (steps) *steps += local;
  return result;
}

std::optional<Tuple> PrefixCounter::access(std::int64_t i, std::uint64_t* steps) const {
  if (i <= 0) throw DomainError("answer index must be positive");
  const auto index = static_cast<std::uint64_t>(i);
  if (index > total_) return std::nullopt;
  std::uint64_t local = 0;
  std::vector<Value> by_order(order_.size());
  if (path_ == EnginePath::Fallback) {
    ++local;
    by_order = sorted_[index - 1];
  } else {
    std::uint64_t remaining = index;
    for (std::size_t r = 0; r < order_.size(); ++r) {
      const auto& layer = plan_->layers[r];
      auto b = plan_->bucket(r, by_order);
      ++local;
      const std::uint64_t factor = plan_->outside_factor(r, by_order, local);
      std::uint32_t lo = layer.start[*b];
      std::uint32_t hi = layer.start[*b + 1] - 1;
      // Smallest entry whose cumulative count reaches the remaining index.
      while (lo < hi) {
        ++local;
        const std::uint32_t mid = lo + (hi - lo) / 2;
        if (layer.cum[mid] * factor >= remaining) {
          hi = mid;
        } else {
          lo = mid + 1;
        }
      }
      if (lo > layer.start[*b]) remaining -= layer.cum[lo - 1] * factor;
      by_order[r] = layer.value[lo];
    }
  }
  if (steps) *steps += local;
  Tuple out(answer_vars_.size());
  for (std::size_t k = 0; k < order_.size(); ++k) {
    out[std::find(answer_vars_.begin(), answer_vars_.end(), order_[k]) - answer_vars_.begin()] = by_order[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Enumeration.

namespace {

class ListStream : public AnswerStream {
 public:
  explicit ListStream(std::vector<Tuple> answers) : answers_(std::move(answers)) {}

  std::optional<Tuple> next() override {
    ++steps_;
    if (pos_ >= answers_.size()) return std::nullopt;
    return answers_[pos_++];
  }
  std::uint64_t steps() const override { return steps_; }

 private:
  std::vector<Tuple> answers_;
  std::size_t pos_ = 0;
  std::uint64_t steps_ = 0;
};

// Odometer over the reduced relations in preorder: each node walks the rows
// that agree with its parent's current row.
class TreeStream : public AnswerStream {
 public:
  TreeStream(std::unique_ptr<FreeConnexPlan> plan, const std::vector<Symbol>& answer_vars, std::uint64_t& steps)
      : plan_(std::move(plan)) {
    const auto& tree = plan_->tree;
    const std::size_t n = tree.size();
    auto post = detail::post_order(tree);
    order_.assign(post.rbegin(), post.rend());  // parents before children
    std::vector<std::size_t> slot_of(n);
    for (std::size_t s = 0; s < order_.size(); ++s) slot_of[order_[s]] = s;
    slots_.resize(order_.size());
    for (std::size_t s = 0; s < order_.size(); ++s) {
      Slot& slot = slots_[s];
      const NodeRel& rel = plan_->nodes[order_[s]];
      if (!tree.parent[order_[s]]) {
        slot.row_ids.resize(rel.rows.size());
        for (std::uint32_t id = 0; id < rel.rows.size(); ++id) slot.row_ids[id] = id;
        slot.start = {0, static_cast<std::uint32_t>(rel.rows.size())};
        slot.keys = RowSet(0);
        slot.keys.insert(Tuple{});
        continue;
      }
      slot.parent = slot_of[*tree.parent[order_[s]]];
      const NodeRel& prel = plan_->nodes[*tree.parent[order_[s]]];
      const auto shared = detail::shared_vars(rel.vars, prel.vars);
      slot.parent_pos = detail::positions_of(prel.vars, shared);
      const auto own = detail::positions_of(rel.vars, shared);
      slot.keys = RowSet(shared.size());
      std::vector<std::uint32_t> key_of(rel.rows.size());
      std::vector<std::uint32_t> size;
      Tuple k(shared.size());
      for (std::uint32_t id = 0; id < rel.rows.size(); ++id) {
        ++steps;
        const auto row = rel.rows.row(id);
        for (std::size_t i = 0; i < own.size(); ++i) k[i] = row[own[i]];
        auto [kid, inserted] = slot.keys.insert(k);
        if (inserted) size.push_back(0);
        ++size[kid];
        key_of[id] = kid;
      }
      slot.start.assign(size.size() + 1, 0);
      for (std::size_t b = 0; b < size.size(); ++b) slot.start[b + 1] = slot.start[b] + size[b];
      std::vector<std::uint32_t> fill(slot.start.begin(), slot.start.end() - 1);
      slot.row_ids.resize(rel.rows.size());
      for (std::uint32_t id = 0; id < rel.rows.size(); ++id) slot.row_ids[fill[key_of[id]]++] = id;
    }
    for (Symbol x : answer_vars) {
      for (std::size_t s = 0; s < order_.size(); ++s) {
        const auto& vars = plan_->nodes[order_[s]].vars;
        auto it = std::find(vars.begin(), vars.end(), x);
        if (it != vars.end()) {
          output_.emplace_back(s, static_cast<std::uint32_t>(it - vars.begin()));
          break;
        }
      }
    }
  }

  std::optional<Tuple> next() override {
    if (done_) {
      ++steps_;
      return std::nullopt;
    }
    std::size_t from = 0;
    if (started_) {
      std::size_t t = slots_.size();
      while (t > 0) {
        ++steps_;
        Slot& s = slots_[t - 1];
        if (++s.cur < s.end) break;
        --t;
      }
      if (t == 0) {
        done_ = true;
        return std::nullopt;
      }
      from = t;
    }
    started_ = true;
    for (std::size_t s = from; s < slots_.size(); ++s) {
      ++steps_;
      if (!resolve(s)) {
        done_ = true;
        return std::nullopt;
      }
    }
    Tuple out(output_.size());
    for (std::size_t i = 0; i < output_.size(); ++i) {
      const auto [s, pos] = output_[i];
      out[i] = current_row(s)[pos];
    }
    return out;
  }

  std::uint64_t steps() const override { return steps_; }

 private:
  struct Slot {
    std::optional<std::size_t> parent;
    std::vector<std::uint32_t> parent_pos;
    RowSet keys;
    std::vector<std::uint32_t> start;
    std::vector<std::uint32_t> row_ids;
    std::uint32_t cur = 0;
    std::uint32_t end = 0;
  };

  std::span<const Value> current_row(std::size_t s) const {
    return plan_->nodes[order_[s]].rows.row(slots_[s].row_ids[slots_[s].cur]);
  }

  bool resolve(std::size_t s) {
    Slot& slot = slots_[s];
    std::optional<std::uint32_t> b = 0;
    if (slot.parent) {
      key_.clear();
      const auto prow = current_row(*slot.parent);
      for (std::uint32_t p : slot.parent_pos) key_.push_back(prow[p]);
      b = slot.keys.find(key_);
    }
    if (!b || slot.start[*b] == slot.start[*b + 1]) return false;
    slot.cur = slot.start[*b];
    slot.end = slot.start[*b + 1];
    return true;
  }

  std::unique_ptr<FreeConnexPlan> plan_;
  std::vector<std::size_t> order_;
  std::vector<Slot> slots_;
  std::vector<std::pair<std::size_t, std::uint32_t>> output_;
  Tuple key_;
  bool started_ = false;
  bool done_ = false;
  std::uint64_t steps_ = 0;
};

class DedupStream : public AnswerStream {
 public:
  DedupStream(std::unique_ptr<AnswerStream> inner, std::size_t m) : inner_(std::move(inner)), m_(m) {}

  std::optional<Tuple> next() override {
    for (std::size_t k = 0; k < m_ && !inner_done_; ++k) pull();
    // Only reachable with a broken multiplicity promise.
    while (pending_.empty() && !inner_done_) pull();
    ++own_steps_;
    if (pending_.empty()) return std::nullopt;
    Tuple t = std::move(pending_.front());
    pending_.pop_front();
    return t;
  }

  std::uint64_t steps() const override { return inner_->steps() + own_steps_; }

 private:
  void pull() {
    ++own_steps_;
    auto t = inner_->next();
    if (!t) {
      inner_done_ = true;
      return;
    }
    std::size_t& seen = seen_[*t];
    if (++seen > m_) {
      throw ContractViolation("answer repeated more than " + std::to_string(m_) + " times");
    }
    if (seen == 1) pending_.push_back(std::move(*t));
  }

  std::unique_ptr<AnswerStream> inner_;
  std::size_t m_;
  std::map<Tuple, std::size_t> seen_;
  std::deque<Tuple> pending_;
  bool inner_done_ = false;
  std::uint64_t own_steps_ = 0;
};

}  // namespace

std::unique_ptr<AnswerStream> list_stream(std::vector<Tuple> answers) {
  return std::make_unique<ListStream>(std::move(answers));
}

Enumeration enumerate(const ConjunctiveQuery& q, const Database& db) {
  Enumeration e;
  auto plan = detail::build_free_connex(q, db, e.preprocess_steps);
  if (plan) {
    e.stream = std::make_unique<TreeStream>(std::move(plan), q.answer_vars(), e.preprocess_steps);
    return e;
  }
  e.path = EnginePath::Fallback;
  const NodeRel answers =
      detail::materialize(detail::atom_relations(q, db, {}, e.preprocess_steps), q.answer_vars(), e.preprocess_steps);
  std::vector<Tuple> list;
  for (std::uint32_t id = 0; id < answers.rows.size(); ++id) {
    const auto row = answers.rows.row(id);
    list.emplace_back(row.begin(), row.end());
  }
  e.stream = list_stream(std::move(list));
  return e;
}

std::unique_ptr<AnswerStream> cheaters_dedup(std::unique_ptr<AnswerStream> inner, std::size_t m) {
  if (m == 0) throw DomainError("multiplicity bound must be positive");
  return std::make_unique<DedupStream>(std::move(inner), m);
}

std::uint64_t cheater_delay_bound(std::size_t m, std::uint64_t inner_max_delay) {
  return static_cast<std::uint64_t>(m) * (inner_max_delay + 1) + 1;
}

DelayProfile drain(AnswerStream& stream) {
  DelayProfile p;
  std::uint64_t prev = stream.steps();
  const std::uint64_t first = prev;
  for (;;) {
    auto t = stream.next();
    const std::uint64_t now = stream.steps();
    p.max_delay = std::max(p.max_delay, now - prev);
    prev = now;
    if (!t) break;
    p.answers.push_back(std::move(*t));
  }
  p.total_steps = prev - first;
  return p;
}

}  // namespace cqlin
