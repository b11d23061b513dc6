#include "cqlin/homomorphism.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "matcher.hpp"

namespace cqlin {
namespace detail {

Matcher::Matcher(std::span<const Atom> atoms, std::span<const Symbol> prebound) {
  std::unordered_map<Symbol, int> slot;
  auto slot_for = [&](Symbol v) {
    auto [it, inserted] = slot.try_emplace(v, static_cast<int>(slots_.size()));
    if (inserted) slots_.push_back(v);
    return it->second;
  };
  std::vector<bool> bound;
  for (Symbol v : prebound) slot_for(v);
  for (const Atom& a : atoms) {
    for (Symbol v : a.args) slot_for(v);
  }
  bound.assign(slots_.size(), false);
  for (Symbol v : prebound) bound[slot.at(v)] = true;

  // Greedy order: most distinct bound variables first, then fewest unbound,
  // then lowest index.
  std::vector<bool> used(atoms.size(), false);
  for (std::size_t n = 0; n < atoms.size(); ++n) {
    std::size_t best = atoms.size();
    long best_bound = -1;
    long best_free = 0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (used[i]) continue;
      std::unordered_set<int> b, f;
      for (Symbol v : atoms[i].args) (bound[slot.at(v)] ? b : f).insert(slot.at(v));
      const long nb = static_cast<long>(b.size());
      const long nf = static_cast<long>(f.size());
      if (nb > best_bound || (nb == best_bound && nf < best_free)) {
        best = i;
        best_bound = nb;
        best_free = nf;
      }
    }
    used[best] = true;
    const Atom& a = atoms[best];
    Step s;
    s.relation = a.relation;
    s.arity = a.args.size();
    std::vector<bool> local = bound;
    for (std::uint32_t p = 0; p < a.args.size(); ++p) {
      const int sl = slot.at(a.args[p]);
      if (bound[sl]) {
        s.bound_positions.push_back(p);
        s.bound_slots.push_back(sl);
      } else if (!local[sl]) {
        s.assign.emplace_back(p, sl);
        local[sl] = true;
      } else {
        s.check.emplace_back(p, sl);
      }
    }
    bound = std::move(local);
    steps_.push_back(std::move(s));
  }
}

int Matcher::slot_of(Symbol v) const {
  auto it = std::find(slots_.begin(), slots_.end(), v);
  return it == slots_.end() ? -1 : static_cast<int>(it - slots_.begin());
}

}  // namespace detail

namespace {

std::vector<Symbol> fixed_vars(const Assignment& fixed) {
  std::vector<Symbol> out;
  for (const auto& [v, _] : fixed) out.push_back(v);
  return out;
}

}  // namespace

void for_each_homomorphism(std::span<const Atom> atoms, const Database& db, const Assignment& fixed,
                           const std::function<bool(const Assignment&)>& visit) {
  const auto pre = fixed_vars(fixed);
  detail::Matcher m(atoms, pre);
  std::vector<Value> values(m.slots().size());
  for (const auto& [v, val] : fixed) values[m.slot_of(v)] = val;
  Assignment current;
  m.run(db, values, [&](const std::vector<Value>& vals) {
    current.clear();
    for (std::size_t i = 0; i < vals.size(); ++i) current.emplace(m.slots()[i], vals[i]);
    return visit(current);
  });
}

std::vector<Homomorphism> find_homomorphisms(std::span<const Atom> atoms, const Database& db, const Assignment& fixed,
                                             std::optional<std::size_t> limit) {
  std::vector<Homomorphism> out;
  if (limit && *limit == 0) return out;
  for_each_homomorphism(atoms, db, fixed, [&](const Assignment& a) {
    out.push_back({a});
    return !limit || out.size() < *limit;
  });
  return out;
}

std::vector<Homomorphism> find_homomorphisms(const ConjunctiveQuery& q, const Database& db, const Assignment& fixed,
                                             std::optional<std::size_t> limit) {
  return find_homomorphisms(std::span<const Atom>(q.atoms()), db, fixed, limit);
}

std::vector<ValueMap> find_homomorphisms(const Database& src, const Database& dst, const ValueMap& fixed,
                                         std::optional<std::size_t> limit) {
  // Each source term becomes a private variable named by its id.
  std::map<Value, Symbol> var_of;
  std::map<Symbol, Value> value_of;
  auto var = [&](Value v) {
    auto it = var_of.find(v);
    if (it != var_of.end()) return it->second;
    Symbol s("__term" + std::to_string(v.id));
    var_of.emplace(v, s);
    value_of.emplace(s, v);
    return s;
  };
  std::vector<Atom> atoms;
  for (const Fact& f : src.facts()) {
    Atom a{f.relation, {}};
    for (Value v : f.args) a.args.push_back(var(v));
    atoms.push_back(std::move(a));
  }
  Assignment pre;
  for (const auto& [from, to] : fixed) {
    if (var_of.count(from)) pre.emplace(var_of.at(from), to);
  }
  std::vector<ValueMap> out;
  if (limit && *limit == 0) return out;
  for_each_homomorphism(atoms, dst, pre, [&](const Assignment& a) {
    ValueMap m;
    for (const auto& [s, v] : a) m.emplace(value_of.at(s), v);
    out.push_back(std::move(m));
    return !limit || out.size() < *limit;
  });
  return out;
}

Database canonical_database(std::span<const Atom> atoms) {
  Database db;
  for (const Atom& a : atoms) {
    Tuple args;
    for (Symbol v : a.args) args.push_back(constant(v));
    db.add_fact(a.relation, args);
  }
  return db;
}

Database canonical_database(const ConjunctiveQuery& q) { return canonical_database(std::span<const Atom>(q.atoms())); }

AnswerSet brute_force_answers(const ConjunctiveQuery& q, const Database& db) {
  detail::Matcher m(q.atoms(), {});
  std::vector<int> answer_slots;
  for (Symbol x : q.answer_vars()) answer_slots.push_back(m.slot_of(x));
  std::vector<Value> values(m.slots().size());
  AnswerSet out;
  Tuple t(answer_slots.size());
  m.run(db, values, [&](const std::vector<Value>& vals) {
    for (std::size_t i = 0; i < answer_slots.size(); ++i) t[i] = vals[answer_slots[i]];
    out.insert(t);
    return true;
  });
  return out;
}

SatisfactionResult satisfies_tgds(const Database& db, const TgdSet& tgds) {
  for (std::size_t i = 0; i < tgds.size(); ++i) {
    const Tgd& tgd = tgds[i];
    const auto frontier = tgd.frontier();
    detail::Matcher body(tgd.body, {});
    detail::Matcher head(tgd.head, frontier);
    std::vector<int> body_slots;
    for (Symbol v : frontier) body_slots.push_back(body.slot_of(v));
    std::vector<Value> values(body.slots().size());
    std::vector<Value> head_values(head.slots().size());
    std::optional<TgdViolation> violation;
    body.run(db, values, [&](const std::vector<Value>& vals) {
      for (std::size_t k = 0; k < frontier.size(); ++k) head_values[k] = vals[body_slots[k]];
      bool found = false;
      head.run(db, head_values, [&](const std::vector<Value>&) {
        found = true;
        return false;
      });
      if (found) return true;
      TgdViolation v;
      v.tgd_index = i;
      for (std::size_t k = 0; k < vals.size(); ++k) v.body_match.emplace(body.slots()[k], vals[k]);
      for (int s : body_slots) v.frontier_image.push_back(vals[s]);
      violation = std::move(v);
      return false;
    });
    if (violation) return {false, std::move(violation)};
  }
  return {true, std::nullopt};
}

}  // namespace cqlin
