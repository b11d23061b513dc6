#include "cqlin/chase.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <unordered_set>

#include "cqlin/errors.hpp"
#include "cqlin/homomorphism.hpp"
#include "cqlin/structure.hpp"
#include "matcher.hpp"

namespace cqlin {

namespace {

// One rule compiled for the chase: a full body matcher for the first round
// and, per body atom, a matcher for the remaining atoms seeded by a new fact.
struct CompiledTgd {
  struct Seed {
    const Atom* atom = nullptr;
    std::vector<Symbol> atom_vars;  // distinct, in argument order
    std::vector<int> arg_slot;      // slot in rest for each argument
    detail::Matcher rest;
    std::vector<int> frontier_slots;
  };

  std::vector<Symbol> frontier;
  std::vector<Symbol> existentials;
  detail::Matcher body;
  std::vector<int> body_frontier_slots;
  std::vector<std::vector<Atom>> rest_atoms;
  std::vector<Seed> seeds;

  explicit CompiledTgd(const Tgd& t)
      : frontier(t.frontier()), existentials(t.existentials()), body(t.body, {}) {
    for (Symbol v : frontier) body_frontier_slots.push_back(body.slot_of(v));
    rest_atoms.reserve(t.body.size());
    for (std::size_t i = 0; i < t.body.size(); ++i) {
      std::vector<Atom> rest;
      for (std::size_t j = 0; j < t.body.size(); ++j) {
        if (j != i) rest.push_back(t.body[j]);
      }
      rest_atoms.push_back(std::move(rest));
    }
    for (std::size_t i = 0; i < t.body.size(); ++i) {
      const Atom& a = t.body[i];
      std::vector<Symbol> vars = variables_of(std::span<const Atom>(&a, 1));
      detail::Matcher m(rest_atoms[i], vars);
      Seed s{&a, vars, {}, std::move(m), {}};
      for (Symbol v : a.args) s.arg_slot.push_back(s.rest.slot_of(v));
      for (Symbol v : frontier) s.frontier_slots.push_back(s.rest.slot_of(v));
      seeds.push_back(std::move(s));
    }
  }
};

class Chaser {
 public:
  Chaser(const Database& input, const TgdSet& tgds, std::uint64_t budget)
      : tgds_(tgds), budget_(budget) {
    result_.instance = input;
    for (const Tgd& t : tgds) {
      compiled_.emplace_back(t);
      seen_.emplace_back(compiled_.back().frontier.size());
    }
  }

  ChaseResult run() {
    for (std::size_t i = 0; i < tgds_.size(); ++i) discover_all(i);
    while (!queue_.empty()) {
      auto [tgd_index, event_id] = queue_.front();
      queue_.pop_front();
      const auto frontier_span = seen_[tgd_index].row(event_id);
      Tuple frontier(frontier_span.begin(), frontier_span.end());
      std::vector<Fact> head = head_facts(tgd_index, frontier);
      const bool applicable = std::any_of(head.begin(), head.end(),
                                          [&](const Fact& f) { return !result_.instance.contains(f); });
      if (!applicable) continue;
      if (result_.steps >= budget_) {
        result_.terminated = false;
        return std::move(result_);
      }
      ++result_.steps;
      result_.frontier_log.push_back({tgd_index, frontier});
      std::vector<Fact> fresh;
      for (Fact& f : head) {
        if (result_.instance.add_fact(f)) fresh.push_back(std::move(f));
      }
      for (const Fact& f : fresh) discover_from(f);
    }
    result_.terminated = true;
    return std::move(result_);
  }

 private:
  std::vector<Fact> head_facts(std::size_t tgd_index, const Tuple& frontier) const {
    const CompiledTgd& c = compiled_[tgd_index];
    std::map<Symbol, Value> image;
    for (std::size_t k = 0; k < c.frontier.size(); ++k) image.emplace(c.frontier[k], frontier[k]);
    for (Symbol z : c.existentials) {
      image.emplace(z, skolem_null(SkolemId{static_cast<std::uint32_t>(tgd_index), z, frontier}));
    }
    std::vector<Fact> out;
    for (const Atom& a : tgds_[tgd_index].head) {
      Fact f{a.relation, {}};
      for (Symbol v : a.args) f.args.push_back(image.at(v));
      out.push_back(std::move(f));
    }
    return out;
  }

  void enqueue(std::size_t tgd_index, std::span<const Value> frontier) {
    auto [id, inserted] = seen_[tgd_index].insert(frontier);
    if (inserted) queue_.emplace_back(tgd_index, id);
  }

  void discover_all(std::size_t tgd_index) {
    const CompiledTgd& c = compiled_[tgd_index];
    if (tgds_[tgd_index].body.empty()) {
      enqueue(tgd_index, {});
      return;
    }
    std::vector<Value> values(c.body.slots().size());
    Tuple frontier(c.frontier.size());
    c.body.run(result_.instance, values, [&](const std::vector<Value>& vals) {
      for (std::size_t k = 0; k < frontier.size(); ++k) frontier[k] = vals[c.body_frontier_slots[k]];
      enqueue(tgd_index, frontier);
      return true;
    });
  }

  void discover_from(const Fact& fact) {
    for (std::size_t t = 0; t < compiled_.size(); ++t) {
      const CompiledTgd& c = compiled_[t];
      for (const auto& seed : c.seeds) {
        if (seed.atom->relation != fact.relation || seed.atom->args.size() != fact.args.size()) continue;
        std::vector<Value> values(seed.rest.slots().size());
        bool consistent = true;
        for (std::size_t p = 0; p < fact.args.size() && consistent; ++p) {
          Value& slot = values[seed.arg_slot[p]];
          if (slot.id != 0 && slot != fact.args[p]) consistent = false;
          slot = fact.args[p];
        }
        if (!consistent) continue;
        Tuple frontier(c.frontier.size());
        seed.rest.run(result_.instance, values, [&](const std::vector<Value>& vals) {
          for (std::size_t k = 0; k < frontier.size(); ++k) frontier[k] = vals[seed.frontier_slots[k]];
          enqueue(t, frontier);
          return true;
        });
      }
    }
  }

  const TgdSet& tgds_;
  std::uint64_t budget_;
  ChaseResult result_;
  std::deque<CompiledTgd> compiled_;
  std::vector<RowSet> seen_;
  std::deque<std::pair<std::size_t, std::uint32_t>> queue_;
};

Symbol name_of(Value v) { return std::get<NamedConstant>(describe(v)).name; }

std::vector<Atom> dedup_atoms(const std::vector<Atom>& atoms) {
  std::vector<Atom> out;
  std::set<Atom> seen;
  for (const Atom& a : atoms) {
    if (seen.insert(a).second) out.push_back(a);
  }
  return out;
}

Atom apply(const Atom& a, const std::map<Symbol, Symbol>& h) {
  Atom out{a.relation, {}};
  for (Symbol v : a.args) {
    auto it = h.find(v);
    out.args.push_back(it == h.end() ? v : it->second);
  }
  return out;
}

std::vector<Atom> apply_all(const std::vector<Atom>& atoms, const std::map<Symbol, Symbol>& h) {
  std::vector<Atom> out;
  for (const Atom& a : atoms) out.push_back(apply(a, h));
  return dedup_atoms(out);
}

// Single-variable collapses y -> z whose image stays inside the atom set.
bool collapse_once(const ConjunctiveQuery& q, std::vector<Atom>& atoms) {
  std::set<Atom> present(atoms.begin(), atoms.end());
  const auto vars = variables_of(atoms);
  for (Symbol y : vars) {
    if (q.is_answer_var(y)) continue;
    for (Symbol z : vars) {
      if (z == y) continue;
      const std::map<Symbol, Symbol> h{{y, z}};
      bool inside = true;
      for (const Atom& a : atoms) {
        if (!present.count(apply(a, h))) {
          inside = false;
          break;
        }
      }
      if (inside) {
        atoms = apply_all(atoms, h);
        return true;
      }
    }
  }
  return false;
}

// Endomorphism fixing answer variables whose image misses atom i.
bool retract_once(const ConjunctiveQuery& q, std::vector<Atom>& atoms) {
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    std::vector<Atom> rest = atoms;
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
    const Database target = canonical_database(rest);
    Assignment fixed;
    bool answers_kept = true;
    for (Symbol x : q.answer_vars()) {
      if (!target.rank(constant(x))) answers_kept = false;
      fixed.emplace(x, constant(x));
    }
    if (!answers_kept) continue;
    auto homs = find_homomorphisms(std::span<const Atom>(atoms), target, fixed, 1);
    if (homs.empty()) continue;
    std::map<Symbol, Symbol> h;
    for (const auto& [v, val] : homs.front().mapping) h.emplace(v, name_of(val));
    atoms = apply_all(atoms, h);
    return true;
  }
  return false;
}

void require_terminating(const TgdSet& tgds) {
  if (!profile_tgds(tgds).chase_terminating()) {
    throw PreconditionError("TGD set is neither full nor non-recursive; equivalence is not decided");
  }
}

}  // namespace

ChaseResult skolem_chase(const Database& input, const TgdSet& tgds, std::uint64_t step_budget) {
  if (step_budget == 0) throw DomainError("chase step budget must be positive");
  return Chaser(input, tgds, step_budget).run();
}

Database chase_to_fixpoint(const Database& input, const TgdSet& tgds, std::uint64_t step_budget) {
  ChaseResult r = skolem_chase(input, tgds, step_budget);
  if (!r.terminated) {
    throw BudgetExhausted("chase did not terminate within " + std::to_string(step_budget) + " steps");
  }
  return std::move(r.instance);
}

ConjunctiveQuery chase_query(const ConjunctiveQuery& q, const TgdSet& tgds, std::uint64_t step_budget) {
  const Database base = canonical_database(q);
  const Database chased = chase_to_fixpoint(base, tgds, step_budget);
  std::vector<Atom> atoms = dedup_atoms(q.atoms());
  std::unordered_set<Symbol> used;
  for (Symbol v : q.variables()) used.insert(v);
  std::map<Value, Symbol> null_vars;
  std::size_t counter = 0;
  auto term = [&](Value v) {
    if (!is_null(v)) return name_of(v);
    auto it = null_vars.find(v);
    if (it != null_vars.end()) return it->second;
    const auto& skolem = std::get<NullValue>(describe(v)).skolem;
    std::string name = "n" + std::to_string(counter++) + "_" + skolem.head_variable.name();
    while (used.count(Symbol(name))) name += "_";
    Symbol s(name);
    used.insert(s);
    null_vars.emplace(v, s);
    return s;
  };
  for (const Fact& f : chased.facts()) {
    if (base.contains(f)) continue;
    Atom a{f.relation, {}};
    for (Value v : f.args) a.args.push_back(term(v));
    atoms.push_back(std::move(a));
  }
  return q.with_atoms(std::move(atoms));
}

ConjunctiveQuery core_of_query(const ConjunctiveQuery& q) {
  std::vector<Atom> atoms = dedup_atoms(q.atoms());
  while (collapse_once(q, atoms)) {
  }
  while (retract_once(q, atoms)) {
  }
  return q.with_atoms(std::move(atoms));
}

Database core_of_database(const Database& db) {
  Database current = db;
  for (;;) {
    bool changed = false;
    const std::vector<Fact> facts = current.facts();
    for (std::size_t i = 0; i < facts.size() && !changed; ++i) {
      Database rest;
      for (Symbol r : current.relations()) rest.declare(r, *current.arity(r));
      for (std::size_t j = 0; j < facts.size(); ++j) {
        if (j != i) rest.add_fact(facts[j]);
      }
      auto homs = find_homomorphisms(current, rest, {}, 1);
      if (homs.empty()) continue;
      const ValueMap& h = homs.front();
      Database image;
      for (Symbol r : current.relations()) image.declare(r, *current.arity(r));
      for (const Fact& f : facts) {
        Tuple args;
        for (Value v : f.args) args.push_back(h.at(v));
        image.add_fact(f.relation, args);
      }
      current = std::move(image);
      changed = true;
    }
    if (!changed) return current;
  }
}

bool equiv_wrt(const ConjunctiveQuery& q1, const ConjunctiveQuery& q2, const TgdSet& tgds) {
  require_terminating(tgds);
  if (q1.arity() != q2.arity()) {
    throw DomainError("queries have different arities: " + std::to_string(q1.arity()) + " and " +
                      std::to_string(q2.arity()));
  }
  auto maps_into = [&](const ConjunctiveQuery& from, const ConjunctiveQuery& to) {
    const Database target = chase_to_fixpoint(canonical_database(to), tgds);
    Assignment fixed;
    for (std::size_t i = 0; i < from.arity(); ++i) {
      const Value image = constant(to.answer_vars()[i]);
      auto [it, inserted] = fixed.emplace(from.answer_vars()[i], image);
      if (!inserted && it->second != image) return false;
    }
    return !find_homomorphisms(from, target, fixed, 1).empty();
  };
  return maps_into(q1, q2) && maps_into(q2, q1);
}

ConjunctiveQuery minimize_wrt(const ConjunctiveQuery& q, const TgdSet& tgds) {
  require_terminating(tgds);
  ConjunctiveQuery current = q.with_atoms(dedup_atoms(q.atoms()));
  for (bool removed = true; removed;) {
    removed = false;
    for (std::size_t i = 0; i < current.atoms().size(); ++i) {
      std::vector<Atom> rest = current.atoms();
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
      const auto remaining = variables_of(rest);
      const bool keeps_answers = std::all_of(current.answer_vars().begin(), current.answer_vars().end(), [&](Symbol x) {
        return std::find(remaining.begin(), remaining.end(), x) != remaining.end();
      });
      if (!keeps_answers) continue;
      ConjunctiveQuery candidate = current.with_atoms(std::move(rest));
      if (equiv_wrt(current, candidate, tgds)) {
        current = std::move(candidate);
        removed = true;
        break;
      }
    }
  }
  return current;
}

ConjunctiveQuery colored_query(const ConjunctiveQuery& q) {
  std::unordered_set<Symbol> used;
  for (const Atom& a : q.atoms()) used.insert(a.relation);
  std::vector<Atom> atoms = q.atoms();
  for (Symbol v : q.variables()) {
    std::string name = "A_" + v.name();
    for (std::size_t k = 1; used.count(Symbol(name)); ++k) name = "A" + std::to_string(k) + "_" + v.name();
    Symbol r(name);
    used.insert(r);
    atoms.push_back(Atom{r, {v}});
  }
  return q.with_atoms(std::move(atoms));
}

}  // namespace cqlin
