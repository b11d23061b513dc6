#include "cqlin/tagging.hpp"

#include <algorithm>
#include <set>

#include "cqlin/chase.hpp"
#include "cqlin/errors.hpp"
#include "cqlin/structure.hpp"

namespace cqlin {

SjfQuery sjf_version(const ConjunctiveQuery& q) {
  SjfQuery out;
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < q.atoms().size(); ++i) {
    const Atom& a = q.atoms()[i];
    Symbol r(a.relation.name() + "__" + std::to_string(i));
    out.renaming.emplace(r, SjfSource{a.relation, a.args});
    out.atom_relation.push_back(r);
    atoms.push_back(Atom{r, a.args});
  }
  out.query = q.with_atoms(std::move(atoms));
  return out;
}

namespace {

void check_sjf_schema(const Database& db, const SjfQuery& sjf) {
  for (Symbol r : db.relations()) {
    auto it = sjf.renaming.find(r);
    if (it == sjf.renaming.end()) {
      if (db.relation_size(r) == 0) continue;
      throw SchemaError("relation " + r.name() + " is not part of the self-join-free schema");
    }
    if (*db.arity(r) != it->second.args.size()) throw ArityError(r.name(), it->second.args.size(), *db.arity(r));
  }
}

void tag_into(Database& out, const Database& db, const SjfQuery& sjf, BuildStats* stats) {
  for (std::size_t i = 0; i < sjf.atom_relation.size(); ++i) {
    const SjfSource& src = sjf.renaming.at(sjf.atom_relation[i]);
    out.declare(src.relation, src.args.size());
  }
  Tuple args;
  for (std::size_t i = 0; i < sjf.atom_relation.size(); ++i) {
    const Symbol r = sjf.atom_relation[i];
    const SjfSource& src = sjf.renaming.at(r);
    const RowSet* rows = db.rows(r);
    if (rows == nullptr) continue;
    for (std::uint32_t id = 0; id < rows->size(); ++id) {
      if (stats) ++stats->steps;
      const auto row = rows->row(id);
      args.clear();
      for (std::size_t p = 0; p < row.size(); ++p) args.push_back(tagged(src.args[p], row[p]));
      out.add_fact(src.relation, args);
    }
  }
}

std::size_t count_distinct(const std::vector<Value>& vals, std::size_t upto) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < upto; ++i) {
    if (std::find(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(i), vals[i]) ==
        vals.begin() + static_cast<std::ptrdiff_t>(i)) {
      ++n;
    }
  }
  return n;
}

// Emits R(ȳ⊗c̄) for c̄ over dom in lexicographic order, using at most
// max_distinct distinct values when given.
void flood_atom(Database& out, const Atom& atom, const std::vector<Value>& dom, std::optional<std::size_t> max_distinct,
                BuildStats* stats) {
  const std::size_t n = atom.args.size();
  std::vector<Value> chosen(n);
  Tuple args(n);
  auto emit = [&] {
    for (std::size_t p = 0; p < n; ++p) args[p] = tagged(atom.args[p], chosen[p]);
    if (out.add_fact(atom.relation, args) && stats) ++stats->flooded;
  };
  if (n == 0) {
    out.add_fact(atom.relation, args);
    if (stats) ++stats->flooded;
    return;
  }
  auto rec = [&](auto& self, std::size_t pos) -> void {
    if (pos == n) {
      emit();
      return;
    }
    const bool saturated = max_distinct && count_distinct(chosen, pos) >= *max_distinct;
    if (saturated) {
      // Only values already chosen, in domain order.
      std::vector<Value> prior(chosen.begin(), chosen.begin() + static_cast<std::ptrdiff_t>(pos));
      std::sort(prior.begin(), prior.end());
      prior.erase(std::unique(prior.begin(), prior.end()), prior.end());
      std::vector<std::pair<std::size_t, Value>> ranked;
      for (Value v : prior) {
        const auto pos_in_dom = std::find(dom.begin(), dom.end(), v) - dom.begin();
        ranked.emplace_back(static_cast<std::size_t>(pos_in_dom), v);
      }
      std::sort(ranked.begin(), ranked.end());
      for (auto [_, v] : ranked) {
        if (stats) ++stats->steps;
        chosen[pos] = v;
        self(self, pos + 1);
      }
      return;
    }
    for (Value v : dom) {
      if (stats) ++stats->steps;
      chosen[pos] = v;
      self(self, pos + 1);
    }
  };
  rec(rec, 0);
}

}  // namespace

Database tag_database(const Database& db, const SjfQuery& sjf) {
  check_sjf_schema(db, sjf);
  Database out;
  tag_into(out, db, sjf, nullptr);
  return out;
}

Database tag_database(const Database& db, const ConjunctiveQuery& q) { return tag_database(db, sjf_version(q)); }

AnswerSet untag_answers(const AnswerSet& answers, const std::vector<Symbol>& answer_vars) {
  AnswerSet out;
  for (const Tuple& t : answers) {
    if (t.size() != answer_vars.size()) continue;
    Tuple plain;
    bool keep = true;
    for (std::size_t i = 0; i < t.size() && keep; ++i) {
      const auto* tc = std::get_if<TaggedConstant>(&describe(t[i]));
      if (tc == nullptr || tc->tag != answer_vars[i]) {
        keep = false;
      } else {
        plain.push_back(tc->value);
      }
    }
    if (keep) out.insert(std::move(plain));
  }
  return out;
}

Database expand_for_selfjoins(const Database& db, const SjfQuery& sjf) {
  Database out;
  for (Symbol r : sjf.atom_relation) {
    const SjfSource& src = sjf.renaming.at(r);
    out.declare(r, src.args.size());
    const RowSet* rows = db.rows(src.relation);
    if (rows == nullptr) continue;
    if (rows->width() != src.args.size()) throw ArityError(src.relation.name(), src.args.size(), rows->width());
    for (std::uint32_t id = 0; id < rows->size(); ++id) out.add_fact(r, rows->row(id));
  }
  return out;
}

Database contract_from_selfjoins(const Database& db, const SjfQuery& sjf) {
  check_sjf_schema(db, sjf);
  std::map<Symbol, std::vector<Symbol>> derived;
  std::vector<Symbol> order;
  for (Symbol r : sjf.atom_relation) {
    const Symbol base = sjf.renaming.at(r).relation;
    if (!derived.count(base)) order.push_back(base);
    derived[base].push_back(r);
  }
  Database out;
  for (Symbol base : order) {
    const auto& parts = derived.at(base);
    out.declare(base, sjf.renaming.at(parts.front()).args.size());
    const RowSet* first = db.rows(parts.front());
    if (first == nullptr) continue;
    for (std::uint32_t id = 0; id < first->size(); ++id) {
      const auto row = first->row(id);
      const bool everywhere = std::all_of(parts.begin() + 1, parts.end(), [&](Symbol p) { return db.contains(p, row); });
      if (everywhere) out.add_fact(base, row);
    }
  }
  return out;
}

std::string to_string(CostClass c) {
  return c == CostClass::Linear ? "LINEAR" : "LINEAR_PLUS_DOM_SQUARED";
}

std::string to_string(CompanionMethod m) { return m == CompanionMethod::Flood ? "flood" : "filter"; }

std::string to_string(FloodCondition c) { return c == FloodCondition::HeadArity ? "head_arity" : "frontier"; }

Database CompanionResult::build(const Database& db, BuildStats* stats) const {
  check_sjf_schema(db, sjf);
  Database out;
  if (method == CompanionMethod::Flood) {
    tag_into(out, db, sjf, stats);
    const std::optional<std::size_t> limit =
        condition == FloodCondition::Frontier ? std::optional<std::size_t>(k) : std::nullopt;
    for (const Atom& a : flood_atoms) flood_atom(out, a, db.domain(), limit, stats);
    return out;
  }

  // Filtering: drop R_ȳ(ā) when no substitution maps ȳ to ā, or when some
  // atom S_z̄ with z̄ inside ȳ misses σ(z̄). Judged against the input, one pass.
  const auto& atoms = sjf.query.atoms();
  Database kept;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const Atom& a = atoms[i];
    kept.declare(a.relation, a.args.size());
    struct Probe {
      Symbol relation;
      std::vector<std::size_t> positions;  // into ȳ
    };
    std::vector<Probe> probes;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      if (j == i) continue;
      Probe p{atoms[j].relation, {}};
      bool inside = true;
      for (Symbol z : atoms[j].args) {
        auto it = std::find(a.args.begin(), a.args.end(), z);
        if (it == a.args.end()) {
          inside = false;
          break;
        }
        p.positions.push_back(static_cast<std::size_t>(it - a.args.begin()));
      }
      if (inside) probes.push_back(std::move(p));
    }
    // First position of each argument, to test the substitution.
    std::vector<std::size_t> first_pos;
    for (Symbol v : a.args) first_pos.push_back(static_cast<std::size_t>(std::find(a.args.begin(), a.args.end(), v) - a.args.begin()));

    const RowSet* rows = db.rows(a.relation);
    if (rows == nullptr) continue;
    Tuple probe_row;
    for (std::uint32_t id = 0; id < rows->size(); ++id) {
      if (stats) ++stats->steps;
      const auto row = rows->row(id);
      bool keep = true;
      for (std::size_t p = 0; p < row.size() && keep; ++p) keep = row[p] == row[first_pos[p]];
      for (std::size_t k2 = 0; k2 < probes.size() && keep; ++k2) {
        probe_row.clear();
        for (std::size_t p : probes[k2].positions) probe_row.push_back(row[p]);
        if (stats) ++stats->steps;
        keep = db.contains(probes[k2].relation, probe_row);
      }
      if (keep) {
        kept.add_fact(a.relation, row);
      } else if (stats) {
        ++stats->filtered;
      }
    }
  }
  tag_into(out, kept, sjf, nullptr);
  return out;
}

CompanionResult companion_nonrecursive(const ConjunctiveQuery& q, const TgdSet& tgds, std::size_t k,
                                       FloodCondition condition) {
  if (k != 1 && k != 2) throw NotApplicable("flooding is offered for k = 1 or k = 2 only");
  const TgdSetProfile profile = profile_tgds(tgds);
  if (!profile.non_recursive) throw NotApplicable("flooding needs a non-recursive TGD set");
  if (condition == FloodCondition::HeadArity && profile.max_head_arity > k) {
    throw NotApplicable("head relations have arity " + std::to_string(profile.max_head_arity) + " > " +
                        std::to_string(k));
  }
  if (condition == FloodCondition::Frontier && profile.max_frontier > k) {
    throw NotApplicable("a TGD has " + std::to_string(profile.max_frontier) + " frontier variables > " +
                        std::to_string(k));
  }
  CompanionResult r;
  r.method = CompanionMethod::Flood;
  r.companion = minimize_wrt(q, tgds);
  r.sjf = sjf_version(r.companion);
  r.k = k;
  r.condition = condition;
  r.cost_class = k == 1 ? CostClass::Linear : CostClass::LinearPlusDomSquared;
  const ConjunctiveQuery chased = chase_query(r.companion, tgds);
  r.flood_atoms.assign(chased.atoms().begin() + static_cast<std::ptrdiff_t>(r.companion.atoms().size()),
                       chased.atoms().end());
  return r;
}

CompanionResult companion_fg_full(const ConjunctiveQuery& q, const TgdSet& tgds) {
  const TgdSetProfile profile = profile_tgds(tgds);
  if (!profile.full || !profile.frontier_guarded) {
    throw NotApplicable("filtering needs a full, frontier-guarded TGD set");
  }
  CompanionResult r;
  r.method = CompanionMethod::Filter;
  r.companion = core_of_query(chase_query(q, tgds));
  r.sjf = sjf_version(r.companion);
  r.cost_class = CostClass::Linear;
  return r;
}

std::optional<CompanionResult> best_companion(const ConjunctiveQuery& q, const TgdSet& tgds) {
  try {
    return companion_fg_full(q, tgds);
  } catch (const NotApplicable&) {
  }
  for (std::size_t k : {1u, 2u}) {
    for (FloodCondition c : {FloodCondition::HeadArity, FloodCondition::Frontier}) {
      try {
        return companion_nonrecursive(q, tgds, k, c);
      } catch (const NotApplicable&) {
      }
    }
  }
  return std::nullopt;
}

}  // namespace cqlin
