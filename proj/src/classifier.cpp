#include "cqlin/classifier.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include "cqlin/catalog.hpp"
#include "cqlin/chase.hpp"
#include "cqlin/errors.hpp"
#include "cqlin/tagging.hpp"

namespace cqlin {

std::string to_string(Status s) {
  switch (s) {
    case Status::Tractable: return "TRACTABLE";
    case Status::ConditionallyHard: return "CONDITIONALLY_HARD";
    case Status::Open: return "OPEN";
  }
  return "OPEN";
}

std::string to_string(Hypothesis h) {
  switch (h) {
    case Hypothesis::Hyperclique: return "HYPERCLIQUE";
    case Hypothesis::Triangle: return "TRIANGLE";
    case Hypothesis::Bmm: return "BMM";
    case Hypothesis::Seth: return "SETH";
    case Hypothesis::LogHyperclique: return "LOG_HYPERCLIQUE";
    case Hypothesis::Vutd: return "VUTD";
  }
  return "HYPERCLIQUE";
}

// ---------------------------------------------------------------- isomorphism

namespace {

struct Bijection {
  std::map<Symbol, Symbol> fwd;
  std::map<Symbol, Symbol> back;

  bool bind(Symbol a, Symbol b) {
    if (auto it = fwd.find(a); it != fwd.end()) return it->second == b;
    if (back.count(b)) return false;
    fwd.emplace(a, b);
    back.emplace(b, a);
    return true;
  }
};

struct MatchState {
  Bijection rel;
  Bijection var;
};

bool map_atom(MatchState& s, const Atom& a, const Atom& b) {
  if (a.args.size() != b.args.size() || !s.rel.bind(a.relation, b.relation)) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (!s.var.bind(a.args[i], b.args[i])) return false;
  }
  return true;
}

using Continuation = std::function<bool(const MatchState&)>;

// Bijection between the atom lists a and b extending s; done decides whether
// a complete match is accepted.
bool match_atoms(const std::vector<Atom>& a, const std::vector<Atom>& b, std::size_t i, std::vector<bool>& used,
                 const MatchState& s, const Continuation& done) {
  if (i == a.size()) return done(s);
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (used[j]) continue;
    MatchState next = s;
    if (!map_atom(next, a[i], b[j])) continue;
    used[j] = true;
    const bool ok = match_atoms(a, b, i + 1, used, next, done);
    used[j] = false;
    if (ok) return true;
  }
  return false;
}

bool match_tgds(const TgdSet& t1, const TgdSet& t2, std::size_t i, std::vector<bool>& used, const Bijection& rel,
                MatchState* out) {
  if (i == t1.size()) {
    out->rel = rel;
    return true;
  }
  for (std::size_t j = 0; j < t2.size(); ++j) {
    if (used[j] || t1[i].body.size() != t2[j].body.size() || t1[i].head.size() != t2[j].head.size()) continue;
    MatchState local{rel, {}};
    std::vector<bool> used_body(t2[j].body.size(), false);
    std::vector<bool> used_head(t2[j].head.size(), false);
    used[j] = true;
    const bool ok = match_atoms(t1[i].body, t2[j].body, 0, used_body, local, [&](const MatchState& after_body) {
      return match_atoms(t1[i].head, t2[j].head, 0, used_head, after_body, [&](const MatchState& after_head) {
        return match_tgds(t1, t2, i + 1, used, after_head.rel, out);
      });
    });
    used[j] = false;
    if (ok) return true;
  }
  return false;
}

std::multiset<std::size_t> arity_profile(const std::vector<Atom>& atoms) {
  std::multiset<std::size_t> out;
  for (const Atom& a : atoms) out.insert(a.args.size());
  return out;
}

std::multiset<std::pair<std::size_t, std::size_t>> tgd_profile(const TgdSet& t) {
  std::multiset<std::pair<std::size_t, std::size_t>> out;
  for (const Tgd& tgd : t) out.emplace(tgd.body.size(), tgd.head.size());
  return out;
}

}  // namespace

std::optional<Isomorphism> find_isomorphism(const ConjunctiveQuery& q1, const TgdSet& t1, const ConjunctiveQuery& q2,
                                            const TgdSet& t2) {
  if (q1.arity() != q2.arity() || q1.atoms().size() != q2.atoms().size() || t1.size() != t2.size() ||
      arity_profile(q1.atoms()) != arity_profile(q2.atoms()) || tgd_profile(t1) != tgd_profile(t2)) {
    return std::nullopt;
  }
  MatchState start;
  for (std::size_t i = 0; i < q1.arity(); ++i) {
    if (!start.var.bind(q1.answer_vars()[i], q2.answer_vars()[i])) return std::nullopt;
  }
  std::vector<bool> used(q2.atoms().size(), false);
  std::vector<bool> used_tgds(t2.size(), false);
  MatchState found;
  Bijection query_vars;
  const bool ok = match_atoms(q1.atoms(), q2.atoms(), 0, used, start, [&](const MatchState& s) {
    query_vars = s.var;
    return match_tgds(t1, t2, 0, used_tgds, s.rel, &found);
  });
  if (!ok) return std::nullopt;
  return Isomorphism{found.rel.fwd, query_vars.fwd};
}

// ------------------------------------------------------------------- registry

namespace {

// What is being decided; Boolean queries collapse every mode into evaluation.
enum class Problem { Boolean, Single, All, Count, Access, Enumerate };

Problem problem_of(const ConjunctiveQuery& q, EvalMode mode) {
  if (q.is_boolean()) return Problem::Boolean;
  switch (mode) {
    case EvalMode::SingleTest: return Problem::Single;
    case EvalMode::AllTest: return Problem::All;
    case EvalMode::Count: return Problem::Count;
    case EvalMode::DirectAccess: return Problem::Access;
    case EvalMode::Enumerate: return Problem::Enumerate;
  }
  return Problem::Single;
}

std::string plan_name(Problem p) {
  switch (p) {
    case Problem::Boolean:
    case Problem::Single: return "single_test";
    case Problem::All: return "all_test";
    case Problem::Count: return "count";
    case Problem::Access: return "direct_access";
    case Problem::Enumerate: return "enumerate";
  }
  return "single_test";
}

struct RegistryEntry {
  catalog::Instance instance;
  std::optional<Problem> only;  // empty: any mode
  Status status;
  const char* theorem;
  std::optional<Hypothesis> hypothesis;
  std::string engine_plan;  // empty: fallback for the mode
  std::string notes;
};

const std::vector<RegistryEntry>& registry() {
  static const std::vector<RegistryEntry> entries = [] {
    std::vector<RegistryEntry> r;
    r.push_back({catalog::square_angle(), std::nullopt, Status::Tractable, theorem::kAdhocFilterProbe, std::nullopt,
                 "demo:qsquare",
                 "cyclic companion, yet linear: filter S by L and R, then one L probe and one T test per S fact"});
    r.push_back({catalog::clique_guard(3), std::nullopt, Status::ConditionallyHard, theorem::kCliqueFlooding,
                 Hypothesis::Triangle, "",
                 "flooding S with all pairs keeps triangle detection; the guard is then vacuous"});
    r.push_back({catalog::clique_guard(4), std::nullopt, Status::ConditionallyHard, theorem::kCliqueFlooding,
                 Hypothesis::Hyperclique, "",
                 "flooding S with all triples reduces 4-clique detection; rests on the 4-clique case of the "
                 "hyperclique hypothesis"});
    for (std::size_t l = 5; l <= 8; ++l) {
      r.push_back({catalog::clique_guard(l), std::nullopt, Status::Open, theorem::kKnownOpen, std::nullopt, "",
                   "l-cliques are detectable in O(n^(l-1)) for large l, so flooding S no longer gives a linear "
                   "lower bound; no upper bound known"});
    }
    r.push_back({catalog::endomorphism_enumeration(), Problem::Enumerate, Status::Tractable,
                 theorem::kEndomorphismEnumeration, std::nullopt, "demo:ex83",
                 "enumerate the subquery without R1 and P, emit endomorphism answers, probe R1 and scan P, "
                 "deduplicate with multiplicity 2"});
    r.push_back({catalog::triangle_encoding(), Problem::Enumerate, Status::ConditionallyHard,
                 theorem::kTriangleEncoding, Hypothesis::Triangle, "",
                 "answers of two types encode triangles of an oriented graph"});
    r.push_back({catalog::unbalanced_triangle(), Problem::Enumerate, Status::ConditionallyHard,
                 theorem::kUnbalancedTriangleEncoding, Hypothesis::Vutd, "",
                 "dangling P atoms on S1 and S2 encode unbalanced triangle detection"});
    r.push_back({catalog::combined_dangling(), Problem::Enumerate, Status::Open, theorem::kKnownOpen, std::nullopt, "",
                 "combines both families of dangling atoms; neither the endomorphism algorithm nor the triangle "
                 "encodings apply"});
    r.push_back({catalog::unary_disconnected(), Problem::Enumerate, Status::Tractable, theorem::kTwoPhaseUnary,
                 std::nullopt, "demo:unary",
                 "disconnected query: pair answers of the path with S values in two phases, deduplicate with "
                 "multiplicity 2"});
    r.push_back({catalog::unary_disconnected_path(), Problem::Enumerate, Status::Open, theorem::kKnownOpen,
                 std::nullopt, "", "disconnected query with unary heads on a longer path; two-phase scheme fails"});
    r.push_back({catalog::counting_guard(), Problem::Count, Status::Open, theorem::kKnownOpen, std::nullopt, "",
                 "the guard S makes the path countable only through a non-linear tagging"});
    return r;
  }();
  return entries;
}

// --------------------------------------------------------------- decisions

bool structurally_good(Problem p, const StructureReport& r) {
  switch (p) {
    case Problem::Boolean: return r.acyclic;
    case Problem::Single: return r.weakly_acyclic;
    case Problem::All: return r.free_connex;
    case Problem::Count:
    case Problem::Enumerate: return r.acyclic && r.free_connex;
    case Problem::Access: return r.acyclic && r.free_connex && !r.disruptive_trio;
  }
  return false;
}

std::string shortfall(Problem p, const StructureReport& r) {
  std::vector<std::string> out;
  switch (p) {
    case Problem::Boolean:
      if (!r.acyclic) out.push_back("cyclic");
      break;
    case Problem::Single:
      if (!r.weakly_acyclic) out.push_back("not weakly acyclic");
      break;
    case Problem::Access:
      if (r.disruptive_trio) out.push_back("has a disruptive trio");
      [[fallthrough]];
    case Problem::Count:
    case Problem::Enumerate:
      if (!r.acyclic) out.push_back("cyclic");
      [[fallthrough]];
    case Problem::All:
      if (!r.free_connex) out.push_back("not free-connex");
      break;
  }
  std::string s;
  for (const auto& x : out) s += (s.empty() ? "" : ", ") + x;
  return s;
}

// A dichotomy whose side conditions hold for (q, T, companion cost).
struct Dichotomy {
  const char* theorem;
  Hypothesis hard;
};

std::optional<Dichotomy> dichotomy(Problem p, const ConjunctiveQuery& q, const TgdSetProfile& prof,
                                   const CompanionResult& c, const StructureReport& r, std::string& missing) {
  switch (p) {
    case Problem::Boolean: return Dichotomy{theorem::kBooleanEvaluation, Hypothesis::Hyperclique};
    case Problem::Single: return Dichotomy{theorem::kSingleTesting, Hypothesis::Hyperclique};
    case Problem::All: return Dichotomy{theorem::kAllTesting, Hypothesis::Hyperclique};
    case Problem::Count:
      if (!prof.full) {
        missing = "counting dichotomies need full rules";
        return std::nullopt;
      }
      if (q.is_full()) return Dichotomy{theorem::kFullCounting, Hypothesis::Hyperclique};
      if (c.cost_class != CostClass::Linear) {
        missing = "counting a non-full query needs a tagging in O(|D|); the companion costs O(|D|+|dom|^2)";
        return std::nullopt;
      }
      return Dichotomy{theorem::kLinearTagCounting, r.acyclic ? Hypothesis::Seth : Hypothesis::Hyperclique};
    case Problem::Access:
      if (!prof.full) {
        missing = "the direct access dichotomy needs full rules";
        return std::nullopt;
      }
      return Dichotomy{theorem::kDirectAccess, Hypothesis::LogHyperclique};
    case Problem::Enumerate:
      if (q.arity() > 2) {
        missing = "the enumeration dichotomy with a companion needs arity at most 2";
        return std::nullopt;
      }
      return Dichotomy{theorem::kEnumArityTwo, Hypothesis::Hyperclique};
  }
  return std::nullopt;
}

std::optional<CompanionResult> try_companion(const ConjunctiveQuery& q, const TgdSet& tgds, Verdict& v) {
  try {
    return best_companion(q, tgds);
  } catch (const Error& e) {
    v.trail.push_back(std::string("companion construction failed: ") + e.what());
    return std::nullopt;
  }
}

std::string describe(const CompanionResult& c) {
  std::string s = to_string(c.method);
  if (c.method == CompanionMethod::Flood) s += " k=" + std::to_string(c.k) + " (" + to_string(c.condition) + ")";
  return s + ", cost " + to_string(c.cost_class);
}

// Queries equivalent to q on databases satisfying the rules.
std::vector<std::pair<std::string, ConjunctiveQuery>> rewritings(const ConjunctiveQuery& q, const TgdSet& tgds,
                                                                 const TgdSetProfile& prof, Verdict& v) {
  std::vector<std::pair<std::string, ConjunctiveQuery>> out{{"query", q}};
  if (!prof.chase_terminating()) {
    v.trail.push_back("rules are neither full nor non-recursive; no chase-based rewriting");
    return out;
  }
  try {
    const auto ch = chase_query(q, tgds);
    out.emplace_back("chase", ch);
    out.emplace_back("core of chase", core_of_query(ch));
    out.emplace_back("minimized", minimize_wrt(q, tgds));
  } catch (const Error& e) {
    v.trail.push_back(std::string("rewriting stopped: ") + e.what());
  }
  return out;
}

bool try_upper_bound(Problem p, const ConjunctiveQuery& q, const TgdSet& tgds, const TgdSetProfile& prof,
                     const std::vector<Symbol>& order, Verdict& v) {
  for (auto& [name, candidate] : rewritings(q, tgds, prof, v)) {
    const auto rep = analyze(candidate, p == Problem::Access ? std::optional(order) : std::nullopt);
    if (!structurally_good(p, rep)) {
      v.trail.push_back(name + " rewriting is " + shortfall(p, rep));
      continue;
    }
    v.status = Status::Tractable;
    v.theorem = theorem::kEquivalentRewriting;
    v.engine_plan = "tractable:" + plan_name(p);
    if (name != "query") v.companion = candidate;
    v.structure = rep;
    v.notes = "the " + name + " rewriting is equivalent under the rules and structurally tractable; upper bound only";
    v.trail.push_back(v.notes);
    return true;
  }
  return false;
}

void open_verdict(Problem p, Verdict& v, const std::string& why) {
  v.status = Status::Open;
  v.theorem = theorem::kNone;
  v.hypothesis.reset();
  v.engine_plan = "fallback:" + plan_name(p);
  v.notes = "precondition failed: " + why;
  v.trail.push_back(v.notes);
}

std::vector<Symbol> checked_order(const ClassifyRequest& r) {
  if (r.mode != EvalMode::DirectAccess) return {};
  if (!r.order) {
    if (r.query.is_boolean()) return {};
    throw DomainError("direct access needs a variable order");
  }
  std::vector<Symbol> want = r.query.answer_vars();
  std::vector<Symbol> got = *r.order;
  std::sort(want.begin(), want.end());
  std::sort(got.begin(), got.end());
  if (want != got) throw DomainError("direct access order must list every answer variable exactly once");
  return *r.order;
}

}  // namespace

Verdict classify(const ClassifyRequest& request) {
  const ConjunctiveQuery& q = request.query;
  const TgdSet& tgds = request.tgds;
  const std::vector<Symbol> order = checked_order(request);
  const Problem p = problem_of(q, request.mode);

  Verdict v;
  v.mode = request.mode;
  v.profile = profile_tgds(tgds);
  if (p == Problem::Boolean) v.trail.push_back("Boolean query: every mode is evaluation");

  const auto companion = try_companion(q, tgds, v);
  if (companion) {
    v.companion = companion->companion;
    v.trail.push_back("companion by " + describe(*companion));
  } else {
    v.trail.push_back("no tagging companion: rules are not frontier-guarded full, and not non-recursive with head "
                      "arity or frontier at most 2");
  }

  for (const auto& e : registry()) {
    if (e.only && *e.only != p) continue;
    if (!find_isomorphism(q, tgds, e.instance.query, e.instance.tgds)) continue;
    v.registry_entry = e.instance.name;
    v.status = e.status;
    v.theorem = e.theorem;
    v.hypothesis = e.hypothesis;
    v.engine_plan = e.engine_plan.empty() ? "fallback:" + plan_name(p) : e.engine_plan;
    v.notes = e.notes;
    if (v.companion) v.structure = analyze(*v.companion);
    v.trail.push_back("isomorphic to known instance " + e.instance.name);
    if (e.status == Status::Open) v.notes = "precondition failed: no known dichotomy covers this instance; " + e.notes;
    return v;
  }

  if (companion) {
    const auto rep = analyze(companion->companion, p == Problem::Access ? std::optional(order) : std::nullopt);
    v.structure = rep;
    std::string missing;
    const auto d = dichotomy(p, q, v.profile, *companion, rep, missing);
    if (structurally_good(p, rep)) {
      v.status = Status::Tractable;
      v.theorem = d ? d->theorem : theorem::kEquivalentRewriting;
      v.engine_plan = "tractable:" + plan_name(p);
      v.notes = "companion is structurally tractable for " + plan_name(p);
      v.trail.push_back(v.notes);
      return v;
    }
    if (d) {
      v.status = Status::ConditionallyHard;
      v.theorem = d->theorem;
      v.hypothesis = d->hard;
      v.engine_plan = "fallback:" + plan_name(p);
      v.notes = "companion is " + shortfall(p, rep);
      v.trail.push_back(v.notes);
      return v;
    }
    v.trail.push_back("no dichotomy: " + missing);
  }

  if (p == Problem::Enumerate && v.profile.unary_heads_only) {
    const auto rep = analyze(q);
    if (rep.connected && rep.self_join_free) {
      v.structure = rep;
      v.companion.reset();
      if (structurally_good(p, rep)) {
        v.status = Status::Tractable;
        v.theorem = theorem::kEnumUnaryHeads;
        v.engine_plan = "tractable:enumerate";
        v.notes = "unary heads leave the query's own structure decisive; it is acyclic and free-connex";
      } else {
        v.status = Status::ConditionallyHard;
        v.theorem = theorem::kEnumUnaryHeads;
        v.hypothesis = Hypothesis::Hyperclique;
        v.engine_plan = "fallback:enumerate";
        v.notes = "unary heads leave the query's own structure decisive; it is " + shortfall(p, rep);
      }
      v.trail.push_back(v.notes);
      return v;
    }
    v.trail.push_back("unary-head rule needs a connected self-join-free query");
  }

  if (try_upper_bound(p, q, tgds, v.profile, order, v)) return v;

  std::string why;
  if (!companion) {
    why = "no tagging companion and no structurally tractable equivalent rewriting";
  } else {
    std::string missing;
    dichotomy(p, q, v.profile, *companion, *v.structure, missing);
    why = missing + "; companion is " + shortfall(p, *v.structure);
  }
  open_verdict(p, v, why);
  return v;
}

std::string explain(const Verdict& v) {
  std::ostringstream out;
  auto yes = [](bool b) { return b ? "yes" : "no"; };
  out << "status: " << to_string(v.status) << "\n";
  out << "mode: " << to_string(v.mode) << "\n";
  out << "theorem: " << v.theorem << "\n";
  const auto& p = v.profile;
  out << "rules: full=" << yes(p.full) << " non_recursive=" << yes(p.non_recursive)
      << " frontier_guarded=" << yes(p.frontier_guarded) << " max_head_arity=" << p.max_head_arity
      << " max_frontier=" << p.max_frontier << " unary_heads=" << yes(p.unary_heads_only) << "\n";
  if (v.registry_entry) out << "known instance: " << *v.registry_entry << "\n";
  out << "companion: " << (v.companion ? to_string(*v.companion) : std::string("none")) << "\n";
  if (v.structure) {
    const auto& s = *v.structure;
    out << "structure: acyclic=" << yes(s.acyclic) << " weakly_acyclic=" << yes(s.weakly_acyclic)
        << " free_connex=" << yes(s.free_connex) << " self_join_free=" << yes(s.self_join_free)
        << " connected=" << yes(s.connected);
    if (s.disruptive_trio) {
      out << " trio=(" << s.disruptive_trio->first.name() << "," << s.disruptive_trio->second.name() << ","
          << s.disruptive_trio->third.name() << ")";
    }
    out << "\n";
  }
  if (v.hypothesis) out << "hypothesis: " << to_string(*v.hypothesis) << "\n";
  out << "engine plan: " << v.engine_plan << "\n";
  out << "decision path:\n";
  for (const auto& step : v.trail) out << "  - " << step << "\n";
  out << "notes: " << v.notes << "\n";
  return out.str();
}

}  // namespace cqlin
