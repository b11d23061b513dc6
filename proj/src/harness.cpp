#include "cqlin/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "cqlin/catalog.hpp"
#include "cqlin/chase.hpp"
#include "cqlin/errors.hpp"
#include "cqlin/homomorphism.hpp"
#include "cqlin/parser.hpp"

namespace cqlin::harness {

namespace {

using Rng = std::mt19937_64;

void add(Database& db, const char* rel, Value a, Value b) {
  const Value t[] = {a, b};
  db.add_fact(Symbol(rel), t);
}

void add(Database& db, Symbol rel, Value a, Value b) {
  const Value t[] = {a, b};
  db.add_fact(rel, t);
}

}  // namespace

Graph parse_edge_list(std::string_view text) {
  Graph g;
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    long long u = 0, v = 0;
    if (!(fields >> u)) continue;
    std::string rest;
    if (!(fields >> v) || u < 0 || v < 0 || (fields >> rest)) {
      throw ParseError("expected two non-negative vertex ids", lineno, 1);
    }
    if (u == v) throw DomainError("self-loop on vertex " + std::to_string(u) + " at line " + std::to_string(lineno));
    const auto a = static_cast<std::uint32_t>(u), b = static_cast<std::uint32_t>(v);
    const std::pair<std::uint32_t, std::uint32_t> e = std::minmax(a, b);
    if (seen.insert(e).second) g.edges.emplace_back(e.first, e.second);
    g.vertices = std::max<std::size_t>(g.vertices, e.second + 1);
  }
  return g;
}

Graph random_graph(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (n < 2 && m > 0) throw DomainError("a graph with edges needs two vertices");
  const std::size_t max_edges = n * (n - 1) / 2;
  if (m > max_edges) throw DomainError("too many edges for " + std::to_string(n) + " vertices");
  Rng rng(seed);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  Graph g{n, {}};
  while (g.edges.size() < m) {
    auto u = pick(rng), v = pick(rng);
    if (u == v) continue;
    const std::pair<std::uint32_t, std::uint32_t> e = std::minmax(u, v);
    if (seen.insert(e).second) g.edges.emplace_back(e.first, e.second);
  }
  return g;
}

Value vertex(std::uint32_t v) { return constant("v" + std::to_string(v)); }

Database gen_triangle_db(const Graph& g) {
  Database db;
  for (const char* r : {"R1", "R2", "R3"}) db.declare(Symbol(r), 2);
  for (auto [u, v] : g.edges) {
    for (const char* r : {"R1", "R2", "R3"}) {
      add(db, r, vertex(u), vertex(v));
      add(db, r, vertex(v), vertex(u));
    }
  }
  return db;
}

Database gen_clique_db(std::size_t l, const Graph& g, bool flood_s) {
  const auto inst = catalog::clique_guard(l);
  Database db;
  for (const Atom& a : inst.query.atoms()) {
    db.declare(a.relation, 2);
    for (auto [u, v] : g.edges) {
      add(db, a.relation, vertex(u), vertex(v));
      add(db, a.relation, vertex(v), vertex(u));
    }
  }
  const Symbol s("S");
  db.declare(s, l - 1);
  if (!flood_s) return chase_to_fixpoint(db, inst.tgds);
  const double total = std::pow(static_cast<double>(g.vertices), static_cast<double>(l - 1));
  if (total > 5e6) throw DomainError("flooding S would add " + std::to_string(static_cast<std::uint64_t>(total)) + " facts");
  Tuple t(l - 1, vertex(0));
  std::vector<std::uint32_t> digits(l - 1, 0);
  for (;;) {
    for (std::size_t i = 0; i < digits.size(); ++i) t[i] = vertex(digits[i]);
    db.add_fact(s, t);
    std::size_t i = 0;
    while (i < digits.size() && ++digits[i] == g.vertices) digits[i++] = 0;
    if (i == digits.size()) break;
  }
  return db;
}

Database gen_ex84_db(const Graph& g) {
  Database db;
  for (const char* r : {"R1", "R2", "S1", "S2"}) db.declare(Symbol(r), 2);
  for (auto [a, b] : g.edges) {  // a < b
    add(db, "R1", vertex(a), vertex(b));
    add(db, "R2", vertex(a), vertex(b));
    add(db, "S2", vertex(a), vertex(b));
    add(db, "R1", vertex(a), vertex(a));
    add(db, "S1", vertex(a), vertex(a));
  }
  return db;
}

TripartiteGraph random_tripartite(std::size_t n, double alpha, double density, std::uint64_t seed) {
  if (!(alpha > 0 && alpha <= 1.0 / 3.0 + 1e-12)) throw DomainError("alpha must lie in (0, 1/3]");
  if (!(density >= 0 && density <= 1)) throw DomainError("density must lie in [0, 1]");
  TripartiteGraph g;
  g.n1 = n;
  g.n2 = g.n3 = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), alpha)));
  Rng rng(seed);
  std::bernoulli_distribution keep(density);
  auto fill = [&](std::size_t na, std::size_t nb, auto& out) {
    for (std::uint32_t a = 0; a < na; ++a) {
      for (std::uint32_t b = 0; b < nb; ++b) {
        if (keep(rng)) out.emplace_back(a, b);
      }
    }
  };
  fill(g.n1, g.n2, g.e12);
  fill(g.n1, g.n3, g.e13);
  fill(g.n3, g.n2, g.e32);
  return g;
}

bool has_triangle(const TripartiteGraph& g) {
  std::set<std::pair<std::uint32_t, std::uint32_t>> e12(g.e12.begin(), g.e12.end());
  std::set<std::pair<std::uint32_t, std::uint32_t>> e32(g.e32.begin(), g.e32.end());
  for (auto [v1, v3] : g.e13) {
    for (std::uint32_t v2 = 0; v2 < g.n2; ++v2) {
      if (e12.count({v1, v2}) && e32.count({v3, v2})) return true;
    }
  }
  return false;
}

Database gen_vutd_db(const TripartiteGraph& g) {
  auto v1 = [](std::uint32_t i) { return constant("a" + std::to_string(i)); };
  auto v2 = [](std::uint32_t i) { return constant("b" + std::to_string(i)); };
  auto v3 = [](std::uint32_t i) { return constant("c" + std::to_string(i)); };
  Database db;
  for (const char* r : {"R1", "R2", "S1", "S2", "P1", "P2"}) db.declare(Symbol(r), 2);
  for (auto [c, b] : g.e32) {
    for (const char* r : {"S1", "P1", "R1"}) add(db, r, v3(c), v2(b));
  }
  for (auto [a, b] : g.e12) add(db, "R1", v1(a), v2(b));
  for (std::uint32_t c = 0; c < g.n3; ++c) {
    for (const char* r : {"S2", "P2", "R2"}) add(db, r, v3(c), v3(c));
  }
  for (auto [a, c] : g.e13) add(db, "R2", v1(a), v3(c));
  return db;
}

Database gen_random_satisfying(const ConjunctiveQuery& q, const TgdSet& tgds, std::size_t facts, std::size_t domain,
                               std::uint64_t seed, std::uint64_t chase_budget) {
  check_schema(q, tgds);
  if (domain == 0) throw DomainError("domain must be positive");
  std::vector<Atom> atoms = q.atoms();
  for (const Tgd& t : tgds) {
    atoms.insert(atoms.end(), t.body.begin(), t.body.end());
    atoms.insert(atoms.end(), t.head.begin(), t.head.end());
  }
  std::vector<std::pair<Symbol, std::size_t>> schema;
  for (const Atom& a : atoms) {
    if (std::none_of(schema.begin(), schema.end(), [&](const auto& s) { return s.first == a.relation; })) {
      schema.emplace_back(a.relation, a.args.size());
    }
  }
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, domain - 1);
  std::vector<Value> consts;
  for (std::size_t i = 0; i < domain; ++i) consts.push_back(constant("c" + std::to_string(i)));
  Database db;
  for (auto [rel, arity] : schema) db.declare(rel, arity);
  const std::size_t per = schema.empty() ? 0 : std::max<std::size_t>(1, facts / schema.size());
  for (auto [rel, arity] : schema) {
    Tuple t(arity);
    for (std::size_t f = 0; f < per; ++f) {
      for (auto& x : t) x = consts[pick(rng)];
      db.add_fact(rel, t);
    }
  }
  const Database chased = chase_to_fixpoint(db, tgds, chase_budget);
  // Nulls become fresh constants; renaming injectively keeps the rules true.
  Database out;
  std::map<Value, Value> grounding;
  for (Symbol rel : chased.relations()) {
    const RowSet* rows = chased.rows(rel);
    out.declare(rel, rows->width());
    Tuple t(rows->width());
    for (std::uint32_t id = 0; id < rows->size(); ++id) {
      const auto row = rows->row(id);
      for (std::size_t i = 0; i < row.size(); ++i) {
        Value v = row[i];
        if (is_null(v)) {
          auto [it, fresh] = grounding.try_emplace(v, Value{});
          if (fresh) it->second = constant("n" + std::to_string(grounding.size() - 1));
          v = it->second;
        }
        t[i] = v;
      }
      out.add_fact(rel, t);
    }
  }
  return out;
}

std::optional<GeneratorKind> parse_generator_kind(std::string_view text) {
  if (text == "triangle") return GeneratorKind::Triangle;
  if (text == "clique" || text == "k_clique") return GeneratorKind::KClique;
  if (text == "flooded_clique" || text == "s_flooded_clique") return GeneratorKind::SFloodedClique;
  if (text == "ex84" || text == "triangle_encoding") return GeneratorKind::Ex84;
  if (text == "vutd") return GeneratorKind::Vutd;
  if (text == "random") return GeneratorKind::Random;
  return std::nullopt;
}

std::string to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::Triangle: return "triangle";
    case GeneratorKind::KClique: return "clique";
    case GeneratorKind::SFloodedClique: return "flooded_clique";
    case GeneratorKind::Ex84: return "ex84";
    case GeneratorKind::Vutd: return "vutd";
    case GeneratorKind::Random: return "random";
  }
  return "random";
}

Generated generate(const GeneratorSpec& spec) {
  auto graph = [&] { return spec.graph ? *spec.graph : random_graph(spec.vertices, spec.edges, spec.seed); };
  switch (spec.kind) {
    case GeneratorKind::Triangle:
      return {gen_triangle_db(graph()), catalog::triangle(), {}};
    case GeneratorKind::KClique:
    case GeneratorKind::SFloodedClique: {
      auto inst = catalog::clique_guard(spec.l);
      return {gen_clique_db(spec.l, graph(), spec.kind == GeneratorKind::SFloodedClique), inst.query, inst.tgds};
    }
    case GeneratorKind::Ex84: {
      auto inst = catalog::triangle_encoding();
      return {gen_ex84_db(graph()), inst.query, inst.tgds};
    }
    case GeneratorKind::Vutd: {
      auto inst = catalog::unbalanced_triangle();
      return {gen_vutd_db(random_tripartite(spec.vertices, spec.alpha, spec.density, spec.seed)), inst.query,
              inst.tgds};
    }
    case GeneratorKind::Random: {
      if (!spec.query) throw DomainError("the random generator needs a query");
      return {gen_random_satisfying(*spec.query, spec.tgds, spec.facts, spec.domain, spec.seed), *spec.query,
              spec.tgds};
    }
  }
  throw DomainError("unknown generator");
}

// ---------------------------------------------------------------- demos

namespace {

void require(const Database& db, const TgdSet& tgds, const char* what) {
  const auto sat = satisfies_tgds(db, tgds);
  if (sat) return;
  std::string msg = std::string(what) + ": database violates rule " + std::to_string(sat.witness->tgd_index + 1) +
                    " (" + to_string(tgds[sat.witness->tgd_index]) + ") at";
  for (Value v : sat.witness->frontier_image) msg += " " + render(v);
  throw PreconditionError(msg);
}

const RowSet& rows_or_empty(const Database& db, const char* rel) {
  static const RowSet empty(2);
  const RowSet* r = db.rows(Symbol(rel));
  if (r != nullptr && r->width() != 2) throw ArityError(rel, 2, r->width());
  return r ? *r : empty;
}

// Values of the second column grouped by the first (or the reverse).
struct Adjacency {
  RowSet keys{1};
  std::vector<std::vector<Value>> lists;

  Adjacency(const RowSet& rows, std::size_t key_col, std::uint64_t& steps) {
    for (std::uint32_t id = 0; id < rows.size(); ++id) {
      ++steps;
      const auto row = rows.row(id);
      const Value k[] = {row[key_col]};
      auto [kid, fresh] = keys.insert(k);
      if (fresh) lists.emplace_back();
      lists[kid].push_back(row[1 - key_col]);
    }
  }

  const std::vector<Value>* find(Value key) const {
    const Value k[] = {key};
    auto id = keys.find(k);
    return id ? &lists[*id] : nullptr;
  }
};

}  // namespace

QsquareResult demo_qsquare(const Database& db, bool check) {
  if (check) require(db, catalog::square_angle().tgds, "qsquare");
  QsquareResult out;
  std::uint64_t& steps = out.steps;
  const RowSet& s = rows_or_empty(db, "S");
  const RowSet& l = rows_or_empty(db, "L");
  const RowSet& r = rows_or_empty(db, "R");
  const RowSet& t = rows_or_empty(db, "T");
  // First L fact per x1 value; R only needs its first column.
  RowSet l_keys(1);
  std::vector<Value> first_l;
  for (std::uint32_t id = 0; id < l.size(); ++id) {
    ++steps;
    const auto row = l.row(id);
    const Value k[] = {row[0]};
    if (l_keys.insert(k).second) first_l.push_back(row[1]);
  }
  RowSet r_keys(1);
  for (std::uint32_t id = 0; id < r.size(); ++id) {
    ++steps;
    const Value k[] = {r.row(id)[0]};
    r_keys.insert(k);
  }
  for (std::uint32_t id = 0; id < s.size(); ++id) {
    ++steps;
    const auto row = s.row(id);
    const Value a[] = {row[0]};
    const Value c[] = {row[1]};
    auto lid = l_keys.find(a);
    if (!lid || !r_keys.contains(c)) continue;
    ++steps;
    const Value probe[] = {row[1], first_l[*lid]};
    if (t.contains(probe)) {
      out.answer = true;
      return out;
    }
  }
  return out;
}

namespace {

class Ex83Stream : public AnswerStream {
 public:
  Ex83Stream(const Database& db, Enumeration inner, std::uint64_t& preprocess)
      : r1_(rows_or_empty(db, "R1")), p_by_c_(rows_or_empty(db, "P"), 1, preprocess), inner_(std::move(inner)) {}

  std::optional<Tuple> next() override {
    if (scan_ && pos_ < scan_->size()) return emit({cur_[0], cur_[1], cur_[2], cur_[3], (*scan_)[pos_++]});
    scan_ = nullptr;
    auto t = inner_.stream->next();
    if (!t) return std::nullopt;
    cur_ = *t;  // (a, b, c, d)
    const Value a = cur_[0], b = cur_[1], c = cur_[2], d = cur_[3];
    ++own_steps_;
    const Value ab[] = {a, b};
    const auto* es = p_by_c_.find(c);
    if (es == nullptr) throw PreconditionError("ex83: R2 fact without matching P fact");
    if (r1_.contains(ab)) {
      scan_ = es;
      pos_ = 0;
      return emit({a, b, c, d, (*scan_)[pos_++]});
    }
    // Every a here has R2(a,c), hence P(a,c); the cursor for (b,c,d) never
    // outruns the P facts on c.
    const Value key[] = {b, c, d};
    auto [kid, fresh] = cursor_keys_.insert(key);
    if (fresh) cursors_.push_back(0);
    std::size_t& k = cursors_[kid];
    if (k >= es->size()) throw PreconditionError("ex83: more R2 facts on a column value than P facts");
    return emit({d, b, c, d, (*es)[k++]});
  }

  std::uint64_t steps() const override { return inner_.stream->steps() + own_steps_; }

 private:
  std::optional<Tuple> emit(Tuple t) {
    ++own_steps_;
    return t;
  }

  const RowSet& r1_;
  Adjacency p_by_c_;
  Enumeration inner_;
  Tuple cur_;
  const std::vector<Value>* scan_ = nullptr;
  std::size_t pos_ = 0;
  RowSet cursor_keys_{3};
  std::vector<std::size_t> cursors_;
  std::uint64_t own_steps_ = 0;
};

class UnaryStream : public AnswerStream {
 public:
  UnaryStream(const Database& db, Enumeration inner) : s_(db.rows(Symbol("S"))), inner_(std::move(inner)) {}

  std::optional<Tuple> next() override {
    ++own_steps_;
    if (!phase_two_) {
      if (auto t = inner_.stream->next()) {
        // q'(y1,y2,y3) <- R1(y1,y3), R2(y3,y2): (a, c, b) answers q as is, S(b) by the rule.
        const Value pair[] = {(*t)[0], (*t)[1]};
        pairs_.insert(pair);
        return t;
      }
      phase_two_ = true;
    }
    if (s_ == nullptr || s_->empty()) return std::nullopt;
    if (s_pos_ == s_->size()) {
      s_pos_ = 0;
      ++pair_pos_;
    }
    if (pair_pos_ >= pairs_.size()) return std::nullopt;
    const auto p = pairs_.row(static_cast<std::uint32_t>(pair_pos_));
    return Tuple{p[0], p[1], s_->row(static_cast<std::uint32_t>(s_pos_++))[0]};
  }

  std::uint64_t steps() const override { return inner_.stream->steps() + own_steps_; }

 private:
  const RowSet* s_;
  Enumeration inner_;
  RowSet pairs_{2};
  bool phase_two_ = false;
  std::size_t pair_pos_ = 0;
  std::size_t s_pos_ = 0;
  std::uint64_t own_steps_ = 0;
};

}  // namespace

Enumeration demo_ex83_enumerate(const Database& db, bool check, bool dedup) {
  if (check) require(db, catalog::endomorphism_enumeration().tgds, "ex83");
  static const ConjunctiveQuery sub = parse_query("q(x1,x2,x3,x4) :- R2(x1,x3), S1(x4,x2), S2(x4,x3).");
  Enumeration inner = enumerate(sub, db);
  if (inner.path != EnginePath::Tractable) throw DomainError("ex83: subquery did not take the structural path");
  Enumeration out;
  out.preprocess_steps = inner.preprocess_steps;
  std::unique_ptr<AnswerStream> s = std::make_unique<Ex83Stream>(db, std::move(inner), out.preprocess_steps);
  out.stream = dedup ? cheaters_dedup(std::move(s), 2) : std::move(s);
  return out;
}

Enumeration demo_unary_disconnected(const Database& db, bool check, bool dedup) {
  if (check) require(db, catalog::unary_disconnected().tgds, "unary");
  static const ConjunctiveQuery sub = parse_query("q(y1,y2,y3) :- R1(y1,y3), R2(y3,y2).");
  Enumeration inner = enumerate(sub, db);
  if (inner.path != EnginePath::Tractable) throw DomainError("unary: subquery did not take the structural path");
  Enumeration out;
  out.preprocess_steps = inner.preprocess_steps;
  std::unique_ptr<AnswerStream> s = std::make_unique<UnaryStream>(db, std::move(inner));
  out.stream = dedup ? cheaters_dedup(std::move(s), 2) : std::move(s);
  return out;
}

}  // namespace cqlin::harness
