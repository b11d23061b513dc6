#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cqlin/chase.hpp"
#include "cqlin/database.hpp"
#include "cqlin/errors.hpp"
#include "cqlin/parser.hpp"
#include "cqlin/query.hpp"

namespace cqlin::testkit {

using Rng = std::mt19937_64;

struct QueryShape {
  std::size_t min_atoms = 1;
  std::size_t max_atoms = 4;
  std::size_t variables = 5;
  std::size_t relations = 4;
  std::size_t max_arity = 3;
  bool self_joins = false;
  double answer_ratio = 0.5;
};

inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline Symbol var(std::size_t i) { return Symbol("x" + std::to_string(i)); }

// Relation i has arity 1 + i % max_arity so the schema is fixed per index.
inline Symbol relation(std::size_t i) { return Symbol("R" + std::to_string(i)); }
inline std::size_t relation_arity(std::size_t i, std::size_t max_arity) { return 1 + i % max_arity; }

inline ConjunctiveQuery random_query(Rng& rng, const QueryShape& shape) {
  const std::size_t n = pick(rng, shape.min_atoms, shape.max_atoms);
  std::vector<std::size_t> rels(shape.relations);
  for (std::size_t i = 0; i < rels.size(); ++i) rels[i] = i;
  std::shuffle(rels.begin(), rels.end(), rng);
  std::vector<Atom> atoms;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t r = shape.self_joins ? pick(rng, 0, shape.relations - 1) : rels[k % rels.size()];
    Atom a{relation(r), {}};
    for (std::size_t p = 0; p < relation_arity(r, shape.max_arity); ++p) a.args.push_back(var(pick(rng, 0, shape.variables - 1)));
    atoms.push_back(std::move(a));
  }
  std::vector<Symbol> answers;
  std::bernoulli_distribution take(shape.answer_ratio);
  for (Symbol v : variables_of(atoms)) {
    if (take(rng)) answers.push_back(v);
  }
  std::shuffle(answers.begin(), answers.end(), rng);
  return ConjunctiveQuery(answers, atoms);
}

// Facts over constants c0..c{domain-1} for every relation the query uses.
inline Database random_database(Rng& rng, const std::vector<Atom>& atoms, std::size_t domain, std::size_t facts_per_relation) {
  Database db;
  std::vector<Value> consts;
  for (std::size_t i = 0; i < domain; ++i) consts.push_back(constant("c" + std::to_string(i)));
  for (const Atom& a : atoms) {
    if (db.arity(a.relation)) continue;
    db.declare(a.relation, a.args.size());
    for (std::size_t f = 0; f < facts_per_relation; ++f) {
      Tuple t;
      for (std::size_t p = 0; p < a.args.size(); ++p) t.push_back(consts[pick(rng, 0, domain - 1)]);
      db.add_fact(a.relation, t);
    }
  }
  return db;
}

struct TgdShape {
  std::size_t count = 2;
  std::size_t relations = 4;
  std::size_t max_arity = 3;
  std::size_t max_body = 2;
  std::size_t variables = 4;
  bool existentials = true;       // head may invent values
  bool non_recursive = true;      // head relation index above every body one
  bool frontier_guarded = false;  // head variables drawn from the first body atom
};

inline Atom random_atom(Rng& rng, std::size_t r, std::size_t max_arity, const std::vector<Symbol>& pool) {
  Atom a{relation(r), {}};
  for (std::size_t p = 0; p < relation_arity(r, max_arity); ++p) a.args.push_back(pool[pick(rng, 0, pool.size() - 1)]);
  return a;
}

inline TgdSet random_tgds(Rng& rng, const TgdShape& shape) {
  std::vector<Symbol> pool;
  for (std::size_t i = 0; i < shape.variables; ++i) pool.push_back(Symbol("v" + std::to_string(i)));
  TgdSet out;
  for (std::size_t t = 0; t < shape.count; ++t) {
    Tgd tgd;
    const std::size_t head_rel = pick(rng, shape.non_recursive ? 1 : 0, shape.relations - 1);
    const std::size_t body_size = pick(rng, 1, shape.max_body);
    for (std::size_t b = 0; b < body_size; ++b) {
      const std::size_t r = shape.non_recursive ? pick(rng, 0, head_rel - 1) : pick(rng, 0, shape.relations - 1);
      tgd.body.push_back(random_atom(rng, r, shape.max_arity, pool));
    }
    const auto body_vars = shape.frontier_guarded ? tgd.body.front().args : variables_of(tgd.body);
    Atom head{relation(head_rel), {}};
    std::bernoulli_distribution invent(0.3);
    for (std::size_t p = 0; p < relation_arity(head_rel, shape.max_arity); ++p) {
      if (shape.existentials && invent(rng)) {
        head.args.push_back(Symbol("z" + std::to_string(pick(rng, 0, 1))));
      } else {
        head.args.push_back(body_vars[pick(rng, 0, body_vars.size() - 1)]);
      }
    }
    tgd.head.push_back(std::move(head));
    out.push_back(std::move(tgd));
  }
  return out;
}

inline Tuple random_tuple(Rng& rng, const Database& db, std::size_t arity) {
  Tuple t;
  const auto& dom = db.domain();
  for (std::size_t i = 0; i < arity; ++i) t.push_back(dom.empty() ? constant("c0") : dom[pick(rng, 0, dom.size() - 1)]);
  return t;
}

// Random facts over every relation of q and the rules, closed under the rules.
inline Database chased_random_database(Rng& rng, const ConjunctiveQuery& q, const TgdSet& tgds, std::size_t domain,
                                       std::size_t facts) {
  std::vector<Atom> atoms = q.atoms();
  for (const Tgd& t : tgds) {
    atoms.insert(atoms.end(), t.body.begin(), t.body.end());
    atoms.insert(atoms.end(), t.head.begin(), t.head.end());
  }
  return chase_to_fixpoint(random_database(rng, atoms, domain, facts), tgds);
}

inline bool same_schema(const ConjunctiveQuery& q, const TgdSet& tgds) {
  try {
    check_schema(q, tgds);
    return true;
  } catch (const ArityError&) {
    return false;
  }
}

}  // namespace cqlin::testkit
