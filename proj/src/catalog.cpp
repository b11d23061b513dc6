#include "cqlin/catalog.hpp"

#include "cqlin/errors.hpp"
#include "cqlin/parser.hpp"

namespace cqlin::catalog {

namespace {

Instance make(std::string name, std::string_view query, std::string_view tgds) {
  return Instance{std::move(name), parse_query(query), parse_tgds(tgds)};
}

std::string rel(std::size_t i, std::size_t j) { return "R_" + std::to_string(i) + "_" + std::to_string(j); }

}  // namespace

ConjunctiveQuery triangle() { return parse_query("q() :- R1(x1,x2), R2(x2,x3), R3(x3,x1)."); }

TgdSet triangle_closing_rule() { return parse_tgds("R1(x1,x2), R2(x2,x3) -> R3(x3,x1)."); }

TgdSet triangle_guard_rule() { return parse_tgds("R1(x1,x2), R2(x2,x3), R3(x3,x1) -> S(x1,x2,x3)."); }

// The L atom of both rule bodies is taken over (x1,x4), matching the query;
// read literally as L(x3,x4) the rules would not involve the query's L atom.
Instance square_angle() {
  return make("square_angle", "q() :- B(x1,x2), R(x3,x2), T(x3,x4), L(x1,x4), S(x1,x3).",
              "L(x1,x4), S(x1,x3), R(x3,x2), B(x1,x2) -> T(x3,x4).\n"
              "L(x1,x4), S(x1,x3), R(x3,x2), T(x3,x4) -> B(x1,x2).");
}

Instance clique_guard(std::size_t l) {
  if (l < 3) throw DomainError("clique size must be at least 3");
  std::vector<Atom> atoms;
  for (std::size_t i = 1; i <= l; ++i) {
    for (std::size_t j = i + 1; j <= l; ++j) {
      atoms.push_back(Atom{Symbol(rel(i, j)), {Symbol("y" + std::to_string(i)), Symbol("y" + std::to_string(j))}});
    }
  }
  Tgd rule;
  Atom head{Symbol("S"), {}};
  for (std::size_t i = 1; i < l; ++i) {
    head.args.push_back(Symbol("x" + std::to_string(i)));
    for (std::size_t j = i + 1; j < l; ++j) {
      rule.body.push_back(Atom{Symbol(rel(i, j)), {Symbol("x" + std::to_string(i)), Symbol("x" + std::to_string(j))}});
    }
  }
  rule.head.push_back(std::move(head));
  return Instance{"clique_guard_" + std::to_string(l), ConjunctiveQuery({}, std::move(atoms)), TgdSet{std::move(rule)}};
}

Instance endomorphism_enumeration() {
  return make("endomorphism_enumeration",
              "q(x1,x2,x3,x4,x5) :- R1(x1,x2), R2(x1,x3), S1(x4,x2), S2(x4,x3), P(x5,x3).",
              "S1(x,y) -> R1(x,y). S2(x,y) -> R2(x,y). R2(x,y) -> P(x,y).");
}

Instance triangle_encoding() {
  return make("triangle_encoding", "q(x1,x2,x3,x4) :- R1(x1,x2), R2(x1,x3), S1(x4,x2), S2(x4,x3).",
              "S1(x,y) -> R1(x,y). S2(x,y) -> R2(x,y).");
}

Instance unbalanced_triangle() {
  return make("unbalanced_triangle",
              "q(x1,x2,x3,x4,x5,x6) :- R1(x1,x2), R2(x1,x3), S1(x4,x2), S2(x4,x3), P2(x5,x3), P1(x6,x2).",
              "S1(x,y) -> R1(x,y). S2(x,y) -> R2(x,y). S2(x,y) -> P2(x,y). S1(x,y) -> P1(x,y).");
}

// Read off the drawing: edges into x2 are R1, S1, P1, T1; edges into x3 are
// R2, S2, P2, T2, T3; an arrow from A to B is the inclusion B ⊆ A.
Instance combined_dangling() {
  return make("combined_dangling",
              "q(x1,x2,x3,x4,x5,x6,x7,x8,x9) :- R1(x1,x2), R2(x1,x3), S1(x4,x2), S2(x4,x3), P1(x6,x2), "
              "T1(x8,x2), T2(x9,x3), T3(x5,x3), P2(x7,x3).",
              "S1(x,y) -> R1(x,y). S2(x,y) -> R2(x,y). S1(x,y) -> P1(x,y). S2(x,y) -> P2(x,y).\n"
              "T1(x,y) -> S1(x,y). T1(x,y) -> S2(x,y). R1(x,y) -> T2(x,y). R1(x,y) -> T3(x,y).");
}

Instance unary_disconnected() {
  return make("unary_disconnected", "q(x1,x2,x3) :- R1(x1,z), R2(z,x2), S(x3).", "R1(v1,v2) -> S(v2).");
}

Instance unary_disconnected_path() {
  return make("unary_disconnected_path", "q(x1,x2,x3) :- R1(x1,z1), R2(z1,z2), R3(z2,x2), S(x3).",
              "R1(v1,v2) -> S(v2). R2(v1,v2) -> S(v2).");
}

Instance counting_guard() {
  return make("counting_guard", "q(x1,x2) :- R1(x1,y), R2(y,x2).", "R1(x1,x2), R2(x2,x3) -> S(x1,x3).");
}

std::vector<Instance> all() {
  std::vector<Instance> out{
      {"triangle", triangle(), {}},
      {"triangle_closing", triangle(), triangle_closing_rule()},
      {"triangle_guard", triangle(), triangle_guard_rule()},
      square_angle(),
  };
  for (std::size_t l = 3; l <= 6; ++l) out.push_back(clique_guard(l));
  for (auto f : {endomorphism_enumeration, triangle_encoding, unbalanced_triangle, combined_dangling,
                 unary_disconnected, unary_disconnected_path, counting_guard}) {
    out.push_back(f());
  }
  return out;
}

}  // namespace cqlin::catalog
