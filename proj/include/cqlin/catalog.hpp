#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cqlin/query.hpp"

namespace cqlin::catalog {

// A query with the rules it is studied under.
struct Instance {
  std::string name;
  ConjunctiveQuery query;
  TgdSet tgds;
};

// Boolean triangle R1(x1,x2), R2(x2,x3), R3(x3,x1).
ConjunctiveQuery triangle();
// R1(x1,x2), R2(x2,x3) -> R3(x3,x1).
TgdSet triangle_closing_rule();
// R1, R2, R3 triangle -> S(x1,x2,x3).
TgdSet triangle_guard_rule();

// Boolean square with a diagonal, and the two rules deriving T and B.
Instance square_angle();

// Boolean l-clique over R_i_j(y_i,y_j) with every (l-1)-clique guarded by S.
Instance clique_guard(std::size_t l);

// Five-variable query with S1 ⊆ R1, S2 ⊆ R2, R2 ⊆ P; enumerable through a
// subquery and an endomorphism of its chase.
Instance endomorphism_enumeration();
// The same without the dangling P atom and its rule.
Instance triangle_encoding();
// Dangling P1, P2 atoms on S1, S2 instead.
Instance unbalanced_triangle();
// Both families of dangling atoms at once.
Instance combined_dangling();

// q(x1,x2,x3) <- R1(x1,z), R2(z,x2), S(x3) with R1(v1,v2) -> S(v2).
Instance unary_disconnected();
// A three-edge path variant with two unary rules.
Instance unary_disconnected_path();

// q(x1,x2) <- R1(x1,y), R2(y,x2) with R1(x1,x2), R2(x2,x3) -> S(x1,x3).
Instance counting_guard();

std::vector<Instance> all();

}  // namespace cqlin::catalog
