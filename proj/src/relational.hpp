#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "cqlin/database.hpp"
#include "cqlin/query.hpp"
#include "cqlin/row_set.hpp"
#include "cqlin/structure.hpp"

namespace cqlin::detail {

// A relation over distinct variables.
struct NodeRel {
  std::vector<Symbol> vars;
  RowSet rows;

  NodeRel() = default;
  explicit NodeRel(std::vector<Symbol> v) : vars(std::move(v)), rows(vars.size()) {}
};

// Positions of each subset variable inside vars; subset must be inside vars.
std::vector<std::uint32_t> positions_of(const std::vector<Symbol>& vars, const std::vector<Symbol>& subset);
std::vector<Symbol> shared_vars(const std::vector<Symbol>& a, const std::vector<Symbol>& b);
bool subset_of(const std::vector<Symbol>& a, const std::vector<Symbol>& b);

// Facts of the atom's relation consistent with repeated variables and the
// fixed values, projected onto the atom's remaining distinct variables.
NodeRel atom_relation(const Atom& atom, const Database& db, const std::map<Symbol, Value>& fixed, std::uint64_t& steps);

// Keys of rel on the given positions.
RowSet key_set(const NodeRel& rel, const std::vector<std::uint32_t>& positions, std::uint64_t& steps);

// target ⋉ filter.
void semijoin(NodeRel& target, const NodeRel& filter, std::uint64_t& steps);
NodeRel project(const NodeRel& rel, const std::vector<Symbol>& vars, std::uint64_t& steps);
// Hash join projected onto keep (which must be inside the union of variables).
NodeRel join(const NodeRel& a, const NodeRel& b, const std::vector<Symbol>& keep, std::uint64_t& steps);

// Bottom-up then top-down semijoins along the tree.
void full_reduce(std::vector<NodeRel>& nodes, const JoinTree& tree, std::uint64_t& steps);
// Children before parents.
std::vector<std::size_t> post_order(const JoinTree& tree);

// Repeatedly projects away unprotected variables that occur in one relation
// and folds a relation into another one containing its variables. Succeeds
// when every remaining relation lies inside the protected variables; the
// join of the remaining relations then equals the projection of the input
// join onto the protected variables.
struct Elimination {
  bool success = false;
  std::vector<NodeRel> nodes;
};
Elimination eliminate(std::vector<NodeRel> nodes, const std::set<Symbol>& protect, std::uint64_t& steps);

// Greedy hash-join pipeline with early projection onto out_vars.
NodeRel materialize(std::vector<NodeRel> nodes, const std::vector<Symbol>& out_vars, std::uint64_t& steps);

}  // namespace cqlin::detail
