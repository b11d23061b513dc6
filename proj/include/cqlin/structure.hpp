#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cqlin/query.hpp"

namespace cqlin {

// One variable set per hyperedge (atom).
using Hypergraph = std::vector<std::vector<Symbol>>;

enum class JoinTreeMode { Full, Weak };

// Rooted tree over hyperedge indices; parent[root] is empty.
struct JoinTree {
  JoinTreeMode mode = JoinTreeMode::Full;
  std::vector<std::optional<std::size_t>> parent;

  std::size_t size() const { return parent.size(); }
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;  // (child, parent)
  std::optional<std::size_t> root() const;
};

Hypergraph hypergraph_of(const ConjunctiveQuery& q, JoinTreeMode mode = JoinTreeMode::Full);

// Ear removal, lowest-indexed ear first; an ear hangs below the
// lowest-indexed edge that covers its shared variables.
std::optional<JoinTree> gyo_join_tree(const Hypergraph& h);
std::optional<JoinTree> gyo_join_tree(const ConjunctiveQuery& q, JoinTreeMode mode);

// Independent check: the edges form a spanning tree and every variable's
// occurrence set is connected.
bool is_join_tree(const Hypergraph& h, std::span<const std::pair<std::size_t, std::size_t>> tree_edges);

struct FreeConnexResult {
  bool free_connex = false;
  // Join tree of the atoms plus the answer-variable guard (last index).
  std::optional<JoinTree> witness;
};

FreeConnexResult is_free_connex(const ConjunctiveQuery& q);

struct Trio {
  Symbol first;
  Symbol second;
  Symbol third;

  friend bool operator==(const Trio&, const Trio&) = default;
};

// first and second precede third in order, share no atom, and each shares
// an atom with third. Scans third in order, then pairs in order.
std::optional<Trio> find_disruptive_trio(const ConjunctiveQuery& q, std::span<const Symbol> order);

bool is_self_join_free(const ConjunctiveQuery& q);
bool is_connected(const ConjunctiveQuery& q);

struct StructureReport {
  bool acyclic = false;
  bool weakly_acyclic = false;
  bool free_connex = false;
  bool self_join_free = false;
  bool full = false;
  bool connected = false;
  std::optional<Trio> disruptive_trio;
  std::optional<JoinTree> join_tree;
  std::optional<JoinTree> weak_join_tree;
  std::optional<JoinTree> free_connex_tree;
};

StructureReport analyze(const ConjunctiveQuery& q, std::optional<std::vector<Symbol>> order = std::nullopt);

struct TgdSetProfile {
  bool non_recursive = true;
  bool full = true;
  bool frontier_guarded = true;
  std::size_t max_head_arity = 0;
  std::size_t max_frontier = 0;
  bool role_inclusions_only = true;
  bool unary_heads_only = true;
  // Strict part of the body-to-head relation order (a ⪯ b, a ≠ b), sorted.
  std::vector<std::pair<Symbol, Symbol>> order;

  bool chase_terminating() const { return full || non_recursive; }
};

// A relation reaching itself, including through a single rule, counts as
// recursion.
TgdSetProfile profile_tgds(const TgdSet& tgds);

bool is_frontier_guarded(const Tgd& tgd);

}  // namespace cqlin
