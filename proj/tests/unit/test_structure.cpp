#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "cqlin/errors.hpp"
#include "cqlin/parser.hpp"
#include "cqlin/structure.hpp"
#include "random_instances.hpp"

using namespace cqlin;
using cqlin::testkit::Rng;

namespace {

using Edges = std::vector<std::pair<std::size_t, std::size_t>>;

// All labelled trees on n nodes from Prüfer sequences.
std::vector<Edges> all_trees(std::size_t n) {
  if (n <= 1) return {Edges{}};
  if (n == 2) return {Edges{{0, 1}}};
  std::vector<Edges> out;
  std::vector<std::size_t> seq(n - 2, 0);
  while (true) {
    std::vector<std::size_t> degree(n, 1);
    for (std::size_t s : seq) ++degree[s];
    Edges e;
    for (std::size_t s : seq) {
      for (std::size_t leaf = 0; leaf < n; ++leaf) {
        if (degree[leaf] == 1) {
          e.emplace_back(leaf, s);
          --degree[leaf];
          --degree[s];
          break;
        }
      }
    }
    std::vector<std::size_t> last;
    for (std::size_t u = 0; u < n; ++u) {
      if (degree[u] == 1) last.push_back(u);
    }
    e.emplace_back(last[0], last[1]);
    out.push_back(std::move(e));
    std::size_t k = 0;
    while (k < seq.size() && ++seq[k] == n) seq[k++] = 0;
    if (k == seq.size()) break;
  }
  return out;
}

// Connectedness of each in-scope variable's occurrence set in the tree.
bool connected_occurrences(const Hypergraph& h, const Edges& tree) {
  std::set<Symbol> vars;
  for (const auto& e : h) vars.insert(e.begin(), e.end());
  for (Symbol v : vars) {
    std::vector<std::size_t> occ;
    for (std::size_t i = 0; i < h.size(); ++i) {
      if (std::find(h[i].begin(), h[i].end(), v) != h[i].end()) occ.push_back(i);
    }
    std::vector<std::size_t> comp(h.size());
    std::iota(comp.begin(), comp.end(), 0);
    auto find = [&](std::size_t x) {
      while (comp[x] != x) x = comp[x] = comp[comp[x]];
      return x;
    };
    auto has = [&](std::size_t x) { return std::find(occ.begin(), occ.end(), x) != occ.end(); };
    for (auto [a, b] : tree) {
      if (has(a) && has(b)) comp[find(a)] = find(b);
    }
    for (std::size_t i : occ) {
      if (find(i) != find(occ.front())) return false;
    }
  }
  return true;
}

bool exhaustive_acyclic(const Hypergraph& h) {
  for (const auto& t : all_trees(h.size())) {
    if (connected_occurrences(h, t)) return true;
  }
  return false;
}

bool shares_atom(const ConjunctiveQuery& q, Symbol a, Symbol b) {
  return std::any_of(q.atoms().begin(), q.atoms().end(), [&](const Atom& at) {
    return std::find(at.args.begin(), at.args.end(), a) != at.args.end() &&
           std::find(at.args.begin(), at.args.end(), b) != at.args.end();
  });
}

bool brute_force_trio(const ConjunctiveQuery& q, const std::vector<Symbol>& order) {
  for (std::size_t k = 0; k < order.size(); ++k) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        if (i == j) continue;
        if (!shares_atom(q, order[i], order[j]) && shares_atom(q, order[i], order[k]) &&
            shares_atom(q, order[j], order[k])) {
          return true;
        }
      }
    }
  }
  return false;
}

const char* kTriangle = "q() :- R1(x1,x2), R2(x2,x3), R3(x3,x1).";

}  // namespace

TEST(JoinTree, TriangleIsCyclic) { EXPECT_FALSE(gyo_join_tree(parse_query(kTriangle), JoinTreeMode::Full)); }

TEST(JoinTree, GuardedTriangleHangsOnS) {
  auto q = parse_query("q() :- R1(x1,x2), R2(x2,x3), R3(x3,x1), S(x1,x2,x3).");
  auto t = gyo_join_tree(q, JoinTreeMode::Full);
  ASSERT_TRUE(t);
  for (auto [child, parent] : t->edges()) EXPECT_TRUE(child == 3 || parent == 3);
  EXPECT_TRUE(is_join_tree(hypergraph_of(q), t->edges()));
}

TEST(JoinTree, TwoAtomsSingleEdge) {
  auto t = gyo_join_tree(parse_query("q(x,z) :- R(x,y), S(y,z)."), JoinTreeMode::Full);
  ASSERT_TRUE(t);
  EXPECT_EQ(t->edges().size(), 1u);
}

TEST(JoinTree, WeakIgnoresAnswerVariables) {
  auto q = parse_query("q(x1,x2,x3) :- R1(x1,x2), R2(x2,x3), R3(x3,x1).");
  EXPECT_FALSE(gyo_join_tree(q, JoinTreeMode::Full));
  EXPECT_TRUE(gyo_join_tree(q, JoinTreeMode::Weak));
}

TEST(JoinTree, MatchesExhaustiveSearch) {
  Rng rng(21);
  testkit::QueryShape shape;
  shape.max_atoms = 6;
  shape.self_joins = true;
  int acyclic = 0;
  int weak = 0;
  for (int round = 0; round < 400; ++round) {
    auto q = testkit::random_query(rng, shape);
    for (JoinTreeMode mode : {JoinTreeMode::Full, JoinTreeMode::Weak}) {
      const auto h = hypergraph_of(q, mode);
      const auto tree = gyo_join_tree(q, mode);
      ASSERT_EQ(tree.has_value(), exhaustive_acyclic(h)) << to_string(q);
      if (!tree) continue;
      EXPECT_TRUE(is_join_tree(h, tree->edges()));
      EXPECT_TRUE(connected_occurrences(h, tree->edges()));
      (mode == JoinTreeMode::Full ? acyclic : weak) += 1;
    }
  }
  EXPECT_GT(acyclic, 50);
  EXPECT_LT(acyclic, 400);
  EXPECT_GE(weak, acyclic);
}

TEST(JoinTree, ValidatorRejectsBrokenTrees) {
  Hypergraph h{{Symbol("a"), Symbol("b")}, {Symbol("b"), Symbol("c")}, {Symbol("c"), Symbol("d")}};
  const Edges good{{0, 1}, {1, 2}};
  const Edges disconnected_b{{0, 2}, {2, 1}};
  const Edges not_spanning{{0, 1}};
  EXPECT_TRUE(is_join_tree(h, good));
  EXPECT_FALSE(is_join_tree(h, disconnected_b));
  EXPECT_FALSE(is_join_tree(h, not_spanning));
}

TEST(FreeConnex, Examples) {
  EXPECT_FALSE(is_free_connex(parse_query("q(x1,x2) :- R1(x1,y), R2(y,x2).")).free_connex);
  EXPECT_TRUE(is_free_connex(parse_query("q(x1,x2,x3) :- R1(x1,x2), R2(x2,x3).")).free_connex);
  EXPECT_TRUE(is_free_connex(parse_query("q() :- R1(x1,y), R2(y,x2).")).free_connex);
}

TEST(FreeConnex, FullAcyclicImpliesFreeConnex) {
  Rng rng(4);
  testkit::QueryShape shape;
  shape.answer_ratio = 1.0;
  for (int round = 0; round < 200; ++round) {
    auto q = testkit::random_query(rng, shape);
    ASSERT_TRUE(q.is_full());
    if (gyo_join_tree(q, JoinTreeMode::Full)) EXPECT_TRUE(is_free_connex(q).free_connex) << to_string(q);
  }
}

TEST(FreeConnex, WitnessIncludesGuard) {
  auto q = parse_query("q(x,y) :- R(x,y), S(y,z).");
  auto r = is_free_connex(q);
  ASSERT_TRUE(r.witness);
  EXPECT_EQ(r.witness->size(), q.atoms().size() + 1);
}

TEST(Trio, Examples) {
  auto q = parse_query("q(x1,x2,x3) :- R(x1,x3), S(x2,x3).");
  auto t = find_disruptive_trio(q, std::vector<Symbol>{Symbol("x1"), Symbol("x2"), Symbol("x3")});
  ASSERT_TRUE(t);
  EXPECT_EQ(*t, (Trio{Symbol("x1"), Symbol("x2"), Symbol("x3")}));
  EXPECT_FALSE(find_disruptive_trio(q, std::vector<Symbol>{Symbol("x3"), Symbol("x1"), Symbol("x2")}));
  auto single = parse_query("q(a,b,c) :- R(a,b,c).");
  EXPECT_FALSE(find_disruptive_trio(single, std::vector<Symbol>{Symbol("c"), Symbol("a"), Symbol("b")}));
  EXPECT_FALSE(find_disruptive_trio(q, std::vector<Symbol>{Symbol("x1"), Symbol("x2")}));
}

TEST(Trio, MatchesBruteForce) {
  Rng rng(8);
  testkit::QueryShape shape;
  shape.max_atoms = 5;
  shape.variables = 6;
  shape.answer_ratio = 0.8;
  for (int round = 0; round < 300; ++round) {
    auto q = testkit::random_query(rng, shape);
    auto order = q.answer_vars();
    std::shuffle(order.begin(), order.end(), rng);
    const auto trio = find_disruptive_trio(q, order);
    ASSERT_EQ(trio.has_value(), brute_force_trio(q, order)) << to_string(q);
    if (trio) {
      EXPECT_FALSE(shares_atom(q, trio->first, trio->second));
      EXPECT_TRUE(shares_atom(q, trio->first, trio->third));
      EXPECT_TRUE(shares_atom(q, trio->second, trio->third));
    }
  }
}

TEST(Syntax, SelfJoinsAndConnectivity) {
  EXPECT_TRUE(is_self_join_free(parse_query(kTriangle)));
  EXPECT_FALSE(is_self_join_free(parse_query("q(x) :- R(x,y), R(y,x).")));
  EXPECT_FALSE(is_connected(parse_query("q(x1,x2) :- R(x1), S(x2).")));
  EXPECT_TRUE(is_connected(parse_query(kTriangle)));
}

TEST(Analyze, ReportFlags) {
  auto r = analyze(parse_query("q(x1,x2,x3) :- R(x1,x3), S(x2,x3)."),
                   std::vector<Symbol>{Symbol("x1"), Symbol("x2"), Symbol("x3")});
  EXPECT_TRUE(r.acyclic);
  EXPECT_TRUE(r.weakly_acyclic);
  EXPECT_TRUE(r.free_connex);
  EXPECT_TRUE(r.full);
  EXPECT_TRUE(r.connected);
  EXPECT_TRUE(r.disruptive_trio);
  EXPECT_THROW(analyze(parse_query("q(x) :- R(x,y)."), std::vector<Symbol>{Symbol("y")}), DomainError);
}

TEST(Profile, TriangleRule) {
  auto p = profile_tgds(parse_tgds("R1(x1,x2), R2(x2,x3) -> R3(x3,x1)."));
  EXPECT_TRUE(p.non_recursive);
  EXPECT_TRUE(p.full);
  EXPECT_FALSE(p.frontier_guarded);
  EXPECT_EQ(p.max_head_arity, 2u);
  EXPECT_EQ(p.max_frontier, 2u);
  EXPECT_EQ(p.order.size(), 2u);
}

TEST(Profile, RoleInclusions) {
  auto p = profile_tgds(parse_tgds("S1(x,y) -> R1(x,y). S2(x,y) -> R2(x,y). R2(x,y) -> P(x,y)."));
  EXPECT_TRUE(p.role_inclusions_only);
  EXPECT_TRUE(p.non_recursive);
  EXPECT_TRUE(p.full);
  EXPECT_TRUE(p.frontier_guarded);
  // S2 reaches P through R2.
  EXPECT_TRUE(std::find(p.order.begin(), p.order.end(), std::pair{Symbol("S2"), Symbol("P")}) != p.order.end());
}

TEST(Profile, UnaryHeadsAndRecursion) {
  auto unary = profile_tgds(parse_tgds("R(x,y) -> S(y)."));
  EXPECT_TRUE(unary.unary_heads_only);
  EXPECT_FALSE(unary.role_inclusions_only);
  auto rec = profile_tgds(parse_tgds("R(x,y) -> S(y,z). S(x,y) -> R(x,y)."));
  EXPECT_FALSE(rec.non_recursive);
  EXPECT_FALSE(rec.full);
  EXPECT_FALSE(rec.chase_terminating());
  auto loop = profile_tgds(parse_tgds("R(x,y) -> R(y,x)."));
  EXPECT_FALSE(loop.non_recursive);
  EXPECT_TRUE(loop.chase_terminating());
  EXPECT_TRUE(profile_tgds({}).frontier_guarded);
}
