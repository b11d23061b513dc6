#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cqlin/database.hpp"
#include "cqlin/engines.hpp"
#include "cqlin/query.hpp"

namespace cqlin::harness {

// Simple undirected graph on vertices 0..n-1; edges stored once with u < v.
struct Graph {
  std::size_t vertices = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
};

// `u v` per line with non-negative integer ids; '#' starts a comment.
// Self-loops raise DomainError, repeated edges collapse.
Graph parse_edge_list(std::string_view text);
// G(n, m): m distinct edges drawn uniformly.
Graph random_graph(std::size_t n, std::size_t m, std::uint64_t seed);

Value vertex(std::uint32_t v);  // constant v<id>

// R1 = R2 = R3 = both orientations of every edge.
Database gen_triangle_db(const Graph& g);
// R_i_j = both orientations for all i < j. S is either every (l-1)-tuple of
// vertices (flood) or exactly the guards the rule derives.
Database gen_clique_db(std::size_t l, const Graph& g, bool flood_s);
// Per edge {a,b} with a < b: R1(a,b), R2(a,b), S2(a,b), R1(a,a), S1(a,a).
Database gen_ex84_db(const Graph& g);

// Tripartite graph with |V1| = n, |V2| = |V3| = ceil(n^alpha), each possible
// edge present with probability density.
struct TripartiteGraph {
  std::size_t n1 = 0, n2 = 0, n3 = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> e12, e13, e32;  // (V1,V2), (V1,V3), (V3,V2)
};
TripartiteGraph random_tripartite(std::size_t n, double alpha, double density, std::uint64_t seed);
bool has_triangle(const TripartiteGraph& g);
// S1 = P1 = E32, R1 = E32 ∪ E12, S2 = P2 = diagonal of V3, R2 = S2 ∪ E13.
// alpha must lie in (0, 1/3].
Database gen_vutd_db(const TripartiteGraph& g);

// Random facts over every relation of q and the rules, closed under the
// rules; nulls become fresh constants n<k>. Throws BudgetExhausted.
Database gen_random_satisfying(const ConjunctiveQuery& q, const TgdSet& tgds, std::size_t facts, std::size_t domain,
                               std::uint64_t seed, std::uint64_t chase_budget = 1'000'000);

// Generated database with the query and rules it is meant for.
struct Generated {
  Database db;
  ConjunctiveQuery query;
  TgdSet tgds;
};

enum class GeneratorKind { Triangle, KClique, SFloodedClique, Ex84, Vutd, Random };
std::optional<GeneratorKind> parse_generator_kind(std::string_view text);
std::string to_string(GeneratorKind k);

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::Triangle;
  std::size_t l = 3;             // clique kinds
  std::size_t vertices = 50;     // graph kinds; |V1| for VUTD
  std::size_t edges = 200;       // graph kinds
  double alpha = 1.0 / 3.0;      // VUTD
  double density = 0.5;          // VUTD
  std::size_t facts = 1000;      // random
  std::size_t domain = 100;      // random
  std::optional<ConjunctiveQuery> query;  // random
  TgdSet tgds;                            // random
  std::optional<Graph> graph;    // replaces the random graph when set
  std::uint64_t seed = 1;
};

Generated generate(const GeneratorSpec& spec);

// ---------------------------------------------------------------- demos

struct QsquareResult {
  bool answer = false;
  std::uint64_t steps = 0;
};

// Boolean evaluation of the square with a diagonal: keep the S facts that
// join L and R, then for each probe one L fact and test T. With check set,
// a database violating the two rules raises PreconditionError.
QsquareResult demo_qsquare(const Database& db, bool check = true);

// Enumeration of the five-variable endomorphism example. dedup = false
// exposes the raw stream, where an answer shows up at most twice.
Enumeration demo_ex83_enumerate(const Database& db, bool check = true, bool dedup = true);

// Two-phase enumeration of q(x1,x2,x3) <- R1(x1,z), R2(z,x2), S(x3) under
// R1(v1,v2) -> S(v2).
Enumeration demo_unary_disconnected(const Database& db, bool check = true, bool dedup = true);

// ---------------------------------------------------------------- bench

struct BenchSpec {
  // enumerate, count, all_test, single_test, direct_access, qsquare
  std::string workload = "enumerate";
  std::string query;  // empty: the workload's default query
  std::vector<std::size_t> sizes{10'000, 100'000, 1'000'000};
  std::uint64_t seed = 1;
  std::size_t threads = 0;       // 0: hardware concurrency
  std::size_t probes = 200;      // tests or accesses per size
  std::size_t max_outputs = 20'000;  // enumeration outputs drained per size
};

struct BenchRow {
  std::size_t size = 0;
  std::size_t facts = 0;
  std::string path;
  std::uint64_t preprocess_steps = 0;
  std::uint64_t max_delay = 0;      // enumerate
  std::uint64_t max_probe_steps = 0;  // access or test
  double probe_per_log = 0;          // max_probe_steps / log2(facts)
  std::uint64_t outputs = 0;
  std::uint64_t answer = 0;           // count, or 0/1
};

struct BenchReport {
  BenchSpec spec;
  std::vector<BenchRow> rows;
  double preprocess_slope = 0;  // least squares on log(steps) against log(facts)
};

BenchReport bench(const BenchSpec& spec);
double loglog_slope(const std::vector<std::pair<double, double>>& points);
nlohmann::json to_json(const BenchReport& r);
std::string to_csv(const BenchReport& r);

}  // namespace cqlin::harness
