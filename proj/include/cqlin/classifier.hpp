#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cqlin/engines.hpp"
#include "cqlin/query.hpp"
#include "cqlin/structure.hpp"

namespace cqlin {

enum class Status { Tractable, ConditionallyHard, Open };
enum class Hypothesis { Hyperclique, Triangle, Bmm, Seth, LogHyperclique, Vutd };

std::string to_string(Status s);        // TRACTABLE, CONDITIONALLY_HARD, OPEN
std::string to_string(Hypothesis h);    // HYPERCLIQUE, TRIANGLE, ...

// Theorem keys name the result applied, not where it is stated.
namespace theorem {
inline constexpr const char* kBooleanEvaluation = "BOOLEAN_EVALUATION_DICHOTOMY";
inline constexpr const char* kSingleTesting = "SINGLE_TESTING_DICHOTOMY";
inline constexpr const char* kAllTesting = "ALL_TESTING_DICHOTOMY";
inline constexpr const char* kFullCounting = "FULL_COUNTING_DICHOTOMY";
inline constexpr const char* kLinearTagCounting = "COUNTING_DICHOTOMY_LINEAR_TAGGING";
inline constexpr const char* kDirectAccess = "DIRECT_ACCESS_TRIO_DICHOTOMY";
inline constexpr const char* kEnumArityTwo = "ENUMERATION_ARITY_TWO";
inline constexpr const char* kEnumUnaryHeads = "ENUMERATION_UNARY_HEADS";
inline constexpr const char* kEquivalentRewriting = "EQUIVALENT_TRACTABLE_REWRITING";
inline constexpr const char* kAdhocFilterProbe = "ADHOC_FILTER_AND_PROBE";
inline constexpr const char* kCliqueFlooding = "CLIQUE_GUARD_FLOODING";
inline constexpr const char* kEndomorphismEnumeration = "ENDOMORPHISM_ENUMERATION";
inline constexpr const char* kTwoPhaseUnary = "TWO_PHASE_UNARY_ENUMERATION";
inline constexpr const char* kTriangleEncoding = "TRIANGLE_ENCODING";
inline constexpr const char* kUnbalancedTriangleEncoding = "UNBALANCED_TRIANGLE_ENCODING";
inline constexpr const char* kKnownOpen = "KNOWN_OPEN_CASE";
inline constexpr const char* kNone = "NONE";
}  // namespace theorem

struct Verdict {
  Status status = Status::Open;
  std::string theorem = theorem::kNone;
  std::optional<ConjunctiveQuery> companion;
  std::optional<Hypothesis> hypothesis;
  // "tractable:<mode>" runs that engine on the companion (or the query when
  // there is none), "demo:<name>" names a harness algorithm, "fallback:<mode>"
  // is the generic join pipeline.
  std::string engine_plan;
  std::string notes;

  // Decision trail for explain(); not part of the serialized verdict.
  EvalMode mode = EvalMode::SingleTest;
  TgdSetProfile profile;
  std::optional<StructureReport> structure;
  std::optional<std::string> registry_entry;
  std::vector<std::string> trail;
};

struct ClassifyRequest {
  ConjunctiveQuery query;
  TgdSet tgds;
  EvalMode mode = EvalMode::SingleTest;
  std::optional<std::vector<Symbol>> order;  // direct access only
};

// Throws DomainError when direct access lacks a permutation of the answer
// variables as order (Boolean queries may omit it).
Verdict classify(const ClassifyRequest& request);

std::string explain(const Verdict& v);

// Relation and variable bijection between two (query, rules) pairs that
// keeps answer positions; empty when none exists.
struct Isomorphism {
  std::map<Symbol, Symbol> relations;
  std::map<Symbol, Symbol> variables;
};
std::optional<Isomorphism> find_isomorphism(const ConjunctiveQuery& q1, const TgdSet& t1, const ConjunctiveQuery& q2,
                                            const TgdSet& t2);

}  // namespace cqlin
