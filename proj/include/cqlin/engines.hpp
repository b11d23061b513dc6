#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cqlin/database.hpp"
#include "cqlin/query.hpp"

namespace cqlin {

enum class EvalMode { SingleTest, AllTest, Count, DirectAccess, Enumerate };
std::string to_string(EvalMode m);
// Accepts single, all, count, access, enum (and the long names).
std::optional<EvalMode> parse_eval_mode(std::string_view text);

// Which algorithm ran: the structural one, or the generic join pipeline.
enum class EnginePath { Tractable, Fallback };
std::string to_string(EnginePath p);

// Logical operation counts: rows scanned, hash probes, tuple emissions.
struct StepCounters {
  std::uint64_t preprocess = 0;
  std::uint64_t operations = 0;
};

struct SingleTestResult {
  bool member = false;
  EnginePath path = EnginePath::Tractable;
  std::uint64_t steps = 0;
};

// Substitutes the tuple for the answer variables and decides nonemptiness,
// by semijoin elimination when the rest is acyclic.
SingleTestResult single_test(const ConjunctiveQuery& q, const Database& db, std::span<const Value> tuple);

namespace detail {
struct FreeConnexPlan;
struct LayeredPlan;
}  // namespace detail

// Preprocess once, then answer membership questions with one probe per
// reduced relation.
class AllTester {
 public:
  AllTester(const ConjunctiveQuery& q, const Database& db);
  ~AllTester();
  AllTester(AllTester&&) noexcept;
  AllTester& operator=(AllTester&&) noexcept;

  bool test(std::span<const Value> tuple, std::uint64_t* steps = nullptr) const;
  EnginePath path() const { return path_; }
  std::uint64_t preprocess_steps() const { return preprocess_steps_; }

 private:
  std::size_t arity_;
  EnginePath path_;
  std::uint64_t preprocess_steps_ = 0;
  std::unique_ptr<detail::FreeConnexPlan> plan_;
  std::vector<Symbol> answer_vars_;
};

struct CountResult {
  std::uint64_t count = 0;
  EnginePath path = EnginePath::Tractable;
  std::uint64_t steps = 0;
};

// Throws DomainError if the count does not fit in 64 bits.
CountResult count_answers(const ConjunctiveQuery& q, const Database& db);

// Answers whose first r-1 order variables equal fixed and whose r-th one
// lies in [range.first, range.second] under the database's domain order.
// Without a range, every listed prefix value is fixed exactly.
struct PrefixConstraint {
  std::vector<Value> fixed;
  std::optional<std::pair<Value, Value>> range;

  // From explicit value sets per prefix position: all but the last must be
  // singletons and the last must be contiguous in the domain order.
  static PrefixConstraint from_sets(const std::vector<std::vector<Value>>& sets, const Database& db);
};

// Lexicographic counting and access under a variable order. The order must
// list every answer variable once.
class PrefixCounter {
 public:
  PrefixCounter(const ConjunctiveQuery& q, std::vector<Symbol> order, const Database& db);
  ~PrefixCounter();
  PrefixCounter(PrefixCounter&&) noexcept;
  PrefixCounter& operator=(PrefixCounter&&) noexcept;

  std::uint64_t count(const PrefixConstraint& c, std::uint64_t* steps = nullptr) const;
  std::uint64_t total() const { return total_; }
  EnginePath path() const { return path_; }
  std::uint64_t preprocess_steps() const { return preprocess_steps_; }
  const std::vector<Symbol>& order() const { return order_; }

  // i is 1-based; nullopt past the last answer. Throws DomainError for i <= 0.
  std::optional<Tuple> access(std::int64_t i, std::uint64_t* steps = nullptr) const;

 private:
  const Database* db_;
  std::vector<Symbol> answer_vars_;
  std::vector<Symbol> order_;
  EnginePath path_;
  std::uint64_t preprocess_steps_ = 0;
  std::uint64_t total_ = 0;
  std::unique_ptr<detail::LayeredPlan> plan_;
  std::vector<Tuple> sorted_;  // fallback only, in order-variable layout
};

using DirectAccessor = PrefixCounter;

class AnswerStream {
 public:
  virtual ~AnswerStream() = default;
  virtual std::optional<Tuple> next() = 0;
  // Cumulative logical steps since construction, preprocessing excluded.
  virtual std::uint64_t steps() const = 0;
};

struct Enumeration {
  std::unique_ptr<AnswerStream> stream;
  EnginePath path = EnginePath::Tractable;
  std::uint64_t preprocess_steps = 0;
};

Enumeration enumerate(const ConjunctiveQuery& q, const Database& db);

// Stream over a fixed list.
std::unique_ptr<AnswerStream> list_stream(std::vector<Tuple> answers);

// Removes duplicates from a stream in which no answer repeats more than m
// times: each output pulls up to m inner items and releases one buffered
// new answer. Throws ContractViolation once an answer shows up m+1 times.
std::unique_ptr<AnswerStream> cheaters_dedup(std::unique_ptr<AnswerStream> inner, std::size_t m);
// Largest gap between outputs of cheaters_dedup given the inner stream's.
std::uint64_t cheater_delay_bound(std::size_t m, std::uint64_t inner_max_delay);

struct DelayProfile {
  std::vector<Tuple> answers;
  std::uint64_t max_delay = 0;  // steps between consecutive outputs, including start and end
  std::uint64_t total_steps = 0;
};

DelayProfile drain(AnswerStream& stream);

}  // namespace cqlin
