// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cqlin/catalog.hpp"
#include "cqlin/chase.hpp"
#include "cqlin/classifier.hpp"
#include "cqlin/engines.hpp"
#include "cqlin/errors.hpp"
#include "cqlin/harness.hpp"
#include "cqlin/homomorphism.hpp"
#include "cqlin/parser.hpp"
#include "cqlin/structure.hpp"
#include "cqlin/tagging.hpp"
#include "random_instances.hpp"

using namespace cqlin;
using cqlin::testkit::Rng;

namespace {

// Pinned tolerances.
constexpr int kOracleInstances = 1000;
constexpr std::size_t kOracleMaxAtoms = 5;
constexpr std::size_t kOracleMaxFacts = 200;
constexpr double kOracleSeconds = 300;
constexpr int kCompanionPairs = 200;
constexpr int kDatabasesPerPair = 20;
constexpr int kChaseInstances = 200;
constexpr int kChaseDatabases = 20;
constexpr double kSlopeTarget = 1.0;
constexpr double kSlopeTolerance = 0.15;
constexpr double kDelaySpread = 2.0;
constexpr double kAccessSpread = 0.5;
constexpr int kSquareDatabases = 200;
constexpr int kCheaterRuns = 300;

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

// Answers of q ordered lexicographically by order under the domain ranks.
std::vector<Tuple> sorted_by(const AnswerSet& answers, const ConjunctiveQuery& q, const std::vector<Symbol>& order,
                             const Database& db) {
  std::vector<Tuple> out(answers.begin(), answers.end());
  std::vector<std::size_t> pos;
  for (Symbol v : order) pos.push_back(std::find(q.answer_vars().begin(), q.answer_vars().end(), v) - q.answer_vars().begin());
  std::sort(out.begin(), out.end(), [&](const Tuple& a, const Tuple& b) {
    for (std::size_t p : pos) {
      if (a[p] != b[p]) return *db.rank(a[p]) < *db.rank(b[p]);
    }
    return false;
  });
  return out;
}

// A cycle of 3 to 5 binary atoms, self-joins allowed, random answer set.
ConjunctiveQuery cycle_query(Rng& rng) {
  const std::size_t k = testkit::pick(rng, 3, kOracleMaxAtoms);
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < k; ++i) {
    // odd relation indices have arity 2 when max_arity is 2
    atoms.push_back({testkit::relation(2 * testkit::pick(rng, 0, 2) + 1), {testkit::var(i), testkit::var((i + 1) % k)}});
  }
  std::vector<Symbol> answers;
  for (std::size_t i = 0; i < k; ++i) {
    if (testkit::pick(rng, 0, 1)) answers.push_back(testkit::var(i));
  }
  std::shuffle(answers.begin(), answers.end(), rng);
  return ConjunctiveQuery(answers, atoms);
}

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  Rng rng(101);
  int mismatches = 0;
  int tractable = 0;
  int fallback = 0;
  std::string first;
  auto fail = [&](const std::string& what, const ConjunctiveQuery& q) {
    if (mismatches++ == 0) first = what + " on " + to_string(q);
  };
  for (int round = 0; round < kOracleInstances; ++round) {
    testkit::QueryShape shape;
    shape.max_atoms = kOracleMaxAtoms;
    shape.self_joins = round % 2 == 1;
    shape.variables = 4 + round % 3;
    shape.relations = 6;
    shape.max_arity = 2 + round % 2;
    shape.min_atoms = 2;
    const auto q = round % 4 == 0 ? cycle_query(rng) : testkit::random_query(rng, shape);
    std::size_t rels = 0;
    {
      std::set<Symbol> seen;
      for (const Atom& a : q.atoms()) seen.insert(a.relation);
      rels = seen.size();
    }
    const std::size_t per = testkit::pick(rng, 1, kOracleMaxFacts / rels);
    const auto db = testkit::random_database(rng, q.atoms(), testkit::pick(rng, 3, 12), per);
    if (db.size() > kOracleMaxFacts) throw Error("oracle instance too large");
    const AnswerSet truth = brute_force_answers(q, db);
    tractable += analyze(q).acyclic && is_free_connex(q).free_connex;

    if (count_answers(q, db).count != truth.size()) fail("count", q);
    auto en = enumerate(q, db);
    fallback += en.path == EnginePath::Fallback;
    auto listed = drain(*en.stream).answers;
    if (listed.size() != truth.size() || AnswerSet(listed.begin(), listed.end()) != truth) fail("enumerate", q);

    AllTester tester(q, db);
    for (int k = 0; k < 6; ++k) {
      Tuple t = k % 2 == 0 && !truth.empty() ? *std::next(truth.begin(), testkit::pick(rng, 0, truth.size() - 1))
                                             : testkit::random_tuple(rng, db, q.arity());
      const bool expected = truth.count(t) > 0;
      if (tester.test(t) != expected) fail("all_test", q);
      if (single_test(q, db, t).member != expected) fail("single_test", q);
    }

    std::vector<Symbol> order = q.answer_vars();
    std::shuffle(order.begin(), order.end(), rng);
    PrefixCounter pc(q, order, db);
    const auto sorted = sorted_by(truth, q, order, db);
    if (pc.total() != sorted.size()) fail("direct_access total", q);
    for (std::size_t i = 0; i < sorted.size() && i < 64; ++i) {
      if (pc.access(static_cast<std::int64_t>(i + 1)) != sorted[i]) fail("direct_access", q);
    }
    if (pc.access(static_cast<std::int64_t>(sorted.size() + 1)).has_value()) fail("direct_access past end", q);
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = mismatches == 0 && secs < kOracleSeconds;
  o.detail = std::to_string(kOracleInstances) + " instances (" + std::to_string(tractable) +
             " acyclic free-connex, " + std::to_string(fallback) +
             " on the generic join), " + std::to_string(mismatches) + " mismatches, " + fmt(secs) + "s";
  if (!first.empty()) o.detail += "; first: " + first;
  return o;
}

Outcome tagging_transfer() {
  Rng rng(202);
  testkit::QueryShape qs;
  qs.self_joins = true;
  qs.max_atoms = 3;
  int built = 0;
  int violations = 0;
  std::map<std::string, int> methods;
  std::string first;
  for (int round = 0; built < kCompanionPairs; ++round) {
    testkit::TgdShape ts;
    switch (round % 3) {
      case 0:
        ts.max_arity = 2;
        break;
      case 1:
        ts.existentials = false;
        ts.frontier_guarded = true;
        ts.non_recursive = false;
        break;
      default:
        ts.variables = 2;
        break;
    }
    qs.max_arity = ts.max_arity;
    const auto q = testkit::random_query(rng, qs);
    const auto tgds = testkit::random_tgds(rng, ts);
    const auto c = best_companion(q, tgds);
    if (!c) continue;
    ++built;
    ++methods[to_string(c->method)];
    for (int k = 0; k < kDatabasesPerPair; ++k) {
      const auto db = testkit::random_database(rng, c->sjf.query.atoms(), 3, 4);
      const auto tagged_db = c->build(db);
      const bool sat = satisfies_tgds(tagged_db, tgds).satisfied;
      const AnswerSet direct = brute_force_answers(c->sjf.query, db);
      const AnswerSet via_tag = untag_answers(brute_force_answers(q, tagged_db), q.answer_vars());
      if (!sat || direct != via_tag) {
        if (violations++ == 0) first = to_string(q) + " | " + to_string(tgds) + (sat ? " (transfer)" : " (rules)");
      }
    }
  }
  Outcome o;
  o.pass = violations == 0;
  o.detail = std::to_string(built) + " pairs x " + std::to_string(kDatabasesPerPair) + " databases (flood " +
             std::to_string(methods["flood"]) + ", filter " + std::to_string(methods["filter"]) + "), " +
             std::to_string(violations) + " violations";
  if (!first.empty()) o.detail += "; first: " + first;
  return o;
}

Outcome chase_core() {
  Rng rng(303);
  testkit::QueryShape qs;
  qs.self_joins = true;
  testkit::TgdShape ts;
  ts.count = 3;
  int checked = 0;
  int failures = 0;
  int nondeterministic = 0;
  int core_shrunk = 0;
  std::string first;
  auto fail = [&](const std::string& what) {
    if (failures++ == 0) first = what;
  };
  for (int round = 0; checked < kChaseInstances; ++round) {
    ts.existentials = round % 2 == 0;
    ts.non_recursive = round % 3 != 0 || ts.existentials;
    const auto q = testkit::random_query(rng, qs);
    const auto tgds = testkit::random_tgds(rng, ts);
    if (!testkit::same_schema(q, tgds)) continue;
    ConjunctiveQuery ch;
    try {
      ch = chase_query(q, tgds);
    } catch (const BudgetExhausted&) {
      continue;
    }
    ++checked;
    const std::string label = to_string(q) + " | " + to_string(tgds);
    if (!equiv_wrt(q, ch, tgds)) fail("equiv_wrt " + label);
    for (int k = 0; k < kChaseDatabases; ++k) {
      const auto base = testkit::random_database(rng, ch.atoms(), 3, 4);
      const auto a = skolem_chase(base, tgds);
      const auto b = skolem_chase(base, tgds);
      if (to_string(a.instance) != to_string(b.instance) || a.frontier_log != b.frontier_log) ++nondeterministic;
      const Database& db = a.instance;
      if (brute_force_answers(q, db) != brute_force_answers(ch, db)) fail("answers " + label);
      if (k < 4) {
        const auto core = core_of_database(db);
        core_shrunk += core.size() < db.size();
        if (!satisfies_tgds(core, tgds).satisfied) fail("core " + label);
      }
    }
  }
  Outcome o;
  o.pass = failures == 0 && nondeterministic == 0 && core_shrunk > 0;
  o.detail = std::to_string(checked) + " instances, " + std::to_string(failures) + " failures, " +
             std::to_string(nondeterministic) + " nondeterministic chases, " + std::to_string(core_shrunk) +
             " proper cores";
  if (!first.empty()) o.detail += "; first: " + first;
  return o;
}

Outcome golden_rows() {
  struct Row {
    std::string name;
    std::function<bool()> check;
  };
  auto verdict = [](const ConjunctiveQuery& q, const TgdSet& t, EvalMode m) { return classify({q, t, m, std::nullopt}); };
  auto of = [&](const catalog::Instance& i, EvalMode m = EvalMode::SingleTest) { return verdict(i.query, i.tgds, m); };
  const std::vector<Row> rows{
      {"triangle + closing rule",
       [&] { return verdict(catalog::triangle(), catalog::triangle_closing_rule(), EvalMode::SingleTest).status == Status::Tractable; }},
      {"triangle, no rules",
       [&] {
         auto v = verdict(catalog::triangle(), {}, EvalMode::SingleTest);
         return v.status == Status::ConditionallyHard && v.hypothesis == Hypothesis::Hyperclique;
       }},
      {"triangle + guard rule",
       [&] {
         auto v = verdict(catalog::triangle(), catalog::triangle_guard_rule(), EvalMode::SingleTest);
         return v.status == Status::Tractable && v.companion && analyze(*v.companion).acyclic;
       }},
      {"3-clique guard",
       [&] {
         auto v = of(catalog::clique_guard(3));
         return v.status == Status::ConditionallyHard && v.hypothesis == Hypothesis::Triangle;
       }},
      {"4-clique guard",
       [&] {
         auto v = of(catalog::clique_guard(4));
         return v.status == Status::ConditionallyHard && v.hypothesis.has_value();
       }},
      {"l-clique guard, l=5..9",
       [&] {
         for (std::size_t l = 5; l <= 9; ++l) {
           if (of(catalog::clique_guard(l)).status != Status::Open) return false;
         }
         return true;
       }},
      {"square with diagonal",
       [&] {
         auto v = of(catalog::square_angle());
         return v.status == Status::Tractable && v.theorem == theorem::kAdhocFilterProbe && v.engine_plan == "demo:qsquare";
       }},
      {"endomorphism enumeration",
       [&] {
         auto v = of(catalog::endomorphism_enumeration(), EvalMode::Enumerate);
         return v.status == Status::Tractable && v.engine_plan == "demo:ex83";
       }},
      {"triangle encoding shape",
       [&] {
         auto v = of(catalog::triangle_encoding(), EvalMode::Enumerate);
         return v.status == Status::ConditionallyHard && v.hypothesis == Hypothesis::Triangle;
       }},
      {"unbalanced triangle",
       [&] {
         auto v = of(catalog::unbalanced_triangle(), EvalMode::Enumerate);
         return v.status == Status::ConditionallyHard && v.hypothesis == Hypothesis::Vutd;
       }},
      {"combined dangling atoms", [&] { return of(catalog::combined_dangling(), EvalMode::Enumerate).status == Status::Open; }},
  };
  Outcome o;
  int ok = 0;
  for (const Row& r : rows) {
    if (r.check()) {
      ++ok;
    } else {
      o.pass = false;
      o.detail += (o.detail.empty() ? "wrong: " : ", ") + r.name;
    }
  }
  o.detail = std::to_string(ok) + "/" + std::to_string(rows.size()) + " rows" + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

Outcome scaling() {
  const auto t0 = Clock::now();
  harness::BenchSpec spec;
  spec.seed = 5;
  spec.workload = "enumerate";
  const auto en = harness::bench(spec);
  spec.workload = "direct_access";
  const auto da = harness::bench(spec);

  bool tractable = true;
  std::uint64_t dmin = UINT64_MAX, dmax = 0;
  for (const auto& r : en.rows) {
    tractable = tractable && r.path == "tractable";
    dmin = std::min(dmin, r.max_delay);
    dmax = std::max(dmax, r.max_delay);
  }
  double cmean = 0;
  for (const auto& r : da.rows) {
    tractable = tractable && r.path == "tractable";
    cmean += r.probe_per_log;
  }
  cmean /= static_cast<double>(da.rows.size());
  double cdev = 0;
  for (const auto& r : da.rows) cdev = std::max(cdev, std::abs(r.probe_per_log - cmean) / cmean);

  const bool slope_ok = std::abs(en.preprocess_slope - kSlopeTarget) <= kSlopeTolerance &&
                        std::abs(da.preprocess_slope - kSlopeTarget) <= kSlopeTolerance;
  const double spread = dmin == 0 ? INFINITY : static_cast<double>(dmax) / static_cast<double>(dmin);
  Outcome o;
  o.pass = tractable && slope_ok && spread <= kDelaySpread && cdev <= kAccessSpread;
  o.detail = "preprocess slope enum " + fmt(en.preprocess_slope) + " access " + fmt(da.preprocess_slope) +
             ", delay spread " + fmt(spread) + "x, access c=" + fmt(cmean) + " max deviation " + fmt(100 * cdev) +
             "%, " + fmt(seconds_since(t0)) + "s";
  if (!tractable) o.detail += ", fallback path taken";
  return o;
}

Outcome qsquare() {
  const auto inst = catalog::square_angle();
  int mismatches = 0;
  int positive = 0;
  for (int k = 0; k < kSquareDatabases; ++k) {
    const std::size_t facts = 4 + static_cast<std::size_t>(k % 40);
    const std::size_t domain = 2 + static_cast<std::size_t>(k % 7);
    const auto db = harness::gen_random_satisfying(inst.query, inst.tgds, facts, domain, 1000 + k);
    const bool truth = !brute_force_answers(inst.query, db).empty();
    positive += truth;
    if (harness::demo_qsquare(db).answer != truth) ++mismatches;
  }
  harness::BenchSpec spec;
  spec.workload = "qsquare";
  const auto b = harness::bench(spec);
  Outcome o;
  o.pass = mismatches == 0 && std::abs(b.preprocess_slope - kSlopeTarget) <= kSlopeTolerance;
  o.detail = std::to_string(kSquareDatabases) + " databases (" + std::to_string(positive) + " true), " +
             std::to_string(mismatches) + " mismatches, step slope " + fmt(b.preprocess_slope);
  return o;
}

// Replays a list where each item costs a chosen number of steps.
class CostedStream : public AnswerStream {
 public:
  CostedStream(std::vector<Tuple> items, std::vector<std::uint64_t> costs)
      : items_(std::move(items)), costs_(std::move(costs)) {}
  std::optional<Tuple> next() override {
    if (i_ == items_.size()) {
      steps_ += 1;
      return std::nullopt;
    }
    steps_ += costs_[i_];
    return items_[i_++];
  }
  std::uint64_t steps() const override { return steps_; }

 private:
  std::vector<Tuple> items_;
  std::vector<std::uint64_t> costs_;
  std::size_t i_ = 0;
  std::uint64_t steps_ = 0;
};

// Duplicate layouts: bursts of one answer, copies deferred to the tail, and
// random interleavings.
std::vector<Tuple> adversarial_items(Rng& rng, std::size_t distinct, std::size_t m, int layout) {
  std::vector<Tuple> out;
  auto val = [](std::size_t i) { return Tuple{constant("a" + std::to_string(i))}; };
  switch (layout) {
    case 0:
      for (std::size_t i = 0; i < distinct; ++i) {
        for (std::size_t c = 0; c < m; ++c) out.push_back(val(i));
      }
      break;
    case 1:
      for (std::size_t c = 0; c < m; ++c) {
        for (std::size_t i = 0; i < distinct; ++i) out.push_back(val(i));
      }
      break;
    case 2: {
      for (std::size_t i = 0; i < distinct; ++i) out.push_back(val(i));
      for (std::size_t i = 0; i < distinct / 4; ++i) {
        for (std::size_t c = 1; c < m; ++c) out.push_back(val(i));
      }
      break;
    }
    default: {
      for (std::size_t i = 0; i < distinct; ++i) {
        const std::size_t copies = testkit::pick(rng, 1, m);
        for (std::size_t c = 0; c < copies; ++c) out.push_back(val(i));
      }
      std::shuffle(out.begin(), out.end(), rng);
    }
  }
  return out;
}

Outcome cheaters() {
  Rng rng(707);
  int failures = 0;
  double worst = 0;
  for (int run = 0; run < kCheaterRuns; ++run) {
    const std::size_t m = run % 2 == 0 ? 2 : 3;
    const std::size_t distinct = testkit::pick(rng, 1, 300);
    const auto items = adversarial_items(rng, distinct, m, run % 4);
    std::vector<std::uint64_t> costs(items.size());
    const std::uint64_t cap = testkit::pick(rng, 1, 9);
    for (auto& c : costs) c = testkit::pick(rng, 1, cap);
    const auto inner = drain(*std::make_unique<CostedStream>(items, costs));
    auto out = drain(*cheaters_dedup(std::make_unique<CostedStream>(items, costs), m));
    const AnswerSet expected(items.begin(), items.end());
    const AnswerSet got(out.answers.begin(), out.answers.end());
    const std::uint64_t bound = cheater_delay_bound(m, inner.max_delay);
    worst = std::max(worst, static_cast<double>(out.max_delay) / static_cast<double>(bound));
    if (got.size() != out.answers.size() || got != expected || out.max_delay > bound) ++failures;
  }
  Outcome o;
  o.pass = failures == 0;
  o.detail = std::to_string(kCheaterRuns) + " streams (m=2,3), " + std::to_string(failures) +
             " failures, worst delay/bound " + fmt(worst);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle equivalence", oracle_equivalence},
      {"tagging transfer", tagging_transfer},
      {"chase and core properties", chase_core},
      {"golden verdicts", golden_rows},
      {"scaling", scaling},
      {"square with diagonal demo", qsquare},
      {"duplicate removal", cheaters},
  };
  bool all = true;
  int n = 0;
  for (const auto& [name, run] : criteria) {
    ++n;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("criterion %d %s: %s (%s)\n", n, name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
