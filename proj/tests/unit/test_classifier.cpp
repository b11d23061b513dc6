#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "cqlin/catalog.hpp"
#include "cqlin/classifier.hpp"
#include "cqlin/engines.hpp"
#include "cqlin/errors.hpp"
#include "cqlin/homomorphism.hpp"
#include "cqlin/json.hpp"
#include "cqlin/parser.hpp"
#include "cqlin/structure.hpp"
#include "random_instances.hpp"

using namespace cqlin;
using cqlin::testkit::Rng;

namespace {

Verdict run(const catalog::Instance& inst, EvalMode mode = EvalMode::SingleTest) {
  return classify({inst.query, inst.tgds, mode, std::nullopt});
}

Verdict run(const ConjunctiveQuery& q, const TgdSet& t, EvalMode mode = EvalMode::SingleTest) {
  return classify({q, t, mode, std::nullopt});
}

}  // namespace

TEST(Golden, TriangleWithClosingRule) {
  auto v = run(catalog::triangle(), catalog::triangle_closing_rule());
  EXPECT_EQ(v.status, Status::Tractable);
  EXPECT_EQ(v.theorem, theorem::kBooleanEvaluation);
  ASSERT_TRUE(v.companion);
  EXPECT_EQ(v.companion->atoms().size(), 2u);
  EXPECT_TRUE(analyze(*v.companion).acyclic);
  EXPECT_EQ(v.engine_plan, "tractable:single_test");
}

TEST(Golden, TriangleWithoutRules) {
  auto v = run(catalog::triangle(), {});
  EXPECT_EQ(v.status, Status::ConditionallyHard);
  EXPECT_EQ(v.hypothesis, Hypothesis::Hyperclique);
}

TEST(Golden, TriangleWithGuardRule) {
  auto v = run(catalog::triangle(), catalog::triangle_guard_rule());
  EXPECT_EQ(v.status, Status::Tractable);
  ASSERT_TRUE(v.companion);
  EXPECT_TRUE(analyze(*v.companion).acyclic);
}

TEST(Golden, CliqueGuardThreeIsTriangleHard) {
  auto v = run(catalog::clique_guard(3));
  EXPECT_EQ(v.status, Status::ConditionallyHard);
  EXPECT_EQ(v.hypothesis, Hypothesis::Triangle);
}

TEST(Golden, CliqueGuardFourIsHard) {
  auto v = run(catalog::clique_guard(4));
  EXPECT_EQ(v.status, Status::ConditionallyHard);
  EXPECT_TRUE(v.hypothesis.has_value());
}

TEST(Golden, LargerCliqueGuardsAreOpen) {
  for (std::size_t l = 5; l <= 9; ++l) {
    auto v = run(catalog::clique_guard(l));
    EXPECT_EQ(v.status, Status::Open) << l;
    EXPECT_FALSE(v.hypothesis) << l;
  }
}

TEST(Golden, SquareAngleUsesFilterAndProbe) {
  auto v = run(catalog::square_angle());
  EXPECT_EQ(v.status, Status::Tractable);
  EXPECT_EQ(v.theorem, theorem::kAdhocFilterProbe);
  EXPECT_EQ(v.engine_plan, "demo:qsquare");
}

TEST(Golden, EnumerationExamples) {
  auto endo = run(catalog::endomorphism_enumeration(), EvalMode::Enumerate);
  EXPECT_EQ(endo.status, Status::Tractable);
  EXPECT_EQ(endo.engine_plan, "demo:ex83");

  auto tri = run(catalog::triangle_encoding(), EvalMode::Enumerate);
  EXPECT_EQ(tri.status, Status::ConditionallyHard);
  EXPECT_EQ(tri.hypothesis, Hypothesis::Triangle);

  auto vutd = run(catalog::unbalanced_triangle(), EvalMode::Enumerate);
  EXPECT_EQ(vutd.status, Status::ConditionallyHard);
  EXPECT_EQ(vutd.hypothesis, Hypothesis::Vutd);

  auto open = run(catalog::combined_dangling(), EvalMode::Enumerate);
  EXPECT_EQ(open.status, Status::Open);
}

TEST(Golden, UnaryHeadExamples) {
  auto two_phase = run(catalog::unary_disconnected(), EvalMode::Enumerate);
  EXPECT_EQ(two_phase.status, Status::Tractable);
  EXPECT_EQ(two_phase.engine_plan, "demo:unary");
  EXPECT_EQ(run(catalog::unary_disconnected_path(), EvalMode::Enumerate).status, Status::Open);
}

TEST(Golden, CountingGuardIsOpen) {
  EXPECT_EQ(run(catalog::counting_guard(), EvalMode::Count).status, Status::Open);
}

TEST(Golden, EnumerationOnlyEntriesIgnoreOtherModes) {
  auto v = run(catalog::triangle_encoding(), EvalMode::Count);
  EXPECT_FALSE(v.registry_entry);
}

TEST(Rules, FullCountingOfCyclicQuery) {
  auto q = parse_query("q(x,y,z) :- R(x,y), S(y,z), T(z,x).");
  auto v = run(q, {}, EvalMode::Count);
  EXPECT_EQ(v.status, Status::ConditionallyHard);
  EXPECT_EQ(v.theorem, theorem::kFullCounting);
}

TEST(Rules, CountingAcyclicNotFreeConnexRestsOnSeth) {
  auto q = parse_query("q(x,z) :- R(x,y), S(y,z).");
  auto v = run(q, {}, EvalMode::Count);
  EXPECT_EQ(v.status, Status::ConditionallyHard);
  EXPECT_EQ(v.theorem, theorem::kLinearTagCounting);
  EXPECT_EQ(v.hypothesis, Hypothesis::Seth);
}

TEST(Rules, DirectAccessTrio) {
  auto q = parse_query("q(x,y,z) :- R(x,z), S(z,y).");
  auto bad = classify({q, {}, EvalMode::DirectAccess, std::vector<Symbol>{Symbol("x"), Symbol("y"), Symbol("z")}});
  EXPECT_EQ(bad.status, Status::ConditionallyHard);
  EXPECT_EQ(bad.hypothesis, Hypothesis::LogHyperclique);
  auto good = classify({q, {}, EvalMode::DirectAccess, std::vector<Symbol>{Symbol("x"), Symbol("z"), Symbol("y")}});
  EXPECT_EQ(good.status, Status::Tractable);
  EXPECT_EQ(good.engine_plan, "tractable:direct_access");
}

TEST(Rules, DirectAccessNeedsPermutation) {
  auto q = parse_query("q(x,y) :- R(x,y).");
  EXPECT_THROW(classify({q, {}, EvalMode::DirectAccess, std::nullopt}), DomainError);
  EXPECT_THROW(classify({q, {}, EvalMode::DirectAccess, std::vector<Symbol>{Symbol("x")}}), DomainError);
  EXPECT_NO_THROW(classify({catalog::triangle(), {}, EvalMode::DirectAccess, std::nullopt}));
}

TEST(Rules, UnaryHeadsDecideOnTheQueryItself) {
  auto q = parse_query("q(x,y,z) :- R(x,y), S(y,z), T(z,x), A(x).");
  auto t = parse_tgds("R(x,y) -> A(y).");
  auto v = run(q, t, EvalMode::Enumerate);
  EXPECT_EQ(v.status, Status::ConditionallyHard);
  EXPECT_EQ(v.theorem, theorem::kEnumUnaryHeads);
}

TEST(Rules, BooleanAliasParses) { EXPECT_EQ(parse_eval_mode("boolean"), EvalMode::SingleTest); }

TEST(Explain, NamesPlanHypothesisAndPrecondition) {
  auto tractable = explain(run(catalog::triangle(), catalog::triangle_closing_rule()));
  EXPECT_NE(tractable.find("engine plan: tractable:single_test"), std::string::npos);
  auto hard = explain(run(catalog::triangle(), {}));
  EXPECT_NE(hard.find("hypothesis: HYPERCLIQUE"), std::string::npos);
  auto open = explain(run(catalog::clique_guard(9)));
  EXPECT_NE(open.find("precondition failed"), std::string::npos);
  EXPECT_NE(open.find("rules: full=yes"), std::string::npos);
}

TEST(Json, ExactlySixFields) {
  auto j = verdict_json(run(catalog::triangle(), catalog::triangle_closing_rule()));
  EXPECT_EQ(j.size(), 6u);
  for (const char* k : {"status", "theorem", "companion", "hypothesis", "engine_plan", "notes"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
  EXPECT_EQ(j["status"], "TRACTABLE");
  EXPECT_TRUE(j["hypothesis"].is_null());
}

TEST(Isomorphism, RenamedCliqueMatches) {
  auto base = catalog::clique_guard(3);
  auto renamed_q = parse_query("q() :- E(a,b), F(a,c), G(b,c).");
  auto renamed_t = parse_tgds("E(u,v) -> H(u,v).");
  auto iso = find_isomorphism(renamed_q, renamed_t, base.query, base.tgds);
  ASSERT_TRUE(iso);
  EXPECT_EQ(iso->relations.at(Symbol("H")), Symbol("S"));
  EXPECT_EQ(run(renamed_q, renamed_t).hypothesis, Hypothesis::Triangle);
}

TEST(Isomorphism, StructureMustAgree) {
  auto base = catalog::clique_guard(3);
  // The query fixes every relation, so the rule must sit on R_1_2.
  auto other_atom = parse_tgds("R_2_3(u,v) -> S(u,v).");
  EXPECT_FALSE(find_isomorphism(base.query, other_atom, base.query, base.tgds));
  auto renamed_vars = parse_tgds("R_1_2(a,b) -> S(a,b).");
  EXPECT_TRUE(find_isomorphism(base.query, renamed_vars, base.query, base.tgds));
  auto flipped = parse_tgds("R_1_2(a,b) -> S(b,a).");
  EXPECT_FALSE(find_isomorphism(base.query, flipped, base.query, base.tgds));
  auto two_atoms = parse_query("q() :- R_1_2(y1,y2), R_1_3(y1,y3).");
  EXPECT_FALSE(find_isomorphism(two_atoms, base.tgds, base.query, base.tgds));
  auto e = catalog::triangle_encoding();
  auto swapped = ConjunctiveQuery({Symbol("x2"), Symbol("x1"), Symbol("x3"), Symbol("x4")}, e.query.atoms());
  EXPECT_FALSE(find_isomorphism(swapped, e.tgds, e.query, e.tgds));
}

TEST(Classify, Deterministic) {
  for (const auto& inst : catalog::all()) {
    for (EvalMode m : {EvalMode::SingleTest, EvalMode::AllTest, EvalMode::Count, EvalMode::Enumerate}) {
      EXPECT_EQ(verdict_json(run(inst, m)), verdict_json(run(inst, m))) << inst.name;
      EXPECT_EQ(explain(run(inst, m)), explain(run(inst, m))) << inst.name;
    }
  }
}

TEST(Classify, HardVerdictsCarryHypothesis) {
  for (const auto& inst : catalog::all()) {
    for (EvalMode m : {EvalMode::SingleTest, EvalMode::AllTest, EvalMode::Count, EvalMode::Enumerate}) {
      auto v = run(inst, m);
      if (v.status == Status::ConditionallyHard) EXPECT_TRUE(v.hypothesis) << inst.name;
      if (v.status == Status::Tractable) {
        EXPECT_TRUE(v.engine_plan.starts_with("tractable:") || v.engine_plan.starts_with("demo:")) << inst.name;
      }
    }
  }
}

namespace {

// Runs the planned engine on the companion (or q) and checks it against the
// oracle for q, requiring the structural path.
void check_plan(const Verdict& v, const ConjunctiveQuery& q, const Database& db, const std::vector<Symbol>& order,
                Rng& rng) {
  const ConjunctiveQuery& target = v.companion ? *v.companion : q;
  const AnswerSet truth = brute_force_answers(q, db);
  const std::string plan = v.engine_plan.substr(v.engine_plan.find(':') + 1);
  if (plan == "single_test") {
    std::vector<Tuple> probes(truth.begin(), truth.end());
    if (probes.size() > 3) probes.resize(3);
    for (int k = 0; k < 3; ++k) probes.push_back(testkit::random_tuple(rng, db, q.arity()));
    for (const Tuple& t : probes) {
      auto r = single_test(target, db, t);
      ASSERT_EQ(r.path, EnginePath::Tractable);
      ASSERT_EQ(r.member, truth.count(t) > 0);
    }
  } else if (plan == "all_test") {
    AllTester tester(target, db);
    ASSERT_EQ(tester.path(), EnginePath::Tractable);
    for (const Tuple& t : truth) ASSERT_TRUE(tester.test(t));
    for (int k = 0; k < 3; ++k) {
      Tuple t = testkit::random_tuple(rng, db, q.arity());
      ASSERT_EQ(tester.test(t), truth.count(t) > 0);
    }
  } else if (plan == "count") {
    auto c = count_answers(target, db);
    ASSERT_EQ(c.path, EnginePath::Tractable);
    ASSERT_EQ(c.count, truth.size());
  } else if (plan == "direct_access") {
    PrefixCounter pc(target, order, db);
    ASSERT_EQ(pc.path(), EnginePath::Tractable);
    ASSERT_EQ(pc.total(), truth.size());
    AnswerSet got;
    for (std::uint64_t i = 1; i <= truth.size(); ++i) got.insert(*pc.access(static_cast<std::int64_t>(i)));
    ASSERT_EQ(got, truth);
  } else {
    ASSERT_EQ(plan, "enumerate");
    auto e = enumerate(target, db);
    ASSERT_EQ(e.path, EnginePath::Tractable);
    auto listed = drain(*e.stream).answers;
    ASSERT_EQ(listed.size(), truth.size());
    ASSERT_EQ(AnswerSet(listed.begin(), listed.end()), truth);
  }
}

}  // namespace

TEST(Classify, TractableVerdictsAreSound) {
  Rng rng(2024);
  testkit::QueryShape qs;
  qs.self_joins = true;
  qs.max_atoms = 4;
  testkit::TgdShape ts;
  const EvalMode modes[] = {EvalMode::SingleTest, EvalMode::AllTest, EvalMode::Count, EvalMode::DirectAccess,
                            EvalMode::Enumerate};
  int checked = 0;
  int with_companion = 0;
  std::set<std::string> plans;
  for (int round = 0; checked < 150 && round < 20000; ++round) {
    ts.existentials = round % 2 == 0;
    ts.frontier_guarded = round % 3 == 0;
    ts.count = 1 + round % 3;
    auto q = testkit::random_query(rng, qs);
    auto tgds = testkit::random_tgds(rng, ts);
    if (!testkit::same_schema(q, tgds)) continue;
    const EvalMode mode = modes[round % 5];
    std::vector<Symbol> order = q.answer_vars();
    std::shuffle(order.begin(), order.end(), rng);
    auto v = classify({q, tgds, mode, order});
    if (v.status != Status::Tractable || !v.engine_plan.starts_with("tractable:")) continue;
    ++checked;
    plans.insert(v.engine_plan);
    with_companion += v.companion && *v.companion != q;
    SCOPED_TRACE(to_string(q) + " | " + to_string(tgds) + " | " + v.engine_plan);
    for (int k = 0; k < 50; ++k) {
      auto db = testkit::chased_random_database(rng, q, tgds, 4, 5);
      check_plan(v, q, db, order, rng);
      if (HasFatalFailure()) return;
    }
  }
  EXPECT_EQ(checked, 150);
  EXPECT_GT(with_companion, 20);
  EXPECT_EQ(plans.size(), 5u);
}

TEST(Classify, GoldenTractableVerdictsAreSound) {
  Rng rng(5);
  const std::vector<std::pair<ConjunctiveQuery, TgdSet>> cases{
      {catalog::triangle(), catalog::triangle_closing_rule()},
      {catalog::triangle(), catalog::triangle_guard_rule()},
  };
  for (const auto& [q, t] : cases) {
    auto v = run(q, t);
    ASSERT_EQ(v.status, Status::Tractable);
    for (int k = 0; k < 50; ++k) check_plan(v, q, testkit::chased_random_database(rng, q, t, 4, 8), {}, rng);
  }
}
