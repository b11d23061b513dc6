#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "cqlin/chase.hpp"
#include "cqlin/classifier.hpp"
#include "cqlin/engines.hpp"
#include "cqlin/errors.hpp"
#include "cqlin/harness.hpp"
#include "cqlin/homomorphism.hpp"
#include "cqlin/json.hpp"
#include "cqlin/parser.hpp"
#include "cqlin/structure.hpp"
#include "cqlin/tagging.hpp"

using namespace cqlin;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kDomain = 2, kBudget = 3 };

struct Config {
  std::uint64_t chase_budget = kDefaultChaseBudget;
  std::vector<std::size_t> bench_sizes{10'000, 100'000, 1'000'000};
  std::string output_format = "json";
  std::uint64_t seed = 1;
};

// Defaults, then the config file, then the environment; flags come last.
Config load_config(const std::string& path, bool explicit_path) {
  Config c;
  if (std::ifstream probe(path); probe) {
    toml::table t;
    try {
      t = toml::parse_file(path);
    } catch (const toml::parse_error& e) {
      throw ParseError(std::string(e.description()), e.source().begin.line, e.source().begin.column);
    }
    if (auto v = t["chase_budget"].value<std::int64_t>()) c.chase_budget = static_cast<std::uint64_t>(*v);
    if (auto v = t["output_format"].value<std::string>()) c.output_format = *v;
    if (auto v = t["seed"].value<std::int64_t>()) c.seed = static_cast<std::uint64_t>(*v);
    if (auto* arr = t["bench_sizes"].as_array()) {
      c.bench_sizes.clear();
      for (auto& x : *arr) {
        if (auto v = x.value<std::int64_t>()) c.bench_sizes.push_back(static_cast<std::size_t>(*v));
      }
    }
  } else if (explicit_path) {
    throw DomainError("cannot open config " + path);
  }
  if (const char* env = std::getenv("CQLIN_CHASE_BUDGET")) {
    try {
      c.chase_budget = std::stoull(env);
    } catch (const std::exception&) {
      throw DomainError(std::string("CQLIN_CHASE_BUDGET is not a number: ") + env);
    }
  }
  if (c.output_format != "json" && c.output_format != "text") {
    throw DomainError("output_format must be json or text, got " + c.output_format);
  }
  return c;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<Symbol> parse_order(const std::string& s) {
  std::vector<Symbol> out;
  for (const auto& v : split(s)) out.emplace_back(v);
  return out;
}

Tuple parse_tuple(const std::string& s) {
  Tuple t;
  for (const auto& v : split(s)) t.push_back(constant(v));
  return t;
}

json tuple_json(std::span<const Value> t) {
  json out = json::array();
  for (Value v : t) out.push_back(render_constant(v));
  return out;
}

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw DomainError("cannot write " + out_path);
  f << j.dump(2) << "\n";
}

void write_text(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw DomainError("cannot write " + out_path);
  f << text;
}

EvalMode mode_of(const std::string& text) {
  auto m = parse_eval_mode(text);
  if (!m) throw CLI::ValidationError("--mode", "unknown mode " + text);
  return *m;
}

TgdSet load_tgds(const std::string& path) { return path.empty() ? TgdSet{} : parse_tgds(read_file(path)); }

void require_satisfied(const Database& db, const TgdSet& tgds) {
  const auto sat = satisfies_tgds(db, tgds);
  if (sat) return;
  const auto& w = *sat.witness;
  std::string msg = "database violates rule " + std::to_string(w.tgd_index + 1) + ": " + to_string(tgds[w.tgd_index]) +
                    "; body match";
  for (const auto& [var, val] : w.body_match) msg += " " + var.name() + "=" + render_constant(val);
  throw PreconditionError(msg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conjunctive query evaluation under tuple-generating dependencies"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path = "cqlin.toml";
  bool config_given = false;
  std::optional<std::uint64_t> seed_flag;
  std::optional<std::string> format_flag;
  std::optional<std::uint64_t> budget_flag;
  app.add_option_function<std::string>(
      "--config", [&](const std::string& p) { config_path = p, config_given = true; }, "config file (cqlin.toml)");
  app.add_option("--seed", seed_flag, "random seed");
  app.add_option("--format", format_flag, "json or text")->check(CLI::IsMember({"json", "text"}));
  app.add_option("--budget", budget_flag, "chase step budget");
  std::string out_path;

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "structural report of a query (and rule profile)");
  std::string a_query, a_tgds, a_order;
  analyze_cmd->add_option("query", a_query, "query file")->required();
  analyze_cmd->add_option("tgds", a_tgds, "rule file");
  analyze_cmd->add_option("--order", a_order, "comma-separated answer variable order");

  // chase
  auto* chase_cmd = app.add_subcommand("chase", "Skolem chase of a database or a query");
  std::string c_input, c_tgds;
  bool c_query = false;
  chase_cmd->add_option("input", c_input, "database file (or query file with --query)")->required();
  chase_cmd->add_option("tgds", c_tgds, "rule file")->required();
  chase_cmd->add_flag("--query", c_query, "chase a query and print ch_T(q)");
  chase_cmd->add_option("-o,--output", out_path, "output file");

  // tag
  auto* tag_cmd = app.add_subcommand("tag", "tagging companion, optionally building a tagged database");
  std::string t_query, t_tgds, t_db;
  tag_cmd->add_option("query", t_query, "query file")->required();
  tag_cmd->add_option("tgds", t_tgds, "rule file")->required();
  tag_cmd->add_option("--db", t_db, "database over the companion's self-join-free schema");
  tag_cmd->add_option("-o,--output", out_path, "where to write the tagged database");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a query on a database");
  std::string e_query, e_db, e_tgds, e_mode = "enumerate", e_order;
  std::vector<std::string> e_tuples;
  std::vector<std::int64_t> e_indexes;
  std::size_t e_limit = 0;
  bool e_unchecked = false;
  eval_cmd->add_option("query", e_query, "query file")->required();
  eval_cmd->add_option("db", e_db, "database file or directory of CSVs")->required();
  eval_cmd->add_option("--tgds", e_tgds, "rule file the database is promised to satisfy");
  eval_cmd->add_option("--mode", e_mode, "single|all|count|access|enum|boolean");
  eval_cmd->add_option("--order", e_order, "variable order for direct access");
  eval_cmd->add_option("--tuple", e_tuples, "candidate tuple for testing, comma separated");
  eval_cmd->add_option("--index", e_indexes, "1-based rank for direct access");
  eval_cmd->add_option("--limit", e_limit, "stop enumeration after this many answers");
  eval_cmd->add_flag("--unchecked", e_unchecked, "skip the rule satisfaction check");

  // classify
  auto* classify_cmd = app.add_subcommand("classify", "tractability verdict for a query, rules and mode");
  std::string k_query, k_tgds, k_mode = "boolean", k_order;
  bool k_explain = false;
  classify_cmd->add_option("query", k_query, "query file")->required();
  classify_cmd->add_option("tgds", k_tgds, "rule file")->required();
  classify_cmd->add_option("--mode", k_mode, "single|all|count|access|enum|boolean");
  classify_cmd->add_option("--order", k_order, "variable order for direct access");
  classify_cmd->add_flag("--explain", k_explain, "print the decision path instead of JSON");

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "generate a database");
  harness::GeneratorSpec g;
  std::string g_kind, g_graph, g_query, g_tgds;
  gen_cmd->add_option("kind", g_kind, "triangle|clique|flooded_clique|ex84|vutd|random")->required();
  gen_cmd->add_option("--l", g.l, "clique size");
  gen_cmd->add_option("--vertices,-n", g.vertices, "vertices (|V1| for vutd)");
  gen_cmd->add_option("--edges,-m", g.edges, "edges");
  gen_cmd->add_option("--graph", g_graph, "edge-list file instead of a random graph");
  gen_cmd->add_option("--alpha", g.alpha, "vutd exponent in (0, 1/3]");
  gen_cmd->add_option("--density", g.density, "vutd edge probability");
  gen_cmd->add_option("--facts", g.facts, "random: facts before the chase");
  gen_cmd->add_option("--domain", g.domain, "random: constants");
  gen_cmd->add_option("--query", g_query, "random: query file");
  gen_cmd->add_option("--tgds", g_tgds, "random: rule file");
  gen_cmd->add_option("-o,--output", out_path, "output fact file");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "scaling benchmark");
  std::string b_spec, b_csv, b_workload;
  bench_cmd->add_option("--spec", b_spec, "bench.toml");
  bench_cmd->add_option("--workload", b_workload, "enumerate|count|all_test|single_test|direct_access|qsquare");
  bench_cmd->add_option("--csv", b_csv, "also write CSV here");
  bench_cmd->add_option("-o,--output", out_path, "report JSON");

  // demo
  auto* demo_cmd = app.add_subcommand("demo", "run an example-specific algorithm");
  std::string d_name, d_db;
  demo_cmd->add_option("name", d_name, "qsquare|ex83|unary")->required()->check(CLI::IsMember({"qsquare", "ex83", "unary"}));
  demo_cmd->add_option("db", d_db, "database file")->required();
  demo_cmd->add_option("-o,--output", out_path, "output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    Config cfg = load_config(config_path, config_given);
    if (seed_flag) cfg.seed = *seed_flag;
    if (format_flag) cfg.output_format = *format_flag;
    if (budget_flag) cfg.chase_budget = *budget_flag;
    const bool text = cfg.output_format == "text";

    if (*analyze_cmd) {
      const auto q = parse_query(read_file(a_query));
      std::optional<std::vector<Symbol>> order;
      if (!a_order.empty()) order = parse_order(a_order);
      const auto report = analyze(q, order);
      json out{{"structure", structure_json(report, q)}};
      if (!a_tgds.empty()) {
        const auto t = load_tgds(a_tgds);
        check_schema(q, t);
        out["profile"] = profile_json(profile_tgds(t));
      }
      emit(out, "");
    } else if (*chase_cmd) {
      const auto tgds = load_tgds(c_tgds);
      if (c_query) {
        const auto q = parse_query(read_file(c_input));
        const auto ch = chase_query(q, tgds, cfg.chase_budget);
        if (text) {
          write_text(to_string(ch) + "\n", out_path);
        } else {
          emit(json{{"query", to_string(ch)}}, out_path);
        }
      } else {
        const auto db = load_database(c_input);
        const auto r = skolem_chase(db, tgds, cfg.chase_budget);
        if (!r.terminated) throw BudgetExhausted("chase did not finish within " + std::to_string(cfg.chase_budget) + " steps");
        if (text || !out_path.empty()) {
          write_text(to_string(r.instance), out_path);
        } else {
          json facts = json::array();
          for (const auto& f : r.instance.facts()) facts.push_back(to_string(f));
          emit(json{{"steps", r.steps}, {"facts", facts}}, "");
        }
      }
    } else if (*tag_cmd) {
      const auto q = parse_query(read_file(t_query));
      const auto tgds = load_tgds(t_tgds);
      check_schema(q, tgds);
      const auto c = best_companion(q, tgds);
      if (!c) throw NotApplicable("no tagging companion: rules are outside the supported classes");
      json out{{"method", to_string(c->method)},
               {"companion", to_string(c->companion)},
               {"sjf", to_string(c->sjf.query)},
               {"cost_class", to_string(c->cost_class)}};
      if (c->method == CompanionMethod::Flood) {
        out["k"] = c->k;
        out["condition"] = to_string(c->condition);
      }
      if (!t_db.empty()) {
        BuildStats stats;
        const auto tagged = c->build(load_database(t_db), &stats);
        out["tagged_facts"] = tagged.size();
        out["build_steps"] = stats.steps;
        if (!out_path.empty()) write_text(to_string(tagged), out_path);
      }
      emit(out, "");
    } else if (*eval_cmd) {
      const auto q = parse_query(read_file(e_query));
      const auto db = load_database(e_db);
      const auto tgds = load_tgds(e_tgds);
      check_schema(q, tgds, &db);
      if (!e_unchecked) require_satisfied(db, tgds);
      const EvalMode mode = mode_of(e_mode);
      json out{{"mode", to_string(mode)}};
      switch (mode) {
        case EvalMode::SingleTest: {
          if (e_tuples.empty()) {
            if (!q.is_boolean()) throw CLI::ValidationError("--tuple", "single testing needs --tuple");
            e_tuples.push_back("");
          }
          json results = json::array();
          for (const auto& s : e_tuples) {
            const Tuple t = parse_tuple(s);
            if (t.size() != q.arity()) throw DomainError("tuple " + s + " does not match the query arity");
            auto r = single_test(q, db, t);
            results.push_back({{"tuple", tuple_json(t)}, {"member", r.member}, {"path", to_string(r.path)}, {"steps", r.steps}});
          }
          out["results"] = results;
          break;
        }
        case EvalMode::AllTest: {
          AllTester tester(q, db);
          out["path"] = to_string(tester.path());
          out["preprocess_steps"] = tester.preprocess_steps();
          json results = json::array();
          for (const auto& s : e_tuples) {
            const Tuple t = parse_tuple(s);
            if (t.size() != q.arity()) throw DomainError("tuple " + s + " does not match the query arity");
            std::uint64_t steps = 0;
            const bool member = tester.test(t, &steps);
            results.push_back({{"tuple", tuple_json(t)}, {"member", member}, {"steps", steps}});
          }
          out["results"] = results;
          break;
        }
        case EvalMode::Count: {
          auto r = count_answers(q, db);
          out["count"] = r.count;
          out["path"] = to_string(r.path);
          out["steps"] = r.steps;
          break;
        }
        case EvalMode::DirectAccess: {
          std::vector<Symbol> order = e_order.empty() ? q.answer_vars() : parse_order(e_order);
          PrefixCounter pc(q, order, db);
          out["path"] = to_string(pc.path());
          out["preprocess_steps"] = pc.preprocess_steps();
          out["total"] = pc.total();
          json answers = json::array();
          for (auto i : e_indexes) {
            std::uint64_t steps = 0;
            auto t = pc.access(i, &steps);
            answers.push_back({{"index", i}, {"answer", t ? tuple_json(*t) : json(nullptr)}, {"steps", steps}});
          }
          out["answers"] = answers;
          break;
        }
        case EvalMode::Enumerate: {
          auto e = enumerate(q, db);
          json answers = json::array();
          std::uint64_t last = e.stream->steps(), worst = 0;
          for (;;) {
            if (e_limit && answers.size() >= e_limit) break;
            auto t = e.stream->next();
            worst = std::max(worst, e.stream->steps() - last);
            last = e.stream->steps();
            if (!t) break;
            answers.push_back(tuple_json(*t));
          }
          out["path"] = to_string(e.path);
          out["preprocess_steps"] = e.preprocess_steps;
          out["max_delay"] = worst;
          out["answers"] = answers;
          break;
        }
      }
      emit(out, "");
    } else if (*classify_cmd) {
      ClassifyRequest req{parse_query(read_file(k_query)), load_tgds(k_tgds), mode_of(k_mode), std::nullopt};
      check_schema(req.query, req.tgds);
      if (!k_order.empty()) req.order = parse_order(k_order);
      const auto v = classify(req);
      if (k_explain || text) {
        std::cout << explain(v);
      } else {
        emit(verdict_json(v), "");
      }
    } else if (*gen_cmd) {
      auto kind = harness::parse_generator_kind(g_kind);
      if (!kind) throw CLI::ValidationError("kind", "unknown generator " + g_kind);
      g.kind = *kind;
      g.seed = cfg.seed;
      if (!g_graph.empty()) g.graph = harness::parse_edge_list(read_file(g_graph));
      if (!g_query.empty()) g.query = parse_query(read_file(g_query));
      g.tgds = load_tgds(g_tgds);
      const auto gen = harness::generate(g);
      write_text(to_string(gen.db), out_path);
    } else if (*bench_cmd) {
      harness::BenchSpec spec;
      spec.sizes = cfg.bench_sizes;
      spec.seed = cfg.seed;
      if (!b_spec.empty()) {
        toml::table t;
        try {
          t = toml::parse_file(b_spec);
        } catch (const toml::parse_error& e) {
          throw ParseError(std::string(e.description()), e.source().begin.line, e.source().begin.column);
        }
        if (auto v = t["workload"].value<std::string>()) spec.workload = *v;
        if (auto v = t["query"].value<std::string>()) spec.query = *v;
        if (auto v = t["threads"].value<std::int64_t>()) spec.threads = static_cast<std::size_t>(*v);
        if (auto v = t["probes"].value<std::int64_t>()) spec.probes = static_cast<std::size_t>(*v);
        if (auto v = t["max_outputs"].value<std::int64_t>()) spec.max_outputs = static_cast<std::size_t>(*v);
        if (auto v = t["seed"].value<std::int64_t>(); v && !seed_flag) spec.seed = static_cast<std::uint64_t>(*v);
        if (auto* arr = t["sizes"].as_array()) {
          spec.sizes.clear();
          for (auto& x : *arr) {
            if (auto v = x.value<std::int64_t>()) spec.sizes.push_back(static_cast<std::size_t>(*v));
          }
        }
      }
      if (!b_workload.empty()) spec.workload = b_workload;
      const auto report = harness::bench(spec);
      if (!b_csv.empty()) write_text(harness::to_csv(report), b_csv);
      emit(harness::to_json(report), out_path);
    } else if (*demo_cmd) {
      const auto db = load_database(d_db);
      json out{{"demo", d_name}};
      if (d_name == "qsquare") {
        auto r = harness::demo_qsquare(db);
        out["answer"] = r.answer;
        out["steps"] = r.steps;
      } else {
        auto e = d_name == "ex83" ? harness::demo_ex83_enumerate(db) : harness::demo_unary_disconnected(db);
        auto profile = drain(*e.stream);
        json answers = json::array();
        for (const auto& t : profile.answers) answers.push_back(tuple_json(t));
        out["answers"] = answers;
        out["preprocess_steps"] = e.preprocess_steps;
        out["max_delay"] = profile.max_delay;
      }
      emit(out, out_path);
    }
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kUsage;
  } catch (const BudgetExhausted& e) {
    std::cerr << "budget exhausted: " << e.what() << "\n";
    return kBudget;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomain;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomain;
  }
  return kOk;
}
