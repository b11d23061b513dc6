#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "cqlin/catalog.hpp"
#include "cqlin/errors.hpp"
#include "cqlin/harness.hpp"
#include "cqlin/parser.hpp"

namespace cqlin::harness {

namespace {

const char* default_query(const std::string& workload) {
  if (workload == "single_test") return "q(x) :- R(x,y), S(y,z), T(z,w).";
  if (workload == "direct_access") return "q(x,y,z) :- R(x,y), S(y,z).";
  if (workload == "qsquare") return "";
  return "q(x,y,z) :- R(x,y), S(y,z), T(z,w).";
}

// Each relation gets size / #relations random facts over a domain of the
// same size, so joins keep constant expected fan-out.
Database random_db(const ConjunctiveQuery& q, std::size_t size, std::uint64_t seed) {
  std::vector<std::pair<Symbol, std::size_t>> schema;
  for (const Atom& a : q.atoms()) {
    if (std::none_of(schema.begin(), schema.end(), [&](const auto& s) { return s.first == a.relation; })) {
      schema.emplace_back(a.relation, a.args.size());
    }
  }
  const std::size_t per = std::max<std::size_t>(1, size / schema.size());
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, per - 1);
  std::vector<Value> consts(per);
  for (std::size_t i = 0; i < per; ++i) consts[i] = constant("c" + std::to_string(i));
  Database db;
  for (auto [rel, arity] : schema) {
    db.declare(rel, arity);
    Tuple t(arity);
    for (std::size_t f = 0; f < per; ++f) {
      for (auto& x : t) x = consts[pick(rng)];
      db.add_fact(rel, t);
    }
  }
  return db;
}

// Square instances where every S fact joins L and R, so each one costs a
// probe, but no rule body is complete; B and T facts are disjoint noise.
// The answer is false, which forces the full scan.
Database square_db(std::size_t size) {
  const std::size_t per = std::max<std::size_t>(1, size / 5);
  Database db;
  for (const char* r : {"B", "R", "T", "L", "S"}) db.declare(Symbol(r), 2);
  auto c = [](const char* p, std::size_t i) { return constant(std::string(p) + std::to_string(i)); };
  auto put = [&](const char* r, Value a, Value b) {
    const Value t[] = {a, b};
    db.add_fact(Symbol(r), t);
  };
  for (std::size_t i = 0; i < per; ++i) {
    put("L", c("a", i), c("d", i));
    put("S", c("a", i), c("c", i));
    put("R", c("c", i), c("b", i));
    put("B", c("e", i), c("f", i));
    put("T", c("g", i), c("h", i));
  }
  return db;
}

std::uint64_t bounded_max_delay(AnswerStream& s, std::size_t limit, std::uint64_t& outputs) {
  std::uint64_t last = s.steps();
  std::uint64_t worst = 0;
  while (outputs < limit) {
    auto t = s.next();
    const std::uint64_t now = s.steps();
    worst = std::max(worst, now - last);
    last = now;
    if (!t) break;
    ++outputs;
  }
  return worst;
}

BenchRow run_one(const BenchSpec& spec, std::size_t size, std::uint64_t seed) {
  BenchRow row;
  row.size = size;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  if (spec.workload == "qsquare") {
    const Database db = square_db(size);
    row.facts = db.size();
    auto r = demo_qsquare(db, false);
    row.path = "demo";
    row.preprocess_steps = r.steps;
    row.answer = r.answer;
    return row;
  }
  const ConjunctiveQuery q = parse_query(spec.query.empty() ? default_query(spec.workload) : spec.query);
  const Database db = random_db(q, size, seed);
  row.facts = db.size();
  const double lg = std::log2(static_cast<double>(std::max<std::size_t>(row.facts, 2)));
  auto random_tuple = [&] {
    Tuple t;
    std::uniform_int_distribution<std::size_t> pick(0, db.domain().size() - 1);
    for (std::size_t i = 0; i < q.arity(); ++i) t.push_back(db.domain()[pick(rng)]);
    return t;
  };
  if (spec.workload == "enumerate") {
    auto e = enumerate(q, db);
    row.path = to_string(e.path);
    row.preprocess_steps = e.preprocess_steps;
    row.max_delay = bounded_max_delay(*e.stream, spec.max_outputs, row.outputs);
  } else if (spec.workload == "count") {
    auto c = count_answers(q, db);
    row.path = to_string(c.path);
    row.preprocess_steps = c.steps;
    row.answer = c.count;
  } else if (spec.workload == "all_test") {
    AllTester tester(q, db);
    row.path = to_string(tester.path());
    row.preprocess_steps = tester.preprocess_steps();
    for (std::size_t k = 0; k < spec.probes; ++k) {
      std::uint64_t steps = 0;
      row.answer += tester.test(random_tuple(), &steps);
      row.max_probe_steps = std::max(row.max_probe_steps, steps);
    }
  } else if (spec.workload == "single_test") {
    auto r = single_test(q, db, random_tuple());
    row.path = to_string(r.path);
    row.preprocess_steps = r.steps;
    row.answer = r.member;
  } else if (spec.workload == "direct_access") {
    PrefixCounter pc(q, q.answer_vars(), db);
    row.path = to_string(pc.path());
    row.preprocess_steps = pc.preprocess_steps();
    row.answer = pc.total();
    if (pc.total() > 0) {
      std::uniform_int_distribution<std::uint64_t> pick(1, pc.total());
      for (std::size_t k = 0; k < spec.probes; ++k) {
        std::uint64_t steps = 0;
        pc.access(static_cast<std::int64_t>(pick(rng)), &steps);
        row.max_probe_steps = std::max(row.max_probe_steps, steps);
      }
    }
  } else {
    throw DomainError("unknown bench workload " + spec.workload);
  }
  row.probe_per_log = static_cast<double>(row.max_probe_steps) / lg;
  return row;
}

}  // namespace

double loglog_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) return 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : points) {
    const double lx = std::log(x), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(points.size());
  const double den = n * sxx - sx * sx;
  return den == 0 ? 0 : (n * sxy - sx * sy) / den;
}

BenchReport bench(const BenchSpec& spec) {
  if (spec.sizes.empty()) throw DomainError("bench needs at least one size");
  BenchReport report;
  report.spec = spec;
  report.rows.resize(spec.sizes.size());
  std::size_t threads = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, spec.sizes.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(spec.sizes.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < spec.sizes.size(); i = next++) {
          try {
            report.rows[i] = run_one(spec, spec.sizes[i], spec.seed + i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : report.rows) {
    if (r.facts > 0 && r.preprocess_steps > 0) pts.emplace_back(r.facts, r.preprocess_steps);
  }
  report.preprocess_slope = loglog_slope(pts);
  return report;
}

nlohmann::json to_json(const BenchReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"size", row.size},
                    {"facts", row.facts},
                    {"path", row.path},
                    {"preprocess_steps", row.preprocess_steps},
                    {"max_delay", row.max_delay},
                    {"max_probe_steps", row.max_probe_steps},
                    {"probe_per_log", row.probe_per_log},
                    {"outputs", row.outputs},
                    {"answer", row.answer}});
  }
  return {{"workload", r.spec.workload},
          {"query", r.spec.query.empty() ? default_query(r.spec.workload) : r.spec.query},
          {"seed", r.spec.seed},
          {"sizes", r.spec.sizes},
          {"rows", rows},
          {"preprocess_slope", r.preprocess_slope}};
}

std::string to_csv(const BenchReport& r) {
  std::ostringstream out;
  out << "size,facts,path,preprocess_steps,max_delay,max_probe_steps,probe_per_log,outputs,answer\n";
  for (const auto& row : r.rows) {
    out << row.size << ',' << row.facts << ',' << row.path << ',' << row.preprocess_steps << ',' << row.max_delay
        << ',' << row.max_probe_steps << ',' << row.probe_per_log << ',' << row.outputs << ',' << row.answer << '\n';
  }
  return out.str();
}

}  // namespace cqlin::harness
