#include <benchmark/benchmark.h>

#include <memory>
#include <string>

#include "viewguard/engine.hpp"
#include "viewguard/errors.hpp"
#include "viewguard/policy.hpp"

using namespace viewguard;

namespace {

std::shared_ptr<const PolicyBundle> policy() {
  static auto p = std::make_shared<const PolicyBundle>(load_policy(VIEWGUARD_BENCH_POLICY));
  return p;
}

RequestContext context(std::int64_t uid) {
  RequestContext ctx;
  ctx.set("MyUId", Value::of_int(uid));
  ctx.set(kNowParam, Value::of_timestamp(1000));
  return ctx;
}

// Attendance lookup followed by the event it points to.
bool event_request(const Engine& engine, std::int64_t uid, std::int64_t eid) {
  auto s = engine.begin_request(context(uid));
  s.check_query("SELECT * FROM Attendances WHERE UId = ? AND EId = ?", {Value::of_int(uid), Value::of_int(eid)},
                {{Value::of_int(uid), Value::of_int(eid), Value::of_string("x")}});
  return s.check_query("SELECT * FROM Events WHERE EId = " + std::to_string(eid), {}, {}).allowed();
}

bool solver_missing() {
  auto argv = default_solvers().front().argv;
  if (argv.empty()) return true;
  try {
    smt::SmtScript s;
    s.want_core = false;
    return solve(s, default_solvers(), std::chrono::seconds(5)).kind == SolverOutcome::Kind::Unknown;
  } catch (const SolverSpawnError&) {
    return true;
  }
}

void BM_CacheHitRequest(benchmark::State& state) {
  if (solver_missing()) {
    state.SkipWithError("z3 not available");
    return;
  }
  Engine engine(policy());
  event_request(engine, 1, 42);
  std::int64_t i = 0;
  for (auto _ : state) {
    ++i;
    benchmark::DoNotOptimize(event_request(engine, 100 + i, 500 + i));
  }
  state.SetItemsProcessed(state.iterations() * 2);
}
BENCHMARK(BM_CacheHitRequest)->Unit(benchmark::kMicrosecond);

void BM_SolverRequest(benchmark::State& state) {
  if (solver_missing()) {
    state.SkipWithError("z3 not available");
    return;
  }
  EngineOptions opts;
  opts.use_cache = false;
  opts.generate_templates = false;
  Engine engine(policy(), opts);
  std::int64_t i = 0;
  for (auto _ : state) {
    ++i;
    benchmark::DoNotOptimize(event_request(engine, 100 + i, 500 + i));
  }
  state.SetItemsProcessed(state.iterations() * 2);
}
BENCHMARK(BM_SolverRequest)->Unit(benchmark::kMillisecond)->Iterations(20);

void BM_FastAccept(benchmark::State& state) {
  auto q = policy()->parse_basic("SELECT Name FROM Users WHERE UId = 3");
  for (auto _ : state) benchmark::DoNotOptimize(fast_accept(q, *policy()));
}
BENCHMARK(BM_FastAccept);

void BM_ParseAndRewrite(benchmark::State& state) {
  const std::string sql =
      "SELECT DISTINCT Events.* FROM Events LEFT JOIN Attendances ON Events.EId = Attendances.EId WHERE "
      "Attendances.UId = 1 OR Events.Duration = 10";
  for (auto _ : state) benchmark::DoNotOptimize(policy()->parse_query(sql));
}
BENCHMARK(BM_ParseAndRewrite);

}  // namespace

BENCHMARK_MAIN();
