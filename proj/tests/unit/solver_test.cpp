#include <gtest/gtest.h>

#include "support.hpp"
#include "viewguard/errors.hpp"
#include "viewguard/smt/encoder.hpp"

using namespace viewguard;
using namespace viewguard::testing;
using namespace std::chrono_literals;

namespace {

smt::SmtScript trivial(bool satisfiable) {
  smt::SmtScript s;
  s.logic = "QF_UF";
  s.declarations.push_back("(declare-const a Bool)");
  s.labeled.push_back({"LQ_1", "a"});
  s.labeled.push_back({"LQ_2", satisfiable ? "a" : "(not a)"});
  return s;
}

smt::SmtScript query_three_script() {
  const auto& p = *calendar_policy();
  auto trace = expand(observe(p, {{"SELECT * FROM Users WHERE UId = 1", {row({I(1), S("John Doe")})}},
                                  {"SELECT * FROM Attendances WHERE UId = 1 AND EId = 42",
                                   {row({I(1), I(42), S("05/04 1pm")})}}}));
  return smt::encode_strong_compliance(p, ctx_of(p, {{"MyUId", 1}}), trace,
                                       p.parse_basic("SELECT * FROM Events WHERE EId = 42"));
}

class Solver : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!solver_available()) GTEST_SKIP() << "z3 not on PATH";
  }
};

}  // namespace

TEST(SolverOutput, ParsesVerdicts) {
  std::vector<std::string> labels{"LQ_1", "LQ_2", "LC_1"};
  EXPECT_TRUE(parse_solver_output("sat\n", labels).sat());
  auto u = parse_solver_output("unsat\n(LQ_2 LC_1)\n", labels);
  ASSERT_TRUE(u.unsat());
  EXPECT_EQ(u.core, (std::set<std::string>{"LQ_2", "LC_1"}));
  EXPECT_EQ(parse_solver_output("unknown\n", labels).kind, SolverOutcome::Kind::Unknown);
  EXPECT_EQ(parse_solver_output("", labels).kind, SolverOutcome::Kind::Unknown);
  EXPECT_EQ(parse_solver_output("(error \"line 1\")\n", labels).kind, SolverOutcome::Kind::Unknown);
}

TEST(SolverOutput, UntrustedCoresWidenToAllLabels) {
  std::vector<std::string> labels{"LQ_1", "LQ_2"};
  std::set<std::string> all(labels.begin(), labels.end());
  EXPECT_EQ(parse_solver_output("unsat\n(LQ_1 mystery)\n", labels).core, all);
  EXPECT_EQ(parse_solver_output("unsat\n", labels).core, all);
  EXPECT_TRUE(parse_solver_output("unsat\n()\n", labels).core.empty());
}

TEST(SolverConfig, SplitsCommandLine) {
  auto c = SolverConfig::from_command("z3  -in -T:5");
  EXPECT_EQ(c.argv, (std::vector<std::string>{"z3", "-in", "-T:5"}));
  EXPECT_FALSE(default_solvers().empty());
}

TEST(SolverSpawn, MissingBinaryThrows) {
  auto missing = SolverConfig::from_command("/nonexistent/viewguard-solver -in");
  EXPECT_THROW(solve(trivial(true), {missing}, 2000ms), SolverSpawnError);
}

TEST_F(Solver, TrivialScripts) {
  EXPECT_TRUE(solve(trivial(true), default_solvers(), 10s).sat());
  auto u = solve(trivial(false), default_solvers(), 10s);
  ASSERT_TRUE(u.unsat());
  EXPECT_EQ(u.core, (std::set<std::string>{"LQ_1", "LQ_2"}));
}

TEST_F(Solver, RaceSurvivesBrokenAndSlowSolvers) {
  auto configs = default_solvers();
  configs.push_back(SolverConfig::from_command("false"));
  configs.push_back(SolverConfig::from_command("sleep 30"));
  auto start = std::chrono::steady_clock::now();
  EXPECT_TRUE(solve(trivial(false), configs, 20s).unsat());
  EXPECT_LT(std::chrono::steady_clock::now() - start, 10s);
}

TEST_F(Solver, SlowSolverAloneTimesOut) {
  auto out = solve(trivial(true), {SolverConfig::from_command("sleep 30")}, 300ms);
  EXPECT_EQ(out.kind, SolverOutcome::Kind::Unknown);
  EXPECT_EQ(out.reason, "timeout");
}

TEST_F(Solver, FailingSolverIsUnknown) {
  auto out = solve(trivial(true), {SolverConfig::from_command("false")}, 5s);
  EXPECT_EQ(out.kind, SolverOutcome::Kind::Unknown);
}

TEST_F(Solver, CalendarCoreKeepsOnlyTheAttendance) {
  auto script = query_three_script();
  auto out = solve_for_core(script, default_solvers(), 20s);
  ASSERT_TRUE(out.unsat());
  EXPECT_TRUE(out.core.count("LQ_2"));
  EXPECT_FALSE(out.core.count("LQ_1"));
  auto labels = script.labels();
  for (const auto& l : out.core) EXPECT_NE(std::find(labels.begin(), labels.end(), l), labels.end());
  EXPECT_TRUE(solve(script.restricted_to(out.core), default_solvers(), 20s).unsat());
}

TEST_F(Solver, VerifiedCoresAreUnsatOnRandomInstances) {
  InstanceGenerator gen(61);
  int cores = 0;
  for (int i = 0; i < 60 && cores < 15; ++i) {
    auto inst = gen.next();
    auto script = smt::encode_strong_compliance(*inst.policy, inst.ctx, expand(inst.trace), inst.query);
    auto out = solve_for_core(script, default_solvers(), 10s);
    if (!out.unsat()) continue;
    ++cores;
    EXPECT_TRUE(solve(script.restricted_to(out.core), default_solvers(), 10s).unsat()) << inst.describe();
  }
  EXPECT_GT(cores, 0);
}
