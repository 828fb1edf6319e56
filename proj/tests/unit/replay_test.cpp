#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"
#include "viewguard/errors.hpp"
#include "viewguard/replay.hpp"

using namespace viewguard;
using namespace viewguard::testing;

namespace {

Replay parse(const std::string& text) {
  std::istringstream in(text);
  return parse_replay(in, data_path("replays"));
}

std::vector<std::pair<bool, std::string>> outcomes(const RunReport& r) {
  std::vector<std::pair<bool, std::string>> out;
  for (const auto& req : r.requests)
    for (const auto& q : req.queries) out.emplace_back(q.decision.allowed(), q.sql);
  return out;
}

class Replays : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!solver_available()) GTEST_SKIP() << "z3 not on PATH";
  }
};

}  // namespace

TEST(ReplayParse, CalendarFile) {
  auto r = load_replay(data_path("replays/calendar.jsonl"));
  ASSERT_TRUE(r.policy);
  EXPECT_TRUE(std::filesystem::exists(*r.policy));
  ASSERT_EQ(r.requests.size(), 2u);
  EXPECT_EQ(r.requests[0].ctx["MyUId"], 1);
  EXPECT_EQ(r.requests[1].ctx["MyUId"], 8);
  ASSERT_EQ(r.requests[1].queries.size(), 3u);
  EXPECT_EQ(r.requests[1].queries[1].params, (std::vector<Value>{I(8), I(99)}));
  ASSERT_TRUE(r.requests[0].queries[0].rows);
  EXPECT_EQ(r.requests[0].queries[0].rows->size(), 1u);
}

TEST(ReplayParse, EmptyReplayHasOneEmptyRequest) {
  auto r = load_replay(data_path("replays/empty.jsonl"));
  for (const auto& req : r.requests) EXPECT_TRUE(req.queries.empty());
}

TEST(ReplayParse, MissingRowsStayAbsent) {
  auto r = parse("{\"format_version\": 1, \"ctx\": {\"MyUId\": 1}}\n"
                 "{\"kind\": \"query\", \"sql\": \"SELECT * FROM Users\"}\n");
  ASSERT_EQ(r.requests.size(), 1u);
  EXPECT_FALSE(r.requests[0].queries[0].rows);
  EXPECT_FALSE(r.policy);
}

TEST(ReplayParse, Errors) {
  EXPECT_THROW(parse(""), ParseError);
  EXPECT_THROW(parse("not json\n"), ParseError);
  EXPECT_THROW(parse("{\"format_version\": 99, \"ctx\": {}}\n"), ParseError);
  EXPECT_THROW(parse("{\"format_version\": 1, \"ctx\": {}}\n{\"kind\": \"dance\"}\n"), ParseError);
  EXPECT_THROW(parse("{\"format_version\": 1, \"ctx\": {}}\n{\"kind\": \"query\"}\n"), ParseError);
  EXPECT_THROW(parse("{\"format_version\": 1, \"ctx\": {}}\n{\"kind\": \"query\", \"sql\": \"x\", \"rows\": 3}\n"),
               ParseError);
  EXPECT_THROW(load_replay(data_path("replays/missing.jsonl")), Error);
}

TEST(ReplayParse, ValuesFromJson) {
  EXPECT_EQ(value_from_json(3), I(3));
  EXPECT_EQ(value_from_json("x"), S("x"));
  EXPECT_TRUE(value_from_json(nullptr).is_null());
}

TEST_F(Replays, CalendarRunAndReport) {
  Engine engine(calendar_policy());
  auto report = run_replay(engine, load_replay(data_path("replays/calendar.jsonl")));
  EXPECT_TRUE(report.all_allowed());
  EXPECT_EQ(report.totals.queries, 6);
  EXPECT_EQ(report.requests[1].stats.solver_calls, 0);
  auto j = report.to_json(calendar_policy()->schema(), false);
  EXPECT_EQ(j["all_allowed"], true);
  EXPECT_EQ(j["requests"].size(), 2u);
  EXPECT_FALSE(j["requests"][0]["queries"][0].contains("millis"));
}

TEST_F(Replays, NoncompliantRunIsNotAllAllowed) {
  Engine engine(calendar_policy());
  auto report = run_replay(engine, load_replay(data_path("replays/calendar_noncompliant.jsonl")));
  EXPECT_FALSE(report.all_allowed());
  EXPECT_EQ(report.totals.denies, 1);
}

TEST_F(Replays, CacheDoesNotChangeDecisions) {
  auto replay = load_replay(data_path("replays/calendar.jsonl"));
  EngineOptions off;
  off.use_cache = false;
  off.generate_templates = false;
  Engine cached(calendar_policy());
  Engine uncached(calendar_policy(), off);
  auto a = run_replay(cached, replay);
  auto b = run_replay(uncached, replay);
  EXPECT_EQ(outcomes(a), outcomes(b));
  EXPECT_LT(a.totals.solver_calls, b.totals.solver_calls);
  auto c = run_replay(uncached, replay);
  EXPECT_EQ(b.to_json(calendar_policy()->schema(), false)["requests"][0]["queries"],
            c.to_json(calendar_policy()->schema(), false)["requests"][0]["queries"]);
}

TEST_F(Replays, ParallelRequestsMatchSequential) {
  auto replay = load_replay(data_path("replays/calendar.jsonl"));
  replay.requests.push_back(replay.requests[1]);
  replay.requests.push_back(replay.requests[0]);
  Engine seq(calendar_policy());
  Engine par(calendar_policy());
  EXPECT_EQ(outcomes(run_replay(seq, replay)), outcomes(run_replay(par, replay, true)));
}

TEST_F(Replays, RowSourceFillsMissingRows) {
  auto replay = parse("{\"format_version\": 1, \"ctx\": {\"MyUId\": 1}}\n"
                      "{\"kind\": \"query\", \"sql\": \"SELECT * FROM Attendances WHERE UId = 1\"}\n"
                      "{\"kind\": \"query\", \"sql\": \"SELECT * FROM Events WHERE EId = 42\"}\n");
  int calls = 0;
  Engine engine(calendar_policy());
  auto report = run_replay(engine, replay, false, [&](const ReplayQuery& q) {
    ++calls;
    if (q.sql.find("Attendances") != std::string::npos) return std::vector<Tuple>{row({I(1), I(42), S("x")})};
    return std::vector<Tuple>{row({I(42), S("t"), I(5)})};
  });
  EXPECT_EQ(calls, 2);
  EXPECT_TRUE(report.all_allowed());
}

TEST_F(Replays, OracleAgreesOnCalendar) {
  Engine engine(calendar_policy());
  for (const char* file : {"replays/calendar.jsonl", "replays/calendar_noncompliant.jsonl"}) {
    auto checks = run_oracle(engine, load_replay(data_path(file)), OracleSettings{});
    ASSERT_FALSE(checks.empty());
    for (const auto& c : checks) EXPECT_TRUE(c.agrees) << file << ": " << c.sql;
    auto j = oracle_report_json(calendar_policy()->schema(), checks);
    EXPECT_EQ(j["checks"].size(), checks.size());
  }
}
