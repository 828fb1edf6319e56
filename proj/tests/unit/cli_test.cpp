#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>

#include "support.hpp"

#ifndef VIEWGUARD_CLI
#error "VIEWGUARD_CLI must be defined"
#endif

using namespace viewguard::testing;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  std::string cmd = std::string(VIEWGUARD_CLI) + " " + args + " 2>&1";
  Run r;
  std::FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string replay(const std::string& name) { return data_path("replays/" + name).string(); }

std::vector<std::string> decisions(const nlohmann::json& report) {
  std::vector<std::string> out;
  for (const auto& req : report["requests"])
    for (const auto& q : req["queries"]) out.push_back(q["decision"].get<std::string>() + " " + q["sql"].get<std::string>());
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!solver_available()) GTEST_SKIP() << "z3 not on PATH";
  }
};

}  // namespace

TEST(CliUsage, BadArgumentsExitTwo) {
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("check").code, 2);
  EXPECT_EQ(cli("check " + replay("calendar.jsonl") + " --bogus").code, 2);
  auto missing = cli("check " + replay("missing.jsonl"));
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.out.find("cannot read"), std::string::npos);
  EXPECT_EQ(cli("check --policy " + data_path("nope.json").string() + " " + replay("calendar.jsonl")).code, 2);
}

TEST(CliUsage, HelpExitsZero) { EXPECT_EQ(cli("--help").code, 0); }

TEST_F(Cli, CalendarReplayIsAllowed) {
  auto r = cli("check " + replay("calendar.jsonl"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("Allow via cache  SELECT * FROM Events WHERE EId = 99"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("denies=0"), std::string::npos);
}

TEST_F(Cli, NoncompliantReplayExitsOne) {
  auto r = cli("check " + replay("calendar_noncompliant.jsonl"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("Deny(NonCompliant)"), std::string::npos) << r.out;
  EXPECT_EQ(cli("check --log-only " + replay("calendar_noncompliant.jsonl")).code, 0);
}

TEST_F(Cli, BrokenSolverDeniesAsUnknown) {
  auto r = cli("check --solver /nonexistent/solver " + replay("calendar_noncompliant.jsonl"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("Deny(Unknown)"), std::string::npos) << r.out;
}

TEST_F(Cli, JsonReportIsDeterministicWithoutCache) {
  auto a = cli("check --json --no-cache " + replay("calendar.jsonl"));
  auto b = cli("check --json --no-cache " + replay("calendar.jsonl"));
  ASSERT_EQ(a.code, 0) << a.out;
  auto ja = nlohmann::json::parse(a.out);
  auto jb = nlohmann::json::parse(b.out);
  EXPECT_EQ(ja["all_allowed"], true);
  EXPECT_EQ(decisions(ja), decisions(jb));
  EXPECT_EQ(ja["totals"], jb["totals"]);
}

TEST_F(Cli, CacheDoesNotChangeDecisions) {
  for (const char* file : {"calendar.jsonl", "calendar_noncompliant.jsonl", "products_in.jsonl"}) {
    auto cached = nlohmann::json::parse(cli("check --json " + replay(file)).out);
    auto uncached = nlohmann::json::parse(cli("check --json --no-cache " + replay(file)).out);
    auto cold = nlohmann::json::parse(cli("check --json --cold-cache " + replay(file)).out);
    EXPECT_EQ(decisions(cached), decisions(uncached)) << file;
    EXPECT_EQ(decisions(cached), decisions(cold)) << file;
  }
}

TEST_F(Cli, CacheDumpAndLoad) {
  auto path = std::filesystem::temp_directory_path() / "viewguard_cli_cache.json";
  ASSERT_EQ(cli("check --cache-dump " + path.string() + " " + replay("calendar.jsonl")).code, 0);
  ASSERT_TRUE(std::filesystem::exists(path));
  auto r = cli("check --json --cache-load " + path.string() + " " + replay("calendar.jsonl"));
  std::filesystem::remove(path);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(nlohmann::json::parse(r.out)["totals"]["solver_calls"], 0);
}

TEST_F(Cli, ParallelRequests) {
  auto r = cli("check --parallel-requests " + replay("calendar.jsonl"));
  EXPECT_EQ(r.code, 0) << r.out;
}

TEST_F(Cli, ProductsReplaySplits) {
  auto r = cli("check --json " + replay("products_in.jsonl"));
  ASSERT_EQ(r.code, 0) << r.out;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["totals"]["solver_calls"], 1);
  EXPECT_EQ(j["requests"][0]["queries"][1]["solver_calls"], 0);
}

TEST_F(Cli, TemplateDump) {
  auto r = cli("template " + replay("calendar.jsonl"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("(?MyUId, ?0, *) in SELECT * FROM Attendances WHERE UId = ?MyUId AND EId = ?0"),
            std::string::npos)
      << r.out;
  EXPECT_NE(r.out.find("SELECT * FROM Events WHERE EId = ?0"), std::string::npos);
  auto none = cli("template " + replay("fast_accept_only.jsonl"));
  EXPECT_EQ(none.code, 0);
  EXPECT_NE(none.out.find("no templates generated"), std::string::npos) << none.out;
}

TEST_F(Cli, OracleReportsWitness) {
  auto r = cli("oracle " + replay("calendar_noncompliant.jsonl"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("witness D1"), std::string::npos);
  EXPECT_NE(r.out.find("witness D2"), std::string::npos);
  auto j = cli("oracle --json " + replay("calendar.jsonl"));
  EXPECT_EQ(j.code, 0) << j.out;
  EXPECT_EQ(nlohmann::json::parse(j.out)["checks"].size(), 6u);
}
