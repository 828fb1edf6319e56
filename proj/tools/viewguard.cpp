#include <sqlite3.h>

#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "viewguard/errors.hpp"
#include "viewguard/replay.hpp"

using namespace viewguard;

namespace {

struct Options {
  std::string replay;
  std::string policy;
  std::vector<std::string> solvers;
  int timeout_check_ms = 2000;
  int timeout_template_ms = 10000;
  bool no_cache = false;
  bool cold_cache = false;
  std::string cache_dump;
  std::string cache_load;
  bool log_only = false;
  bool json = false;
  bool parallel = false;
  std::string database;
  std::size_t dom_consts = 3;
  int dom_rows = 2;
};

class SqliteRows {
 public:
  explicit SqliteRows(const std::string& path) {
    if (sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READONLY, nullptr) != SQLITE_OK) {
      std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
      sqlite3_close(db_);
      throw Error("cannot open database " + path + ": " + msg);
    }
  }
  ~SqliteRows() { sqlite3_close(db_); }
  SqliteRows(const SqliteRows&) = delete;
  SqliteRows& operator=(const SqliteRows&) = delete;

  std::vector<Tuple> operator()(const ReplayQuery& q) const {
    sqlite3_stmt* stmt = nullptr;
    if (sqlite3_prepare_v2(db_, q.sql.c_str(), -1, &stmt, nullptr) != SQLITE_OK)
      throw Error("line " + std::to_string(q.line) + ": " + sqlite3_errmsg(db_));
    std::unique_ptr<sqlite3_stmt, int (*)(sqlite3_stmt*)> guard(stmt, sqlite3_finalize);
    for (std::size_t i = 0; i < q.params.size(); ++i) {
      const auto& v = q.params[i];
      int idx = static_cast<int>(i) + 1;
      if (v.is_null()) sqlite3_bind_null(stmt, idx);
      else if (v.type() == ColumnType::String)
        sqlite3_bind_text(stmt, idx, v.string_value().c_str(), -1, SQLITE_TRANSIENT);
      else sqlite3_bind_int64(stmt, idx, v.int_value());
    }
    std::vector<Tuple> rows;
    int rc;
    while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
      Tuple row;
      for (int c = 0; c < sqlite3_column_count(stmt); ++c) {
        switch (sqlite3_column_type(stmt, c)) {
          case SQLITE_INTEGER: row.push_back(Value::of_int(sqlite3_column_int64(stmt, c))); break;
          case SQLITE_TEXT:
            row.push_back(Value::of_string(reinterpret_cast<const char*>(sqlite3_column_text(stmt, c))));
            break;
          case SQLITE_NULL: row.push_back(Value::null(ColumnType::Int)); break;
          default: throw Error("line " + std::to_string(q.line) + ": unsupported column value type");
        }
      }
      rows.push_back(std::move(row));
    }
    if (rc != SQLITE_DONE) throw Error("line " + std::to_string(q.line) + ": " + sqlite3_errmsg(db_));
    return rows;
  }

 private:
  sqlite3* db_ = nullptr;
};

struct Setup {
  Replay replay;
  std::shared_ptr<const PolicyBundle> policy;
  std::shared_ptr<DecisionCache> cache;
  EngineOptions engine;
  std::shared_ptr<SqliteRows> database;

  RowSource rows() const {
    if (!database) return nullptr;
    auto db = database;
    return [db](const ReplayQuery& q) { return (*db)(q); };
  }
};

Setup prepare(const Options& o) {
  Setup s;
  s.replay = load_replay(o.replay);
  std::filesystem::path policy_path = o.policy;
  if (policy_path.empty()) {
    if (!s.replay.policy) throw Error("no policy given on the command line or in the replay header");
    policy_path = *s.replay.policy;
  }
  s.policy = std::make_shared<const PolicyBundle>(load_policy(policy_path));
  if (!o.solvers.empty()) {
    s.engine.solvers.clear();
    for (const auto& cmd : o.solvers) s.engine.solvers.push_back(SolverConfig::from_command(cmd));
  }
  s.engine.check_budget = std::chrono::milliseconds(o.timeout_check_ms);
  s.engine.templates.solvers = s.engine.solvers;
  s.engine.templates.budget = std::chrono::milliseconds(o.timeout_template_ms);
  s.engine.use_cache = !o.no_cache;
  s.engine.generate_templates = !o.no_cache;
  s.engine.log_only = o.log_only;
  s.cache = std::make_shared<DecisionCache>();
  if (!o.cache_load.empty() && !o.no_cache) s.cache->load(o.cache_load, *s.policy);
  if (!o.database.empty()) s.database = std::make_shared<SqliteRows>(o.database);
  return s;
}

std::string describe(const Decision& d) {
  std::string out = d.allowed() ? "Allow" : "Deny(" + std::string(to_string(d.reason)) + ")";
  out += " via " + d.path;
  if (d.logged_only) out += " [log-only]";
  return out;
}

void print_stats(const SessionStats& s, const std::string& indent) {
  std::cout << indent << "queries=" << s.queries << " allows=" << s.allows << " denies=" << s.denies
            << " fast_accepts=" << s.fast_accepts << " solver_calls=" << s.solver_calls
            << " cache_hits=" << s.cache_hits << " cache_misses=" << s.cache_misses
            << " templates_cached=" << s.templates_cached << "\n";
}

RunReport run(const Setup& s, const Options& o) {
  if (!o.cold_cache) {
    Engine engine(s.policy, s.engine, s.cache);
    return run_replay(engine, s.replay, o.parallel, s.rows());
  }
  RunReport report;
  for (const auto& req : s.replay.requests) {
    Engine engine(s.policy, s.engine, std::make_shared<DecisionCache>());
    Replay one{s.replay.policy, {req}};
    auto r = run_replay(engine, one, false, s.rows());
    report.requests.push_back(std::move(r.requests.front()));
    report.totals += r.totals;
    for (const auto& t : engine.cache()->entries()) s.cache->insert(t);
  }
  return report;
}

int cmd_check(const Options& o) {
  auto s = prepare(o);
  auto report = run(s, o);
  if (o.json) {
    std::cout << report.to_json(s.policy->schema()).dump(2) << "\n";
  } else {
    for (std::size_t i = 0; i < report.requests.size(); ++i) {
      const auto& r = report.requests[i];
      std::cout << "request " << i + 1 << " " << r.ctx.to_json().dump() << "\n";
      for (const auto& q : r.queries) {
        std::cout << "  " << describe(q.decision) << "  " << q.sql << "\n";
        if (!q.decision.allowed() && !q.decision.detail.empty()) std::cout << "    " << q.decision.detail << "\n";
        if (!q.decision.templates.empty())
          std::cout << "    cached " << q.decision.templates.size() << " template(s)\n";
      }
      print_stats(r.stats, "  ");
    }
    std::cout << "total ";
    print_stats(report.totals, "");
  }
  if (!o.cache_dump.empty()) s.cache->dump(o.cache_dump, s.policy->schema());
  return report.all_allowed() || o.log_only ? 0 : 1;
}

int cmd_template(const Options& o) {
  auto s = prepare(o);
  s.engine.generate_templates = true;
  auto report = run(s, o);
  nlohmann::json all = nlohmann::json::array();
  int n = 0;
  for (const auto& r : report.requests) {
    for (const auto& q : r.queries) {
      for (const auto& t : q.decision.templates) {
        auto j = template_to_json(s.policy->schema(), t);
        if (o.json) {
          all.push_back({{"source", q.sql}, {"template", j}});
          continue;
        }
        std::cout << "template " << ++n << " from: " << q.sql << "\n"
                  << render_template(s.policy->schema(), t) << j.dump(2) << "\n\n";
      }
    }
  }
  if (o.json) std::cout << all.dump(2) << "\n";
  else if (n == 0) std::cout << "no templates generated\n";
  if (!o.cache_dump.empty()) s.cache->dump(o.cache_dump, s.policy->schema());
  return 0;
}

int cmd_oracle(const Options& o) {
  auto s = prepare(o);
  Engine engine(s.policy, s.engine, s.cache);
  OracleSettings settings{o.dom_consts, o.dom_rows};
  auto checks = run_oracle(engine, s.replay, settings, s.rows());
  auto j = oracle_report_json(s.policy->schema(), checks);
  if (o.json) {
    std::cout << j.dump(2) << "\n";
  } else {
    for (const auto& c : checks) {
      std::cout << (c.agrees ? "agree   " : "DISAGREE") << "  " << describe(c.decision)
                << "  strong=" << to_string(c.strong.kind) << " compliance=" << to_string(c.compliance.kind);
      if (c.feasible && !*c.feasible) std::cout << " (trace not realizable over the domain)";
      std::cout << "  " << c.sql << "\n";
      if (c.compliance.noncompliant() && c.compliance.d1 && c.compliance.d2) {
        std::cout << "    witness D1:\n" << c.compliance.d1->to_string(s.policy->schema())
                  << "    witness D2:\n" << c.compliance.d2->to_string(s.policy->schema());
      }
    }
  }
  return j["all_agree"].get<bool>() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Checks SQL query traces against a view-based access policy"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("replay", o.replay, "Replay file (JSON lines)")->required();
    cmd->add_option("--policy", o.policy, "Policy file; overrides the replay header");
    cmd->add_option("--solver", o.solvers, "Solver command reading SMT-LIB on stdin (repeatable)");
    cmd->add_option("--timeout-check-ms", o.timeout_check_ms, "Budget per compliance check");
    cmd->add_option("--timeout-template-ms", o.timeout_template_ms, "Budget per solver call during generalization");
    cmd->add_flag("--no-cache", o.no_cache, "Disable the decision cache");
    cmd->add_flag("--cold-cache", o.cold_cache, "Start every request with an empty cache");
    cmd->add_option("--cache-dump", o.cache_dump, "Write the cache to this file afterwards");
    cmd->add_option("--cache-load", o.cache_load, "Load cache entries from this file first");
    cmd->add_flag("--log-only", o.log_only, "Report denials without failing");
    cmd->add_flag("--json", o.json, "Machine-readable output");
    cmd->add_flag("--parallel-requests", o.parallel, "Run requests concurrently");
    cmd->add_option("--database", o.database, "SQLite file used for queries without recorded rows");
  };
  auto* check = app.add_subcommand("check", "Decide every query of a replay");
  common(check);
  auto* tmpl = app.add_subcommand("template", "Print the decision templates a replay generates");
  common(tmpl);
  auto* oracle = app.add_subcommand("oracle", "Cross-check decisions against brute-force enumeration");
  common(oracle);
  oracle->add_option("--dom-consts", o.dom_consts, "Constants per type in the enumeration domain");
  oracle->add_option("--dom-rows", o.dom_rows, "Rows per table in the enumeration domain");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*check) return cmd_check(o);
    if (*tmpl) return cmd_template(o);
    return cmd_oracle(o);
  } catch (const std::exception& e) {
    std::cerr << "viewguard: " << e.what() << "\n";
    return 2;
  }
}
