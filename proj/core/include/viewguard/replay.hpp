#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "viewguard/engine.hpp"
#include "viewguard/oracle.hpp"

namespace viewguard {

struct ReplayQuery {
  std::string sql;
  std::vector<Value> params;
  std::optional<std::vector<Tuple>> rows;  // absent: to be filled by the caller
  std::size_t line = 0;
};

struct ReplayRequest {
  nlohmann::json ctx;
  std::vector<ReplayQuery> queries;
};

/// JSON lines: a header {"format_version", "policy", "ctx"}, then
/// {"kind":"query","sql","params","rows"} records; {"kind":"end_request"}
/// and {"kind":"begin_request","ctx"} separate requests.
struct Replay {
  std::optional<std::filesystem::path> policy;  // relative to the replay file
  std::vector<ReplayRequest> requests;
};

Replay parse_replay(std::istream& in, const std::filesystem::path& base = {});
Replay load_replay(const std::filesystem::path& path);

/// Untyped JSON scalar to a Value; the engine retypes it against columns.
Value value_from_json(const nlohmann::json& j);

struct QueryReport {
  std::string sql;
  Decision decision;
  double millis = 0;
};

struct RequestReport {
  RequestContext ctx;
  std::vector<QueryReport> queries;
  SessionStats stats;
};

struct RunReport {
  std::vector<RequestReport> requests;
  SessionStats totals;

  bool all_allowed() const;
  nlohmann::json to_json(const Schema& schema, bool timings = true) const;
};

/// Fills rows for queries that carry none, e.g. by running them on a database.
using RowSource = std::function<std::vector<Tuple>(const ReplayQuery&)>;

/// Runs each request in its own session.  With `parallel`, requests run on
/// separate threads sharing the engine's cache.
RunReport run_replay(const Engine& engine, const Replay& replay, bool parallel = false,
                     const RowSource& rows = nullptr);

struct OracleCheck {
  std::string sql;
  Decision decision;
  std::optional<bool> feasible;
  OracleVerdict strong;
  OracleVerdict compliance;
  /// Allow exactly when the strong-mode oracle says Compliant; undecided
  /// comparisons (Exhausted, Unknown) count as agreeing.
  bool agrees = true;
};

struct OracleSettings {
  std::size_t constants_per_type = 3;
  int rows_per_table = 2;
};

/// Replays sequentially and checks every decision against both oracle modes.
std::vector<OracleCheck> run_oracle(const Engine& engine, const Replay& replay, const OracleSettings& settings,
                                    const RowSource& rows = nullptr);
nlohmann::json oracle_report_json(const Schema& schema, const std::vector<OracleCheck>& checks);

nlohmann::json stats_to_json(const SessionStats& s);
nlohmann::json decision_to_json(const Schema& schema, const Decision& d);

}  // namespace viewguard
