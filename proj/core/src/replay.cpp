#include "viewguard/replay.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "viewguard/errors.hpp"

namespace viewguard {

using json = nlohmann::json;

Value value_from_json(const json& j) {
  if (j.is_null()) return Value::null(ColumnType::Int);
  if (j.is_boolean()) return Value::of_bool(j.get<bool>());
  if (j.is_number_integer()) return Value::of_int(j.get<std::int64_t>());
  if (j.is_string()) return Value::of_string(j.get<std::string>());
  throw ParseError("unsupported value " + j.dump());
}

Replay parse_replay(std::istream& in, const std::filesystem::path& base) {
  Replay r;
  std::string line;
  std::size_t number = 0;
  bool header = false;
  bool open = false;
  auto fail = [&](const std::string& msg) { throw ParseError("line " + std::to_string(number) + ": " + msg); };
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(e.what());
    }
    if (!j.is_object()) fail("record must be a JSON object");
    try {
      if (!header) {
        header = true;
        if (j.contains("kind")) fail("missing header record");
        if (j.value("format_version", kFormatVersion) != kFormatVersion) fail("unsupported format_version");
        if (j.contains("policy")) r.policy = base / j["policy"].get<std::string>();
        r.requests.push_back({j.value("ctx", json::object()), {}});
        open = true;
        continue;
      }
      auto kind = j.at("kind").get<std::string>();
      if (kind == "begin_request") {
        r.requests.push_back({j.value("ctx", json::object()), {}});
        open = true;
      } else if (kind == "end_request") {
        open = false;
      } else if (kind == "query") {
        if (!open) fail("query outside a request");
        ReplayQuery q;
        q.sql = j.at("sql").get<std::string>();
        q.line = number;
        for (const auto& p : j.value("params", json::array())) q.params.push_back(value_from_json(p));
        if (j.contains("rows")) {
          std::vector<Tuple> rows;
          for (const auto& row : j["rows"]) {
            if (!row.is_array()) fail("each row must be an array");
            Tuple t;
            for (const auto& v : row) t.push_back(value_from_json(v));
            rows.push_back(std::move(t));
          }
          q.rows = std::move(rows);
        }
        r.requests.back().queries.push_back(std::move(q));
      } else {
        fail("unknown record kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      fail(e.what());
    }
  }
  if (!header) throw ParseError("missing header record");
  // A header with no queries and nothing after it is an empty replay.
  if (r.requests.size() == 1 && r.requests.front().queries.empty()) r.requests.clear();
  return r;
}

Replay load_replay(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  try {
    return parse_replay(in, path.parent_path());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

bool RunReport::all_allowed() const {
  for (const auto& r : requests)
    for (const auto& q : r.queries)
      if (!q.decision.allowed()) return false;
  return true;
}

json stats_to_json(const SessionStats& s) {
  return {{"queries", s.queries},
          {"allows", s.allows},
          {"denies", s.denies},
          {"fast_accepts", s.fast_accepts},
          {"solver_calls", s.solver_calls},
          {"template_solver_calls", s.template_solver_calls},
          {"cache_hits", s.cache_hits},
          {"cache_misses", s.cache_misses},
          {"templates_cached", s.templates_cached},
          {"template_failures", s.template_failures}};
}

json decision_to_json(const Schema& schema, const Decision& d) {
  json j{{"decision", d.allowed() ? "Allow" : "Deny"}, {"path", d.path}, {"solver_calls", d.solver_calls},
         {"cache_hits", d.cache_hits}};
  if (!d.allowed()) {
    j["reason"] = to_string(d.reason);
    j["detail"] = d.detail;
    j["logged_only"] = d.logged_only;
  }
  if (!d.templates.empty()) {
    j["templates"] = json::array();
    for (const auto& t : d.templates) j["templates"].push_back(template_to_json(schema, t));
  }
  return j;
}

json RunReport::to_json(const Schema& schema, bool timings) const {
  json j{{"format_version", kFormatVersion}, {"requests", json::array()}};
  for (const auto& r : requests) {
    json rj{{"ctx", r.ctx.to_json()}, {"queries", json::array()}, {"stats", stats_to_json(r.stats)}};
    for (const auto& q : r.queries) {
      auto qj = decision_to_json(schema, q.decision);
      qj["sql"] = q.sql;
      if (timings) qj["millis"] = q.millis;
      rj["queries"].push_back(std::move(qj));
    }
    j["requests"].push_back(std::move(rj));
  }
  j["totals"] = stats_to_json(totals);
  j["all_allowed"] = all_allowed();
  return j;
}

namespace {

std::vector<Tuple> rows_of(const ReplayQuery& q, const RowSource& source) {
  if (q.rows) return *q.rows;
  if (source) return source(q);
  return {};
}

RequestReport run_request(const Engine& engine, const ReplayRequest& req, const RowSource& source) {
  auto session = engine.begin_request(context_from_json(req.ctx, engine.policy()));
  RequestReport out;
  out.ctx = session.context();
  for (const auto& q : req.queries) {
    auto start = std::chrono::steady_clock::now();
    auto d = session.check_query(q.sql, q.params, rows_of(q, source));
    std::chrono::duration<double, std::milli> took = std::chrono::steady_clock::now() - start;
    out.queries.push_back({q.sql, std::move(d), took.count()});
  }
  out.stats = session.end_request();
  return out;
}

}  // namespace

RunReport run_replay(const Engine& engine, const Replay& replay, bool parallel, const RowSource& rows) {
  RunReport report;
  report.requests.resize(replay.requests.size());
  if (parallel && replay.requests.size() > 1) {
    std::vector<std::exception_ptr> errors(replay.requests.size());
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < replay.requests.size(); ++i) {
      threads.emplace_back([&, i] {
        try {
          report.requests[i] = run_request(engine, replay.requests[i], rows);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    for (std::size_t i = 0; i < replay.requests.size(); ++i)
      report.requests[i] = run_request(engine, replay.requests[i], rows);
  }
  for (const auto& r : report.requests) report.totals += r.stats;
  return report;
}

std::vector<OracleCheck> run_oracle(const Engine& engine, const Replay& replay, const OracleSettings& settings,
                                    const RowSource& source) {
  const auto& policy = engine.policy();
  std::vector<OracleCheck> checks;
  for (const auto& req : replay.requests) {
    auto session = engine.begin_request(context_from_json(req.ctx, policy));
    for (const auto& rq : req.queries) {
      OracleCheck c;
      c.sql = rq.sql;
      std::optional<BasicQuery> q;
      try {
        q = policy.parse_query(rq.sql, rq.params).query;
      } catch (const Error&) {
      }
      if (q) {
        const auto& obs = session.observations();
        std::vector<BasicQuery> queries{*q};
        std::vector<Tuple> tuples;
        for (const auto& o : obs) {
          queries.push_back(o.query);
          tuples.insert(tuples.end(), o.rows.begin(), o.rows.end());
        }
        for (const auto& v : policy.views()) queries.push_back(v.query);
        auto consts = collect_constants(queries, tuples, &session.context());
        auto dom = DomainSpec::with_constants(consts, settings.constants_per_type, settings.rows_per_table);
        c.feasible = trace_feasible(obs, policy.schema(), policy.constraints(), dom);
        if (c.feasible.value_or(true)) {
          c.strong = oracle_decide(OracleMode::Strong, *q, obs, policy, session.context(), dom);
          c.compliance = oracle_decide(OracleMode::Compliance, *q, obs, policy, session.context(), dom);
        } else {
          c.strong.kind = c.compliance.kind = OracleVerdict::Kind::Exhausted;
          c.strong.note = c.compliance.note = "trace is not realizable over the domain";
        }
      } else {
        c.strong.kind = c.compliance.kind = OracleVerdict::Kind::Exhausted;
        c.strong.note = c.compliance.note = "query is outside the supported fragment";
      }
      c.decision = session.check_query(rq.sql, rq.params, rows_of(rq, source));
      bool decided = c.decision.allowed() || c.decision.reason == DenyReason::NonCompliant;
      if (decided && c.strong.kind != OracleVerdict::Kind::Exhausted)
        c.agrees = c.decision.allowed() == c.strong.compliant();
      if (c.decision.allowed() && c.compliance.noncompliant()) c.agrees = false;
      checks.push_back(std::move(c));
    }
    session.end_request();
  }
  return checks;
}

json oracle_report_json(const Schema& schema, const std::vector<OracleCheck>& checks) {
  auto verdict = [&](const OracleVerdict& v) {
    json j{{"verdict", to_string(v.kind)}, {"databases", v.databases}};
    if (!v.note.empty()) j["note"] = v.note;
    if (v.d1 && v.d2) j["witness"] = {{"d1", v.d1->to_json(schema)}, {"d2", v.d2->to_json(schema)}};
    return j;
  };
  json j{{"format_version", kFormatVersion}, {"checks", json::array()}};
  bool all = true;
  for (const auto& c : checks) {
    json cj = decision_to_json(schema, c.decision);
    cj["sql"] = c.sql;
    if (c.feasible) cj["trace_feasible"] = *c.feasible;
    cj["strong"] = verdict(c.strong);
    cj["compliance"] = verdict(c.compliance);
    cj["agrees"] = c.agrees;
    all = all && c.agrees;
    j["checks"].push_back(std::move(cj));
  }
  j["all_agree"] = all;
  return j;
}

}  // namespace viewguard
