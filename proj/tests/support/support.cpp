#include "support.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "viewguard/errors.hpp"
#include "viewguard/smt/encoder.hpp"

#ifndef VIEWGUARD_TEST_DATA_DIR
#error "VIEWGUARD_TEST_DATA_DIR must be defined"
#endif

namespace viewguard::testing {

std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(VIEWGUARD_TEST_DATA_DIR) / name; }

std::shared_ptr<const PolicyBundle> calendar_policy() {
  static auto p = std::make_shared<const PolicyBundle>(load_policy(data_path("calendar_policy.json")));
  return p;
}

std::shared_ptr<const PolicyBundle> products_policy() {
  static auto p = std::make_shared<const PolicyBundle>(load_policy(data_path("products_policy.json")));
  return p;
}

bool solver_available() {
  static const bool ok = [] {
    auto solvers = default_solvers();
    if (solvers.empty() || solvers.front().argv.empty()) return false;
    const auto& exe = solvers.front().argv.front();
    if (exe.find('/') != std::string::npos) return std::filesystem::exists(exe);
    const char* path = std::getenv("PATH");
    if (!path) return false;
    std::stringstream ss(path);
    std::string dir;
    while (std::getline(ss, dir, ':'))
      if (!dir.empty() && std::filesystem::exists(std::filesystem::path(dir) / exe)) return true;
    return false;
  }();
  return ok;
}

RequestContext ctx_of(const PolicyBundle& policy, const nlohmann::json& j) {
  auto ctx = context_from_json(j, policy);
  if (!ctx.find(kNowParam)) ctx.set(kNowParam, Value::of_timestamp(1000));
  return ctx;
}

std::vector<Observation> observe(const PolicyBundle& policy,
                                 const std::vector<std::pair<std::string, std::vector<Tuple>>>& entries) {
  std::vector<Observation> out;
  for (const auto& [sql, rows] : entries) {
    auto rr = policy.parse_query(sql);
    auto types = output_types(policy.schema(), rr.query);
    Observation o{rr.query, {}, rr.limit_dropped};
    for (const auto& r : rows) {
      Tuple typed;
      for (std::size_t k = 0; k < r.size(); ++k) typed.push_back(r[k].coerce(types.at(k)));
      o.rows.push_back(std::move(typed));
    }
    out.push_back(std::move(o));
  }
  return out;
}

Tuple row(std::initializer_list<Value> values) { return Tuple(values); }
Value I(std::int64_t v) { return Value::of_int(v); }
Value S(std::string v) { return Value::of_string(std::move(v)); }

SolverOutcome solver_verdict(const PolicyBundle& policy, const RequestContext& ctx, const Trace& trace,
                             const BasicQuery& q) {
  return solve(smt::encode_strong_compliance(policy, ctx, trace, q), default_solvers(),
               std::chrono::milliseconds(10000));
}

std::string Instance::describe() const {
  std::ostringstream out;
  out << dump_policy_json(*policy).dump() << "\nctx " << ctx.to_json().dump() << "\n";
  for (const auto& o : trace) {
    out << "trace " << render_sql(policy->schema(), o.query) << " ->";
    for (const auto& r : o.rows) out << " " << tuple_to_string(r);
    out << "\n";
  }
  out << "query " << query_sql << "\n";
  return out.str();
}

namespace {

template <class T>
const T& pick(const std::vector<T>& xs, std::mt19937& rng) {
  return xs[std::uniform_int_distribution<std::size_t>(0, xs.size() - 1)(rng)];
}

bool chance(std::mt19937& rng, double p) { return std::bernoulli_distribution(p)(rng); }

}  // namespace

std::string InstanceGenerator::constant(ColumnType t) {
  if (t == ColumnType::String) return pick(std::vector<std::string>{"'a'", "'b'"}, rng_);
  return std::to_string(std::uniform_int_distribution<int>(1, 3)(rng_));
}

std::shared_ptr<const PolicyBundle> InstanceGenerator::random_policy() {
  int tables = std::uniform_int_distribution<int>(1, 3)(rng_);
  std::vector<TableDef> defs;
  for (int t = 0; t < tables; ++t) {
    TableDef def;
    def.name = "T" + std::to_string(t);
    def.columns.push_back(Column{"c0", ColumnType::Int, false});
    int extra = std::uniform_int_distribution<int>(0, 2)(rng_);
    for (int c = 1; c <= extra; ++c) {
      auto type = chance(rng_, 0.7) ? ColumnType::Int : ColumnType::String;
      def.columns.push_back(Column{"c" + std::to_string(c), type, chance(rng_, 0.3)});
    }
    def.primary_key = {0};
    defs.push_back(std::move(def));
  }
  std::vector<ForeignKey> fks;
  if (tables > 1 && chance(rng_, 0.3)) {
    std::size_t from = std::uniform_int_distribution<std::size_t>(0, defs.size() - 1)(rng_);
    std::size_t to = (from + 1) % defs.size();
    for (std::size_t c = 1; c < defs[from].columns.size(); ++c) {
      if (defs[from].columns[c].type == ColumnType::Int) {
        fks.push_back(ForeignKey{from, {c}, to, {0}});
        break;
      }
    }
  }
  std::vector<ParamDecl> context;
  bool param = chance(rng_, 0.5);
  if (param) context.push_back({"P", ColumnType::Int});
  Schema schema(defs);
  PolicyBundle shell(schema, context, {}, fks);
  std::vector<std::pair<std::string, std::string>> views;
  int nviews = std::uniform_int_distribution<int>(1, 2)(rng_);
  for (int v = 0; v < nviews; ++v) views.emplace_back("V" + std::to_string(v), random_query(shell, param));
  return std::make_shared<const PolicyBundle>(schema, context, views, fks);
}

std::string InstanceGenerator::random_query(const PolicyBundle& policy, bool allow_param) {
  const auto& schema = policy.schema();
  std::size_t t = std::uniform_int_distribution<std::size_t>(0, schema.size() - 1)(rng_);
  const auto& def = schema.table(t);
  auto col = [&](bool int_only = false) -> std::size_t {
    std::vector<std::size_t> idx;
    for (std::size_t c = 0; c < def.arity(); ++c)
      if (!int_only || def.columns[c].type == ColumnType::Int) idx.push_back(c);
    return pick(idx, rng_);
  };
  auto value = [&](ColumnType type) {
    if (allow_param && type == ColumnType::Int && chance(rng_, 0.5)) return std::string("?P");
    return constant(type);
  };
  auto eq = [&](std::size_t c) { return def.columns[c].name + " = " + value(def.columns[c].type); };
  std::string from = " FROM " + def.name;

  int form = std::uniform_int_distribution<int>(0, 8)(rng_);
  switch (form) {
    case 0: return "SELECT *" + from;
    case 1: return "SELECT *" + from + " WHERE " + eq(col());
    case 2: {
      auto c = col();
      return "SELECT c0, " + def.columns[c].name + from + " WHERE " + eq(col());
    }
    case 3: return "SELECT DISTINCT " + def.columns[col()].name + from + (chance(rng_, 0.5) ? " WHERE " + eq(col()) : "");
    case 4: {
      auto c = col();
      auto type = def.columns[c].type;
      return "SELECT *" + from + " WHERE " + def.columns[c].name + " IN (" + constant(type) + ", " + constant(type) + ")";
    }
    case 5: return "SELECT *" + from + " WHERE " + eq(col()) + " OR " + eq(col());
    case 6: {
      std::vector<std::size_t> nullable;
      for (std::size_t c = 0; c < def.arity(); ++c)
        if (def.columns[c].nullable) nullable.push_back(c);
      if (nullable.empty()) return "SELECT *" + from + " WHERE " + eq(col());
      return "SELECT *" + from + " WHERE " + def.columns[pick(nullable, rng_)].name +
             (chance(rng_, 0.5) ? " IS NULL" : " IS NOT NULL");
    }
    case 7: return "SELECT *" + from + " WHERE " + def.columns[col(true)].name + " < " + value(ColumnType::Int);
    default: {
      if (schema.size() < 2) return "SELECT *" + from + " WHERE " + eq(col());
      std::size_t u = (t + 1) % schema.size();
      const auto& other = schema.table(u);
      std::size_t link = col(true);
      std::size_t shown = std::uniform_int_distribution<std::size_t>(0, other.arity() - 1)(rng_);
      std::string sql = "SELECT DISTINCT a." + def.columns[link].name + ", b." + other.columns[shown].name + " FROM " +
                        def.name + " a, " + other.name + " b WHERE a." + def.columns[link].name + " = b.c0";
      if (chance(rng_, 0.5)) sql += " AND a." + eq(col());
      return sql;
    }
  }
}

Instance InstanceGenerator::next() {
  for (;;) {
    Instance inst;
    try {
      inst.policy = random_policy();
    } catch (const Error&) {
      continue;
    }
    const auto& policy = *inst.policy;
    if (policy.param_type("P")) inst.ctx.set("P", Value::of_int(std::uniform_int_distribution<int>(1, 3)(rng_)));
    inst.ctx.set(kNowParam, Value::of_timestamp(1000));

    auto dom = DomainSpec::with_constants({}, 3, 2);
    dom.pools[ColumnType::String] = {Value::of_string("a"), Value::of_string("b")};
    inst.source = random_database(policy.schema(), policy.constraints(), dom, rng_);

    std::size_t budget = 3;
    int queries = std::uniform_int_distribution<int>(0, 2)(rng_);
    for (int i = 0; i < queries; ++i) {
      auto sql = random_query(policy, false);
      auto q = policy.parse_query(sql).query;
      auto rows = evaluate(q, inst.source);
      if (rows.size() > budget) continue;
      budget -= rows.size();
      inst.trace.push_back(Observation{q, rows, false});
    }
    inst.query_sql = random_query(policy, false);
    try {
      inst.query = policy.parse_query(inst.query_sql).query;
    } catch (const Error&) {
      continue;
    }
    return inst;
  }
}

Database random_database(const Schema& schema, const std::vector<Constraint>& constraints, const DomainSpec& dom,
                         std::mt19937& rng) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    Database d(schema.size());
    for (std::size_t t = 0; t < schema.size(); ++t) {
      const auto& def = schema.table(t);
      int rows = std::uniform_int_distribution<int>(0, dom.rows_for(t))(rng);
      std::vector<Tuple> out;
      for (int r = 0; r < rows; ++r) {
        Tuple tup;
        for (const auto& c : def.columns) {
          if (c.nullable && chance(rng, 0.25)) tup.push_back(Value::null(c.type));
          else tup.push_back(pick(dom.pools.at(c.type), rng));
        }
        out.push_back(std::move(tup));
      }
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
      d.set_rows(t, std::move(out));
    }
    if (conforms(schema, d) && check_constraints(schema, constraints, d)) return d;
  }
  return Database(schema.size());
}

DomainSpec tiny_domain(const std::vector<BasicQuery>& queries, const std::vector<Observation>& trace,
                       const RequestContext* ctx, std::size_t per_type, int rows) {
  std::vector<BasicQuery> qs = queries;
  std::vector<Tuple> tuples;
  for (const auto& o : trace) {
    qs.push_back(o.query);
    tuples.insert(tuples.end(), o.rows.begin(), o.rows.end());
  }
  return DomainSpec::with_constants(collect_constants(qs, tuples, ctx), per_type, rows);
}

DomainSpec tiny_domain(const PolicyBundle& policy, std::vector<BasicQuery> queries,
                       const std::vector<Observation>& trace, const RequestContext* ctx, std::size_t per_type,
                       int rows) {
  for (const auto& v : policy.views()) queries.push_back(v.query);
  return tiny_domain(queries, trace, ctx, per_type, rows);
}

std::vector<Tuple> sorted_set(std::vector<Tuple> rows) {
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  return rows;
}

std::vector<Tuple> sqlite_rows(const Schema& schema, const Database& d, const std::string& sql,
                               const std::vector<ColumnType>& types) {
  sqlite3* db = nullptr;
  if (sqlite3_open(":memory:", &db) != SQLITE_OK) throw Error("sqlite open failed");
  std::unique_ptr<sqlite3, int (*)(sqlite3*)> guard(db, sqlite3_close);
  auto exec = [&](const std::string& stmt) {
    char* err = nullptr;
    if (sqlite3_exec(db, stmt.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
      std::string msg = err ? err : "unknown";
      sqlite3_free(err);
      throw Error("sqlite: " + msg + " in " + stmt);
    }
  };
  for (std::size_t t = 0; t < schema.size(); ++t) {
    const auto& def = schema.table(t);
    std::string ddl = "CREATE TABLE " + def.name + " (";
    for (std::size_t c = 0; c < def.arity(); ++c) ddl += (c ? ", " : "") + def.columns[c].name;
    exec(ddl + ")");
    for (const auto& r : d.rows(t)) {
      std::string ins = "INSERT INTO " + def.name + " VALUES (";
      for (std::size_t c = 0; c < r.size(); ++c) {
        ins += c ? ", " : "";
        if (r[c].is_null()) ins += "NULL";
        else if (r[c].type() == ColumnType::String) ins += "'" + r[c].string_value() + "'";
        else ins += std::to_string(r[c].int_value());
      }
      exec(ins + ")");
    }
  }
  sqlite3_stmt* stmt = nullptr;
  if (sqlite3_prepare_v2(db, sql.c_str(), -1, &stmt, nullptr) != SQLITE_OK)
    throw Error(std::string("sqlite: ") + sqlite3_errmsg(db) + " in " + sql);
  std::unique_ptr<sqlite3_stmt, int (*)(sqlite3_stmt*)> sguard(stmt, sqlite3_finalize);
  std::vector<Tuple> out;
  while (sqlite3_step(stmt) == SQLITE_ROW) {
    Tuple r;
    for (int c = 0; c < sqlite3_column_count(stmt); ++c) {
      auto type = types.at(static_cast<std::size_t>(c));
      switch (sqlite3_column_type(stmt, c)) {
        case SQLITE_NULL: r.push_back(Value::null(type)); break;
        case SQLITE_TEXT:
          r.push_back(Value::of_string(reinterpret_cast<const char*>(sqlite3_column_text(stmt, c))).coerce(type));
          break;
        default: r.push_back(Value::of_int(sqlite3_column_int64(stmt, c)).coerce(type)); break;
      }
    }
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace viewguard::testing

namespace viewguard::testing {

std::shared_ptr<const PolicyBundle> calendar_with_fk() {
  static auto p = [] {
    auto j = dump_policy_json(*calendar_policy());
    j["constraints"] = {{{"kind", "foreign_key"},
                         {"from_table", "Attendances"},
                         {"from_columns", {"EId"}},
                         {"to_table", "Events"},
                         {"to_columns", {"EId"}}}};
    return std::make_shared<const PolicyBundle>(policy_from_json(j));
  }();
  return p;
}

std::vector<RewriteCase> rewrite_cases() {
  return {
      {"inner_join", "SELECT * FROM Users INNER JOIN Attendances ON Users.UId = Attendances.UId WHERE Attendances.EId = 2",
       RewriteCheck::Equal},
      {"inner_join", "SELECT e.EId, e.Title, a.UId FROM Events e INNER JOIN Attendances a ON e.EId = a.EId WHERE a.UId = 1",
       RewriteCheck::Equal},
      {"left_join_fk", "SELECT a.UId, a.EId, e.Title FROM Attendances a LEFT JOIN Events e ON a.EId = e.EId",
       RewriteCheck::Equal},
      {"order_by", "SELECT Name FROM Users ORDER BY UId", RewriteCheck::Projection},
      {"distinct_left_join",
       "SELECT DISTINCT Events.* FROM Events LEFT JOIN Attendances ON Events.EId = Attendances.EId "
       "WHERE Attendances.UId = 1 OR Events.Duration = 10",
       RewriteCheck::Equal},
      {"distinct_left_join",
       "SELECT DISTINCT Events.* FROM Events LEFT JOIN Attendances ON Events.EId = Attendances.EId AND "
       "Attendances.UId = 2",
       RewriteCheck::Equal},
      {"sum", "SELECT SUM(Duration) FROM Events", RewriteCheck::Sum},
      {"sum", "SELECT SUM(Duration) FROM Events WHERE Title = 'a'", RewriteCheck::Sum},
      {"limit", "SELECT * FROM Attendances WHERE UId = 1 LIMIT 1", RewriteCheck::Prefix},
      {"limit", "SELECT * FROM Users ORDER BY Name LIMIT 2", RewriteCheck::Prefix},
  };
}

std::string check_rewrite(const PolicyBundle& policy, const RewriteCase& c, int databases, std::uint32_t seed) {
  auto rr = policy.parse_query(c.sql);
  const auto& schema = policy.schema();
  auto types = output_types(schema, rr.query);
  std::mt19937 rng(seed);
  DomainSpec dom;
  dom.max_rows = 3;
  dom.pools[ColumnType::Int] = {Value::of_int(1), Value::of_int(2), Value::of_int(10)};
  dom.pools[ColumnType::String] = {Value::of_string("a"), Value::of_string("b")};
  dom.pools[ColumnType::Timestamp] = {Value::of_timestamp(1), Value::of_timestamp(2)};
  dom.pools[ColumnType::Bool] = {Value::of_bool(false), Value::of_bool(true)};

  for (int i = 0; i < databases; ++i) {
    auto d = random_database(schema, policy.constraints(), dom, rng);
    auto rewritten = evaluate(rr.query, d);
    auto bag = evaluate_bag(rr.query, d);
    auto cert = rr.query.certificate;
    bool keyed = cert == Certificate::ProjectsKeys || cert == Certificate::KeyConstrainedWhere;
    if (keyed && bag.size() != rewritten.size())
      return "rewritten query returned duplicate rows on\n" + d.to_string(schema);
    bool ok = true;
    switch (c.check) {
      case RewriteCheck::Equal: ok = sorted_set(sqlite_rows(schema, d, c.sql, types)) == rewritten; break;
      case RewriteCheck::Projection: {
        std::size_t keep = types.size() - rr.extra_columns;
        std::vector<ColumnType> head(types.begin(), types.begin() + static_cast<std::ptrdiff_t>(keep));
        std::vector<Tuple> projected;
        for (const auto& r : rewritten) projected.emplace_back(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(keep));
        ok = sorted_set(sqlite_rows(schema, d, c.sql, head)) == sorted_set(projected);
        break;
      }
      case RewriteCheck::Sum: {
        std::optional<std::int64_t> total;
        for (const auto& r : rewritten)
          if (!r.back().is_null()) total = total.value_or(0) + r.back().int_value();
        auto got = sqlite_rows(schema, d, c.sql, {types.back()});
        ok = got.size() == 1 && (total ? !got[0][0].is_null() && got[0][0].int_value() == *total : got[0][0].is_null());
        break;
      }
      case RewriteCheck::Prefix: {
        auto limited = sqlite_rows(schema, d, c.sql, types);
        for (const auto& r : limited) ok = ok && std::binary_search(rewritten.begin(), rewritten.end(), r);
        break;
      }
    }
    if (!ok) return "results differ on\n" + d.to_string(schema);
  }
  return {};
}

}  // namespace viewguard::testing
