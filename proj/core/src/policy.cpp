#include "viewguard/policy.hpp"

#include <fstream>
#include <sstream>

#include "viewguard/errors.hpp"

namespace viewguard {

using nlohmann::json;

const Value* RequestContext::find(const std::string& name) const {
  for (const auto& [k, v] : params_)
    if (iequals(k, name)) return &v;
  return nullptr;
}

const Value& RequestContext::at(const std::string& name) const {
  const Value* v = find(name);
  if (!v) throw UnboundParameter("context parameter '" + name + "' is not bound");
  return *v;
}

json RequestContext::to_json() const {
  json j = json::object();
  for (const auto& [k, v] : params_) j[k] = v.to_json();
  return j;
}

PolicyBundle::PolicyBundle(Schema schema, std::vector<ParamDecl> context,
                           std::vector<std::pair<std::string, std::string>> views,
                           std::vector<ForeignKey> foreign_keys,
                           std::vector<std::pair<std::string, std::string>> containments)
    : schema_(std::move(schema)),
      context_(std::move(context)),
      foreign_keys_(std::move(foreign_keys)),
      containment_sql_(std::move(containments)) {
  bool has_now = false;
  for (std::size_t i = 0; i < context_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j)
      if (iequals(context_[i].name, context_[j].name))
        throw ResolutionError("duplicate context parameter '" + context_[i].name + "'");
    if (iequals(context_[i].name, kNowParam)) {
      if (context_[i].type != ColumnType::Timestamp) throw ResolutionError("NOW must be a timestamp");
      has_now = true;
    }
  }
  if (!has_now) context_.push_back(ParamDecl{kNowParam, ColumnType::Timestamp});

  for (const auto& fk : foreign_keys_) {
    if (fk.from_table >= schema_.size() || fk.to_table >= schema_.size())
      throw ResolutionError("foreign key refers to an unknown table");
    if (fk.from_columns.empty() || fk.from_columns.size() != fk.to_columns.size())
      throw ResolutionError("foreign key column lists differ in length");
    for (std::size_t k = 0; k < fk.from_columns.size(); ++k) {
      const auto& src = schema_.table(fk.from_table);
      const auto& dst = schema_.table(fk.to_table);
      if (fk.from_columns[k] >= src.arity() || fk.to_columns[k] >= dst.arity())
        throw ResolutionError("foreign key column out of range");
      if (src.columns[fk.from_columns[k]].type != dst.columns[fk.to_columns[k]].type)
        throw ResolutionError("foreign key column types differ");
    }
  }

  auto env = resolve_env();
  for (auto& [name, sql_text] : views) {
    for (const auto& v : views_)
      if (v.name == name) throw ResolutionError("duplicate view name '" + name + "'");
    sql::ParseOptions opts;
    opts.allow_in_subquery = true;
    auto ast = sql::parse(sql_text, {}, opts);
    auto c = sql::classify_basic(ast, schema_, env);
    if (auto* nb = std::get_if<sql::NotBasic>(&c)) throw NonBasicView("view " + name + ": " + nb->reason);
    views_.push_back(View{name, sql_text, std::move(std::get<BasicQuery>(c))});
  }
  for (const auto& [lhs, rhs] : containment_sql_) {
    Containment ct{parse_basic(lhs), parse_basic(rhs)};
    if (ct.lhs.arity() != ct.rhs.arity() || output_types(schema_, ct.lhs) != output_types(schema_, ct.rhs))
      throw ResolutionError("containment sides have different output types");
    if (!is_closed(ct.lhs) || !is_closed(ct.rhs))
      throw ResolutionError("containment constraints cannot use parameters");
    // Duplicates are irrelevant to containment; read both sides as sets.
    ct.lhs.certificate = ct.lhs.is_union() ? Certificate::UnionDedup : Certificate::Distinct;
    ct.rhs.certificate = ct.rhs.is_union() ? Certificate::UnionDedup : Certificate::Distinct;
    containments_.push_back(std::move(ct));
  }
  constraints_ = key_constraints(schema_);
  for (const auto& fk : foreign_keys_) constraints_.push_back(fk);
  for (const auto& ct : containments_) constraints_.push_back(ct);
}

std::optional<ColumnType> PolicyBundle::param_type(const std::string& name) const {
  for (const auto& p : context_)
    if (iequals(p.name, name)) return p.type;
  return std::nullopt;
}

sql::ResolveEnv PolicyBundle::resolve_env() const {
  sql::ResolveEnv env;
  for (const auto& p : context_) env.context[p.name] = p.type;
  env.foreign_keys = &foreign_keys_;
  return env;
}

sql::RewriteResult PolicyBundle::parse_query(const std::string& sql_text, const std::vector<Value>& params) const {
  auto ast = sql::parse(sql_text, params);
  auto env = resolve_env();
  env.context.clear();  // application queries carry constants, not ?Name
  return sql::to_basic(ast, schema_, env);
}

BasicQuery PolicyBundle::parse_basic(const std::string& sql_text) const {
  sql::ParseOptions opts;
  opts.allow_in_subquery = true;
  auto ast = sql::parse(sql_text, {}, opts);
  auto env = resolve_env();
  auto c = sql::classify_basic(ast, schema_, env);
  if (auto* q = std::get_if<BasicQuery>(&c)) return *q;
  // Set-semantics sides of a containment need no certificate of their own.
  for (auto& s : ast.selects) s.distinct = true;
  c = sql::classify_basic(ast, schema_, env);
  if (auto* nb = std::get_if<sql::NotBasic>(&c)) throw UnsupportedFeature(nb->reason);
  return std::get<BasicQuery>(c);
}

bool operator==(const PolicyBundle& a, const PolicyBundle& b) {
  return a.schema_ == b.schema_ && a.context_ == b.context_ && a.views_ == b.views_ &&
         a.foreign_keys_ == b.foreign_keys_ && a.containments_ == b.containments_;
}

namespace {

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  return j.at(key);
}

std::string require_string(const json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_string()) throw ParseError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<std::size_t> column_list(const TableDef& t, const json& j) {
  if (!j.is_array()) throw ParseError("column list must be an array");
  std::vector<std::size_t> out;
  for (const auto& c : j) {
    if (!c.is_string()) throw ParseError("column names must be strings");
    auto idx = t.column_index(c.get<std::string>());
    if (!idx) throw ResolutionError("unknown column '" + c.get<std::string>() + "' in table '" + t.name + "'");
    out.push_back(*idx);
  }
  return out;
}

json column_names(const TableDef& t, const std::vector<std::size_t>& cols) {
  json out = json::array();
  for (auto c : cols) out.push_back(t.columns[c].name);
  return out;
}

}  // namespace

PolicyBundle policy_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("policy must be a JSON object");
  if (j.contains("format_version") && j["format_version"] != kFormatVersion)
    throw ParseError("unsupported policy format_version");
  std::vector<TableDef> tables;
  for (const auto& tj : require(j, "tables")) {
    TableDef t;
    t.name = require_string(tj, "name");
    for (const auto& cj : require(tj, "columns")) {
      Column c;
      c.name = require_string(cj, "name");
      c.type = column_type_from_string(require_string(cj, "type"));
      if (cj.contains("nullable")) c.nullable = cj["nullable"].get<bool>();
      t.columns.push_back(std::move(c));
    }
    t.primary_key = column_list(t, require(tj, "primary_key"));
    if (tj.contains("unique"))
      for (const auto& u : tj["unique"]) t.unique_keys.push_back(column_list(t, u));
    tables.push_back(std::move(t));
  }
  Schema schema(std::move(tables));

  std::vector<ForeignKey> fks;
  std::vector<std::pair<std::string, std::string>> containments;
  if (j.contains("constraints")) {
    for (const auto& cj : j["constraints"]) {
      std::string kind = require_string(cj, "kind");
      if (kind == "foreign_key") {
        ForeignKey fk;
        fk.from_table = schema.index_of(require_string(cj, "from_table"));
        fk.to_table = schema.index_of(require_string(cj, "to_table"));
        fk.from_columns = column_list(schema.table(fk.from_table), require(cj, "from_columns"));
        fk.to_columns = column_list(schema.table(fk.to_table), require(cj, "to_columns"));
        fks.push_back(std::move(fk));
      } else if (kind == "containment") {
        containments.emplace_back(require_string(cj, "lhs"), require_string(cj, "rhs"));
      } else {
        throw ParseError("unknown constraint kind '" + kind + "'");
      }
    }
  }

  std::vector<ParamDecl> context;
  if (j.contains("context")) {
    for (const auto& pj : j["context"])
      context.push_back(ParamDecl{require_string(pj, "name"), column_type_from_string(require_string(pj, "type"))});
  }

  std::vector<std::pair<std::string, std::string>> views;
  for (const auto& vj : require(j, "views")) views.emplace_back(require_string(vj, "name"), require_string(vj, "sql"));

  return PolicyBundle(std::move(schema), std::move(context), std::move(views), std::move(fks), std::move(containments));
}

PolicyBundle load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open policy file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("policy file " + path.string() + ": " + e.what());
  }
  try {
    return policy_from_json(j);
  } catch (const json::exception& e) {
    throw ParseError("policy file " + path.string() + ": " + e.what());
  }
}

json dump_policy_json(const PolicyBundle& p) {
  json j;
  j["format_version"] = kFormatVersion;
  j["tables"] = json::array();
  for (const auto& t : p.schema_.tables()) {
    json tj;
    tj["name"] = t.name;
    tj["columns"] = json::array();
    for (const auto& c : t.columns)
      tj["columns"].push_back({{"name", c.name}, {"type", std::string(to_string(c.type))}, {"nullable", c.nullable}});
    tj["primary_key"] = column_names(t, t.primary_key);
    if (!t.unique_keys.empty()) {
      tj["unique"] = json::array();
      for (const auto& u : t.unique_keys) tj["unique"].push_back(column_names(t, u));
    }
    j["tables"].push_back(std::move(tj));
  }
  j["constraints"] = json::array();
  for (const auto& fk : p.foreign_keys_) {
    const auto& src = p.schema_.table(fk.from_table);
    const auto& dst = p.schema_.table(fk.to_table);
    j["constraints"].push_back({{"kind", "foreign_key"},
                                {"from_table", src.name},
                                {"from_columns", column_names(src, fk.from_columns)},
                                {"to_table", dst.name},
                                {"to_columns", column_names(dst, fk.to_columns)}});
  }
  for (const auto& [lhs, rhs] : p.containment_sql_)
    j["constraints"].push_back({{"kind", "containment"}, {"lhs", lhs}, {"rhs", rhs}});
  j["views"] = json::array();
  for (const auto& v : p.views_) j["views"].push_back({{"name", v.name}, {"sql", v.sql}});
  j["context"] = json::array();
  for (const auto& c : p.context_) {
    if (iequals(c.name, kNowParam)) continue;
    j["context"].push_back({{"name", c.name}, {"type", std::string(to_string(c.type))}});
  }
  return j;
}

BasicQuery instantiate(const BasicQuery& q, const RequestContext& ctx) {
  return map_leaves(q, [&](const Term& t) -> Term {
    if (const auto* p = std::get_if<ContextParam>(&t)) return ctx.at(p->name).coerce(p->type);
    return t;
  });
}

BasicQuery instantiate_view(const View& view, const RequestContext& ctx) { return instantiate(view.query, ctx); }

void validate_context(const PolicyBundle& policy, const RequestContext& ctx) {
  for (const auto& d : policy.context_decl()) {
    const Value* v = ctx.find(d.name);
    if (!v) throw UnboundParameter("context parameter '" + d.name + "' is not bound");
    if (v->type() != d.type) {
      try {
        (void)v->coerce(d.type);
      } catch (const Error&) {
        throw UnboundParameter("context parameter '" + d.name + "' has the wrong type");
      }
    }
  }
}

RequestContext context_from_json(const json& j, const PolicyBundle& policy) {
  if (!j.is_object()) throw ParseError("context must be a JSON object");
  RequestContext ctx;
  for (const auto& [k, v] : j.items()) {
    auto t = policy.param_type(k);
    if (!t) throw ResolutionError("unknown context parameter '" + k + "'");
    std::string name = k;
    for (const auto& d : policy.context_decl())
      if (iequals(d.name, k)) name = d.name;
    ctx.set(name, Value::from_json(v, *t));
  }
  return ctx;
}

}  // namespace viewguard
