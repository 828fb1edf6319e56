#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "viewguard/constraints.hpp"
#include "viewguard/query.hpp"
#include "viewguard/schema.hpp"
#include "viewguard/sql/frontend.hpp"

namespace viewguard {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kNowParam = "NOW";

/// Parameter bindings of one request (MyUId, NOW, ...).
class RequestContext {
 public:
  RequestContext() = default;
  explicit RequestContext(std::map<std::string, Value> params) : params_(std::move(params)) {}

  void set(const std::string& name, Value v) { params_[name] = std::move(v); }
  const Value* find(const std::string& name) const;
  const Value& at(const std::string& name) const;  // throws UnboundParameter
  const std::map<std::string, Value>& params() const { return params_; }

  nlohmann::json to_json() const;

  friend bool operator==(const RequestContext&, const RequestContext&) = default;

 private:
  std::map<std::string, Value> params_;
};

struct View {
  std::string name;
  std::string sql;
  BasicQuery query;

  friend bool operator==(const View& a, const View& b) { return a.name == b.name && a.query == b.query; }
};

struct ParamDecl {
  std::string name;
  ColumnType type = ColumnType::Int;

  friend bool operator==(const ParamDecl&, const ParamDecl&) = default;
};

class PolicyBundle {
 public:
  PolicyBundle() = default;
  /// Builds and validates; view and containment SQL is parsed here.
  PolicyBundle(Schema schema, std::vector<ParamDecl> context, std::vector<std::pair<std::string, std::string>> views,
               std::vector<ForeignKey> foreign_keys,
               std::vector<std::pair<std::string, std::string>> containments = {});

  const Schema& schema() const { return schema_; }
  const std::vector<View>& views() const { return views_; }
  const std::vector<ParamDecl>& context_decl() const { return context_; }
  const std::vector<ForeignKey>& foreign_keys() const { return foreign_keys_; }
  const std::vector<Containment>& containments() const { return containments_; }
  /// Keys, foreign keys and containments together.
  const std::vector<Constraint>& constraints() const { return constraints_; }

  std::optional<ColumnType> param_type(const std::string& name) const;
  sql::ResolveEnv resolve_env() const;

  /// Parses an application query (positional placeholders only) and
  /// normalizes it to a basic query.
  sql::RewriteResult parse_query(const std::string& sql, const std::vector<Value>& params = {}) const;
  /// Parses a closed or ?Name-parameterized query that must already be basic.
  BasicQuery parse_basic(const std::string& sql) const;

  friend bool operator==(const PolicyBundle& a, const PolicyBundle& b);

 private:
  Schema schema_;
  std::vector<ParamDecl> context_;
  std::vector<View> views_;
  std::vector<ForeignKey> foreign_keys_;
  std::vector<Containment> containments_;
  std::vector<std::pair<std::string, std::string>> containment_sql_;
  std::vector<Constraint> constraints_;

  friend nlohmann::json dump_policy_json(const PolicyBundle& p);
};

PolicyBundle load_policy(const std::filesystem::path& path);
PolicyBundle policy_from_json(const nlohmann::json& j);
nlohmann::json dump_policy_json(const PolicyBundle& p);

/// V^ctx: every context parameter replaced by its bound value.
BasicQuery instantiate_view(const View& view, const RequestContext& ctx);
BasicQuery instantiate(const BasicQuery& q, const RequestContext& ctx);

/// Checks that every declared parameter (NOW included) is bound with the
/// declared type.  Throws UnboundParameter.
void validate_context(const PolicyBundle& policy, const RequestContext& ctx);

RequestContext context_from_json(const nlohmann::json& j, const PolicyBundle& policy);

}  // namespace viewguard
