#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "viewguard/engine.hpp"
#include "viewguard/oracle.hpp"
#include "viewguard/policy.hpp"
#include "viewguard/trace.hpp"

namespace viewguard::testing {

std::filesystem::path data_path(const std::string& name);

std::shared_ptr<const PolicyBundle> calendar_policy();
std::shared_ptr<const PolicyBundle> products_policy();

/// The default solver can be started.
bool solver_available();

RequestContext ctx_of(const PolicyBundle& policy, const nlohmann::json& j);

/// One observation per (sql, rows) pair, parsed against the policy.
std::vector<Observation> observe(const PolicyBundle& policy,
                                 const std::vector<std::pair<std::string, std::vector<Tuple>>>& entries);

Tuple row(std::initializer_list<Value> values);
Value I(std::int64_t v);
Value S(std::string v);

/// Strong-compliance verdict of the default solver: Unsat means compliant.
SolverOutcome solver_verdict(const PolicyBundle& policy, const RequestContext& ctx, const Trace& trace,
                             const BasicQuery& q);

/// A randomly generated tiny compliance question.
struct Instance {
  std::shared_ptr<const PolicyBundle> policy;
  RequestContext ctx;
  std::vector<Observation> trace;
  BasicQuery query;
  std::string query_sql;
  Database source;  // the database the trace was read from

  std::string describe() const;
};

class InstanceGenerator {
 public:
  explicit InstanceGenerator(std::uint32_t seed) : rng_(seed) {}

  Instance next();
  std::mt19937& rng() { return rng_; }

 private:
  std::shared_ptr<const PolicyBundle> random_policy();
  std::string random_query(const PolicyBundle& policy, bool allow_param);
  std::string constant(ColumnType t);

  std::mt19937 rng_;
};

/// Uniformly filled database satisfying the policy's constraints; falls
/// back to the empty database.
Database random_database(const Schema& schema, const std::vector<Constraint>& constraints, const DomainSpec& dom,
                         std::mt19937& rng);

DomainSpec tiny_domain(const std::vector<BasicQuery>& queries, const std::vector<Observation>& trace,
                       const RequestContext* ctx, std::size_t per_type = 3, int rows = 2);

/// As above, also drawing constants from the policy's view definitions.
DomainSpec tiny_domain(const PolicyBundle& policy, std::vector<BasicQuery> queries,
                       const std::vector<Observation>& trace, const RequestContext* ctx, std::size_t per_type = 3,
                       int rows = 2);

/// Rows of `sql` run by SQLite over a copy of `d`, coerced to `types`, as a
/// sorted list (duplicates kept).
std::vector<Tuple> sqlite_rows(const Schema& schema, const Database& d, const std::string& sql,
                               const std::vector<ColumnType>& types);

std::vector<Tuple> sorted_set(std::vector<Tuple> rows);

/// How the rewritten query's result relates to the original's.
enum class RewriteCheck {
  Equal,       // same set of rows
  Projection,  // original = first columns of the rewritten rows
  Sum,         // SUM of the original = column sum of the rewritten rows
  Prefix,      // every row of the limited original appears in the rewritten result
};

struct RewriteCase {
  std::string rule;
  std::string sql;
  RewriteCheck check = RewriteCheck::Equal;
};

/// Calendar schema plus a foreign key Attendances.EId -> Events.EId.
std::shared_ptr<const PolicyBundle> calendar_with_fk();
std::vector<RewriteCase> rewrite_cases();

/// Compares SQLite on the original text with evaluation of the rewritten
/// basic query on `databases` random instances.  Empty on success.
std::string check_rewrite(const PolicyBundle& policy, const RewriteCase& c, int databases, std::uint32_t seed);

}  // namespace viewguard::testing
