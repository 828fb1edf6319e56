#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "viewguard/constraints.hpp"
#include "viewguard/policy.hpp"
#include "viewguard/query.hpp"
#include "viewguard/trace.hpp"

namespace viewguard {

/// A concrete instance: one duplicate-free, sorted row list per table.
class Database {
 public:
  Database() = default;
  explicit Database(std::size_t tables) : tables_(tables) {}

  std::size_t table_count() const { return tables_.size(); }
  const std::vector<Tuple>& rows(std::size_t t) const { return tables_.at(t); }
  void set_rows(std::size_t t, std::vector<Tuple> rows);
  void insert(std::size_t t, Tuple row);

  nlohmann::json to_json(const Schema& schema) const;
  std::string to_string(const Schema& schema) const;

  friend bool operator==(const Database&, const Database&) = default;

 private:
  std::vector<std::vector<Tuple>> tables_;
};

using ResultSet = std::vector<Tuple>;  // sorted, duplicate-free

/// Set semantics under two-valued NULL logic.
ResultSet evaluate(const BasicQuery& q, const Database& d);
/// Bag semantics: one output row per satisfying row combination.
std::vector<Tuple> evaluate_bag(const BasicQuery& q, const Database& d);
bool satisfies(const Predicate& p, const std::vector<const Tuple*>& rows);

bool conforms(const Schema& schema, const Database& d);
bool check_constraints(const Schema& schema, const std::vector<Constraint>& constraints, const Database& d);

struct DomainSpec {
  std::map<ColumnType, std::vector<Value>> pools;
  int max_rows = 2;
  std::map<std::size_t, int> rows_per_table;  // overrides max_rows
  /// Enumeration is refused (Exhausted) beyond this many databases.
  std::uint64_t max_databases = 40'000'000;

  int rows_for(std::size_t table) const;
  /// Pools made of the given constants plus one value just below and one
  /// just above the ordered constants, padded with fresh values up to
  /// `per_type` entries per type.
  static DomainSpec with_constants(const std::vector<Value>& constants, std::size_t per_type = 3, int max_rows = 2);
};

/// Constants occurring in queries, tuples and the context.
std::vector<Value> collect_constants(const std::vector<BasicQuery>& queries, const std::vector<Tuple>& tuples,
                                     const RequestContext* ctx = nullptr);

enum class OracleMode { Compliance, Strong };

struct OracleVerdict {
  enum class Kind { Compliant, NonCompliant, Exhausted };
  Kind kind = Kind::Compliant;
  std::optional<Database> d1;
  std::optional<Database> d2;
  std::uint64_t databases = 0;
  std::string note;

  bool compliant() const { return kind == Kind::Compliant; }
  bool noncompliant() const { return kind == Kind::NonCompliant; }
};

std::string_view to_string(OracleVerdict::Kind k);

/// Brute-force decision over every constraint-satisfying database pair in
/// `dom`.  `views` must already be instantiated (closed).
OracleVerdict oracle_decide(OracleMode mode, const BasicQuery& q, const std::vector<Observation>& trace,
                            const Schema& schema, const std::vector<Constraint>& constraints,
                            const std::vector<BasicQuery>& views, const DomainSpec& dom);

OracleVerdict oracle_decide(OracleMode mode, const BasicQuery& q, const std::vector<Observation>& trace,
                            const PolicyBundle& policy, const RequestContext& ctx, const DomainSpec& dom);

/// Some constraint-satisfying database yields every recorded row.
/// nullopt when the enumeration cap was hit.
std::optional<bool> trace_feasible(const std::vector<Observation>& trace, const Schema& schema,
                                   const std::vector<Constraint>& constraints, const DomainSpec& dom);

/// Every database over `dom` that satisfies the constraints; used by
/// tests that need to range over instances.  Returns nullopt beyond the cap.
std::optional<std::vector<Database>> enumerate_databases(const Schema& schema,
                                                         const std::vector<Constraint>& constraints,
                                                         const DomainSpec& dom,
                                                         const std::vector<std::size_t>& tables);

}  // namespace viewguard
