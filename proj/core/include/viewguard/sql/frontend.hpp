#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "viewguard/query.hpp"
#include "viewguard/schema.hpp"
#include "viewguard/sql/ast.hpp"

namespace viewguard {

struct ForeignKey;

namespace sql {

/// What names may appear besides columns while resolving a query.
struct ResolveEnv {
  std::map<std::string, ColumnType> context;  // declared ?Name parameters
  const std::vector<ForeignKey>* foreign_keys = nullptr;
  /// Template variables met during resolution get their types recorded
  /// here; wildcards take fresh ids from `wildcard_counter`.
  std::map<int, ColumnType>* variable_types = nullptr;
  int* wildcard_counter = nullptr;
};

struct NotBasic {
  std::string reason;
};

struct RewriteResult {
  BasicQuery query;
  bool exact = true;
  bool limit_dropped = false;
  /// Columns appended to the projection (ORDER BY, aggregate keys); the
  /// original output is not a prefix of the rewritten one when this is set.
  std::size_t extra_columns = 0;
  /// The rewritten query's output differs from the original's row shape.
  bool output_changed = false;
  std::vector<std::string> rules;
};

std::variant<BasicQuery, NotBasic> classify_basic(const Query& ast, const Schema& schema, const ResolveEnv& env = {});

/// Applies the rewrite rules in their fixed order and re-certifies.
/// Throws UnsupportedFeature when the result cannot be certified.
RewriteResult rewrite_to_basic(const Query& ast, const Schema& schema, const ResolveEnv& env = {});

/// classify_basic, falling back to rewrite_to_basic.
RewriteResult to_basic(const Query& ast, const Schema& schema, const ResolveEnv& env = {});

/// Splits a top-level `c IN (x1..xn)` conjunct into n equality queries.
/// Throws NotSplittable.
std::vector<BasicQuery> split_in(const BasicQuery& q);

}  // namespace sql
}  // namespace viewguard
