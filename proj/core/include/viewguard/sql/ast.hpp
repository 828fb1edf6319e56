#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "viewguard/query.hpp"
#include "viewguard/value.hpp"

namespace viewguard::sql {

struct ColumnName {
  std::string qualifier;  // empty when unqualified
  std::string name;
};

struct ParamName {
  std::string name;
};

/// ?k in template text; index -1 stands for a `*` wildcard.
struct VarName {
  int index = -1;
};

using Operand = std::variant<ColumnName, Value, ParamName, VarName>;

struct Query;

struct Condition {
  enum class Kind : std::uint8_t { True, False, And, Or, Cmp, In, NotIn, InSubquery, IsNull, IsNotNull };

  Kind kind = Kind::True;
  CmpOp op = CmpOp::Eq;
  std::vector<Operand> operands;
  std::vector<Condition> children;
  std::shared_ptr<Query> subquery;
};

struct SelectItem {
  enum class Kind : std::uint8_t { Star, TableStar, Column, Sum };
  Kind kind = Kind::Star;
  std::string qualifier;  // TableStar
  ColumnName column;      // Column, Sum
};

struct TableRef {
  enum class Join : std::uint8_t { Comma, Inner, Left };
  Join join = Join::Comma;
  std::string table;
  std::string alias;
  std::optional<Condition> on;
};

struct Select {
  bool distinct = false;
  std::vector<SelectItem> items;
  std::vector<TableRef> from;
  std::optional<Condition> where;
};

struct Query {
  std::vector<Select> selects;  // more than one: UNION
  std::vector<ColumnName> order_by;
  std::optional<std::int64_t> limit;
};

struct ParseOptions {
  /// `col IN (SELECT ...)`; only view definitions may use it.
  bool allow_in_subquery = false;
  /// `?k` template variables and `*` wildcards as operands.
  bool template_syntax = false;
};

/// Parses the supported subset and substitutes positional `?` placeholders
/// with `params` in order of appearance.
Query parse(std::string_view sql, const std::vector<Value>& params = {}, const ParseOptions& opts = {});

}  // namespace viewguard::sql
