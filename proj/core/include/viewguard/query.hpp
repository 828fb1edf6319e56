#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "viewguard/schema.hpp"
#include "viewguard/value.hpp"

namespace viewguard {

/// Column `col` of the `rel`-th relation occurrence in a select block.
struct ColumnRef {
  std::uint32_t rel = 0;
  std::uint32_t col = 0;

  friend bool operator==(const ColumnRef&, const ColumnRef&) = default;
  friend auto operator<=>(const ColumnRef&, const ColumnRef&) = default;
};

struct ContextParam {
  std::string name;
  ColumnType type = ColumnType::Int;

  friend bool operator==(const ContextParam&, const ContextParam&) = default;
  friend auto operator<=>(const ContextParam&, const ContextParam&) = default;
};

/// Template variable (x_k).
struct Variable {
  int id = 0;
  ColumnType type = ColumnType::Int;

  friend bool operator==(const Variable&, const Variable&) = default;
  friend auto operator<=>(const Variable&, const Variable&) = default;
};

using Term = std::variant<ColumnRef, Value, ContextParam, Variable>;

inline bool is_column(const Term& t) { return std::holds_alternative<ColumnRef>(t); }
inline bool is_symbolic(const Term& t) {
  return std::holds_alternative<ContextParam>(t) || std::holds_alternative<Variable>(t);
}

enum class CmpOp : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge };

std::string_view to_string(CmpOp op);
CmpOp flip(CmpOp op);  // a op b  <=>  b flip(op) a

struct Predicate {
  enum class Kind : std::uint8_t { True, False, And, Or, Cmp, In, NotIn, IsNull, IsNotNull };

  Kind kind = Kind::True;
  CmpOp op = CmpOp::Eq;
  /// Cmp: [lhs, rhs]; In/NotIn: [subject, item...]; IsNull/IsNotNull: [subject].
  std::vector<Term> terms;
  std::vector<Predicate> children;

  static Predicate truth();
  static Predicate falsity();
  static Predicate cmp(CmpOp op, Term a, Term b);
  static Predicate in(Term subject, std::vector<Term> items, bool negated = false);
  static Predicate is_null(Term subject, bool negated = false);
  /// Flattening, unit-simplifying conjunction / disjunction.
  static Predicate conj(std::vector<Predicate> parts);
  static Predicate disj(std::vector<Predicate> parts);

  bool is_true() const { return kind == Kind::True; }
  bool is_false() const { return kind == Kind::False; }

  /// Top-level conjuncts (the predicate itself when it is not an And).
  std::vector<const Predicate*> conjuncts() const;

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

struct Relation {
  std::size_t table = 0;
  std::string alias;

  /// Aliases are cosmetic.
  friend bool operator==(const Relation& a, const Relation& b) { return a.table == b.table; }
};

struct SelectBlock {
  std::vector<Relation> relations;
  std::vector<ColumnRef> projection;
  Predicate where;

  friend bool operator==(const SelectBlock&, const SelectBlock&) = default;
};

enum class Certificate : std::uint8_t { Distinct, Limit1, ProjectsKeys, KeyConstrainedWhere, UnionDedup };

std::string_view to_string(Certificate c);

/// A select block, or a union of select blocks, certified duplicate-free.
struct BasicQuery {
  std::vector<SelectBlock> blocks;
  Certificate certificate = Certificate::Distinct;

  std::size_t arity() const { return blocks.empty() ? 0 : blocks.front().projection.size(); }
  bool is_union() const { return blocks.size() > 1; }

  friend bool operator==(const BasicQuery&, const BasicQuery&) = default;
};

ColumnType column_type(const Schema& schema, const SelectBlock& block, ColumnRef ref);
const Column& column_def(const Schema& schema, const SelectBlock& block, ColumnRef ref);
ColumnType term_type(const Schema& schema, const SelectBlock& block, const Term& t);
std::vector<ColumnType> output_types(const Schema& schema, const BasicQuery& q);
std::vector<std::string> output_names(const Schema& schema, const BasicQuery& q);

/// Tables referenced anywhere in the query.
std::set<std::size_t> tables_of(const BasicQuery& q);

/// Non-column leaf terms in canonical traversal order (block by block,
/// predicate pre-order, left to right).
std::vector<const Term*> leaf_terms(const BasicQuery& q);
void for_each_leaf(BasicQuery& q, const std::function<void(Term&)>& fn);
void for_each_leaf(Predicate& p, const std::function<void(Term&)>& fn);
void for_each_leaf(const Predicate& p, const std::function<void(const Term&)>& fn);

/// Replace every non-column leaf by fn(leaf).
BasicQuery map_leaves(const BasicQuery& q, const std::function<Term(const Term&)>& fn);

bool is_closed(const BasicQuery& q);
bool uses_order(const Predicate& p);

/// Query shape with every non-column leaf erased.  Two queries that differ
/// only in constants, parameters or variables share a signature.
std::string shape_signature(const BasicQuery& q);

using TermRenderer = std::function<std::string(const Term&)>;
std::string render_term_default(const Term& t);
std::string render_sql(const Schema& schema, const BasicQuery& q, const TermRenderer& render = render_term_default);

}  // namespace viewguard
