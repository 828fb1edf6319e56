#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "viewguard/query.hpp"
#include "viewguard/schema.hpp"

namespace viewguard {

/// Primary key or unique key of one table.
struct KeyConstraint {
  std::size_t table = 0;
  std::vector<std::size_t> columns;
  bool primary = false;

  friend bool operator==(const KeyConstraint&, const KeyConstraint&) = default;
};

struct ForeignKey {
  std::size_t from_table = 0;
  std::vector<std::size_t> from_columns;
  std::size_t to_table = 0;
  std::vector<std::size_t> to_columns;

  friend bool operator==(const ForeignKey&, const ForeignKey&) = default;
};

struct Containment {
  BasicQuery lhs;
  BasicQuery rhs;

  friend bool operator==(const Containment&, const Containment&) = default;
};

using Constraint = std::variant<KeyConstraint, ForeignKey, Containment>;

/// Every constraint as lhs ⊆ rhs over set semantics.
std::pair<BasicQuery, BasicQuery> containment_form(const Schema& schema, const Constraint& c);

/// Key constraints derived from the table definitions.
std::vector<Constraint> key_constraints(const Schema& schema);

}  // namespace viewguard
