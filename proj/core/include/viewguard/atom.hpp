#pragma once

#include <functional>
#include <string>
#include <vector>

#include "viewguard/query.hpp"

namespace viewguard {

/// Condition atom over template variables and context parameters:
/// x = v, x IS NULL, x = x', x < x'.
struct Atom {
  enum class Kind : std::uint8_t { Eq, IsNull, EqVars, Lt };

  Kind kind = Kind::Eq;
  Term lhs;  // Variable or ContextParam
  Term rhs;  // Value for Eq, unused for IsNull, Variable/ContextParam otherwise

  static Atom eq(Term x, Value v) { return {Kind::Eq, std::move(x), std::move(v)}; }
  static Atom is_null(Term x) { return {Kind::IsNull, std::move(x), Value{}}; }
  static Atom eq_vars(Term x, Term y) { return {Kind::EqVars, std::move(x), std::move(y)}; }
  static Atom lt(Term x, Term y) { return {Kind::Lt, std::move(x), std::move(y)}; }

  friend bool operator==(const Atom&, const Atom&) = default;
  friend auto operator<=>(const Atom& a, const Atom& b) {
    if (auto c = a.kind <=> b.kind; c != 0) return c;
    if (auto c = a.lhs <=> b.lhs; c != 0) return c;
    return a.rhs <=> b.rhs;
  }
};

std::string term_name(const Term& t);  // MyUId, x0, 42, "abc"
std::string to_string(const Atom& a);

/// Evaluates an atom under a total binding of its symbols.
bool holds(const Atom& a, const std::function<Value(const Term&)>& value_of);

}  // namespace viewguard
