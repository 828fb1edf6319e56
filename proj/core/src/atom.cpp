#include "viewguard/atom.hpp"

namespace viewguard {

std::string term_name(const Term& t) {
  if (const auto* c = std::get_if<ContextParam>(&t)) return c->name;
  if (const auto* x = std::get_if<Variable>(&t)) return "x" + std::to_string(x->id);
  if (const auto* v = std::get_if<Value>(&t)) return v->to_display();
  return "?";
}

std::string to_string(const Atom& a) {
  switch (a.kind) {
    case Atom::Kind::Eq:
    case Atom::Kind::EqVars: return term_name(a.lhs) + " = " + term_name(a.rhs);
    case Atom::Kind::IsNull: return term_name(a.lhs) + " IS NULL";
    case Atom::Kind::Lt: return term_name(a.lhs) + " < " + term_name(a.rhs);
  }
  return "?";
}

bool holds(const Atom& a, const std::function<Value(const Term&)>& value_of) {
  Value x = value_of(a.lhs);
  switch (a.kind) {
    case Atom::Kind::IsNull: return x.is_null();
    case Atom::Kind::Eq: {
      const auto& v = std::get<Value>(a.rhs);
      return !x.is_null() && !v.is_null() && x.type() == v.type() && x == v;
    }
    case Atom::Kind::EqVars: {
      Value y = value_of(a.rhs);
      return !x.is_null() && !y.is_null() && x == y;
    }
    case Atom::Kind::Lt: {
      Value y = value_of(a.rhs);
      return !x.is_null() && !y.is_null() && x.type() == y.type() && x.sql_less(y);
    }
  }
  return false;
}

}  // namespace viewguard
