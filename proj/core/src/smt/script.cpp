#include "viewguard/smt/script.hpp"

#include <algorithm>
#include <sstream>

namespace viewguard::smt {

std::vector<std::string> SmtScript::labels() const {
  std::vector<std::string> out;
  out.reserve(labeled.size());
  for (const auto& l : labeled) out.push_back(l.label);
  return out;
}

bool SmtScript::has_label(const std::string& label) const {
  return std::any_of(labeled.begin(), labeled.end(), [&](const Labeled& l) { return l.label == label; });
}

SmtScript SmtScript::restricted_to(const std::set<std::string>& keep) const {
  SmtScript out = *this;
  out.labeled.clear();
  for (const auto& l : labeled)
    if (keep.count(l.label)) out.labeled.push_back(l);
  return out;
}

std::string SmtScript::render() const {
  std::ostringstream out;
  if (want_core) out << "(set-option :produce-unsat-cores true)\n";
  out << "(set-logic " << logic << ")\n";
  for (const auto& d : declarations) out << d << "\n";
  for (const auto& a : assertions) out << "(assert " << a << ")\n";
  for (const auto& l : labeled) out << "(assert (! " << l.formula << " :named " << l.label << "))\n";
  out << "(check-sat)\n";
  if (want_core) out << "(get-unsat-core)\n";
  out << "(exit)\n";
  return out.str();
}

}  // namespace viewguard::smt
