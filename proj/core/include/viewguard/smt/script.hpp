#pragma once

#include <set>
#include <string>
#include <vector>

namespace viewguard::smt {

/// A complete solver input in SMT-LIB 2.6 text form.  Declarations and
/// unlabeled assertions are kept verbatim; labeled assertions carry a
/// `:named` annotation so that they can appear in unsat cores.
class SmtScript {
 public:
  struct Labeled {
    std::string label;
    std::string formula;
  };

  std::string logic = "UF";
  std::vector<std::string> declarations;
  std::vector<std::string> assertions;
  std::vector<Labeled> labeled;
  bool want_core = true;

  std::vector<std::string> labels() const;
  bool has_label(const std::string& label) const;

  /// Same script keeping only the labeled assertions in `keep`.
  SmtScript restricted_to(const std::set<std::string>& keep) const;

  std::string render() const;
};

}  // namespace viewguard::smt
