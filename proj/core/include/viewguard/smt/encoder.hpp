#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "viewguard/atom.hpp"
#include "viewguard/constraints.hpp"
#include "viewguard/policy.hpp"
#include "viewguard/query.hpp"
#include "viewguard/smt/script.hpp"
#include "viewguard/trace.hpp"

namespace viewguard::smt {

/// Rows per table for conditional-table encodings; absent tables get 0.
using BoundsMap = std::map<std::size_t, int>;

/// A recorded row as terms: constants, or template variables.
struct Premise {
  BasicQuery query;
  std::vector<Term> tuple;

  friend bool operator==(const Premise&, const Premise&) = default;
};

/// Everything a compliance script states: view containment between two
/// databases, premises on the first, an optional condition, and the
/// negated conclusion Q(D1) ⊄ Q(D2).
struct Problem {
  std::vector<BasicQuery> views;  // may mention context parameters
  std::vector<Premise> premises;  // labeled LQ_1.. when label_premises
  std::vector<Atom> atoms;        // labeled LC_1.. when label_atoms
  BasicQuery query;
  bool label_premises = true;
  bool label_atoms = true;
};

/// Renders `p` against `schema` and `constraints`.  With `bounds`, every
/// table becomes a conditional table of that many rows and the script is
/// quantifier-free; otherwise relations are uninterpreted predicates.
SmtScript encode(const Schema& schema, const std::vector<Constraint>& constraints, const Problem& p,
                 const std::optional<BoundsMap>& bounds = std::nullopt);

/// The formula Q^D(tuple) alone, for inspection and tests.
std::string encode_query(const Schema& schema, const BasicQuery& q, const std::string& db,
                         const std::vector<std::string>& tuple, const std::optional<BoundsMap>& bounds = std::nullopt);

std::string trace_label(std::size_t i);  // LQ_{i+1}
std::string atom_label(std::size_t i);   // LC_{i+1}
/// Index of a label produced by the functions above, or -1.
int label_index(const std::string& label, char family);

std::vector<Premise> premises_of(const Trace& trace);

SmtScript encode_strong_compliance(const PolicyBundle& policy, const RequestContext& ctx, const Trace& trace,
                                   const BasicQuery& q);
SmtScript encode_bounded(const PolicyBundle& policy, const RequestContext& ctx, const Trace& trace,
                         const BasicQuery& q, const BoundsMap& bounds);

/// Tables whose contents can influence the decision: those read by the
/// premises or the query, closed under constraints whose left side reads a
/// relevant table.  Each relevant table gets the number of rows the
/// premises need plus one; irrelevant tables get zero.
BoundsMap choose_bounds(const Schema& schema, const std::vector<Constraint>& constraints,
                        const std::vector<Premise>& premises, const BasicQuery& q);

}  // namespace viewguard::smt
