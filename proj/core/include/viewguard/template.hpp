#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "viewguard/atom.hpp"
#include "viewguard/policy.hpp"
#include "viewguard/smt/encoder.hpp"
#include "viewguard/solver.hpp"
#include "viewguard/trace.hpp"

namespace viewguard {

/// Values of template variables (by id) and context parameters (by name).
struct Valuation {
  std::map<int, Value> vars;
  std::map<std::string, Value> ctx;

  Value of(const Term& t) const;
  bool binds(const Term& t) const;
  friend bool operator==(const Valuation&, const Valuation&) = default;
};

/// (Q_D, T_D, Φ_D): whenever a query and trace match under a context, the
/// query is strongly compliant.
struct DecisionTemplate {
  BasicQuery query;
  std::vector<smt::Premise> premises;
  std::vector<Atom> condition;
  bool verified = false;

  std::string signature() const { return shape_signature(query); }
  friend bool operator==(const DecisionTemplate& a, const DecisionTemplate& b) {
    return a.query == b.query && a.premises == b.premises && a.condition == b.condition;
  }
};

/// Renumbers variables by first occurrence (premises, then the query).
DecisionTemplate canonicalize(const DecisionTemplate& t);

/// Soundness script; unsat means the template is sound.  `bounds` selects
/// the conditional-table encoding.
smt::SmtScript encode_template_soundness(const DecisionTemplate& t, const PolicyBundle& policy,
                                         const std::optional<smt::BoundsMap>& bounds = std::nullopt);

struct Parameterized {
  BasicQuery query;
  std::vector<smt::Premise> premises;
  Valuation nu;
};

/// Every constant becomes a fresh variable; a returned column pinned by a
/// top-level `column = constant` conjunct reuses that constant's variable.
Parameterized parameterize(const BasicQuery& q, const Trace& sub_trace);

/// Context parameters referenced by some view, in name order.
std::vector<ContextParam> policy_parameters(const PolicyBundle& policy);

/// x = v, x IS NULL, x = x', x < x' over the context parameters and the
/// variables of `nu`, in that family order.
std::vector<Atom> candidate_atoms(const Valuation& nu, const std::vector<ContextParam>& params);

/// Atoms of `all` implied by the conjunction of `core`, by congruence and
/// strict-order closure.
std::vector<Atom> augment(const std::vector<Atom>& core, const std::vector<Atom>& all);
bool implies(const std::vector<Atom>& premises, const Atom& goal);

struct TemplateSettings {
  std::vector<SolverConfig> solvers = default_solvers();
  std::chrono::milliseconds budget{10000};
  std::chrono::milliseconds window{250};
  std::size_t max_search_atoms = 24;
  int bound_retries = 3;
};

/// Intermediate results, kept for reporting.
struct TemplateReport {
  std::vector<std::size_t> minimal_trace;  // indices into the input trace
  Parameterized parameterized;
  std::vector<Atom> candidates;
  std::vector<Atom> core;
  std::vector<Atom> augmented;
  std::vector<Atom> smallest;
  DecisionTemplate unfolded;
  DecisionTemplate result;
  smt::BoundsMap bounds;
  int solver_calls = 0;
};

/// Subset-minimal sub-trace preserving strong compliance, seeded by the
/// solver's core.  Throws SolverIndecision.
std::vector<std::size_t> minimize_trace(const BasicQuery& q, const Trace& trace, const PolicyBundle& policy,
                                        const RequestContext& ctx, const TemplateSettings& settings,
                                        int* solver_calls = nullptr);

/// Full generalization pipeline for a query already proved strongly
/// compliant.  Throws NoTemplate.
DecisionTemplate generate_template(const BasicQuery& q, const Trace& trace, const RequestContext& ctx,
                                   const PolicyBundle& policy, const TemplateSettings& settings,
                                   TemplateReport* report = nullptr);

/// SQL text with ?Name for context parameters, ?k for variables and * for
/// variables that occur once and are unconstrained.
std::string render_template_sql(const Schema& schema, const DecisionTemplate& t, const BasicQuery& q);
/// Premise / separator / conclusion listing.
std::string render_template(const Schema& schema, const DecisionTemplate& t);

nlohmann::json template_to_json(const Schema& schema, const DecisionTemplate& t);
DecisionTemplate template_from_json(const nlohmann::json& j, const PolicyBundle& policy);

/// Query, trace and condition match the template under `ctx`; returns the
/// witnessing valuation.
std::optional<Valuation> match_template(const DecisionTemplate& t, const BasicQuery& q, const Trace& trace,
                                        const RequestContext& ctx);

}  // namespace viewguard
