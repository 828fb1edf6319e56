#include "viewguard/template.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "viewguard/errors.hpp"
#include "viewguard/sql/ast.hpp"

namespace viewguard {

Value Valuation::of(const Term& t) const {
  if (const auto* v = std::get_if<Value>(&t)) return *v;
  if (const auto* x = std::get_if<Variable>(&t)) return vars.at(x->id);
  if (const auto* c = std::get_if<ContextParam>(&t)) return ctx.at(c->name);
  throw Error("column reference has no value");
}

bool Valuation::binds(const Term& t) const {
  if (std::holds_alternative<Value>(t)) return true;
  if (const auto* x = std::get_if<Variable>(&t)) return vars.count(x->id) > 0;
  if (const auto* c = std::get_if<ContextParam>(&t)) return ctx.count(c->name) > 0;
  return false;
}

namespace {

using TermFn = std::function<Term(const Term&)>;

Atom map_atom(const Atom& a, const TermFn& fn) {
  Atom r = a;
  r.lhs = fn(a.lhs);
  if (a.kind == Atom::Kind::EqVars || a.kind == Atom::Kind::Lt) r.rhs = fn(a.rhs);
  if (r.kind == Atom::Kind::EqVars && r.rhs < r.lhs) std::swap(r.lhs, r.rhs);
  return r;
}

DecisionTemplate map_template(const DecisionTemplate& t, const TermFn& fn) {
  DecisionTemplate r;
  r.verified = t.verified;
  for (const auto& p : t.premises) {
    smt::Premise np{map_leaves(p.query, fn), {}};
    for (const auto& x : p.tuple) np.tuple.push_back(fn(x));
    r.premises.push_back(std::move(np));
  }
  r.query = map_leaves(t.query, fn);
  for (const auto& a : t.condition) r.condition.push_back(map_atom(a, fn));
  return r;
}

// Visits every symbolic or constant term of the template in canonical order.
void visit_terms(const DecisionTemplate& t, const std::function<void(const Term&)>& fn) {
  for (const auto& p : t.premises) {
    for (const Term* leaf : leaf_terms(p.query)) fn(*leaf);
    for (const auto& x : p.tuple) fn(x);
  }
  for (const Term* leaf : leaf_terms(t.query)) fn(*leaf);
  for (const auto& a : t.condition) {
    fn(a.lhs);
    if (a.kind == Atom::Kind::EqVars || a.kind == Atom::Kind::Lt) fn(a.rhs);
  }
}

int rank(const Atom& a) {
  bool ctx_lhs = std::holds_alternative<ContextParam>(a.lhs);
  switch (a.kind) {
    case Atom::Kind::Eq: return ctx_lhs ? 0 : 2;
    case Atom::Kind::EqVars: return 1;
    case Atom::Kind::IsNull: return 3;
    case Atom::Kind::Lt: return 4;
  }
  return 5;
}

struct Closure {
  std::map<Term, int> node;
  std::vector<int> parent;
  std::vector<std::pair<int, int>> less;
  std::set<int> nulls;
  bool contradictory = false;

  int id(const Term& t) {
    auto [it, fresh] = node.try_emplace(t, static_cast<int>(parent.size()));
    if (fresh) parent.push_back(it->second);
    return it->second;
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }

  explicit Closure(const std::vector<Atom>& atoms) {
    for (const auto& a : atoms) {
      switch (a.kind) {
        case Atom::Kind::Eq: unite(id(a.lhs), id(a.rhs)); break;
        case Atom::Kind::EqVars: unite(id(a.lhs), id(a.rhs)); break;
        case Atom::Kind::IsNull: nulls.insert(id(a.lhs)); break;
        case Atom::Kind::Lt: less.emplace_back(id(a.lhs), id(a.rhs)); break;
      }
    }
  }

  // Goal terms must be registered before the closure is queried.
  void prepare(const Atom& goal) {
    id(goal.lhs);
    if (goal.kind != Atom::Kind::IsNull) id(goal.rhs);
  }

  std::map<int, std::vector<int>> edges() {
    std::map<int, std::vector<int>> g;
    for (auto [a, b] : less) g[find(a)].push_back(find(b));
    std::vector<std::pair<Value, int>> constants;
    for (const auto& [t, n] : node)
      if (const auto* v = std::get_if<Value>(&t); v && !v->is_null()) constants.emplace_back(*v, find(n));
    for (const auto& [v1, c1] : constants)
      for (const auto& [v2, c2] : constants)
        if (v1.type() == v2.type() && v1.sql_less(v2)) g[c1].push_back(c2);
    return g;
  }

  bool reaches(int from, int to) {
    auto g = edges();
    std::set<int> seen;
    std::vector<int> stack{from};
    while (!stack.empty()) {
      int x = stack.back();
      stack.pop_back();
      for (int y : g[x]) {
        if (y == to) return true;
        if (seen.insert(y).second) stack.push_back(y);
      }
    }
    return false;
  }

  bool derives(const Atom& goal) {
    switch (goal.kind) {
      case Atom::Kind::IsNull: {
        int c = find(id(goal.lhs));
        for (int n : nulls)
          if (find(n) == c) return true;
        return false;
      }
      case Atom::Kind::Eq:
      case Atom::Kind::EqVars: return find(id(goal.lhs)) == find(id(goal.rhs));
      case Atom::Kind::Lt: return reaches(find(id(goal.lhs)), find(id(goal.rhs)));
    }
    return false;
  }
};

Trace subtrace(const Trace& trace, const std::vector<std::size_t>& keep) {
  Trace out;
  for (auto i : keep) out.push_back(trace[i]);
  return out;
}

std::vector<BasicQuery> raw_views(const PolicyBundle& policy) {
  std::vector<BasicQuery> out;
  for (const auto& v : policy.views()) out.push_back(v.query);
  return out;
}

struct Runner {
  const TemplateSettings& settings;
  int* calls;

  SolverOutcome solve(const smt::SmtScript& s) const {
    if (calls) ++*calls;
    return viewguard::solve(s, settings.solvers, settings.budget);
  }
  SolverOutcome core(const smt::SmtScript& s) const {
    if (calls) ++*calls;
    return solve_for_core(s, settings.solvers, settings.budget, settings.window);
  }
};

smt::SmtScript condition_script(const PolicyBundle& policy, const Parameterized& p, const std::vector<Atom>& atoms,
                                bool labeled, const smt::BoundsMap& bounds) {
  smt::Problem prob;
  prob.views = raw_views(policy);
  prob.premises = p.premises;
  prob.atoms = atoms;
  prob.query = p.query;
  prob.label_premises = false;
  prob.label_atoms = labeled;
  return smt::encode(policy.schema(), policy.constraints(), prob, bounds);
}

// Substitutes variables equated by EqVars atoms with a class
// representative: a context parameter when there is one, else the lowest id.
DecisionTemplate fold(const DecisionTemplate& t) {
  std::map<Term, Term> rep;
  std::function<Term(const Term&)> find = [&](const Term& x) -> Term {
    auto it = rep.find(x);
    if (it == rep.end() || it->second == x) return x;
    return find(it->second);
  };
  for (const auto& a : t.condition) {
    if (a.kind != Atom::Kind::EqVars) continue;
    Term x = find(a.lhs), y = find(a.rhs);
    if (x == y) continue;
    // ContextParam sorts before Variable; lower ids sort first.
    if (y < x) std::swap(x, y);
    rep[y] = x;
  }
  auto fn = [&](const Term& x) -> Term { return std::holds_alternative<Variable>(x) ? find(x) : x; };
  DecisionTemplate r = map_template(t, fn);
  std::vector<Atom> kept;
  for (const auto& a : r.condition) {
    if (a.kind == Atom::Kind::EqVars && a.lhs == a.rhs) continue;
    if (std::find(kept.begin(), kept.end(), a) == kept.end()) kept.push_back(a);
  }
  r.condition = std::move(kept);
  return r;
}

DecisionTemplate as_template(const Parameterized& p, const std::vector<Atom>& atoms) {
  DecisionTemplate t;
  t.query = p.query;
  t.premises = p.premises;
  t.condition = atoms;
  return t;
}

bool is_subset(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

DecisionTemplate canonicalize(const DecisionTemplate& t) {
  std::map<int, int> renumber;
  visit_terms(t, [&](const Term& x) {
    if (const auto* v = std::get_if<Variable>(&x)) renumber.try_emplace(v->id, static_cast<int>(renumber.size()));
  });
  DecisionTemplate r = map_template(t, [&](const Term& x) -> Term {
    if (const auto* v = std::get_if<Variable>(&x)) return Variable{renumber.at(v->id), v->type};
    return x;
  });
  std::sort(r.condition.begin(), r.condition.end());
  r.condition.erase(std::unique(r.condition.begin(), r.condition.end()), r.condition.end());
  return r;
}

smt::SmtScript encode_template_soundness(const DecisionTemplate& t, const PolicyBundle& policy,
                                         const std::optional<smt::BoundsMap>& bounds) {
  smt::Problem prob;
  prob.views = raw_views(policy);
  prob.premises = t.premises;
  prob.atoms = t.condition;
  prob.query = t.query;
  prob.label_premises = false;
  prob.label_atoms = false;
  return smt::encode(policy.schema(), policy.constraints(), prob, bounds);
}

Parameterized parameterize(const BasicQuery& q, const Trace& sub_trace) {
  Parameterized out;
  int next = 0;
  auto fresh = [&](const Value& v) -> Term {
    Variable x{next++, v.type()};
    out.nu.vars[x.id] = v;
    return x;
  };
  auto lift = [&](const Term& t) -> Term {
    if (const auto* v = std::get_if<Value>(&t)) return fresh(*v);
    return t;
  };
  for (const auto& e : sub_trace) {
    smt::Premise p{map_leaves(e.query, lift), {}};
    for (std::size_t k = 0; k < e.tuple.size(); ++k) {
      std::optional<Term> reuse;
      if (!p.query.is_union() && !p.query.blocks.empty()) {
        const auto& block = p.query.blocks.front();
        ColumnRef col = block.projection[k];
        for (const Predicate* c : block.where.conjuncts()) {
          if (c->kind != Predicate::Kind::Cmp || c->op != CmpOp::Eq) continue;
          for (int side = 0; side < 2; ++side) {
            const auto* ref = std::get_if<ColumnRef>(&c->terms[side]);
            const auto* var = std::get_if<Variable>(&c->terms[1 - side]);
            if (ref && var && *ref == col && out.nu.vars.at(var->id) == e.tuple[k]) reuse = *var;
          }
          if (reuse) break;
        }
      }
      p.tuple.push_back(reuse ? *reuse : fresh(e.tuple[k]));
    }
    out.premises.push_back(std::move(p));
  }
  out.query = map_leaves(q, lift);
  return out;
}

std::vector<ContextParam> policy_parameters(const PolicyBundle& policy) {
  std::set<ContextParam> found;
  for (const auto& v : policy.views()) {
    for (const Term* t : leaf_terms(v.query))
      if (const auto* c = std::get_if<ContextParam>(t)) found.insert(*c);
  }
  std::vector<ContextParam> out(found.begin(), found.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

std::vector<Atom> candidate_atoms(const Valuation& nu, const std::vector<ContextParam>& params) {
  std::vector<std::pair<Term, Value>> symbols;
  for (const auto& p : params)
    if (auto it = nu.ctx.find(p.name); it != nu.ctx.end()) symbols.emplace_back(p, it->second);
  for (const auto& [id, v] : nu.vars) symbols.emplace_back(Variable{id, v.type()}, v);

  std::vector<Atom> out;
  for (const auto& [s, v] : symbols) out.push_back(v.is_null() ? Atom::is_null(s) : Atom::eq(s, v));
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    for (std::size_t j = i + 1; j < symbols.size(); ++j) {
      const auto& a = symbols[i].second;
      const auto& b = symbols[j].second;
      if (!a.is_null() && !b.is_null() && a.type() == b.type() && a == b)
        out.push_back(Atom::eq_vars(symbols[i].first, symbols[j].first));
    }
  }
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    for (std::size_t j = 0; j < symbols.size(); ++j) {
      const auto& a = symbols[i].second;
      const auto& b = symbols[j].second;
      if (i == j || a.is_null() || b.is_null() || a.type() != b.type() || a.type() == ColumnType::Bool) continue;
      if (a.sql_less(b)) out.push_back(Atom::lt(symbols[i].first, symbols[j].first));
    }
  }
  return out;
}

bool implies(const std::vector<Atom>& premises, const Atom& goal) {
  Closure c(premises);
  c.prepare(goal);
  return c.derives(goal);
}

std::vector<Atom> augment(const std::vector<Atom>& core, const std::vector<Atom>& all) {
  std::vector<Atom> out;
  for (const auto& a : all) {
    if (std::find(core.begin(), core.end(), a) != core.end() || implies(core, a)) out.push_back(a);
  }
  return out;
}

std::vector<std::size_t> minimize_trace(const BasicQuery& q, const Trace& trace, const PolicyBundle& policy,
                                        const RequestContext& ctx, const TemplateSettings& settings,
                                        int* solver_calls) {
  Runner run{settings, solver_calls};
  auto first = run.core(smt::encode_strong_compliance(policy, ctx, trace, q));
  if (!first.unsat()) throw SolverIndecision("query is not provably compliant: " + std::string(to_string(first.kind)));
  std::vector<std::size_t> keep;
  for (const auto& label : first.core) {
    int i = smt::label_index(label, 'Q');
    if (i >= 0) keep.push_back(static_cast<std::size_t>(i));
  }
  std::sort(keep.begin(), keep.end());
  for (std::size_t pos = 0; pos < keep.size();) {
    auto without = keep;
    without.erase(without.begin() + static_cast<std::ptrdiff_t>(pos));
    if (run.solve(smt::encode_strong_compliance(policy, ctx, subtrace(trace, without), q)).unsat()) {
      keep = std::move(without);
    } else {
      ++pos;
    }
  }
  return keep;
}

DecisionTemplate generate_template(const BasicQuery& q, const Trace& trace, const RequestContext& ctx,
                                   const PolicyBundle& policy, const TemplateSettings& settings,
                                   TemplateReport* report) {
  TemplateReport local;
  TemplateReport& rep = report ? *report : local;
  Runner run{settings, &rep.solver_calls};

  rep.minimal_trace = minimize_trace(q, trace, policy, ctx, settings, &rep.solver_calls);
  auto params = policy_parameters(policy);
  rep.parameterized = parameterize(q, subtrace(trace, rep.minimal_trace));
  for (const auto& p : params)
    if (const Value* v = ctx.find(p.name)) rep.parameterized.nu.ctx[p.name] = *v;
  const auto& P = rep.parameterized;
  rep.candidates = candidate_atoms(P.nu, params);
  const auto& C = rep.candidates;

  rep.bounds = smt::choose_bounds(policy.schema(), policy.constraints(), P.premises, P.query);
  for (int attempt = 0; attempt <= settings.bound_retries; ++attempt) {
    if (attempt > 0)
      for (auto& [table, n] : rep.bounds)
        if (n > 0) ++n;
    const auto& bounds = rep.bounds;

    auto first = run.core(condition_script(policy, P, C, true, bounds));
    if (!first.unsat()) continue;

    // Deletion runs over every candidate in rank order so that the result
    // does not depend on which core the solver happened to report.
    std::vector<std::size_t> order(C.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rank(C[a]) < rank(C[b]); });
    std::set<std::size_t> kept(order.begin(), order.end());
    for (auto i : order) {
      auto trial = kept;
      trial.erase(i);
      std::vector<Atom> atoms;
      for (auto j : trial) atoms.push_back(C[j]);
      if (run.solve(condition_script(policy, P, atoms, false, bounds)).unsat()) kept = std::move(trial);
    }
    rep.core.clear();
    for (auto j : kept) rep.core.push_back(C[j]);
    rep.augmented = augment(rep.core, C);

    rep.smallest = rep.core;
    const auto& aug = rep.augmented;
    if (aug.size() <= settings.max_search_atoms) {
      std::vector<std::vector<std::size_t>> unsound;
      bool found = false;
      for (std::size_t size = 0; size <= aug.size() && !found; ++size) {
        std::vector<bool> pick(aug.size(), false);
        std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(size), true);
        do {
          std::vector<std::size_t> subset;
          for (std::size_t i = 0; i < aug.size(); ++i)
            if (pick[i]) subset.push_back(i);
          if (std::any_of(unsound.begin(), unsound.end(), [&](const auto& u) { return is_subset(subset, u); }))
            continue;
          std::vector<Atom> atoms;
          for (auto i : subset) atoms.push_back(aug[i]);
          if (run.solve(condition_script(policy, P, atoms, false, bounds)).unsat()) {
            rep.smallest = atoms;
            found = true;
            break;
          }
          unsound.push_back(subset);
        } while (std::prev_permutation(pick.begin(), pick.end()));
      }
    }

    rep.unfolded = canonicalize(as_template(P, rep.smallest));
    for (const auto& candidate : {canonicalize(fold(rep.unfolded)), rep.unfolded}) {
      if (run.solve(encode_template_soundness(candidate, policy)).unsat()) {
        rep.result = candidate;
        rep.result.verified = true;
        return rep.result;
      }
    }
  }
  throw NoTemplate("no sound template within the bound retries");
}

namespace {

struct Display {
  std::map<int, std::string> names;

  explicit Display(const DecisionTemplate& t) {
    std::map<int, int> count;
    std::set<int> in_condition;
    visit_terms(t, [&](const Term& x) {
      if (const auto* v = std::get_if<Variable>(&x)) ++count[v->id];
    });
    for (const auto& a : t.condition)
      for (const Term* x : {&a.lhs, &a.rhs})
        if (const auto* v = std::get_if<Variable>(x)) in_condition.insert(v->id);
    int next = 0;
    for (const auto& [id, n] : count)
      names[id] = n == 1 && !in_condition.count(id) ? "*" : "?" + std::to_string(next++);
  }

  std::string operator()(const Term& t) const {
    if (const auto* v = std::get_if<Variable>(&t)) return names.at(v->id);
    if (const auto* c = std::get_if<ContextParam>(&t)) return "?" + c->name;
    return render_term_default(t);
  }
};

std::string render_atom(const Atom& a, const Display& d) {
  switch (a.kind) {
    case Atom::Kind::Eq: return d(a.lhs) + " = " + std::get<Value>(a.rhs).to_sql();
    case Atom::Kind::IsNull: return d(a.lhs) + " IS NULL";
    case Atom::Kind::EqVars: return d(a.lhs) + " = " + d(a.rhs);
    case Atom::Kind::Lt: return d(a.lhs) + " < " + d(a.rhs);
  }
  return "";
}

nlohmann::json term_json(const Term& t, const Display& d) {
  if (const auto* v = std::get_if<Value>(&t)) return {{"value", v->to_json()}};
  return d(t);
}

}  // namespace

std::string render_template_sql(const Schema& schema, const DecisionTemplate& t, const BasicQuery& q) {
  Display d(t);
  return render_sql(schema, q, [&](const Term& x) { return d(x); });
}

std::string render_template(const Schema& schema, const DecisionTemplate& t) {
  Display d(t);
  auto sql = [&](const BasicQuery& q) { return render_sql(schema, q, [&](const Term& x) { return d(x); }); };
  std::ostringstream out;
  for (const auto& p : t.premises) {
    out << "(";
    for (std::size_t k = 0; k < p.tuple.size(); ++k) out << (k ? ", " : "") << d(p.tuple[k]);
    out << ") in " << sql(p.query) << "\n";
  }
  if (!t.condition.empty()) {
    out << "where ";
    for (std::size_t i = 0; i < t.condition.size(); ++i) out << (i ? " AND " : "") << render_atom(t.condition[i], d);
    out << "\n";
  }
  out << "--------\n" << sql(t.query) << "\n";
  return out.str();
}

nlohmann::json template_to_json(const Schema& schema, const DecisionTemplate& t) {
  Display d(t);
  auto sql = [&](const BasicQuery& q) { return render_sql(schema, q, [&](const Term& x) { return d(x); }); };
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["signature"] = t.signature();
  j["query"] = sql(t.query);
  j["premises"] = nlohmann::json::array();
  for (const auto& p : t.premises) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& x : p.tuple) row.push_back(term_json(x, d));
    j["premises"].push_back({{"query", sql(p.query)}, {"row", row}});
  }
  j["condition"] = nlohmann::json::array();
  for (const auto& a : t.condition) {
    nlohmann::json c;
    switch (a.kind) {
      case Atom::Kind::Eq: c["kind"] = "eq"; break;
      case Atom::Kind::IsNull: c["kind"] = "is_null"; break;
      case Atom::Kind::EqVars: c["kind"] = "eq_vars"; break;
      case Atom::Kind::Lt: c["kind"] = "lt"; break;
    }
    c["lhs"] = d(a.lhs);
    if (a.kind == Atom::Kind::Eq) c["value"] = std::get<Value>(a.rhs).to_json();
    if (a.kind == Atom::Kind::EqVars || a.kind == Atom::Kind::Lt) c["rhs"] = d(a.rhs);
    j["condition"].push_back(c);
  }
  j["verified"] = t.verified;
  return j;
}

DecisionTemplate template_from_json(const nlohmann::json& j, const PolicyBundle& policy) {
  try {
    if (j.value("format_version", 0) != kFormatVersion) throw ParseError("unsupported template format version");
    std::map<int, ColumnType> types;
    int wildcard = 1'000'000;
    auto env = policy.resolve_env();
    env.variable_types = &types;
    env.wildcard_counter = &wildcard;
    sql::ParseOptions opts;
    opts.template_syntax = true;
    auto parse = [&](const std::string& text) {
      auto c = sql::classify_basic(sql::parse(text, {}, opts), policy.schema(), env);
      if (auto* nb = std::get_if<sql::NotBasic>(&c)) throw ParseError("template query is not basic: " + nb->reason);
      return std::get<BasicQuery>(c);
    };
    auto symbol = [&](const std::string& s, std::optional<ColumnType> hint) -> Term {
      if (s == "*") return Variable{wildcard++, hint.value_or(ColumnType::Int)};
      if (s.size() < 2 || s[0] != '?') throw ParseError("bad template term '" + s + "'");
      auto name = s.substr(1);
      if (std::all_of(name.begin(), name.end(), ::isdigit)) {
        int id = std::stoi(name);
        auto it = types.find(id);
        ColumnType t = it != types.end() ? it->second : hint.value_or(ColumnType::Int);
        types.emplace(id, t);
        return Variable{id, t};
      }
      auto t = policy.param_type(name);
      if (!t) throw ParseError("unknown parameter '" + s + "'");
      return ContextParam{name, *t};
    };
    auto type_of = [](const Term& t) {
      if (const auto* v = std::get_if<Variable>(&t)) return v->type;
      return std::get<ContextParam>(t).type;
    };

    DecisionTemplate t;
    for (const auto& pj : j.at("premises")) {
      smt::Premise p{parse(pj.at("query").get<std::string>()), {}};
      auto out = output_types(policy.schema(), p.query);
      const auto& row = pj.at("row");
      if (row.size() != out.size()) throw ParseError("premise row arity does not match its query");
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (row[k].is_object()) p.tuple.push_back(Value::from_json(row[k].at("value"), out[k]));
        else p.tuple.push_back(symbol(row[k].get<std::string>(), out[k]));
      }
      t.premises.push_back(std::move(p));
    }
    t.query = parse(j.at("query").get<std::string>());
    for (const auto& cj : j.at("condition")) {
      auto kind = cj.at("kind").get<std::string>();
      Term lhs = symbol(cj.at("lhs").get<std::string>(), std::nullopt);
      if (kind == "eq") t.condition.push_back(Atom::eq(lhs, Value::from_json(cj.at("value"), type_of(lhs))));
      else if (kind == "is_null") t.condition.push_back(Atom::is_null(lhs));
      else if (kind == "eq_vars") t.condition.push_back(Atom::eq_vars(lhs, symbol(cj.at("rhs").get<std::string>(), std::nullopt)));
      else if (kind == "lt") t.condition.push_back(Atom::lt(lhs, symbol(cj.at("rhs").get<std::string>(), std::nullopt)));
      else throw ParseError("unknown condition kind '" + kind + "'");
    }
    // Retype variables that first appeared before their type was known.
    auto retype = [&](const Term& x) -> Term {
      if (const auto* v = std::get_if<Variable>(&x))
        if (auto it = types.find(v->id); it != types.end()) return Variable{v->id, it->second};
      return x;
    };
    t = map_template(t, retype);
    t.verified = j.value("verified", false);
    return canonicalize(t);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed template: ") + e.what());
  }
}

namespace {

class Matcher {
 public:
  Matcher(const DecisionTemplate& t, const Trace& trace) : t_(t), trace_(trace) {
    for (const auto& e : trace) entry_sig_.push_back(shape_signature(e.query));
    for (const auto& p : t.premises) premise_sig_.push_back(shape_signature(p.query));
  }

  bool run(Valuation& nu, const BasicQuery& q) {
    if (!unify_query(t_.query, q, nu) || !condition_ok(nu)) return false;
    std::vector<bool> done(t_.premises.size(), false);
    return search(nu, done, 0);
  }

 private:
  const DecisionTemplate& t_;
  const Trace& trace_;
  std::vector<std::string> entry_sig_;
  std::vector<std::string> premise_sig_;

  static bool unify(const Term& pattern, const Term& concrete, Valuation& nu) {
    const auto* c = std::get_if<Value>(&concrete);
    if (!c) return false;
    if (const auto* v = std::get_if<Value>(&pattern)) return *v == *c;
    if (const auto* p = std::get_if<ContextParam>(&pattern)) {
      auto it = nu.ctx.find(p->name);
      return it != nu.ctx.end() && it->second == *c;
    }
    if (const auto* x = std::get_if<Variable>(&pattern)) {
      auto [it, fresh] = nu.vars.try_emplace(x->id, *c);
      return fresh || it->second == *c;
    }
    return false;
  }

  static bool unify_query(const BasicQuery& pattern, const BasicQuery& concrete, Valuation& nu) {
    auto a = leaf_terms(pattern);
    auto b = leaf_terms(concrete);
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!unify(*a[i], *b[i], nu)) return false;
    return true;
  }

  bool condition_ok(const Valuation& nu) const {
    for (const auto& a : t_.condition) {
      if (!nu.binds(a.lhs)) continue;
      if ((a.kind == Atom::Kind::EqVars || a.kind == Atom::Kind::Lt) && !nu.binds(a.rhs)) continue;
      if (!holds(a, [&](const Term& x) { return nu.of(x); })) return false;
    }
    return true;
  }

  int bound_count(std::size_t i, const Valuation& nu) const {
    int n = 0;
    const auto& p = t_.premises[i];
    for (const Term* x : leaf_terms(p.query)) n += nu.binds(*x);
    for (const auto& x : p.tuple) n += nu.binds(x);
    return n;
  }

  bool search(Valuation& nu, std::vector<bool>& done, std::size_t placed) {
    if (placed == t_.premises.size()) return true;
    std::size_t pick = t_.premises.size();
    int best = -1;
    for (std::size_t i = 0; i < t_.premises.size(); ++i) {
      if (done[i]) continue;
      int n = bound_count(i, nu);
      if (n > best) best = n, pick = i;
    }
    const auto& p = t_.premises[pick];
    done[pick] = true;
    for (std::size_t e = 0; e < trace_.size(); ++e) {
      if (entry_sig_[e] != premise_sig_[pick] || trace_[e].tuple.size() != p.tuple.size()) continue;
      Valuation trial = nu;
      if (!unify_query(p.query, trace_[e].query, trial)) continue;
      bool ok = true;
      for (std::size_t k = 0; k < p.tuple.size() && ok; ++k) ok = unify(p.tuple[k], trace_[e].tuple[k], trial);
      if (!ok || !condition_ok(trial)) continue;
      if (search(trial, done, placed + 1)) {
        nu = std::move(trial);
        return true;
      }
    }
    done[pick] = false;
    return false;
  }
};

}  // namespace

std::optional<Valuation> match_template(const DecisionTemplate& t, const BasicQuery& q, const Trace& trace,
                                        const RequestContext& ctx) {
  if (shape_signature(t.query) != shape_signature(q)) return std::nullopt;
  Valuation nu;
  bool missing = false;
  visit_terms(t, [&](const Term& x) {
    if (const auto* c = std::get_if<ContextParam>(&x)) {
      if (const Value* v = ctx.find(c->name)) nu.ctx[c->name] = *v;
      else missing = true;
    }
  });
  if (missing) return std::nullopt;
  Matcher m(t, trace);
  if (!m.run(nu, q)) return std::nullopt;
  return nu;
}

}  // namespace viewguard
