#include "viewguard/smt/encoder.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

namespace viewguard::smt {

namespace {

using Exprs = std::vector<std::string>;

std::string and_(const Exprs& parts) {
  Exprs kept;
  for (const auto& p : parts) {
    if (p == "false") return "false";
    if (p == "true") continue;
    if (p.rfind("(and ", 0) == 0) kept.push_back(p.substr(5, p.size() - 6));
    else kept.push_back(p);
  }
  if (kept.empty()) return "true";
  if (kept.size() == 1) return kept.front();
  std::string out = "(and";
  for (const auto& p : kept) out += " " + p;
  return out + ")";
}

std::string or_(const Exprs& parts) {
  Exprs kept;
  for (const auto& p : parts) {
    if (p == "true") return "true";
    if (p != "false") kept.push_back(p);
  }
  if (kept.empty()) return "false";
  if (kept.size() == 1) return kept.front();
  std::string out = "(or";
  for (const auto& p : kept) out += " " + p;
  return out + ")";
}

std::string not_(const std::string& p) {
  if (p == "true") return "false";
  if (p == "false") return "true";
  return "(not " + p + ")";
}

std::string implies(const std::string& a, const std::string& b) {
  if (a == "false" || b == "true") return "true";
  if (a == "true") return b;
  return "(=> " + a + " " + b + ")";
}

std::string eq(const std::string& a, const std::string& b) {
  if (a == b) return "true";
  return "(= " + a + " " + b + ")";
}

std::string app(const std::string& f, const Exprs& args) {
  if (args.empty()) return f;
  std::string out = "(" + f;
  for (const auto& a : args) out += " " + a;
  return out + ")";
}

std::string sort_name(ColumnType t) {
  switch (t) {
    case ColumnType::Int: return "SInt";
    case ColumnType::String: return "SString";
    case ColumnType::Bool: return "SBool";
    case ColumnType::Timestamp: return "STime";
  }
  return "SInt";
}

std::string null_name(ColumnType t) { return "null_" + sort_name(t); }

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '_') ? c : '_';
  return out;
}

struct Bound {
  std::string name;
  ColumnType type;
};

class Builder {
 public:
  Builder(const Schema& schema, const std::optional<BoundsMap>& bounds) : schema_(schema), bounds_(bounds) {}

  bool bounded() const { return bounds_.has_value(); }

  int bound(std::size_t table) const {
    auto it = bounds_->find(table);
    return it == bounds_->end() ? 0 : it->second;
  }

  std::string literal(const Value& v) {
    use_sort(v.type());
    if (v.is_null()) return null_name(v.type());
    auto it = literals_.find(v);
    if (it != literals_.end()) return it->second;
    std::string name;
    switch (v.type()) {
      case ColumnType::Int:
        name = "lit_i" + (v.int_value() < 0 ? "m" + std::to_string(-v.int_value()) : std::to_string(v.int_value()));
        break;
      case ColumnType::Timestamp:
        name = "lit_t" + (v.int_value() < 0 ? "m" + std::to_string(-v.int_value()) : std::to_string(v.int_value()));
        break;
      case ColumnType::Bool: name = v.int_value() ? "lit_true" : "lit_false"; break;
      case ColumnType::String: name = "lit_s" + std::to_string(string_count_++); break;
    }
    literals_.emplace(v, name);
    return name;
  }

  std::string symbol(const Term& t) {
    if (const auto* v = std::get_if<Value>(&t)) return literal(*v);
    if (const auto* c = std::get_if<ContextParam>(&t)) return constant("ctx_" + sanitize(c->name), c->type);
    if (const auto* x = std::get_if<Variable>(&t)) return constant("x" + std::to_string(x->id), x->type);
    return "?";
  }

  std::string constant(const std::string& name, ColumnType type) {
    use_sort(type);
    if (constants_.emplace(name, type).second) constant_order_.push_back(name);
    return name;
  }

  std::string fresh(ColumnType type) {
    use_sort(type);
    return "q" + std::to_string(fresh_++);
  }

  std::string relation(const std::string& db, std::size_t table) {
    used_relations_.emplace(db, table);
    for (const auto& c : schema_.table(table).columns) use_sort(c.type);
    return db + "_" + sanitize(schema_.table(table).name);
  }

  std::string cell(const std::string& db, std::size_t table, int row, std::size_t col) {
    return relation(db, table) + "_r" + std::to_string(row + 1) + "_c" + std::to_string(col + 1);
  }

  std::string exists_flag(const std::string& db, std::size_t table, int row) {
    return relation(db, table) + "_r" + std::to_string(row + 1) + "_e";
  }

  std::string lt(ColumnType type) {
    use_sort(type);
    ordered_.insert(type);
    return "lt_" + sort_name(type);
  }

  static bool is_literal(const std::string& e) { return e.rfind("lit_", 0) == 0; }

  std::string not_null(const std::string& e, ColumnType type) {
    if (is_literal(e)) return "true";
    return not_(eq(e, null_name(type)));
  }

  std::string predicate(const Predicate& p, const SelectBlock& block, const std::vector<Exprs>& cols) {
    using K = Predicate::Kind;
    auto term = [&](const Term& t) {
      if (const auto* c = std::get_if<ColumnRef>(&t)) return cols[c->rel][c->col];
      return symbol(t);
    };
    auto type = [&](const Term& t) { return term_type(schema_, block, t); };
    switch (p.kind) {
      case K::True: return std::string("true");
      case K::False: return std::string("false");
      case K::And: {
        Exprs parts;
        for (const auto& c : p.children) parts.push_back(predicate(c, block, cols));
        return and_(parts);
      }
      case K::Or: {
        Exprs parts;
        for (const auto& c : p.children) parts.push_back(predicate(c, block, cols));
        return or_(parts);
      }
      case K::Cmp: return compare(p.op, term(p.terms[0]), term(p.terms[1]), type(p.terms[0]));
      case K::In:
      case K::NotIn: {
        auto s = term(p.terms[0]);
        auto t = type(p.terms[0]);
        Exprs parts{not_null(s, t)};
        Exprs alts;
        for (std::size_t i = 1; i < p.terms.size(); ++i) {
          auto item = term(p.terms[i]);
          if (p.kind == K::In) alts.push_back(is_literal(item) ? eq(s, item) : and_({eq(s, item), not_null(item, t)}));
          else parts.push_back(and_({not_(eq(s, item)), not_null(item, t)}));
        }
        if (p.kind == K::In) parts.push_back(or_(alts));
        return and_(parts);
      }
      case K::IsNull: return eq(term(p.terms[0]), null_name(type(p.terms[0])));
      case K::IsNotNull: return not_null(term(p.terms[0]), type(p.terms[0]));
    }
    return std::string("false");
  }

  std::string compare(CmpOp op, const std::string& a, const std::string& b, ColumnType t) {
    std::string guard = and_({not_null(a, t), not_null(b, t)});
    switch (op) {
      case CmpOp::Eq:
        if (is_literal(a) || is_literal(b)) return eq(a, b);
        return and_({eq(a, b), guard});
      case CmpOp::Ne: return and_({not_(eq(a, b)), guard});
      case CmpOp::Lt: return and_({app(lt(t), {a, b}), guard});
      case CmpOp::Gt: return and_({app(lt(t), {b, a}), guard});
      case CmpOp::Le: return and_({or_({app(lt(t), {a, b}), eq(a, b)}), guard});
      case CmpOp::Ge: return and_({or_({app(lt(t), {b, a}), eq(a, b)}), guard});
    }
    return "false";
  }

  using Preset = std::vector<std::vector<std::optional<std::string>>>;

  /// Calls fn(cols, facts) for each way of binding the block's relation
  /// occurrences: one universal binding in unbounded mode (with the bound
  /// variables appended to `vars`), one per row combination when bounded.
  void bindings(const SelectBlock& block, const std::string& db, const Preset& preset,
                std::vector<Bound>& vars, const std::function<void(const std::vector<Exprs>&, const Exprs&)>& fn) {
    std::size_t n = block.relations.size();
    std::vector<Exprs> cols(n);
    if (!bounded()) {
      Exprs facts;
      for (std::size_t r = 0; r < n; ++r) {
        const auto& def = schema_.table(block.relations[r].table);
        for (std::size_t c = 0; c < def.arity(); ++c) {
          if (r < preset.size() && preset[r][c]) {
            cols[r].push_back(*preset[r][c]);
          } else {
            auto v = fresh(def.columns[c].type);
            vars.push_back({v, def.columns[c].type});
            cols[r].push_back(v);
          }
        }
        facts.push_back(app(relation(db, block.relations[r].table), cols[r]));
      }
      fn(cols, facts);
      return;
    }
    std::vector<int> rows(n, 0);
    for (std::size_t r = 0; r < n; ++r)
      if (bound(block.relations[r].table) == 0) return;
    for (;;) {
      Exprs facts;
      for (std::size_t r = 0; r < n; ++r) {
        auto t = block.relations[r].table;
        cols[r].clear();
        for (std::size_t c = 0; c < schema_.table(t).arity(); ++c) cols[r].push_back(cell(db, t, rows[r], c));
        facts.push_back(exists_flag(db, t, rows[r]));
      }
      fn(cols, facts);
      std::size_t i = n;
      for (;;) {
        if (i == 0) return;
        --i;
        if (++rows[i] < bound(block.relations[i].table)) break;
        rows[i] = 0;
      }
    }
  }

  std::string quantify(const char* q, const std::vector<Bound>& vars, const std::string& body) {
    if (vars.empty() || body == "true" || body == "false") return body;
    std::string out = std::string("(") + q + " (";
    for (std::size_t i = 0; i < vars.size(); ++i)
      out += (i ? " (" : "(") + vars[i].name + " " + sort_name(vars[i].type) + ")";
    return out + ") " + body + ")";
  }

  /// Q^db(tuple).
  std::string member(const BasicQuery& q, const std::string& db, const Exprs& tuple) {
    Exprs alts;
    for (const auto& block : q.blocks) {
      Preset preset;
      Exprs pending;  // projection equalities not absorbed by substitution
      if (!bounded()) {
        for (const auto& r : block.relations) preset.emplace_back(schema_.table(r.table).arity());
        for (std::size_t k = 0; k < block.projection.size(); ++k) {
          auto& slot = preset[block.projection[k].rel][block.projection[k].col];
          if (!slot) slot = tuple[k];
          else pending.push_back(eq(*slot, tuple[k]));
        }
      }
      std::vector<Bound> vars;
      bindings(block, db, preset, vars, [&](const std::vector<Exprs>& cols, const Exprs& facts) {
        Exprs body = facts;
        body.push_back(predicate(block.where, block, cols));
        if (bounded())
          for (std::size_t k = 0; k < block.projection.size(); ++k)
            body.push_back(eq(tuple[k], cols[block.projection[k].rel][block.projection[k].col]));
        body.insert(body.end(), pending.begin(), pending.end());
        alts.push_back(quantify("exists", vars, and_(body)));
      });
    }
    return or_(alts);
  }

  /// lhs^db1 ⊆ rhs^db2.
  std::string contained(const BasicQuery& lhs, const std::string& db1, const BasicQuery& rhs, const std::string& db2) {
    Exprs parts;
    for (const auto& block : lhs.blocks) {
      std::vector<Bound> vars;
      bindings(block, db1, {}, vars, [&](const std::vector<Exprs>& cols, const Exprs& facts) {
        Exprs hyp = facts;
        hyp.push_back(predicate(block.where, block, cols));
        Exprs out;
        for (auto ref : block.projection) out.push_back(cols[ref.rel][ref.col]);
        parts.push_back(quantify("forall", vars, implies(and_(hyp), member(rhs, db2, out))));
      });
    }
    return and_(parts);
  }

  Exprs table_axioms(const std::string& db, std::size_t t, const std::vector<Constraint>& constraints) {
    Exprs out;
    const auto& def = schema_.table(t);
    if (!bounded()) {
      std::vector<Bound> a;
      Exprs av;
      for (const auto& c : def.columns) {
        a.push_back({fresh(c.type), c.type});
        av.push_back(a.back().name);
      }
      auto fact = app(relation(db, t), av);
      Exprs nn;
      for (std::size_t c = 0; c < def.arity(); ++c)
        if (!def.columns[c].nullable) nn.push_back(not_null(av[c], def.columns[c].type));
      if (!nn.empty()) out.push_back(quantify("forall", a, implies(fact, and_(nn))));
      for (const auto& con : constraints) {
        const auto* k = std::get_if<KeyConstraint>(&con);
        if (!k || k->table != t) continue;
        std::vector<Bound> b;
        Exprs bv;
        for (const auto& c : def.columns) {
          b.push_back({fresh(c.type), c.type});
          bv.push_back(b.back().name);
        }
        Exprs hyp{fact, app(relation(db, t), bv)};
        for (auto c : k->columns) {
          hyp.push_back(eq(av[c], bv[c]));
          hyp.push_back(not_null(av[c], def.columns[c].type));
        }
        Exprs same;
        for (std::size_t c = 0; c < def.arity(); ++c) same.push_back(eq(av[c], bv[c]));
        auto all = a;
        all.insert(all.end(), b.begin(), b.end());
        out.push_back(quantify("forall", all, implies(and_(hyp), and_(same))));
      }
      return out;
    }
    int n = bound(t);
    for (int r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < def.arity(); ++c) {
        auto cell_name = cell(db, t, r, c);
        if (!def.columns[c].nullable) out.push_back(not_null(cell_name, def.columns[c].type));
        if (def.columns[c].type == ColumnType::Bool)
          out.push_back(or_({eq(cell_name, literal(Value::of_bool(false))), eq(cell_name, literal(Value::of_bool(true))),
                             eq(cell_name, null_name(ColumnType::Bool))}));
      }
    }
    for (const auto& con : constraints) {
      const auto* k = std::get_if<KeyConstraint>(&con);
      if (!k || k->table != t) continue;
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          Exprs hyp{exists_flag(db, t, i), exists_flag(db, t, j)};
          for (auto c : k->columns) {
            hyp.push_back(eq(cell(db, t, i, c), cell(db, t, j, c)));
            hyp.push_back(not_null(cell(db, t, i, c), def.columns[c].type));
          }
          Exprs same;
          for (std::size_t c = 0; c < def.arity(); ++c) same.push_back(eq(cell(db, t, i, c), cell(db, t, j, c)));
          out.push_back(implies(and_(hyp), and_(same)));
        }
      }
    }
    return out;
  }

  std::vector<std::string> declarations(const std::vector<std::string>& extra_consts) {
    std::vector<std::string> out;
    for (auto t : sorts_) out.push_back("(declare-sort " + sort_name(t) + " 0)");
    for (auto t : sorts_) out.push_back("(declare-const " + null_name(t) + " " + sort_name(t) + ")");
    for (const auto& [v, name] : literals_) {
      std::string decl = "(declare-const " + name + " " + sort_name(v.type()) + ")";
      if (v.type() == ColumnType::String) {
        std::string shown = v.to_display();
        std::replace(shown.begin(), shown.end(), '\n', ' ');
        decl += " ; " + shown;
      }
      out.push_back(decl);
    }
    for (const auto& name : constant_order_)
      out.push_back("(declare-const " + name + " " + sort_name(constants_.at(name)) + ")");
    for (const auto& c : extra_consts) out.push_back(c);
    for (auto t : ordered_) out.push_back("(declare-fun lt_" + sort_name(t) + " (" + sort_name(t) + " " + sort_name(t) + ") Bool)");
    for (const auto& [db, t] : used_relations_) {
      const auto& def = schema_.table(t);
      if (!bounded()) {
        std::string sig;
        for (const auto& c : def.columns) sig += (sig.empty() ? "" : " ") + sort_name(c.type);
        out.push_back("(declare-fun " + relation(db, t) + " (" + sig + ") Bool)");
        continue;
      }
      for (int r = 0; r < bound(t); ++r) {
        for (std::size_t c = 0; c < def.arity(); ++c)
          out.push_back("(declare-const " + cell(db, t, r, c) + " " + sort_name(def.columns[c].type) + ")");
        out.push_back("(declare-const " + exists_flag(db, t, r) + " Bool)");
      }
    }
    return out;
  }

  Exprs domain_axioms() {
    Exprs out;
    if (sorts_.count(ColumnType::Bool)) {
      literal(Value::of_bool(false));
      literal(Value::of_bool(true));
    }
    for (auto t : sorts_) {
      std::vector<std::string> names{null_name(t)};
      for (const auto& [v, name] : literals_)
        if (v.type() == t) names.push_back(name);
      if (names.size() > 1) out.push_back(app("distinct", names));
    }
    for (auto t : ordered_) {
      std::vector<std::pair<Value, std::string>> lits;
      for (const auto& [v, name] : literals_)
        if (v.type() == t) lits.emplace_back(v, name);
      for (std::size_t i = 0; i < lits.size(); ++i) {
        for (std::size_t j = 0; j < lits.size(); ++j) {
          auto f = app("lt_" + sort_name(t), {lits[i].second, lits[j].second});
          out.push_back(lits[i].first.sql_less(lits[j].first) ? f : not_(f));
        }
      }
      if (bounded()) continue;
      auto s = sort_name(t);
      auto l = "lt_" + s;
      out.push_back("(forall ((a " + s + ")) (not (" + l + " a a)))");
      out.push_back("(forall ((a " + s + ") (b " + s + ") (c " + s + ")) (=> (and (" + l + " a b) (" + l + " b c)) (" + l +
                    " a c)))");
      out.push_back("(forall ((a " + s + ") (b " + s + ")) (=> (and (not (= a " + null_name(t) + ")) (not (= b " +
                    null_name(t) + ")) (not (= a b))) (or (" + l + " a b) (" + l + " b a))))");
    }
    if (!bounded() && sorts_.count(ColumnType::Bool)) {
      out.push_back("(forall ((b SBool)) (or (= b lit_false) (= b lit_true) (= b null_SBool)))");
    }
    return out;
  }

  const std::set<std::pair<std::string, std::size_t>>& used_relations() const { return used_relations_; }
  void use_sort(ColumnType t) { sorts_.insert(t); }

 private:
  const Schema& schema_;
  const std::optional<BoundsMap>& bounds_;
  std::map<Value, std::string> literals_;
  int string_count_ = 0;
  std::map<std::string, ColumnType> constants_;
  std::vector<std::string> constant_order_;
  std::set<ColumnType> sorts_;
  std::set<ColumnType> ordered_;
  std::set<std::pair<std::string, std::size_t>> used_relations_;
  int fresh_ = 0;
};

Exprs tuple_exprs(Builder& b, const Schema& schema, const BasicQuery& q, const std::vector<Term>& tuple) {
  auto types = output_types(schema, q);
  Exprs out;
  for (std::size_t k = 0; k < tuple.size(); ++k) {
    if (const auto* v = std::get_if<Value>(&tuple[k])) out.push_back(b.literal(v->coerce(types.at(k))));
    else out.push_back(b.symbol(tuple[k]));
  }
  return out;
}

std::string encode_atom(Builder& b, const Atom& a) {
  auto type_of = [](const Term& t) {
    if (const auto* c = std::get_if<ContextParam>(&t)) return c->type;
    if (const auto* x = std::get_if<Variable>(&t)) return x->type;
    return std::get<Value>(t).type();
  };
  auto x = b.symbol(a.lhs);
  auto t = type_of(a.lhs);
  switch (a.kind) {
    case Atom::Kind::Eq: return eq(x, b.literal(std::get<Value>(a.rhs).coerce(t)));
    case Atom::Kind::IsNull: return eq(x, null_name(t));
    case Atom::Kind::EqVars: return and_({eq(x, b.symbol(a.rhs)), b.not_null(x, t)});
    case Atom::Kind::Lt: {
      auto y = b.symbol(a.rhs);
      return and_({app(b.lt(t), {x, y}), b.not_null(x, t), b.not_null(y, t)});
    }
  }
  return "false";
}

}  // namespace

std::string trace_label(std::size_t i) { return "LQ_" + std::to_string(i + 1); }
std::string atom_label(std::size_t i) { return "LC_" + std::to_string(i + 1); }

int label_index(const std::string& label, char family) {
  if (label.size() < 4 || label[0] != 'L' || label[1] != family || label[2] != '_') return -1;
  try {
    return std::stoi(label.substr(3)) - 1;
  } catch (const std::exception&) {
    return -1;
  }
}

SmtScript encode(const Schema& schema, const std::vector<Constraint>& constraints, const Problem& p,
                 const std::optional<BoundsMap>& bounds) {
  Builder b(schema, bounds);
  SmtScript script;
  script.logic = bounds ? "QF_UF" : "UF";

  Exprs body;
  for (const auto& v : p.views) body.push_back(b.contained(v, "D1", v, "D2"));

  std::vector<SmtScript::Labeled> labeled;
  for (std::size_t i = 0; i < p.premises.size(); ++i) {
    const auto& prem = p.premises[i];
    auto f = b.member(prem.query, "D1", tuple_exprs(b, schema, prem.query, prem.tuple));
    if (p.label_premises) labeled.push_back({trace_label(i), f});
    else body.push_back(f);
  }
  for (std::size_t i = 0; i < p.atoms.size(); ++i) {
    auto f = encode_atom(b, p.atoms[i]);
    if (p.label_atoms) labeled.push_back({atom_label(i), f});
    else body.push_back(f);
  }

  std::vector<std::string> skolems;
  Exprs out;
  auto types = output_types(schema, p.query);
  for (std::size_t k = 0; k < types.size(); ++k) {
    out.push_back("out_" + std::to_string(k + 1));
    b.use_sort(types[k]);
    skolems.push_back("(declare-const " + out.back() + " " + sort_name(types[k]) + ")");
  }
  std::string conclusion = and_({b.member(p.query, "D1", out), not_(b.member(p.query, "D2", out))});

  // Constraints hold on both databases over every table touched so far.
  std::set<std::size_t> touched;
  for (const auto& [db, t] : b.used_relations()) touched.insert(t);
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& c : constraints) {
      if (std::holds_alternative<KeyConstraint>(c)) continue;
      auto [lhs, rhs] = containment_form(schema, c);
      auto lt = tables_of(lhs);
      if (!std::any_of(lt.begin(), lt.end(), [&](std::size_t t) { return touched.count(t) > 0; })) continue;
      for (auto t : tables_of(rhs)) grew |= touched.insert(t).second;
    }
  }
  Exprs axioms;
  for (const std::string db : {"D1", "D2"}) {
    for (auto t : touched) {
      if (bounds && b.bound(t) == 0) continue;
      auto ax = b.table_axioms(db, t, constraints);
      axioms.insert(axioms.end(), ax.begin(), ax.end());
    }
    for (const auto& c : constraints) {
      if (std::holds_alternative<KeyConstraint>(c)) continue;
      auto [lhs, rhs] = containment_form(schema, c);
      auto lt = tables_of(lhs);
      if (!std::all_of(lt.begin(), lt.end(), [&](std::size_t t) { return touched.count(t) > 0; })) continue;
      axioms.push_back(b.contained(lhs, db, rhs, db));
    }
  }

  auto domain = b.domain_axioms();
  script.declarations = b.declarations(skolems);
  for (const auto& a : domain) script.assertions.push_back(a);
  for (const auto& a : axioms)
    if (a != "true") script.assertions.push_back(a);
  for (const auto& a : body)
    if (a != "true") script.assertions.push_back(a);
  script.assertions.push_back(conclusion);
  script.labeled = std::move(labeled);
  return script;
}

std::string encode_query(const Schema& schema, const BasicQuery& q, const std::string& db,
                         const std::vector<std::string>& tuple, const std::optional<BoundsMap>& bounds) {
  Builder b(schema, bounds);
  return b.member(q, db, tuple);
}

std::vector<Premise> premises_of(const Trace& trace) {
  std::vector<Premise> out;
  out.reserve(trace.size());
  for (const auto& e : trace) out.push_back(Premise{e.query, std::vector<Term>(e.tuple.begin(), e.tuple.end())});
  return out;
}

namespace {

Problem problem_for(const PolicyBundle& policy, const RequestContext& ctx, const Trace& trace, const BasicQuery& q) {
  Problem p;
  for (const auto& v : policy.views()) p.views.push_back(instantiate_view(v, ctx));
  p.premises = premises_of(trace);
  p.query = q;
  return p;
}

}  // namespace

SmtScript encode_strong_compliance(const PolicyBundle& policy, const RequestContext& ctx, const Trace& trace,
                                   const BasicQuery& q) {
  return encode(policy.schema(), policy.constraints(), problem_for(policy, ctx, trace, q));
}

SmtScript encode_bounded(const PolicyBundle& policy, const RequestContext& ctx, const Trace& trace,
                         const BasicQuery& q, const BoundsMap& bounds) {
  return encode(policy.schema(), policy.constraints(), problem_for(policy, ctx, trace, q), bounds);
}

BoundsMap choose_bounds(const Schema& schema, const std::vector<Constraint>& constraints,
                        const std::vector<Premise>& premises, const BasicQuery& q) {
  std::map<std::size_t, int> needed;
  auto occurrences = [](const BasicQuery& query) {
    std::map<std::size_t, int> most;
    for (const auto& block : query.blocks) {
      std::map<std::size_t, int> here;
      for (const auto& r : block.relations) ++here[r.table];
      for (auto [t, n] : here) most[t] = std::max(most[t], n);
    }
    return most;
  };
  for (const auto& p : premises)
    for (auto [t, n] : occurrences(p.query)) needed[t] += n;
  auto in_query = occurrences(q);
  BoundsMap bounds;
  for (auto [t, n] : needed) bounds[t] = n + 1;
  for (auto [t, n] : in_query) bounds[t] = std::max(bounds[t], needed[t] + n);

  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& c : constraints) {
      if (std::holds_alternative<KeyConstraint>(c)) continue;
      auto [lhs, rhs] = containment_form(schema, c);
      int lhs_rows = 0;
      for (auto t : tables_of(lhs))
        if (bounds.count(t)) lhs_rows = std::max(lhs_rows, bounds[t]);
      if (lhs_rows == 0) continue;
      for (auto t : tables_of(rhs)) {
        if (bounds[t] < lhs_rows) {
          bounds[t] = lhs_rows;
          grew = true;
        }
      }
    }
  }
  for (std::size_t t = 0; t < schema.size(); ++t) bounds.emplace(t, 0);
  return bounds;
}

}  // namespace viewguard::smt
