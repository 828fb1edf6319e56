#include "viewguard/sql/frontend.hpp"

#include <algorithm>
#include <optional>
#include <set>

#include "viewguard/constraints.hpp"
#include "viewguard/errors.hpp"

namespace viewguard::sql {
namespace {

using Join = TableRef::Join;

struct Item {
  ColumnRef ref;
  bool sum = false;
};

struct RSelect {
  bool distinct = false;
  std::vector<Relation> relations;
  std::vector<Join> joins;
  std::vector<Predicate> on;
  std::vector<Item> items;
  Predicate where;
};

struct RQuery {
  std::vector<RSelect> selects;
  std::vector<ColumnRef> order_by;
  std::optional<std::int64_t> limit;
};

struct Scope {
  std::vector<std::string> qualifiers;  // alias, or table name when no alias
  std::vector<std::size_t> tables;
};

class Resolver {
 public:
  Resolver(const Schema& schema, const ResolveEnv& env) : schema_(schema), env_(env) {}

  RQuery resolve(const Query& q) {
    RQuery out;
    for (const auto& s : q.selects) out.selects.push_back(select(s, true));
    auto arity = out.selects.front().items.size();
    for (std::size_t i = 1; i < out.selects.size(); ++i) {
      if (out.selects[i].items.size() != arity) throw ResolutionError("UNION branches have different arity");
      for (std::size_t c = 0; c < arity; ++c)
        if (item_type(out.selects[i], c) != item_type(out.selects[0], c))
          throw ResolutionError("UNION branches have different column types");
    }
    if (!q.order_by.empty()) {
      if (q.selects.size() > 1) throw UnsupportedFeature("ORDER BY on a UNION is not supported");
      Scope scope = scope_of(out.selects.front());
      for (const auto& c : q.order_by) out.order_by.push_back(column(c, scope));
    }
    if (q.limit && q.selects.size() > 1) throw UnsupportedFeature("LIMIT on a UNION is not supported");
    out.limit = q.limit;
    return out;
  }

  ColumnType item_type(const RSelect& s, std::size_t i) const {
    const auto& rel = s.relations[s.items[i].ref.rel];
    return schema_.table(rel.table).columns[s.items[i].ref.col].type;
  }

 private:
  const Schema& schema_;
  const ResolveEnv& env_;

  Scope scope_of(const RSelect& s) const {
    Scope sc;
    for (const auto& r : s.relations) {
      sc.qualifiers.push_back(r.alias.empty() ? schema_.table(r.table).name : r.alias);
      sc.tables.push_back(r.table);
    }
    return sc;
  }

  RSelect select(const Select& s, bool allow_subquery) {
    RSelect out;
    out.distinct = s.distinct;
    for (const auto& t : s.from) {
      Relation rel{schema_.index_of(t.table), t.alias};
      out.relations.push_back(rel);
      out.joins.push_back(t.join);
    }
    Scope scope = scope_of(out);
    for (std::size_t i = 0; i < scope.qualifiers.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (iequals(scope.qualifiers[i], scope.qualifiers[j]))
          throw ResolutionError("duplicate table name or alias '" + scope.qualifiers[i] + "'");
    for (std::size_t i = 0; i < s.from.size(); ++i)
      out.on.push_back(s.from[i].on ? condition(*s.from[i].on, scope) : Predicate::truth());

    for (const auto& it : s.items) {
      switch (it.kind) {
        case SelectItem::Kind::Star:
          for (std::uint32_t r = 0; r < out.relations.size(); ++r) star(out, r);
          break;
        case SelectItem::Kind::TableStar: {
          bool found = false;
          for (std::uint32_t r = 0; r < scope.qualifiers.size(); ++r) {
            if (iequals(scope.qualifiers[r], it.qualifier)) {
              star(out, r);
              found = true;
            }
          }
          if (!found) throw ResolutionError("unknown table or alias '" + it.qualifier + "'");
          break;
        }
        case SelectItem::Kind::Column: out.items.push_back(Item{column(it.column, scope), false}); break;
        case SelectItem::Kind::Sum: {
          auto ref = column(it.column, scope);
          auto t = schema_.table(out.relations[ref.rel].table).columns[ref.col].type;
          if (t != ColumnType::Int) throw ResolutionError("SUM over a non-integer column");
          out.items.push_back(Item{ref, true});
          break;
        }
      }
    }

    std::vector<Predicate> parts;
    if (s.where) {
      std::vector<const Condition*> top;
      if (s.where->kind == Condition::Kind::And) {
        for (const auto& c : s.where->children) top.push_back(&c);
      } else {
        top.push_back(&*s.where);
      }
      for (const Condition* c : top) {
        if (c->kind == Condition::Kind::InSubquery) {
          if (!allow_subquery) throw UnsupportedFeature("subquery inside IN");
          parts.push_back(merge_subquery(out, scope, *c));
        } else {
          parts.push_back(condition(*c, scope));
        }
      }
    }
    out.where = Predicate::conj(std::move(parts));
    return out;
  }

  void star(RSelect& s, std::uint32_t r) const {
    auto n = schema_.table(s.relations[r].table).arity();
    for (std::uint32_t c = 0; c < n; ++c) s.items.push_back(Item{ColumnRef{r, c}, false});
  }

  // col IN (SELECT x FROM ... WHERE p)  ==>  add the subquery's relations,
  // col = x and p to the outer block, and make it DISTINCT.
  Predicate merge_subquery(RSelect& outer, const Scope& scope, const Condition& c) {
    const Query& sub = *c.subquery;
    if (sub.selects.size() != 1 || !sub.order_by.empty() || sub.limit)
      throw UnsupportedFeature("IN subquery must be a single SELECT without ORDER BY/LIMIT");
    RSelect inner = select(sub.selects.front(), true);
    if (inner.items.size() != 1 || inner.items.front().sum)
      throw UnsupportedFeature("IN subquery must select exactly one column");
    for (auto j : inner.joins)
      if (j == Join::Left) throw UnsupportedFeature("LEFT JOIN inside an IN subquery");
    auto offset = static_cast<std::uint32_t>(outer.relations.size());
    auto shift = [&](Predicate p) {
      shift_refs(p, offset);
      return p;
    };
    std::vector<Predicate> parts;
    for (std::size_t i = 0; i < inner.relations.size(); ++i) {
      outer.relations.push_back(inner.relations[i]);
      outer.joins.push_back(Join::Comma);
      outer.on.push_back(Predicate::truth());
      parts.push_back(shift(inner.on[i]));
    }
    Term lhs = operand(c.operands.front(), scope);
    ColumnRef rhs = inner.items.front().ref;
    rhs.rel += offset;
    std::vector<Term*> both{&lhs};
    Term rhs_term = rhs;
    both.push_back(&rhs_term);
    ColumnType rt = schema_.table(outer.relations[rhs.rel].table).columns[rhs.col].type;
    if (const auto* l = std::get_if<ColumnRef>(&lhs)) {
      if (schema_.table(outer.relations[l->rel].table).columns[l->col].type != rt)
        throw ResolutionError("IN subquery column type does not match");
    }
    fix_types(both, &rt);
    parts.push_back(Predicate::cmp(CmpOp::Eq, lhs, rhs_term));
    parts.push_back(shift(inner.where));
    outer.distinct = true;
    return Predicate::conj(std::move(parts));
  }

  static void shift_refs(Predicate& p, std::uint32_t offset) {
    for (auto& t : p.terms)
      if (auto* c = std::get_if<ColumnRef>(&t)) c->rel += offset;
    for (auto& ch : p.children) shift_refs(ch, offset);
  }

  ColumnRef column(const ColumnName& c, const Scope& scope) const {
    std::optional<ColumnRef> found;
    for (std::uint32_t r = 0; r < scope.tables.size(); ++r) {
      if (!c.qualifier.empty() && !iequals(c.qualifier, scope.qualifiers[r])) continue;
      auto idx = schema_.table(scope.tables[r]).column_index(c.name);
      if (!idx) continue;
      if (found) throw ResolutionError("ambiguous column '" + c.name + "'");
      found = ColumnRef{r, static_cast<std::uint32_t>(*idx)};
    }
    if (!found) {
      std::string full = c.qualifier.empty() ? c.name : c.qualifier + "." + c.name;
      throw ResolutionError("unknown column '" + full + "'");
    }
    return *found;
  }

  Term operand(const Operand& op, const Scope& scope) const {
    return std::visit(
        [&](const auto& x) -> Term {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, ColumnName>) {
            return column(x, scope);
          } else if constexpr (std::is_same_v<T, Value>) {
            return x;
          } else if constexpr (std::is_same_v<T, ParamName>) {
            for (const auto& [name, type] : env_.context)
              if (iequals(name, x.name)) return ContextParam{name, type};
            throw ResolutionError("unknown parameter '?" + x.name + "'");
          } else {
            if (!env_.variable_types) throw ResolutionError("template variables are not allowed here");
            int id = x.index;
            if (id < 0) {
              if (!env_.wildcard_counter) throw ResolutionError("wildcards are not allowed here");
              id = (*env_.wildcard_counter)++;
            }
            return Variable{id, ColumnType::Int};
          }
        },
        op);
  }

  // Determines the common type of a group of compared terms and retypes
  // literals, variables and NULLs accordingly.
  void fix_types(const std::vector<Term*>& terms, const ColumnType* column_hint) {
    std::optional<ColumnType> type;
    if (column_hint) type = *column_hint;
    auto take = [&](ColumnType t, const std::string& what) {
      if (type && *type != t) throw ResolutionError("type mismatch involving " + what);
      type = t;
    };
    for (Term* t : terms) {
      if (auto* c = std::get_if<ContextParam>(t)) take(c->type, "?" + c->name);
    }
    for (Term* t : terms) {
      if (auto* v = std::get_if<Variable>(t)) {
        auto it = env_.variable_types->find(v->id);
        if (it != env_.variable_types->end() && !type) type = it->second;
      }
    }
    for (Term* t : terms) {
      if (auto* v = std::get_if<Value>(t)) {
        if (!type && !v->is_null()) type = v->type();
      }
    }
    if (!type) type = ColumnType::Int;
    for (Term* t : terms) {
      if (auto* v = std::get_if<Value>(t)) {
        *t = v->coerce(*type);
      } else if (auto* x = std::get_if<Variable>(t)) {
        x->type = *type;
        auto [it, inserted] = env_.variable_types->emplace(x->id, *type);
        if (!inserted && it->second != *type)
          throw ResolutionError("variable ?" + std::to_string(x->id) + " used at two types");
      }
    }
  }

  Predicate condition(const Condition& c, const Scope& scope) {
    using K = Condition::Kind;
    switch (c.kind) {
      case K::True: return Predicate::truth();
      case K::False: return Predicate::falsity();
      case K::And:
      case K::Or: {
        std::vector<Predicate> parts;
        for (const auto& ch : c.children) parts.push_back(condition(ch, scope));
        return c.kind == K::And ? Predicate::conj(std::move(parts)) : Predicate::disj(std::move(parts));
      }
      case K::InSubquery: throw UnsupportedFeature("IN subquery must be a top-level conjunct of WHERE");
      default: break;
    }
    std::vector<Term> terms;
    for (const auto& op : c.operands) terms.push_back(operand(op, scope));
    std::vector<Term*> ptrs;
    std::optional<ColumnType> col_type;
    for (auto& t : terms) {
      ptrs.push_back(&t);
      if (auto* ref = std::get_if<ColumnRef>(&t)) {
        auto ct = schema_.table(scope.tables[ref->rel]).columns[ref->col].type;
        if (col_type && *col_type != ct) throw ResolutionError("comparison between columns of different types");
        col_type = ct;
      }
    }
    fix_types(ptrs, col_type ? &*col_type : nullptr);
    Predicate p;
    switch (c.kind) {
      case K::Cmp: p = Predicate::cmp(c.op, terms[0], terms[1]); break;
      case K::In:
      case K::NotIn: {
        std::vector<Term> items(terms.begin() + 1, terms.end());
        p = Predicate::in(terms[0], std::move(items), c.kind == K::NotIn);
        break;
      }
      case K::IsNull:
      case K::IsNotNull: p = Predicate::is_null(terms[0], c.kind == K::IsNotNull); break;
      default: break;
    }
    return p;
  }
};

bool has_key_projected(const Schema& schema, const RSelect& s, std::uint32_t rel) {
  const auto& t = schema.table(s.relations[rel].table);
  for (const auto& key : t.keys()) {
    bool ok = true;
    for (auto c : key) {
      bool projected = false;
      for (const auto& it : s.items) projected |= it.ref.rel == rel && it.ref.col == c;
      if (!projected || t.columns[c].nullable) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return false;
}

// Closure of columns functionally determined by the output and by
// equalities with constants, propagated through keys.
bool key_constrained(const Schema& schema, const RSelect& s) {
  std::set<ColumnRef> determined, nonnull;
  for (const auto& it : s.items) determined.insert(it.ref);
  std::vector<std::pair<ColumnRef, ColumnRef>> col_eqs;
  for (const Predicate* p : s.where.conjuncts()) {
    if (p->kind != Predicate::Kind::Cmp || p->op != CmpOp::Eq) continue;
    const auto* a = std::get_if<ColumnRef>(&p->terms[0]);
    const auto* b = std::get_if<ColumnRef>(&p->terms[1]);
    if (a && b) {
      col_eqs.emplace_back(*a, *b);
      nonnull.insert(*a);
      nonnull.insert(*b);
    } else if (a || b) {
      determined.insert(a ? *a : *b);
      nonnull.insert(a ? *a : *b);
    }
  }
  std::vector<bool> full(s.relations.size(), false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto [a, b] : col_eqs) {
      if (determined.count(a) && determined.insert(b).second) changed = true;
      if (determined.count(b) && determined.insert(a).second) changed = true;
    }
    for (std::uint32_t r = 0; r < s.relations.size(); ++r) {
      if (full[r]) continue;
      const auto& t = schema.table(s.relations[r].table);
      for (const auto& key : t.keys()) {
        bool ok = true;
        for (auto c : key) {
          ColumnRef ref{r, static_cast<std::uint32_t>(c)};
          if (!determined.count(ref) || (t.columns[c].nullable && !nonnull.count(ref))) {
            ok = false;
            break;
          }
        }
        if (!ok) continue;
        full[r] = true;
        changed = true;
        for (std::uint32_t c = 0; c < t.arity(); ++c) determined.insert(ColumnRef{r, c});
        break;
      }
    }
  }
  return std::all_of(full.begin(), full.end(), [](bool b) { return b; });
}

SelectBlock to_block(const RSelect& s) {
  SelectBlock b;
  b.relations = s.relations;
  for (const auto& it : s.items) b.projection.push_back(it.ref);
  b.where = s.where;
  return b;
}

std::variant<BasicQuery, NotBasic> certify(const Schema& schema, const RQuery& q) {
  for (const auto& s : q.selects) {
    for (auto j : s.joins)
      if (j != Join::Comma) return NotBasic{"explicit JOIN syntax"};
    for (const auto& it : s.items)
      if (it.sum) return NotBasic{"aggregate in SELECT list"};
  }
  if (q.limit && *q.limit != 1) return NotBasic{"LIMIT greater than 1"};
  BasicQuery out;
  for (const auto& s : q.selects) out.blocks.push_back(to_block(s));
  for (auto ref : q.order_by) {
    const auto& p = out.blocks.front().projection;
    if (std::find(p.begin(), p.end(), ref) == p.end()) return NotBasic{"ORDER BY on a column that is not selected"};
  }
  if (q.selects.size() > 1) {
    out.certificate = Certificate::UnionDedup;
    return out;
  }
  const auto& s = q.selects.front();
  if (s.distinct) {
    out.certificate = Certificate::Distinct;
  } else if (q.limit && *q.limit == 1) {
    out.certificate = Certificate::Limit1;
  } else {
    bool all = true;
    for (std::uint32_t r = 0; r < s.relations.size(); ++r) all = all && has_key_projected(schema, s, r);
    if (all) {
      out.certificate = Certificate::ProjectsKeys;
    } else if (key_constrained(schema, s)) {
      out.certificate = Certificate::KeyConstrainedWhere;
    } else {
      return NotBasic{"query may return duplicate rows"};
    }
  }
  return out;
}

void flatten_inner(RSelect& s) {
  for (std::size_t i = 0; i < s.relations.size(); ++i) {
    if (s.joins[i] != Join::Inner) continue;
    s.where = Predicate::conj({std::move(s.on[i]), std::move(s.where)});
    s.on[i] = Predicate::truth();
    s.joins[i] = Join::Comma;
  }
}

bool left_join_on_fk(const Schema& schema, const std::vector<ForeignKey>& fks, RSelect& s, std::size_t i) {
  std::optional<std::uint32_t> other;
  std::set<std::pair<std::size_t, std::size_t>> pairs;  // (other col, i col)
  for (const Predicate* p : s.on[i].conjuncts()) {
    if (p->kind != Predicate::Kind::Cmp || p->op != CmpOp::Eq) return false;
    const auto* a = std::get_if<ColumnRef>(&p->terms[0]);
    const auto* b = std::get_if<ColumnRef>(&p->terms[1]);
    if (!a || !b) return false;
    if (a->rel == i) std::swap(a, b);
    if (b->rel != i || a->rel == i || a->rel > i || s.joins[a->rel] == Join::Left) return false;
    if (other && *other != a->rel) return false;
    other = a->rel;
    pairs.emplace(a->col, b->col);
  }
  if (!other) return false;
  std::size_t src = s.relations[*other].table;
  std::size_t dst = s.relations[i].table;
  for (const auto& fk : fks) {
    if (fk.from_table != src || fk.to_table != dst) continue;
    std::set<std::pair<std::size_t, std::size_t>> fk_pairs;
    bool nonnull = true;
    for (std::size_t k = 0; k < fk.from_columns.size(); ++k) {
      fk_pairs.emplace(fk.from_columns[k], fk.to_columns[k]);
      nonnull = nonnull && !schema.table(src).columns[fk.from_columns[k]].nullable;
    }
    if (fk_pairs == pairs && nonnull) {
      s.joins[i] = Join::Inner;
      return true;
    }
  }
  return false;
}

bool mentions_rel(const Term& t, std::uint32_t rel) {
  const auto* c = std::get_if<ColumnRef>(&t);
  return c && c->rel == rel;
}

// C2 with every atom over the null-padded relation evaluated as on a
// padded row.  Returns nullopt when an IS NULL test on that relation makes
// the substitution non-monotone.
std::optional<Predicate> null_pad(const Predicate& p, std::uint32_t rel) {
  using K = Predicate::Kind;
  switch (p.kind) {
    case K::True:
    case K::False: return p;
    case K::And:
    case K::Or: {
      std::vector<Predicate> parts;
      for (const auto& c : p.children) {
        auto r = null_pad(c, rel);
        if (!r) return std::nullopt;
        parts.push_back(std::move(*r));
      }
      return p.kind == K::And ? Predicate::conj(std::move(parts)) : Predicate::disj(std::move(parts));
    }
    case K::IsNull:
      if (mentions_rel(p.terms[0], rel)) return std::nullopt;
      return p;
    case K::IsNotNull:
      if (mentions_rel(p.terms[0], rel)) return Predicate::falsity();
      return p;
    case K::In: {
      if (mentions_rel(p.terms[0], rel)) return Predicate::falsity();
      std::vector<Term> items;
      for (std::size_t i = 1; i < p.terms.size(); ++i)
        if (!mentions_rel(p.terms[i], rel)) items.push_back(p.terms[i]);
      if (items.empty()) return Predicate::falsity();
      return Predicate::in(p.terms[0], std::move(items));
    }
    default:
      for (const auto& t : p.terms)
        if (mentions_rel(t, rel)) return Predicate::falsity();
      return p;
  }
}

}  // namespace

std::variant<BasicQuery, NotBasic> classify_basic(const Query& ast, const Schema& schema, const ResolveEnv& env) {
  Resolver r(schema, env);
  return certify(schema, r.resolve(ast));
}

RewriteResult rewrite_to_basic(const Query& ast, const Schema& schema, const ResolveEnv& env) {
  Resolver resolver(schema, env);
  RQuery q = resolver.resolve(ast);
  RewriteResult out;
  static const std::vector<ForeignKey> no_fks;
  const auto& fks = env.foreign_keys ? *env.foreign_keys : no_fks;

  for (auto& s : q.selects) {
    if (std::any_of(s.joins.begin(), s.joins.end(), [](Join j) { return j == Join::Inner; })) {
      flatten_inner(s);
      out.rules.push_back("inner_join");
    }
    for (std::size_t i = 1; i < s.relations.size(); ++i) {
      if (s.joins[i] == Join::Left && left_join_on_fk(schema, fks, s, i)) {
        flatten_inner(s);
        out.rules.push_back("left_join_fk");
      }
    }
  }

  if (!q.order_by.empty()) {
    auto& s = q.selects.front();
    for (auto ref : q.order_by) {
      bool present = std::any_of(s.items.begin(), s.items.end(),
                                 [&](const Item& it) { return !it.sum && it.ref == ref; });
      if (!present) {
        s.items.push_back(Item{ref, false});
        ++out.extra_columns;
        out.output_changed = true;
      }
    }
    q.order_by.clear();
    out.rules.push_back("order_by");
  }

  if (q.limit) {
    out.limit_dropped = true;
    out.exact = false;
    if (*q.limit != 1) q.limit.reset();
    out.rules.push_back("limit");
  }

  for (auto& s : q.selects) {
    bool has_sum = std::any_of(s.items.begin(), s.items.end(), [](const Item& it) { return it.sum; });
    if (!has_sum) continue;
    if (s.items.size() - out.extra_columns != 1 || q.selects.size() != 1)
      throw UnsupportedFeature("SUM must be the only item in the SELECT list");
    if (std::any_of(s.joins.begin(), s.joins.end(), [](Join j) { return j == Join::Left; }))
      throw UnsupportedFeature("SUM over a LEFT JOIN");
    Item summed = s.items.front();
    std::vector<Item> items;
    for (std::uint32_t r = 0; r < s.relations.size(); ++r)
      for (auto c : schema.table(s.relations[r].table).primary_key)
        items.push_back(Item{ColumnRef{r, static_cast<std::uint32_t>(c)}, false});
    items.push_back(Item{summed.ref, false});
    for (std::size_t k = 1; k < s.items.size(); ++k) items.push_back(s.items[k]);
    s.items = std::move(items);
    s.distinct = false;
    out.exact = false;
    out.output_changed = true;
    out.rules.push_back("sum");
  }

  if (q.selects.size() == 1) {
    auto& s = q.selects.front();
    bool left = std::any_of(s.joins.begin(), s.joins.end(), [](Join j) { return j == Join::Left; });
    if (left) {
      bool shape_ok = s.distinct && s.relations.size() == 2 && s.joins[1] == Join::Left &&
                      std::all_of(s.items.begin(), s.items.end(), [](const Item& it) { return it.ref.rel == 0; });
      if (!shape_ok) throw UnsupportedFeature("LEFT JOIN that is neither on a foreign key nor a DISTINCT one-table join");
      auto c3 = null_pad(s.where, 1);
      if (!c3) throw UnsupportedFeature("LEFT JOIN rewrite with IS NULL on the joined table");
      RSelect matched = s;
      matched.joins[1] = Join::Comma;
      matched.where = Predicate::conj({s.on[1], s.where});
      matched.on[1] = Predicate::truth();
      matched.distinct = false;
      RSelect unmatched;
      unmatched.relations = {s.relations[0]};
      unmatched.joins = {Join::Comma};
      unmatched.on = {Predicate::truth()};
      unmatched.items = s.items;
      unmatched.where = std::move(*c3);
      q.selects = {std::move(matched), std::move(unmatched)};
      out.rules.push_back("distinct_left_join");
    }
  }
  for (const auto& s : q.selects)
    for (auto j : s.joins)
      if (j == Join::Left) throw UnsupportedFeature("LEFT JOIN cannot be rewritten to a basic query");

  auto cert = certify(schema, q);
  if (auto* nb = std::get_if<NotBasic>(&cert)) throw UnsupportedFeature("not a basic query: " + nb->reason);
  out.query = std::move(std::get<BasicQuery>(cert));
  return out;
}

RewriteResult to_basic(const Query& ast, const Schema& schema, const ResolveEnv& env) {
  auto c = classify_basic(ast, schema, env);
  if (auto* q = std::get_if<BasicQuery>(&c)) {
    RewriteResult out;
    out.query = std::move(*q);
    if (ast.limit) {
      out.limit_dropped = true;
      out.exact = false;
    }
    return out;
  }
  return rewrite_to_basic(ast, schema, env);
}

std::vector<BasicQuery> split_in(const BasicQuery& q) {
  if (q.blocks.size() != 1) throw NotSplittable("union queries are not split");
  bool negative = false;
  std::function<void(const Predicate&)> scan = [&](const Predicate& p) {
    if (p.kind == Predicate::Kind::NotIn) negative = true;
    for (const auto& c : p.children) scan(c);
  };
  const auto& where = q.blocks.front().where;
  scan(where);
  if (negative) throw NotSplittable("NOT IN present");
  auto parts = where.conjuncts();
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Predicate& p = *parts[i];
    if (p.kind != Predicate::Kind::In) continue;
    std::vector<BasicQuery> out;
    for (std::size_t k = 1; k < p.terms.size(); ++k) {
      std::vector<Predicate> conj;
      for (std::size_t j = 0; j < parts.size(); ++j)
        conj.push_back(j == i ? Predicate::cmp(CmpOp::Eq, p.terms[0], p.terms[k]) : *parts[j]);
      BasicQuery qi = q;
      qi.blocks.front().where = Predicate::conj(std::move(conj));
      out.push_back(std::move(qi));
    }
    return out;
  }
  throw NotSplittable("no top-level IN list");
}

}  // namespace viewguard::sql
