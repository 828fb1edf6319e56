#include "viewguard/query.hpp"

#include <map>

#include "viewguard/errors.hpp"

namespace viewguard {

std::string_view to_string(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "<>";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "=";
}

CmpOp flip(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return CmpOp::Gt;
    case CmpOp::Le: return CmpOp::Ge;
    case CmpOp::Gt: return CmpOp::Lt;
    case CmpOp::Ge: return CmpOp::Le;
    default: return op;
  }
}

std::string_view to_string(Certificate c) {
  switch (c) {
    case Certificate::Distinct: return "distinct";
    case Certificate::Limit1: return "limit1";
    case Certificate::ProjectsKeys: return "projects_keys";
    case Certificate::KeyConstrainedWhere: return "key_constrained_where";
    case Certificate::UnionDedup: return "union_dedup";
  }
  return "distinct";
}

Predicate Predicate::truth() { return Predicate{}; }

Predicate Predicate::falsity() {
  Predicate p;
  p.kind = Kind::False;
  return p;
}

Predicate Predicate::cmp(CmpOp op, Term a, Term b) {
  Predicate p;
  p.kind = Kind::Cmp;
  p.op = op;
  p.terms = {std::move(a), std::move(b)};
  return p;
}

Predicate Predicate::in(Term subject, std::vector<Term> items, bool negated) {
  Predicate p;
  p.kind = negated ? Kind::NotIn : Kind::In;
  p.terms.push_back(std::move(subject));
  for (auto& t : items) p.terms.push_back(std::move(t));
  return p;
}

Predicate Predicate::is_null(Term subject, bool negated) {
  Predicate p;
  p.kind = negated ? Kind::IsNotNull : Kind::IsNull;
  p.terms.push_back(std::move(subject));
  return p;
}

Predicate Predicate::conj(std::vector<Predicate> parts) {
  Predicate out;
  out.kind = Kind::And;
  for (auto& p : parts) {
    if (p.kind == Kind::True) continue;
    if (p.kind == Kind::False) return falsity();
    if (p.kind == Kind::And) {
      for (auto& c : p.children) out.children.push_back(std::move(c));
    } else {
      out.children.push_back(std::move(p));
    }
  }
  if (out.children.empty()) return truth();
  if (out.children.size() == 1) return std::move(out.children.front());
  return out;
}

Predicate Predicate::disj(std::vector<Predicate> parts) {
  Predicate out;
  out.kind = Kind::Or;
  for (auto& p : parts) {
    if (p.kind == Kind::False) continue;
    if (p.kind == Kind::True) return truth();
    if (p.kind == Kind::Or) {
      for (auto& c : p.children) out.children.push_back(std::move(c));
    } else {
      out.children.push_back(std::move(p));
    }
  }
  if (out.children.empty()) return falsity();
  if (out.children.size() == 1) return std::move(out.children.front());
  return out;
}

std::vector<const Predicate*> Predicate::conjuncts() const {
  std::vector<const Predicate*> out;
  if (kind == Kind::True) return out;
  if (kind == Kind::And) {
    for (const auto& c : children) out.push_back(&c);
  } else {
    out.push_back(this);
  }
  return out;
}

const Column& column_def(const Schema& schema, const SelectBlock& block, ColumnRef ref) {
  return schema.table(block.relations.at(ref.rel).table).columns.at(ref.col);
}

ColumnType column_type(const Schema& schema, const SelectBlock& block, ColumnRef ref) {
  return column_def(schema, block, ref).type;
}

ColumnType term_type(const Schema& schema, const SelectBlock& block, const Term& t) {
  return std::visit(
      [&](const auto& x) -> ColumnType {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ColumnRef>) {
          return column_type(schema, block, x);
        } else if constexpr (std::is_same_v<T, Value>) {
          return x.type();
        } else {
          return x.type;
        }
      },
      t);
}

std::vector<ColumnType> output_types(const Schema& schema, const BasicQuery& q) {
  std::vector<ColumnType> out;
  if (q.blocks.empty()) return out;
  const auto& b = q.blocks.front();
  for (auto ref : b.projection) out.push_back(column_type(schema, b, ref));
  return out;
}

std::vector<std::string> output_names(const Schema& schema, const BasicQuery& q) {
  std::vector<std::string> out;
  if (q.blocks.empty()) return out;
  const auto& b = q.blocks.front();
  for (auto ref : b.projection) out.push_back(column_def(schema, b, ref).name);
  return out;
}

std::set<std::size_t> tables_of(const BasicQuery& q) {
  std::set<std::size_t> out;
  for (const auto& b : q.blocks)
    for (const auto& r : b.relations) out.insert(r.table);
  return out;
}

namespace {

void collect_leaves(const Predicate& p, std::vector<const Term*>& out) {
  for (const auto& t : p.terms)
    if (!is_column(t)) out.push_back(&t);
  for (const auto& c : p.children) collect_leaves(c, out);
}

}  // namespace

std::vector<const Term*> leaf_terms(const BasicQuery& q) {
  std::vector<const Term*> out;
  for (const auto& b : q.blocks) collect_leaves(b.where, out);
  return out;
}

void for_each_leaf(Predicate& p, const std::function<void(Term&)>& fn) {
  for (auto& t : p.terms)
    if (!is_column(t)) fn(t);
  for (auto& c : p.children) for_each_leaf(c, fn);
}

void for_each_leaf(const Predicate& p, const std::function<void(const Term&)>& fn) {
  for (const auto& t : p.terms)
    if (!is_column(t)) fn(t);
  for (const auto& c : p.children) for_each_leaf(c, fn);
}

void for_each_leaf(BasicQuery& q, const std::function<void(Term&)>& fn) {
  for (auto& b : q.blocks) for_each_leaf(b.where, fn);
}

BasicQuery map_leaves(const BasicQuery& q, const std::function<Term(const Term&)>& fn) {
  BasicQuery out = q;
  for_each_leaf(out, [&](Term& t) { t = fn(t); });
  return out;
}

bool is_closed(const BasicQuery& q) {
  for (const Term* t : leaf_terms(q))
    if (is_symbolic(*t)) return false;
  return true;
}

bool uses_order(const Predicate& p) {
  if (p.kind == Predicate::Kind::Cmp && p.op != CmpOp::Eq && p.op != CmpOp::Ne) return true;
  for (const auto& c : p.children)
    if (uses_order(c)) return true;
  return false;
}

namespace {

void sign_predicate(const Predicate& p, std::string& out) {
  using K = Predicate::Kind;
  switch (p.kind) {
    case K::True: out += "T"; return;
    case K::False: out += "F"; return;
    case K::And:
    case K::Or:
      out += p.kind == K::And ? "&(" : "|(";
      for (const auto& c : p.children) {
        sign_predicate(c, out);
        out += ',';
      }
      out += ')';
      return;
    default: break;
  }
  out += std::to_string(static_cast<int>(p.kind));
  if (p.kind == K::Cmp) out += to_string(p.op);
  out += '[';
  for (const auto& t : p.terms) {
    if (const auto* c = std::get_if<ColumnRef>(&t)) {
      out += 'c' + std::to_string(c->rel) + '.' + std::to_string(c->col);
    } else {
      out += '?';
    }
    out += ' ';
  }
  out += ']';
}

}  // namespace

std::string shape_signature(const BasicQuery& q) {
  std::string out;
  for (const auto& b : q.blocks) {
    out += "{R";
    for (const auto& r : b.relations) out += ' ' + std::to_string(r.table);
    out += " P";
    for (auto ref : b.projection) out += ' ' + std::to_string(ref.rel) + '.' + std::to_string(ref.col);
    out += " W";
    sign_predicate(b.where, out);
    out += '}';
  }
  return out;
}

std::string render_term_default(const Term& t) {
  if (const auto* v = std::get_if<Value>(&t)) return v->to_sql();
  if (const auto* c = std::get_if<ContextParam>(&t)) return "?" + c->name;
  if (const auto* x = std::get_if<Variable>(&t)) return "?" + std::to_string(x->id);
  return "<column>";
}

namespace {

struct BlockRenderer {
  const Schema& schema;
  const SelectBlock& block;
  const TermRenderer& render;
  std::vector<std::string> names;  // per relation qualifier; empty = unqualified

  BlockRenderer(const Schema& s, const SelectBlock& b, const TermRenderer& r) : schema(s), block(b), render(r) {
    if (block.relations.size() == 1) {
      names.push_back(block.relations[0].alias.empty() ? std::string() : block.relations[0].alias);
      return;
    }
    std::map<std::size_t, int> count;
    for (const auto& rel : block.relations) count[rel.table]++;
    std::set<std::string> used;
    for (std::size_t i = 0; i < block.relations.size(); ++i) {
      const auto& rel = block.relations[i];
      std::string n = rel.alias;
      if (n.empty()) n = count[rel.table] == 1 ? schema.table(rel.table).name : "t" + std::to_string(i);
      while (used.count(n)) n += "_" + std::to_string(i);
      used.insert(n);
      names.push_back(n);
    }
  }

  std::string column(ColumnRef ref) const {
    const auto& col = column_def(schema, block, ref);
    if (names[ref.rel].empty()) return col.name;
    return names[ref.rel] + "." + col.name;
  }

  std::string term(const Term& t) const {
    if (const auto* c = std::get_if<ColumnRef>(&t)) return column(*c);
    return render(t);
  }

  std::string predicate(const Predicate& p, bool nested) const {
    using K = Predicate::Kind;
    switch (p.kind) {
      case K::True: return "TRUE";
      case K::False: return "FALSE";
      case K::And:
      case K::Or: {
        std::string out;
        for (std::size_t i = 0; i < p.children.size(); ++i) {
          if (i) out += p.kind == K::And ? " AND " : " OR ";
          out += predicate(p.children[i], true);
        }
        return nested ? "(" + out + ")" : out;
      }
      case K::Cmp: return term(p.terms[0]) + " " + std::string(to_string(p.op)) + " " + term(p.terms[1]);
      case K::In:
      case K::NotIn: {
        std::string out = term(p.terms[0]) + (p.kind == K::In ? " IN (" : " NOT IN (");
        for (std::size_t i = 1; i < p.terms.size(); ++i) {
          if (i > 1) out += ", ";
          out += term(p.terms[i]);
        }
        return out + ")";
      }
      case K::IsNull: return term(p.terms[0]) + " IS NULL";
      case K::IsNotNull: return term(p.terms[0]) + " IS NOT NULL";
    }
    return "TRUE";
  }

  bool projects_star() const {
    if (block.relations.size() != 1) return false;
    const auto& t = schema.table(block.relations[0].table);
    if (block.projection.size() != t.arity()) return false;
    for (std::size_t i = 0; i < block.projection.size(); ++i)
      if (block.projection[i].col != i) return false;
    return true;
  }

  std::string select(bool distinct) const {
    std::string out = distinct ? "SELECT DISTINCT " : "SELECT ";
    if (projects_star()) {
      out += "*";
    } else {
      for (std::size_t i = 0; i < block.projection.size(); ++i) {
        if (i) out += ", ";
        out += column(block.projection[i]);
      }
    }
    out += " FROM ";
    for (std::size_t i = 0; i < block.relations.size(); ++i) {
      if (i) out += ", ";
      const auto& name = schema.table(block.relations[i].table).name;
      out += name;
      if (!names[i].empty() && names[i] != name) out += " " + names[i];
    }
    if (!block.where.is_true()) out += " WHERE " + predicate(block.where, false);
    return out;
  }
};

}  // namespace

std::string render_sql(const Schema& schema, const BasicQuery& q, const TermRenderer& render) {
  std::string out;
  for (std::size_t i = 0; i < q.blocks.size(); ++i) {
    if (i) out += " UNION ";
    BlockRenderer r(schema, q.blocks[i], render);
    out += r.select(q.certificate == Certificate::Distinct);
  }
  if (q.certificate == Certificate::Limit1) out += " LIMIT 1";
  return out;
}

}  // namespace viewguard
