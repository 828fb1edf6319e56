#include "viewguard/constraints.hpp"

namespace viewguard {

namespace {

BasicQuery key_lhs(const Schema& schema, const KeyConstraint& k) {
  SelectBlock b;
  b.relations = {Relation{k.table, "r1"}, Relation{k.table, "r2"}};
  auto arity = static_cast<std::uint32_t>(schema.table(k.table).arity());
  for (std::uint32_t rel = 0; rel < 2; ++rel)
    for (std::uint32_t c = 0; c < arity; ++c) b.projection.push_back(ColumnRef{rel, c});
  std::vector<Predicate> eqs;
  for (auto c : k.columns) {
    auto col = static_cast<std::uint32_t>(c);
    eqs.push_back(Predicate::cmp(CmpOp::Eq, ColumnRef{0, col}, ColumnRef{1, col}));
  }
  b.where = Predicate::conj(std::move(eqs));
  return BasicQuery{{std::move(b)}, Certificate::Distinct};
}

BasicQuery key_rhs(const Schema& schema, const KeyConstraint& k) {
  SelectBlock b;
  b.relations = {Relation{k.table, "r"}};
  auto arity = static_cast<std::uint32_t>(schema.table(k.table).arity());
  for (int rep = 0; rep < 2; ++rep)
    for (std::uint32_t c = 0; c < arity; ++c) b.projection.push_back(ColumnRef{0, c});
  return BasicQuery{{std::move(b)}, Certificate::Distinct};
}

BasicQuery project_columns(std::size_t table, const std::vector<std::size_t>& cols, bool not_null) {
  SelectBlock b;
  b.relations = {Relation{table, ""}};
  std::vector<Predicate> guards;
  for (auto c : cols) {
    ColumnRef ref{0, static_cast<std::uint32_t>(c)};
    b.projection.push_back(ref);
    if (not_null) guards.push_back(Predicate::is_null(ref, true));
  }
  b.where = Predicate::conj(std::move(guards));
  return BasicQuery{{std::move(b)}, Certificate::Distinct};
}

}  // namespace

std::pair<BasicQuery, BasicQuery> containment_form(const Schema& schema, const Constraint& c) {
  if (const auto* k = std::get_if<KeyConstraint>(&c)) return {key_lhs(schema, *k), key_rhs(schema, *k)};
  if (const auto* fk = std::get_if<ForeignKey>(&c))
    return {project_columns(fk->from_table, fk->from_columns, true), project_columns(fk->to_table, fk->to_columns, false)};
  const auto& ct = std::get<Containment>(c);
  return {ct.lhs, ct.rhs};
}

std::vector<Constraint> key_constraints(const Schema& schema) {
  std::vector<Constraint> out;
  for (std::size_t t = 0; t < schema.size(); ++t) {
    const auto& def = schema.table(t);
    out.push_back(KeyConstraint{t, def.primary_key, true});
    for (const auto& u : def.unique_keys) out.push_back(KeyConstraint{t, u, false});
  }
  return out;
}

}  // namespace viewguard
