#include "viewguard/oracle.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace viewguard {

Trace expand(const std::vector<Observation>& obs) {
  Trace out;
  for (std::size_t i = 0; i < obs.size(); ++i)
    for (const auto& row : obs[i].rows) out.push_back(TraceEntry{obs[i].query, row, i, obs[i].limit_dropped});
  return out;
}

void Database::set_rows(std::size_t t, std::vector<Tuple> rows) {
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  tables_.at(t) = std::move(rows);
}

void Database::insert(std::size_t t, Tuple row) {
  auto& rows = tables_.at(t);
  auto it = std::lower_bound(rows.begin(), rows.end(), row);
  if (it == rows.end() || *it != row) rows.insert(it, std::move(row));
}

nlohmann::json Database::to_json(const Schema& schema) const {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    auto rows = nlohmann::json::array();
    for (const auto& r : tables_[t]) {
      auto row = nlohmann::json::array();
      for (const auto& v : r) row.push_back(v.to_json());
      rows.push_back(std::move(row));
    }
    j[schema.table(t).name] = std::move(rows);
  }
  return j;
}

std::string Database::to_string(const Schema& schema) const {
  std::ostringstream out;
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    out << schema.table(t).name << ":";
    if (tables_[t].empty()) out << " (empty)";
    for (const auto& r : tables_[t]) out << " " << tuple_to_string(r);
    out << "\n";
  }
  return out.str();
}

namespace {

const Value& term_value(const Term& t, const std::vector<const Tuple*>& rows) {
  if (const auto* c = std::get_if<ColumnRef>(&t)) return (*rows[c->rel])[c->col];
  if (const auto* v = std::get_if<Value>(&t)) return *v;
  throw std::logic_error("evaluating a query that still has parameters");
}

bool compare(CmpOp op, const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return false;
  switch (op) {
    case CmpOp::Eq: return a == b;
    case CmpOp::Ne: return !(a == b);
    case CmpOp::Lt: return a.sql_less(b);
    case CmpOp::Le: return !b.sql_less(a);
    case CmpOp::Gt: return b.sql_less(a);
    case CmpOp::Ge: return !a.sql_less(b);
  }
  return false;
}

int max_rel(const Predicate& p) {
  int m = -1;
  for (const auto& t : p.terms)
    if (const auto* c = std::get_if<ColumnRef>(&t)) m = std::max(m, static_cast<int>(c->rel));
  for (const auto& c : p.children) m = std::max(m, max_rel(c));
  return m;
}

// Runs `emit` for every row combination of `block` that satisfies its
// predicate; conjuncts are checked as soon as their relations are bound.
void scan_block(const SelectBlock& block, const Database& d, const std::function<void(const std::vector<const Tuple*>&)>& emit) {
  std::size_t n = block.relations.size();
  std::vector<std::vector<const Predicate*>> checks(n + 1);
  for (const Predicate* p : block.where.conjuncts()) {
    int m = max_rel(*p);
    checks[m < 0 ? 0 : static_cast<std::size_t>(m)].push_back(p);
  }
  if (block.where.is_false()) return;
  std::vector<const Tuple*> rows(n, nullptr);
  std::function<void(std::size_t)> rec = [&](std::size_t depth) {
    if (depth == n) {
      emit(rows);
      return;
    }
    for (const auto& r : d.rows(block.relations[depth].table)) {
      rows[depth] = &r;
      bool ok = true;
      for (const Predicate* p : checks[depth]) {
        if (!satisfies(*p, rows)) {
          ok = false;
          break;
        }
      }
      if (ok) rec(depth + 1);
    }
  };
  rec(0);
}

}  // namespace

bool satisfies(const Predicate& p, const std::vector<const Tuple*>& rows) {
  using K = Predicate::Kind;
  switch (p.kind) {
    case K::True: return true;
    case K::False: return false;
    case K::And:
      for (const auto& c : p.children)
        if (!satisfies(c, rows)) return false;
      return true;
    case K::Or:
      for (const auto& c : p.children)
        if (satisfies(c, rows)) return true;
      return false;
    case K::Cmp: return compare(p.op, term_value(p.terms[0], rows), term_value(p.terms[1], rows));
    case K::In: {
      const Value& s = term_value(p.terms[0], rows);
      if (s.is_null()) return false;
      for (std::size_t i = 1; i < p.terms.size(); ++i)
        if (compare(CmpOp::Eq, s, term_value(p.terms[i], rows))) return true;
      return false;
    }
    case K::NotIn: {
      const Value& s = term_value(p.terms[0], rows);
      if (s.is_null()) return false;
      for (std::size_t i = 1; i < p.terms.size(); ++i) {
        const Value& v = term_value(p.terms[i], rows);
        if (v.is_null() || v == s) return false;
      }
      return true;
    }
    case K::IsNull: return term_value(p.terms[0], rows).is_null();
    case K::IsNotNull: return !term_value(p.terms[0], rows).is_null();
  }
  return false;
}

std::vector<Tuple> evaluate_bag(const BasicQuery& q, const Database& d) {
  std::vector<Tuple> out;
  for (const auto& b : q.blocks) {
    scan_block(b, d, [&](const std::vector<const Tuple*>& rows) {
      Tuple t;
      t.reserve(b.projection.size());
      for (auto ref : b.projection) t.push_back((*rows[ref.rel])[ref.col]);
      out.push_back(std::move(t));
    });
  }
  return out;
}

ResultSet evaluate(const BasicQuery& q, const Database& d) {
  auto out = evaluate_bag(q, d);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool conforms(const Schema& schema, const Database& d) {
  if (d.table_count() != schema.size()) return false;
  for (std::size_t t = 0; t < schema.size(); ++t) {
    const auto& def = schema.table(t);
    for (const auto& row : d.rows(t)) {
      if (row.size() != def.arity()) return false;
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (row[c].type() != def.columns[c].type) return false;
        if (row[c].is_null() && !def.columns[c].nullable) return false;
      }
    }
  }
  return true;
}

namespace {

bool keys_hold(const TableDef& def, const std::vector<Tuple>& rows, const std::vector<std::size_t>& key) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      bool same = true;
      for (auto c : key) {
        if (rows[i][c].is_null() || rows[i][c] != rows[j][c]) {
          same = false;
          break;
        }
      }
      if (same) return false;
    }
  }
  (void)def;
  return true;
}

bool includes(const ResultSet& a, const ResultSet& b) {  // a ⊆ b
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

bool check_constraints(const Schema& schema, const std::vector<Constraint>& constraints, const Database& d) {
  for (const auto& c : constraints) {
    if (const auto* k = std::get_if<KeyConstraint>(&c)) {
      if (!keys_hold(schema.table(k->table), d.rows(k->table), k->columns)) return false;
      continue;
    }
    auto [lhs, rhs] = containment_form(schema, c);
    if (!includes(evaluate(lhs, d), evaluate(rhs, d))) return false;
  }
  return true;
}

int DomainSpec::rows_for(std::size_t table) const {
  auto it = rows_per_table.find(table);
  return it == rows_per_table.end() ? max_rows : it->second;
}

DomainSpec DomainSpec::with_constants(const std::vector<Value>& constants, std::size_t per_type, int max_rows) {
  DomainSpec dom;
  dom.max_rows = max_rows;
  for (ColumnType t : {ColumnType::Int, ColumnType::String, ColumnType::Timestamp}) {
    std::set<Value> pool;
    for (const auto& v : constants)
      if (!v.is_null() && v.type() == t) pool.insert(v);
    auto make = [t](std::int64_t k) { return t == ColumnType::Int ? Value::of_int(k) : Value::of_timestamp(k); };
    if (t != ColumnType::String && !pool.empty()) {
      // Order comparisons need a value on each side of the constants.
      std::vector<std::int64_t> known;
      for (const auto& v : pool) known.push_back(v.int_value());
      pool.insert(make(known.front() - 1));
      pool.insert(make(known.back() + 1));
      for (std::size_t i = 0; i + 1 < known.size() && pool.size() < per_type; ++i)
        if (known[i] + 1 < known[i + 1]) pool.insert(make(known[i] + 1));
    }
    for (std::int64_t k = 1; pool.size() < per_type; ++k) {
      if (t == ColumnType::String) pool.insert(Value::of_string(std::string(1, static_cast<char>('a' + k - 1))));
      else pool.insert(make(k));
    }
    dom.pools[t] = std::vector<Value>(pool.begin(), pool.end());
  }
  dom.pools[ColumnType::Bool] = {Value::of_bool(false), Value::of_bool(true)};
  return dom;
}

std::vector<Value> collect_constants(const std::vector<BasicQuery>& queries, const std::vector<Tuple>& tuples,
                                     const RequestContext* ctx) {
  std::set<Value> out;
  for (const auto& q : queries)
    for (const Term* t : leaf_terms(q))
      if (const auto* v = std::get_if<Value>(t); v && !v->is_null()) out.insert(*v);
  for (const auto& tup : tuples)
    for (const auto& v : tup)
      if (!v.is_null()) out.insert(v);
  if (ctx)
    for (const auto& [k, v] : ctx->params())
      if (!v.is_null()) out.insert(v);
  return {out.begin(), out.end()};
}

std::string_view to_string(OracleVerdict::Kind k) {
  switch (k) {
    case OracleVerdict::Kind::Compliant: return "compliant";
    case OracleVerdict::Kind::NonCompliant: return "noncompliant";
    case OracleVerdict::Kind::Exhausted: return "exhausted";
  }
  return "exhausted";
}

namespace {

using Subsets = std::vector<std::vector<Tuple>>;

Subsets table_subsets(const TableDef& def, const DomainSpec& dom, int max_rows) {
  std::vector<Tuple> candidates{Tuple{}};
  for (const auto& col : def.columns) {
    std::vector<Value> values;
    auto it = dom.pools.find(col.type);
    if (it != dom.pools.end()) values = it->second;
    if (col.nullable) values.push_back(Value::null(col.type));
    std::vector<Tuple> next;
    for (const auto& prefix : candidates) {
      for (const auto& v : values) {
        Tuple t = prefix;
        t.push_back(v);
        next.push_back(std::move(t));
      }
    }
    candidates = std::move(next);
  }
  std::sort(candidates.begin(), candidates.end());
  auto keys = def.keys();
  Subsets out;
  std::vector<Tuple> cur;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    out.push_back(cur);
    if (static_cast<int>(cur.size()) >= max_rows) return;
    for (std::size_t i = start; i < candidates.size(); ++i) {
      bool ok = true;
      for (const auto& key : keys) {
        for (const auto& row : cur) {
          bool same = true;
          for (auto c : key) {
            if (row[c].is_null() || row[c] != candidates[i][c]) {
              same = false;
              break;
            }
          }
          if (same) {
            ok = false;
            break;
          }
        }
        if (!ok) break;
      }
      if (!ok) continue;
      cur.push_back(candidates[i]);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

// The tables whose contents can matter: those the queries read, closed
// under constraints whose left-hand side reads a relevant table.
std::vector<std::size_t> relevant_tables(const Schema& schema, const std::vector<Constraint>& constraints,
                                         const std::vector<const BasicQuery*>& queries) {
  std::set<std::size_t> rel;
  for (const auto* q : queries) {
    auto t = tables_of(*q);
    rel.insert(t.begin(), t.end());
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& c : constraints) {
      if (std::holds_alternative<KeyConstraint>(c)) continue;
      auto [lhs, rhs] = containment_form(schema, c);
      auto lt = tables_of(lhs);
      bool touches = std::any_of(lt.begin(), lt.end(), [&](std::size_t t) { return rel.count(t) > 0; });
      if (!touches) continue;
      for (auto t : tables_of(rhs)) changed |= rel.insert(t).second;
    }
  }
  return {rel.begin(), rel.end()};
}

class Space {
 public:
  Space(const Schema& schema, const DomainSpec& dom, std::vector<std::size_t> tables)
      : schema_(schema), tables_(std::move(tables)) {
    total_ = 1;
    for (auto t : tables_) {
      subsets_.push_back(table_subsets(schema.table(t), dom, dom.rows_for(t)));
      auto n = subsets_.back().size();
      if (total_ > UINT64_MAX / n) total_ = UINT64_MAX;
      else total_ *= n;
    }
  }

  std::uint64_t total() const { return total_; }
  std::size_t dims() const { return tables_.size(); }
  std::size_t radix(std::size_t i) const { return subsets_[i].size(); }
  std::size_t table(std::size_t i) const { return tables_[i]; }
  std::optional<std::size_t> position(std::size_t table) const {
    for (std::size_t i = 0; i < tables_.size(); ++i)
      if (tables_[i] == table) return i;
    return std::nullopt;
  }

  std::uint64_t encode(const std::vector<std::uint32_t>& idx) const {
    std::uint64_t code = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) code = code * radix(i) + idx[i];
    return code;
  }

  Database make(std::uint64_t code) const {
    Database d(schema_.size());
    for (std::size_t i = tables_.size(); i-- > 0;) {
      auto r = radix(i);
      d.set_rows(tables_[i], subsets_[i][code % r]);
      code /= r;
    }
    return d;
  }

  const std::vector<Tuple>& subset(std::size_t pos, std::uint32_t idx) const { return subsets_[pos][idx]; }

 private:
  const Schema& schema_;
  std::vector<std::size_t> tables_;
  std::vector<Subsets> subsets_;
  std::uint64_t total_ = 1;
};

// Result of one query per database, memoized on the subsets of the tables
// the query reads; results are interned to dense ids.
class QueryMemo {
 public:
  QueryMemo(const BasicQuery& q, const Space& space, const Schema& schema) : q_(q), space_(space), scratch_(schema.size()) {
    for (auto t : tables_of(q)) positions_.push_back(*space.position(t));
    std::sort(positions_.begin(), positions_.end());
    if (positions_.size() == 1) direct_.assign(space.radix(positions_[0]), -1);
  }

  std::uint32_t result(const std::vector<std::uint32_t>& idx) {
    if (positions_.size() == 1) {
      auto& slot = direct_[idx[positions_[0]]];
      if (slot < 0) slot = static_cast<std::int64_t>(compute(idx));
      return static_cast<std::uint32_t>(slot);
    }
    std::uint64_t key = 0;
    for (auto p : positions_) key = key * space_.radix(p) + idx[p];
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    auto id = compute(idx);
    memo_.emplace(key, id);
    return id;
  }

  const ResultSet& set(std::uint32_t id) const { return sets_[id]; }
  std::size_t distinct() const { return sets_.size(); }

  bool subset(std::uint32_t a, std::uint32_t b) {
    if (a == b) return true;
    std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | b;
    auto it = subset_memo_.find(key);
    if (it != subset_memo_.end()) return it->second;
    bool r = includes(sets_[a], sets_[b]);
    subset_memo_.emplace(key, r);
    return r;
  }

 private:
  const BasicQuery& q_;
  const Space& space_;
  Database scratch_;
  std::vector<std::size_t> positions_;
  std::vector<std::int64_t> direct_;
  std::unordered_map<std::uint64_t, std::uint32_t> memo_;
  std::map<ResultSet, std::uint32_t> ids_;
  std::vector<ResultSet> sets_;
  std::unordered_map<std::uint64_t, bool> subset_memo_;

  std::uint32_t compute(const std::vector<std::uint32_t>& idx) {
    for (auto p : positions_) scratch_.set_rows(space_.table(p), space_.subset(p, idx[p]));
    ResultSet r = evaluate(q_, scratch_);
    auto [it, inserted] = ids_.emplace(std::move(r), static_cast<std::uint32_t>(sets_.size()));
    if (inserted) sets_.push_back(it->first);
    return it->second;
  }
};

struct VecHash {
  std::size_t operator()(const std::vector<std::uint32_t>& v) const noexcept {
    std::size_t h = v.size();
    for (auto x : v) h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

// Shared enumeration machinery for the decision procedures.
class Enumeration {
 public:
  Enumeration(const Schema& schema, const std::vector<Constraint>& constraints, const DomainSpec& dom,
              const std::vector<const BasicQuery*>& queries)
      : schema_(schema), space_(schema, dom, relevant_tables(schema, constraints, queries)) {
      for (const auto& c : constraints) {
      if (std::holds_alternative<KeyConstraint>(c)) continue;  // enforced per table
      auto [lhs, rhs] = containment_form(schema, c);
      auto lt = tables_of(lhs);
      bool inside = std::all_of(lt.begin(), lt.end(), [&](std::size_t t) { return space_.position(t).has_value(); });
      if (!inside) continue;  // left side reads only empty tables
      owned_.push_back(std::make_unique<BasicQuery>(std::move(lhs)));
      owned_.push_back(std::make_unique<BasicQuery>(std::move(rhs)));
      constraint_memos_.emplace_back(std::make_unique<QueryMemo>(*owned_[owned_.size() - 2], space_, schema),
                                     std::make_unique<QueryMemo>(*owned_.back(), space_, schema));
    }
  }

  const Space& space() const { return space_; }

  std::unique_ptr<QueryMemo> memo(const BasicQuery& q) const { return std::make_unique<QueryMemo>(q, space_, schema_); }

  /// Calls fn(idx) for each constraint-satisfying database; fn returns
  /// false to stop.  Returns false if the space exceeds the cap.
  bool for_each(std::uint64_t cap, std::uint64_t& visited,
                const std::function<bool(const std::vector<std::uint32_t>&)>& fn) {
    if (space_.total() > cap) return false;
    std::vector<std::uint32_t> idx(space_.dims(), 0);
    for (;;) {
      ++visited;
      bool valid = true;
      for (auto& [l, r] : constraint_memos_) {
        if (!contained(*l, *r, idx)) {
          valid = false;
          break;
        }
      }
      if (valid && !fn(idx)) return true;
      std::size_t i = idx.size();
      for (;;) {
        if (i == 0) return true;
        --i;
        if (++idx[i] < space_.radix(i)) break;
        idx[i] = 0;
      }
    }
  }

 private:
  const Schema& schema_;
  Space space_;
  std::vector<std::unique_ptr<BasicQuery>> owned_;
  std::vector<std::pair<std::unique_ptr<QueryMemo>, std::unique_ptr<QueryMemo>>> constraint_memos_;

  static bool contained(QueryMemo& l, QueryMemo& r, const std::vector<std::uint32_t>& idx) {
    auto a = l.result(idx);
    auto b = r.result(idx);
    return includes(l.set(a), r.set(b));
  }
};

struct TraceCheck {
  std::unique_ptr<QueryMemo> memo;
  ResultSet rows;
  bool exact = true;
  std::vector<std::int8_t> cache;  // per result id: -1 unknown

  bool holds(const std::vector<std::uint32_t>& idx) {
    auto id = memo->result(idx);
    if (id >= cache.size()) cache.resize(id + 1, -1);
    if (cache[id] < 0) {
      const auto& r = memo->set(id);
      cache[id] = exact ? (r == rows) : includes(rows, r);
    }
    return cache[id] == 1;
  }
};

std::vector<const BasicQuery*> all_queries(const BasicQuery& q, const std::vector<Observation>& trace,
                                           const std::vector<BasicQuery>& views) {
  std::vector<const BasicQuery*> out{&q};
  for (const auto& o : trace) out.push_back(&o.query);
  for (const auto& v : views) out.push_back(&v);
  return out;
}

ResultSet sorted_rows(const std::vector<Tuple>& rows) {
  ResultSet r = rows;
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  return r;
}

OracleVerdict decide_connected(OracleMode mode, const BasicQuery& q, const std::vector<Observation>& trace,
                               const Schema& schema, const std::vector<Constraint>& constraints,
                               const std::vector<BasicQuery>& views, const DomainSpec& dom) {
  OracleVerdict verdict;
  Enumeration en(schema, constraints, dom, all_queries(q, trace, views));
  if (en.space().total() > dom.max_databases) {
    verdict.kind = OracleVerdict::Kind::Exhausted;
    verdict.note = "domain has " + std::to_string(en.space().total()) + " candidate databases";
    return verdict;
  }

  std::vector<TraceCheck> checks;
  for (const auto& o : trace) {
    TraceCheck c;
    c.memo = en.memo(o.query);
    c.rows = sorted_rows(o.rows);
    c.exact = mode == OracleMode::Compliance && !o.limit_dropped;
    checks.push_back(std::move(c));
  }
  std::vector<std::unique_ptr<QueryMemo>> view_memos;
  for (const auto& v : views) view_memos.push_back(en.memo(v));
  auto qmemo = en.memo(q);

  auto trace_ok = [&](const std::vector<std::uint32_t>& idx) {
    for (auto& c : checks)
      if (!c.holds(idx)) return false;
    return true;
  };
  auto view_key = [&](const std::vector<std::uint32_t>& idx) {
    std::vector<std::uint32_t> key;
    key.reserve(view_memos.size());
    for (auto& m : view_memos) key.push_back(m->result(idx));
    return key;
  };

  if (mode == OracleMode::Compliance) {
    std::unordered_map<std::vector<std::uint32_t>, std::pair<std::uint32_t, std::uint64_t>, VecHash> groups;
    std::optional<std::pair<std::uint64_t, std::uint64_t>> witness;
    en.for_each(dom.max_databases, verdict.databases, [&](const std::vector<std::uint32_t>& idx) {
      if (!trace_ok(idx)) return true;
      auto qid = qmemo->result(idx);
      auto code = en.space().encode(idx);
      auto [it, inserted] = groups.emplace(view_key(idx), std::make_pair(qid, code));
      if (!inserted && it->second.first != qid) {
        witness = std::make_pair(it->second.second, code);
        return false;
      }
      return true;
    });
    if (witness) {
      verdict.kind = OracleVerdict::Kind::NonCompliant;
      verdict.d1 = en.space().make(witness->first);
      verdict.d2 = en.space().make(witness->second);
    }
    return verdict;
  }

  // Strong: collect distinct (views, query) signatures, then look for
  // s1 (trace holds) and s2 with V(s1) ⊆ V(s2) and Q(s1) ⊄ Q(s2).
  std::unordered_map<std::vector<std::uint32_t>, std::uint64_t, VecHash> firsts, seconds;
  en.for_each(dom.max_databases, verdict.databases, [&](const std::vector<std::uint32_t>& idx) {
    auto key = view_key(idx);
    key.push_back(qmemo->result(idx));
    auto code = en.space().encode(idx);
    if (trace_ok(idx)) firsts.emplace(key, code);
    seconds.emplace(std::move(key), code);
    return true;
  });

  std::size_t k = view_memos.size();
  auto size_of = [&](const std::vector<std::uint32_t>& key) {
    std::size_t s = 0;
    for (std::size_t i = 0; i < k; ++i) s += view_memos[i]->set(key[i]).size();
    return s;
  };
  // Per query result, the maximal view vectors among second databases.
  std::map<std::uint32_t, std::vector<std::pair<std::size_t, const std::vector<std::uint32_t>*>>> by_q;
  for (const auto& [key, code] : seconds) by_q[key[k]].emplace_back(size_of(key), &key);
  std::map<std::uint32_t, std::vector<const std::vector<std::uint32_t>*>> antichains;
  auto dominated = [&](const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    for (std::size_t i = 0; i < k; ++i)
      if (!view_memos[i]->subset(a[i], b[i])) return false;
    return true;
  };
  for (auto& [qid, items] : by_q) {
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return *a.second < *b.second;
    });
    auto& chain = antichains[qid];
    for (const auto& [size, key] : items) {
      bool covered = false;
      for (const auto* other : chain) {
        if (dominated(*key, *other)) {
          covered = true;
          break;
        }
      }
      if (!covered) chain.push_back(key);
    }
  }

  std::vector<std::pair<const std::vector<std::uint32_t>*, std::uint64_t>> ordered;
  for (const auto& [key, code] : firsts) ordered.emplace_back(&key, code);
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  for (const auto& [key1, code1] : ordered) {
    auto q1 = (*key1)[k];
    for (const auto& [q2, chain] : antichains) {
      if (qmemo->subset(q1, q2)) continue;
      for (const auto* key2 : chain) {
        if (!dominated(*key1, *key2)) continue;
        verdict.kind = OracleVerdict::Kind::NonCompliant;
        verdict.d1 = en.space().make(code1);
        verdict.d2 = en.space().make(seconds.at(*key2));
        return verdict;
      }
    }
  }
  return verdict;
}

// Some database over the tables `trace` reads on which every observation
// holds; `exact` demands equal results rather than containment.
std::optional<std::optional<Database>> realize(const std::vector<Observation>& trace, const Schema& schema,
                                               const std::vector<Constraint>& constraints, const DomainSpec& dom,
                                               bool exact, std::uint64_t& visited) {
  std::vector<const BasicQuery*> qs;
  for (const auto& o : trace) qs.push_back(&o.query);
  if (qs.empty()) return std::optional<Database>(Database(schema.size()));
  Enumeration en(schema, constraints, dom, qs);
  if (en.space().total() > dom.max_databases) return std::nullopt;
  std::vector<TraceCheck> checks;
  for (const auto& o : trace) {
    TraceCheck c;
    c.memo = en.memo(o.query);
    c.rows = sorted_rows(o.rows);
    c.exact = exact && !o.limit_dropped;
    checks.push_back(std::move(c));
  }
  std::optional<Database> found;
  en.for_each(dom.max_databases, visited, [&](const std::vector<std::uint32_t>& idx) {
    for (auto& c : checks)
      if (!c.holds(idx)) return true;
    found = en.space().make(en.space().encode(idx));
    return false;
  });
  return found;
}

// Tables linked by a query or constraint that reads both.
class TableComponents {
 public:
  explicit TableComponents(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  void link(const std::set<std::size_t>& tables) {
    if (tables.empty()) return;
    auto first = find(*tables.begin());
    for (auto t : tables) parent_[find(t)] = first;
  }
  std::size_t find(std::size_t t) {
    while (parent_[t] != t) t = parent_[t] = parent_[parent_[t]];
    return t;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

OracleVerdict oracle_decide(OracleMode mode, const BasicQuery& q, const std::vector<Observation>& trace,
                            const Schema& schema, const std::vector<Constraint>& constraints,
                            const std::vector<BasicQuery>& views, const DomainSpec& dom) {
  TableComponents comp(schema.size());
  comp.link(tables_of(q));
  for (const auto& o : trace) comp.link(tables_of(o.query));
  for (const auto& v : views) comp.link(tables_of(v));
  for (const auto& c : constraints) {
    if (std::holds_alternative<KeyConstraint>(c)) continue;
    auto [lhs, rhs] = containment_form(schema, c);
    auto t = tables_of(lhs);
    auto r = tables_of(rhs);
    t.insert(r.begin(), r.end());
    comp.link(t);
  }
  auto home = comp.find(*tables_of(q).begin());
  auto inside = [&](const BasicQuery& x) { return comp.find(*tables_of(x).begin()) == home; };

  std::vector<Observation> near, far;
  for (const auto& o : trace) (inside(o.query) ? near : far).push_back(o);
  std::vector<BasicQuery> near_views;
  for (const auto& v : views)
    if (inside(v)) near_views.push_back(v);

  // Observations on unrelated tables only need to be realizable once; the
  // second database can copy those tables from the first.
  std::uint64_t visited = 0;
  std::optional<Database> rest(Database(schema.size()));
  if (!far.empty()) {
    auto r = realize(far, schema, constraints, dom, mode == OracleMode::Compliance, visited);
    if (!r) {
      OracleVerdict v;
      v.kind = OracleVerdict::Kind::Exhausted;
      v.note = "unrelated part of the trace exceeds the enumeration cap";
      return v;
    }
    if (!*r) {
      OracleVerdict v;
      v.databases = visited;
      v.note = "trace is not realizable over the domain";
      return v;
    }
    rest = std::move(*r);
  }
  auto verdict = decide_connected(mode, q, near, schema, constraints, near_views, dom);
  verdict.databases += visited;
  if (verdict.noncompliant()) {
    for (std::size_t t = 0; t < schema.size(); ++t) {
      if (comp.find(t) == home || rest->rows(t).empty()) continue;
      verdict.d1->set_rows(t, rest->rows(t));
      verdict.d2->set_rows(t, rest->rows(t));
    }
  }
  return verdict;
}

OracleVerdict oracle_decide(OracleMode mode, const BasicQuery& q, const std::vector<Observation>& trace,
                            const PolicyBundle& policy, const RequestContext& ctx, const DomainSpec& dom) {
  std::vector<BasicQuery> views;
  for (const auto& v : policy.views()) views.push_back(instantiate_view(v, ctx));
  return oracle_decide(mode, q, trace, policy.schema(), policy.constraints(), views, dom);
}

std::optional<bool> trace_feasible(const std::vector<Observation>& trace, const Schema& schema,
                                   const std::vector<Constraint>& constraints, const DomainSpec& dom) {
  std::uint64_t visited = 0;
  auto r = realize(trace, schema, constraints, dom, false, visited);
  if (!r) return std::nullopt;
  return r->has_value();
}

std::optional<std::vector<Database>> enumerate_databases(const Schema& schema,
                                                         const std::vector<Constraint>& constraints,
                                                         const DomainSpec& dom,
                                                         const std::vector<std::size_t>& tables) {
  std::vector<BasicQuery> probes;
  for (auto t : tables) {
    SelectBlock b;
    b.relations = {Relation{t, ""}};
    for (std::uint32_t c = 0; c < schema.table(t).arity(); ++c) b.projection.push_back(ColumnRef{0, c});
    probes.push_back(BasicQuery{{b}, Certificate::ProjectsKeys});
  }
  std::vector<const BasicQuery*> qs;
  for (const auto& p : probes) qs.push_back(&p);
  Enumeration en(schema, constraints, dom, qs);
  if (en.space().total() > dom.max_databases) return std::nullopt;
  std::vector<Database> out;
  std::uint64_t visited = 0;
  en.for_each(dom.max_databases, visited, [&](const std::vector<std::uint32_t>& idx) {
    out.push_back(en.space().make(en.space().encode(idx)));
    return true;
  });
  return out;
}

}  // namespace viewguard
