#include "viewguard/engine.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "viewguard/errors.hpp"
#include "viewguard/smt/encoder.hpp"
#include "viewguard/sql/frontend.hpp"

namespace viewguard {

std::string_view to_string(DenyReason r) {
  switch (r) {
    case DenyReason::NonCompliant: return "NonCompliant";
    case DenyReason::Unknown: return "Unknown";
    case DenyReason::Unsupported: return "Unsupported";
  }
  return "Unknown";
}

SessionStats& SessionStats::operator+=(const SessionStats& o) {
  queries += o.queries;
  allows += o.allows;
  denies += o.denies;
  fast_accepts += o.fast_accepts;
  solver_calls += o.solver_calls;
  template_solver_calls += o.template_solver_calls;
  cache_hits += o.cache_hits;
  cache_misses += o.cache_misses;
  templates_cached += o.templates_cached;
  template_failures += o.template_failures;
  return *this;
}

bool fast_accept(const BasicQuery& q, const PolicyBundle& policy) {
  std::map<std::size_t, std::vector<std::set<std::uint32_t>>> whole_table;
  for (const auto& v : policy.views()) {
    const auto& vq = v.query;
    if (vq.is_union() || vq.blocks.empty()) continue;
    const auto& b = vq.blocks.front();
    if (b.relations.size() != 1 || !b.where.is_true()) continue;
    std::set<std::uint32_t> cols;
    for (auto ref : b.projection) cols.insert(ref.col);
    whole_table[b.relations.front().table].push_back(std::move(cols));
  }
  for (const auto& block : q.blocks) {
    std::vector<std::set<std::uint32_t>> used(block.relations.size());
    auto note = [&](const Term& t) {
      if (const auto* c = std::get_if<ColumnRef>(&t)) used[c->rel].insert(c->col);
    };
    for (auto ref : block.projection) note(ref);
    std::function<void(const Predicate&)> walk = [&](const Predicate& p) {
      for (const auto& t : p.terms) note(t);
      for (const auto& c : p.children) walk(c);
    };
    walk(block.where);
    for (std::size_t r = 0; r < block.relations.size(); ++r) {
      auto it = whole_table.find(block.relations[r].table);
      if (it == whole_table.end()) return false;
      bool covered = std::any_of(it->second.begin(), it->second.end(), [&](const auto& cols) {
        return std::includes(cols.begin(), cols.end(), used[r].begin(), used[r].end());
      });
      if (!covered) return false;
    }
  }
  return !q.blocks.empty();
}

namespace {

bool numeric(ColumnType t) { return t == ColumnType::Int || t == ColumnType::Timestamp; }

bool same_value(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return false;
  if (a.type() == b.type()) return a == b;
  return numeric(a.type()) && numeric(b.type()) && a.int_value() == b.int_value();
}

}  // namespace

Trace prune_trace(const Trace& t, const BasicQuery& q, const Schema& schema, std::size_t threshold) {
  std::map<std::size_t, std::size_t> per_origin;
  for (const auto& e : t) ++per_origin[e.origin];
  std::vector<Value> constants;
  for (const Term* leaf : leaf_terms(q))
    if (const auto* v = std::get_if<Value>(leaf); v && !v->is_null()) constants.push_back(*v);

  std::vector<bool> keep(t.size(), true);
  for (auto [origin, count] : per_origin) {
    if (count <= threshold) continue;
    std::set<std::size_t> chosen;
    std::set<std::size_t> seen_constants;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto& e = t[i];
      if (e.origin != origin) continue;
      keep[i] = false;
      if (e.query.blocks.empty()) continue;
      const auto& block = e.query.blocks.front();
      for (std::size_t k = 0; k < block.projection.size() && k < e.tuple.size(); ++k) {
        auto ref = block.projection[k];
        const auto& def = schema.table(block.relations[ref.rel].table);
        const auto& pk = def.primary_key;
        if (std::find(pk.begin(), pk.end(), ref.col) == pk.end()) continue;
        for (std::size_t c = 0; c < constants.size(); ++c) {
          if (!seen_constants.count(c) && same_value(constants[c], e.tuple[k])) {
            seen_constants.insert(c);
            chosen.insert(i);
          }
        }
      }
    }
    for (auto i : chosen) keep[i] = true;
  }
  Trace out;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (keep[i]) out.push_back(t[i]);
  return out;
}

Engine::Engine(std::shared_ptr<const PolicyBundle> policy, EngineOptions options,
               std::shared_ptr<DecisionCache> cache)
    : policy_(std::move(policy)), options_(std::move(options)), cache_(std::move(cache)) {
  if (!cache_) cache_ = std::make_shared<DecisionCache>();
}

Session Engine::begin_request(RequestContext ctx) const {
  if (!ctx.find(kNowParam)) {
    auto now = std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch());
    ctx.set(kNowParam, Value::of_timestamp(now.count()));
  }
  validate_context(*policy_, ctx);
  RequestContext typed;
  for (const auto& d : policy_->context_decl()) typed.set(d.name, ctx.at(d.name).coerce(d.type));
  return Session(*this, std::move(typed));
}

void Session::require_live() const {
  if (!live_) throw SessionClosed("session has ended");
}

Decision Session::check_query(const std::string& sql, const std::vector<Value>& params,
                              const std::vector<Tuple>& rows) {
  require_live();
  sql::RewriteResult rr;
  try {
    rr = engine_->policy().parse_query(sql, params);
  } catch (const Error& e) {
    ++stats_.queries;
    ++stats_.denies;
    auto d = Decision::deny(DenyReason::Unsupported, "parse", e.what());
    d.logged_only = engine_->options().log_only;
    return d;
  }
  return check_basic(rr.query, rows, rr.limit_dropped, rr.output_changed);
}

Decision Session::check_basic(const BasicQuery& q, const std::vector<Tuple>& rows, bool limit_dropped,
                              bool output_changed) {
  require_live();
  ++stats_.queries;
  Decision d = decide(q);
  if (d.allowed()) {
    ++stats_.allows;
  } else {
    ++stats_.denies;
    d.logged_only = engine_->options().log_only;
  }
  if ((d.allowed() || d.logged_only) && !output_changed) {
    auto arity = q.arity();
    auto types = output_types(engine_->policy().schema(), q);
    Observation obs{q, {}, limit_dropped};
    for (const auto& row : rows) {
      if (row.size() != arity) throw ParseError("observed row has the wrong arity");
      Tuple typed;
      for (std::size_t k = 0; k < arity; ++k) typed.push_back(row[k].coerce(types[k]));
      obs.rows.push_back(typed);
      trace_.push_back(TraceEntry{q, std::move(typed), observations_.size(), limit_dropped});
    }
    observations_.push_back(std::move(obs));
  }
  return d;
}

bool Session::cached(const BasicQuery& q, Decision& d) {
  auto* cache = engine_->cache();
  if (!cache) return false;
  if (cache->match(q, trace_, ctx_)) {
    ++stats_.cache_hits;
    ++d.cache_hits;
    return true;
  }
  ++stats_.cache_misses;
  return false;
}

SolverOutcome Session::prove(const BasicQuery& q, Decision& d) {
  const auto& opts = engine_->options();
  const auto& policy = engine_->policy();
  auto pruned = prune_trace(trace_, q, policy.schema(), opts.prune_threshold);
  ++stats_.solver_calls;
  ++d.solver_calls;
  auto outcome = solve(smt::encode_strong_compliance(policy, ctx_, pruned, q), opts.solvers, opts.check_budget);
  if (!outcome.unsat() || !(engine_->cache() || opts.generate_templates)) return outcome;
  TemplateReport report;
  try {
    auto t = generate_template(q, pruned, ctx_, policy, opts.templates, &report);
    if (auto* cache = engine_->cache(); cache && cache->insert(t)) ++stats_.templates_cached;
    d.templates.push_back(std::move(t));
  } catch (const Error&) {
    ++stats_.template_failures;
  }
  stats_.template_solver_calls += report.solver_calls;
  return outcome;
}

Decision Session::decide(const BasicQuery& q) {
  const auto& policy = engine_->policy();
  if (fast_accept(q, policy)) {
    ++stats_.fast_accepts;
    return Decision::allow("fast_accept");
  }
  Decision d = Decision::allow("cache");
  if (cached(q, d)) return d;

  try {
    std::vector<BasicQuery> parts;
    try {
      parts = sql::split_in(q);
    } catch (const NotSplittable&) {
    }
    if (parts.size() > 1) {
      bool all = true;
      for (const auto& part : parts) {
        if (cached(part, d)) continue;
        if (!prove(part, d).unsat()) {
          all = false;
          break;
        }
      }
      if (all) {
        d.path = "split";
        return d;
      }
    }
    auto outcome = prove(q, d);
    d.path = "solver";
    if (outcome.unsat()) return d;
    d.kind = Decision::Kind::Deny;
    if (outcome.sat()) {
      d.reason = DenyReason::NonCompliant;
      d.detail = "the views and trace do not determine the query";
    } else {
      d.reason = DenyReason::Unknown;
      d.detail = outcome.reason;
    }
  } catch (const SolverSpawnError& e) {
    d.kind = Decision::Kind::Deny;
    d.reason = DenyReason::Unknown;
    d.path = "solver";
    d.detail = e.what();
  }
  return d;
}

SessionStats Session::end_request() {
  require_live();
  live_ = false;
  trace_.clear();
  observations_.clear();
  return stats_;
}

}  // namespace viewguard
