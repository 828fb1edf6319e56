#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include "viewguard/cache.hpp"
#include "viewguard/policy.hpp"
#include "viewguard/solver.hpp"
#include "viewguard/template.hpp"
#include "viewguard/trace.hpp"

namespace viewguard {

enum class DenyReason { NonCompliant, Unknown, Unsupported };
std::string_view to_string(DenyReason r);

struct Decision {
  enum class Kind { Allow, Deny };
  Kind kind = Kind::Allow;
  DenyReason reason = DenyReason::NonCompliant;
  /// fast_accept, cache, split, solver or parse.
  std::string path;
  std::string detail;
  /// Denied, but let through because the engine runs in log-only mode.
  bool logged_only = false;
  int solver_calls = 0;
  int cache_hits = 0;
  std::vector<DecisionTemplate> templates;  // generated while deciding

  bool allowed() const { return kind == Kind::Allow; }
  static Decision allow(std::string path) {
    Decision d;
    d.path = std::move(path);
    return d;
  }
  static Decision deny(DenyReason r, std::string path, std::string detail = {}) {
    Decision d;
    d.kind = Kind::Deny;
    d.reason = r;
    d.path = std::move(path);
    d.detail = std::move(detail);
    return d;
  }
};

struct SessionStats {
  int queries = 0;
  int allows = 0;
  int denies = 0;
  int fast_accepts = 0;
  int solver_calls = 0;  // compliance checks only
  int template_solver_calls = 0;
  int cache_hits = 0;
  int cache_misses = 0;
  int templates_cached = 0;
  int template_failures = 0;

  SessionStats& operator+=(const SessionStats& o);
  friend bool operator==(const SessionStats&, const SessionStats&) = default;
};

struct EngineOptions {
  std::vector<SolverConfig> solvers = default_solvers();
  std::chrono::milliseconds check_budget{2000};
  TemplateSettings templates;
  bool use_cache = true;
  /// Generate templates even when no cache is attached (for inspection).
  bool generate_templates = true;
  bool log_only = false;
  /// Origins with more rows than this are pruned before solving.
  std::size_t prune_threshold = 10;
};

/// True when a whole-table view of every relation covers the columns q
/// reads from it.
bool fast_accept(const BasicQuery& q, const PolicyBundle& policy);

/// Keeps, for each origin with more than `threshold` rows, only the first
/// row carrying each primary-key value that q mentions as a constant.
Trace prune_trace(const Trace& t, const BasicQuery& q, const Schema& schema, std::size_t threshold = 10);

class Engine;

/// One request.  Not thread-safe; distinct sessions may run concurrently.
class Session {
 public:
  /// `rows` are the rows the database returned for the query.
  Decision check_query(const std::string& sql, const std::vector<Value>& params, const std::vector<Tuple>& rows);
  Decision check_basic(const BasicQuery& q, const std::vector<Tuple>& rows, bool limit_dropped = false,
                       bool output_changed = false);
  SessionStats end_request();

  const Trace& trace() const { return trace_; }
  const std::vector<Observation>& observations() const { return observations_; }
  const RequestContext& context() const { return ctx_; }
  const SessionStats& stats() const { return stats_; }
  bool live() const { return live_; }

 private:
  friend class Engine;
  Session(const Engine& engine, RequestContext ctx) : engine_(&engine), ctx_(std::move(ctx)) {}

  Decision decide(const BasicQuery& q);
  /// Solver check of q against the pruned trace; generates a template on Unsat.
  SolverOutcome prove(const BasicQuery& q, Decision& d);
  bool cached(const BasicQuery& q, Decision& d);
  void require_live() const;

  const Engine* engine_;
  RequestContext ctx_;
  Trace trace_;
  std::vector<Observation> observations_;
  SessionStats stats_;
  bool live_ = true;
};

class Engine {
 public:
  Engine(std::shared_ptr<const PolicyBundle> policy, EngineOptions options = {},
         std::shared_ptr<DecisionCache> cache = std::make_shared<DecisionCache>());

  /// Throws UnboundParameter.  NOW defaults to the current time.
  Session begin_request(RequestContext ctx) const;

  const PolicyBundle& policy() const { return *policy_; }
  const EngineOptions& options() const { return options_; }
  DecisionCache* cache() const { return options_.use_cache ? cache_.get() : nullptr; }

 private:
  std::shared_ptr<const PolicyBundle> policy_;
  EngineOptions options_;
  std::shared_ptr<DecisionCache> cache_;
};

}  // namespace viewguard
