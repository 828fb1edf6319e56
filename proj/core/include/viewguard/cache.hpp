#pragma once

#include <cstddef>
#include <filesystem>
#include <list>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "viewguard/template.hpp"

namespace viewguard {

struct CacheHit {
  DecisionTemplate entry;
  Valuation valuation;
};

/// Verified templates grouped by the shape signature of their conclusion.
/// Safe for concurrent lookups and inserts.
class DecisionCache {
 public:
  /// 0 means unbounded; otherwise least recently matched entries are
  /// evicted beyond `max_entries`.
  explicit DecisionCache(std::size_t max_entries = 0) : max_entries_(max_entries) {}

  /// Throws UnverifiedTemplate.  Returns false when an equal entry exists.
  bool insert(const DecisionTemplate& t);
  std::optional<CacheHit> match(const BasicQuery& q, const Trace& trace, const RequestContext& ctx);

  std::size_t size() const;
  void clear();
  std::vector<DecisionTemplate> entries() const;

  nlohmann::json to_json(const Schema& schema) const;
  /// Entries not marked verified are rejected with UnverifiedTemplate.
  void load_json(const nlohmann::json& j, const PolicyBundle& policy);
  void dump(const std::filesystem::path& path, const Schema& schema) const;
  void load(const std::filesystem::path& path, const PolicyBundle& policy);

 private:
  using Slot = std::list<DecisionTemplate>::iterator;

  void touch(Slot s);

  std::size_t max_entries_;
  mutable std::shared_mutex mu_;
  std::list<DecisionTemplate> order_;  // most recently used first
  std::map<std::string, std::vector<Slot>> by_signature_;
};

}  // namespace viewguard
