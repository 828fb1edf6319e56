#include "viewguard/cache.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>

#include "viewguard/errors.hpp"

namespace viewguard {

bool DecisionCache::insert(const DecisionTemplate& t) {
  if (!t.verified) throw UnverifiedTemplate("refusing to cache an unverified template");
  auto canon = canonicalize(t);
  std::unique_lock lock(mu_);
  auto& bucket = by_signature_[canon.signature()];
  for (auto s : bucket)
    if (*s == canon) return false;
  order_.push_front(std::move(canon));
  bucket.push_back(order_.begin());
  if (max_entries_ > 0 && order_.size() > max_entries_) {
    auto victim = std::prev(order_.end());
    auto& slots = by_signature_[victim->signature()];
    slots.erase(std::find(slots.begin(), slots.end(), victim));
    if (slots.empty()) by_signature_.erase(victim->signature());
    order_.erase(victim);
  }
  return true;
}

void DecisionCache::touch(Slot s) { order_.splice(order_.begin(), order_, s); }

std::optional<CacheHit> DecisionCache::match(const BasicQuery& q, const Trace& trace, const RequestContext& ctx) {
  auto sig = shape_signature(q);
  std::optional<CacheHit> hit;
  Slot found{};
  {
    std::shared_lock lock(mu_);
    auto it = by_signature_.find(sig);
    if (it == by_signature_.end()) return std::nullopt;
    for (auto s : it->second) {
      if (auto nu = match_template(*s, q, trace, ctx)) {
        hit = CacheHit{*s, std::move(*nu)};
        found = s;
        break;
      }
    }
  }
  if (hit && max_entries_ > 0) {
    std::unique_lock lock(mu_);
    // The entry may have been evicted between the two locks.
    for (auto s : by_signature_[sig])
      if (s == found) {
        touch(s);
        break;
      }
  }
  return hit;
}

std::size_t DecisionCache::size() const {
  std::shared_lock lock(mu_);
  return order_.size();
}

void DecisionCache::clear() {
  std::unique_lock lock(mu_);
  order_.clear();
  by_signature_.clear();
}

std::vector<DecisionTemplate> DecisionCache::entries() const {
  std::shared_lock lock(mu_);
  return {order_.begin(), order_.end()};
}

nlohmann::json DecisionCache::to_json(const Schema& schema) const {
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["entries"] = nlohmann::json::array();
  for (const auto& t : entries()) j["entries"].push_back(template_to_json(schema, t));
  return j;
}

void DecisionCache::load_json(const nlohmann::json& j, const PolicyBundle& policy) {
  if (!j.is_object() || j.value("format_version", 0) != kFormatVersion || !j.contains("entries"))
    throw ParseError("not a decision cache file");
  std::vector<DecisionTemplate> loaded;
  for (const auto& e : j.at("entries")) {
    loaded.push_back(template_from_json(e, policy));
    if (!loaded.back().verified) throw UnverifiedTemplate("cache entry is not verified");
  }
  // Entries are stored most recently used first.
  for (auto it = loaded.rbegin(); it != loaded.rend(); ++it) insert(*it);
}

void DecisionCache::dump(const std::filesystem::path& path, const Schema& schema) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(schema).dump(2) << "\n";
}

void DecisionCache::load(const std::filesystem::path& path, const PolicyBundle& policy) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  load_json(j, policy);
}

}  // namespace viewguard
