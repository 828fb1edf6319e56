#include "viewguard/schema.hpp"

#include <cctype>
#include <set>

#include "viewguard/errors.hpp"

namespace viewguard {

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  }
  return true;
}

std::optional<std::size_t> TableDef::column_index(std::string_view col) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (iequals(columns[i].name, col)) return i;
  return std::nullopt;
}

std::vector<std::vector<std::size_t>> TableDef::keys() const {
  std::vector<std::vector<std::size_t>> out;
  out.push_back(primary_key);
  for (const auto& k : unique_keys) out.push_back(k);
  return out;
}

Schema::Schema(std::vector<TableDef> tables) : tables_(std::move(tables)) {
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    auto& t = tables_[i];
    for (std::size_t j = 0; j < i; ++j)
      if (iequals(tables_[j].name, t.name)) throw ResolutionError("duplicate table '" + t.name + "'");
    if (t.columns.empty()) throw ResolutionError("table '" + t.name + "' has no columns");
    for (std::size_t a = 0; a < t.columns.size(); ++a)
      for (std::size_t b = 0; b < a; ++b)
        if (iequals(t.columns[a].name, t.columns[b].name))
          throw ResolutionError("duplicate column '" + t.columns[a].name + "' in table '" + t.name + "'");
    if (t.primary_key.empty()) throw ResolutionError("table '" + t.name + "' has no primary key");
    auto check_key = [&](const std::vector<std::size_t>& key) {
      std::set<std::size_t> seen;
      for (auto c : key) {
        if (c >= t.columns.size()) throw ResolutionError("key column out of range in table '" + t.name + "'");
        if (!seen.insert(c).second) throw ResolutionError("repeated key column in table '" + t.name + "'");
      }
    };
    check_key(t.primary_key);
    for (const auto& k : t.unique_keys) {
      if (k.empty()) throw ResolutionError("empty unique key in table '" + t.name + "'");
      check_key(k);
    }
    for (auto c : t.primary_key) t.columns[c].nullable = false;
  }
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  for (std::size_t i = 0; i < tables_.size(); ++i)
    if (iequals(tables_[i].name, name)) return i;
  return std::nullopt;
}

std::size_t Schema::index_of(std::string_view name) const {
  auto i = find(name);
  if (!i) throw ResolutionError("unknown table '" + std::string(name) + "'");
  return *i;
}

}  // namespace viewguard
