#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "viewguard/value.hpp"

namespace viewguard {

struct Column {
  std::string name;
  ColumnType type = ColumnType::Int;
  bool nullable = true;

  friend bool operator==(const Column&, const Column&) = default;
};

struct TableDef {
  std::string name;
  std::vector<Column> columns;
  std::vector<std::size_t> primary_key;
  std::vector<std::vector<std::size_t>> unique_keys;

  std::optional<std::size_t> column_index(std::string_view col) const;
  std::size_t arity() const { return columns.size(); }

  /// Primary key followed by the unique keys.
  std::vector<std::vector<std::size_t>> keys() const;

  friend bool operator==(const TableDef&, const TableDef&) = default;
};

class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<TableDef> tables);

  const std::vector<TableDef>& tables() const { return tables_; }
  const TableDef& table(std::size_t i) const { return tables_.at(i); }
  std::size_t size() const { return tables_.size(); }

  /// Case-insensitive lookup.
  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;  // throws ResolutionError

  friend bool operator==(const Schema&, const Schema&) = default;

 private:
  std::vector<TableDef> tables_;
};

bool iequals(std::string_view a, std::string_view b);

}  // namespace viewguard
