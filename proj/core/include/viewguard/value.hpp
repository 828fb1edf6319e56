#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace viewguard {

enum class ColumnType : std::uint8_t { Int, String, Bool, Timestamp };

std::string_view to_string(ColumnType t);
ColumnType column_type_from_string(std::string_view s);

/// A typed SQL constant.  NULL carries its type so that it lands in the
/// right sort when encoded.
class Value {
 public:
  Value() = default;

  static Value null(ColumnType t);
  static Value of_int(std::int64_t v);
  static Value of_string(std::string v);
  static Value of_bool(bool v);
  static Value of_timestamp(std::int64_t v);

  ColumnType type() const { return type_; }
  bool is_null() const { return null_; }
  std::int64_t int_value() const { return int_; }
  const std::string& string_value() const { return str_; }

  /// Same value re-tagged with another type; used when an untyped literal
  /// is resolved against a column.  Throws ResolutionError when the
  /// representation does not fit.
  Value coerce(ColumnType t) const;

  /// SQL ordering between two non-NULL values of the same type.
  bool sql_less(const Value& other) const;

  std::string to_sql() const;
  std::string to_display() const;

  nlohmann::json to_json() const;
  static Value from_json(const nlohmann::json& j, ColumnType t);

  friend bool operator==(const Value&, const Value&) = default;
  friend auto operator<=>(const Value&, const Value&) = default;

 private:
  ColumnType type_ = ColumnType::Int;
  bool null_ = true;
  std::int64_t int_ = 0;
  std::string str_;
};

using Tuple = std::vector<Value>;

std::string tuple_to_string(const Tuple& t);

struct ValueHash {
  std::size_t operator()(const Value& v) const noexcept;
};

struct TupleHash {
  std::size_t operator()(const Tuple& t) const noexcept;
};

}  // namespace viewguard
