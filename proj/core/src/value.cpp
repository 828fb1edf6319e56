#include "viewguard/value.hpp"

#include <functional>

#include "viewguard/errors.hpp"

namespace viewguard {

std::string_view to_string(ColumnType t) {
  switch (t) {
    case ColumnType::Int: return "int";
    case ColumnType::String: return "string";
    case ColumnType::Bool: return "bool";
    case ColumnType::Timestamp: return "timestamp";
  }
  return "int";
}

ColumnType column_type_from_string(std::string_view s) {
  if (s == "int" || s == "integer") return ColumnType::Int;
  if (s == "string" || s == "text") return ColumnType::String;
  if (s == "bool" || s == "boolean") return ColumnType::Bool;
  if (s == "timestamp") return ColumnType::Timestamp;
  throw ParseError("unknown column type '" + std::string(s) + "'");
}

Value Value::null(ColumnType t) {
  Value v;
  v.type_ = t;
  return v;
}

Value Value::of_int(std::int64_t x) {
  Value v;
  v.type_ = ColumnType::Int;
  v.null_ = false;
  v.int_ = x;
  return v;
}

Value Value::of_string(std::string x) {
  Value v;
  v.type_ = ColumnType::String;
  v.null_ = false;
  v.str_ = std::move(x);
  return v;
}

Value Value::of_bool(bool x) {
  Value v;
  v.type_ = ColumnType::Bool;
  v.null_ = false;
  v.int_ = x ? 1 : 0;
  return v;
}

Value Value::of_timestamp(std::int64_t x) {
  Value v;
  v.type_ = ColumnType::Timestamp;
  v.null_ = false;
  v.int_ = x;
  return v;
}

Value Value::coerce(ColumnType t) const {
  if (t == type_) return *this;
  if (null_) return null(t);
  bool numeric_src = type_ == ColumnType::Int || type_ == ColumnType::Timestamp;
  if (t == ColumnType::Timestamp && numeric_src) return of_timestamp(int_);
  if (t == ColumnType::Int && numeric_src) return of_int(int_);
  if (t == ColumnType::Bool && type_ == ColumnType::Int && (int_ == 0 || int_ == 1)) return of_bool(int_ == 1);
  throw ResolutionError("cannot use " + to_sql() + " as a " + std::string(to_string(t)) + " value");
}

bool Value::sql_less(const Value& other) const {
  if (type_ == ColumnType::String) return str_ < other.str_;
  return int_ < other.int_;
}

std::string Value::to_sql() const {
  if (null_) return "NULL";
  switch (type_) {
    case ColumnType::Int:
    case ColumnType::Timestamp: return std::to_string(int_);
    case ColumnType::Bool: return int_ ? "TRUE" : "FALSE";
    case ColumnType::String: {
      std::string out = "'";
      for (char c : str_) {
        if (c == '\'') out += '\'';
        out += c;
      }
      return out + "'";
    }
  }
  return "NULL";
}

std::string Value::to_display() const {
  if (!null_ && type_ == ColumnType::String) return "\"" + str_ + "\"";
  return to_sql();
}

nlohmann::json Value::to_json() const {
  if (null_) return nullptr;
  switch (type_) {
    case ColumnType::Int:
    case ColumnType::Timestamp: return int_;
    case ColumnType::Bool: return int_ != 0;
    case ColumnType::String: return str_;
  }
  return nullptr;
}

Value Value::from_json(const nlohmann::json& j, ColumnType t) {
  if (j.is_null()) return null(t);
  switch (t) {
    case ColumnType::Int:
      if (j.is_number_integer()) return of_int(j.get<std::int64_t>());
      break;
    case ColumnType::Timestamp:
      if (j.is_number_integer()) return of_timestamp(j.get<std::int64_t>());
      break;
    case ColumnType::Bool:
      if (j.is_boolean()) return of_bool(j.get<bool>());
      if (j.is_number_integer()) return of_bool(j.get<std::int64_t>() != 0);
      break;
    case ColumnType::String:
      if (j.is_string()) return of_string(j.get<std::string>());
      break;
  }
  throw ParseError("value " + j.dump() + " does not fit type " + std::string(to_string(t)));
}

std::string tuple_to_string(const Tuple& t) {
  std::string out = "(";
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) out += ", ";
    out += t[i].to_display();
  }
  return out + ")";
}

std::size_t ValueHash::operator()(const Value& v) const noexcept {
  std::size_t h = static_cast<std::size_t>(v.type()) * 31 + (v.is_null() ? 7 : 0);
  h ^= std::hash<std::int64_t>{}(v.int_value()) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  if (v.type() == ColumnType::String) h ^= std::hash<std::string>{}(v.string_value()) + (h << 6) + (h >> 2);
  return h;
}

std::size_t TupleHash::operator()(const Tuple& t) const noexcept {
  std::size_t h = t.size();
  ValueHash vh;
  for (const auto& v : t) h ^= vh(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

}  // namespace viewguard
