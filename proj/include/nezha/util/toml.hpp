#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace nezha::toml {

// Small TOML reader covering what the rail and scenario files use:
// key/value pairs, [tables], [[arrays of tables]], strings, integers,
// floats, booleans, nested arrays, and # comments.
class Value {
 public:
  enum class Kind { Integer, Float, Boolean, String, Array, Table };

  using Array = std::vector<Value>;
  using Table = std::map<std::string, Value>;

  Value() : kind_(Kind::Table) {}
  explicit Value(std::int64_t v) : kind_(Kind::Integer), int_(v) {}
  explicit Value(double v) : kind_(Kind::Float), float_(v) {}
  explicit Value(bool v) : kind_(Kind::Boolean), bool_(v) {}
  explicit Value(std::string v) : kind_(Kind::String), string_(std::move(v)) {}

  Kind kind() const { return kind_; }
  bool isTable() const { return kind_ == Kind::Table; }
  bool isArray() const { return kind_ == Kind::Array; }

  std::int64_t asInt() const;
  double asDouble() const;  // integers promote
  bool asBool() const;
  const std::string& asString() const;
  const Array& asArray() const;
  const Table& asTable() const;

  bool contains(const std::string& key) const;
  const Value& at(const std::string& key) const;

  std::int64_t intOr(const std::string& key, std::int64_t fallback) const;
  double doubleOr(const std::string& key, double fallback) const;
  bool boolOr(const std::string& key, bool fallback) const;
  std::string stringOr(const std::string& key, const std::string& fallback) const;

  // Mutation used by the parser.
  Table& table();
  Array& array();
  static Value makeArray() {
    Value v;
    v.kind_ = Kind::Array;
    return v;
  }

 private:
  Kind kind_;
  std::int64_t int_ = 0;
  double float_ = 0.0;
  bool bool_ = false;
  std::string string_;
  Array array_;
  Table table_;
};

// Both throw std::runtime_error with a line number on malformed input.
Value parse(std::string_view text);
Value parseFile(const std::string& path);

}  // namespace nezha::toml
