#include "nezha/util/toml.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nezha::toml {

namespace {

[[noreturn]] void fail(int line, const std::string& message) {
  throw std::runtime_error("toml: line " + std::to_string(line) + ": " + message);
}

struct Cursor {
  std::string_view text;
  size_t pos = 0;
  int line = 1;

  bool done() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  char take() {
    char c = text[pos++];
    if (c == '\n') {
      const_cast<Cursor*>(this)->line++;
    }
    return c;
  }

  void skipSpaces() {
    while (!done() && (peek() == ' ' || peek() == '\t')) {
      pos++;
    }
  }

  // Spaces, comments and newlines.
  void skipWhitespaceAndComments() {
    while (!done()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r') {
        pos++;
      } else if (c == '\n') {
        take();
      } else if (c == '#') {
        while (!done() && peek() != '\n') {
          pos++;
        }
      } else {
        break;
      }
    }
  }
};

std::string parseBareKey(Cursor& cur) {
  cur.skipSpaces();
  std::string key;
  while (!cur.done()) {
    char c = cur.peek();
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.') {
      key.push_back(c);
      cur.pos++;
    } else {
      break;
    }
  }
  if (key.empty()) {
    fail(cur.line, "expected a key");
  }
  return key;
}

std::string parseBasicString(Cursor& cur) {
  cur.take();  // opening quote
  std::string out;
  while (true) {
    if (cur.done()) {
      fail(cur.line, "unterminated string");
    }
    char c = cur.take();
    if (c == '"') {
      break;
    }
    if (c == '\\') {
      if (cur.done()) {
        fail(cur.line, "dangling escape");
      }
      char e = cur.take();
      switch (e) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        default: fail(cur.line, std::string("unsupported escape \\") + e);
      }
    } else {
      out.push_back(c);
    }
  }
  return out;
}

Value parseValue(Cursor& cur);

Value parseArray(Cursor& cur) {
  cur.take();  // '['
  Value arr = Value::makeArray();
  while (true) {
    cur.skipWhitespaceAndComments();
    if (cur.done()) {
      fail(cur.line, "unterminated array");
    }
    if (cur.peek() == ']') {
      cur.take();
      break;
    }
    arr.array().push_back(parseValue(cur));
    cur.skipWhitespaceAndComments();
    if (!cur.done() && cur.peek() == ',') {
      cur.take();
    }
  }
  return arr;
}

Value parseNumberOrBool(Cursor& cur) {
  std::string token;
  while (!cur.done()) {
    char c = cur.peek();
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' ||
        c == '.' || c == '_') {
      token.push_back(c);
      cur.pos++;
    } else {
      break;
    }
  }
  if (token == "true") return Value(true);
  if (token == "false") return Value(false);
  std::string cleaned;
  for (char c : token) {
    if (c != '_') cleaned.push_back(c);
  }
  const bool is_float = cleaned.find_first_of(".eE") != std::string::npos &&
                        cleaned.find("0x") == std::string::npos;
  try {
    if (is_float) {
      return Value(std::stod(cleaned));
    }
    return Value(static_cast<std::int64_t>(std::stoll(cleaned, nullptr, 0)));
  } catch (const std::exception&) {
    fail(cur.line, "cannot parse value: " + token);
  }
}

Value parseValue(Cursor& cur) {
  cur.skipSpaces();
  if (cur.done()) {
    fail(cur.line, "expected a value");
  }
  char c = cur.peek();
  if (c == '"') return Value(parseBasicString(cur));
  if (c == '[') return parseArray(cur);
  return parseNumberOrBool(cur);
}

}  // namespace

std::int64_t Value::asInt() const {
  if (kind_ != Kind::Integer) throw std::runtime_error("toml: not an integer");
  return int_;
}

double Value::asDouble() const {
  if (kind_ == Kind::Integer) return static_cast<double>(int_);
  if (kind_ != Kind::Float) throw std::runtime_error("toml: not a number");
  return float_;
}

bool Value::asBool() const {
  if (kind_ != Kind::Boolean) throw std::runtime_error("toml: not a boolean");
  return bool_;
}

const std::string& Value::asString() const {
  if (kind_ != Kind::String) throw std::runtime_error("toml: not a string");
  return string_;
}

const Value::Array& Value::asArray() const {
  if (kind_ != Kind::Array) throw std::runtime_error("toml: not an array");
  return array_;
}

const Value::Table& Value::asTable() const {
  if (kind_ != Kind::Table) throw std::runtime_error("toml: not a table");
  return table_;
}

bool Value::contains(const std::string& key) const {
  return kind_ == Kind::Table && table_.count(key) > 0;
}

const Value& Value::at(const std::string& key) const {
  auto it = table_.find(key);
  if (kind_ != Kind::Table || it == table_.end()) {
    throw std::runtime_error("toml: missing key: " + key);
  }
  return it->second;
}

std::int64_t Value::intOr(const std::string& key, std::int64_t fallback) const {
  return contains(key) ? at(key).asInt() : fallback;
}

double Value::doubleOr(const std::string& key, double fallback) const {
  return contains(key) ? at(key).asDouble() : fallback;
}

bool Value::boolOr(const std::string& key, bool fallback) const {
  return contains(key) ? at(key).asBool() : fallback;
}

std::string Value::stringOr(const std::string& key, const std::string& fallback) const {
  return contains(key) ? at(key).asString() : fallback;
}

Value::Table& Value::table() {
  if (kind_ != Kind::Table) throw std::runtime_error("toml: not a table");
  return table_;
}

Value::Array& Value::array() {
  if (kind_ != Kind::Array) throw std::runtime_error("toml: not an array");
  return array_;
}

Value parse(std::string_view text) {
  Cursor cur{text};
  Value root;
  Value* current = &root;

  while (true) {
    cur.skipWhitespaceAndComments();
    if (cur.done()) {
      break;
    }
    if (cur.peek() == '[') {
      cur.take();
      const bool array_of_tables = !cur.done() && cur.peek() == '[';
      if (array_of_tables) {
        cur.take();
      }
      std::string name = parseBareKey(cur);
      cur.skipSpaces();
      if (cur.done() || cur.take() != ']') {
        fail(cur.line, "expected ]");
      }
      if (array_of_tables) {
        if (cur.done() || cur.take() != ']') {
          fail(cur.line, "expected ]]");
        }
        auto [it, inserted] = root.table().try_emplace(name, Value::makeArray());
        if (!inserted && !it->second.isArray()) {
          fail(cur.line, "key reused with a different shape: " + name);
        }
        it->second.array().emplace_back();
        current = &it->second.array().back();
      } else {
        auto [it, inserted] = root.table().try_emplace(name, Value());
        if (!inserted && !it->second.isTable()) {
          fail(cur.line, "key reused with a different shape: " + name);
        }
        current = &it->second;
      }
      continue;
    }

    std::string key = parseBareKey(cur);
    cur.skipSpaces();
    if (cur.done() || cur.take() != '=') {
      fail(cur.line, "expected = after key " + key);
    }
    Value value = parseValue(cur);
    cur.skipSpaces();
    if (!cur.done() && cur.peek() == '#') {
      while (!cur.done() && cur.peek() != '\n') {
        cur.pos++;
      }
    }
    if (!current->table().try_emplace(key, std::move(value)).second) {
      fail(cur.line, "duplicate key: " + key);
    }
  }
  return root;
}

Value parseFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("toml: cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  return parse(text);
}

}  // namespace nezha::toml
