#pragma once

// Values stored in monitor and scenario environments.

#include <map>
#include <stdexcept>
#include <string>
#include <variant>

#include "irv/vm.hpp"

namespace irv {

using Value = std::variant<Word, bool>;
using Environment = std::map<std::string, Value>;

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string to_string(const Value& v) {
  if (const bool* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  return std::to_string(std::get<Word>(v));
}

/// "N = 0, maxSize = 0" in key order.
inline std::string to_string(const Environment& env) {
  std::string out;
  for (const auto& [k, v] : env) {
    if (!out.empty()) out += ", ";
    out += k + " = " + to_string(v);
  }
  return out;
}

}  // namespace irv
