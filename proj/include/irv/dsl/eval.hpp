#pragma once

// Interpreter for guard, update and scenario expressions.

#include <string>
#include <variant>
#include <vector>

#include "irv/dsl/ast.hpp"
#include "irv/monitor.hpp"
#include "irv/values.hpp"

namespace irv::dsl {

struct NoneValue {
  bool operator==(const NoneValue&) const = default;
};

/// Everything an expression can produce. Only Word and bool can be stored.
using ExprValue = std::variant<Word, bool, std::string, NoneValue>;

inline std::string show(const ExprValue& v) {
  if (auto* w = std::get_if<Word>(&v)) return std::to_string(*w);
  if (auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  if (auto* s = std::get_if<std::string>(&v)) return *s;
  return "none";
}

inline const char* type_name(const ExprValue& v) {
  switch (v.index()) {
    case 0: return "int";
    case 1: return "bool";
    case 2: return "string";
    default: return "none";
  }
}

inline std::string where(const Expr& e) {
  return "line " + std::to_string(e.line) + ", column " + std::to_string(e.col) + ": ";
}

/// Identifiers are looked up in `event_values` first, then in `env`.
inline ExprValue evaluate(const Expr& e, const Environment& event_values, const Environment& env) {
  auto u = [](Word w) { return static_cast<std::uint64_t>(w); };
  auto as_int = [&](const ExprValue& v, const Expr& at) {
    if (auto* w = std::get_if<Word>(&v)) return *w;
    throw EvalError(where(at) + "integer expected, got " + type_name(v));
  };
  auto as_bool = [&](const ExprValue& v, const Expr& at) {
    if (auto* b = std::get_if<bool>(&v)) return *b;
    throw EvalError(where(at) + "boolean expected, got " + type_name(v));
  };
  switch (e.kind) {
    case Expr::Kind::Int: return static_cast<Word>(e.int_value);
    case Expr::Kind::Bool: return e.bool_value;
    case Expr::Kind::None: return NoneValue{};
    case Expr::Kind::Str: return e.text;
    case Expr::Kind::Ident: {
      if (auto it = event_values.find(e.text); it != event_values.end())
        return std::visit([](auto x) -> ExprValue { return x; }, it->second);
      if (auto it = env.find(e.text); it != env.end())
        return std::visit([](auto x) -> ExprValue { return x; }, it->second);
      throw EvalError(where(e) + "unknown identifier '" + e.text + "'");
    }
    case Expr::Kind::Unary: {
      ExprValue v = evaluate(*e.args[0], event_values, env);
      if (e.text == "not") return !as_bool(v, e);
      return static_cast<Word>(0 - u(as_int(v, e)));
    }
    case Expr::Kind::Call: {
      if (e.text == "str" && e.args.size() == 1) return show(evaluate(*e.args[0], event_values, env));
      throw EvalError(where(e) + "unknown function '" + e.text + "'");
    }
    case Expr::Kind::Binary: break;
  }
  const std::string& op = e.text;
  if (op == "and" || op == "or") {
    bool l = as_bool(evaluate(*e.args[0], event_values, env), e);
    if (op == "and" && !l) return false;
    if (op == "or" && l) return true;
    return as_bool(evaluate(*e.args[1], event_values, env), e);
  }
  ExprValue l = evaluate(*e.args[0], event_values, env);
  ExprValue r = evaluate(*e.args[1], event_values, env);
  if (op == "==" || op == "!=") {
    if (l.index() != r.index())
      throw EvalError(where(e) + "cannot compare " + type_name(l) + " with " + type_name(r));
    return (l == r) == (op == "==");
  }
  if (op == "+" && (std::holds_alternative<std::string>(l) || std::holds_alternative<std::string>(r))) {
    if (!std::holds_alternative<std::string>(l) || !std::holds_alternative<std::string>(r))
      throw EvalError(where(e) + "cannot add " + type_name(l) + " and " + type_name(r) + "; use str()");
    return std::get<std::string>(l) + std::get<std::string>(r);
  }
  Word a = as_int(l, e), b = as_int(r, e);
  if (op == "+") return static_cast<Word>(u(a) + u(b));
  if (op == "-") return static_cast<Word>(u(a) - u(b));
  if (op == "*") return static_cast<Word>(u(a) * u(b));
  if (op == "<") return a < b;
  if (op == "<=") return a <= b;
  if (op == ">") return a > b;
  if (op == ">=") return a >= b;
  throw EvalError(where(e) + "unknown operator '" + op + "'");
}

inline Value storable(const ExprValue& v, const Expr& at) {
  if (auto* w = std::get_if<Word>(&v)) return *w;
  if (auto* b = std::get_if<bool>(&v)) return *b;
  throw EvalError(where(at) + "a " + std::string(type_name(v)) + " cannot be stored in a variable");
}

inline bool has_return(const Block& b) {
  for (const auto& s : b)
    if (s.kind == Stmt::Kind::Return) return true;
  return false;
}

/// Absent guard passes; `return none` means the transition is not relevant.
inline GuardResult eval_guard(const Block* guard, const Environment& event_values, const Environment& env) {
  if (!guard) return GuardResult::Pass;
  for (const auto& s : *guard) {
    if (s.kind != Stmt::Kind::Return) throw EvalError("guards may only contain 'return'");
    ExprValue v = evaluate(*s.expr, event_values, env);
    if (std::holds_alternative<NoneValue>(v)) return GuardResult::NotRelevant;
    if (auto* b = std::get_if<bool>(&v)) return *b ? GuardResult::Pass : GuardResult::Fail;
    throw EvalError(where(*s.expr) + "guard must return a boolean or none, got " + type_name(v));
  }
  return GuardResult::Pass;
}

struct BlockResult {
  Environment env;
  std::vector<std::string> log;
};

/// Runs assignments and prints; event values are read-only.
inline BlockResult eval_block(const Block& stmts, const Environment& event_values, const Environment& env) {
  BlockResult r{env, {}};
  for (const auto& s : stmts) {
    switch (s.kind) {
      case Stmt::Kind::Assign:
        if (event_values.count(s.target))
          throw EvalError("line " + std::to_string(s.line) + ": cannot assign event parameter '" + s.target + "'");
        r.env[s.target] = storable(evaluate(*s.expr, event_values, r.env), *s.expr);
        break;
      case Stmt::Kind::Print:
        r.log.push_back(show(evaluate(*s.expr, event_values, r.env)));
        break;
      case Stmt::Kind::Return:
        throw EvalError("line " + std::to_string(s.line) + ": 'return' outside a guard");
    }
  }
  return r;
}

}  // namespace irv::dsl
