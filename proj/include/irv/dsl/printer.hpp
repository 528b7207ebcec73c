#pragma once

// Canonical (brace form) pretty printers. Printing then parsing yields an
// equal syntax tree.

#include <string>

#include "irv/dsl/ast.hpp"

namespace irv::dsl {

namespace print_detail {

inline int precedence(const Expr& e) {
  if (e.kind == Expr::Kind::Binary) {
    const std::string& op = e.text;
    if (op == "or") return 1;
    if (op == "and") return 2;
    if (op == "*") return 6;
    if (op == "+" || op == "-") return 5;
    return 4;
  }
  if (e.kind == Expr::Kind::Unary) return e.text == "not" ? 3 : 7;
  if (e.kind == Expr::Kind::Int && e.int_value < 0) return 7;
  return 8;
}

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    if (c == '\t') {
      out += "\\t";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

}  // namespace print_detail

inline std::string print_expr(const Expr& e, bool scenario = false) {
  using print_detail::precedence;
  switch (e.kind) {
    case Expr::Kind::Int: return std::to_string(e.int_value);
    case Expr::Kind::Bool: return e.bool_value ? "true" : "false";
    case Expr::Kind::None: return "none";
    case Expr::Kind::Str: return print_detail::quote(e.text);
    case Expr::Kind::Ident: return e.text;
    case Expr::Kind::Call: {
      std::string s = e.text + "(";
      for (std::size_t k = 0; k < e.args.size(); ++k) s += (k ? ", " : "") + print_expr(*e.args[k], scenario);
      return s + ")";
    }
    case Expr::Kind::Unary: {
      std::string inner = print_expr(*e.args[0], scenario);
      if (precedence(*e.args[0]) < precedence(e) ||
          (e.text == "-" && e.args[0]->kind == Expr::Kind::Int))
        inner = "(" + inner + ")";
      return e.text == "not" ? "not " + inner : "-" + inner;
    }
    case Expr::Kind::Binary: {
      int p = precedence(e);
      std::string l = print_expr(*e.args[0], scenario);
      std::string r = print_expr(*e.args[1], scenario);
      bool cmp = p == 4;
      if (precedence(*e.args[0]) < p || (cmp && precedence(*e.args[0]) == p)) l = "(" + l + ")";
      if (precedence(*e.args[1]) <= p) r = "(" + r + ")";
      std::string op = (scenario && e.text == "==") ? "=" : e.text;
      return l + " " + op + " " + r;
    }
  }
  return "";
}

inline std::string print_block(const Block& b, const std::string& indent) {
  std::string s = "{\n";
  for (const auto& st : b) {
    s += indent + "    ";
    switch (st.kind) {
      case Stmt::Kind::Assign: s += st.target + " = " + print_expr(*st.expr); break;
      case Stmt::Kind::Print: s += "print(" + print_expr(*st.expr) + ")"; break;
      case Stmt::Kind::Return: s += "return " + print_expr(*st.expr); break;
    }
    s += "\n";
  }
  return s + indent + "}";
}

inline std::string print_property(const PropertyAst& ast) {
  std::string s;
  if (!ast.slice_on.empty()) {
    s += "slice on ";
    for (std::size_t k = 0; k < ast.slice_on.size(); ++k) s += (k ? ", " : "") + ast.slice_on[k];
    s += "\n\n";
  }
  if (!ast.init_block.empty()) s += "initialization " + print_block(ast.init_block, "") + "\n\n";
  for (std::size_t si = 0; si < ast.states.size(); ++si) {
    const auto& st = ast.states[si];
    s += "state " + st.name + (st.accepting ? " accepting" : " non-accepting");
    if (st.action) s += " " + *st.action + "()";
    if (!st.transitions.empty()) {
      s += " {\n";
      for (const auto& t : st.transitions) {
        s += "    transition {\n        ";
        s += t.before ? "before " : "after ";
        switch (t.kind) {
          case EventKind::Call: s += "event " + t.event_name; break;
          case EventKind::Write: s += "write " + t.event_name; break;
          case EventKind::Read: s += "read " + t.event_name; break;
          case EventKind::Update: s += "update " + print_detail::quote(t.event_name); break;
        }
        s += "(";
        for (std::size_t k = 0; k < t.params.size(); ++k) {
          const auto& p = t.params[k];
          s += (k ? ", " : "") + p.name;
          if (p.type) s += " : " + *p.type;
          if (p.slice) s += " -> " + *p.slice;
        }
        s += ")";
        if (t.guard_block) s += " " + print_block(*t.guard_block, "        ");
        s += "\n";
        for (const auto* o : {&t.success, &t.failure}) {
          if (!*o) continue;
          s += std::string("        ") + (o == &t.success ? "success" : "failure");
          if ((*o)->block) s += " " + print_block(*(*o)->block, "        ");
          if ((*o)->action) s += " " + *(*o)->action + "()";
          s += " " + (*o)->destination + "\n";
        }
        s += "    }\n";
      }
      s += "}";
    }
    s += "\n";
    if (si + 1 < ast.states.size()) s += "\n";
  }
  return s;
}

inline std::string print_actions(const ActionList& actions, const std::string& indent);

inline std::string print_action(const Action& a, const std::string& indent) {
  std::string s = indent;
  switch (a.kind) {
    case Action::Kind::Assign: return s + a.target + " := " + print_expr(*a.expr, true) + "\n";
    case Action::Kind::Checkpoint: return s + a.target + " := checkpoint\n";
    case Action::Kind::If:
      s += "if " + print_expr(*a.expr, true) + " then\n" + print_actions(a.then_branch, indent + "    ");
      if (!a.else_branch.empty()) s += indent + "else\n" + print_actions(a.else_branch, indent + "    ");
      return s + indent + "end\n";
    case Action::Kind::While:
      return s + "while " + print_expr(*a.expr, true) + " do\n" + print_actions(a.then_branch, indent + "    ") +
             indent + "end\n";
    case Action::Kind::Restore: return s + "restore-checkpoint " + print_expr(*a.expr, true) + "\n";
    case Action::Kind::SetBreakpoint: return s + "setBreakpoint " + a.target + "\n";
    case Action::Kind::UnsetBreakpoint: return s + "unsetBreakpoint " + a.target + "\n";
    case Action::Kind::SetWatchpoint: return s + "setWatchpoint " + a.target + " " + a.mode + "\n";
    case Action::Kind::UnsetWatchpoint: return s + "unsetWatchpoint " + a.target + "\n";
    case Action::Kind::Suspend: return s + "suspend\n";
    case Action::Kind::Print: return s + "print(" + print_expr(*a.expr, true) + ")\n";
  }
  return s;
}

inline std::string print_actions(const ActionList& actions, const std::string& indent) {
  std::string s;
  for (const auto& a : actions) s += print_action(a, indent);
  return s;
}

inline std::string print_scenario(const ScenarioAst& ast) {
  std::string s = print_actions(ast.init, "");
  for (const auto& r : ast.reactions) {
    if (!s.empty()) s += "\n";
    s += std::string("on ") + (r.entering ? "entering" : "leaving") + " state " + r.state + " do\n";
    s += print_actions(r.actions, "    ");
    s += "end\n";
  }
  return s;
}

}  // namespace irv::dsl
