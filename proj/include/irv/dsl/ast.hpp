#pragma once

// Syntax trees for properties and scenarios.

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace irv::dsl {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { Int, Bool, None, Str, Ident, Unary, Binary, Call };

  Kind kind = Kind::Int;
  long long int_value = 0;
  bool bool_value = false;
  std::string text;  // Str payload, Ident name, operator, or callee
  std::vector<ExprPtr> args;
  int line = 0;
  int col = 0;

  friend bool operator==(const Expr& a, const Expr& b) {
    if (a.kind != b.kind || a.int_value != b.int_value || a.bool_value != b.bool_value || a.text != b.text ||
        a.args.size() != b.args.size())
      return false;
    for (std::size_t k = 0; k < a.args.size(); ++k)
      if (!(*a.args[k] == *b.args[k])) return false;
    return true;
  }
};

inline bool same_expr(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  return *a == *b;
}

struct Stmt {
  enum class Kind { Assign, Print, Return };

  Kind kind = Kind::Assign;
  std::string target;
  ExprPtr expr;
  int line = 0;
  int col = 0;

  friend bool operator==(const Stmt& a, const Stmt& b) {
    return a.kind == b.kind && a.target == b.target && same_expr(a.expr, b.expr);
  }
};

using Block = std::vector<Stmt>;

// ---- properties -------------------------------------------------------------

struct ParamDecl {
  std::string name;                  // as written, e.g. "queue", "*p", "arg0"
  std::optional<std::string> type;   // ignored beyond parsing
  std::optional<std::string> slice;  // explicit binding "p -> s"
  bool operator==(const ParamDecl&) const = default;
};

enum class EventKind { Call, Write, Read, Update };

struct Outcome {
  std::optional<Block> block;
  std::optional<std::string> action;
  std::string destination;
  int line = 0;
  int col = 0;
  friend bool operator==(const Outcome& a, const Outcome& b) {
    return a.block == b.block && a.action == b.action && a.destination == b.destination;
  }
};

struct TransitionDecl {
  bool before = true;
  bool when_explicit = false;  // "before"/"after" written out
  EventKind kind = EventKind::Call;
  std::string event_name;
  std::vector<ParamDecl> params;
  std::optional<Block> guard_block;
  std::optional<Outcome> success;
  std::optional<Outcome> failure;
  int line = 0;
  int col = 0;

  friend bool operator==(const TransitionDecl& a, const TransitionDecl& b) {
    return a.before == b.before && a.kind == b.kind && a.event_name == b.event_name && a.params == b.params &&
           a.guard_block == b.guard_block && a.success == b.success && a.failure == b.failure;
  }
};

struct StateDecl {
  std::string name;
  bool accepting = true;
  std::optional<bool> verdict_written;  // how the verdict was spelled, if at all
  std::optional<std::string> action;
  std::vector<TransitionDecl> transitions;
  int line = 0;
  int col = 0;

  friend bool operator==(const StateDecl& a, const StateDecl& b) {
    return a.name == b.name && a.accepting == b.accepting && a.action == b.action &&
           a.transitions == b.transitions;
  }
};

struct PropertyAst {
  std::vector<std::string> slice_on;
  Block init_block;
  std::vector<StateDecl> states;

  bool operator==(const PropertyAst&) const = default;
};

// ---- scenarios --------------------------------------------------------------

struct Action;
using ActionList = std::vector<Action>;

struct Action {
  enum class Kind {
    Assign,
    Checkpoint,
    If,
    While,
    Restore,
    SetBreakpoint,
    UnsetBreakpoint,
    SetWatchpoint,
    UnsetWatchpoint,
    Suspend,
    Print
  };

  Kind kind = Kind::Suspend;
  std::string target;  // assigned variable, breakpoint target, watched variable
  std::string mode;    // r, w, rw
  ExprPtr expr;        // assignment value, condition, restored checkpoint, printed value
  ActionList then_branch;
  ActionList else_branch;
  int line = 0;
  int col = 0;

  friend bool operator==(const Action& a, const Action& b) {
    return a.kind == b.kind && a.target == b.target && a.mode == b.mode && same_expr(a.expr, b.expr) &&
           a.then_branch == b.then_branch && a.else_branch == b.else_branch;
  }
};

struct Reaction {
  bool entering = true;
  std::string state;
  ActionList actions;
  int line = 0;
  int col = 0;

  friend bool operator==(const Reaction& a, const Reaction& b) {
    return a.entering == b.entering && a.state == b.state && a.actions == b.actions;
  }
};

struct ScenarioAst {
  ActionList init;  // assignments only
  std::vector<Reaction> reactions;

  bool operator==(const ScenarioAst&) const = default;
};

}  // namespace irv::dsl
