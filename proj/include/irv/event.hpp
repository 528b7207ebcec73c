#pragma once

// Events, parameter names and parameter resolution against a program state.

#include <algorithm>
#include <cctype>
#include <compare>
#include <memory>
#include <optional>
#include <set>

#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "irv/assembler.hpp"
#include "irv/values.hpp"
#include "irv/vm.hpp"

namespace irv {

enum class EventType { FunctionCall, ValueWrite, ValueRead, UpdateExpr };

inline const char* to_string(EventType t) {
  switch (t) {
    case EventType::FunctionCall: return "call";
    case EventType::ValueWrite: return "write";
    case EventType::ValueRead: return "read";
    case EventType::UpdateExpr: return "update";
  }
  return "?";
}

class EventError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// p ::= name | *p | &p | arg<i> | ret
struct ParamName {
  enum class Kind { Variable, Deref, AddrOf, Arg, Ret };

  Kind kind = Kind::Variable;
  std::string var;              // Variable
  unsigned index = 0;           // Arg
  std::vector<ParamName> inner; // Deref / AddrOf: exactly one element

  static ParamName variable(std::string n) { return {Kind::Variable, std::move(n), 0, {}}; }
  static ParamName deref(ParamName p) { return {Kind::Deref, "", 0, {std::move(p)}}; }
  static ParamName addr_of(ParamName p) { return {Kind::AddrOf, "", 0, {std::move(p)}}; }
  static ParamName arg(unsigned i) { return {Kind::Arg, "", i, {}}; }
  static ParamName ret() { return {Kind::Ret, "", 0, {}}; }

  int depth() const { return inner.empty() ? 1 : 1 + inner.front().depth(); }

  /// Innermost variable name, if the parameter bottoms out in one.
  std::optional<std::string> base_variable() const {
    if (kind == Kind::Variable) return var;
    if (!inner.empty()) return inner.front().base_variable();
    return std::nullopt;
  }

  bool operator==(const ParamName&) const = default;
  std::strong_ordering operator<=>(const ParamName& o) const;
};

inline std::strong_ordering ParamName::operator<=>(const ParamName& o) const {
  if (auto c = kind <=> o.kind; c != 0) return c;
  if (auto c = var <=> o.var; c != 0) return c;
  if (auto c = index <=> o.index; c != 0) return c;
  return std::lexicographical_compare_three_way(inner.begin(), inner.end(), o.inner.begin(), o.inner.end());
}

inline std::string to_string(const ParamName& p) {
  switch (p.kind) {
    case ParamName::Kind::Variable: return p.var;
    case ParamName::Kind::Deref: return "*" + to_string(p.inner.front());
    case ParamName::Kind::AddrOf: return "&" + to_string(p.inner.front());
    case ParamName::Kind::Arg: return "arg" + std::to_string(p.index);
    case ParamName::Kind::Ret: return "ret";
  }
  return "?";
}

inline ParamName parse_param_name(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.empty()) throw EventError("empty parameter name");
  if (s.front() == '*') return ParamName::deref(parse_param_name(s.substr(1)));
  if (s.front() == '&') return ParamName::addr_of(parse_param_name(s.substr(1)));
  if (!(std::isalpha(static_cast<unsigned char>(s.front())) || s.front() == '_'))
    throw EventError("invalid parameter name '" + std::string(s) + "'");
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
      throw EventError("invalid parameter name '" + std::string(s) + "'");
  if (s == "ret") return ParamName::ret();
  if (s.size() > 3 && s.substr(0, 3) == "arg" &&
      std::all_of(s.begin() + 3, s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    return ParamName::arg(static_cast<unsigned>(std::stoul(std::string(s.substr(3)))));
  return ParamName::variable(std::string(s));
}

struct SymbolicEvent {
  EventType etype = EventType::FunctionCall;
  std::string name;
  std::vector<ParamName> params;
  bool is_before = true;

  bool operator==(const SymbolicEvent&) const = default;
  std::strong_ordering operator<=>(const SymbolicEvent& o) const {
    if (auto c = etype <=> o.etype; c != 0) return c;
    if (auto c = name <=> o.name; c != 0) return c;
    if (auto c = params <=> o.params; c != 0) return c;
    return is_before <=> o.is_before;
  }
};

struct RuntimeEvent {
  EventType etype = EventType::FunctionCall;
  std::string name;
  std::vector<ParamName> params;
  std::vector<Word> instances;
  bool is_before = true;

  /// params[k] -> instances[k], keyed by the printed parameter name.
  Environment values() const {
    Environment env;
    for (std::size_t k = 0; k < params.size() && k < instances.size(); ++k)
      env.emplace(to_string(params[k]), instances[k]);
    return env;
  }

  bool operator==(const RuntimeEvent&) const = default;
};

inline std::string to_string(const SymbolicEvent& e) {
  std::string s = std::string(e.is_before ? "before " : "after ") + to_string(e.etype) + " ";
  s += e.etype == EventType::UpdateExpr ? "\"" + e.name + "\"" : e.name;
  s += "(";
  for (std::size_t k = 0; k < e.params.size(); ++k) s += (k ? ", " : "") + to_string(e.params[k]);
  return s + ")";
}

inline std::string to_string(const RuntimeEvent& e) {
  std::string s = std::string(e.is_before ? "before " : "after ") + to_string(e.etype) + " ";
  s += e.etype == EventType::UpdateExpr ? "\"" + e.name + "\"" : e.name;
  s += "(";
  for (std::size_t k = 0; k < e.params.size(); ++k) {
    s += (k ? ", " : "") + to_string(e.params[k]);
    if (k < e.instances.size()) s += "=" + std::to_string(e.instances[k]);
  }
  return s + ")";
}

inline SymbolicEvent symbolic(const RuntimeEvent& e) { return {e.etype, e.name, e.params, e.is_before}; }

/// Instances are ignored.
inline bool matches(const RuntimeEvent& run, const SymbolicEvent& sym) {
  return run.name == sym.name && run.etype == sym.etype && run.is_before == sym.is_before &&
         run.params == sym.params;
}

// ---------------------------------------------------------------------------
// Update expressions: the integer expressions an UpdateExpr event watches.
// ---------------------------------------------------------------------------

class UpdateExpression {
 public:
  explicit UpdateExpression(std::string_view text) : text_(text) {
    pos_ = 0;
    root_ = parse_cmp();
    skip_ws();
    if (pos_ != text_.size()) throw EventError("unexpected text in update expression '" + text_ + "'");
  }

  const std::string& text() const { return text_; }

  /// Variables occurring in the expression, in order of first occurrence.
  std::vector<std::string> variables() const {
    std::vector<std::string> out;
    collect(*root_, out);
    return out;
  }

  template <class Lookup>
  Word evaluate(Lookup&& lookup) const {
    return eval(*root_, lookup);
  }

 private:
  struct Node {
    char op = 0;  // 0 literal, 'v' variable, else operator: + - * < l(<=) > g(>=) = !
    Word value = 0;
    std::string var;
    std::unique_ptr<Node> l, r;
  };
  using NodePtr = std::shared_ptr<Node>;

  static void collect(const Node& n, std::vector<std::string>& out) {
    if (n.op == 'v') {
      if (std::find(out.begin(), out.end(), n.var) == out.end()) out.push_back(n.var);
      return;
    }
    if (n.l) collect(*n.l, out);
    if (n.r) collect(*n.r, out);
  }

  template <class Lookup>
  static Word eval(const Node& n, Lookup& lookup) {
    auto u = [](Word w) { return static_cast<std::uint64_t>(w); };
    switch (n.op) {
      case 0: return n.value;
      case 'v': return lookup(n.var);
      default: break;
    }
    Word a = eval(*n.l, lookup), b = eval(*n.r, lookup);
    switch (n.op) {
      case '+': return static_cast<Word>(u(a) + u(b));
      case '-': return static_cast<Word>(u(a) - u(b));
      case '*': return static_cast<Word>(u(a) * u(b));
      case '<': return a < b;
      case 'l': return a <= b;
      case '>': return a > b;
      case 'g': return a >= b;
      case '=': return a == b;
      case '!': return a != b;
    }
    return 0;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool eat(std::string_view s) {
    skip_ws();
    if (text_.compare(pos_, s.size(), s) == 0) {
      pos_ += s.size();
      return true;
    }
    return false;
  }
  std::unique_ptr<Node> bin(char op, std::unique_ptr<Node> l, std::unique_ptr<Node> r) {
    auto n = std::make_unique<Node>();
    n->op = op;
    n->l = std::move(l);
    n->r = std::move(r);
    return n;
  }
  std::unique_ptr<Node> parse_cmp() {
    auto l = parse_add();
    if (eat("<=")) return bin('l', std::move(l), parse_add());
    if (eat(">=")) return bin('g', std::move(l), parse_add());
    if (eat("==")) return bin('=', std::move(l), parse_add());
    if (eat("!=")) return bin('!', std::move(l), parse_add());
    if (eat("<")) return bin('<', std::move(l), parse_add());
    if (eat(">")) return bin('>', std::move(l), parse_add());
    return l;
  }
  std::unique_ptr<Node> parse_add() {
    auto l = parse_mul();
    for (;;) {
      if (eat("+")) l = bin('+', std::move(l), parse_mul());
      else if (eat("-")) l = bin('-', std::move(l), parse_mul());
      else return l;
    }
  }
  std::unique_ptr<Node> parse_mul() {
    auto l = parse_atom();
    while (eat("*")) l = bin('*', std::move(l), parse_atom());
    return l;
  }
  std::unique_ptr<Node> parse_atom() {
    skip_ws();
    if (eat("(")) {
      auto e = parse_cmp();
      if (!eat(")")) throw EventError("missing ')' in update expression '" + text_ + "'");
      return e;
    }
    auto n = std::make_unique<Node>();
    bool neg = eat("-");
    skip_ws();
    std::size_t b = pos_;
    if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      n->value = std::stoll(text_.substr(b, pos_ - b));
      if (neg) n->value = -n->value;
      return n;
    }
    if (neg) throw EventError("expected number after '-' in update expression '" + text_ + "'");
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    if (b == pos_) throw EventError("expected operand in update expression '" + text_ + "'");
    n->op = 'v';
    n->var = text_.substr(b, pos_ - b);
    return n;
  }

  std::string text_;
  std::size_t pos_ = 0;
  std::shared_ptr<Node> root_;
};

// ---------------------------------------------------------------------------
// Parameter resolution
// ---------------------------------------------------------------------------

/// What is known about the point where an event is generated.
struct EventContext {
  EventType etype = EventType::FunctionCall;
  bool is_before = true;
  const FunctionInfo* function = nullptr;  // FunctionCall events
  std::optional<Word> old_value;           // value events: cell or expression value before
  std::optional<Word> new_value;           // ... and after the instruction
};

inline constexpr int kMaxParamDepth = 2;

namespace event_detail {

inline Address data_cell(Word w, const ProgramImage& img) {
  if (w < 0 || static_cast<std::uint64_t>(w) >= img.layout.memory_size ||
      img.layout.code.contains(Address{static_cast<std::uint32_t>(w)}))
    throw EventError("pointer " + std::to_string(w) + " does not designate a data cell");
  return Address{static_cast<std::uint32_t>(w)};
}

// Address denoted by a parameter used as an lvalue.
inline Address lvalue(const ParamName& p, const Memory& m, const ProgramImage& img, const EventContext& ctx,
                      std::size_t position) {
  switch (p.kind) {
    case ParamName::Kind::Variable: {
      if (ctx.etype == EventType::FunctionCall && ctx.function && position < ctx.function->nparams) {
        // Named call parameters are the values passed at call time, kept in the frame.
        Word sp = m.read(img.layout.sp);
        Word slot = sp - static_cast<Word>(ctx.function->nparams) + static_cast<Word>(position);
        return data_cell(slot, img);
      }
      auto it = img.symbols.find(p.var);
      if (it == img.symbols.end() || img.layout.code.contains(it->second))
        throw EventError("unknown variable '" + p.var + "'");
      return it->second;
    }
    case ParamName::Kind::Deref:
      return data_cell(m.read(lvalue(p.inner.front(), m, img, ctx, position)), img);
    case ParamName::Kind::Arg:
      if (ctx.etype != EventType::FunctionCall)
        throw EventError("'" + to_string(p) + "' is only available in call events");
      if (p.index >= kMaxArgs) throw EventError("'" + to_string(p) + "' exceeds the argument cells");
      return img.layout.arg(p.index);
    default:
      throw EventError("'" + to_string(p) + "' does not designate a memory cell");
  }
}

}  // namespace event_detail

/// Value of parameter `p` (at index `position` of its event) in the given state.
inline Word resolve_param(const ParamName& p, const Memory& memory, const ProgramImage& img,
                          const EventContext& ctx, std::size_t position = 0) {
  if (p.depth() > kMaxParamDepth)
    throw EventError("parameter '" + to_string(p) + "' is nested too deeply");
  switch (p.kind) {
    case ParamName::Kind::Variable:
    case ParamName::Kind::Deref:
    case ParamName::Kind::Arg:
      return memory.read(event_detail::lvalue(p, memory, img, ctx, position));
    case ParamName::Kind::AddrOf:
      return event_detail::lvalue(p.inner.front(), memory, img, ctx, position).as_word();
    case ParamName::Kind::Ret:
      if (ctx.etype == EventType::FunctionCall) {
        if (ctx.is_before) throw EventError("'ret' is not available before a call");
        return memory.read(img.layout.retval);
      }
      if (ctx.is_before) {
        if (!ctx.old_value) throw EventError("'ret' has no value here");
        return *ctx.old_value;
      }
      if (!ctx.new_value) throw EventError("'ret' has no value here");
      return *ctx.new_value;
  }
  throw EventError("unresolvable parameter");
}

inline RuntimeEvent instantiate(const SymbolicEvent& e, const Memory& memory, const ProgramImage& img,
                                const EventContext& ctx) {
  RuntimeEvent r{e.etype, e.name, e.params, {}, e.is_before};
  for (std::size_t k = 0; k < e.params.size(); ++k)
    r.instances.push_back(resolve_param(e.params[k], memory, img, ctx, k));
  return r;
}

}  // namespace irv
