#pragma once

// Recursive-descent parsers for property (*.prop) and scenario (*.sc) files.
// docs/grammar.md has the full grammar.

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "irv/dsl/ast.hpp"
#include "irv/dsl/lexer.hpp"

namespace irv::dsl {

namespace parse_detail {

class Parser {
 public:
  // In scenario mode '=' inside expressions is equality and ':=' assigns.
  Parser(std::vector<Token> toks, bool scenario) : toks_(std::move(toks)), scenario_(scenario) {}

  // ---- token plumbing -------------------------------------------------------

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  Token next() {
    Token t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  [[noreturn]] void fail(const Token& t, const std::string& msg) const { throw SyntaxError(t.line, t.col, msg); }
  [[noreturn]] void unexpected(const std::string& wanted) const {
    fail(peek(), "expected " + wanted + ", found " + describe(peek()));
  }
  void skip_newlines() {
    while (peek().kind == Token::Newline || peek().punct(";")) next();
  }
  bool accept_punct(std::string_view p) {
    if (peek().punct(p)) {
      next();
      return true;
    }
    return false;
  }
  bool accept_ident(std::string_view w) {
    if (peek().ident(w)) {
      next();
      return true;
    }
    return false;
  }
  void expect_punct(std::string_view p) {
    if (!accept_punct(p)) unexpected("'" + std::string(p) + "'");
  }
  void expect_ident(std::string_view w) {
    if (!accept_ident(w)) unexpected("'" + std::string(w) + "'");
  }
  Token identifier(const std::string& what) {
    if (peek().kind != Token::Ident) unexpected(what);
    return next();
  }
  // Skips newlines only when the next meaningful token is `p`.
  bool accept_punct_after_newlines(std::string_view p) {
    std::size_t k = 0;
    while (peek(k).kind == Token::Newline) ++k;
    if (peek(k).punct(p)) {
      pos_ += k;
      next();
      return true;
    }
    return false;
  }
  bool at_end() const { return peek().kind == Token::End; }

  // ---- expressions --------------------------------------------------------

  ExprPtr expression() { return parse_or(); }

  ExprPtr make(Expr::Kind k, const Token& at) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->line = at.line;
    e->col = at.col;
    return e;
  }
  ExprPtr binary(const Token& op, std::string name, ExprPtr l, ExprPtr r) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::Binary;
    e->text = std::move(name);
    e->args = {std::move(l), std::move(r)};
    e->line = op.line;
    e->col = op.col;
    return e;
  }

  ExprPtr parse_or() {
    auto l = parse_and();
    while (peek().ident("or")) {
      Token op = next();
      l = binary(op, "or", l, parse_and());
    }
    return l;
  }
  ExprPtr parse_and() {
    auto l = parse_not();
    while (peek().ident("and")) {
      Token op = next();
      l = binary(op, "and", l, parse_not());
    }
    return l;
  }
  ExprPtr parse_not() {
    if (peek().ident("not")) {
      Token op = next();
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::Unary;
      e->text = "not";
      e->args = {parse_not()};
      e->line = op.line;
      e->col = op.col;
      return e;
    }
    return parse_cmp();
  }
  ExprPtr parse_cmp() {
    auto l = parse_add();
    const Token& t = peek();
    if (t.kind == Token::Punct) {
      std::string op = t.text;
      if (op == "=" && scenario_) op = "==";
      if (op == "==" || op == "!=" || op == "<" || op == "<=" || op == ">" || op == ">=") {
        Token o = next();
        return binary(o, op, l, parse_add());
      }
    }
    return l;
  }
  ExprPtr parse_add() {
    auto l = parse_mul();
    while (peek().punct("+") || peek().punct("-")) {
      Token op = next();
      l = binary(op, op.text, l, parse_mul());
    }
    return l;
  }
  ExprPtr parse_mul() {
    auto l = parse_unary();
    while (peek().punct("*")) {
      Token op = next();
      l = binary(op, "*", l, parse_unary());
    }
    return l;
  }
  ExprPtr parse_unary() {
    if (peek().punct("-")) {
      Token op = next();
      if (peek().kind == Token::Int) {
        Token n = next();
        auto e = make(Expr::Kind::Int, op);
        std::const_pointer_cast<Expr>(e)->int_value = -n.value;
        return e;
      }
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::Unary;
      e->text = "-";
      e->args = {parse_unary()};
      e->line = op.line;
      e->col = op.col;
      return e;
    }
    return parse_atom();
  }
  ExprPtr parse_atom() {
    Token t = peek();
    if (t.kind == Token::Int) {
      next();
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::Int;
      e->int_value = t.value;
      e->line = t.line;
      e->col = t.col;
      return e;
    }
    if (t.kind == Token::String) {
      next();
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::Str;
      e->text = t.text;
      e->line = t.line;
      e->col = t.col;
      return e;
    }
    if (t.punct("(")) {
      next();
      auto e = expression();
      expect_punct(")");
      return e;
    }
    if (t.kind == Token::Ident) {
      next();
      auto e = std::make_shared<Expr>();
      e->line = t.line;
      e->col = t.col;
      if (t.text == "true" || t.text == "True" || t.text == "false" || t.text == "False") {
        e->kind = Expr::Kind::Bool;
        e->bool_value = t.text[0] == 't' || t.text[0] == 'T';
        return e;
      }
      if (t.text == "none" || t.text == "None") {
        e->kind = Expr::Kind::None;
        return e;
      }
      if (peek().punct("(")) {
        next();
        e->kind = Expr::Kind::Call;
        e->text = t.text;
        if (!peek().punct(")")) {
          e->args.push_back(expression());
          while (accept_punct(",")) e->args.push_back(expression());
        }
        expect_punct(")");
        return e;
      }
      e->kind = Expr::Kind::Ident;
      e->text = t.text;
      return e;
    }
    unexpected("an expression");
  }

  // ---- property statements -------------------------------------------------

  Block block() {
    expect_punct("{");
    Block out;
    skip_newlines();
    while (!peek().punct("}")) {
      if (at_end()) unexpected("'}'");
      out.push_back(statement());
      if (!peek().punct("}")) {
        if (peek().kind != Token::Newline && !peek().punct(";")) unexpected("end of statement");
      }
      skip_newlines();
    }
    next();
    return out;
  }

  Stmt statement() {
    Token t = peek();
    Stmt s;
    s.line = t.line;
    s.col = t.col;
    if (t.ident("return")) {
      next();
      s.kind = Stmt::Kind::Return;
      s.expr = expression();
      return s;
    }
    if (t.ident("print") && peek(1).punct("(")) {
      next();
      s.kind = Stmt::Kind::Print;
      expect_punct("(");
      s.expr = expression();
      expect_punct(")");
      return s;
    }
    if (t.kind == Token::Ident && peek(1).punct("=")) {
      next();
      next();
      s.kind = Stmt::Kind::Assign;
      s.target = t.text;
      s.expr = expression();
      return s;
    }
    unexpected("a statement");
  }

  PropertyAst property() {
    PropertyAst ast;
    skip_newlines();
    if (peek().ident("slice")) {
      next();
      expect_ident("on");
      ast.slice_on.push_back(identifier("a slice parameter").text);
      while (accept_punct(",")) ast.slice_on.push_back(identifier("a slice parameter").text);
      skip_newlines();
    }
    if (peek().ident("initialization")) {
      next();
      skip_newlines();
      ast.init_block = block();
      skip_newlines();
    }
    while (!at_end()) {
      if (!peek().ident("state")) unexpected("'state'");
      ast.states.push_back(state());
      skip_newlines();
    }
    check_property(ast);
    return ast;
  }

  StateDecl state() {
    Token kw = next();
    StateDecl s;
    s.line = kw.line;
    s.col = kw.col;
    s.name = identifier("a state name").text;
    if (peek().ident("accepting")) {
      next();
      s.accepting = true;
      s.verdict_written = true;
    } else if (peek().ident("non") && peek(1).punct("-") && peek(2).ident("accepting")) {
      next();
      next();
      next();
      s.accepting = false;
      s.verdict_written = false;
    } else if (peek().ident("non_accepting")) {
      next();
      s.accepting = false;
      s.verdict_written = false;
    }
    if (peek().kind == Token::Ident && peek(1).punct("(")) {
      s.action = next().text;
      expect_punct("(");
      expect_punct(")");
    }
    if (accept_punct_after_newlines("{")) {
      skip_newlines();
      while (!peek().punct("}")) {
        if (!peek().ident("transition")) unexpected("'transition' or '}'");
        s.transitions.push_back(transition());
        skip_newlines();
      }
      next();
    }
    return s;
  }

  TransitionDecl transition() {
    Token kw = next();
    TransitionDecl t;
    t.line = kw.line;
    t.col = kw.col;
    skip_newlines();
    expect_punct("{");
    skip_newlines();
    if (peek().ident("before") || peek().ident("after")) {
      t.before = next().text == "before";
      t.when_explicit = true;
    }
    Token k = identifier("'event', 'write', 'read' or 'update'");
    if (k.text == "event") t.kind = EventKind::Call;
    else if (k.text == "write") t.kind = EventKind::Write;
    else if (k.text == "read") t.kind = EventKind::Read;
    else if (k.text == "update") t.kind = EventKind::Update;
    else fail(k, "expected 'event', 'write', 'read' or 'update', found " + describe(k));
    if (t.kind == EventKind::Update) {
      if (peek().kind != Token::String) unexpected("a quoted expression");
      t.event_name = next().text;
    } else {
      t.event_name = identifier("an event name").text;
    }
    expect_punct("(");
    if (!peek().punct(")")) {
      t.params.push_back(param());
      while (accept_punct(",")) t.params.push_back(param());
    }
    expect_punct(")");
    if (accept_punct_after_newlines("{")) {
      --pos_;
      t.guard_block = block();
    }
    skip_newlines();
    if (peek().ident("success")) {
      t.success = outcome();
      skip_newlines();
    }
    if (peek().ident("failure")) {
      t.failure = outcome();
      skip_newlines();
    }
    if (!t.success && !t.failure) unexpected("'success' or 'failure'");
    expect_punct("}");
    return t;
  }

  ParamDecl param() {
    ParamDecl p;
    while (peek().punct("*") || peek().punct("&")) p.name += next().text;
    p.name += identifier("a parameter name").text;
    if (accept_punct(":")) p.type = identifier("a type name").text;
    if (accept_punct("->")) p.slice = identifier("a slice parameter").text;
    return p;
  }

  Outcome outcome() {
    Token kw = next();
    Outcome o;
    o.line = kw.line;
    o.col = kw.col;
    if (accept_punct_after_newlines("{")) {
      --pos_;
      o.block = block();
    }
    skip_newlines_inline();
    Token name = identifier("a destination state");
    if (peek().punct("(")) {
      next();
      expect_punct(")");
      o.action = name.text;
      skip_newlines_inline();
      name = identifier("a destination state");
    }
    o.destination = name.text;
    o.line = name.line;
    o.col = name.col;
    return o;
  }

  void skip_newlines_inline() {
    while (peek().kind == Token::Newline) next();
  }

  void check_property(const PropertyAst& ast) {
    std::set<std::string> names;
    for (const auto& s : ast.states)
      if (!names.insert(s.name).second) throw SyntaxError(s.line, s.col, "duplicate state '" + s.name + "'");
    if (!names.count("init")) throw SyntaxError(1, 1, "missing state 'init'");
    for (const auto& s : ast.states)
      for (const auto& t : s.transitions)
        for (const auto* o : {&t.success, &t.failure})
          if (*o && !names.count((*o)->destination))
            throw SyntaxError((*o)->line, (*o)->col, "unknown destination state '" + (*o)->destination + "'");
  }

  // ---- scenarios -------------------------------------------------------------

  ScenarioAst scenario() {
    ScenarioAst ast;
    skip_newlines();
    while (!at_end() && !peek().ident("on")) {
      Token t = identifier("an initialization or 'on'");
      if (!peek().punct(":=")) unexpected("':='");
      next();
      Action a;
      a.kind = Action::Kind::Assign;
      a.target = t.text;
      a.expr = expression();
      a.line = t.line;
      a.col = t.col;
      ast.init.push_back(std::move(a));
      end_of_action();
      skip_newlines();
    }
    while (!at_end()) {
      Token on = next();
      if (!on.ident("on")) fail(on, "expected 'on', found " + describe(on));
      Reaction r;
      r.line = on.line;
      r.col = on.col;
      Token when = identifier("'entering' or 'leaving'");
      if (when.text == "entering") r.entering = true;
      else if (when.text == "leaving") r.entering = false;
      else fail(when, "expected 'entering' or 'leaving', found " + describe(when));
      accept_ident("state");
      r.state = identifier("a state name").text;
      expect_ident("do");
      r.actions = actions();
      accept_ident("end");
      skip_newlines();
      ast.reactions.push_back(std::move(r));
    }
    return ast;
  }

  bool at_sequence_end() const {
    return at_end() || peek().ident("else") || peek().ident("end") || peek().ident("on");
  }

  void end_of_action() {
    if (peek().kind == Token::Newline || peek().punct(";") || at_sequence_end()) return;
    unexpected("end of action");
  }

  ActionList actions() {
    ActionList out;
    skip_newlines();
    while (!at_sequence_end()) {
      out.push_back(action());
      end_of_action();
      skip_newlines();
    }
    return out;
  }

  Action action() {
    Token t = peek();
    Action a;
    a.line = t.line;
    a.col = t.col;
    if (t.kind != Token::Ident) unexpected("an action");
    if (peek(1).punct(":=")) {
      next();
      next();
      a.target = t.text;
      if (peek().ident("checkpoint") && (peek(1).kind == Token::Newline || peek(1).punct(";") ||
                                         peek(1).kind == Token::End || peek(1).ident("else") ||
                                         peek(1).ident("end") || peek(1).ident("on"))) {
        next();
        a.kind = Action::Kind::Checkpoint;
      } else {
        a.kind = Action::Kind::Assign;
        a.expr = expression();
      }
      return a;
    }
    next();
    const std::string& w = t.text;
    if (w == "if") {
      a.kind = Action::Kind::If;
      a.expr = expression();
      expect_ident("then");
      a.then_branch = actions();
      if (accept_ident("else")) a.else_branch = actions();
      accept_ident("end");
      return a;
    }
    if (w == "while") {
      a.kind = Action::Kind::While;
      a.expr = expression();
      if (!accept_ident("do")) expect_ident("then");
      a.then_branch = actions();
      accept_ident("end");
      return a;
    }
    if (w == "restore" && peek().punct("-") && peek(1).ident("checkpoint")) {
      next();
      next();
      a.kind = Action::Kind::Restore;
      a.expr = expression();
      return a;
    }
    if (w == "setBreakpoint" || w == "unsetBreakpoint") {
      a.kind = w == "setBreakpoint" ? Action::Kind::SetBreakpoint : Action::Kind::UnsetBreakpoint;
      if (accept_punct("@")) {
        if (peek().kind != Token::Int) unexpected("an address");
        a.target = "@" + next().text;
      } else {
        a.target = identifier("a function name or @address").text;
      }
      return a;
    }
    if (w == "setWatchpoint") {
      a.kind = Action::Kind::SetWatchpoint;
      a.target = identifier("a variable name").text;
      Token m = identifier("a watch mode (r, w or rw)");
      if (m.text != "r" && m.text != "w" && m.text != "rw") fail(m, "watch mode must be r, w or rw");
      a.mode = m.text;
      return a;
    }
    if (w == "unsetWatchpoint") {
      a.kind = Action::Kind::UnsetWatchpoint;
      a.target = identifier("a variable name").text;
      return a;
    }
    if (w == "suspend") {
      a.kind = Action::Kind::Suspend;
      return a;
    }
    if (w == "print") {
      a.kind = Action::Kind::Print;
      a.expr = expression();
      return a;
    }
    fail(t, "unknown action " + describe(t));
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  bool scenario_;
};

}  // namespace parse_detail

inline PropertyAst parse_property(std::string_view text) {
  parse_detail::Parser p(tokenize(desugar_indentation(text)), false);
  return p.property();
}

inline ScenarioAst parse_scenario(std::string_view text) {
  parse_detail::Parser p(tokenize(text), true);
  return p.scenario();
}

}  // namespace irv::dsl
