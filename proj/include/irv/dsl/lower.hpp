#pragma once

// Lowering of property syntax trees to monitor Properties, and scenario
// linking against a Property.

#include <set>
#include <stdexcept>
#include <string>

#include "irv/dsl/ast.hpp"
#include "irv/dsl/eval.hpp"
#include "irv/dsl/parser.hpp"
#include "irv/event.hpp"
#include "irv/monitor.hpp"

namespace irv::dsl {

class LowerError : public std::runtime_error {
 public:
  LowerError(int line, const std::string& msg)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

namespace lower_detail {

inline void collect_idents(const Expr& e, std::vector<const Expr*>& out) {
  if (e.kind == Expr::Kind::Ident) out.push_back(&e);
  for (const auto& a : e.args) collect_idents(*a, out);
}

inline EventType event_type(EventKind k) {
  switch (k) {
    case EventKind::Call: return EventType::FunctionCall;
    case EventKind::Write: return EventType::ValueWrite;
    case EventKind::Read: return EventType::ValueRead;
    case EventKind::Update: return EventType::UpdateExpr;
  }
  return EventType::FunctionCall;
}

}  // namespace lower_detail

inline Property lower(const PropertyAst& ast, std::string name = "property") {
  using namespace lower_detail;
  Property prop;
  prop.name = std::move(name);
  prop.slice_params = ast.slice_on;
  {
    std::set<std::string> seen;
    for (const auto& s : ast.slice_on)
      if (!seen.insert(s).second) throw LowerError(0, "duplicate slice parameter '" + s + "'");
  }
  try {
    prop.env0 = eval_block(ast.init_block, {}, {}).env;
  } catch (const EvalError& e) {
    throw LowerError(0, std::string("initialization: ") + e.what());
  }

  // names a guard may read: event parameters plus every environment variable
  std::set<std::string> env_names;
  for (const auto& [k, v] : prop.env0) env_names.insert(k);
  for (const auto& st : ast.states)
    for (const auto& t : st.transitions) {
      auto add = [&](const std::optional<Block>& b) {
        if (!b) return;
        for (const auto& s : *b)
          if (s.kind == Stmt::Kind::Assign) env_names.insert(s.target);
      };
      add(t.guard_block);
      if (t.success) add(t.success->block);
      if (t.failure) add(t.failure->block);
    }

  for (const auto& st : ast.states) {
    prop.states.push_back(st.name);
    prop.accepting[st.name] = st.accepting;
    if (st.action) prop.state_actions[st.name] = *st.action;
  }
  prop.init = "init";

  std::size_t group = 0;
  for (const auto& st : ast.states) {
    for (const auto& td : st.transitions) {
      SymbolicEvent ev;
      ev.etype = event_type(td.kind);
      ev.name = td.event_name;
      ev.is_before = td.before;
      std::vector<std::pair<std::string, std::string>> binding;
      for (const auto& p : td.params) {
        ParamName pn;
        try {
          pn = parse_param_name(p.name);
        } catch (const EventError& e) {
          throw LowerError(td.line, e.what());
        }
        if (pn.depth() > kMaxParamDepth) throw LowerError(td.line, "parameter '" + p.name + "' is nested too deeply");
        if (pn.kind == ParamName::Kind::Arg && ev.etype != EventType::FunctionCall)
          throw LowerError(td.line, "'" + p.name + "' is only available in call events");
        if (pn.kind == ParamName::Kind::Ret && ev.etype == EventType::FunctionCall && ev.is_before)
          throw LowerError(td.line, "'ret' is not available before a call");
        std::string key = to_string(pn);
        ev.params.push_back(pn);
        if (p.slice) {
          if (std::find(ast.slice_on.begin(), ast.slice_on.end(), *p.slice) == ast.slice_on.end())
            throw LowerError(td.line, "'" + *p.slice + "' is not a declared slice parameter");
          binding.emplace_back(key, *p.slice);
        } else if (std::find(ast.slice_on.begin(), ast.slice_on.end(), key) != ast.slice_on.end()) {
          binding.emplace_back(key, key);
        }
      }
      if (ev.etype == EventType::UpdateExpr) {
        try {
          UpdateExpression check(ev.name);
        } catch (const EventError& e) {
          throw LowerError(td.line, e.what());
        }
      }
      if (std::find(prop.sigma.begin(), prop.sigma.end(), ev) == prop.sigma.end()) prop.sigma.push_back(ev);

      std::set<std::string> param_names;
      for (const auto& p : ev.params) param_names.insert(to_string(p));

      // A block after the event is a guard when it returns, an update otherwise.
      std::optional<Block> guard, event_block;
      if (td.guard_block) {
        bool ret = has_return(*td.guard_block);
        bool other = std::any_of(td.guard_block->begin(), td.guard_block->end(),
                                 [](const Stmt& s) { return s.kind != Stmt::Kind::Return; });
        if (ret && other)
          throw LowerError(td.line, "a guard block may not mix 'return' with other statements");
        (ret ? guard : event_block) = *td.guard_block;
      }
      if (guard) {
        for (const auto& s : *guard) {
          std::vector<const Expr*> ids;
          collect_idents(*s.expr, ids);
          for (const Expr* id : ids)
            if (!param_names.count(id->text) && !env_names.count(id->text))
              throw LowerError(id->line, "guard references unknown identifier '" + id->text + "'");
        }
      }

      GuardFn gfn;
      if (guard) {
        auto g = std::make_shared<Block>(*guard);
        gfn = [g](const Environment& ev_values, const Environment& env) {
          return eval_guard(g.get(), ev_values, env);
        };
      }
      auto make_updater = [&](const std::optional<Block>& pre, const std::optional<Block>& body) -> UpdaterFn {
        Block all;
        if (pre) all.insert(all.end(), pre->begin(), pre->end());
        if (body) all.insert(all.end(), body->begin(), body->end());
        if (all.empty()) return {};
        auto b = std::make_shared<Block>(std::move(all));
        return [b](const Environment& ev_values, const Environment& env, std::vector<std::string>& log) {
          auto r = eval_block(*b, ev_values, env);
          log.insert(log.end(), r.log.begin(), r.log.end());
          return r.env;
        };
      };
      for (bool pass : {true, false}) {
        const auto& o = pass ? td.success : td.failure;
        if (!o) continue;
        Transition t;
        t.slice_binding = binding;
        t.source = st.name;
        t.event = ev;
        t.guard = gfn;
        t.on_pass = pass;
        t.updater = make_updater(pass ? event_block : std::nullopt, o->block);
        t.destination = o->destination;
        t.action = o->action;
        t.group = group;
        prop.delta.push_back(std::move(t));
      }
      ++group;
    }
  }
  try {
    prop.validate();
  } catch (const std::invalid_argument& e) {
    throw LowerError(0, e.what());
  }
  return prop;
}

inline Property load_property(std::string_view text, std::string name = "property") {
  return lower(parse_property(text), std::move(name));
}

/// Checks that every reaction names a state of the property.
inline void link_scenario(const ScenarioAst& sc, const Property& prop) {
  for (const auto& r : sc.reactions)
    if (!prop.has_state(r.state))
      throw LowerError(r.line, "scenario reacts to unknown state '" + r.state + "'");
}

/// Initial scenario environment.
inline Environment scenario_env0(const ScenarioAst& sc) {
  Environment env;
  for (const auto& a : sc.init) env[a.target] = storable(evaluate(*a.expr, {}, env), *a.expr);
  return env;
}

}  // namespace irv::dsl
