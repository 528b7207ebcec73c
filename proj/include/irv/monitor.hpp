#pragma once

// Parametric EFSM monitor with trace slicing.
//
// A configuration is a list of slice instances. Each slice carries a state, an
// environment and a binding of the slice parameters; a binding g is more
// specific than f (f ⊑ g) when g agrees with every parameter f sets. An event
// is dispatched to the most specific slices compatible with it, spawning a new
// slice when it instantiates parameters its slice left unset.

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "irv/event.hpp"
#include "irv/values.hpp"

namespace irv {

using SliceBinding = std::map<std::string, std::optional<Word>>;

/// f ⊑ g
inline bool more_specific(const SliceBinding& f, const SliceBinding& g) {
  for (const auto& [k, v] : f) {
    if (!v) continue;
    auto it = g.find(k);
    if (it == g.end() || it->second != v) return false;
  }
  return true;
}

/// f ⊏ g
inline bool strictly_more_specific(const SliceBinding& f, const SliceBinding& g) {
  return more_specific(f, g) && !more_specific(g, f);
}

inline SliceBinding root_binding(const std::vector<std::string>& slice_params) {
  SliceBinding b;
  for (const auto& p : slice_params) b[p] = std::nullopt;
  return b;
}

inline bool fully_instantiated(const SliceBinding& b) {
  for (const auto& [k, v] : b)
    if (!v) return false;
  return true;
}

inline std::string to_string(const SliceBinding& b) {
  std::string s = "{";
  bool first = true;
  for (const auto& [k, v] : b) {
    s += (first ? "" : ", ") + k + ": " + (v ? std::to_string(*v) : "unset");
    first = false;
  }
  return s + "}";
}

enum class GuardResult { Pass, Fail, NotRelevant };

/// Guards read the event values and the slice environment; they throw
/// EvalError on failure and must not modify either input.
using GuardFn = std::function<GuardResult(const Environment& event_values, const Environment& env)>;

/// Updaters return the new slice environment and may append print output.
using UpdaterFn = std::function<Environment(const Environment& event_values, const Environment& env,
                                            std::vector<std::string>& log)>;

struct Transition {
  std::vector<std::pair<std::string, std::string>> slice_binding;  // (event param, slice param)
  std::string source;
  SymbolicEvent event;
  GuardFn guard;                 // empty means always pass
  bool on_pass = true;           // taken when the guard passes (true) or fails (false)
  UpdaterFn updater;             // empty means identity
  std::string destination;
  std::optional<std::string> action;
  std::size_t group = 0;         // transitions sharing one guard share a group
};

struct Property {
  std::string name;
  std::vector<std::string> states;
  std::vector<SymbolicEvent> sigma;
  std::string init = "init";
  Environment env0;
  std::vector<Transition> delta;
  std::map<std::string, bool> accepting;
  std::vector<std::string> slice_params;
  std::map<std::string, std::string> state_actions;

  bool has_state(const std::string& s) const {
    return std::find(states.begin(), states.end(), s) != states.end();
  }

  /// Throws std::invalid_argument when a structural invariant is broken.
  void validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
    if (!has_state(init)) fail("initial state '" + init + "' is not a state");
    for (const auto& s : states)
      if (!accepting.count(s)) fail("state '" + s + "' has no verdict");
    for (const auto& t : delta) {
      if (!has_state(t.source)) fail("unknown source state '" + t.source + "'");
      if (!has_state(t.destination)) fail("unknown destination state '" + t.destination + "'");
      if (std::find(sigma.begin(), sigma.end(), t.event) == sigma.end())
        fail("transition event not in the alphabet: " + to_string(t.event));
      for (const auto& [p, s] : t.slice_binding) {
        if (std::find(slice_params.begin(), slice_params.end(), s) == slice_params.end())
          fail("'" + s + "' is not a slice parameter");
        bool found = false;
        for (const auto& q : t.event.params) found |= to_string(q) == p;
        if (!found) fail("'" + p + "' is not a parameter of " + to_string(t.event));
      }
    }
  }
};

struct SliceInstance {
  std::string state;
  Environment env;
  SliceBinding binding;
  SliceBinding parent_binding;

  bool operator==(const SliceInstance&) const = default;
};

struct MonitorConfiguration {
  std::vector<SliceInstance> slices;  // in creation order

  const SliceInstance* find(const SliceBinding& b) const {
    for (const auto& s : slices)
      if (s.binding == b) return &s;
    return nullptr;
  }

  bool operator==(const MonitorConfiguration&) const = default;
};

inline MonitorConfiguration initial_configuration(const Property& prop) {
  SliceBinding root = root_binding(prop.slice_params);
  return {{SliceInstance{prop.init, prop.env0, root, root}}};
}

/// Symbolic events with an outgoing transition from some slice's state, in
/// transition declaration order without duplicates.
inline std::vector<SymbolicEvent> enabled(const MonitorConfiguration& config, const Property& prop) {
  std::set<std::string> states;
  for (const auto& s : config.slices) states.insert(s.state);
  std::vector<SymbolicEvent> out;
  for (const auto& t : prop.delta)
    if (states.count(t.source) && std::find(out.begin(), out.end(), t.event) == out.end())
      out.push_back(t.event);
  return out;
}

struct TakenTransition {
  std::string source;
  std::string destination;
  SliceBinding binding;           // binding of the slice after the step
  SliceBinding previous_binding;  // binding of the slice the transition fired in
  bool spawned = false;
  std::size_t transition = 0;     // index into delta
  std::optional<std::string> action;

  bool operator==(const TakenTransition&) const = default;
};

struct MonitorStep {
  MonitorConfiguration config;
  std::vector<TakenTransition> taken;
  std::vector<std::string> log;
};

class MonitorError : public std::runtime_error {
 public:
  MonitorError(const SliceBinding& slice, const std::string& what)
      : std::runtime_error("in slice " + to_string(slice) + ": " + what), slice_(slice) {}
  const SliceBinding& slice() const { return slice_; }

 private:
  SliceBinding slice_;
};

/// Slice binding extended by the values the transition binds; nullopt when a
/// bound value contradicts a value the slice already holds.
inline std::optional<SliceBinding> instance_for(const SliceBinding& s, const Transition& t,
                                                const Environment& values) {
  SliceBinding inst = s;
  for (const auto& [p, sl] : t.slice_binding) {
    auto it = values.find(p);
    if (it == values.end()) return std::nullopt;
    const Word* w = std::get_if<Word>(&it->second);
    if (!w) return std::nullopt;
    auto& cur = inst[sl];
    if (cur && *cur != *w) return std::nullopt;
    cur = *w;
  }
  return inst;
}

/// One monitor step on runtime event e.
inline MonitorStep update_mon(const MonitorConfiguration& config, const RuntimeEvent& e, const Property& prop) {
  MonitorStep out;
  const Environment values = e.values();
  std::vector<SliceInstance> spawned;

  for (const auto& slice : config.slices) {
    SliceInstance next = slice;
    std::map<std::size_t, GuardResult> verdicts;  // by transition group
    for (std::size_t ti = 0; ti < prop.delta.size(); ++ti) {
      const Transition& t = prop.delta[ti];
      if (t.source != slice.state || !matches(e, t.event)) continue;
      auto inst = instance_for(slice.binding, t, values);
      if (!inst) continue;
      bool suppressed = false;
      for (const auto& other : config.slices)
        if (strictly_more_specific(slice.binding, other.binding) && more_specific(other.binding, *inst)) {
          suppressed = true;
          break;
        }
      if (suppressed) continue;

      GuardResult g;
      if (auto it = verdicts.find(t.group); it != verdicts.end()) {
        g = it->second;
      } else {
        try {
          g = t.guard ? t.guard(values, slice.env) : GuardResult::Pass;
        } catch (const EvalError& err) {
          throw MonitorError(slice.binding, std::string("guard: ") + err.what());
        }
        verdicts[t.group] = g;
      }
      if (g == GuardResult::NotRelevant) continue;
      if ((g == GuardResult::Pass) != t.on_pass) continue;

      Environment env;
      try {
        env = t.updater ? t.updater(values, slice.env, out.log) : slice.env;
      } catch (const EvalError& err) {
        throw MonitorError(slice.binding, std::string("update: ") + err.what());
      }
      TakenTransition tt{t.source, t.destination, *inst, slice.binding, false, ti, t.action};
      if (strictly_more_specific(slice.binding, *inst)) {
        tt.spawned = true;
        bool exists = std::any_of(spawned.begin(), spawned.end(),
                                  [&](const SliceInstance& s) { return s.binding == *inst; });
        if (!exists) {
          spawned.push_back(SliceInstance{t.destination, std::move(env), *inst, slice.binding});
          out.taken.push_back(std::move(tt));
        }
      } else {
        next.state = t.destination;
        next.env = std::move(env);
        out.taken.push_back(std::move(tt));
      }
      break;  // first applicable transition only
    }
    out.config.slices.push_back(std::move(next));
  }
  for (auto& s : spawned) out.config.slices.push_back(std::move(s));
  return out;
}

/// Per-slice verdict: true for accepting.
inline std::vector<std::pair<SliceBinding, bool>> verdict(const MonitorConfiguration& config,
                                                          const Property& prop) {
  std::vector<std::pair<SliceBinding, bool>> out;
  for (const auto& s : config.slices) out.emplace_back(s.binding, prop.accepting.at(s.state));
  return out;
}

}  // namespace irv
