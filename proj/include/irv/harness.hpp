#pragma once

// Oracles and generators: the standalone runner and correspondence check,
// the per-key slicing oracle, seeded random programs, properties, command
// scripts and keyed traces, and trap counting.

#include <chrono>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "irv/assembler.hpp"
#include "irv/dsl/lower.hpp"
#include "irv/executive.hpp"
#include "irv/monitor.hpp"
#include "irv/vm.hpp"

namespace irv::harness {

using Rng = std::mt19937_64;

struct ProgramConfig {
  Memory memory;
  Address pc;
  bool operator==(const ProgramConfig&) const = default;
};

/// Configurations of the program run on its own, from the initial one to the
/// one at STOP.
inline std::vector<ProgramConfig> run_standalone(const ProgramImage& img, std::size_t max_steps = 1'000'000) {
  std::vector<ProgramConfig> out{{img.initial_memory, img.start}};
  std::vector<AccessRecord> acc;
  for (std::size_t k = 0;; ++k) {
    ProgramConfig c = out.back();
    if (std::holds_alternative<Halt>(decode(c.memory.read(c.pc)))) return out;
    if (k >= max_steps) throw std::runtime_error("program did not halt within " + std::to_string(max_steps) + " steps");
    acc.clear();
    c.pc = run_instr_in_place(c.memory, c.pc, img.layout, acc);
    out.push_back(std::move(c));
  }
}

// ---------------------------------------------------------------------------
// Correspondence
// ---------------------------------------------------------------------------

struct CorrespondenceResult {
  bool ok = true;
  std::size_t checked = 0;
  std::size_t divergence_index = 0;  // index in the i-RV trace
  std::string detail;
};

/// Every i-RV configuration, with breakpoints removed, must equal a
/// standalone configuration, at non-decreasing standalone indices.
inline CorrespondenceResult check_correspondence(const std::vector<ProgramConfig>& irv_trace,
                                                 const std::vector<ProgramConfig>& standalone) {
  CorrespondenceResult r;
  std::size_t k = 0;
  for (std::size_t i = 0; i < irv_trace.size(); ++i) {
    const auto& c = irv_trace[i];
    std::size_t j = k;
    while (j < standalone.size() && !(standalone[j] == c)) ++j;
    ++r.checked;
    if (j == standalone.size()) {
      r.ok = false;
      r.divergence_index = i;
      r.detail = "configuration " + std::to_string(i) + " (pc " + to_string(c.pc) +
                 ") corresponds to no standalone configuration at or after step " + std::to_string(k);
      const auto& ref = standalone[std::min(k, standalone.size() - 1)];
      for (std::size_t a = 0; a < c.memory.size(); ++a)
        if (c.memory.read(Address{static_cast<std::uint32_t>(a)}) !=
            ref.memory.read(Address{static_cast<std::uint32_t>(a)})) {
          r.detail += "; first differing cell @" + std::to_string(a);
          break;
        }
      return r;
    }
    k = j;
  }
  return r;
}

/// Runs a command script under the executive and records every loop-head
/// configuration with breakpoints removed. After the script, the run is
/// continued until the program halts.
struct ScriptedRun {
  std::vector<ProgramConfig> trace;
  Counters counters;
  std::vector<std::string> invariant_failures;
  bool halted = false;
};

inline bool restricted_command(const UserCommand& c) {
  using K = UserCommand::Kind;
  return c.kind == K::LoadMonitor || c.kind == K::Continue || c.kind == K::Break || c.kind == K::Watch ||
         c.kind == K::Checkpoint || c.kind == K::Step;
}

inline ScriptedRun run_script(Executive& ex, const std::vector<UserCommand>& script,
                              std::size_t max_ticks = 2'000'000) {
  ScriptedRun out;
  auto record = [&] {
    ProgramConfig c{ex.memory(), ex.pc()};
    remove_all_bps(c.memory, ex.debugger().breakpoints);
    if (out.trace.empty() || !(out.trace.back() == c)) out.trace.push_back(std::move(c));
  };
  std::size_t ticks = 0;
  auto drive = [&](const UserCommand& c) {
    ex.tick(Input{c});
    ++ticks;
    record();
    while (ex.mode() == Mode::Passive && ticks < max_ticks) {
      ex.tick();
      ++ticks;
      record();
    }
  };
  record();
  for (const auto& c : script) drive(c);
  while (!(ex.mode() == Mode::Interactive && ex.at_stop()) && ticks < max_ticks) drive(UserCommand::cont());
  out.halted = ex.at_stop();
  out.counters = ex.counters();
  out.invariant_failures = ex.invariant_failures();
  return out;
}

/// The correspondence check under the restricted command set with the empty
/// scenario. Scripts outside that set are refused.
inline CorrespondenceResult check_scripted_correspondence(const ProgramImage& img, const std::vector<UserCommand>& script,
                                                          ScriptedRun* run_out = nullptr,
                                                          ExecutiveOptions opts = {}) {
  for (const auto& c : script) {
    if (!restricted_command(c))
      throw std::invalid_argument("command outside the restricted set; correspondence is not defined for it");
    if (c.kind == UserCommand::Kind::LoadMonitor && c.monitor->scenario &&
        !(c.monitor->scenario->init.empty() && c.monitor->scenario->reactions.empty()))
      throw std::invalid_argument("correspondence is only defined with the empty scenario");
  }
  Executive ex(img, opts);
  ScriptedRun run = run_script(ex, script);
  auto standalone = run_standalone(img);
  auto r = check_correspondence(run.trace, standalone);
  if (r.ok && !run.halted) {
    r.ok = false;
    r.detail = "the run did not reach STOP";
  }
  if (run_out) *run_out = std::move(run);
  return r;
}

// ---------------------------------------------------------------------------
// Random programs
// ---------------------------------------------------------------------------

struct GeneratedProgram {
  std::string source;
  std::vector<std::string> variables;
  std::vector<std::pair<std::string, unsigned>> functions;  // name, nparams
};

namespace gen_detail {

inline int pick(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

template <class T>
const T& choose(Rng& rng, const std::vector<T>& v) {
  return v[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(v.size()) - 1))];
}

inline std::string operand(Rng& rng, const std::vector<std::string>& vars) {
  if (pick(rng, 0, 2) == 0) return std::to_string(pick(rng, -5, 20));
  return choose(rng, vars);
}

inline std::string arith(Rng& rng, const std::vector<std::string>& vars) {
  static const std::vector<std::string> ops = {"+", "-", "*", "<", "<=", "=="};
  std::string e = operand(rng, vars);
  int n = pick(rng, 0, 2);
  for (int k = 0; k < n; ++k) e = "(" + e + " " + choose(rng, ops) + " " + operand(rng, vars) + ")";
  return e;
}

}  // namespace gen_detail

/// A halting program: straight-line arithmetic, bounded loops and calls to
/// functions that only call functions declared before them.
inline GeneratedProgram random_program(Rng& rng) {
  using namespace gen_detail;
  GeneratedProgram g;
  int nvars = pick(rng, 2, 5);
  for (int k = 0; k < nvars; ++k) g.variables.push_back("v" + std::to_string(k));
  int nfuncs = pick(rng, 1, 3);
  for (int k = 0; k < nfuncs; ++k) g.functions.emplace_back("f" + std::to_string(k), static_cast<unsigned>(pick(rng, 0, 2)));

  std::string src;
  for (const auto& v : g.variables) src += "VAR " + v + " = " + std::to_string(pick(rng, -3, 9)) + "\n";
  int label = 0;
  auto call = [&](int max_fn) {
    std::string s;
    const auto& [name, n] = g.functions[static_cast<std::size_t>(pick(rng, 0, max_fn))];
    for (unsigned a = 0; a < n; ++a) s += "ARG" + std::to_string(a) + " := " + operand(rng, g.variables) + "\n";
    s += "CALL " + name + "\n";
    if (pick(rng, 0, 1)) s += choose(rng, g.variables) + " := RETVAL\n";
    return s;
  };
  auto straight = [&](int max_fn, int len) {
    std::string s;
    for (int k = 0; k < len; ++k) {
      if (max_fn >= 0 && pick(rng, 0, 3) == 0)
        s += call(max_fn);
      else
        s += choose(rng, g.variables) + " := " + arith(rng, g.variables) + "\n";
    }
    return s;
  };

  int blocks = pick(rng, 1, 4);
  for (int b = 0; b < blocks; ++b) {
    if (pick(rng, 0, 2) == 0) {
      int l = label++;
      std::string ctr = "ctr" + std::to_string(l);
      src += ctr + " := 0\n";
      src += "L" + std::to_string(l) + ":\n";
      src += straight(nfuncs - 1, pick(rng, 1, 3));
      src += ctr + " := " + ctr + " + 1\n";
      src += "t" + std::to_string(l) + " := " + ctr + " < " + std::to_string(pick(rng, 1, 6)) + "\n";
      src += "JZ t" + std::to_string(l) + ", E" + std::to_string(l) + "\n";
      src += "JMP L" + std::to_string(l) + "\n";
      src += "E" + std::to_string(l) + ":\n";
    } else {
      src += straight(nfuncs - 1, pick(rng, 1, 5));
    }
  }
  for (int f = 0; f < nfuncs; ++f) {
    const auto& [name, n] = g.functions[static_cast<std::size_t>(f)];
    src += "FUNC " + name + "(" + std::to_string(n) + ")\n";
    std::vector<std::string> visible = g.variables;
    for (unsigned a = 0; a < n; ++a) visible.push_back("ARG" + std::to_string(a));
    for (int k = pick(rng, 1, 3); k > 0; --k) {
      if (f > 0 && pick(rng, 0, 3) == 0) {
        src += call(f - 1);
      } else {
        src += choose(rng, g.variables) + " := " + arith(rng, visible) + "\n";
      }
    }
    if (pick(rng, 0, 1)) {
      int l = label++;
      src += "RETVAL := " + arith(rng, visible) + "\n";
      src += "t" + std::to_string(l) + " := " + choose(rng, g.variables) + " < " + std::to_string(pick(rng, 0, 8)) + "\n";
      src += "JZ t" + std::to_string(l) + ", E" + std::to_string(l) + "\n";
      src += "RET\n";
      src += "E" + std::to_string(l) + ":\n";
    }
    src += "RETVAL := " + arith(rng, visible) + "\n";
    src += "ENDFUNC\n";
  }
  g.source = std::move(src);
  return g;
}

inline AssembleOptions small_memory() {
  AssembleOptions o;
  o.data_cells = 128;
  o.stack_cells = 64;
  return o;
}

// ---------------------------------------------------------------------------
// Random properties over a generated program
// ---------------------------------------------------------------------------

/// A property in the surface syntax whose events are calls, writes, reads
/// and updates of the program's functions and variables.
inline std::string random_program_property(Rng& rng, const GeneratedProgram& g) {
  using namespace gen_detail;
  std::vector<std::string> events;
  for (const auto& [name, n] : g.functions) {
    std::string params;
    for (unsigned a = 0; a < n; ++a) params += (a ? ", p" : "p") + std::to_string(a);
    events.push_back("before event " + name + "(" + params + ")");
    events.push_back("after event " + name + "(" + (params.empty() ? "ret" : params + ", ret") + ")");
  }
  for (const auto& v : g.variables) {
    events.push_back("before write " + v + "(ret)");
    events.push_back("after write " + v + "(ret)");
    events.push_back("after read " + v + "(ret)");
  }
  events.push_back("after update \"" + g.variables[0] + " + " + g.variables.back() + "\"(ret)");

  int nstates = pick(rng, 2, 4);
  std::vector<std::string> states{"init"};
  for (int k = 1; k < nstates; ++k) states.push_back("s" + std::to_string(k));
  std::string text = "initialization {\n    n = 0\n}\n\n";
  for (const auto& s : states) {
    text += "state " + s + (pick(rng, 0, 3) == 0 ? " non-accepting" : " accepting") + " {\n";
    for (int t = pick(rng, 0, 3); t > 0; --t) {
      std::string ev = choose(rng, events);
      bool has_ret = ev.find("ret") != std::string::npos;
      text += "    transition {\n        " + ev;
      if (has_ret && pick(rng, 0, 1)) text += " {\n            return ret < " + std::to_string(pick(rng, 0, 10)) + "\n        }";
      text += "\n        success {\n            n = n + 1\n        } " + choose(rng, states) + "\n";
      if (pick(rng, 0, 1)) text += "        failure " + choose(rng, states) + "\n";
      text += "    }\n";
    }
    text += "}\n\n";
  }
  return text;
}

/// A script over the restricted command set.
inline std::vector<UserCommand> random_restricted_script(Rng& rng, const ProgramImage& img, const GeneratedProgram& g,
                                                         std::optional<MonitorSpec> monitor) {
  using namespace gen_detail;
  std::vector<UserCommand> s;
  if (monitor) s.push_back(UserCommand::load_monitor(std::move(*monitor)));
  std::vector<std::string> code_targets;
  for (const auto& [name, n] : g.functions) code_targets.push_back(name);
  for (const auto& [name, a] : img.labels) code_targets.push_back(name);
  code_targets.push_back(to_string(Address{static_cast<std::uint32_t>(
      pick(rng, static_cast<int>(img.layout.code.begin.value), static_cast<int>(img.layout.code.end.value) - 1))}));
  for (int k = pick(rng, 2, 12); k > 0; --k) {
    switch (pick(rng, 0, 5)) {
      case 0: s.push_back(UserCommand::brk(choose(rng, code_targets))); break;
      case 1: {
        int m = pick(rng, 1, 3);
        s.push_back(UserCommand::watch(m & 1, m & 2, choose(rng, g.variables)));
        break;
      }
      case 2: s.push_back(UserCommand::checkpoint()); break;
      case 3: s.push_back(UserCommand::step()); break;
      default: s.push_back(UserCommand::cont()); break;
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Slicing oracle
// ---------------------------------------------------------------------------

struct EfsmState {
  std::string state;
  Environment env;
  bool operator==(const EfsmState&) const = default;
};

/// One step of a plain, unsliced EFSM with the property's transitions.
inline void efsm_step(EfsmState& m, const RuntimeEvent& e, const Property& prop) {
  Environment values = e.values();
  std::map<std::size_t, GuardResult> guard_of_group;
  for (const auto& t : prop.delta) {
    if (t.source != m.state || !matches(e, t.event)) continue;
    auto it = guard_of_group.find(t.group);
    if (it == guard_of_group.end())
      it = guard_of_group.emplace(t.group, t.guard ? t.guard(values, m.env) : GuardResult::Pass).first;
    if (it->second == GuardResult::NotRelevant) continue;
    if ((it->second == GuardResult::Pass) != t.on_pass) continue;
    std::vector<std::string> log;
    if (t.updater) m.env = t.updater(values, m.env, log);
    m.state = t.destination;
    return;
  }
}

struct SlicingOracle {
  EfsmState root;
  std::map<Word, EfsmState> per_key;
};

/// One independent EFSM per key value of slice parameter `key`; an EFSM is
/// cloned from the root the first time its key appears. Events without the
/// key go to the root and every keyed EFSM.
inline SlicingOracle brute_force_slicing(const std::vector<RuntimeEvent>& trace, const Property& prop,
                                         const std::string& key) {
  SlicingOracle o{{prop.init, prop.env0}, {}};
  for (const auto& e : trace) {
    Environment v = e.values();
    auto it = v.find(key);
    if (it != v.end()) {
      Word k = std::get<Word>(it->second);
      auto [pos, fresh] = o.per_key.try_emplace(k, o.root);
      efsm_step(pos->second, e, prop);
    } else {
      efsm_step(o.root, e, prop);
      for (auto& [k, m] : o.per_key) efsm_step(m, e, prop);
    }
  }
  return o;
}

/// A 3 to 6 state property sliced on `k`, over keyed events a(k, x) and
/// b(k) and unkeyed events c(x) and d().
inline std::string random_sliced_property(Rng& rng) {
  using namespace gen_detail;
  int nstates = pick(rng, 3, 6);
  std::vector<std::string> states{"init"};
  for (int k = 1; k < nstates; ++k) states.push_back("q" + std::to_string(k));
  const std::vector<std::string> events = {"a(k, x)", "b(k)", "c(x)", "d()"};
  std::string text = "slice on k\n\ninitialization {\n    n = 0\n    m = 0\n}\n\n";
  for (const auto& s : states) {
    text += "state " + s + (pick(rng, 0, 2) == 0 ? " non-accepting" : " accepting") + " {\n";
    for (int t = pick(rng, 1, 4); t > 0; --t) {
      std::string ev = choose(rng, events);
      bool has_x = ev.find('x') != std::string::npos;
      text += "    transition {\n        event " + ev;
      switch (pick(rng, 0, 3)) {
        case 0:
          if (has_x) text += " {\n            return x < " + std::to_string(pick(rng, 0, 9)) + "\n        }";
          break;
        case 1: text += " {\n            return n < " + std::to_string(pick(rng, 0, 6)) + "\n        }"; break;
        case 2:
          if (has_x) text += " {\n            return none\n        }";
          break;
        default: break;
      }
      std::string upd = has_x && pick(rng, 0, 1) ? "m = m + x" : "n = n + 1";
      text += "\n        success {\n            " + upd + "\n        } " + choose(rng, states) + "\n";
      if (pick(rng, 0, 1)) text += "        failure {\n            m = m - 1\n        } " + choose(rng, states) + "\n";
      text += "    }\n";
    }
    text += "}\n\n";
  }
  return text;
}

inline std::vector<RuntimeEvent> random_keyed_trace(Rng& rng, std::size_t max_events = 500, int max_keys = 8) {
  using namespace gen_detail;
  int nkeys = pick(rng, 1, max_keys);
  std::size_t n = static_cast<std::size_t>(pick(rng, 1, static_cast<int>(max_events)));
  auto P = [](const char* s) { return ParamName::variable(s); };
  std::vector<RuntimeEvent> out;
  for (std::size_t i = 0; i < n; ++i) {
    Word key = 100 + pick(rng, 0, nkeys - 1);
    Word x = pick(rng, 0, 9);
    switch (pick(rng, 0, 5)) {
      case 0:
      case 1: out.push_back({EventType::FunctionCall, "a", {P("k"), P("x")}, {key, x}, true}); break;
      case 2:
      case 3: out.push_back({EventType::FunctionCall, "b", {P("k")}, {key}, true}); break;
      case 4: out.push_back({EventType::FunctionCall, "c", {P("x")}, {x}, true}); break;
      default: out.push_back({EventType::FunctionCall, "d", {}, {}, true}); break;
    }
  }
  return out;
}

struct SlicingComparison {
  bool ok = true;
  std::size_t compared = 0;
  std::string detail;
};

inline SlicingComparison compare_with_oracle(const MonitorConfiguration& config, const SlicingOracle& oracle,
                                             const std::string& key) {
  SlicingComparison r;
  auto fail = [&](std::string d) {
    r.ok = false;
    if (r.detail.empty()) r.detail = std::move(d);
  };
  const SliceInstance* root = config.find(SliceBinding{{key, std::nullopt}});
  if (!root) {
    fail("root slice missing");
    return r;
  }
  if (!(EfsmState{root->state, root->env} == oracle.root)) fail("root slice differs from the oracle");
  for (const auto& s : config.slices) {
    if (!fully_instantiated(s.binding)) continue;
    Word k = *s.binding.at(key);
    auto it = oracle.per_key.find(k);
    ++r.compared;
    if (it == oracle.per_key.end()) {
      fail("slice " + to_string(s.binding) + " has no oracle counterpart");
      continue;
    }
    if (!(EfsmState{s.state, s.env} == it->second))
      fail("slice " + to_string(s.binding) + " is in " + s.state + " (" + to_string(s.env) + "), oracle says " +
           it->second.state + " (" + to_string(it->second.env) + ")");
  }
  // keys that never spawned a slice must still agree with the root
  for (const auto& [k, m] : oracle.per_key) {
    if (config.find(SliceBinding{{key, k}})) continue;
    ++r.compared;
    if (!(m == oracle.root)) fail("key " + std::to_string(k) + " has no slice but the oracle left the root");
  }
  return r;
}

// ---------------------------------------------------------------------------
// Trap counting on the stack workload
// ---------------------------------------------------------------------------

/// Pushes and pops 0..99 alternately.
inline const char* stack_program() {
  return R"(# push then pop each of 0..99
VAR i = 0
VAR top = 0
VAR size = 0
VAR x = 0

loop:
  ARG0 := i
  CALL push
  CALL pop
  x := RETVAL
  i := i + 1
  more := i < 100
  JZ more, done
  JMP loop
done:

FUNC push(1)
  top := ARG0
  size := size + 1
ENDFUNC

FUNC pop(0)
  RETVAL := top
  size := size - 1
ENDFUNC
)";
}

/// 42 must be popped after it is pushed. Pops are only relevant once 42 is in.
inline const char* stack_property() {
  return R"(state init accepting {
    transition {
        before event push(v) {
            return v == 42
        }
        success pending
    }
}

state pending non-accepting {
    transition {
        after event pop(ret) {
            return ret == 42
        }
        success removed
    }
}

state removed accepting
)";
}

struct TrapCount {
  std::size_t traps = 0;
  std::size_t instructions = 0;
  std::vector<std::string> final_states;
};

inline TrapCount count_traps(const ProgramImage& img, const Property& prop, bool static_instrumentation) {
  ExecutiveOptions opts;
  opts.static_instrumentation = static_instrumentation;
  Executive ex(img, opts);
  ex.command(UserCommand::load_monitor({prop, std::nullopt}));
  while (!(ex.mode() == Mode::Interactive && ex.at_stop())) {
    std::size_t before = ex.counters().ticks;
    ex.command(UserCommand::cont());
    if (ex.counters().ticks == before) break;
  }
  TrapCount t{ex.counters().monitor_traps, ex.counters().instructions, {}};
  for (const auto& s : ex.monitors().at(0).config.slices) t.final_states.push_back(s.state);
  return t;
}

// ---------------------------------------------------------------------------
// Suites over seeded cases
// ---------------------------------------------------------------------------

struct SuiteResult {
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::size_t invariant_checks = 0;
  std::size_t invariant_violations = 0;
  std::size_t monitor_traps = 0;
  std::vector<std::string> details;  // first few failures
  double seconds = 0;

  void fail(std::string d) {
    ++failures;
    if (details.size() < 5) details.push_back(std::move(d));
  }
};

/// A generated program with a generated property; `seed` fixes both.
struct GeneratedCase {
  GeneratedProgram program;
  ProgramImage image;
  Property property;
  Rng rng;
};

inline GeneratedCase generate_case(std::uint64_t seed) {
  GeneratedCase c{{}, {}, {}, Rng(seed)};
  c.program = random_program(c.rng);
  c.image = assemble(c.program.source, small_memory());
  c.property = dsl::load_property(random_program_property(c.rng, c.program), "generated");
  return c;
}

template <class F>
SuiteResult timed_suite(std::size_t cases, F&& body) {
  SuiteResult r;
  auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < cases; ++i) {
    ++r.cases;
    try {
      body(i, r);
    } catch (const std::exception& e) {
      r.fail("case " + std::to_string(i) + ": " + e.what());
    }
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline void add_invariants(SuiteResult& r, const Counters& c, const std::vector<std::string>& failures,
                           std::size_t i) {
  r.invariant_checks += c.invariant_checks;
  r.invariant_violations += c.invariant_violations;
  if (!failures.empty()) r.fail("case " + std::to_string(i) + ": invariant: " + failures.front());
}

/// Random programs, properties and restricted scripts: every i-RV
/// configuration must correspond to the standalone run.
inline SuiteResult correspondence_suite(std::uint64_t seed, std::size_t cases) {
  return timed_suite(cases, [&](std::size_t i, SuiteResult& r) {
    GeneratedCase c = generate_case(seed + i);
    auto script = random_restricted_script(c.rng, c.image, c.program, MonitorSpec{c.property, std::nullopt});
    ScriptedRun run;
    auto res = check_scripted_correspondence(c.image, script, &run);
    r.monitor_traps += run.counters.monitor_traps;
    if (!res.ok) r.fail("case " + std::to_string(i) + ": " + res.detail);
    add_invariants(r, run.counters, run.invariant_failures, i);
  });
}

/// The monitor folded over random keyed traces against one EFSM per key.
inline SuiteResult slicing_suite(std::uint64_t seed, std::size_t cases) {
  return timed_suite(cases, [&](std::size_t i, SuiteResult& r) {
    Rng rng(seed + i);
    Property p = dsl::load_property(random_sliced_property(rng), "sliced");
    auto trace = random_keyed_trace(rng, 500, 8);
    MonitorConfiguration config = initial_configuration(p);
    for (const auto& e : trace) config = update_mon(config, e, p).config;
    auto cmp = compare_with_oracle(config, brute_force_slicing(trace, p, "k"), "k");
    if (!cmp.ok) r.fail("case " + std::to_string(i) + ": " + cmp.detail);
  });
}

/// Checkpoint after a random number of steps, run to the end, restart: the
/// restored configuration must equal the saved one.
inline SuiteResult checkpoint_suite(std::uint64_t seed, std::size_t cases) {
  return timed_suite(cases, [&](std::size_t i, SuiteResult& r) {
    GeneratedCase c = generate_case(seed + i);
    std::size_t length = run_standalone(c.image).size();
    std::size_t steps = static_cast<std::size_t>(gen_detail::pick(c.rng, 0, static_cast<int>(length) - 1));
    Executive ex(c.image);
    ex.command(UserCommand::load_monitor({c.property, std::nullopt}));
    for (std::size_t k = 0; k < steps && !ex.at_stop(); ++k) ex.command(UserCommand::step());
    std::string where = "case " + std::to_string(i) + " after " + std::to_string(steps) + " steps: ";

    Memory live = ex.memory();
    remove_all_bps(live, ex.debugger().breakpoints);
    Address pc = ex.pc();
    std::vector<MonitorConfiguration> monitors;
    for (const auto& m : ex.monitors()) monitors.push_back(m.config);

    ex.command(UserCommand::checkpoint());
    int n = ex.debugger().checkpoints.rbegin()->first;
    const Checkpoint saved = ex.debugger().checkpoints.at(n);
    for (Word w : saved.memory.cells())
      if (w == kBreakpointWord) {
        r.fail(where + "checkpoint memory holds a breakpoint word");
        break;
      }
    if (!(saved.memory == live) || saved.pc != pc || saved.monitors != monitors)
      r.fail(where + "checkpoint differs from the live configuration");

    for (int guard = 0; !(ex.mode() == Mode::Interactive && ex.at_stop()) && guard < 10'000; ++guard)
      ex.command(UserCommand::cont());
    if (!ex.at_stop()) r.fail(where + "did not reach STOP");
    ex.command(UserCommand::restart(n));

    Memory restored = ex.memory();
    remove_all_bps(restored, ex.debugger().breakpoints);
    std::vector<MonitorConfiguration> now;
    for (const auto& m : ex.monitors()) now.push_back(m.config);
    if (!(restored == saved.memory)) r.fail(where + "restored memory differs");
    if (ex.pc() != saved.pc) r.fail(where + "restored pc " + to_string(ex.pc()) + " != " + to_string(saved.pc));
    if (now != saved.monitors) r.fail(where + "restored monitor configuration differs");
    add_invariants(r, ex.counters(), ex.invariant_failures(), i);
  });
}

}  // namespace irv::harness
