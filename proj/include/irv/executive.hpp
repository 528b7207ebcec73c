#pragma once

// Joint execution of the program, the debugger, the monitors and their
// scenarios: the main loop, user commands, trap handling, event application,
// stepping and the scenario engine.

#include <algorithm>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "irv/assembler.hpp"
#include "irv/debugger.hpp"
#include "irv/dsl/lower.hpp"
#include "irv/event.hpp"
#include "irv/monitor.hpp"
#include "irv/vm.hpp"

namespace irv {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MonitorSpec {
  Property property;
  std::optional<dsl::ScenarioAst> scenario;
};

struct UserCommand {
  enum class Kind { LoadMonitor, Restart, Continue, Break, Watch, Checkpoint, Step, Exit, Unknown };

  Kind kind = Kind::Unknown;
  std::string target;  // Break / Watch: name or @N; Unknown: the text
  bool read = false;   // Watch mode
  bool write = false;
  int index = 0;       // Restart
  std::shared_ptr<const MonitorSpec> monitor;  // LoadMonitor

  static UserCommand of(Kind k, std::string target = {}) {
    UserCommand c;
    c.kind = k;
    c.target = std::move(target);
    return c;
  }
  static UserCommand load_monitor(MonitorSpec spec) {
    UserCommand c = of(Kind::LoadMonitor);
    c.monitor = std::make_shared<const MonitorSpec>(std::move(spec));
    return c;
  }
  static UserCommand restart(int n) {
    UserCommand c = of(Kind::Restart);
    c.index = n;
    return c;
  }
  static UserCommand cont() { return of(Kind::Continue); }
  static UserCommand brk(std::string t) { return of(Kind::Break, std::move(t)); }
  static UserCommand watch(bool r, bool w, std::string t) {
    UserCommand c = of(Kind::Watch, std::move(t));
    c.read = r;
    c.write = w;
    return c;
  }
  static UserCommand checkpoint() { return of(Kind::Checkpoint); }
  static UserCommand step() { return of(Kind::Step); }
  static UserCommand exit() { return of(Kind::Exit); }
};

struct Interrupt {};

using Input = std::variant<UserCommand, Interrupt>;

struct MonitorInstance {
  std::shared_ptr<const Property> property;
  MonitorConfiguration config;
  std::optional<dsl::ScenarioAst> scenario;
  Environment scenario_env;
};

struct IrvConfiguration {
  Memory memory;
  Address pc;
  DebuggerState debugger;
  std::vector<MonitorInstance> monitors;
};

// ---- notifications ----------------------------------------------------------

struct StateChangedNote {
  std::size_t monitor = 0;
  std::string property;
  SliceBinding binding;
  std::string old_state;
  std::string new_state;
  bool accepting = true;
  Environment env;
  std::string event;
  std::size_t transition = 0;
  bool spawned = false;
};

struct EventAppliedNote {
  std::string event;
};

struct ModeChangedNote {
  Mode mode = Mode::Interactive;
  std::string reason;
};

struct CheckpointListNote {
  std::vector<int> indices;
};

struct LogNote {
  enum class Kind { Monitor, Debugger, Error };
  Kind kind = Kind::Debugger;
  std::string line;
};

using Note = std::variant<StateChangedNote, EventAppliedNote, ModeChangedNote, CheckpointListNote, LogNote>;

struct ExecutiveOptions {
  bool static_instrumentation = false;  // instrument every event of the alphabets, once
  std::size_t scenario_fuel = 1'000'000;
  bool check_invariants = true;
};

struct Counters {
  std::size_t ticks = 0;
  std::size_t instructions = 0;   // committed instruction executions
  std::size_t apply_events = 0;
  std::size_t apply_runs = 0;     // run_instr calls made by apply_events
  std::size_t monitor_traps = 0;  // monitor breakpoint hits plus monitor watchpoint hits
  std::size_t monitor_bp_traps = 0;
  std::size_t monitor_wp_traps = 0;
  std::size_t invariant_checks = 0;
  std::size_t invariant_violations = 0;
};

class Executive {
 public:
  explicit Executive(ProgramImage img, ExecutiveOptions opts = {})
      : img_(std::move(img)), opts_(opts) {
    cfg_.memory = img_.initial_memory;
    cfg_.pc = img_.start;
  }

  const ProgramImage& image() const { return img_; }
  const IrvConfiguration& config() const { return cfg_; }
  IrvConfiguration& mutable_config() { return cfg_; }
  const Memory& memory() const { return cfg_.memory; }
  Address pc() const { return cfg_.pc; }
  Mode mode() const { return cfg_.debugger.mode; }
  const DebuggerState& debugger() const { return cfg_.debugger; }
  const std::vector<MonitorInstance>& monitors() const { return cfg_.monitors; }
  const Counters& counters() const { return counters_; }
  const std::vector<std::string>& invariant_failures() const { return invariant_failures_; }

  void set_observer(std::function<void(const Note&)> f) { observer_ = std::move(f); }

  /// True when the next instruction is STOP (ignoring a breakpoint there).
  bool at_stop() const { return std::holds_alternative<Halt>(decode(original_word(cfg_.pc))); }

  /// One iteration of the main loop. Returns false on exit.
  bool tick(const std::optional<Input>& input = std::nullopt) {
    ++counters_.ticks;
    bool cont = true;
    if (mode() == Mode::Interactive) {
      if (input) {
        if (auto* c = std::get_if<UserCommand>(&*input)) cont = handle_user_cmd(*c);
      }
    } else if (input && std::holds_alternative<Interrupt>(*input)) {
      set_mode(Mode::Interactive, "interrupted");
    } else if (input && std::get<UserCommand>(*input).kind == UserCommand::Kind::Exit) {
      cont = false;
    } else if (input) {
      log(LogNote::Kind::Error, "Illegal Command");
    } else {
      Decoded d = decode(cfg_.memory.read(cfg_.pc));
      if (std::holds_alternative<Halt>(d)) {
        set_mode(Mode::Interactive, "finished");
      } else if (std::holds_alternative<BreakpointTrap>(d)) {
        handle_bp();
      } else {
        normal_step(false);
      }
    }
    if (opts_.check_invariants) check_invariants_now();
    return cont;
  }

  /// Ticks while passive, at most `max_ticks` times. `poll` may return an
  /// input to deliver between ticks (an interrupt, typically).
  bool run_passive(std::size_t max_ticks = 100'000'000,
                   const std::function<std::optional<Input>()>& poll = nullptr) {
    for (std::size_t k = 0; k < max_ticks && mode() == Mode::Passive; ++k) {
      std::optional<Input> in;
      if (poll) in = poll();
      if (!tick(in)) return false;
    }
    return true;
  }

  /// Delivers a command and, when it leaves the debugger passive, runs until
  /// it becomes interactive again.
  bool command(const UserCommand& c, std::size_t max_ticks = 100'000'000) {
    if (!tick(Input{c})) return false;
    return run_passive(max_ticks);
  }

  bool handle_user_cmd(const UserCommand& c) {
    try {
      switch (c.kind) {
        case UserCommand::Kind::LoadMonitor: load_monitor(*c.monitor); break;
        case UserCommand::Kind::Restart: restart(c.index); break;
        case UserCommand::Kind::Continue:
          set_mode(Mode::Passive, "continue");
          interactive_step();
          break;
        case UserCommand::Kind::Break: {
          Address a = code_target(c.target);
          set_bp(cfg_.memory, cfg_.debugger.breakpoints, a, true, img_.layout);
          log(LogNote::Kind::Debugger, "Breakpoint at " + describe_code(a));
          break;
        }
        case UserCommand::Kind::Watch: {
          Address a = data_target(c.target);
          set_wp(cfg_.debugger.watchpoints, a, c.read, c.write, true);
          log(LogNote::Kind::Debugger,
              "Watchpoint (" + mode_string(c.read, c.write) + ") on " + img_.data_name(a) + " " + to_string(a));
          break;
        }
        case UserCommand::Kind::Checkpoint: {
          int n = take_checkpoint(cfg_);
          log(LogNote::Kind::Debugger, "Checkpoint " + std::to_string(n) + " at " + describe_code(cfg_.pc));
          break;
        }
        case UserCommand::Kind::Step: interactive_step(); break;
        case UserCommand::Kind::Exit: return false;
        case UserCommand::Kind::Unknown: log(LogNote::Kind::Error, "Illegal Command"); break;
      }
    } catch (const std::exception& e) {
      log(LogNote::Kind::Error, e.what());
    }
    return true;
  }

  /// Attaches a scenario to an already loaded monitor.
  void attach_scenario(std::size_t monitor, dsl::ScenarioAst sc) {
    auto& m = cfg_.monitors.at(monitor);
    dsl::link_scenario(sc, *m.property);
    m.scenario_env = dsl::scenario_env0(sc);
    m.scenario = std::move(sc);
  }

  /// The five-step event application. Public so tests can inject events.
  void apply_events(const std::vector<RuntimeEvent>& events) {
    ++counters_.apply_events;
    IrvConfiguration snapshot = cfg_;
    before_apply_ = &snapshot;
    pending_restore_.reset();
    suspend_ = false;
    buffering_ = true;
    auto finish = [&] {
      before_apply_ = nullptr;
      buffering_ = false;
    };
    try {
      // Step 1 and 2: remove all instrumentation.
      remove_all_bps(cfg_.memory, cfg_.debugger.breakpoints);
      un_instrument(cfg_.memory, cfg_.debugger.breakpoints, cfg_.debugger.watchpoints, enabled_all(), img_);
      // Step 3: before events, the instruction, after events.
      for (const auto& e : events)
        if (e.is_before) dispatch(e);
      StepResult r = run_instr(cfg_.memory, cfg_.pc, img_.layout);
      ++counters_.apply_runs;
      ++counters_.instructions;
      cfg_.memory = std::move(r.memory);
      cfg_.pc = r.pc;
      for (const auto& e : events)
        if (!e.is_before) dispatch(e);
      // Step 4: a checkpoint restored by a scenario.
      if (pending_restore_) load_checkpoint(*pending_restore_);
      // Step 5: restore and update instrumentation.
      restore_bps(cfg_.memory, cfg_.debugger.breakpoints);
      instrument(cfg_.memory, cfg_.debugger.breakpoints, cfg_.debugger.watchpoints, enabled_all(), img_);
    } catch (const std::exception& e) {
      cfg_ = std::move(snapshot);
      finish();
      pending_.clear();
      log(LogNote::Kind::Error, e.what());
      set_mode(Mode::Interactive, "error");
      return;
    }
    finish();
    auto notes = std::move(pending_);
    pending_.clear();
    for (auto& n : notes) emit(std::move(n));
    if (pending_restore_) {
      log(LogNote::Kind::Debugger, "Restored checkpoint " + std::to_string(*pending_restore_));
      pending_restore_.reset();
    }
    if (suspend_) set_mode(Mode::Interactive, "suspended");
  }

  /// Union of the events every monitor is currently sensitive to.
  std::vector<SymbolicEvent> enabled_all() const {
    std::vector<SymbolicEvent> out;
    for (const auto& m : cfg_.monitors) {
      auto evs = opts_.static_instrumentation ? m.property->sigma : enabled(m.config, *m.property);
      for (auto& e : evs)
        if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(std::move(e));
    }
    return out;
  }

  /// Resolves a breakpoint target: function name, label or @N.
  Address code_target(const std::string& t) const {
    Address a = parse_target(t);
    if (!img_.layout.code.contains(a)) throw DebuggerError("'" + t + "' is not a code address");
    return a;
  }

  Address data_target(const std::string& t) const {
    Address a = parse_target(t);
    if (img_.layout.code.contains(a) || a.value >= img_.layout.memory_size)
      throw DebuggerError("'" + t + "' is not a data address");
    return a;
  }

  std::string describe_code(Address a) const {
    std::string n = img_.code_name(a);
    if (n != to_string(a)) return to_string(a) + " (" + n + ")";
    for (const auto& f : img_.functions) {
      if (f.returns.empty() || a < f.entry || a > *std::max_element(f.returns.begin(), f.returns.end())) continue;
      return to_string(a) + " (" + f.name + "+" + std::to_string(a.value - f.entry.value) + ")";
    }
    return n;
  }

  /// Word at `a` with breakpoints removed.
  Word original_word(Address a) const {
    for (auto it = cfg_.debugger.breakpoints.rbegin(); it != cfg_.debugger.breakpoints.rend(); ++it)
      if (it->addr == a) return it->saved_instr;
    return cfg_.memory.read(a);
  }

  std::vector<std::string> check_invariants() const {
    std::vector<std::string> out;
    if (auto e = check_instr_orig(cfg_.memory, img_)) out.push_back(*e);
    if (auto e = check_bp_consistent(cfg_.memory, cfg_.debugger.breakpoints, img_)) out.push_back(*e);
    for (const auto& b : cfg_.debugger.breakpoints)
      if (cfg_.memory.read(b.addr) != kBreakpointWord)
        out.push_back("breakpoint at " + to_string(b.addr) + " is not installed");
    return out;
  }

 private:
  // ---- main-loop helpers ----------------------------------------------------

  void load_monitor(const MonitorSpec& spec) {
    spec.property.validate();
    check_instrumentable(spec.property.sigma, img_);
    MonitorInstance m;
    m.property = std::make_shared<const Property>(spec.property);
    m.config = initial_configuration(*m.property);
    if (spec.scenario) {
      dsl::link_scenario(*spec.scenario, *m.property);
      m.scenario_env = dsl::scenario_env0(*spec.scenario);
      m.scenario = spec.scenario;
    }
    un_instrument(cfg_.memory, cfg_.debugger.breakpoints, cfg_.debugger.watchpoints, enabled_all(), img_);
    cfg_.monitors.push_back(std::move(m));
    instrument(cfg_.memory, cfg_.debugger.breakpoints, cfg_.debugger.watchpoints, enabled_all(), img_);
    const auto& added = cfg_.monitors.back();
    log(LogNote::Kind::Monitor, "Initialization: " + to_string(added.property->env0));
    StateChangedNote n;
    n.monitor = cfg_.monitors.size() - 1;
    n.property = added.property->name;
    n.binding = added.config.slices[0].binding;
    n.new_state = added.config.slices[0].state;
    n.accepting = added.property->accepting.at(n.new_state);
    n.env = added.config.slices[0].env;
    n.event = "initialization";
    emit(n);
  }

  void restart(int n) {
    if (!cfg_.debugger.checkpoints.count(n)) throw DebuggerError("no checkpoint " + std::to_string(n));
    un_instrument(cfg_.memory, cfg_.debugger.breakpoints, cfg_.debugger.watchpoints, enabled_all(), img_);
    load_checkpoint(n);
    restore_bps(cfg_.memory, cfg_.debugger.breakpoints);
    instrument(cfg_.memory, cfg_.debugger.breakpoints, cfg_.debugger.watchpoints, enabled_all(), img_);
    log(LogNote::Kind::Debugger, "Restored checkpoint " + std::to_string(n) + " at " + describe_code(cfg_.pc));
  }

  void load_checkpoint(int n) {
    const Checkpoint& c = cfg_.debugger.checkpoints.at(n);
    cfg_.memory = c.memory;
    cfg_.pc = c.pc;
    for (std::size_t k = 0; k < cfg_.monitors.size(); ++k)
      cfg_.monitors[k].config =
          k < c.monitors.size() ? c.monitors[k] : initial_configuration(*cfg_.monitors[k].property);
  }

  int take_checkpoint(const IrvConfiguration& from) {
    std::vector<MonitorConfiguration> mons;
    for (const auto& m : from.monitors) mons.push_back(m.config);
    int n = next_checkpoint_index(cfg_.debugger.checkpoints);
    cfg_.debugger.checkpoints[n] =
        checkpoint_create(from.memory, from.pc, from.debugger.breakpoints, std::move(mons));
    CheckpointListNote note;
    for (const auto& [k, v] : cfg_.debugger.checkpoints) note.indices.push_back(k);
    emit(note);
    return n;
  }

  void fault(const std::string& what) {
    log(LogNote::Kind::Error, what);
    set_mode(Mode::Interactive, "fault");
  }

  void normal_step(bool ignore_user_wps) {
    StepResult probe;
    try {
      probe = run_instr(cfg_.memory, cfg_.pc, img_.layout);
    } catch (const VmError& e) {
      fault(e.what());
      return;
    }
    auto matched = watchpoints_matching(cfg_.debugger.watchpoints, probe.accesses);
    bool user = std::any_of(matched.begin(), matched.end(), [](const Watchpoint& w) { return w.is_user; });
    if (user && !ignore_user_wps) {
      set_mode(Mode::Interactive, "watchpoint");
      return;
    }
    std::vector<Watchpoint> mon;
    for (const auto& w : matched)
      if (!w.is_user) mon.push_back(w);
    if (mon.empty()) {
      ++counters_.instructions;
      cfg_.memory = std::move(probe.memory);
      cfg_.pc = probe.pc;
      return;
    }
    ++counters_.monitor_traps;
    ++counters_.monitor_wp_traps;
    std::vector<RuntimeEvent> events;
    try {
      events = wps_to_events(mon, cfg_.memory, probe.memory, enabled_all(), img_);
    } catch (const std::exception& e) {
      fault(e.what());
      return;
    }
    apply_events(events);
  }

  void handle_bp() {
    const auto& bps = cfg_.debugger.breakpoints;
    if (std::any_of(bps.begin(), bps.end(), [&](const Breakpoint& b) { return b.addr == cfg_.pc && b.is_user; })) {
      set_mode(Mode::Interactive, "breakpoint");
      return;
    }
    monitor_trap(false);
  }

  /// A monitor breakpoint at pc: events from the breakpoint, plus value
  /// events from watchpoints the trapped instruction touches.
  void monitor_trap(bool ignore_user_wps) {
    ++counters_.monitor_traps;
    ++counters_.monitor_bp_traps;
    Memory clean = cfg_.memory;
    remove_all_bps(clean, cfg_.debugger.breakpoints);
    std::vector<RuntimeEvent> events;
    try {
      auto enabled_now = enabled_all();
      auto calls = bp_to_events(clean, cfg_.pc, enabled_now, img_);
      StepResult probe = run_instr(clean, cfg_.pc, img_.layout);
      auto matched = watchpoints_matching(cfg_.debugger.watchpoints, probe.accesses);
      bool user = std::any_of(matched.begin(), matched.end(), [](const Watchpoint& w) { return w.is_user; });
      if (user && !ignore_user_wps) {
        set_mode(Mode::Interactive, "watchpoint");
        return;
      }
      std::vector<Watchpoint> mon;
      for (const auto& w : matched)
        if (!w.is_user) mon.push_back(w);
      std::vector<RuntimeEvent> values;
      if (!mon.empty()) {
        ++counters_.monitor_wp_traps;
        values = wps_to_events(mon, clean, probe.memory, enabled_now, img_);
      }
      // before calls, before values, after values, after calls
      for (const auto& e : calls)
        if (e.is_before) events.push_back(e);
      for (const auto& e : values)
        if (e.is_before) events.push_back(e);
      for (const auto& e : values)
        if (!e.is_before) events.push_back(e);
      for (const auto& e : calls)
        if (!e.is_before) events.push_back(e);
    } catch (const std::exception& e) {
      fault(e.what());
      return;
    }
    apply_events(events);
  }

  void interactive_step() {
    Decoded d = decode(cfg_.memory.read(cfg_.pc));
    if (std::holds_alternative<BreakpointTrap>(d)) {
      handle_step_bp();
    } else if (std::holds_alternative<Halt>(d)) {
      log(LogNote::Kind::Error, "Illegal Command");
    } else {
      normal_step(true);
    }
  }

  void handle_step_bp() {
    const auto& bps = cfg_.debugger.breakpoints;
    if (std::any_of(bps.begin(), bps.end(), [&](const Breakpoint& b) { return b.addr == cfg_.pc && !b.is_user; })) {
      monitor_trap(true);
      return;
    }
    Address at = cfg_.pc;
    Word orig = original_word(at);
    if (std::holds_alternative<Halt>(decode(orig))) {
      log(LogNote::Kind::Error, "Illegal Command");
      return;
    }
    cfg_.memory.write(at, orig);
    normal_step(true);
    if (has_bp_at(cfg_.debugger.breakpoints, at)) cfg_.memory.write(at, kBreakpointWord);
  }

  // ---- events and scenarios -------------------------------------------------

  void dispatch(const RuntimeEvent& e) {
    for (std::size_t i = 0; i < cfg_.monitors.size(); ++i) {
      auto& m = cfg_.monitors[i];
      MonitorStep st = update_mon(m.config, e, *m.property);
      m.config = st.config;
      for (const auto& line : st.log) log(LogNote::Kind::Monitor, line);
      for (const auto& t : st.taken) {
        if (t.action) log(LogNote::Kind::Monitor, *t.action + "()");
        if (t.source != t.destination) {
          auto it = m.property->state_actions.find(t.destination);
          if (it != m.property->state_actions.end()) log(LogNote::Kind::Monitor, it->second + "()");
        }
        const SliceInstance* s = m.config.find(t.binding);
        StateChangedNote n;
        n.monitor = i;
        n.property = m.property->name;
        n.binding = t.binding;
        n.old_state = t.source;
        n.new_state = t.destination;
        n.accepting = m.property->accepting.at(t.destination);
        if (s) n.env = s->env;
        n.event = to_string(e);
        n.transition = t.transition;
        n.spawned = t.spawned;
        emit(n);
      }
      apply_scenario(i, st.taken);
    }
    emit(EventAppliedNote{to_string(e)});
  }

  void apply_scenario(std::size_t i, const std::vector<TakenTransition>& taken) {
    auto& m = cfg_.monitors[i];
    if (!m.scenario) return;
    for (const auto& r : m.scenario->reactions)
      for (const auto& t : taken)
        if (r.state == (r.entering ? t.destination : t.source)) run_actions(r.actions, i);
  }

  void run_actions(const dsl::ActionList& actions, std::size_t i) {
    for (const auto& a : actions) run_action(a, i);
  }

  void run_action(const dsl::Action& a, std::size_t i) {
    using K = dsl::Action::Kind;
    Environment& env = cfg_.monitors[i].scenario_env;
    auto eval = [&](const dsl::Expr& e) { return dsl::evaluate(e, {}, env); };
    auto cond = [&](const dsl::Expr& e) {
      auto v = eval(e);
      if (auto* b = std::get_if<bool>(&v)) return *b;
      throw ScenarioError(dsl::where(e) + "condition must be a boolean");
    };
    switch (a.kind) {
      case K::Assign: env[a.target] = dsl::storable(eval(*a.expr), *a.expr); break;
      case K::Checkpoint: {
        int n = take_checkpoint(before_apply_ ? *before_apply_ : cfg_);
        cfg_.monitors[i].scenario_env[a.target] = Word{n};
        log(LogNote::Kind::Debugger, "Checkpoint " + std::to_string(n));
        break;
      }
      case K::If:
        run_actions(cond(*a.expr) ? a.then_branch : a.else_branch, i);
        break;
      case K::While: {
        std::size_t fuel = opts_.scenario_fuel;
        while (cond(*a.expr)) {
          if (fuel-- == 0) throw ScenarioError("scenario loop ran out of fuel");
          run_actions(a.then_branch, i);
        }
        break;
      }
      case K::Restore: {
        auto v = eval(*a.expr);
        auto* w = std::get_if<Word>(&v);
        if (!w || *w < 0 || *w > std::numeric_limits<int>::max() ||
            !cfg_.debugger.checkpoints.count(static_cast<int>(*w)))
          throw ScenarioError("restore-checkpoint: no checkpoint " + dsl::show(v));
        pending_restore_ = static_cast<int>(*w);
        break;
      }
      case K::SetBreakpoint:
        add_bp_entry(cfg_.memory, cfg_.debugger.breakpoints, code_target(a.target), true, img_.layout);
        break;
      case K::UnsetBreakpoint: remove_bp_entry(cfg_.debugger.breakpoints, code_target(a.target), true); break;
      case K::SetWatchpoint:
        set_wp(cfg_.debugger.watchpoints, data_target(a.target), a.mode.find('r') != std::string::npos,
               a.mode.find('w') != std::string::npos, true);
        break;
      case K::UnsetWatchpoint: unset_wp(cfg_.debugger.watchpoints, data_target(a.target), true); break;
      case K::Suspend: suspend_ = true; break;
      case K::Print: log(LogNote::Kind::Monitor, dsl::show(eval(*a.expr))); break;
    }
  }

  // ---- misc -----------------------------------------------------------------

  Address parse_target(const std::string& t) const {
    if (!t.empty() && t[0] == '@') {
      try {
        std::size_t used = 0;
        unsigned long v = std::stoul(t.substr(1), &used);
        if (used + 1 == t.size() && v < img_.layout.memory_size) return Address{static_cast<std::uint32_t>(v)};
      } catch (const std::exception&) {
      }
      throw DebuggerError("bad address '" + t + "'");
    }
    if (auto a = img_.lookup(t)) return *a;
    throw DebuggerError("unknown symbol '" + t + "'");
  }

  void set_mode(Mode m, const std::string& reason) {
    if (cfg_.debugger.mode == m) return;
    cfg_.debugger.mode = m;
    emit(ModeChangedNote{m, reason});
  }

  void log(LogNote::Kind k, std::string line) { emit(LogNote{k, std::move(line)}); }

  void emit(Note n) {
    if (buffering_) {
      pending_.push_back(std::move(n));
      return;
    }
    if (observer_) observer_(n);
  }

  void check_invariants_now() {
    ++counters_.invariant_checks;
    auto v = check_invariants();
    if (v.empty()) return;
    counters_.invariant_violations += v.size();
    for (auto& s : v) {
      if (invariant_failures_.size() < 100) invariant_failures_.push_back(s);
      log(LogNote::Kind::Error, "invariant violated: " + s);
    }
  }

  ProgramImage img_;
  ExecutiveOptions opts_;
  IrvConfiguration cfg_;
  Counters counters_;
  std::function<void(const Note&)> observer_;
  std::vector<std::string> invariant_failures_;

  const IrvConfiguration* before_apply_ = nullptr;
  std::optional<int> pending_restore_;
  bool suspend_ = false;
  bool buffering_ = false;
  std::vector<Note> pending_;
};

}  // namespace irv
