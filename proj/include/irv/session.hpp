#pragma once

// The command interpreter behind the `irv` REPL: parses command lines, maps
// them to executive commands or session actions, and renders what happens.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "irv/assembler.hpp"
#include "irv/dsl/lower.hpp"
#include "irv/executive.hpp"

namespace irv::cli {

enum class Verb {
  Load,
  LoadProperty,
  LoadScenario,
  Run,
  Continue,
  Step,
  Break,
  Watch,
  Checkpoint,
  Restart,
  InfoMonitor,
  InfoBreakpoints,
  InfoCheckpoints,
  Print,
  ShowGraph,
  Interrupt,
  Help,
  Exit,
  Empty,
  Unknown
};

struct ParsedLine {
  Verb verb = Verb::Empty;
  std::vector<std::string> args;
  std::string text;
};

struct VerbInfo {
  Verb verb;
  const char* name;
  const char* usage;
  int min_args;
  int max_args;
};

inline const std::vector<VerbInfo>& verb_table() {
  static const std::vector<VerbInfo> t = {
      {Verb::Load, "load", "load <program.asm>", 1, 1},
      {Verb::LoadProperty, "load-property", "load-property <file.prop>", 1, 1},
      {Verb::LoadScenario, "load-scenario", "load-scenario <file.sc>", 1, 1},
      {Verb::Run, "run", "run", 0, 0},
      {Verb::Continue, "continue", "continue", 0, 0},
      {Verb::Step, "step", "step", 0, 0},
      {Verb::Break, "break", "break <function|label|@N>", 1, 1},
      {Verb::Watch, "watch", "watch <r|w|rw> <variable|@N>", 2, 2},
      {Verb::Checkpoint, "checkpoint", "checkpoint", 0, 0},
      {Verb::Restart, "restart", "restart <n>", 1, 1},
      {Verb::InfoMonitor, "info monitor", "info monitor", 0, 0},
      {Verb::InfoBreakpoints, "info breakpoints", "info breakpoints", 0, 0},
      {Verb::InfoCheckpoints, "info checkpoints", "info checkpoints", 0, 0},
      {Verb::Print, "print", "print <variable|@N>", 1, 1},
      {Verb::ShowGraph, "show-graph", "show-graph", 0, 0},
      {Verb::Interrupt, "interrupt", "interrupt", 0, 0},
      {Verb::Help, "help", "help", 0, 0},
      {Verb::Exit, "exit", "exit", 0, 0},
  };
  return t;
}

inline ParsedLine classify(const std::string& line) {
  ParsedLine p;
  p.text = line;
  std::istringstream in(line);
  std::vector<std::string> words;
  for (std::string w; in >> w;) {
    if (w[0] == '#') break;
    words.push_back(w);
  }
  if (words.empty()) return p;
  std::size_t used = 1;
  const VerbInfo* found = nullptr;
  for (const auto& v : verb_table()) {
    std::string name = v.name;
    auto sp = name.find(' ');
    if (sp == std::string::npos) {
      if (words[0] == name) found = &v;
    } else if (words.size() >= 2 && words[0] == name.substr(0, sp) && words[1] == name.substr(sp + 1)) {
      found = &v;
      used = 2;
    }
    if (found) break;
  }
  if (!found) {
    p.verb = Verb::Unknown;
    p.args.assign(words.begin(), words.end());
    return p;
  }
  p.args.assign(words.begin() + static_cast<std::ptrdiff_t>(used), words.end());
  int n = static_cast<int>(p.args.size());
  p.verb = (n < found->min_args || n > found->max_args) ? Verb::Unknown : found->verb;
  return p;
}

/// The executive command a verb maps to, if it is not a session action.
inline std::optional<UserCommand::Kind> command_kind(Verb v) {
  using K = UserCommand::Kind;
  switch (v) {
    case Verb::LoadProperty: return K::LoadMonitor;
    case Verb::Run:
    case Verb::Continue: return K::Continue;
    case Verb::Step: return K::Step;
    case Verb::Break: return K::Break;
    case Verb::Watch: return K::Watch;
    case Verb::Checkpoint: return K::Checkpoint;
    case Verb::Restart: return K::Restart;
    case Verb::Exit: return K::Exit;
    case Verb::Unknown: return K::Unknown;
    default: return std::nullopt;
  }
}

enum class LineStatus { Ok, Error, Exit };

struct SessionOptions {
  std::filesystem::path base_dir = ".";
  bool color = false;
  std::size_t max_ticks = 50'000'000;
};

class Session {
 public:
  explicit Session(std::ostream& out, SessionOptions opts = {}) : out_(out), opts_(std::move(opts)) {}

  Executive* executive() { return exec_.get(); }
  bool violation_seen() const { return violation_; }

  /// Called with every executive notification.
  void set_note_listener(std::function<void(const Note&)> f) { note_listener_ = std::move(f); }
  /// Called with every line the session prints.
  void set_output_listener(std::function<void(const std::string&)> f) { output_listener_ = std::move(f); }
  /// Starts the session server; returns a line describing where it listens.
  void set_graph_starter(std::function<std::string()> f) { graph_starter_ = std::move(f); }
  /// Polled between ticks while the program runs; returning true interrupts.
  void set_interrupt_poll(std::function<bool()> f) { interrupt_poll_ = std::move(f); }

  LineStatus execute(const std::string& line) {
    errors_ = 0;
    ParsedLine p = classify(line);
    try {
      switch (p.verb) {
        case Verb::Empty: return LineStatus::Ok;
        case Verb::Load: load_program(p.args[0]); break;
        case Verb::LoadProperty: load_property(p.args[0]); break;
        case Verb::LoadScenario: load_scenario(p.args[0]); break;
        case Verb::Run:
        case Verb::Continue: drive(UserCommand::cont()); break;
        case Verb::Step: {
          drive(UserCommand::step());
          print_location();
          break;
        }
        case Verb::Break: drive(UserCommand::brk(p.args[0])); break;
        case Verb::Watch: {
          const std::string& m = p.args[0];
          if (m != "r" && m != "w" && m != "rw") throw std::runtime_error("watch mode must be r, w or rw");
          drive(UserCommand::watch(m.find('r') != std::string::npos, m.find('w') != std::string::npos, p.args[1]));
          break;
        }
        case Verb::Checkpoint: drive(UserCommand::checkpoint()); break;
        case Verb::Restart: {
          int n = 0;
          try {
            n = std::stoi(p.args[0]);
          } catch (const std::exception&) {
            throw std::runtime_error("restart expects a checkpoint number");
          }
          drive(UserCommand::restart(n));
          print_location();
          break;
        }
        case Verb::InfoMonitor: info_monitor(); break;
        case Verb::InfoBreakpoints: info_breakpoints(); break;
        case Verb::InfoCheckpoints: info_checkpoints(); break;
        case Verb::Print: print_value(p.args[0]); break;
        case Verb::ShowGraph: {
          if (!graph_starter_) throw std::runtime_error("no session server available");
          say(graph_starter_());
          break;
        }
        case Verb::Interrupt: say("The program is not running."); break;
        case Verb::Help:
          for (const auto& v : verb_table()) say(std::string("  ") + v.usage);
          break;
        case Verb::Exit:
          if (exec_) exec_->tick(Input{UserCommand::exit()});
          return LineStatus::Exit;
        case Verb::Unknown: {
          if (exec_) {
            UserCommand c = UserCommand::of(UserCommand::Kind::Unknown, p.text);
            drive(c);
          } else {
            error("Illegal Command");
          }
          break;
        }
      }
    } catch (const std::exception& e) {
      error(e.what());
    }
    return errors_ ? LineStatus::Error : LineStatus::Ok;
  }

  /// Runs every line; stops at the first failing line when `stop_on_error`.
  /// Returns 0, 1 on a failing line, or 2 when `fail_on_violation` is set and
  /// a non-accepting state was entered.
  int run_script(std::istream& in, bool stop_on_error = true, bool fail_on_violation = false) {
    for (std::string line; std::getline(in, line);) {
      if (echo_) say("(irv) " + line);
      LineStatus s = execute(line);
      if (s == LineStatus::Exit) break;
      if (s == LineStatus::Error && stop_on_error) return 1;
    }
    return fail_on_violation && violation_ ? 2 : 0;
  }

  void set_echo(bool on) { echo_ = on; }

 private:
  std::filesystem::path resolve(const std::string& f) const {
    std::filesystem::path p(f);
    return p.is_absolute() ? p : opts_.base_dir / p;
  }

  std::string read(const std::string& f) const {
    std::ifstream in(resolve(f), std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + f + "'");
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  void require_program() const {
    if (!exec_) throw std::runtime_error("no program loaded");
  }

  void load_program(const std::string& f) {
    ProgramImage img = assemble(read(f));
    std::size_t n = img.layout.code.size();
    exec_ = std::make_unique<Executive>(std::move(img));
    exec_->set_observer([this](const Note& n) { on_note(n); });
    say("Loaded " + f + " (" + std::to_string(n) + " code words)");
  }

  void load_property(const std::string& f) {
    require_program();
    std::string name = std::filesystem::path(f).stem().string();
    Property prop = dsl::load_property(read(f), name);
    drive(UserCommand::load_monitor({std::move(prop), std::nullopt}));
  }

  void load_scenario(const std::string& f) {
    require_program();
    if (exec_->monitors().empty()) throw std::runtime_error("load a property before its scenario");
    exec_->attach_scenario(exec_->monitors().size() - 1, dsl::parse_scenario(read(f)));
    say("Scenario " + f + " attached to " + exec_->monitors().back().property->name);
  }

  void drive(const UserCommand& c) {
    require_program();
    exec_->tick(Input{c});
    std::function<std::optional<Input>()> poll;
    if (interrupt_poll_)
      poll = [this]() -> std::optional<Input> {
        if (interrupt_poll_()) return Input{Interrupt{}};
        return std::nullopt;
      };
    exec_->run_passive(opts_.max_ticks, poll);
    if (exec_->mode() == Mode::Passive) error("tick limit reached; the program is still running");
  }

  void print_location() {
    Address pc = exec_->pc();
    say(exec_->describe_code(pc) + ": " + disassemble(exec_->original_word(pc), exec_->image()));
  }

  void info_monitor() {
    require_program();
    if (exec_->monitors().empty()) {
      say("No monitor loaded.");
      return;
    }
    for (const auto& m : exec_->monitors()) {
      say("Monitor " + m.property->name + ":");
      for (const auto& s : m.config.slices) {
        std::string verdict = m.property->accepting.at(s.state) ? "accepting" : "non-accepting";
        std::string line = "  ";
        if (!s.binding.empty()) line += "slice " + to_string(s.binding) + ": ";
        line += s.state + " (" + to_string(s.env) + ") " + verdict;
        say(line);
      }
      if (m.scenario) say("  scenario: " + (m.scenario_env.empty() ? std::string("-") : to_string(m.scenario_env)));
    }
  }

  void info_breakpoints() {
    require_program();
    const auto& d = exec_->debugger();
    if (d.breakpoints.empty() && d.watchpoints.empty()) say("No breakpoints or watchpoints.");
    for (const auto& b : d.breakpoints)
      say(std::string(b.is_user ? "  user    " : "  monitor ") + "break " + exec_->describe_code(b.addr));
    for (const auto& w : d.watchpoints)
      say(std::string(w.is_user ? "  user    " : "  monitor ") + "watch " + mode_string(w.on_read, w.on_write) + " " +
          exec_->image().data_name(w.addr) + " " + to_string(w.addr));
  }

  void info_checkpoints() {
    require_program();
    const auto& cks = exec_->debugger().checkpoints;
    if (cks.empty()) say("No checkpoints.");
    for (const auto& [n, c] : cks) say("  " + std::to_string(n) + " at " + exec_->describe_code(c.pc));
  }

  void print_value(const std::string& t) {
    require_program();
    Address a = exec_->data_target(t);
    say(exec_->image().data_name(a) + " = " + std::to_string(exec_->memory().read(a)));
  }

  void on_note(const Note& n) {
    if (note_listener_) note_listener_(n);
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, LogNote>) {
            switch (v.kind) {
              case LogNote::Kind::Monitor: say(prefix(std::nullopt) + v.line); break;
              case LogNote::Kind::Debugger: say(v.line); break;
              case LogNote::Kind::Error: error(v.line); break;
            }
          } else if constexpr (std::is_same_v<T, StateChangedNote>) {
            if (!v.accepting) violation_ = true;
            std::string s = prefix(v.monitor) + "Current state";
            if (!v.binding.empty()) s += " " + to_string(v.binding);
            s += ": " + v.new_state + " (" + to_string(v.env) + ")";
            if (!v.accepting && opts_.color) s = "\x1b[31m" + s + "\x1b[0m";
            say(s);
          } else if constexpr (std::is_same_v<T, ModeChangedNote>) {
            if (v.mode != Mode::Interactive) return;
            if (v.reason == "finished") {
              say("[Program finished.]");
              return;
            }
            say("[Execution stopped.]");
            std::string at = exec_->describe_code(exec_->pc());
            if (v.reason == "breakpoint" || v.reason == "watchpoint")
              say("Stopped by a " + v.reason + " at " + at);
            else if (v.reason == "suspended")
              say("Suspended by the scenario at " + at);
            else if (v.reason == "interrupted")
              say("Interrupted at " + at);
          }
        },
        n);
  }

  std::string prefix(std::optional<std::size_t> monitor) const {
    if (!exec_ || exec_->monitors().size() <= 1 || !monitor) return "[irv] ";
    return "[irv:" + exec_->monitors()[*monitor].property->name + "] ";
  }

  void say(const std::string& line) {
    out_ << line << '\n';
    if (output_listener_) output_listener_(line);
  }

  void error(const std::string& line) {
    ++errors_;
    std::string s = "error: " + line;
    if (opts_.color) s = "\x1b[31m" + s + "\x1b[0m";
    say(s);
  }

  std::ostream& out_;
  SessionOptions opts_;
  std::unique_ptr<Executive> exec_;
  std::function<void(const Note&)> note_listener_;
  std::function<void(const std::string&)> output_listener_;
  std::function<std::string()> graph_starter_;
  std::function<bool()> interrupt_poll_;
  bool violation_ = false;
  bool echo_ = false;
  int errors_ = 0;
};

}  // namespace irv::cli
