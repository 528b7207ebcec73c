#pragma once

// Breakpoints, watchpoints, checkpoints, instrumentation of the events a
// monitor is sensitive to, and event generation from traps.

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "irv/assembler.hpp"
#include "irv/event.hpp"
#include "irv/monitor.hpp"
#include "irv/vm.hpp"

namespace irv {

class DebuggerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { Interactive, Passive };

inline const char* to_string(Mode m) { return m == Mode::Interactive ? "interactive" : "passive"; }

struct Breakpoint {
  Address addr;
  Word saved_instr = 0;
  bool is_user = false;

  bool operator==(const Breakpoint&) const = default;
};

struct Watchpoint {
  Address addr;
  bool on_read = false;
  bool on_write = false;
  bool is_user = false;

  bool operator==(const Watchpoint&) const = default;
};

inline std::string mode_string(bool r, bool w) { return std::string(r ? "r" : "") + (w ? "w" : ""); }

struct Checkpoint {
  Memory memory;  // never contains the breakpoint word in code
  Address pc;
  std::vector<MonitorConfiguration> monitors;

  bool operator==(const Checkpoint&) const = default;
};

struct DebuggerState {
  Mode mode = Mode::Interactive;
  std::vector<Breakpoint> breakpoints;  // most recent first
  std::vector<Watchpoint> watchpoints;  // most recent first
  std::map<int, Checkpoint> checkpoints;
};

// ---------------------------------------------------------------------------
// Breakpoints
// ---------------------------------------------------------------------------

/// Adds a list entry without touching memory. The saved instruction is the
/// one held by an existing entry at the same address, if any, so that it is
/// never the breakpoint word.
inline void add_bp_entry(const Memory& memory, std::vector<Breakpoint>& bps, Address addr, bool is_user,
                         const MachineLayout& layout) {
  if (!layout.code.contains(addr)) throw DebuggerError("breakpoint address outside code: " + to_string(addr));
  Word saved = memory.read(addr);
  for (const auto& b : bps)
    if (b.addr == addr) saved = b.saved_instr;
  if (saved == kBreakpointWord)
    throw DebuggerError("breakpoint word at " + to_string(addr) + " is not known to the debugger");
  bps.insert(bps.begin(), Breakpoint{addr, saved, is_user});
}

/// Removes the first entry matching (addr, is_user) from the list only.
inline Breakpoint remove_bp_entry(std::vector<Breakpoint>& bps, Address addr, bool is_user) {
  auto it = std::find_if(bps.begin(), bps.end(),
                         [&](const Breakpoint& b) { return b.addr == addr && b.is_user == is_user; });
  if (it == bps.end())
    throw DebuggerError(std::string("no ") + (is_user ? "user" : "monitor") + " breakpoint at " + to_string(addr));
  Breakpoint removed = *it;
  bps.erase(it);
  return removed;
}

inline bool has_bp_at(const std::vector<Breakpoint>& bps, Address addr) {
  return std::any_of(bps.begin(), bps.end(), [&](const Breakpoint& b) { return b.addr == addr; });
}

inline void set_bp(Memory& memory, std::vector<Breakpoint>& bps, Address addr, bool is_user,
                   const MachineLayout& layout) {
  add_bp_entry(memory, bps, addr, is_user, layout);
  memory.write(addr, kBreakpointWord);
}

/// The cell keeps the breakpoint word while another entry at addr remains.
inline Breakpoint unset_bp(Memory& memory, std::vector<Breakpoint>& bps, Address addr, bool is_user) {
  Breakpoint removed = remove_bp_entry(bps, addr, is_user);
  if (!has_bp_at(bps, addr)) memory.write(addr, removed.saved_instr);
  return removed;
}

/// Writes back the original instruction at every breakpoint address; the
/// oldest entry per address wins.
inline void remove_all_bps(Memory& memory, const std::vector<Breakpoint>& bps) {
  for (auto it = bps.rbegin(); it != bps.rend(); ++it) {
    bool older = std::any_of(it.base(), bps.end(), [&](const Breakpoint& b) { return b.addr == it->addr; });
    if (!older) memory.write(it->addr, it->saved_instr);
  }
}

inline void restore_bps(Memory& memory, const std::vector<Breakpoint>& bps) {
  for (const auto& b : bps) memory.write(b.addr, kBreakpointWord);
}

// ---------------------------------------------------------------------------
// Watchpoints
// ---------------------------------------------------------------------------

inline void set_wp(std::vector<Watchpoint>& wps, Address addr, bool r, bool w, bool is_user) {
  if (!r && !w) throw DebuggerError("watchpoint needs a read or write mode");
  wps.insert(wps.begin(), Watchpoint{addr, r, w, is_user});
}

/// Removes the first entry at addr with the given owner, and mode if given.
inline Watchpoint unset_wp(std::vector<Watchpoint>& wps, Address addr, bool is_user,
                           std::optional<std::pair<bool, bool>> mode = std::nullopt) {
  auto it = std::find_if(wps.begin(), wps.end(), [&](const Watchpoint& w) {
    return w.addr == addr && w.is_user == is_user &&
           (!mode || (w.on_read == mode->first && w.on_write == mode->second));
  });
  if (it == wps.end())
    throw DebuggerError(std::string("no ") + (is_user ? "user" : "monitor") + " watchpoint at " + to_string(addr));
  Watchpoint removed = *it;
  wps.erase(it);
  return removed;
}

/// An access matches when it touches the address in a watched mode.
inline bool access_matches(const Watchpoint& w, const AccessRecord& a) {
  return w.addr == a.addr && ((a.read && w.on_read) || (a.write && w.on_write));
}

inline std::vector<Watchpoint> watchpoints_matching(const std::vector<Watchpoint>& wps, const AccessRecord& a) {
  std::vector<Watchpoint> out;
  for (const auto& w : wps)
    if (access_matches(w, a)) out.push_back(w);
  return out;
}

/// All watchpoints matched by any of the accesses, in list order.
inline std::vector<Watchpoint> watchpoints_matching(const std::vector<Watchpoint>& wps,
                                                    const std::vector<AccessRecord>& accesses) {
  std::vector<Watchpoint> out;
  for (const auto& w : wps)
    if (std::any_of(accesses.begin(), accesses.end(), [&](const AccessRecord& a) { return access_matches(w, a); }))
      out.push_back(w);
  return out;
}

// ---------------------------------------------------------------------------
// Instrumentation
// ---------------------------------------------------------------------------

inline Address data_address(const std::string& var, const ProgramImage& img) {
  auto a = img.lookup(var);
  if (!a || img.layout.code.contains(*a)) throw DebuggerError("unknown variable '" + var + "'");
  return *a;
}

inline const FunctionInfo& function_named(const std::string& name, const ProgramImage& img) {
  const FunctionInfo* f = img.function(name);
  if (!f) throw DebuggerError("unknown function '" + name + "'");
  return *f;
}

/// Entry for before-call events, every RET for after-call events.
inline std::vector<Address> evt_to_breakpoints(const SymbolicEvent& e, const ProgramImage& img) {
  if (e.etype != EventType::FunctionCall) return {};
  const FunctionInfo& f = function_named(e.name, img);
  if (e.is_before) return {f.entry};
  return f.returns;
}

inline std::vector<Watchpoint> evt_to_watchpoints(const SymbolicEvent& e, const ProgramImage& img) {
  switch (e.etype) {
    case EventType::FunctionCall: return {};
    case EventType::ValueWrite: return {Watchpoint{data_address(e.name, img), false, true, false}};
    case EventType::ValueRead: return {Watchpoint{data_address(e.name, img), true, false, false}};
    case EventType::UpdateExpr: {
      std::vector<Watchpoint> out;
      for (const auto& v : UpdateExpression(e.name).variables())
        out.push_back(Watchpoint{data_address(v, img), false, true, false});
      return out;
    }
  }
  return {};
}

/// Checks that every event of the alphabet can be placed in this program.
inline void check_instrumentable(const std::vector<SymbolicEvent>& sigma, const ProgramImage& img) {
  for (const auto& e : sigma) {
    evt_to_breakpoints(e, img);
    evt_to_watchpoints(e, img);
  }
}

/// Monitor breakpoint addresses and watchpoints needed for `events`, without
/// duplicates, in event order.
inline std::vector<Address> monitor_breakpoints(const std::vector<SymbolicEvent>& events, const ProgramImage& img) {
  std::vector<Address> out;
  for (const auto& e : events)
    for (Address a : evt_to_breakpoints(e, img))
      if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
  return out;
}

inline std::vector<Watchpoint> monitor_watchpoints(const std::vector<SymbolicEvent>& events,
                                                   const ProgramImage& img) {
  std::vector<Watchpoint> out;
  for (const auto& e : events)
    for (const auto& w : evt_to_watchpoints(e, img))
      if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
  return out;
}

inline void instrument(Memory& memory, std::vector<Breakpoint>& bps, std::vector<Watchpoint>& wps,
                       const std::vector<SymbolicEvent>& enabled_events, const ProgramImage& img) {
  for (Address a : monitor_breakpoints(enabled_events, img)) set_bp(memory, bps, a, false, img.layout);
  for (const auto& w : monitor_watchpoints(enabled_events, img)) set_wp(wps, w.addr, w.on_read, w.on_write, false);
}

inline void un_instrument(Memory& memory, std::vector<Breakpoint>& bps, std::vector<Watchpoint>& wps,
                          const std::vector<SymbolicEvent>& enabled_events, const ProgramImage& img) {
  for (Address a : monitor_breakpoints(enabled_events, img))
    if (std::any_of(bps.begin(), bps.end(), [&](const Breakpoint& b) { return b.addr == a && !b.is_user; }))
      unset_bp(memory, bps, a, false);
  for (const auto& w : monitor_watchpoints(enabled_events, img))
    if (std::find(wps.begin(), wps.end(), w) != wps.end())
      unset_wp(wps, w.addr, false, std::pair{w.on_read, w.on_write});
}

// ---------------------------------------------------------------------------
// Event generation
// ---------------------------------------------------------------------------

/// Call events placed at pc among `events`: before events at a function
/// entry, after events at one of its RET instructions. Values are read in
/// the memory as it is before the instruction at pc runs.
inline std::vector<RuntimeEvent> bp_to_events(const Memory& memory, Address pc,
                                              const std::vector<SymbolicEvent>& events, const ProgramImage& img) {
  std::vector<RuntimeEvent> out;
  for (const auto& e : events) {
    if (e.etype != EventType::FunctionCall) continue;
    const FunctionInfo* f = img.function(e.name);
    if (!f) continue;
    bool here = e.is_before ? f->entry == pc
                            : std::find(f->returns.begin(), f->returns.end(), pc) != f->returns.end();
    if (!here) continue;
    EventContext ctx{EventType::FunctionCall, e.is_before, f, std::nullopt, std::nullopt};
    out.push_back(instantiate(e, memory, img, ctx));
  }
  return out;
}

/// Value events triggered by an instruction that turned `pre` into `post`
/// and whose accesses matched `matched`. Before events read `pre`, after
/// events read `post`. Update events fire only when the value changes.
inline std::vector<RuntimeEvent> wps_to_events(const std::vector<Watchpoint>& matched, const Memory& pre,
                                               const Memory& post, const std::vector<SymbolicEvent>& events,
                                               const ProgramImage& img) {
  std::vector<RuntimeEvent> out;
  auto hit = [&](const Watchpoint& need) {
    return std::any_of(matched.begin(), matched.end(), [&](const Watchpoint& w) {
      return w.addr == need.addr && ((need.on_read && w.on_read) || (need.on_write && w.on_write));
    });
  };
  for (const auto& e : events) {
    if (e.etype == EventType::FunctionCall) continue;
    auto need = evt_to_watchpoints(e, img);
    if (!std::any_of(need.begin(), need.end(), hit)) continue;
    EventContext ctx{e.etype, e.is_before, nullptr, std::nullopt, std::nullopt};
    if (e.etype == EventType::UpdateExpr) {
      UpdateExpression x(e.name);
      ctx.old_value = x.evaluate([&](const std::string& v) { return pre.read(data_address(v, img)); });
      ctx.new_value = x.evaluate([&](const std::string& v) { return post.read(data_address(v, img)); });
      if (*ctx.old_value == *ctx.new_value) continue;
    } else {
      Address a = data_address(e.name, img);
      ctx.old_value = pre.read(a);
      ctx.new_value = post.read(a);
    }
    out.push_back(instantiate(e, e.is_before ? pre : post, img, ctx));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline Checkpoint checkpoint_create(const Memory& memory, Address pc, const std::vector<Breakpoint>& bps,
                                    std::vector<MonitorConfiguration> monitors) {
  Checkpoint c{memory, pc, std::move(monitors)};
  remove_all_bps(c.memory, bps);
  return c;
}

inline int next_checkpoint_index(const std::map<int, Checkpoint>& cks) {
  int n = 0;
  while (cks.count(n)) ++n;
  return n;
}

// ---------------------------------------------------------------------------
// Invariants
// ---------------------------------------------------------------------------

/// Every code cell holds the breakpoint word or its original instruction.
inline std::optional<std::string> check_instr_orig(const Memory& memory, const ProgramImage& img) {
  for (Address a = img.layout.code.begin; a < img.layout.code.end; a = a.next()) {
    Word w = memory.read(a);
    if (w != kBreakpointWord && w != img.initial_memory.read(a))
      return "code cell " + to_string(a) + " holds neither the breakpoint word nor its original instruction";
  }
  return std::nullopt;
}

/// Every breakpoint word in code is known to the debugger with the original
/// instruction saved.
inline std::optional<std::string> check_bp_consistent(const Memory& memory, const std::vector<Breakpoint>& bps,
                                                      const ProgramImage& img) {
  for (Address a = img.layout.code.begin; a < img.layout.code.end; a = a.next()) {
    if (memory.read(a) != kBreakpointWord) continue;
    bool known = std::any_of(bps.begin(), bps.end(), [&](const Breakpoint& b) {
      return b.addr == a && b.saved_instr == img.initial_memory.read(a);
    });
    if (!known) return "breakpoint word at " + to_string(a) + " has no matching breakpoint entry";
  }
  for (const auto& b : bps)
    if (b.saved_instr != img.initial_memory.read(b.addr))
      return "breakpoint at " + to_string(b.addr) + " saved a word that is not the original instruction";
  return std::nullopt;
}

}  // namespace irv
