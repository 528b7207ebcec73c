// One line per acceptance criterion; exit status 0 only when all pass.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "irv/dsl/printer.hpp"
#include "irv/harness.hpp"

using namespace irv;
using namespace irv::harness;

namespace {

constexpr std::uint64_t kSeed = 20240601;
constexpr double kQueueSeconds = 1.0;
constexpr double kCorrespondenceSeconds = 60.0;
constexpr double kTrapRatio = 0.5;

std::string source(const std::string& rel) {
  std::ifstream in(std::string(IRV_SOURCE_DIR) + "/" + rel);
  if (!in) throw std::runtime_error("cannot open " + rel);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int failures = 0;
std::size_t invariant_checks = 0;
std::size_t invariant_violations = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  failures += ok ? 0 : 1;
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x) {
  std::ostringstream o;
  o.precision(3);
  o << x;
  return o.str();
}

// Index of the first call event after which a plain EFSM over the queue
// property is in sink, from the standalone run.
std::optional<std::size_t> queue_oracle_index(const ProgramImage& img, const Property& prop) {
  EfsmState m{prop.init, prop.env0};
  std::size_t index = 0;
  for (const auto& c : run_standalone(img)) {
    auto events = bp_to_events(c.memory, c.pc, prop.sigma, img);
    for (const auto& e : events) {
      efsm_step(m, e, prop);
      if (m.state == "sink") return index;
      ++index;
    }
  }
  return std::nullopt;
}

std::string run_cli_script(const std::string& script) {
  std::string cmd = std::string(IRV_CLI_PATH) + " --script " + script + " 2>&1";
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return out;
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, p)) > 0;) out.append(buf, n);
  pclose(p);
  return out;
}

void queue_overflow() {
  auto t0 = std::chrono::steady_clock::now();
  ProgramImage img = assemble(source("samples/queue.asm"));
  Property prop = dsl::load_property(source("samples/queue.prop"), "queue");
  auto expected = queue_oracle_index(img, prop);

  Executive ex(img);
  std::size_t applied = 0;
  std::optional<std::size_t> sink_at;
  std::string sink_event;
  ex.set_observer([&](const Note& n) {
    if (auto* s = std::get_if<StateChangedNote>(&n); s && s->new_state == "sink" && !sink_at) {
      sink_at = applied;
      sink_event = s->event;
    }
    if (std::holds_alternative<EventAppliedNote>(n)) ++applied;
  });
  ex.command(UserCommand::load_monitor({prop, dsl::parse_scenario(source("samples/overflow.sc"))}));
  ex.command(UserCommand::cont());
  bool halted_there = ex.mode() == Mode::Interactive && !ex.at_stop() &&
                      ex.pc() == img.function("queue_push")->entry.next();
  std::string transcript = run_cli_script(std::string(IRV_SOURCE_DIR) + "/samples/queue_demo.irv");
  bool violation_line = transcript.find("[irv] Overflow detected!") != std::string::npos &&
                        transcript.find("[irv] Current state: sink") != std::string::npos;
  double secs = since(t0);
  invariant_checks += ex.counters().invariant_checks;
  invariant_violations += ex.counters().invariant_violations;

  bool ok = expected && sink_at == expected && *expected == 2 && halted_there && violation_line &&
            secs < kQueueSeconds;
  report(ok, "queue-overflow",
         "sink entered at event " + (sink_at ? std::to_string(*sink_at) : std::string("none")) + " (" + sink_event +
             "), oracle " + (expected ? std::to_string(*expected) : std::string("none")) +
             ", expected 2 (second push); suspended at " + to_string(ex.pc()) + (halted_there ? "" : " (wrong)") +
             "; transcript violation line " + (violation_line ? "present" : "missing") + "; " + fmt(secs) +
             " s < " + fmt(kQueueSeconds) + " s");
}

void suite_line(const std::string& name, const SuiteResult& r, std::size_t want_cases, double max_secs,
                const std::string& what) {
  invariant_checks += r.invariant_checks;
  invariant_violations += r.invariant_violations;
  bool ok = r.cases == want_cases && r.failures == 0 && r.seconds < max_secs;
  std::string d = std::to_string(r.cases - r.failures) + "/" + std::to_string(r.cases) + " " + what + ", " +
                  fmt(r.seconds) + " s";
  if (max_secs < 1e9) d += " < " + fmt(max_secs) + " s";
  if (!r.details.empty()) d += "; first failure: " + r.details.front();
  report(ok, name, d);
}

void trap_counts() {
  ProgramImage img = assemble(stack_program());
  Property prop = dsl::load_property(stack_property(), "stack");
  TrapCount dyn = count_traps(img, prop, false);
  TrapCount stat = count_traps(img, prop, true);
  bool same_end = dyn.final_states == stat.final_states && dyn.instructions == stat.instructions;
  bool ok = stat.traps > 0 && static_cast<double>(dyn.traps) <= kTrapRatio * static_cast<double>(stat.traps) &&
            same_end;
  report(ok, "dynamic-instrumentation",
         "monitor traps dynamic " + std::to_string(dyn.traps) + " vs static " + std::to_string(stat.traps) +
             " (ratio " + fmt(static_cast<double>(dyn.traps) / static_cast<double>(stat.traps)) + " <= " +
             fmt(kTrapRatio) + ")" + (same_end ? "" : "; runs disagree on the verdict"));
}

void dsl_goldens() {
  std::vector<std::string> problems;
  for (const char* f : {"tests/golden/queue.prop", "tests/golden/queue_short.prop"}) {
    auto ast = dsl::parse_property(source(f));
    auto printed = dsl::print_property(ast);
    if (!(dsl::parse_property(printed) == ast)) problems.push_back(std::string(f) + " does not round-trip");
    Property p = dsl::lower(ast, "queue");
    if (!(p.env0 == Environment{{"N", Word{0}}, {"maxSize", Word{0}}}))
      problems.push_back(std::string(f) + " env0 is " + to_string(p.env0));
    if (p.states != std::vector<std::string>{"init", "queue_ready", "sink"})
      problems.push_back(std::string(f) + " has unexpected states");
  }
  auto sc = dsl::parse_scenario(source("tests/golden/counter.sc"));
  if (!(dsl::parse_scenario(dsl::print_scenario(sc)) == sc)) problems.push_back("counter.sc does not round-trip");
  if (!(dsl::scenario_env0(sc) == Environment{{"accesses", Word{0}}})) problems.push_back("counter.sc env0");
  report(problems.empty(), "dsl-goldens",
         problems.empty() ? "queue properties and counter scenario parse, lower and round-trip; env0 = N = 0, maxSize = 0"
                          : problems.front());
}

}  // namespace

int main() {
  try {
    queue_overflow();
    suite_line("preservation", correspondence_suite(kSeed, 200), 200, kCorrespondenceSeconds,
               "random program/property/script cases with zero divergences");
    suite_line("slicing-oracle", slicing_suite(kSeed + 100000, 100), 100, 1e18,
               "keyed traces equal to the per-key EFSM oracle");
    suite_line("checkpoint-round-trip", checkpoint_suite(kSeed + 200000, 50), 50, 1e18,
               "restored configurations equal to the saved ones, no breakpoint word saved");
    trap_counts();
    dsl_goldens();
    report(invariant_violations == 0 && invariant_checks > 0, "debugger-invariants",
           std::to_string(invariant_violations) + " violations in " + std::to_string(invariant_checks) +
               " checks across the runs above");
  } catch (const std::exception& e) {
    report(false, "acceptance", std::string("aborted: ") + e.what());
  }
  return failures == 0 ? 0 : 1;
}
