#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "irv/harness.hpp"
#include "json.hpp"

namespace {

nlohmann::json to_json(const irv::harness::SuiteResult& r) {
  return {{"cases", r.cases},
          {"failures", r.failures},
          {"invariant_checks", r.invariant_checks},
          {"invariant_violations", r.invariant_violations},
          {"monitor_traps", r.monitor_traps},
          {"seconds", r.seconds},
          {"details", r.details}};
}

void print(const std::string& name, const irv::harness::SuiteResult& r) {
  std::cout << name << ": " << r.cases - r.failures << "/" << r.cases << " passed, " << r.invariant_violations
            << " invariant violations, " << r.seconds << " s\n";
  for (const auto& d : r.details) std::cout << "  " << d << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  using namespace irv::harness;
  CLI::App app{"irv-harness: randomized differential checks"};
  std::uint64_t seed = 1;
  std::size_t cases = 200;
  std::string report;
  app.add_option("--seed", seed, "Base seed; case i uses seed + i");
  app.add_option("--cases", cases, "Cases per suite");
  app.add_option("--report", report, "Write a JSON summary to this path");
  CLI11_PARSE(app, argc, argv);

  SuiteResult corr = correspondence_suite(seed, cases);
  SuiteResult slicing = slicing_suite(seed, cases);
  SuiteResult ckpt = checkpoint_suite(seed, cases);
  print("correspondence", corr);
  print("slicing", slicing);
  print("checkpoint", ckpt);

  auto img = irv::assemble(stack_program());
  auto prop = irv::dsl::load_property(stack_property(), "stack");
  TrapCount dyn = count_traps(img, prop, false);
  TrapCount stat = count_traps(img, prop, true);
  std::cout << "stack traps: dynamic " << dyn.traps << ", static " << stat.traps << '\n';

  bool ok = corr.failures + slicing.failures + ckpt.failures == 0 &&
            corr.invariant_violations + ckpt.invariant_violations == 0;
  if (!report.empty()) {
    nlohmann::json j = {{"seed", seed},
                        {"cases", cases},
                        {"ok", ok},
                        {"correspondence", to_json(corr)},
                        {"slicing", to_json(slicing)},
                        {"checkpoint", to_json(ckpt)},
                        {"stack_traps", {{"dynamic", dyn.traps}, {"static", stat.traps}}}};
    std::ofstream out(report);
    if (!out) {
      std::cerr << "error: cannot write " << report << '\n';
      return 1;
    }
    out << j.dump(2) << '\n';
  }
  return ok ? 0 : 1;
}
