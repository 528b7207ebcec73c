#include <gtest/gtest.h>

#include "irv/harness.hpp"
#include "test_support.hpp"

using namespace irv;
using namespace irv::harness;

namespace {

Property queue_property() { return dsl::load_property(irv::testing::read_file("tests/golden/queue.prop"), "queue"); }

}  // namespace

TEST(Standalone, ThreeStatementProgram) {
  auto img = assemble("a := 0 ; b := 1 ; a := a + b");
  auto run = run_standalone(img);
  ASSERT_EQ(run.size(), 4u);
  const auto& last = run.back();
  EXPECT_EQ(last.memory.read(img.symbols.at("a")), 1);
  EXPECT_EQ(last.memory.read(img.symbols.at("b")), 1);
  EXPECT_TRUE(std::holds_alternative<Halt>(decode(last.memory.read(last.pc))));
}

TEST(Standalone, EmptyProgram) {
  auto img = assemble("");
  EXPECT_EQ(run_standalone(img).size(), 1u);
}

TEST(Standalone, NonHaltingProgramIsReported) {
  auto img = assemble("top:\n  JMP top");
  EXPECT_THROW(run_standalone(img, 1000), std::runtime_error);
}

TEST(Generators, SeededAndReproducible) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng a(seed), b(seed);
    auto ga = random_program(a), gb = random_program(b);
    EXPECT_EQ(ga.source, gb.source);
    EXPECT_EQ(random_program_property(a, ga), random_program_property(b, gb));
    auto img = assemble(ga.source, small_memory());
    EXPECT_EQ(run_standalone(img), run_standalone(img));
    Rng c(seed), d(seed);
    EXPECT_EQ(random_sliced_property(c), random_sliced_property(d));
    EXPECT_EQ(random_keyed_trace(c), random_keyed_trace(d));
  }
}

TEST(Generators, ProgramsHaltAndPropertiesLoad) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto c = generate_case(seed);
    EXPECT_NO_THROW(run_standalone(c.image)) << c.program.source;
    EXPECT_NO_THROW(check_instrumentable(c.property.sigma, c.image));
  }
}

TEST(Generators, KeyedTraceBounds) {
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    auto t = random_keyed_trace(rng, 500, 8);
    EXPECT_GE(t.size(), 1u);
    EXPECT_LE(t.size(), 500u);
    std::set<Word> keys;
    for (const auto& e : t)
      if (e.name == "a" || e.name == "b") keys.insert(e.instances[0]);
    EXPECT_LE(keys.size(), 8u);
  }
}

TEST(Correspondence, EmptyScenarioQueueRun) {
  auto img = assemble(irv::testing::read_file("samples/queue.asm"));
  std::vector<UserCommand> script = {UserCommand::load_monitor({queue_property(), dsl::ScenarioAst{}}),
                                     UserCommand::brk("queue_push"), UserCommand::cont(), UserCommand::step(),
                                     UserCommand::checkpoint(), UserCommand::watch(true, true, "count"),
                                     UserCommand::cont()};
  ScriptedRun run;
  auto r = check_scripted_correspondence(img, script, &run);
  EXPECT_TRUE(r.ok) << r.detail;
  EXPECT_GT(r.checked, 5u);
  EXPECT_TRUE(run.halted);
  EXPECT_TRUE(run.invariant_failures.empty());
}

TEST(Correspondence, CorruptedSavedInstructionIsCaught) {
  auto img = assemble(irv::testing::read_file("samples/queue.asm"));
  Executive ex(img);
  ex.command(UserCommand::load_monitor({queue_property(), std::nullopt}));
  auto& bp = ex.mutable_config().debugger.breakpoints.at(0);
  Address corrupted = bp.addr;
  bp.saved_instr = encode({Opcode::Nop, 0, 0, 0, 0});
  auto run = run_script(ex, {UserCommand::cont()});
  auto r = check_correspondence(run.trace, run_standalone(img));
  EXPECT_FALSE(r.ok);
  EXPECT_NE(r.detail.find("first differing cell " + to_string(corrupted)), std::string::npos) << r.detail;
  EXPECT_FALSE(run.invariant_failures.empty());
}

TEST(Correspondence, DivergenceIndexOfAHandMadeTrace) {
  auto img = assemble("a := 0 ; b := 1 ; a := a + b");
  auto sa = run_standalone(img);
  std::vector<ProgramConfig> trace = {sa[0], sa[2], sa[2], sa[3]};
  EXPECT_TRUE(check_correspondence(trace, sa).ok);
  std::vector<ProgramConfig> backwards = {sa[0], sa[2], sa[1]};
  auto r = check_correspondence(backwards, sa);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.divergence_index, 2u);
}

TEST(Correspondence, RestartIsRefused) {
  auto img = assemble("x := 1");
  std::vector<UserCommand> script = {UserCommand::checkpoint(), UserCommand::restart(0)};
  EXPECT_THROW(check_scripted_correspondence(img, script), std::invalid_argument);
}

TEST(Correspondence, NonEmptyScenarioIsRefused) {
  auto img = assemble(irv::testing::read_file("samples/queue.asm"));
  std::vector<UserCommand> script = {
      UserCommand::load_monitor({queue_property(), dsl::parse_scenario("on entering sink do suspend")})};
  EXPECT_THROW(check_scripted_correspondence(img, script), std::invalid_argument);
}

TEST(Correspondence, RandomSuite) {
  auto r = correspondence_suite(500, 40);
  EXPECT_EQ(r.failures, 0u) << (r.details.empty() ? "" : r.details[0]);
  EXPECT_EQ(r.invariant_violations, 0u);
  EXPECT_GT(r.invariant_checks, 0u);
}

TEST(SlicingOracle, HandTrace) {
  Property p = dsl::load_property(R"(slice on k

initialization {
    n = 0
}

state init accepting {
    transition {
        event a(k)
        success {
            n = n + 1
        } seen
    }
}

state seen accepting {
    transition {
        event a(k)
        success {
            n = n + 1
        } twice
    }
    transition {
        event c()
        success {
            n = n + 10
        } seen
    }
}

state twice non-accepting
)");
  auto P = [](const char* s) { return ParamName::variable(s); };
  std::vector<RuntimeEvent> trace = {{EventType::FunctionCall, "a", {P("k")}, {1}, true},
                                     {EventType::FunctionCall, "c", {}, {}, true},
                                     {EventType::FunctionCall, "a", {P("k")}, {2}, true},
                                     {EventType::FunctionCall, "a", {P("k")}, {1}, true}};
  auto o = brute_force_slicing(trace, p, "k");
  EXPECT_EQ(o.per_key.at(1).state, "twice");
  EXPECT_EQ(irv::testing::word(o.per_key.at(1).env, "n"), 12);
  EXPECT_EQ(o.per_key.at(2).state, "seen");
  EXPECT_EQ(irv::testing::word(o.per_key.at(2).env, "n"), 1);
  EXPECT_EQ(o.root.state, "init");

  MonitorConfiguration cfg = initial_configuration(p);
  for (const auto& e : trace) cfg = update_mon(cfg, e, p).config;
  auto cmp = compare_with_oracle(cfg, o, "k");
  EXPECT_TRUE(cmp.ok) << cmp.detail;
  EXPECT_EQ(cmp.compared, 2u);
}

TEST(SlicingOracle, RandomSuite) {
  auto r = slicing_suite(900, 40);
  EXPECT_EQ(r.failures, 0u) << (r.details.empty() ? "" : r.details[0]);
}

TEST(CheckpointSuite, RandomRoundTrips) {
  auto r = checkpoint_suite(1300, 30);
  EXPECT_EQ(r.failures, 0u) << (r.details.empty() ? "" : r.details[0]);
  EXPECT_EQ(r.invariant_violations, 0u);
}

TEST(TrapCount, StackWorkloadDynamicBeatsStatic) {
  auto img = assemble(stack_program());
  auto prop = dsl::load_property(stack_property(), "stack");
  auto dyn = count_traps(img, prop, false);
  auto stat = count_traps(img, prop, true);
  EXPECT_LT(dyn.traps, stat.traps);
  EXPECT_EQ(dyn.final_states, std::vector<std::string>{"removed"});
  EXPECT_EQ(stat.final_states, std::vector<std::string>{"removed"});
  EXPECT_EQ(dyn.instructions, stat.instructions);
  // static: every push entry and every pop return, 100 each
  EXPECT_EQ(stat.traps, 200u);
  // dynamic: pushes 0..42, then pops 42 (none of the earlier pops are watched)
  EXPECT_EQ(dyn.traps, 43u + 1u);
}

TEST(TrapCount, AlwaysEnabledEventCostsTheSame) {
  auto img = assemble(stack_program());
  auto prop = dsl::load_property(R"(initialization {
    n = 0
}

state init accepting {
    transition {
        before event push(v)
        success {
            n = n + 1
        } init
    }
}
)",
                                 "count");
  auto dyn = count_traps(img, prop, false);
  auto stat = count_traps(img, prop, true);
  EXPECT_EQ(dyn.traps, stat.traps);
  EXPECT_EQ(dyn.traps, 100u);
}

TEST(TrapCount, SinkStopsTrapping) {
  auto img = assemble(stack_program());
  auto prop = dsl::load_property(R"(state init accepting {
    transition {
        before event push(v) {
            return v == 5
        }
        success sink
    }
}

state sink non-accepting
)",
                                 "five");
  auto dyn = count_traps(img, prop, false);
  EXPECT_EQ(dyn.traps, 6u);
  EXPECT_EQ(count_traps(img, prop, true).traps, 100u);
}
