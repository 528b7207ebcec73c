#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "irv/session.hpp"
#include "test_support.hpp"

using namespace irv;
using namespace irv::cli;

namespace {

struct Outcome {
  std::string output;
  int status = -1;
};

Outcome run_cli(const std::string& args) {
  std::string cmd = std::string(IRV_CLI_PATH) + " " + args + " 2>&1";
  Outcome o;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return o;
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, p)) > 0;) o.output.append(buf, n);
  int st = pclose(p);
  o.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return o;
}

std::string samples() { return std::string(IRV_SOURCE_DIR) + "/samples"; }

std::filesystem::path temp_script(const std::string& name, const std::string& text) {
  auto p = std::filesystem::temp_directory_path() / ("irv_test_" + name);
  std::ofstream(p) << text;
  return p;
}

struct Fixture {
  std::ostringstream out;
  Session s{out, SessionOptions{samples(), false, 1'000'000}};

  std::string exec(const std::string& line) {
    out.str("");
    last = s.execute(line);
    return out.str();
  }
  LineStatus last = LineStatus::Ok;
};

}  // namespace

TEST(Classify, EveryVerbMapsToOneCommandOrSessionAction) {
  using K = UserCommand::Kind;
  struct Row {
    const char* line;
    Verb verb;
    std::optional<K> kind;  // nullopt: a session action
  };
  const std::vector<Row> table = {
      {"load prog.asm", Verb::Load, std::nullopt},
      {"load-property q.prop", Verb::LoadProperty, K::LoadMonitor},
      {"load-scenario s.sc", Verb::LoadScenario, std::nullopt},
      {"run", Verb::Run, K::Continue},
      {"continue", Verb::Continue, K::Continue},
      {"step", Verb::Step, K::Step},
      {"break queue_push", Verb::Break, K::Break},
      {"watch rw count", Verb::Watch, K::Watch},
      {"checkpoint", Verb::Checkpoint, K::Checkpoint},
      {"restart 0", Verb::Restart, K::Restart},
      {"info monitor", Verb::InfoMonitor, std::nullopt},
      {"info breakpoints", Verb::InfoBreakpoints, std::nullopt},
      {"info checkpoints", Verb::InfoCheckpoints, std::nullopt},
      {"print count", Verb::Print, std::nullopt},
      {"show-graph", Verb::ShowGraph, std::nullopt},
      {"interrupt", Verb::Interrupt, std::nullopt},
      {"help", Verb::Help, std::nullopt},
      {"exit", Verb::Exit, K::Exit},
      {"", Verb::Empty, std::nullopt},
      {"frobnicate", Verb::Unknown, K::Unknown},
  };
  std::set<Verb> covered;
  for (const auto& r : table) {
    ParsedLine p = classify(r.line);
    EXPECT_EQ(p.verb, r.verb) << r.line;
    EXPECT_EQ(command_kind(p.verb), r.kind) << r.line;
    covered.insert(r.verb);
  }
  EXPECT_EQ(covered.size(), static_cast<std::size_t>(Verb::Unknown) + 1);
  EXPECT_EQ(verb_table().size() + 2, covered.size());  // plus Empty and Unknown
}

TEST(Classify, ArgumentsCommentsAndArity) {
  EXPECT_EQ(classify("  break   @12  ").args, std::vector<std::string>{"@12"});
  EXPECT_EQ(classify("# just a comment").verb, Verb::Empty);
  EXPECT_EQ(classify("step # and a comment").verb, Verb::Step);
  EXPECT_EQ(classify("break").verb, Verb::Unknown);
  EXPECT_EQ(classify("step 3").verb, Verb::Unknown);
  EXPECT_EQ(classify("info").verb, Verb::Unknown);
  EXPECT_EQ(classify("info nothing").verb, Verb::Unknown);
  EXPECT_EQ(classify("watch rw").verb, Verb::Unknown);
}

TEST(Session, FreshQueuePropertyHasOneRootSlice) {
  Fixture f;
  f.exec("load queue.asm");
  std::string init = f.exec("load-property queue.prop");
  EXPECT_NE(init.find("[irv] Initialization: N = 0, maxSize = 0"), std::string::npos) << init;
  std::string info = f.exec("info monitor");
  EXPECT_EQ(info, "Monitor queue:\n  init (N = 0, maxSize = 0) accepting\n");
}

TEST(Session, RestartReturnsToTheCheckpoint) {
  Fixture f;
  f.exec("load queue.asm");
  f.exec("step");
  f.exec("step");
  EXPECT_NE(f.exec("checkpoint").find("Checkpoint 0 at @2"), std::string::npos);
  f.exec("step");
  f.exec("step");
  std::string out = f.exec("restart 0");
  EXPECT_NE(out.find("Restored checkpoint 0 at @2"), std::string::npos) << out;
  EXPECT_NE(out.find("@2: CALL"), std::string::npos) << out;
  EXPECT_EQ(f.s.executive()->pc(), Address{2});
}

TEST(Session, OverflowRunReportsTheViolation) {
  Fixture f;
  f.exec("load queue.asm");
  f.exec("load-property queue.prop");
  f.exec("load-scenario overflow.sc");
  std::string out = f.exec("run");
  EXPECT_NE(out.find("[irv] Overflow detected!"), std::string::npos);
  EXPECT_NE(out.find("[irv] Current state: sink (N = 1, maxSize = 1)"), std::string::npos);
  EXPECT_NE(out.find("[Execution stopped.]"), std::string::npos);
  EXPECT_TRUE(f.s.violation_seen());
  EXPECT_EQ(f.exec("continue"), "[Program finished.]\n");
}

TEST(Session, ErrorsAreReported) {
  Fixture f;
  EXPECT_EQ(f.exec("step"), "error: no program loaded\n");
  EXPECT_EQ(f.last, LineStatus::Error);
  EXPECT_EQ(f.exec("load missing.asm"), "error: cannot open 'missing.asm'\n");
  f.exec("load queue.asm");
  EXPECT_EQ(f.exec("load-scenario overflow.sc"), "error: load a property before its scenario\n");
  EXPECT_EQ(f.exec("frobnicate"), "error: Illegal Command\n");
  EXPECT_EQ(f.exec("watch x count"), "error: watch mode must be r, w or rw\n");
  EXPECT_EQ(f.exec("restart zero"), "error: restart expects a checkpoint number\n");
  EXPECT_EQ(f.exec("show-graph"), "error: no session server available\n");
  EXPECT_EQ(f.exec("exit"), "");
  EXPECT_EQ(f.last, LineStatus::Exit);
}

TEST(Session, ParseErrorsAreSurfacedVerbatim) {
  const std::string text = "state init accepting {\n  transition {\n    event e(x) {\n";
  auto bad = temp_script("bad.prop", text);
  std::string expected;
  try {
    dsl::load_property(text, "bad");
  } catch (const std::exception& e) {
    expected = std::string("error: ") + e.what() + "\n";
  }
  ASSERT_FALSE(expected.empty());
  EXPECT_NE(expected.find("line "), std::string::npos);
  Fixture f;
  f.exec("load queue.asm");
  EXPECT_EQ(f.exec("load-property " + bad.string()), expected);
}

TEST(Session, PrintAndInfo) {
  Fixture f;
  f.exec("load queue.asm");
  EXPECT_EQ(f.exec("print count"), "count = 0\n");
  EXPECT_EQ(f.exec("info breakpoints"), "No breakpoints or watchpoints.\n");
  EXPECT_EQ(f.exec("info checkpoints"), "No checkpoints.\n");
  f.exec("watch w count");
  EXPECT_NE(f.exec("info breakpoints").find("user    watch w count @"), std::string::npos);
  EXPECT_EQ(f.exec("print queue_push").rfind("error: ", 0), 0u);
}

TEST(Session, TranscriptIsDeterministic) {
  auto run = [] {
    std::ostringstream out;
    Session s(out, SessionOptions{samples(), false, 1'000'000});
    std::istringstream in(irv::testing::read_file("samples/queue_demo.irv"));
    s.set_echo(true);
    int rc = s.run_script(in);
    return std::pair{out.str(), rc};
  };
  auto a = run(), b = run();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.second, 0);
  EXPECT_EQ(a.first, irv::testing::read_file("tests/golden/queue_demo.transcript"));
}

TEST(Cli, GoldenTranscript) {
  auto o = run_cli("--script " + samples() + "/queue_demo.irv");
  EXPECT_EQ(o.status, 0);
  EXPECT_EQ(o.output, irv::testing::read_file("tests/golden/queue_demo.transcript"));
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("--script " + samples() + "/queue_demo.irv --fail-on-violation").status, 2);
  auto failing = temp_script("failing.irv", "load " + samples() + "/queue.asm\nbreak nowhere\nstep\n");
  auto o = run_cli("--script " + failing.string());
  EXPECT_EQ(o.status, 1);
  EXPECT_EQ(o.output.find("(irv) step"), std::string::npos) << "the script must stop at the failing line";
  auto clean = temp_script("clean.irv", "load " + samples() + "/queue.asm\nrun\n");
  auto c = run_cli("--script " + clean.string() + " --no-color --fail-on-violation");
  EXPECT_EQ(c.status, 0);
  EXPECT_NE(c.output.find("[Program finished.]"), std::string::npos);
  EXPECT_NE(run_cli("--no-such-flag").status, 0);
}
