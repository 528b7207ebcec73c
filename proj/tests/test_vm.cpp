#include <gtest/gtest.h>

#include <random>
#include <set>

#include "irv/assembler.hpp"
#include "irv/vm.hpp"

using namespace irv;

namespace {

// Memory wrapper that logs every cell touch on its own, independently of the
// access list that execute() builds.
struct TrappingMemory {
  Memory& m;
  std::vector<AccessRecord> log;
  int fetches = 0;

  Word fetch(Address a) {
    ++fetches;
    return m.read(a);
  }
  Word read(Address a) {
    log.push_back({a, true, false});
    return m.read(a);
  }
  void write(Address a, Word w) {
    log.push_back({a, false, true});
    m.write(a, w);
  }
};

std::vector<Instruction> all_instruction_shapes() {
  std::vector<Instruction> out;
  out.push_back({Opcode::Nop, 0, 0, 0, 0});
  out.push_back({Opcode::Set, 100, 0, 0, 42});
  out.push_back({Opcode::Set, 65535, 0, 0, kImmMin});
  out.push_back({Opcode::Set, 1, 0, 0, kImmMax});
  out.push_back({Opcode::Set, 7, 0, 0, -1});
  out.push_back({Opcode::Mov, 3, 65535, 0, 0});
  for (Opcode op : {Opcode::Add, Opcode::Sub, Opcode::Mul, Opcode::CmpLt, Opcode::CmpLe, Opcode::CmpEq})
    out.push_back({op, 1, 2, 65535, 0});
  out.push_back({Opcode::Jmp, 12, 0, 0, 0});
  out.push_back({Opcode::Jz, 40, 9, 0, 0});
  out.push_back({Opcode::Call, 9, 8, 0, 0});
  out.push_back({Opcode::Ret, 3, 0, 0, 0});
  return out;
}

}  // namespace

TEST(Encoding, RoundTripOnEveryInstructionShape) {
  for (const auto& i : all_instruction_shapes()) {
    Word w = encode(i);
    Decoded d = decode(w);
    ASSERT_TRUE(std::holds_alternative<Instruction>(d)) << mnemonic(i.op);
    EXPECT_EQ(std::get<Instruction>(d), i) << mnemonic(i.op);
  }
}

TEST(Encoding, RandomRoundTrip) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> op(0, 13);
  auto shapes = all_instruction_shapes();
  for (int k = 0; k < 20000; ++k) {
    Instruction i;
    static const Opcode ops[] = {Opcode::Nop,   Opcode::Set,   Opcode::Mov, Opcode::Add, Opcode::Sub,
                                 Opcode::Mul,   Opcode::CmpLt, Opcode::CmpLe, Opcode::CmpEq,
                                 Opcode::Jmp,   Opcode::Jz,    Opcode::Call, Opcode::Ret, Opcode::Set};
    i.op = ops[op(rng)];
    int n = operand_count(i.op);
    if (n >= 1) i.a = static_cast<std::uint16_t>(rng());
    if (n >= 2) i.b = static_cast<std::uint16_t>(rng());
    if (n >= 3) i.c = static_cast<std::uint16_t>(rng());
    if (i.op == Opcode::Set) i.imm = static_cast<Word>(rng() % (std::uint64_t(1) << 40)) + kImmMin;
    if (i.op == Opcode::Call) i.b %= kMaxArgs + 1;
    if (i.op == Opcode::Ret) i.a %= kMaxArgs + 1;
    ASSERT_TRUE(is_encodable(i));
    EXPECT_EQ(std::get<Instruction>(decode(encode(i))), i);
  }
}

TEST(Encoding, EncodingIsInjective) {
  std::set<Word> seen;
  auto shapes = all_instruction_shapes();
  for (const auto& i : shapes) seen.insert(encode(i));
  EXPECT_EQ(seen.size(), shapes.size());
  EXPECT_FALSE(seen.count(kBreakpointWord));
  EXPECT_FALSE(seen.count(kStopWord));
}

TEST(Encoding, ReservedWords) {
  EXPECT_TRUE(std::holds_alternative<BreakpointTrap>(decode(kBreakpointWord)));
  EXPECT_TRUE(std::holds_alternative<Halt>(decode(kStopWord)));
  EXPECT_TRUE(std::holds_alternative<InvalidWord>(decode(-1)));  // all ones
  EXPECT_TRUE(std::holds_alternative<InvalidWord>(decode(0)));
}

TEST(Encoding, OpcodeMapEnumeration) {
  // Every top byte outside the opcode map is invalid whatever the payload.
  std::set<int> valid;
  for (int b = 0x01; b <= 0x0E; ++b) valid.insert(b);
  for (int top = 0; top < 256; ++top) {
    Word w = make_word(static_cast<Opcode>(top), 0);
    Decoded d = decode(w);
    if (top == 0x7F) {
      EXPECT_TRUE(std::holds_alternative<BreakpointTrap>(d));
    } else if (top == 0x02) {
      EXPECT_TRUE(std::holds_alternative<Halt>(d));
    } else if (!valid.count(top)) {
      EXPECT_TRUE(std::holds_alternative<InvalidWord>(d)) << top;
    }
    if (top == 0x7F || top == 0x02) {
      EXPECT_TRUE(std::holds_alternative<InvalidWord>(decode(make_word(static_cast<Opcode>(top), 1 << 8))));
    }
  }
  // stray low byte in a register-form instruction
  Word w = encode({Opcode::Add, 1, 2, 3, 0}) | 1;
  EXPECT_TRUE(std::holds_alternative<InvalidWord>(decode(w)));
}

TEST(Assembler, ThreeStatementProgram) {
  auto img = assemble("a := 0 ; b := 1 ; a := a + b");
  ASSERT_TRUE(img.symbols.count("a"));
  ASSERT_TRUE(img.symbols.count("b"));
  EXPECT_EQ(img.code_range().size(), 4u);
  EXPECT_FALSE(img.code_range().contains(img.symbols.at("a")));
  EXPECT_FALSE(img.code_range().contains(img.symbols.at("b")));
  EXPECT_TRUE(std::holds_alternative<Halt>(decode(img.initial_memory.read(Address{3}))));
}

TEST(Vm, ThirdInstructionOfThreeStatementProgram) {
  auto img = assemble("a := 0 ; b := 1 ; a := a + b");
  Address a = img.symbols.at("a"), b = img.symbols.at("b");
  auto r2 = run_instr(img.initial_memory, Address{0}, img.layout);
  r2 = run_instr(r2.memory, r2.pc, img.layout);
  ASSERT_EQ(r2.pc, Address{2});
  EXPECT_EQ(r2.memory.read(a), 0);
  EXPECT_EQ(r2.memory.read(b), 1);
  auto r3 = run_instr(r2.memory, r2.pc, img.layout);
  EXPECT_EQ(r3.memory.read(a), 1);
  EXPECT_EQ(r3.memory.read(b), 1);
  EXPECT_EQ(r3.pc, Address{3});
  std::vector<AccessRecord> expected = {{a, true, false}, {b, true, false}, {a, false, true}};
  EXPECT_EQ(r3.accesses, expected);
}

TEST(Vm, NopIsIdentityOnMemory) {
  auto img = assemble("NOP");
  auto r = run_instr(img.initial_memory, Address{0}, img.layout);
  EXPECT_EQ(r.memory, img.initial_memory);
  EXPECT_EQ(r.pc, Address{1});
  EXPECT_TRUE(r.accesses.empty());
}

TEST(Vm, CallHandTrace) {
  auto img = assemble(R"(
ARG0 := 64
ARG1 := 5
CALL f
FUNC f(2)
  RETVAL := ARG0
ENDFUNC
)");
  Memory m = img.initial_memory;
  Address pc{0};
  std::vector<AccessRecord> acc;
  pc = run_instr_in_place(m, pc, img.layout, acc);
  pc = run_instr_in_place(m, pc, img.layout, acc);
  ASSERT_EQ(pc, Address{2});
  Word sp0 = m.read(img.layout.sp);
  EXPECT_EQ(sp0, img.layout.stack.begin.as_word());

  auto r = run_instr(m, pc, img.layout);
  const FunctionInfo* f = img.function("f");
  ASSERT_NE(f, nullptr);
  EXPECT_EQ(r.pc, f->entry);
  Address frame{static_cast<std::uint32_t>(sp0)};
  EXPECT_EQ(r.memory.read(frame), 3);  // return address
  EXPECT_EQ(r.memory.read(frame + 1), 64);
  EXPECT_EQ(r.memory.read(frame + 2), 5);
  EXPECT_EQ(r.memory.read(img.layout.sp), sp0 + 3);
  std::vector<AccessRecord> expected = {
      {img.layout.sp, true, false},   {img.layout.arg(0), true, false}, {img.layout.arg(1), true, false},
      {frame, false, true},           {frame + 1, false, true},         {frame + 2, false, true},
      {img.layout.sp, false, true}};
  EXPECT_EQ(r.accesses, expected);

  // body and RET return to the instruction after CALL
  auto r2 = run_instr(r.memory, r.pc, img.layout);
  auto r3 = run_instr(r2.memory, r2.pc, img.layout);
  EXPECT_EQ(r3.pc, Address{3});
  EXPECT_EQ(r3.memory.read(img.layout.sp), sp0);
  EXPECT_EQ(r3.memory.read(img.layout.retval), 64);
  EXPECT_EQ(f->returns, std::vector<Address>{r2.pc});
}

TEST(Vm, ErrorsOnReservedWordsAndBadAddresses) {
  auto img = assemble("NOP");
  Memory m = img.initial_memory;
  m.write(Address{0}, kBreakpointWord);
  EXPECT_THROW(run_instr(m, Address{0}, img.layout), VmError);
  EXPECT_THROW(run_instr(img.initial_memory, Address{1}, img.layout), VmError);  // STOP
  m.write(Address{0}, -1);
  EXPECT_THROW(run_instr(m, Address{0}, img.layout), VmError);
  m.write(Address{0}, encode({Opcode::Set, 0, 0, 0, 5}));  // writes into code
  EXPECT_THROW(run_instr(m, Address{0}, img.layout), VmError);
  EXPECT_THROW(run_instr(m, Address{99999}, img.layout), VmError);
}

TEST(Vm, ReturnWithEmptyStackFails) {
  auto img = assemble("FUNC f(0)\nENDFUNC");
  EXPECT_THROW(run_instr(img.initial_memory, img.function("f")->entry, img.layout), VmError);
}

TEST(Vm, UninitializedCellsReadZero) {
  Memory m(16);
  for (std::uint32_t a = 0; a < 16; ++a) EXPECT_EQ(m.read(Address{a}), 0);
}

TEST(Vm, ArithmeticWrapsInsteadOfOverflowing) {
  auto img = assemble("VAR x = 1099511627775\nVAR y\ny := x * x\ny := y * y\ny := y * y");
  Memory m = img.initial_memory;
  Address pc{0};
  std::vector<AccessRecord> acc;
  for (int k = 0; k < 3; ++k) pc = run_instr_in_place(m, pc, img.layout, acc);
  std::uint64_t x = 1099511627775ull;
  std::uint64_t y = x * x;
  y = y * y;
  y = y * y;
  EXPECT_EQ(m.read(img.symbols.at("y")), static_cast<Word>(y));
}

// A small random-program generator used for the determinism and access checks.
namespace {

ProgramImage random_straight_line(std::mt19937_64& rng, int n) {
  std::string src = "VAR v0 = 3\nVAR v1 = -2\nVAR v2 = 9\nVAR v3\n";
  const char* ops[] = {"+", "-", "*", "<", "<=", "=="};
  for (int k = 0; k < n; ++k) {
    auto v = [&] { return "v" + std::to_string(rng() % 4); };
    switch (rng() % 4) {
      case 0: src += v() + " := " + std::to_string(static_cast<int>(rng() % 100) - 50) + "\n"; break;
      case 1: src += v() + " := " + v() + "\n"; break;
      case 2: src += v() + " := " + v() + " " + ops[rng() % 6] + " " + v() + "\n"; break;
      default: src += v() + " := (" + v() + " + 3) * " + v() + "\n"; break;
    }
  }
  return assemble(src);
}

}  // namespace

TEST(VmProperties, DeterminismAndAccessCompleteness) {
  std::mt19937_64 rng(1234);
  for (int prog = 0; prog < 50; ++prog) {
    auto img = random_straight_line(rng, 40);
    Memory m = img.initial_memory;
    Address pc = img.start;
    while (!std::holds_alternative<Halt>(decode(m.read(pc)))) {
      auto r1 = run_instr(m, pc, img.layout);
      auto r2 = run_instr(m, pc, img.layout);
      ASSERT_EQ(r1.memory, r2.memory);
      ASSERT_EQ(r1.pc, r2.pc);
      ASSERT_EQ(r1.accesses, r2.accesses);

      Memory shadow = m;
      TrappingMemory trap{shadow, {}, 0};
      std::vector<AccessRecord> reported;
      Address next = execute(trap, pc, img.layout, reported);
      EXPECT_EQ(trap.fetches, 1);
      EXPECT_EQ(trap.log, r1.accesses);
      EXPECT_EQ(shadow, r1.memory);
      EXPECT_EQ(next, r1.pc);
      for (const auto& a : r1.accesses) {
        EXPECT_FALSE(img.code_range().contains(a.addr));
        EXPECT_TRUE(a.read || a.write);
      }
      // cells not in the access list are unchanged
      std::set<std::uint32_t> written;
      for (const auto& a : r1.accesses)
        if (a.write) written.insert(a.addr.value);
      for (std::uint32_t c = 0; c < m.size(); ++c) {
        if (!written.count(c)) {
          ASSERT_EQ(m.read(Address{c}), r1.memory.read(Address{c}));
        }
      }
      m = r1.memory;
      pc = r1.pc;
    }
  }
}
