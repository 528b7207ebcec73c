#pragma once

// Deterministic word-addressed virtual machine.
//
// Memory is a flat array of 64-bit signed words. The code segment occupies
// [0, code_end) and holds one encoded instruction per cell; the data segment
// follows it and holds the calling-convention cells (RETVAL, SP, ARG0..ARG7),
// the program variables, assembler temporaries and the return stack.
//
// Instructions are memory-to-memory. Executing an instruction never touches
// the code segment except for the fetch at pc, so the breakpoint word can be
// patched into code cells without changing what the program computes.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace irv {

using Word = std::int64_t;

/// Index of a memory cell.
struct Address {
  std::uint32_t value = 0;

  constexpr Address() = default;
  constexpr explicit Address(std::uint32_t v) : value(v) {}

  constexpr auto operator<=>(const Address&) const = default;

  constexpr Address operator+(std::uint32_t off) const { return Address{value + off}; }
  constexpr Address next() const { return Address{value + 1}; }
  constexpr Word as_word() const { return static_cast<Word>(value); }
};

/// Half-open range [begin, end).
struct AddressRange {
  Address begin;
  Address end;

  constexpr bool contains(Address a) const { return begin <= a && a < end; }
  constexpr std::uint32_t size() const { return end.value - begin.value; }
  constexpr bool operator==(const AddressRange&) const = default;
};

inline std::string to_string(Address a) { return "@" + std::to_string(a.value); }

class VmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed-size memory; cells that were never written read as zero.
class Memory {
 public:
  Memory() = default;
  explicit Memory(std::size_t size) : cells_(size, 0) {}

  std::size_t size() const { return cells_.size(); }
  bool in_range(Address a) const { return a.value < cells_.size(); }

  Word read(Address a) const {
    check(a);
    return cells_[a.value];
  }
  void write(Address a, Word w) {
    check(a);
    cells_[a.value] = w;
  }

  const std::vector<Word>& cells() const { return cells_; }

  bool operator==(const Memory&) const = default;

 private:
  void check(Address a) const {
    if (!in_range(a)) throw VmError("data-address out of range: " + to_string(a));
  }

  std::vector<Word> cells_;
};

// ---------------------------------------------------------------------------
// Instruction set and encoding
// ---------------------------------------------------------------------------

enum class Opcode : std::uint8_t {
  Nop = 0x01,
  Stop = 0x02,
  Set = 0x03,
  Mov = 0x04,
  Add = 0x05,
  Sub = 0x06,
  Mul = 0x07,
  CmpLt = 0x08,
  CmpLe = 0x09,
  CmpEq = 0x0A,
  Jmp = 0x0B,
  Jz = 0x0C,
  Call = 0x0D,
  Ret = 0x0E,
  Breakpoint = 0x7F,
};

inline constexpr unsigned kMaxArgs = 8;
inline constexpr int kImmBits = 40;
inline constexpr Word kImmMin = -(Word{1} << (kImmBits - 1));
inline constexpr Word kImmMax = (Word{1} << (kImmBits - 1)) - 1;

/// Layout: opcode in bits 63..56, operands a/b/c in 55..40, 39..24, 23..8.
/// SET keeps its destination in a and a 40-bit signed immediate in 39..0.
///
/// Operand meaning per opcode:
///   SET a=dst imm         MOV a=dst b=src        ADD..CMPEQ a=dst b c
///   JMP a=target          JZ a=cond b=target     CALL a=entry b=nparams
///   RET a=nparams of the enclosing function
struct Instruction {
  Opcode op = Opcode::Nop;
  std::uint16_t a = 0;
  std::uint16_t b = 0;
  std::uint16_t c = 0;
  Word imm = 0;

  bool operator==(const Instruction&) const = default;
};

struct BreakpointTrap {
  bool operator==(const BreakpointTrap&) const = default;
};
struct Halt {
  bool operator==(const Halt&) const = default;
};
struct InvalidWord {
  bool operator==(const InvalidWord&) const = default;
};

using Decoded = std::variant<Instruction, BreakpointTrap, Halt, InvalidWord>;

inline constexpr Word make_word(Opcode op, std::uint64_t payload) {
  return static_cast<Word>((static_cast<std::uint64_t>(op) << 56) | payload);
}

inline constexpr Word kBreakpointWord = make_word(Opcode::Breakpoint, 0);
inline constexpr Word kStopWord = make_word(Opcode::Stop, 0);

inline const char* mnemonic(Opcode op) {
  switch (op) {
    case Opcode::Nop: return "NOP";
    case Opcode::Stop: return "STOP";
    case Opcode::Set: return "SET";
    case Opcode::Mov: return "MOV";
    case Opcode::Add: return "ADD";
    case Opcode::Sub: return "SUB";
    case Opcode::Mul: return "MUL";
    case Opcode::CmpLt: return "CMPLT";
    case Opcode::CmpLe: return "CMPLE";
    case Opcode::CmpEq: return "CMPEQ";
    case Opcode::Jmp: return "JMP";
    case Opcode::Jz: return "JZ";
    case Opcode::Call: return "CALL";
    case Opcode::Ret: return "RET";
    case Opcode::Breakpoint: return "B";
  }
  return "?";
}

/// Number of a/b/c operand fields an opcode uses (SET uses a plus imm).
inline constexpr int operand_count(Opcode op) {
  switch (op) {
    case Opcode::Nop:
    case Opcode::Stop:
    case Opcode::Breakpoint: return 0;
    case Opcode::Set:
    case Opcode::Jmp:
    case Opcode::Ret: return 1;
    case Opcode::Mov:
    case Opcode::Jz:
    case Opcode::Call: return 2;
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::Mul:
    case Opcode::CmpLt:
    case Opcode::CmpLe:
    case Opcode::CmpEq: return 3;
  }
  return 0;
}

inline bool is_encodable(const Instruction& i) {
  switch (i.op) {
    case Opcode::Nop: return i.a == 0 && i.b == 0 && i.c == 0 && i.imm == 0;
    case Opcode::Stop:
    case Opcode::Breakpoint: return false;
    case Opcode::Set: return i.b == 0 && i.c == 0 && i.imm >= kImmMin && i.imm <= kImmMax;
    default: break;
  }
  if (i.imm != 0) return false;
  int n = operand_count(i.op);
  if (n < 3 && i.c != 0) return false;
  if (n < 2 && i.b != 0) return false;
  if (i.op == Opcode::Call && i.b > kMaxArgs) return false;
  if (i.op == Opcode::Ret && i.a > kMaxArgs) return false;
  return true;
}

/// STOP and B are reserved words, not Instructions.
inline Word encode(const Instruction& i) {
  if (!is_encodable(i)) throw VmError("instruction cannot be encoded");
  if (i.op == Opcode::Set) {
    std::uint64_t imm = static_cast<std::uint64_t>(i.imm) & ((std::uint64_t{1} << kImmBits) - 1);
    return make_word(i.op, (std::uint64_t{i.a} << 40) | imm);
  }
  return make_word(i.op, (std::uint64_t{i.a} << 40) | (std::uint64_t{i.b} << 24) |
                             (std::uint64_t{i.c} << 8));
}

/// Total: every word decodes to exactly one alternative.
inline Decoded decode(Word w) {
  if (w == kBreakpointWord) return BreakpointTrap{};
  if (w == kStopWord) return Halt{};
  auto u = static_cast<std::uint64_t>(w);
  auto op_byte = static_cast<std::uint8_t>(u >> 56);
  if (op_byte < static_cast<std::uint8_t>(Opcode::Nop) ||
      op_byte > static_cast<std::uint8_t>(Opcode::Ret) ||
      op_byte == static_cast<std::uint8_t>(Opcode::Stop))
    return InvalidWord{};
  Instruction i;
  i.op = static_cast<Opcode>(op_byte);
  i.a = static_cast<std::uint16_t>(u >> 40);
  if (i.op == Opcode::Set) {
    std::uint64_t raw = u & ((std::uint64_t{1} << kImmBits) - 1);
    if (raw & (std::uint64_t{1} << (kImmBits - 1))) raw |= ~((std::uint64_t{1} << kImmBits) - 1);
    i.imm = static_cast<Word>(raw);
    return i;
  }
  if (u & 0xFF) return InvalidWord{};
  i.b = static_cast<std::uint16_t>(u >> 24);
  i.c = static_cast<std::uint16_t>(u >> 8);
  if (!is_encodable(i)) return InvalidWord{};
  return i;
}

// ---------------------------------------------------------------------------
// Machine layout and execution
// ---------------------------------------------------------------------------

/// Where the calling-convention cells and the return stack live.
struct MachineLayout {
  AddressRange code;
  Address retval;
  Address sp;
  Address arg0;
  AddressRange stack;
  std::size_t memory_size = 0;

  Address arg(unsigned i) const { return arg0 + i; }
  bool operator==(const MachineLayout&) const = default;
};

struct AccessRecord {
  Address addr;
  bool read = false;
  bool write = false;

  bool operator==(const AccessRecord&) const = default;
};

struct StepResult {
  Memory memory;
  Address pc;
  std::vector<AccessRecord> accesses;
};

namespace detail {

inline Word wrap_add(Word a, Word b) {
  return static_cast<Word>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
inline Word wrap_sub(Word a, Word b) {
  return static_cast<Word>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}
inline Word wrap_mul(Word a, Word b) {
  return static_cast<Word>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

}  // namespace detail

/// Executes the instruction at pc against any memory type with
/// read(Address)/write(Address, Word). Every data read and write is reported
/// in `accesses` in program order; the fetch itself is not a data access.
template <class Mem>
Address execute(Mem& mem, Address pc, const MachineLayout& layout,
                std::vector<AccessRecord>& accesses) {
  if (!layout.code.contains(pc)) throw VmError("pc outside code segment: " + to_string(pc));
  Decoded d = decode(mem.fetch(pc));
  if (std::holds_alternative<BreakpointTrap>(d))
    throw VmError("breakpoint word executed at " + to_string(pc));
  if (std::holds_alternative<Halt>(d)) throw VmError("STOP executed at " + to_string(pc));
  if (std::holds_alternative<InvalidWord>(d))
    throw VmError("invalid instruction at " + to_string(pc));
  const Instruction& ins = std::get<Instruction>(d);

  auto data = [&](std::uint32_t raw) {
    Address a{raw};
    if (layout.code.contains(a) || a.value >= layout.memory_size)
      throw VmError("data-address out of range: " + to_string(a));
    return a;
  };
  auto code_target = [&](Word raw) {
    if (raw < 0 || !layout.code.contains(Address{static_cast<std::uint32_t>(raw)}))
      throw VmError("jump target outside code segment: " + std::to_string(raw));
    return Address{static_cast<std::uint32_t>(raw)};
  };
  auto rd = [&](Address a) {
    accesses.push_back({a, true, false});
    return mem.read(a);
  };
  auto wr = [&](Address a, Word v) {
    accesses.push_back({a, false, true});
    mem.write(a, v);
  };

  Address next = pc.next();
  switch (ins.op) {
    case Opcode::Nop: break;
    case Opcode::Set: wr(data(ins.a), ins.imm); break;
    case Opcode::Mov: {
      Word v = rd(data(ins.b));
      wr(data(ins.a), v);
      break;
    }
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::Mul:
    case Opcode::CmpLt:
    case Opcode::CmpLe:
    case Opcode::CmpEq: {
      Word x = rd(data(ins.b));
      Word y = rd(data(ins.c));
      Word r = 0;
      switch (ins.op) {
        case Opcode::Add: r = detail::wrap_add(x, y); break;
        case Opcode::Sub: r = detail::wrap_sub(x, y); break;
        case Opcode::Mul: r = detail::wrap_mul(x, y); break;
        case Opcode::CmpLt: r = x < y; break;
        case Opcode::CmpLe: r = x <= y; break;
        default: r = x == y; break;
      }
      wr(data(ins.a), r);
      break;
    }
    case Opcode::Jmp: next = code_target(ins.a); break;
    case Opcode::Jz: {
      Word v = rd(data(ins.a));
      if (v == 0) next = code_target(ins.b);
      break;
    }
    case Opcode::Call: {
      // Frame: [return address, ARG0 .. ARG(n-1)], SP points past it.
      Word sp = rd(layout.sp);
      Word top = detail::wrap_add(sp, 1 + ins.b);
      if (sp < layout.stack.begin.as_word() || top > layout.stack.end.as_word())
        throw VmError("call stack overflow at " + to_string(pc));
      std::vector<Word> args;
      for (unsigned k = 0; k < ins.b; ++k) args.push_back(rd(layout.arg(k)));
      Address frame{static_cast<std::uint32_t>(sp)};
      wr(frame, pc.next().as_word());
      for (unsigned k = 0; k < ins.b; ++k) wr(frame + (1 + k), args[k]);
      wr(layout.sp, top);
      next = code_target(ins.a);
      break;
    }
    case Opcode::Ret: {
      Word sp = rd(layout.sp);
      Word base = detail::wrap_sub(sp, 1 + ins.a);
      if (base < layout.stack.begin.as_word() || sp > layout.stack.end.as_word())
        throw VmError("return with empty call stack at " + to_string(pc));
      Word ret = rd(Address{static_cast<std::uint32_t>(base)});
      wr(layout.sp, base);
      next = code_target(ret);
      break;
    }
    case Opcode::Stop:
    case Opcode::Breakpoint: break;  // unreachable, filtered above
  }
  return next;
}

namespace detail {

/// Plain memory adaptor used by run_instr.
struct DirectMemory {
  Memory& m;
  Word fetch(Address a) const { return m.read(a); }
  Word read(Address a) const { return m.read(a); }
  void write(Address a, Word w) { m.write(a, w); }
};

}  // namespace detail

/// The program's step function: (memory, pc) -> (memory', pc', accesses).
inline StepResult run_instr(const Memory& memory, Address pc, const MachineLayout& layout) {
  StepResult r{memory, pc, {}};
  detail::DirectMemory view{r.memory};
  r.pc = execute(view, pc, layout, r.accesses);
  return r;
}

/// In-place variant for hot loops; same semantics as run_instr.
inline Address run_instr_in_place(Memory& memory, Address pc, const MachineLayout& layout,
                                  std::vector<AccessRecord>& accesses) {
  detail::DirectMemory view{memory};
  return execute(view, pc, layout, accesses);
}

}  // namespace irv

template <>
struct std::hash<irv::Address> {
  std::size_t operator()(irv::Address a) const noexcept { return std::hash<std::uint32_t>{}(a.value); }
};
