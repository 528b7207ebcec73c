#pragma once

// Text assembler for the VM and the ProgramImage it produces.
//
//   # comment
//   VAR name [= imm]
//   label:
//   SET x, 5          MOV x, y         ADD x, y, z   (SUB MUL CMPLT CMPLE CMPEQ)
//   JMP label         JZ cond, label   CALL f        RET    NOP    STOP
//   x := y + 3 * z    (straight-line sugar, lowered through hidden temporaries)
//   FUNC name(nparams) ... ENDFUNC
//
// Several statements may share a line when separated by ';'. Operands are
// names or raw addresses written @N. Assigning to an undeclared name with :=
// declares it.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "irv/vm.hpp"

namespace irv {

struct FunctionInfo {
  std::string name;
  Address entry;
  std::vector<Address> returns;
  unsigned nparams = 0;

  bool operator==(const FunctionInfo&) const = default;
};

struct ProgramImage {
  std::map<std::string, Address> symbols;  // functions and data cells
  std::map<std::string, Address> labels;
  std::vector<std::string> variables;      // user variables in allocation order
  std::vector<FunctionInfo> functions;
  Memory initial_memory;
  Address start;
  MachineLayout layout;
  std::vector<std::string> source;         // per code address, as written

  AddressRange code_range() const { return layout.code; }

  const FunctionInfo* function(std::string_view name) const {
    for (const auto& f : functions)
      if (f.name == name) return &f;
    return nullptr;
  }
  const FunctionInfo* function_at_entry(Address a) const {
    for (const auto& f : functions)
      if (f.entry == a) return &f;
    return nullptr;
  }
  const FunctionInfo* function_returning_at(Address a) const {
    for (const auto& f : functions)
      if (std::find(f.returns.begin(), f.returns.end(), a) != f.returns.end()) return &f;
    return nullptr;
  }

  std::optional<Address> lookup(std::string_view name) const {
    if (auto it = symbols.find(std::string(name)); it != symbols.end()) return it->second;
    if (auto it = labels.find(std::string(name)); it != labels.end()) return it->second;
    return std::nullopt;
  }

  /// Name of the data cell at `a`, or "@N" when it has none.
  std::string data_name(Address a) const {
    for (const auto& [name, addr] : symbols)
      if (addr == a && !layout.code.contains(a)) return name;
    return to_string(a);
  }
  std::string code_name(Address a) const {
    for (const auto& f : functions)
      if (f.entry == a) return f.name;
    for (const auto& [name, addr] : labels)
      if (addr == a) return name;
    return to_string(a);
  }
};

class AssemblyError : public std::runtime_error {
 public:
  AssemblyError(int line, int column, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                           ": " + msg),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

struct AssembleOptions {
  std::size_t data_cells = 8192;  // 64 KiB of 8-byte words
  std::size_t stack_cells = 256;
};

namespace asm_detail {

inline std::string upper(std::string_view s) {
  std::string r(s);
  for (auto& c : r) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return r;
}

inline bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

struct Tok {
  enum Kind { Ident, Int, Addr, Punct, End } kind = End;
  std::string text;
  Word value = 0;
  int col = 0;
};

/// Tokenizer for one statement. Columns are 1-based within the source line.
class StmtLexer {
 public:
  StmtLexer(std::string_view text, int line, int col_offset)
      : text_(text), line_(line), col0_(col_offset) {
    std::size_t i = 0;
    while (i < text_.size()) {
      char c = text_[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        continue;
      }
      Tok t;
      t.col = col0_ + static_cast<int>(i);
      if (is_ident_start(c)) {
        std::size_t j = i;
        while (j < text_.size() && is_ident_char(text_[j])) ++j;
        t.kind = Tok::Ident;
        t.text = std::string(text_.substr(i, j - i));
        i = j;
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '@') {
        std::size_t j = i + (c == '@' ? 1 : 0);
        std::size_t digits = j;
        while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j]))) ++j;
        if (j == digits) throw AssemblyError(line_, t.col, "expected digits after '@'");
        if (j < text_.size() && is_ident_char(text_[j]))
          throw AssemblyError(line_, t.col, "malformed number");
        t.kind = c == '@' ? Tok::Addr : Tok::Int;
        t.text = std::string(text_.substr(i, j - i));
        try {
          t.value = std::stoll(std::string(text_.substr(digits, j - digits)));
        } catch (const std::out_of_range&) {
          throw AssemblyError(line_, t.col, "number out of range");
        }
        i = j;
      } else {
        static const char* two[] = {":=", "<=", "==", ">=", "!="};
        t.kind = Tok::Punct;
        t.text = std::string(1, c);
        for (const char* p : two)
          if (text_.substr(i, 2) == p) t.text = p;
        i += t.text.size();
      }
      toks_.push_back(t);
    }
    Tok end;
    end.col = col0_ + static_cast<int>(text_.size());
    toks_.push_back(end);
  }

  const Tok& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  Tok next() {
    Tok t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool at_end() const { return peek().kind == Tok::End; }
  bool accept(std::string_view punct) {
    if (peek().kind == Tok::Punct && peek().text == punct) {
      next();
      return true;
    }
    return false;
  }
  void expect(std::string_view punct) {
    if (!accept(punct)) fail(peek(), "expected '" + std::string(punct) + "'");
  }
  void expect_end() {
    if (!at_end()) fail(peek(), "unexpected '" + peek().text + "'");
  }
  [[noreturn]] void fail(const Tok& t, const std::string& msg) const {
    throw AssemblyError(line_, t.col, msg);
  }
  int line() const { return line_; }

 private:
  std::string_view text_;
  int line_;
  int col0_;
  std::vector<Tok> toks_;
  std::size_t pos_ = 0;
};

// Operand references are resolved after all declarations are seen.
struct Ref {
  enum Kind { None, Name, Raw } kind = None;
  std::string name;
  std::uint32_t raw = 0;
  int line = 0;
  int col = 0;
};

struct PendingInstr {
  Opcode op = Opcode::Nop;
  Ref a, b, c;
  Word imm = 0;
  bool stop = false;
  std::string text;
  int line = 0;
  int col = 0;
  int func = -1;  // index into functions, -1 for main code
};

// Expression tree for := sugar.
struct Expr {
  enum Kind { Lit, Var, Bin } kind = Lit;
  Word value = 0;
  Ref var;
  Opcode op = Opcode::Add;
  bool swap = false;  // for > and >=, evaluated as CMPLT/CMPLE with swapped operands
  std::unique_ptr<Expr> lhs, rhs;
};

}  // namespace asm_detail

inline const std::vector<std::string>& reserved_cell_names() {
  static const std::vector<std::string> names = {"RETVAL", "SP",   "ARG0", "ARG1", "ARG2",
                                                 "ARG3",   "ARG4", "ARG5", "ARG6", "ARG7"};
  return names;
}

class Assembler {
 public:
  explicit Assembler(AssembleOptions opts = {}) : opts_(opts) {}

  ProgramImage assemble(std::string_view source) {
    using namespace asm_detail;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= source.size()) {
      std::size_t nl = source.find('\n', pos);
      if (nl == std::string_view::npos) nl = source.size();
      std::string_view line = source.substr(pos, nl - pos);
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      std::size_t start = 0;
      while (start <= line.size()) {
        std::size_t semi = line.find(';', start);
        if (semi == std::string_view::npos) semi = line.size();
        statement(line.substr(start, semi - start), line_no, static_cast<int>(start) + 1);
        start = semi + 1;
      }
      pos = nl + 1;
    }
    if (current_func_ >= 0)
      throw AssemblyError(func_line_, 1, "FUNC " + funcs_[current_func_].name + " without ENDFUNC");
    return link();
  }

 private:
  struct FuncDecl {
    std::string name;
    unsigned nparams = 0;
    std::vector<asm_detail::PendingInstr> body;
    std::vector<std::pair<std::string, std::size_t>> labels;  // name -> body index
    int line = 0;
  };

  void statement(std::string_view text, int line, int col) {
    using namespace asm_detail;
    StmtLexer lx(text, line, col);
    if (lx.at_end()) return;
    std::string stmt_text = trim(text);

    // label definitions, possibly followed by a statement
    while (lx.peek().kind == Tok::Ident && lx.peek(1).kind == Tok::Punct && lx.peek(1).text == ":") {
      Tok name = lx.next();
      lx.next();
      define_label(name, line);
      stmt_text = trim(stmt_text.substr(stmt_text.find(':') + 1));
    }
    if (lx.at_end()) return;

    Tok head = lx.peek();
    if (head.kind == Tok::Ident && lx.peek(1).kind == Tok::Punct && lx.peek(1).text == ":=") {
      lx.next();
      lx.next();
      sugar(head, lx, stmt_text);
      return;
    }
    if (head.kind != Tok::Ident) lx.fail(head, "expected a statement");
    lx.next();
    std::string kw = upper(head.text);

    if (kw == "VAR") {
      Tok name = lx.next();
      if (name.kind != Tok::Ident) lx.fail(name, "expected variable name");
      Word init = 0;
      if (lx.accept("=")) init = signed_int(lx);
      lx.expect_end();
      declare_var(name, init, line);
      return;
    }
    if (kw == "FUNC") {
      if (current_func_ >= 0) lx.fail(head, "nested FUNC");
      Tok name = lx.next();
      if (name.kind != Tok::Ident) lx.fail(name, "expected function name");
      lx.expect("(");
      Tok n = lx.next();
      if (n.kind != Tok::Int) lx.fail(n, "expected parameter count");
      if (n.value > static_cast<Word>(kMaxArgs)) lx.fail(n, "too many parameters");
      lx.expect(")");
      lx.expect_end();
      for (const auto& f : funcs_)
        if (f.name == name.text) lx.fail(name, "duplicate function '" + name.text + "'");
      check_fresh_name(name, line);
      funcs_.push_back(FuncDecl{name.text, static_cast<unsigned>(n.value), {}, {}, line});
      current_func_ = static_cast<int>(funcs_.size()) - 1;
      func_line_ = line;
      return;
    }
    if (kw == "ENDFUNC") {
      lx.expect_end();
      if (current_func_ < 0) lx.fail(head, "ENDFUNC without FUNC");
      FuncDecl& f = funcs_[current_func_];
      bool label_at_end = std::any_of(f.labels.begin(), f.labels.end(),
                                      [&](const auto& l) { return l.second == f.body.size(); });
      if (f.body.empty() || f.body.back().op != Opcode::Ret || label_at_end) {
        PendingInstr r;
        r.op = Opcode::Ret;
        r.text = "RET";
        r.line = line;
        r.col = head.col;
        emit(r);
      }
      current_func_ = -1;
      return;
    }

    PendingInstr p;
    p.text = stmt_text;
    p.line = line;
    p.col = head.col;
    auto data_ref = [&]() {
      Tok t = lx.next();
      Ref r;
      r.line = line;
      r.col = t.col;
      if (t.kind == Tok::Ident) {
        r.kind = Ref::Name;
        r.name = t.text;
      } else if (t.kind == Tok::Addr) {
        r.kind = Ref::Raw;
        r.raw = static_cast<std::uint32_t>(t.value);
      } else {
        lx.fail(t, "expected operand");
      }
      return r;
    };
    auto comma = [&]() { lx.expect(","); };

    if (kw == "NOP") {
      p.op = Opcode::Nop;
    } else if (kw == "STOP") {
      p.stop = true;
    } else if (kw == "SET") {
      p.op = Opcode::Set;
      p.a = data_ref();
      comma();
      p.imm = signed_int(lx);
    } else if (kw == "MOV") {
      p.op = Opcode::Mov;
      p.a = data_ref();
      comma();
      p.b = data_ref();
    } else if (auto op = three_operand(kw)) {
      p.op = *op;
      p.a = data_ref();
      comma();
      p.b = data_ref();
      comma();
      p.c = data_ref();
    } else if (kw == "JMP") {
      p.op = Opcode::Jmp;
      p.a = data_ref();
    } else if (kw == "JZ") {
      p.op = Opcode::Jz;
      p.a = data_ref();
      comma();
      p.b = data_ref();
    } else if (kw == "CALL") {
      p.op = Opcode::Call;
      p.a = data_ref();
      if (p.a.kind != Ref::Name) lx.fail(head, "CALL expects a function name");
    } else if (kw == "RET") {
      p.op = Opcode::Ret;
      if (current_func_ < 0) lx.fail(head, "RET outside of a function");
    } else {
      lx.fail(head, "unknown instruction '" + head.text + "'");
    }
    lx.expect_end();
    emit(std::move(p));
  }

  static std::optional<Opcode> three_operand(const std::string& kw) {
    if (kw == "ADD") return Opcode::Add;
    if (kw == "SUB") return Opcode::Sub;
    if (kw == "MUL") return Opcode::Mul;
    if (kw == "CMPLT") return Opcode::CmpLt;
    if (kw == "CMPLE") return Opcode::CmpLe;
    if (kw == "CMPEQ") return Opcode::CmpEq;
    return std::nullopt;
  }

  static std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
  }

  static Word signed_int(asm_detail::StmtLexer& lx) {
    using asm_detail::Tok;
    bool neg = lx.accept("-");
    Tok t = lx.next();
    if (t.kind != Tok::Int) lx.fail(t, "expected integer");
    return neg ? -t.value : t.value;
  }

  void emit(asm_detail::PendingInstr p) {
    p.func = current_func_;
    if (current_func_ >= 0)
      funcs_[current_func_].body.push_back(std::move(p));
    else
      main_.push_back(std::move(p));
  }

  void check_fresh_name(const asm_detail::Tok& name, int line) {
    const std::string& n = name.text;
    if (std::find(reserved_cell_names().begin(), reserved_cell_names().end(), asm_detail::upper(n)) !=
        reserved_cell_names().end())
      throw AssemblyError(line, name.col, "'" + n + "' is a reserved name");
    bool taken = var_index_.count(n) || main_labels_.count(n) ||
                 std::any_of(funcs_.begin(), funcs_.end(), [&](const FuncDecl& f) {
                   return f.name == n || std::any_of(f.labels.begin(), f.labels.end(),
                                                     [&](const auto& l) { return l.first == n; });
                 });
    if (taken) throw AssemblyError(line, name.col, "duplicate label '" + n + "'");
  }

  void define_label(const asm_detail::Tok& name, int line) {
    check_fresh_name(name, line);
    if (current_func_ >= 0)
      funcs_[current_func_].labels.emplace_back(name.text, funcs_[current_func_].body.size());
    else
      main_labels_[name.text] = main_.size();
  }

  void declare_var(const asm_detail::Tok& name, Word init, int line) {
    check_fresh_name(name, line);
    var_index_[name.text] = vars_.size();
    vars_.push_back({name.text, init});
  }

  // ---- := sugar ----------------------------------------------------------

  void sugar(const asm_detail::Tok& target, asm_detail::StmtLexer& lx, const std::string& text) {
    using namespace asm_detail;
    if (!var_index_.count(target.text) && !is_reserved(target.text)) {
      if (function_or_label_named(target.text))
        lx.fail(target, "'" + target.text + "' is not a variable");
      declare_var(target, 0, lx.line());
    }
    Ref dst{Ref::Name, target.text, 0, lx.line(), target.col};
    auto e = parse_cmp(lx);
    lx.expect_end();
    sugar_text_ = text;
    sugar_line_ = lx.line();
    sugar_col_ = target.col;
    temps_in_use_ = 0;
    if (e->kind == Expr::Lit) {
      PendingInstr p = sugar_instr(Opcode::Set);
      p.a = dst;
      p.imm = e->value;
      emit(std::move(p));
    } else if (e->kind == Expr::Var) {
      PendingInstr p = sugar_instr(Opcode::Mov);
      p.a = dst;
      p.b = e->var;
      emit(std::move(p));
    } else {
      lower_into(*e, dst);
    }
  }

  bool is_reserved(const std::string& n) const {
    const auto& r = reserved_cell_names();
    return std::find(r.begin(), r.end(), asm_detail::upper(n)) != r.end();
  }

  bool function_or_label_named(const std::string& n) const {
    if (main_labels_.count(n)) return true;
    for (const auto& f : funcs_) {
      if (f.name == n) return true;
      for (const auto& l : f.labels)
        if (l.first == n) return true;
    }
    return false;
  }

  asm_detail::PendingInstr sugar_instr(Opcode op) {
    asm_detail::PendingInstr p;
    p.op = op;
    p.line = sugar_line_;
    p.col = sugar_col_;
    p.text = sugar_text_;
    return p;
  }

  asm_detail::Ref temp() {
    std::size_t k = temps_in_use_++;
    temp_count_ = std::max(temp_count_, temps_in_use_);
    return asm_detail::Ref{asm_detail::Ref::Name, "__t" + std::to_string(k), 0, sugar_line_, sugar_col_};
  }

  // Returns a reference holding the value of e, emitting code as needed.
  asm_detail::Ref operand(const asm_detail::Expr& e) {
    using namespace asm_detail;
    if (e.kind == Expr::Var) return e.var;
    Ref t = temp();
    if (e.kind == Expr::Lit) {
      PendingInstr p = sugar_instr(Opcode::Set);
      p.a = t;
      p.imm = e.value;
      emit(std::move(p));
    } else {
      lower_into(e, t);
    }
    return t;
  }

  void lower_into(const asm_detail::Expr& e, const asm_detail::Ref& dst) {
    std::size_t mark = temps_in_use_;
    auto l = operand(*e.lhs);
    auto r = operand(*e.rhs);
    asm_detail::PendingInstr p = sugar_instr(e.op);
    p.a = dst;
    p.b = e.swap ? r : l;
    p.c = e.swap ? l : r;
    emit(std::move(p));
    temps_in_use_ = mark;
  }

  using ExprPtr = std::unique_ptr<asm_detail::Expr>;

  ExprPtr bin(Opcode op, ExprPtr l, ExprPtr r, bool swap = false) {
    auto e = std::make_unique<asm_detail::Expr>();
    e->kind = asm_detail::Expr::Bin;
    e->op = op;
    e->swap = swap;
    e->lhs = std::move(l);
    e->rhs = std::move(r);
    return e;
  }

  ExprPtr parse_cmp(asm_detail::StmtLexer& lx) {
    auto l = parse_add(lx);
    const auto& t = lx.peek();
    if (t.kind == asm_detail::Tok::Punct) {
      if (t.text == "<") { lx.next(); return bin(Opcode::CmpLt, std::move(l), parse_add(lx)); }
      if (t.text == "<=") { lx.next(); return bin(Opcode::CmpLe, std::move(l), parse_add(lx)); }
      if (t.text == ">") { lx.next(); return bin(Opcode::CmpLt, std::move(l), parse_add(lx), true); }
      if (t.text == ">=") { lx.next(); return bin(Opcode::CmpLe, std::move(l), parse_add(lx), true); }
      if (t.text == "==") { lx.next(); return bin(Opcode::CmpEq, std::move(l), parse_add(lx)); }
    }
    return l;
  }

  ExprPtr parse_add(asm_detail::StmtLexer& lx) {
    auto l = parse_mul(lx);
    for (;;) {
      if (lx.accept("+")) l = bin(Opcode::Add, std::move(l), parse_mul(lx));
      else if (lx.accept("-")) l = bin(Opcode::Sub, std::move(l), parse_mul(lx));
      else return l;
    }
  }

  ExprPtr parse_mul(asm_detail::StmtLexer& lx) {
    auto l = parse_atom(lx);
    while (lx.accept("*")) l = bin(Opcode::Mul, std::move(l), parse_atom(lx));
    return l;
  }

  ExprPtr parse_atom(asm_detail::StmtLexer& lx) {
    using namespace asm_detail;
    auto e = std::make_unique<Expr>();
    if (lx.accept("(")) {
      auto inner = parse_cmp(lx);
      lx.expect(")");
      return inner;
    }
    if (lx.accept("-")) {
      Tok t = lx.next();
      if (t.kind != Tok::Int) lx.fail(t, "expected integer after '-'");
      e->kind = Expr::Lit;
      e->value = -t.value;
      return e;
    }
    Tok t = lx.next();
    if (t.kind == Tok::Int) {
      e->kind = Expr::Lit;
      e->value = t.value;
    } else if (t.kind == Tok::Ident) {
      e->kind = Expr::Var;
      e->var = Ref{Ref::Name, t.text, 0, lx.line(), t.col};
    } else if (t.kind == Tok::Addr) {
      e->kind = Expr::Var;
      e->var = Ref{Ref::Raw, "", static_cast<std::uint32_t>(t.value), lx.line(), t.col};
    } else {
      lx.fail(t, "expected operand");
    }
    return e;
  }

  // ---- linking -----------------------------------------------------------

  ProgramImage link() {
    using namespace asm_detail;
    ProgramImage img;
    std::uint32_t code_size = static_cast<std::uint32_t>(main_.size() + 1);
    for (const auto& f : funcs_) code_size += static_cast<std::uint32_t>(f.body.size());

    std::size_t fixed = reserved_cell_names().size();
    std::size_t needed = fixed + vars_.size() + temp_count_ + opts_.stack_cells;
    std::size_t data_cells = std::max(opts_.data_cells, needed);
    std::size_t total = code_size + data_cells;
    if (total > 65536) throw AssemblyError(1, 1, "program does not fit in 65536 cells");

    MachineLayout& L = img.layout;
    L.code = {Address{0}, Address{code_size}};
    L.memory_size = total;
    Address next{code_size};
    L.retval = next;
    L.sp = next + 1;
    L.arg0 = next + 2;
    for (std::size_t k = 0; k < fixed; ++k)
      img.symbols[reserved_cell_names()[k]] = next + static_cast<std::uint32_t>(k);
    next = next + static_cast<std::uint32_t>(fixed);
    for (const auto& v : vars_) {
      img.symbols[v.first] = next;
      img.variables.push_back(v.first);
      next = next.next();
    }
    for (std::size_t k = 0; k < temp_count_; ++k) {
      img.symbols["__t" + std::to_string(k)] = next;
      next = next.next();
    }
    L.stack = {next, next + static_cast<std::uint32_t>(opts_.stack_cells)};

    // code placement: main, STOP, then functions in declaration order
    std::vector<const PendingInstr*> order;
    for (const auto& p : main_) order.push_back(&p);
    PendingInstr stop;
    stop.stop = true;
    stop.text = "STOP";
    order.push_back(&stop);
    for (const auto& [name, idx] : main_labels_) img.labels[name] = Address{static_cast<std::uint32_t>(idx)};
    std::uint32_t at = static_cast<std::uint32_t>(main_.size() + 1);
    for (const auto& f : funcs_) {
      FunctionInfo fi;
      fi.name = f.name;
      fi.entry = Address{at};
      fi.nparams = f.nparams;
      for (const auto& [name, idx] : f.labels) img.labels[name] = Address{at + static_cast<std::uint32_t>(idx)};
      for (std::size_t k = 0; k < f.body.size(); ++k) {
        if (f.body[k].op == Opcode::Ret && !f.body[k].stop)
          fi.returns.push_back(Address{at + static_cast<std::uint32_t>(k)});
        order.push_back(&f.body[k]);
      }
      img.symbols[f.name] = fi.entry;
      at += static_cast<std::uint32_t>(f.body.size());
      img.functions.push_back(std::move(fi));
    }

    img.initial_memory = Memory(total);
    for (std::uint32_t k = 0; k < order.size(); ++k) {
      const PendingInstr& p = *order[k];
      img.source.push_back(p.text);
      Word w;
      if (p.stop) {
        w = kStopWord;
      } else {
        Instruction ins;
        ins.op = p.op;
        switch (p.op) {
          case Opcode::Set:
            ins.a = data_addr(img, p.a);
            ins.imm = p.imm;
            if (p.imm < kImmMin || p.imm > kImmMax)
              throw AssemblyError(p.line, p.col, "immediate out of range");
            break;
          case Opcode::Mov:
            ins.a = data_addr(img, p.a);
            ins.b = data_addr(img, p.b);
            break;
          case Opcode::Jmp:
            ins.a = code_addr(img, p.a);
            break;
          case Opcode::Jz:
            ins.a = data_addr(img, p.a);
            ins.b = code_addr(img, p.b);
            break;
          case Opcode::Call: {
            auto* f = img.function(p.a.name);
            if (!f) throw AssemblyError(p.a.line, p.a.col, "call to undeclared function '" + p.a.name + "'");
            ins.a = static_cast<std::uint16_t>(f->entry.value);
            ins.b = static_cast<std::uint16_t>(f->nparams);
            break;
          }
          case Opcode::Ret:
            ins.a = static_cast<std::uint16_t>(funcs_[p.func].nparams);
            break;
          case Opcode::Nop: break;
          default:
            ins.a = data_addr(img, p.a);
            ins.b = data_addr(img, p.b);
            ins.c = data_addr(img, p.c);
            break;
        }
        w = encode(ins);
      }
      img.initial_memory.write(Address{k}, w);
    }
    for (const auto& v : vars_) img.initial_memory.write(img.symbols.at(v.first), v.second);
    img.initial_memory.write(L.sp, L.stack.begin.as_word());
    img.start = Address{0};
    return img;
  }

  std::uint16_t data_addr(const ProgramImage& img, const asm_detail::Ref& r) const {
    if (r.kind == asm_detail::Ref::Raw) {
      if (img.layout.code.contains(Address{r.raw}) || r.raw >= img.layout.memory_size)
        throw AssemblyError(r.line, r.col, "address @" + std::to_string(r.raw) + " is not a data cell");
      return static_cast<std::uint16_t>(r.raw);
    }
    std::string key = is_reserved(r.name) ? asm_detail::upper(r.name) : r.name;
    auto it = img.symbols.find(key);
    if (it == img.symbols.end() || img.layout.code.contains(it->second))
      throw AssemblyError(r.line, r.col, "undefined symbol '" + r.name + "'");
    return static_cast<std::uint16_t>(it->second.value);
  }

  std::uint16_t code_addr(const ProgramImage& img, const asm_detail::Ref& r) const {
    if (r.kind == asm_detail::Ref::Raw) {
      if (!img.layout.code.contains(Address{r.raw}))
        throw AssemblyError(r.line, r.col, "address @" + std::to_string(r.raw) + " is not in code");
      return static_cast<std::uint16_t>(r.raw);
    }
    if (auto it = img.labels.find(r.name); it != img.labels.end())
      return static_cast<std::uint16_t>(it->second.value);
    if (auto* f = img.function(r.name)) return static_cast<std::uint16_t>(f->entry.value);
    throw AssemblyError(r.line, r.col, "undefined symbol '" + r.name + "'");
  }

  AssembleOptions opts_;
  std::vector<asm_detail::PendingInstr> main_;
  std::map<std::string, std::size_t> main_labels_;
  std::vector<FuncDecl> funcs_;
  std::vector<std::pair<std::string, Word>> vars_;
  std::map<std::string, std::size_t> var_index_;
  int current_func_ = -1;
  int func_line_ = 0;
  std::size_t temp_count_ = 0;
  std::size_t temps_in_use_ = 0;
  std::string sugar_text_;
  int sugar_line_ = 0;
  int sugar_col_ = 0;
};

inline ProgramImage assemble(std::string_view source, AssembleOptions opts = {}) {
  return Assembler(opts).assemble(source);
}

/// One-line rendering of a code word using the image's symbol names.
inline std::string disassemble(Word w, const ProgramImage& img) {
  Decoded d = decode(w);
  if (std::holds_alternative<BreakpointTrap>(d)) return "B";
  if (std::holds_alternative<Halt>(d)) return "STOP";
  if (std::holds_alternative<InvalidWord>(d)) return ".word " + std::to_string(w);
  const auto& i = std::get<Instruction>(d);
  auto dn = [&](std::uint16_t a) { return img.data_name(Address{a}); };
  auto cn = [&](std::uint16_t a) { return img.code_name(Address{a}); };
  std::string m = mnemonic(i.op);
  switch (i.op) {
    case Opcode::Nop: return m;
    case Opcode::Set: return m + " " + dn(i.a) + ", " + std::to_string(i.imm);
    case Opcode::Mov: return m + " " + dn(i.a) + ", " + dn(i.b);
    case Opcode::Jmp: return m + " " + cn(i.a);
    case Opcode::Jz: return m + " " + dn(i.a) + ", " + cn(i.b);
    case Opcode::Call: return m + " " + cn(i.a);
    case Opcode::Ret: return m;
    default: return m + " " + dn(i.a) + ", " + dn(i.b) + ", " + dn(i.c);
  }
}

}  // namespace irv
