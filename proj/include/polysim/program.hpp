// Copyright 2026 The polysim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sstream>

#include "polysim/isa.hpp"

namespace polysim {

// ---------------------------------------------------------------------------
// Assembly dialect
//
//   .func NAME [encrypt] [poly]   function begin, with protection attributes
//   .endfunc                      function end
//   .entry NAME                   program entry symbol (default: first func)
//   name:                         label; resolves to the current location
//   .word IMM                     literal data word
//   .space N                      N zero words
//   .ivslot N                     3-word IV slot whose count word carries N
//   .insn_word INSTRUCTION        instruction encoding emitted as data
//   .enc_begin / .enc_end         encrypted range inside a plain function
//   .plain_begin / .plain_end     plaintext range inside an encrypted function
//
// Instructions use standard RV32 operand order; pseudo-instructions nop, mv,
// li, la, j, jr, ret, call, beqz and bnez expand at parse time (la stays a
// 2-word pseudo until symbol resolution). Comments run from '#' to line end.
// ---------------------------------------------------------------------------

enum class ItemKind { kInstr, kLabel, kWord, kSpace, kIvSlot, kInsnWord, kEncMarker };

struct Item {
  ItemKind kind = ItemKind::kInstr;
  Instr instr;              // kInstr, kInsnWord
  std::string label;        // kLabel
  u32 value = 0;            // kWord payload, kSpace count, kIvSlot nb_I
  bool marker_begin = false;    // kEncMarker
  bool marker_encrypt = false;  // kEncMarker: enc_* vs plain_*
  int line = 0;

  u32 size_words() const {
    switch (kind) {
      case ItemKind::kInstr:
      case ItemKind::kInsnWord:
        return instr.size_words();
      case ItemKind::kWord:
        return 1;
      case ItemKind::kSpace:
        return value;
      case ItemKind::kIvSlot:
        return 3;
      default:
        return 0;
    }
  }

  static Item make_instr(const Instr& in) {
    Item it;
    it.kind = ItemKind::kInstr;
    it.instr = in;
    it.line = in.line;
    return it;
  }
  static Item make_label(const std::string& name, int line = 0) {
    Item it;
    it.kind = ItemKind::kLabel;
    it.label = name;
    it.line = line;
    return it;
  }
  static Item make_ivslot(u32 nb_instr, int line = 0) {
    Item it;
    it.kind = ItemKind::kIvSlot;
    it.value = nb_instr;
    it.line = line;
    return it;
  }
  static Item make_marker(bool begin, bool encrypt, int line = 0) {
    Item it;
    it.kind = ItemKind::kEncMarker;
    it.marker_begin = begin;
    it.marker_encrypt = encrypt;
    it.line = line;
    return it;
  }
};

struct Function {
  std::string name;
  bool encrypt = false;
  bool poly = false;
  std::vector<Item> items;
  int line = 0;
};

struct AsmProgram {
  std::vector<Function> functions;
  std::string entry;  // empty: first function

  const Function* find(const std::string& name) const {
    for (const auto& f : functions)
      if (f.name == name) return &f;
    return nullptr;
  }
  Function* find(const std::string& name) {
    for (auto& f : functions)
      if (f.name == name) return &f;
    return nullptr;
  }
  std::string entry_symbol() const {
    if (!entry.empty()) return entry;
    if (functions.empty()) throw ToolError("program has no functions");
    return functions.front().name;
  }
};

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace detail {

struct Tokenizer {
  std::string text;
  int line;
  size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }
  bool done() {
    skip_ws();
    return pos >= text.size();
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("line " + std::to_string(line) + ", col " + std::to_string(pos + 1) +
                     ": " + msg);
  }
  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }
  void expect(char c) {
    skip_ws();
    if (pos >= text.size() || text[pos] != c) fail(std::string("expected '") + c + "'");
    ++pos;
  }
  bool accept(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$';
  }
  std::string ident() {
    skip_ws();
    size_t start = pos;
    while (pos < text.size() && ident_char(text[pos])) ++pos;
    if (pos == start) fail("expected identifier");
    return text.substr(start, pos - start);
  }
  i64 integer() {
    skip_ws();
    size_t start = pos;
    bool neg = accept('-');
    if (accept('+')) neg = false;
    skip_ws();
    size_t digits = pos;
    int base = 10;
    if (pos + 1 < text.size() && text[pos] == '0' && (text[pos + 1] == 'x' || text[pos + 1] == 'X')) {
      base = 16;
      pos += 2;
      digits = pos;
    }
    while (pos < text.size() &&
           (std::isdigit(static_cast<unsigned char>(text[pos])) ||
            (base == 16 && hex_digit(text[pos]) >= 0)))
      ++pos;
    if (pos == digits) {
      pos = start;
      fail("expected integer");
    }
    i64 v = std::stoll(text.substr(digits, pos - digits), nullptr, base);
    return neg ? -v : v;
  }
};

inline u8 parse_reg(Tokenizer& t) {
  std::string name = t.ident();
  auto r = reg_by_name(name);
  if (!r) t.fail("bad register name '" + name + "'");
  return *r;
}

// label target or numeric pc-relative offset
inline void parse_target(Tokenizer& t, Instr& in) {
  char c = t.peek();
  if (c == '+' || c == '-' || std::isdigit(static_cast<unsigned char>(c))) {
    in.imm = static_cast<i32>(t.integer());
  } else {
    in.target = t.ident();
  }
}

inline void expand_li(std::vector<Item>& out, u8 rd, i64 value, int line) {
  if (value >= -2048 && value <= 2047) {
    Instr in{Op::kAddi, rd, kRegZero, 0, static_cast<i32>(value), "", line};
    out.push_back(Item::make_instr(in));
    return;
  }
  u32 v = static_cast<u32>(value);
  u32 hi = (v + 0x800) >> 12;
  i32 lo = static_cast<i32>(v - (hi << 12));
  Instr lui{Op::kLui, rd, 0, 0, static_cast<i32>(hi & 0xFFFFF), "", line};
  Instr addi{Op::kAddi, rd, rd, 0, lo, "", line};
  out.push_back(Item::make_instr(lui));
  if (lo != 0) out.push_back(Item::make_instr(addi));
}

inline void parse_instruction(Tokenizer& t, const std::string& mnemonic,
                              std::vector<Item>& out) {
  int line = t.line;
  auto push = [&](Instr in) {
    in.line = line;
    out.push_back(Item::make_instr(in));
  };

  // pseudo-instructions
  if (mnemonic == "nop") {
    push({Op::kAddi, 0, 0, 0, 0, "", line});
    return;
  }
  if (mnemonic == "mv") {
    u8 rd = parse_reg(t);
    t.expect(',');
    u8 rs = parse_reg(t);
    push({Op::kAddi, rd, rs, 0, 0, "", line});
    return;
  }
  if (mnemonic == "li") {
    u8 rd = parse_reg(t);
    t.expect(',');
    expand_li(out, rd, t.integer(), line);
    return;
  }
  if (mnemonic == "la") {
    u8 rd = parse_reg(t);
    t.expect(',');
    Instr in{Op::kLa, rd, 0, 0, 0, t.ident(), line};
    push(in);
    return;
  }
  if (mnemonic == "j") {
    Instr in{Op::kJal, 0, 0, 0, 0, "", line};
    parse_target(t, in);
    push(in);
    return;
  }
  if (mnemonic == "jr") {
    push({Op::kJalr, 0, parse_reg(t), 0, 0, "", line});
    return;
  }
  if (mnemonic == "ret") {
    push({Op::kJalr, 0, kRegRa, 0, 0, "", line});
    return;
  }
  if (mnemonic == "call") {
    Instr in{Op::kJal, kRegRa, 0, 0, 0, "", line};
    parse_target(t, in);
    push(in);
    return;
  }
  if (mnemonic == "beqz" || mnemonic == "bnez") {
    u8 rs = parse_reg(t);
    t.expect(',');
    Instr in{mnemonic == "beqz" ? Op::kBeq : Op::kBne, 0, rs, 0, 0, "", line};
    parse_target(t, in);
    push(in);
    return;
  }

  auto op = op_by_name(mnemonic);
  if (!op) t.fail("unknown mnemonic '" + mnemonic + "'");
  Instr in{*op, 0, 0, 0, 0, "", line};
  switch (format_of(*op)) {
    case Format::R:
      in.rd = parse_reg(t);
      t.expect(',');
      in.rs1 = parse_reg(t);
      t.expect(',');
      in.rs2 = parse_reg(t);
      break;
    case Format::I:
      if (is_load(*op)) {
        in.rd = parse_reg(t);
        t.expect(',');
        in.imm = static_cast<i32>(t.integer());
        t.expect('(');
        in.rs1 = parse_reg(t);
        t.expect(')');
      } else {
        in.rd = parse_reg(t);
        t.expect(',');
        in.rs1 = parse_reg(t);
        t.expect(',');
        in.imm = static_cast<i32>(t.integer());
      }
      break;
    case Format::S:
      in.rs2 = parse_reg(t);
      t.expect(',');
      in.imm = static_cast<i32>(t.integer());
      t.expect('(');
      in.rs1 = parse_reg(t);
      t.expect(')');
      break;
    case Format::B:
      in.rs1 = parse_reg(t);
      t.expect(',');
      in.rs2 = parse_reg(t);
      t.expect(',');
      parse_target(t, in);
      break;
    case Format::U:
      in.rd = parse_reg(t);
      t.expect(',');
      in.imm = static_cast<i32>(t.integer());
      break;
    case Format::J:
      in.rd = parse_reg(t);
      t.expect(',');
      parse_target(t, in);
      break;
    case Format::Sys:
      break;
    case Format::Ext:
      if (*op == Op::kInitBB || *op == Op::kEncWord) {
        in.rd = parse_reg(t);
        t.expect(',');
        in.rs1 = parse_reg(t);
      }
      break;
  }
  push(in);
}

}  // namespace detail

inline AsmProgram parse_program(const std::string& text) {
  AsmProgram prog;
  Function* current = nullptr;
  std::istringstream ss(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(ss, raw)) {
    ++line_no;
    // strip comments
    size_t hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    detail::Tokenizer t{raw, line_no};
    if (t.done()) continue;

    if (t.peek() == '.') {
      std::string dir = t.ident();
      if (dir == ".func") {
        if (current) t.fail("nested .func");
        Function fn;
        fn.name = t.ident();
        fn.line = line_no;
        while (!t.done()) {
          std::string attr = t.ident();
          if (attr == "encrypt")
            fn.encrypt = true;
          else if (attr == "poly")
            fn.poly = true;
          else
            t.fail("unknown function attribute '" + attr + "'");
        }
        if (prog.find(fn.name)) t.fail("duplicate function '" + fn.name + "'");
        prog.functions.push_back(std::move(fn));
        current = &prog.functions.back();
        continue;
      }
      if (dir == ".endfunc") {
        if (!current) t.fail(".endfunc outside function");
        current = nullptr;
        continue;
      }
      if (dir == ".entry") {
        prog.entry = t.ident();
        continue;
      }
      if (!current) t.fail("directive outside .func");
      if (dir == ".word") {
        Item it;
        it.kind = ItemKind::kWord;
        it.value = static_cast<u32>(t.integer());
        it.line = line_no;
        current->items.push_back(it);
      } else if (dir == ".space") {
        Item it;
        it.kind = ItemKind::kSpace;
        i64 n = t.integer();
        if (n < 0) t.fail(".space count must be non-negative");
        it.value = static_cast<u32>(n);
        it.line = line_no;
        current->items.push_back(it);
      } else if (dir == ".ivslot") {
        current->items.push_back(Item::make_ivslot(static_cast<u32>(t.integer()), line_no));
      } else if (dir == ".insn_word") {
        std::vector<Item> tmp;
        std::string mnemonic = t.ident();
        detail::parse_instruction(t, mnemonic, tmp);
        for (auto& it : tmp) {
          it.kind = ItemKind::kInsnWord;
          current->items.push_back(it);
        }
      } else if (dir == ".enc_begin" || dir == ".enc_end") {
        current->items.push_back(Item::make_marker(dir == ".enc_begin", true, line_no));
      } else if (dir == ".plain_begin" || dir == ".plain_end") {
        current->items.push_back(Item::make_marker(dir == ".plain_begin", false, line_no));
      } else {
        t.fail("unknown directive '" + dir + "'");
      }
      if (!t.done()) t.fail("trailing input");
      continue;
    }

    std::string word = t.ident();
    if (t.accept(':')) {
      if (!current) t.fail("label outside .func");
      current->items.push_back(Item::make_label(word, line_no));
      if (t.done()) continue;
      word = t.ident();  // instruction on the same line as label
    }
    if (!current) t.fail("instruction outside .func");
    detail::parse_instruction(t, word, current->items);
    if (!t.done()) t.fail("trailing input after instruction");
  }
  if (current) throw ParseError("missing .endfunc for '" + current->name + "'");
  return prog;
}

// ---------------------------------------------------------------------------
// Printer (canonical form; parse(format(p)) reproduces p)
// ---------------------------------------------------------------------------

inline std::string format_instr(const Instr& in) {
  std::ostringstream os;
  auto target = [&]() -> std::string {
    if (!in.target.empty()) return in.target;
    std::ostringstream t;
    if (in.imm >= 0) t << '+';
    t << in.imm;
    return t.str();
  };
  const char* name = in.op == Op::kLa ? "la" : op_info(in.op).name;
  switch (in.op == Op::kLa ? Format::J : format_of(in.op)) {
    case Format::R:
      os << name << ' ' << reg_name(in.rd) << ", " << reg_name(in.rs1) << ", "
         << reg_name(in.rs2);
      break;
    case Format::I:
      if (is_load(in.op))
        os << name << ' ' << reg_name(in.rd) << ", " << in.imm << '(' << reg_name(in.rs1)
           << ')';
      else if (is_ret(in))
        os << "ret";
      else if (in.op == Op::kAddi && in.rd == 0 && in.rs1 == 0 && in.imm == 0)
        os << "nop";
      else
        os << name << ' ' << reg_name(in.rd) << ", " << reg_name(in.rs1) << ", " << in.imm;
      break;
    case Format::S:
      os << name << ' ' << reg_name(in.rs2) << ", " << in.imm << '(' << reg_name(in.rs1)
         << ')';
      break;
    case Format::B:
      os << name << ' ' << reg_name(in.rs1) << ", " << reg_name(in.rs2) << ", " << target();
      break;
    case Format::U:
      os << name << ' ' << reg_name(in.rd) << ", 0x" << std::hex << in.imm;
      break;
    case Format::J:
      os << name << ' ' << reg_name(in.rd) << ", " << target();
      break;
    case Format::Sys:
      os << name;
      break;
    case Format::Ext:
      if (in.op == Op::kInitBB || in.op == Op::kEncWord)
        os << name << ' ' << reg_name(in.rd) << ", " << reg_name(in.rs1);
      else
        os << name;
      break;
  }
  return os.str();
}

inline std::string format_program(const AsmProgram& prog) {
  std::ostringstream os;
  if (!prog.entry.empty()) os << ".entry " << prog.entry << "\n\n";
  for (const auto& fn : prog.functions) {
    os << ".func " << fn.name;
    if (fn.encrypt) os << " encrypt";
    if (fn.poly) os << " poly";
    os << '\n';
    for (const auto& it : fn.items) {
      switch (it.kind) {
        case ItemKind::kLabel:
          os << it.label << ":\n";
          break;
        case ItemKind::kInstr:
          os << "  " << format_instr(it.instr) << '\n';
          break;
        case ItemKind::kInsnWord:
          os << "  .insn_word " << format_instr(it.instr) << '\n';
          break;
        case ItemKind::kWord:
          os << "  .word " << hex32(it.value) << '\n';
          break;
        case ItemKind::kSpace:
          os << "  .space " << it.value << '\n';
          break;
        case ItemKind::kIvSlot:
          os << "  .ivslot " << it.value << '\n';
          break;
        case ItemKind::kEncMarker:
          os << "  ." << (it.marker_encrypt ? "enc" : "plain") << '_'
             << (it.marker_begin ? "begin" : "end") << '\n';
          break;
      }
    }
    os << ".endfunc\n\n";
  }
  return os.str();
}

}  // namespace polysim
