// Copyright 2026 The polysim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>

#include "polysim/common.hpp"

namespace polysim {

// Supported subset: RV32I integer ops, loads/stores, branches, jal/jalr,
// lui/auipc, ecall, the M extension, and four custom instructions on the
// custom-0 opcode (0x0B) discriminated by funct3:
//   funct3 0: initbb rd, rs1   - draw IV, write 3-word slot at [rs1],
//                                 reset the execute-side cipher, rd = rs1+12
//   funct3 1: enc_word rd, rs1 - rd = encrypt(rs1) on the execute channel
//   funct3 2: enable_dec       - arm decryption; applies at next taken CF
//   funct3 3: disable_dec      - disarm decryption; applies at next taken CF

enum class Format { R, I, S, B, U, J, Ext, Sys };

enum class Op : u8 {
  kAdd, kSub, kSll, kSlt, kSltu, kXor, kSrl, kSra, kOr, kAnd,
  kMul, kMulh, kMulhsu, kMulhu, kDiv, kDivu, kRem, kRemu,
  kAddi, kSlti, kSltiu, kXori, kOri, kAndi, kSlli, kSrli, kSrai,
  kLb, kLh, kLw, kLbu, kLhu,
  kSb, kSh, kSw,
  kBeq, kBne, kBlt, kBge, kBltu, kBgeu,
  kLui, kAuipc,
  kJal, kJalr,
  kEcall,
  kInitBB, kEncWord, kEnableDec, kDisableDec,
  kLa,       // pseudo: absolute address materialisation, 2 words (lui+addi)
  kIllegal,
};

struct OpInfo {
  Op op;
  const char* name;
  Format fmt;
  u8 opcode;
  u8 funct3;
  u8 funct7;
};

inline const OpInfo* op_table(size_t& count) {
  static const OpInfo kOps[] = {
      {Op::kAdd, "add", Format::R, 0x33, 0, 0x00},
      {Op::kSub, "sub", Format::R, 0x33, 0, 0x20},
      {Op::kSll, "sll", Format::R, 0x33, 1, 0x00},
      {Op::kSlt, "slt", Format::R, 0x33, 2, 0x00},
      {Op::kSltu, "sltu", Format::R, 0x33, 3, 0x00},
      {Op::kXor, "xor", Format::R, 0x33, 4, 0x00},
      {Op::kSrl, "srl", Format::R, 0x33, 5, 0x00},
      {Op::kSra, "sra", Format::R, 0x33, 5, 0x20},
      {Op::kOr, "or", Format::R, 0x33, 6, 0x00},
      {Op::kAnd, "and", Format::R, 0x33, 7, 0x00},
      {Op::kMul, "mul", Format::R, 0x33, 0, 0x01},
      {Op::kMulh, "mulh", Format::R, 0x33, 1, 0x01},
      {Op::kMulhsu, "mulhsu", Format::R, 0x33, 2, 0x01},
      {Op::kMulhu, "mulhu", Format::R, 0x33, 3, 0x01},
      {Op::kDiv, "div", Format::R, 0x33, 4, 0x01},
      {Op::kDivu, "divu", Format::R, 0x33, 5, 0x01},
      {Op::kRem, "rem", Format::R, 0x33, 6, 0x01},
      {Op::kRemu, "remu", Format::R, 0x33, 7, 0x01},
      {Op::kAddi, "addi", Format::I, 0x13, 0, 0},
      {Op::kSlti, "slti", Format::I, 0x13, 2, 0},
      {Op::kSltiu, "sltiu", Format::I, 0x13, 3, 0},
      {Op::kXori, "xori", Format::I, 0x13, 4, 0},
      {Op::kOri, "ori", Format::I, 0x13, 6, 0},
      {Op::kAndi, "andi", Format::I, 0x13, 7, 0},
      {Op::kSlli, "slli", Format::I, 0x13, 1, 0x00},
      {Op::kSrli, "srli", Format::I, 0x13, 5, 0x00},
      {Op::kSrai, "srai", Format::I, 0x13, 5, 0x20},
      {Op::kLb, "lb", Format::I, 0x03, 0, 0},
      {Op::kLh, "lh", Format::I, 0x03, 1, 0},
      {Op::kLw, "lw", Format::I, 0x03, 2, 0},
      {Op::kLbu, "lbu", Format::I, 0x03, 4, 0},
      {Op::kLhu, "lhu", Format::I, 0x03, 5, 0},
      {Op::kSb, "sb", Format::S, 0x23, 0, 0},
      {Op::kSh, "sh", Format::S, 0x23, 1, 0},
      {Op::kSw, "sw", Format::S, 0x23, 2, 0},
      {Op::kBeq, "beq", Format::B, 0x63, 0, 0},
      {Op::kBne, "bne", Format::B, 0x63, 1, 0},
      {Op::kBlt, "blt", Format::B, 0x63, 4, 0},
      {Op::kBge, "bge", Format::B, 0x63, 5, 0},
      {Op::kBltu, "bltu", Format::B, 0x63, 6, 0},
      {Op::kBgeu, "bgeu", Format::B, 0x63, 7, 0},
      {Op::kLui, "lui", Format::U, 0x37, 0, 0},
      {Op::kAuipc, "auipc", Format::U, 0x17, 0, 0},
      {Op::kJal, "jal", Format::J, 0x6F, 0, 0},
      {Op::kJalr, "jalr", Format::I, 0x67, 0, 0},
      {Op::kEcall, "ecall", Format::Sys, 0x73, 0, 0},
      {Op::kInitBB, "initbb", Format::Ext, 0x0B, 0, 0},
      {Op::kEncWord, "enc_word", Format::Ext, 0x0B, 1, 0},
      {Op::kEnableDec, "enable_dec", Format::Ext, 0x0B, 2, 0},
      {Op::kDisableDec, "disable_dec", Format::Ext, 0x0B, 3, 0},
  };
  count = sizeof(kOps) / sizeof(kOps[0]);
  return kOps;
}

inline const OpInfo& op_info(Op op) {
  size_t n;
  const OpInfo* t = op_table(n);
  for (size_t i = 0; i < n; ++i)
    if (t[i].op == op) return t[i];
  throw ToolError("no encoding info for op");
}

inline std::optional<Op> op_by_name(const std::string& name) {
  size_t n;
  const OpInfo* t = op_table(n);
  for (size_t i = 0; i < n; ++i)
    if (name == t[i].name) return t[i].op;
  return std::nullopt;
}

// One parsed instruction. `target` carries an unresolved label for
// branch/jump/la operands; the assembler folds it into `imm`.
struct Instr {
  Op op = Op::kIllegal;
  u8 rd = 0;
  u8 rs1 = 0;
  u8 rs2 = 0;
  i32 imm = 0;
  std::string target;

  // source location for diagnostics
  int line = 0;

  u32 size_words() const { return op == Op::kLa ? 2 : 1; }
};

inline Format format_of(Op op) {
  if (op == Op::kLa) return Format::I;  // lowers to lui+addi; rd-writing, non-CF
  return op_info(op).fmt;
}

inline bool is_branch(Op op) { return format_of(op) == Format::B; }
inline bool is_jal(Op op) { return op == Op::kJal; }
inline bool is_jalr(Op op) { return op == Op::kJalr; }
inline bool is_control_flow(Op op) { return is_branch(op) || op == Op::kJal || op == Op::kJalr; }
inline bool is_load(Op op) {
  return op == Op::kLb || op == Op::kLh || op == Op::kLw || op == Op::kLbu || op == Op::kLhu;
}
inline bool is_store(Op op) { return op == Op::kSb || op == Op::kSh || op == Op::kSw; }
inline bool is_mem(Op op) { return is_load(op) || is_store(op); }

constexpr u8 kRegZero = 0, kRegRa = 1, kRegSp = 2, kRegGp = 3, kRegTp = 4;

inline bool is_call(const Instr& in) {
  return (in.op == Op::kJal || in.op == Op::kJalr) && in.rd == kRegRa;
}
inline bool is_ret(const Instr& in) {
  return in.op == Op::kJalr && in.rd == kRegZero && in.rs1 == kRegRa && in.imm == 0;
}

// ---------------------------------------------------------------------------
// encode / decode
// ---------------------------------------------------------------------------

inline void check_imm_range(i64 v, i64 lo, i64 hi, const char* what) {
  if (v < lo || v > hi) throw ToolError(std::string(what) + " immediate out of range: " +
                                        std::to_string(v));
}

inline u32 encode(const Instr& in) {
  if (!in.target.empty())
    throw ToolError("cannot encode instruction with unresolved label '" + in.target + "'");
  const OpInfo& info = op_info(in.op);
  const u32 opc = info.opcode;
  const u32 f3 = info.funct3;
  const u32 f7 = info.funct7;
  const u32 rd = in.rd & 31, rs1 = in.rs1 & 31, rs2 = in.rs2 & 31;
  switch (info.fmt) {
    case Format::R:
      return f7 << 25 | rs2 << 20 | rs1 << 15 | f3 << 12 | rd << 7 | opc;
    case Format::I: {
      if (in.op == Op::kSlli || in.op == Op::kSrli || in.op == Op::kSrai) {
        check_imm_range(in.imm, 0, 31, "shift");
        return f7 << 25 | static_cast<u32>(in.imm) << 20 | rs1 << 15 | f3 << 12 | rd << 7 | opc;
      }
      check_imm_range(in.imm, -2048, 2047, "I-type");
      return (static_cast<u32>(in.imm) & 0xFFF) << 20 | rs1 << 15 | f3 << 12 | rd << 7 | opc;
    }
    case Format::S: {
      check_imm_range(in.imm, -2048, 2047, "S-type");
      u32 imm = static_cast<u32>(in.imm) & 0xFFF;
      return (imm >> 5) << 25 | rs2 << 20 | rs1 << 15 | f3 << 12 | (imm & 31) << 7 | opc;
    }
    case Format::B: {
      check_imm_range(in.imm, -4096, 4094, "B-type");
      if (in.imm & 1) throw ToolError("branch offset must be even");
      u32 imm = static_cast<u32>(in.imm);
      u32 w = opc | f3 << 12 | rs1 << 15 | rs2 << 20;
      w |= ((imm >> 12) & 1) << 31;
      w |= ((imm >> 5) & 0x3F) << 25;
      w |= ((imm >> 1) & 0xF) << 8;
      w |= ((imm >> 11) & 1) << 7;
      return w;
    }
    case Format::U: {
      check_imm_range(in.imm, 0, 0xFFFFF, "U-type");
      return static_cast<u32>(in.imm) << 12 | rd << 7 | opc;
    }
    case Format::J: {
      check_imm_range(in.imm, -1048576, 1048574, "J-type");
      if (in.imm & 1) throw ToolError("jump offset must be even");
      u32 imm = static_cast<u32>(in.imm);
      u32 w = opc | rd << 7;
      w |= ((imm >> 20) & 1) << 31;
      w |= ((imm >> 1) & 0x3FF) << 21;
      w |= ((imm >> 11) & 1) << 20;
      w |= ((imm >> 12) & 0xFF) << 12;
      return w;
    }
    case Format::Sys:
      return opc;  // ecall: all immediate/register fields zero
    case Format::Ext:
      return rs1 << 15 | f3 << 12 | rd << 7 | opc;
  }
  throw ToolError("unreachable format");
}

// Extracts the B-type immediate bit scramble for a resolved offset, with all
// register/opcode fields zero. Used when patching runtime-generated jumps.
inline u32 encode_branch_imm_bits(i32 offset) {
  u32 imm = static_cast<u32>(offset);
  return ((imm >> 12) & 1) << 31 | ((imm >> 5) & 0x3F) << 25 | ((imm >> 1) & 0xF) << 8 |
         ((imm >> 11) & 1) << 7;
}

inline u32 encode_jal_imm_bits(i32 offset) {
  u32 imm = static_cast<u32>(offset);
  return ((imm >> 20) & 1) << 31 | ((imm >> 1) & 0x3FF) << 21 | ((imm >> 11) & 1) << 20 |
         ((imm >> 12) & 0xFF) << 12;
}

inline i32 sign_extend(u32 v, int bits) {
  u32 m = 1u << (bits - 1);
  return static_cast<i32>((v ^ m) - m);
}

// Decodes any word. Unknown encodings return Op::kIllegal, never throw:
// the simulator turns that into an architectural fault.
inline Instr decode(u32 w) {
  Instr in;
  u32 opc = w & 0x7F;
  u32 rd = (w >> 7) & 31, f3 = (w >> 12) & 7, rs1 = (w >> 15) & 31, rs2 = (w >> 20) & 31;
  u32 f7 = w >> 25;
  in.rd = static_cast<u8>(rd);
  in.rs1 = static_cast<u8>(rs1);
  in.rs2 = static_cast<u8>(rs2);

  auto find = [&](Format fmt, u32 funct3, u32 funct7, bool use_f7) -> Op {
    size_t n;
    const OpInfo* t = op_table(n);
    for (size_t i = 0; i < n; ++i) {
      if (t[i].opcode != opc || t[i].fmt != fmt) continue;
      if (t[i].funct3 != funct3) continue;
      if (use_f7 && t[i].funct7 != funct7) continue;
      return t[i].op;
    }
    return Op::kIllegal;
  };

  switch (opc) {
    case 0x33:
      in.op = find(Format::R, f3, f7, true);
      return in;
    case 0x13: {
      if (f3 == 1 || f3 == 5) {
        in.op = find(Format::I, f3, f7, true);
        if (in.op == Op::kIllegal) return in;
        in.imm = static_cast<i32>(rs2);  // shamt
        in.rs2 = 0;
        return in;
      }
      in.op = find(Format::I, f3, 0, false);
      in.imm = sign_extend(w >> 20, 12);
      in.rs2 = 0;
      return in;
    }
    case 0x03:
    case 0x67: {
      in.op = find(Format::I, f3, 0, false);
      in.imm = sign_extend(w >> 20, 12);
      in.rs2 = 0;
      return in;
    }
    case 0x23: {
      in.op = find(Format::S, f3, 0, false);
      in.imm = sign_extend((f7 << 5) | rd, 12);
      in.rd = 0;
      return in;
    }
    case 0x63: {
      in.op = find(Format::B, f3, 0, false);
      u32 imm = ((w >> 31) & 1) << 12 | ((w >> 25) & 0x3F) << 5 | ((w >> 8) & 0xF) << 1 |
                ((w >> 7) & 1) << 11;
      in.imm = sign_extend(imm, 13);
      in.rd = 0;
      return in;
    }
    case 0x37:
      in.op = Op::kLui;
      in.imm = static_cast<i32>(w >> 12);
      in.rs1 = in.rs2 = 0;
      return in;
    case 0x17:
      in.op = Op::kAuipc;
      in.imm = static_cast<i32>(w >> 12);
      in.rs1 = in.rs2 = 0;
      return in;
    case 0x6F: {
      in.op = Op::kJal;
      u32 imm = ((w >> 31) & 1) << 20 | ((w >> 21) & 0x3FF) << 1 | ((w >> 20) & 1) << 11 |
                ((w >> 12) & 0xFF) << 12;
      in.imm = sign_extend(imm, 21);
      in.rs1 = in.rs2 = 0;
      return in;
    }
    case 0x73:
      if (w == 0x73) {
        in.op = Op::kEcall;
        in.rd = in.rs1 = in.rs2 = 0;
        return in;
      }
      return in;
    case 0x0B: {
      if (f7 != 0) return in;
      in.op = find(Format::Ext, f3, 0, false);
      if (in.op == Op::kEnableDec || in.op == Op::kDisableDec) {
        if (rd != 0 || rs1 != 0 || rs2 != 0) {
          in.op = Op::kIllegal;
          return in;
        }
      }
      if (rs2 != 0) {
        in.op = Op::kIllegal;
        return in;
      }
      in.rs2 = 0;
      return in;
    }
    default:
      return in;
  }
}

inline const char* reg_name(u8 r) {
  static const char* kNames[32] = {
      "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1", "a0",
      "a1",   "a2", "a3", "a4", "a5", "a6", "a7", "s2", "s3", "s4", "s5",
      "s6",   "s7", "s8", "s9", "s10", "s11", "t3", "t4", "t5", "t6"};
  return kNames[r & 31];
}

inline std::optional<u8> reg_by_name(const std::string& s) {
  if (s.size() >= 2 && (s[0] == 'x' || s[0] == 'X')) {
    bool num = true;
    for (size_t i = 1; i < s.size(); ++i) num = num && s[i] >= '0' && s[i] <= '9';
    if (num) {
      int v = std::stoi(s.substr(1));
      if (v >= 0 && v < 32) return static_cast<u8>(v);
    }
  }
  for (u8 i = 0; i < 32; ++i)
    if (s == reg_name(i)) return i;
  if (s == "fp") return 8;
  return std::nullopt;
}

}  // namespace polysim
