// Copyright 2026 The polysim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "polysim/cfg.hpp"

namespace polysim {

// Register sets as bitmasks over x0..x31.
using RegMask = u32;

constexpr RegMask kArgRegs = 0x3FC00;                    // a0..a7 (x10..x17)
constexpr RegMask kTempRegs = 0xF00000E0 | (1u << 28) |  // t0..t2, t3..t6
                              (1u << 29) | (1u << 30) | (1u << 31);
constexpr RegMask kCallerSaved = kArgRegs | 0xF00000E0 | (1u << 1);
constexpr RegMask kCalleeSaved = (1u << 8) | (1u << 9) | 0x0FFC0000;  // s0..s11

constexpr RegMask reg_bit(u8 r) { return r < 32 ? (1u << r) : 0; }

// Registers read by an instruction (call/ret effects handled separately).
inline RegMask uses_of(const Instr& in) {
  RegMask m = 0;
  switch (format_of(in.op)) {
    case Format::R:
      m |= reg_bit(in.rs1) | reg_bit(in.rs2);
      break;
    case Format::I:
      if (in.op != Op::kLa) m |= reg_bit(in.rs1);
      break;
    case Format::S:
    case Format::B:
      m |= reg_bit(in.rs1) | reg_bit(in.rs2);
      break;
    case Format::U:
    case Format::J:
      break;
    case Format::Sys:
      m |= reg_bit(10);  // exit hypercall reads a0
      break;
    case Format::Ext:
      if (in.op == Op::kInitBB || in.op == Op::kEncWord) m |= reg_bit(in.rs1);
      break;
  }
  return m & ~1u;  // x0 is not a value
}

inline RegMask defs_of(const Instr& in) {
  RegMask m = 0;
  switch (format_of(in.op)) {
    case Format::R:
    case Format::U:
    case Format::J:
      m |= reg_bit(in.rd);
      break;
    case Format::I:
      m |= reg_bit(in.rd);
      break;
    case Format::S:
    case Format::B:
    case Format::Sys:
      break;
    case Format::Ext:
      if (in.op == Op::kInitBB || in.op == Op::kEncWord) m |= reg_bit(in.rd);
      break;
  }
  return m & ~1u;
}

// Conservative interprocedural effects for calls.
constexpr RegMask kCallUses = kArgRegs | (1u << 2);               // a-regs + sp
constexpr RegMask kCallDefs = kCallerSaved;                       // ra, a*, t*
// Registers an attacker-visible function must leave intact / return in.
constexpr RegMask kExitLive = (1u << 2) | (1u << 3) | (1u << 4) |  // sp, gp, tp
                              kCalleeSaved | reg_bit(10) | reg_bit(11);

// Backward may-liveness over a CFG: live_after[b][k] is the live set after
// instruction k of block b.
struct Liveness {
  std::vector<std::vector<RegMask>> live_after;
  std::vector<RegMask> live_in;
};

inline Liveness analyze_liveness(const Cfg& cfg) {
  size_t nb = cfg.blocks.size();
  Liveness lv;
  lv.live_after.resize(nb);
  lv.live_in.assign(nb, 0);
  for (size_t b = 0; b < nb; ++b) lv.live_after[b].resize(cfg.blocks[b].instrs.size(), 0);

  auto transfer = [&](size_t b) -> RegMask {
    const auto& ins = cfg.blocks[b].instrs;
    RegMask live = 0;
    bool exits = false;
    for (const auto& in : ins)
      if (is_ret(in) || in.op == Op::kEcall) exits = true;
    // live-out: union of successor live-ins, plus the ABI exit set when the
    // block can leave the function
    for (const auto& e : cfg.edges)
      if (e.src == b) live |= lv.live_in[e.dst];
    if (exits) live |= kExitLive;
    for (size_t k = ins.size(); k-- > 0;) {
      lv.live_after[b][k] = live;
      const Instr& in = ins[k];
      if (is_call(in)) {
        live = (live & ~kCallDefs) | kCallUses;
      } else if (is_ret(in)) {
        live = (live & ~defs_of(in)) | uses_of(in) | reg_bit(kRegRa);
      } else {
        live = (live & ~defs_of(in)) | uses_of(in);
      }
    }
    return live;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t b = nb; b-- > 0;) {
      RegMask in = transfer(b);
      if (in != lv.live_in[b]) {
        lv.live_in[b] = in;
        changed = true;
      }
    }
  }
  // final pass to refresh live_after with converged live_ins
  for (size_t b = 0; b < nb; ++b) transfer(b);
  return lv;
}

// ---------------------------------------------------------------------------
// Shuffle windows: maximal runs of consecutive single-word ALU instructions
// with no pairwise RAW/WAR/WAW register dependence. Memory accesses, control
// flow, the ISA extension ops, the exit hypercall and multi-word pseudos
// terminate windows and are never reordered.
// ---------------------------------------------------------------------------

inline bool window_barrier(const Instr& in) {
  return is_mem(in.op) || is_control_flow(in.op) || in.op == Op::kEcall ||
         format_of(in.op) == Format::Ext || in.size_words() != 1;
}

inline bool independent(const Instr& a, const Instr& b) {
  RegMask da = defs_of(a), db = defs_of(b);
  RegMask ua = uses_of(a), ub = uses_of(b);
  return !(da & db) && !(da & ub) && !(db & ua);
}

struct Window {
  size_t begin;  // instruction index range [begin, end)
  size_t end;
  size_t size() const { return end - begin; }
};

inline std::vector<Window> find_shuffle_windows(const std::vector<Instr>& instrs) {
  std::vector<Window> out;
  size_t i = 0;
  while (i < instrs.size()) {
    if (window_barrier(instrs[i])) {
      ++i;
      continue;
    }
    size_t j = i + 1;
    while (j < instrs.size() && !window_barrier(instrs[j])) {
      bool ok = true;
      for (size_t k = i; k < j && ok; ++k) ok = independent(instrs[k], instrs[j]);
      if (!ok) break;
      ++j;
    }
    if (j - i >= 2) out.push_back({i, j});
    i = j > i + 1 ? j : i + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Semantic variants: equivalent replacement sequences for the five shipped
// R-format families, each using one dead scratch register.
//   xor rd,a,b -> or t,a,b;  and rd,a,b; sub rd,t,rd     (x^y = (x|y)-(x&y))
//   add rd,a,b -> xor t,a,b; and rd,a,b; slli rd,rd,1; add rd,rd,t
//   sub rd,a,b -> sub t,zero,b; add rd,a,t
//   or  rd,a,b -> and t,a,b; xor rd,a,b; add rd,rd,t     (x|y = (x^y)+(x&y))
//   and rd,a,b -> or t,a,b;  xor rd,a,b; sub rd,rd? see below
// Returns the original instruction when no scratch register is available.
// ---------------------------------------------------------------------------

inline std::vector<Instr> pick_variant(const Instr& in, RegMask dead) {
  auto original = [&] { return std::vector<Instr>{in}; };
  if (format_of(in.op) != Format::R) return original();
  // scratch: lowest dead register outside the operands (and never x0/sp/ra/gp/tp)
  RegMask banned = reg_bit(in.rd) | reg_bit(in.rs1) | reg_bit(in.rs2) | 0x1F;
  RegMask avail = dead & ~banned;
  if (!avail) return original();
  u8 t = static_cast<u8>(__builtin_ctz(avail));
  u8 rd = in.rd, a = in.rs1, b = in.rs2;
  switch (in.op) {
    case Op::kXor:
      return {{Op::kOr, t, a, b, 0, "", in.line},
              {Op::kAnd, rd, a, b, 0, "", in.line},
              {Op::kSub, rd, t, rd, 0, "", in.line}};
    case Op::kAdd:
      return {{Op::kXor, t, a, b, 0, "", in.line},
              {Op::kAnd, rd, a, b, 0, "", in.line},
              {Op::kSlli, rd, rd, 0, 1, "", in.line},
              {Op::kAdd, rd, rd, t, 0, "", in.line}};
    case Op::kSub:
      return {{Op::kSub, t, 0, b, 0, "", in.line},
              {Op::kAdd, rd, a, t, 0, "", in.line}};
    case Op::kOr:
      return {{Op::kAnd, t, a, b, 0, "", in.line},
              {Op::kXor, rd, a, b, 0, "", in.line},
              {Op::kAdd, rd, rd, t, 0, "", in.line}};
    case Op::kAnd:
      return {{Op::kOr, t, a, b, 0, "", in.line},
              {Op::kXor, rd, a, b, 0, "", in.line},
              {Op::kSub, rd, t, rd, 0, "", in.line}};
    default:
      return original();
  }
}

}  // namespace polysim
