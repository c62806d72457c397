// Copyright 2026 The polysim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "polysim/cipher.hpp"
#include "polysim/image.hpp"
#include "polysim/liveness.hpp"

namespace polysim {

// ---------------------------------------------------------------------------
// Runtime code generation (polymorphism).
//
// A `poly`-attributed function F is replaced at tool time by:
//   * a wrapper with F's name and ABI that regenerates the code on a
//     countdown and dispatches into the instance buffer,
//   * a specialised generator SGPC_F that writes a fresh, randomised
//     (optionally encrypted) instance of F into the buffer,
//   * a data function F_pdata holding the regeneration counter, the instance
//     buffer, the template pool and the allocatable-register list.
//
// Generator RNG draw order (frozen contract, mirrored bit-exactly by
// host_reference_generate and the acceptance differential tests):
//   1. register permutation: Fisher-Yates over the allocatable list,
//      len-1 draws, j = draw % (i+1) for i = len-1 .. 1  (only when the
//      register-shuffle transform is enabled)
//   2. per block, in plan order:
//      a. 3 IV words via initbb (only when the instance is encrypted and the
//         block is not a plaintext island)
//      b. per action in plan order:
//         - noise site: 1 coin draw; when (coin & (2^p - 1)) == 0, 1 burst
//           draw, burst = 2^(1 + draw % Nmax) noise words
//         - shuffle window of size W: W-1 Fisher-Yates draws over the index
//           table, then members are emitted in table order
//         - plain emissions and control-flow fixups: no draws
// Any change here is a breaking format change.
// ---------------------------------------------------------------------------

struct PolyConfig {
  u32 p = 3;
  u32 nmax = 5;
  u32 regen_period = 1;
  bool t_variants = false;
  bool t_shuffle_instr = false;
  bool t_shuffle_regs = false;
  bool t_noise = false;
  bool encrypt_instance = false;
  bool encrypt_wrapper = false;
  bool encrypt_sgpc = false;
  bool noise_dead_alu = false;  // default: nop-only noise
  u32 buffer_words = 0;         // 0: sized to the worst case
  u64 variant_seed = 1;
  bool trace_instance = true;
  std::vector<u8> alloc_regs;   // empty: t0..t6 plus dead-in argument regs

  void validate() const {
    if (p > 30) throw ToolError("noise probability exponent too large");
    if (nmax < 1 || nmax > 20) throw ToolError("noise burst exponent out of range");
    if (regen_period < 1) throw ToolError("regeneration period must be >= 1");
    for (u8 r : alloc_regs)
      if (r < 5 || r > 31)
        throw ToolError("allocatable set may not contain x0/ra/sp/gp/tp");
  }
};

// Shared noise decision: the number of words a site emits (0 = not firing).
inline u32 noise_site_count(Xorshift32& rng, u32 p, u32 nmax) {
  u32 coin = rng.next();
  if ((coin & ((1u << p) - 1)) != 0) return 0;
  u32 n = 1 + rng.next() % nmax;
  return 1u << n;
}

inline void fisher_yates(Xorshift32& rng, u8* arr, u32 len) {
  for (u32 i = len - 1; i >= 1; --i) {
    u32 j = rng.next() % (i + 1);
    std::swap(arr[i], arr[j]);
  }
}

// ---------------------------------------------------------------------------
// Generation plan
// ---------------------------------------------------------------------------

struct RoleField {
  bool present = false;
  u8 reg = 0;  // original register, looked up through the permutation map
};

// One emitted instruction (1 word, or 2 for la).
struct PlanEmit {
  Instr instr;  // permutable register fields are significant via roles below
  RoleField rd, rs1, rs2;
};

enum class PActKind { kEmit, kWindow, kNoise, kCfBlock, kCfExternal };

struct PlanAction {
  PActKind kind = PActKind::kEmit;
  std::vector<PlanEmit> emits;  // kEmit: one; kWindow: members (1 word each)
  PlanEmit noise;               // kNoise: the site's noise instruction
  u32 target_block = 0;         // kCfBlock
  bool forward = false;         // kCfBlock: target not yet emitted
  std::string callee;           // kCfExternal
};

struct PlanBlock {
  bool island = false;  // plaintext island: no IV, plain emission
  std::vector<PlanAction> actions;
};

struct GenPlan {
  std::string fn_name;
  std::vector<PlanBlock> blocks;
  std::vector<u8> alloc_list;
  u32 worst_words = 0;
  u32 n_fixups = 0;  // upper bound (= forward CF count)
  u32 pool_entries = 0;
};

namespace polydetail {

inline bool permutable(u8 reg, const GenPlan& plan, const PolyConfig& cfg) {
  if (!cfg.t_shuffle_regs) return false;
  for (u8 r : plan.alloc_list)
    if (r == reg) return true;
  return false;
}

// Derives the template roles of an instruction: which register fields are
// looked up through the map at generation time.
inline PlanEmit make_emit(const Instr& in, const GenPlan& plan, const PolyConfig& cfg) {
  PlanEmit e;
  e.instr = in;
  Format f = in.op == Op::kLa ? Format::U : format_of(in.op);
  auto role = [&](u8 reg) {
    return RoleField{permutable(reg, plan, cfg), reg};
  };
  switch (f) {
    case Format::R:
      e.rd = role(in.rd);
      e.rs1 = role(in.rs1);
      e.rs2 = role(in.rs2);
      break;
    case Format::I:
      e.rd = role(in.rd);
      e.rs1 = role(in.rs1);
      break;
    case Format::S:
    case Format::B:
      e.rs1 = role(in.rs1);
      e.rs2 = role(in.rs2);
      break;
    case Format::U:
    case Format::J:
      e.rd = role(in.rd);
      break;
    case Format::Sys:
      break;
    case Format::Ext:
      // enable/disable toggles appear via call bracketing; the generator
      // instructions themselves cannot occur inside a protected function
      if (in.op != Op::kEnableDec && in.op != Op::kDisableDec)
        throw ToolError(plan.fn_name + ": generator instruction inside a poly function");
      break;
  }
  return e;
}

// Template words with permutable fields zeroed and control-flow immediates
// cleared; `la` yields two words derived from the resolved symbol address.
inline std::vector<u32> template_words(const PlanEmit& e, const Image* img) {
  Instr t = e.instr;
  if (e.rd.present) t.rd = 0;
  if (e.rs1.present) t.rs1 = 0;
  if (e.rs2.present) t.rs2 = 0;
  if (t.op == Op::kLa) {
    if (!img) throw ToolError("la template needs a resolved image");
    u32 target = img->symbol(t.target);
    u32 hi = (target + 0x800) >> 12;
    i32 lo = static_cast<i32>(target - (hi << 12));
    Instr lui{Op::kLui, t.rd, 0, 0, static_cast<i32>(hi & 0xFFFFF), "", 0};
    Instr addi{Op::kAddi, t.rd, t.rd, 0, lo, "", 0};
    return {encode(lui), encode(addi)};
  }
  if (is_control_flow(t.op) && !t.target.empty()) {
    t.imm = 0;
    t.target.clear();
  }
  return {encode(t)};
}

// Packed role descriptor for pool entries (guest window emission):
//   bits 0-4 rd, 5 has_rd, 8-12 rs1, 13 has_rs1, 16-20 rs2, 21 has_rs2
inline u32 role_desc(const RoleField& rd, const RoleField& rs1, const RoleField& rs2) {
  u32 d = 0;
  if (rd.present) d |= rd.reg | 1u << 5;
  if (rs1.present) d |= rs1.reg << 8 | 1u << 13;
  if (rs2.present) d |= rs2.reg << 16 | 1u << 21;
  return d;
}

// descriptor for the second word of `la` (rd and rs1 are the same register)
inline u32 role_desc_la2(const RoleField& rd) {
  u32 d = 0;
  if (rd.present) d |= rd.reg | 1u << 5 | rd.reg << 8 | 1u << 13;
  return d;
}

}  // namespace polydetail

// Default allocatable set: the temporaries plus any argument registers that
// are dead on entry. Callee-saved registers stay out (they are live by the
// exit-set convention anyway); a0/a1 stay out as potential return registers.
inline std::vector<u8> default_alloc_regs(const Cfg& cfg) {
  auto lv = analyze_liveness(cfg);
  std::vector<u8> out;
  for (u8 r : {5, 6, 7, 28, 29, 30, 31}) out.push_back(static_cast<u8>(r));  // t0..t6
  for (u8 r = 12; r <= 17; ++r)                                              // a2..a7
    if (!(lv.live_in[0] & reg_bit(r))) out.push_back(r);
  return out;
}

// Builds the generation plan from a poly function. The CFG is prepared the
// same way static encryption prepares it (merge, explicit jumps, bracketed
// calls) except that IV slots become runtime initbb sites.
inline GenPlan build_plan(const Function& fn,
                          const std::map<std::string, bool>& callee_encrypted,
                          const PolyConfig& cfg) {
  cfg.validate();
  for (const auto& it : fn.items)
    if (it.kind == ItemKind::kInstr) {
      const Instr& in = it.instr;
      if (in.op == Op::kAuipc)
        throw ToolError(fn.name + ": auipc is not relocatable into an instance buffer");
      if (in.op == Op::kJalr && in.rd == kRegRa)
        throw ToolError(fn.name + ": indirect calls are not supported in poly functions");
    }

  Cfg body = build_cfg(fn);
  body.encrypt = cfg.encrypt_instance;
  check_encrypted_cf(body);
  merge_blocks(body);
  materialize_fallthroughs(body);
  bracket_calls(body, callee_encrypted);

  GenPlan plan;
  plan.fn_name = fn.name;
  plan.alloc_list = cfg.alloc_regs.empty() ? default_alloc_regs(body) : cfg.alloc_regs;

  // variants first (they change the instruction lists), then liveness for
  // noise masks, then windows
  if (cfg.t_variants) {
    Xorshift32 vrng(fold_seed(cfg.variant_seed));
    auto lv = analyze_liveness(body);
    RegMask alloc_mask = 0;
    for (u8 r : plan.alloc_list) alloc_mask |= reg_bit(r);
    for (size_t b = 0; b < body.blocks.size(); ++b) {
      if (body.blocks[b].force_plain) continue;
      std::vector<Instr> expanded;
      for (size_t k = 0; k < body.blocks[b].instrs.size(); ++k) {
        const Instr& in = body.blocks[b].instrs[k];
        bool eligible = format_of(in.op) == Format::R &&
                        (in.op == Op::kAdd || in.op == Op::kSub || in.op == Op::kXor ||
                         in.op == Op::kOr || in.op == Op::kAnd);
        if (eligible && (vrng.next() & 1)) {
          RegMask dead = alloc_mask & ~lv.live_after[b][k];
          auto seq = pick_variant(in, dead);
          expanded.insert(expanded.end(), seq.begin(), seq.end());
        } else {
          expanded.push_back(in);
        }
      }
      body.blocks[b].instrs = std::move(expanded);
    }
    body.rebuild_edges();
  }

  auto lv = analyze_liveness(body);
  RegMask alloc_mask = 0;
  for (u8 r : plan.alloc_list) alloc_mask |= reg_bit(r);

  u32 fixups = 0;
  for (size_t b = 0; b < body.blocks.size(); ++b) {
    const CfgBlock& blk = body.blocks[b];
    PlanBlock pb;
    pb.island = blk.force_plain;

    // group instructions into actions
    std::vector<PlanAction> acts;
    auto windows = (cfg.t_shuffle_instr && !pb.island)
                       ? find_shuffle_windows(blk.instrs)
                       : std::vector<Window>{};
    size_t wi = 0;
    for (size_t k = 0; k < blk.instrs.size();) {
      if (wi < windows.size() && windows[wi].begin == k) {
        PlanAction a;
        a.kind = PActKind::kWindow;
        for (size_t m = windows[wi].begin; m < windows[wi].end; ++m)
          a.emits.push_back(polydetail::make_emit(blk.instrs[m], plan, cfg));
        k = windows[wi].end;
        ++wi;
        acts.push_back(std::move(a));
        continue;
      }
      const Instr& in = blk.instrs[k];
      PlanAction a;
      if (is_branch(in.op) || (in.op == Op::kJal && in.rd == kRegZero)) {
        size_t target = body.block_by_label(in.target);
        a.kind = PActKind::kCfBlock;
        a.target_block = static_cast<u32>(target);
        a.forward = target > b;
        a.emits.push_back(polydetail::make_emit(in, plan, cfg));
        if (a.forward) ++fixups;
      } else if (is_call(in) && in.op == Op::kJal) {
        a.kind = PActKind::kCfExternal;
        a.callee = in.target;
        a.emits.push_back(polydetail::make_emit(in, plan, cfg));
      } else {
        a.kind = PActKind::kEmit;
        a.emits.push_back(polydetail::make_emit(in, plan, cfg));
      }
      acts.push_back(std::move(a));
      ++k;
    }

    // interleave noise sites between functional actions (not in islands)
    if (cfg.t_noise && !pb.island) {
      // map action end positions back to instruction indices for dead masks
      std::vector<PlanAction> with_noise;
      size_t instr_idx = 0;
      for (size_t ai = 0; ai < acts.size(); ++ai) {
        size_t len = acts[ai].kind == PActKind::kWindow ? acts[ai].emits.size() : 1;
        instr_idx += len;
        with_noise.push_back(std::move(acts[ai]));
        if (ai + 1 == acts.size()) break;  // no site after the terminator
        PlanAction site;
        site.kind = PActKind::kNoise;
        RegMask dead = alloc_mask & ~lv.live_after[b][instr_idx - 1];
        Instr nop{Op::kAddi, 0, 0, 0, 0, "", 0};
        if (cfg.noise_dead_alu && dead) {
          u8 r = static_cast<u8>(__builtin_ctz(dead));
          Instr alu{Op::kAddi, r, r, 0, 1, "", 0};
          site.noise = polydetail::make_emit(alu, plan, cfg);
        } else {
          site.noise = polydetail::make_emit(nop, plan, cfg);
        }
        with_noise.push_back(std::move(site));
      }
      acts = std::move(with_noise);
    }

    pb.actions = std::move(acts);
    plan.blocks.push_back(std::move(pb));
  }

  plan.n_fixups = fixups;
  if (plan.blocks.size() > 64)
    throw ToolError(fn.name + ": too many basic blocks for the generator scratch tables");
  if (fixups > 64) throw ToolError(fn.name + ": too many forward jumps for the fixup table");

  // worst case size and pool accounting
  u32 words = 0, pool = 0;
  for (const auto& pb : plan.blocks) {
    if (cfg.encrypt_instance && !pb.island) words += 3;
    for (const auto& a : pb.actions) {
      switch (a.kind) {
        case PActKind::kNoise:
          words += 1u << cfg.nmax;
          break;
        case PActKind::kEmit:
        case PActKind::kCfBlock:
        case PActKind::kCfExternal:
        case PActKind::kWindow:
          for (const auto& e : a.emits) {
            words += e.instr.size_words();
            pool += e.instr.size_words();
          }
          break;
      }
    }
  }
  plan.worst_words = words;
  plan.pool_entries = pool;
  if (cfg.buffer_words && plan.worst_words > cfg.buffer_words)
    throw ToolError(fn.name + ": worst-case instance (" + std::to_string(plan.worst_words) +
                    " words) exceeds the configured buffer of " +
                    std::to_string(cfg.buffer_words) + " words");
  return plan;
}

// ---------------------------------------------------------------------------
// Host-side reference generator: consumes the same RNG stream in the
// documented order and produces the exact bytes the guest SGPC would write.
// ---------------------------------------------------------------------------

inline std::vector<u32> host_reference_generate(const GenPlan& plan, const Image& img,
                                                const PolyConfig& cfg, const Key& key,
                                                const CipherConfig& ccfg, Xorshift32& rng) {
  u32 base = img.symbol(plan.fn_name + "_buf");

  std::array<u8, 32> map;
  for (int i = 0; i < 32; ++i) map[i] = static_cast<u8>(i);
  if (cfg.t_shuffle_regs && plan.alloc_list.size() > 1) {
    std::vector<u8> shuffled = plan.alloc_list;
    fisher_yates(rng, shuffled.data(), static_cast<u32>(shuffled.size()));
    for (size_t i = 0; i < plan.alloc_list.size(); ++i)
      map[plan.alloc_list[i]] = shuffled[i];
  }

  std::vector<u32> out;
  CipherState exec;
  bool exec_ready = false;
  std::vector<u32> blockaddr(plan.blocks.size(), 0);
  struct Fix {
    u32 addr;
    u32 target;
    bool branch;
    u32 tpl;
  };
  std::vector<Fix> fixes;

  auto cursor = [&] { return base + 4 * static_cast<u32>(out.size()); };
  auto emit = [&](u32 word, bool encrypted) {
    if (encrypted) {
      if (!exec_ready) throw ToolError("emission before block initialisation");
      word = cipher_encrypt_word(exec, word);
    }
    out.push_back(word);
  };

  // applies the register map to a template word
  auto mapped_word = [&](const PlanEmit& e, u32 tpl, bool second_la_word) -> u32 {
    u32 w = tpl;
    if (second_la_word) {
      if (e.rd.present) w |= map[e.rd.reg] << 7 | map[e.rd.reg] << 15;
      return w;
    }
    if (e.rd.present) w |= map[e.rd.reg] << 7;
    if (e.rs1.present) w |= map[e.rs1.reg] << 15;
    if (e.rs2.present) w |= map[e.rs2.reg] << 20;
    return w;
  };

  auto emit_plan_emit = [&](const PlanEmit& e, bool encrypted) {
    auto tpls = polydetail::template_words(e, &img);
    for (size_t i = 0; i < tpls.size(); ++i)
      emit(mapped_word(e, tpls[i], i == 1 && e.instr.op == Op::kLa), encrypted);
  };

  for (size_t b = 0; b < plan.blocks.size(); ++b) {
    const PlanBlock& pb = plan.blocks[b];
    bool enc = cfg.encrypt_instance && !pb.island;
    blockaddr[b] = cursor();
    if (enc) {
      auto words = draw_iv_slot_words(rng);
      for (u32 w : words) out.push_back(w);
      exec = cipher_init(ccfg, key, Iv::from_slot_words(words));
      exec_ready = true;
    }
    for (const auto& a : pb.actions) {
      switch (a.kind) {
        case PActKind::kEmit:
          emit_plan_emit(a.emits[0], enc);
          break;
        case PActKind::kNoise: {
          u32 count = noise_site_count(rng, cfg.p, cfg.nmax);
          if (!count) break;
          u32 word =
              mapped_word(a.noise, polydetail::template_words(a.noise, &img)[0], false);
          for (u32 i = 0; i < count; ++i) emit(word, enc);
          break;
        }
        case PActKind::kWindow: {
          std::vector<u8> idx(a.emits.size());
          for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<u8>(i);
          fisher_yates(rng, idx.data(), static_cast<u32>(idx.size()));
          for (u8 i : idx) emit_plan_emit(a.emits[i], enc);
          break;
        }
        case PActKind::kCfBlock: {
          const PlanEmit& e = a.emits[0];
          u32 tpl = mapped_word(e, polydetail::template_words(e, &img)[0], false);
          bool branch = is_branch(e.instr.op);
          if (!a.forward) {
            i32 off = static_cast<i32>(blockaddr[a.target_block] - cursor());
            u32 bits = branch ? encode_branch_imm_bits(off) : encode_jal_imm_bits(off);
            emit(tpl | bits, enc);
          } else {
            fixes.push_back({cursor(), a.target_block, branch, tpl});
            emit(0, enc);  // encrypted zero placeholder, patched by CDGEND
          }
          break;
        }
        case PActKind::kCfExternal: {
          const PlanEmit& e = a.emits[0];
          u32 tpl = mapped_word(e, polydetail::template_words(e, &img)[0], false);
          i32 off = static_cast<i32>(img.symbol(a.callee) - cursor());
          emit(tpl | encode_jal_imm_bits(off), enc);
          break;
        }
      }
    }
  }

  // CDGEND: patch forward jumps through the ciphertext (XOR with the resolved
  // encoding; placeholders encrypt the all-zero word)
  for (const auto& f : fixes) {
    i32 off = static_cast<i32>(blockaddr[f.target] - f.addr);
    u32 bits = f.branch ? encode_branch_imm_bits(off) : encode_jal_imm_bits(off);
    out[(f.addr - base) / 4] ^= f.tpl | bits;
  }
  return out;
}

}  // namespace polysim
