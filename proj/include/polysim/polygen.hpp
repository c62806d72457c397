// Copyright 2026 The polysim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "polysim/poly.hpp"

namespace polysim {

// ---------------------------------------------------------------------------
// Guest-side generator emission: lowers a GenPlan to assembly.
//
// SGPC register conventions (callee-saved, preserved by the runtime helpers):
//   s0 cursor   s1 pool pointer   s2 &rt_map   s3 &rt_blockaddrs
//   s4 &rt_fixups   s5 fixup count   s6 scratch template across calls
// Runtime helpers used: rt_fy_shuffle, rt_gennoise[_enc], rt_emit_pooled[_enc],
// rt_encode_jal_off, rt_encode_branch_off, rt_cdgend (see corpus/runtime.s).
// ---------------------------------------------------------------------------

namespace polydetail {

class SgpcEmitter {
 public:
  SgpcEmitter(const GenPlan& plan, const PolyConfig& cfg)
      : plan_(plan), cfg_(cfg), fn_(plan.fn_name) {}

  // in-SGPC label allocator
  std::string lab(const char* tag) {
    return ".L" + fn_ + "_g" + tag + std::to_string(labels_++);
  }

  void ins(const std::string& text) {
    auto prog = parse_program(".func x\n  " + text + "\n.endfunc\n");
    for (auto& it : prog.functions[0].items) items_.push_back(it);
  }
  void raw(Instr in) { items_.push_back(Item::make_instr(in)); }
  void label(const std::string& l) { items_.push_back(Item::make_label(l)); }

  // one emitted instance word: template at `off(s1)`, role fields OR-ed in
  void emit_word(u32 pool_off, const std::vector<std::pair<u8, int>>& roles, bool enc) {
    ins("lw t0, " + std::to_string(pool_off) + "(s1)");
    for (auto [reg, shift] : roles) {
      ins("lbu t1, " + std::to_string(reg) + "(s2)");
      ins("slli t1, t1, " + std::to_string(shift));
      ins("or t0, t0, t1");
    }
    if (enc) ins("enc_word t0, t0");
    ins("sw t0, 0(s0)");
    ins("addi s0, s0, 4");
  }

  std::vector<std::pair<u8, int>> word_roles(const PlanEmit& e, size_t word_idx) {
    std::vector<std::pair<u8, int>> roles;
    if (e.instr.op == Op::kLa) {
      if (e.rd.present) {
        roles.push_back({e.rd.reg, 7});
        if (word_idx == 1) roles.push_back({e.rd.reg, 15});
      }
      return roles;
    }
    if (e.rd.present) roles.push_back({e.rd.reg, 7});
    if (e.rs1.present) roles.push_back({e.rs1.reg, 15});
    if (e.rs2.present) roles.push_back({e.rs2.reg, 20});
    return roles;
  }

  void emit_inline(const PlanEmit& e, bool enc) {
    u32 words = e.instr.size_words();
    for (u32 w = 0; w < words; ++w) emit_word(w * 4, word_roles(e, w), enc);
    ins("addi s1, s1, " + std::to_string(words * 4));
    pool_emit_plain(e);
  }

  // loads the template into s6 and advances the pool (CF emissions)
  void load_template_s6(const PlanEmit& e) {
    ins("lw s6, 0(s1)");
    for (auto [reg, shift] : word_roles(e, 0)) {
      ins("lbu t1, " + std::to_string(reg) + "(s2)");
      ins("slli t1, t1, " + std::to_string(shift));
      ins("or s6, s6, t1");
    }
    ins("addi s1, s1, 4");
    pool_emit_plain(e);
  }

  void finish_cf_word(bool enc) {
    ins("or a0, a0, s6");
    if (enc)
      ins("enc_word a0, a0");
    ins("sw a0, 0(s0)");
    ins("addi s0, s0, 4");
  }

  void action_cf_block(const PlanAction& a, bool enc) {
    const PlanEmit& e = a.emits[0];
    bool branch = is_branch(e.instr.op);
    load_template_s6(e);
    if (!a.forward) {
      ins("lw t1, " + std::to_string(a.target_block * 4) + "(s3)");
      ins("sub a0, t1, s0");
      ins("call " + std::string(branch ? "rt_encode_branch_off" : "rt_encode_jal_off"));
      finish_cf_word(enc);
    } else {
      // record fixup {addr, target block, kind, template}; emit placeholder
      ins("slli t1, s5, 4");
      ins("add t1, t1, s4");
      ins("sw s0, 0(t1)");
      ins("li t2, " + std::to_string(a.target_block));
      ins("sw t2, 4(t1)");
      ins("li t2, " + std::to_string(branch ? 1 : 0));
      ins("sw t2, 8(t1)");
      ins("sw s6, 12(t1)");
      ins("addi s5, s5, 1");
      if (enc)
        ins("enc_word t0, zero");
      else
        ins("li t0, 0");
      ins("sw t0, 0(s0)");
      ins("addi s0, s0, 4");
    }
  }

  void action_cf_external(const PlanAction& a, bool enc) {
    load_template_s6(a.emits[0]);
    ins("la t1, " + a.callee);
    ins("sub a0, t1, s0");
    ins("call rt_encode_jal_off");
    finish_cf_word(enc);
  }

  void action_noise(const PlanAction& a, bool enc) {
    u32 tpl = template_words(a.noise, nullptr)[0];
    ins("li a1, " + std::to_string(static_cast<i64>(tpl)));
    for (auto [reg, shift] : word_roles(a.noise, 0)) {
      ins("lbu t1, " + std::to_string(reg) + "(s2)");
      ins("slli t1, t1, " + std::to_string(shift));
      ins("or a1, a1, t1");
    }
    ins("mv a0, s0");
    ins(enc ? "call rt_gennoise_enc" : "call rt_gennoise");
    ins("mv s0, a0");
  }

  void action_window(const PlanAction& a, bool enc) {
    u32 w = static_cast<u32>(a.emits.size());
    std::string li = lab("wi"), le = lab("we");
    // identity index table
    ins("la t1, rt_idx");
    ins("li t2, 0");
    label(li);
    ins("add t3, t1, t2");
    ins("sb t2, 0(t3)");
    ins("addi t2, t2, 1");
    ins("li t3, " + std::to_string(w));
    ins("blt t2, t3, " + li);
    // shuffle the table
    ins("la a0, rt_idx");
    ins("li a1, " + std::to_string(w));
    ins("call rt_fy_shuffle");
    // emit members in table order
    ins("li s6, 0");
    label(le);
    ins("la t1, rt_idx");
    ins("add t1, t1, s6");
    ins("lbu t1, 0(t1)");
    ins("slli t1, t1, 3");
    ins("add a1, s1, t1");
    ins("mv a0, s0");
    ins(enc ? "call rt_emit_pooled_enc" : "call rt_emit_pooled");
    ins("mv s0, a0");
    ins("addi s6, s6, 1");
    ins("li t1, " + std::to_string(w));
    ins("blt s6, t1, " + le);
    ins("addi s1, s1, " + std::to_string(w * 8));
    for (const auto& e : a.emits) pool_emit_paired(e);
  }

  // pool data accumulation (templates with permutable fields zeroed)
  void pool_emit_plain(const PlanEmit& e) {
    Instr t = e.instr;
    if (e.rd.present) t.rd = 0;
    if (e.rs1.present) t.rs1 = 0;
    if (e.rs2.present) t.rs2 = 0;
    if (is_control_flow(t.op) && !t.target.empty() && t.op != Op::kLa) {
      t.imm = 0;
      t.target.clear();
    }
    Item it;
    it.kind = ItemKind::kInsnWord;
    it.instr = t;
    pool_.push_back(it);
  }
  void pool_emit_paired(const PlanEmit& e) {
    pool_emit_plain(e);
    Item desc;
    desc.kind = ItemKind::kWord;
    desc.value = role_desc(e.rd, e.rs1, e.rs2);
    pool_.push_back(desc);
  }

  Function build_sgpc() {
    Function fn;
    fn.name = "SGPC_" + fn_;
    fn.encrypt = cfg_.encrypt_sgpc;

    ins("addi sp, sp, -48");
    ins("sw ra, 44(sp)");
    for (int i = 0; i < 7; ++i)
      ins("sw s" + std::to_string(i) + ", " + std::to_string(4 * i) + "(sp)");

    if (cfg_.t_noise) {
      ins("la t0, rt_noise_p");
      ins("li t1, " + std::to_string(cfg_.p));
      ins("sw t1, 0(t0)");
      ins("la t0, rt_noise_nmax");
      ins("li t1, " + std::to_string(cfg_.nmax));
      ins("sw t1, 0(t0)");
    }

    u32 na = static_cast<u32>(plan_.alloc_list.size());
    if (cfg_.t_shuffle_regs && na >= 2) {
      std::string lm = lab("mi"), lc = lab("mc"), la_ = lab("ma");
      ins("la t0, rt_map");
      ins("li t1, 0");
      label(lm);
      ins("add t2, t0, t1");
      ins("sb t1, 0(t2)");
      ins("addi t1, t1, 1");
      ins("li t2, 32");
      ins("blt t1, t2, " + lm);
      // copy the allocatable list into the scratch table and shuffle it
      ins("la t0, rt_idx");
      ins("la t1, " + fn_ + "_alloc");
      ins("li t2, 0");
      label(lc);
      ins("add t3, t1, t2");
      ins("lbu t4, 0(t3)");
      ins("add t3, t0, t2");
      ins("sb t4, 0(t3)");
      ins("addi t2, t2, 1");
      ins("li t3, " + std::to_string(na));
      ins("blt t2, t3, " + lc);
      ins("la a0, rt_idx");
      ins("li a1, " + std::to_string(na));
      ins("call rt_fy_shuffle");
      // map[alloc[i]] = shuffled[i]
      ins("la t0, rt_idx");
      ins("la t1, " + fn_ + "_alloc");
      ins("la t2, rt_map");
      ins("li t3, 0");
      label(la_);
      ins("add t4, t1, t3");
      ins("lbu t5, 0(t4)");
      ins("add t4, t0, t3");
      ins("lbu t6, 0(t4)");
      ins("add t4, t2, t5");
      ins("sb t6, 0(t4)");
      ins("addi t3, t3, 1");
      ins("li t4, " + std::to_string(na));
      ins("blt t3, t4, " + la_);
    }

    ins("la s0, " + fn_ + "_buf");
    ins("la s1, " + fn_ + "_pool");
    ins("la s2, rt_map");
    ins("la s3, rt_blockaddrs");
    ins("la s4, rt_fixups");
    ins("li s5, 0");

    for (size_t b = 0; b < plan_.blocks.size(); ++b) {
      const PlanBlock& pb = plan_.blocks[b];
      bool enc = cfg_.encrypt_instance && !pb.island;
      ins("sw s0, " + std::to_string(4 * b) + "(s3)");
      if (enc) ins("initbb s0, s0");
      for (const auto& a : pb.actions) {
        switch (a.kind) {
          case PActKind::kEmit:
            emit_inline(a.emits[0], enc);
            break;
          case PActKind::kNoise:
            action_noise(a, enc);
            break;
          case PActKind::kWindow:
            action_window(a, enc);
            break;
          case PActKind::kCfBlock:
            action_cf_block(a, enc);
            break;
          case PActKind::kCfExternal:
            action_cf_external(a, enc);
            break;
        }
      }
    }

    // CDGEND: publish the fixup count and patch all forward jumps
    ins("la t0, rt_fixn");
    ins("sw s5, 0(t0)");
    ins("call rt_cdgend");
    ins("la t0, rt_gen_end");
    ins("sw s0, 0(t0)");

    ins("lw ra, 44(sp)");
    for (int i = 0; i < 7; ++i)
      ins("lw s" + std::to_string(i) + ", " + std::to_string(4 * i) + "(sp)");
    ins("addi sp, sp, 48");
    ins("ret");

    fn.items = std::move(items_);
    return fn;
  }

  std::vector<Item> take_pool() { return std::move(pool_); }

 private:
  const GenPlan& plan_;
  const PolyConfig& cfg_;
  std::string fn_;
  std::vector<Item> items_;
  std::vector<Item> pool_;
  int labels_ = 0;
};

inline Function build_wrapper(const std::string& fn_name, const PolyConfig& cfg) {
  Function w;
  w.name = fn_name;
  w.encrypt = cfg.encrypt_wrapper;
  std::vector<std::string> body;
  auto I = [&](const std::string& s) { body.push_back("  " + s); };
  I("addi sp, sp, -48");
  I("sw ra, 44(sp)");
  for (int i = 0; i < 8; ++i)
    I("sw a" + std::to_string(i) + ", " + std::to_string(4 * i) + "(sp)");
  if (cfg.trace_instance) {
    I("li t2, " + std::to_string(kMmioTraceCtl));
    I("sw zero, 0(t2)");  // suppress capture during regeneration
  }
  I("la t0, " + fn_name + "_regen_ctr");
  I("lw t1, 0(t0)");
  I("bnez t1, " + fn_name + "_haveinst");
  I("call SGPC_" + fn_name);
  I("la t0, " + fn_name + "_regen_ctr");
  I("li t1, " + std::to_string(cfg.regen_period));
  body.push_back(fn_name + "_haveinst:");
  I("addi t1, t1, -1");
  I("sw t1, 0(t0)");
  for (int i = 0; i < 8; ++i)
    I("lw a" + std::to_string(i) + ", " + std::to_string(4 * i) + "(sp)");
  if (cfg.trace_instance) {
    I("li t2, " + std::to_string(kMmioTraceCtl));
    I("li t3, 1");
    I("sw t3, 0(t2)");
  }
  I("la t0, " + fn_name + "_buf");
  I("jalr ra, t0, 0");
  if (cfg.trace_instance) {
    I("li t2, " + std::to_string(kMmioTraceCtl));
    I("sw zero, 0(t2)");
  }
  I("lw ra, 44(sp)");
  I("addi sp, sp, 48");
  I("ret");

  std::string src = ".func x\n";
  for (auto& l : body) src += l + "\n";
  src += ".endfunc\n";
  auto prog = parse_program(src);
  w.items = std::move(prog.functions[0].items);
  return w;
}

inline Function build_pdata(const std::string& fn_name, const GenPlan& plan,
                            const PolyConfig& cfg, std::vector<Item> pool) {
  Function d;
  d.name = fn_name + "_pdata";
  u32 buffer = cfg.buffer_words ? cfg.buffer_words : plan.worst_words;
  auto label = [&](const std::string& l) { d.items.push_back(Item::make_label(l)); };
  auto word = [&](u32 v) {
    Item it;
    it.kind = ItemKind::kWord;
    it.value = v;
    d.items.push_back(it);
  };
  label(fn_name + "_regen_ctr");
  word(0);  // regenerate on first call
  label(fn_name + "_buf");
  Item sp;
  sp.kind = ItemKind::kSpace;
  sp.value = buffer;
  d.items.push_back(sp);
  label(fn_name + "_alloc");
  for (size_t i = 0; i < plan.alloc_list.size(); i += 4) {
    u32 v = 0;
    for (size_t j = 0; j < 4 && i + j < plan.alloc_list.size(); ++j)
      v |= static_cast<u32>(plan.alloc_list[i + j]) << (8 * j);
    word(v);
  }
  label(fn_name + "_pool");
  for (auto& it : pool) d.items.push_back(it);
  return d;
}

}  // namespace polydetail

// Replaces every poly-attributed function with wrapper + SGPC + data and
// returns the plans (the host oracle and campaign dig into them).
inline std::map<std::string, GenPlan> polygen_transform(AsmProgram& prog,
                                                        const PolyConfig& cfg) {
  cfg.validate();
  std::map<std::string, bool> callee_encrypted;
  for (const auto& fn : prog.functions)
    callee_encrypted[fn.name] = fn.poly ? cfg.encrypt_wrapper : fn.encrypt;

  std::map<std::string, GenPlan> plans;
  std::vector<Function> out;
  for (auto& fn : prog.functions) {
    if (!fn.poly) {
      out.push_back(fn);
      continue;
    }
    GenPlan plan = build_plan(fn, callee_encrypted, cfg);
    polydetail::SgpcEmitter emitter(plan, cfg);
    Function sgpc = emitter.build_sgpc();
    Function wrapper = polydetail::build_wrapper(fn.name, cfg);
    Function pdata = polydetail::build_pdata(fn.name, plan, cfg, emitter.take_pool());
    out.push_back(std::move(wrapper));
    out.push_back(std::move(sgpc));
    out.push_back(std::move(pdata));
    plans.emplace(fn.name, std::move(plan));
  }
  prog.functions = std::move(out);
  return plans;
}

}  // namespace polysim
