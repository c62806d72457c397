// Copyright 2026 The polysim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <set>

#include "polysim/program.hpp"

namespace polysim {

// ---------------------------------------------------------------------------
// CFG preparation for encrypted execution.
//
// Pass order over every encrypt-attributed function:
//   build -> merge (optional) -> materialize fallthroughs -> bracket calls
//   -> insert IV slots
// After preparation every basic block is only entered through a taken
// control-flow instruction and starts with an IV slot, so the fetch-side
// cipher is re-initialised on every block entry.
//
// Call bracketing:
//   encrypted -> encrypted   block split after the call; the continuation
//                            starts a fresh IV-bearing block (returns land
//                            on it)
//   encrypted -> plain       disable_dec before the call; a 2-instruction
//                            plaintext island [enable_dec; j cont] after it,
//                            excluded from the encrypted region
//   plain -> encrypted       enable_dec before the call; a 2-instruction
//                            ciphertext island [.ivslot 2; disable_dec;
//                            j after] receives the encrypted callee's return
//   plain -> plain           untouched
// Indirect calls (jalr ra) are assumed to stay inside the caller's
// encryption domain; indirect jumps other than ret are rejected inside
// encrypted functions since their targets cannot be guaranteed to carry IVs.
// ---------------------------------------------------------------------------

enum class EdgeKind { kFallthrough, kBranchTaken, kJump, kCall, kReturn };

struct CfgBlock {
  std::string label;             // empty: entry reachable via function symbol
  std::vector<Instr> instrs;
  bool force_plain = false;      // plaintext island inside encrypted function
  bool needs_iv = false;

  u32 size_words() const {
    u32 n = 0;
    for (const auto& in : instrs) n += in.size_words();
    return n;
  }
};

struct CfgEdge {
  size_t src;
  size_t dst;
  EdgeKind kind;
};

struct Cfg {
  std::string fn_name;
  bool encrypt = false;
  bool poly = false;
  std::vector<CfgBlock> blocks;
  std::vector<CfgEdge> edges;
  int next_label = 0;

  std::string fresh_label(const char* tag) {
    return ".L" + fn_name + "_" + tag + std::to_string(next_label++);
  }

  size_t block_by_label(const std::string& label) const {
    for (size_t i = 0; i < blocks.size(); ++i)
      if (blocks[i].label == label) return i;
    throw ToolError("no block labelled '" + label + "' in " + fn_name);
  }

  std::vector<size_t> preds(size_t b) const {
    std::vector<size_t> out;
    for (const auto& e : edges)
      if (e.dst == b) out.push_back(e.src);
    return out;
  }
  std::vector<size_t> succs(size_t b) const {
    std::vector<size_t> out;
    for (const auto& e : edges)
      if (e.src == b) out.push_back(e.dst);
    return out;
  }

  // Re-derives all intra-function edges from block contents and layout order.
  void rebuild_edges() {
    edges.clear();
    std::map<std::string, size_t> by_label;
    for (size_t i = 0; i < blocks.size(); ++i)
      if (!blocks[i].label.empty()) by_label[blocks[i].label] = i;
    auto target_block = [&](const Instr& in) -> size_t {
      auto it = by_label.find(in.target);
      if (it == by_label.end())
        throw ToolError("jump to undefined label '" + in.target + "' in " + fn_name);
      return it->second;
    };
    for (size_t i = 0; i < blocks.size(); ++i) {
      const auto& ins = blocks[i].instrs;
      bool falls_through = true;
      for (size_t k = 0; k < ins.size(); ++k) {
        const Instr& in = ins[k];
        if (!is_control_flow(in.op)) continue;
        bool last = (k + 1 == ins.size());
        if (is_branch(in.op)) {
          edges.push_back({i, target_block(in), EdgeKind::kBranchTaken});
          if (last) continue;  // fallthrough handled below or by trailing jump
        } else if (in.op == Op::kJal && in.rd == kRegZero) {
          if (!in.target.empty()) edges.push_back({i, target_block(in), EdgeKind::kJump});
          if (last) falls_through = false;
        } else if (is_call(in)) {
          // interprocedural; continuation is reached via the callee's return
          if (last) {
            falls_through = false;
            if (i + 1 < blocks.size()) edges.push_back({i, i + 1, EdgeKind::kCall});
          }
        } else if (is_ret(in)) {
          if (last) falls_through = false;
        } else if (in.op == Op::kJalr && in.rd == kRegZero) {
          if (last) falls_through = false;  // indirect jump: no static successor
        }
      }
      if (!ins.empty() && ins.back().op == Op::kEcall) falls_through = false;
      if (falls_through && i + 1 < blocks.size())
        edges.push_back({i, i + 1, EdgeKind::kFallthrough});
    }
  }
};

// Splits a function body into leader-delimited basic blocks. Every label is
// conservatively treated as a leader; encrypted functions must not contain
// data items.
inline Cfg build_cfg(const Function& fn) {
  Cfg cfg;
  cfg.fn_name = fn.name;
  cfg.encrypt = fn.encrypt;
  cfg.poly = fn.poly;

  // flatten to (labels, instr) stream
  struct Slot {
    std::vector<std::string> labels;
    Instr instr;
  };
  std::vector<Slot> stream;
  std::vector<std::string> pending_labels;
  for (const auto& it : fn.items) {
    switch (it.kind) {
      case ItemKind::kLabel:
        pending_labels.push_back(it.label);
        break;
      case ItemKind::kInstr:
        stream.push_back({pending_labels, it.instr});
        pending_labels.clear();
        break;
      case ItemKind::kEncMarker:
        throw ToolError(fn.name + ": encryption override markers cannot be prepared");
      default:
        throw ToolError(fn.name + ": line " + std::to_string(it.line) +
                        ": data directive inside function subject to CFG preparation");
    }
  }
  if (stream.empty()) throw ToolError(fn.name + ": empty function");
  if (!pending_labels.empty())
    throw ToolError(fn.name + ": trailing label without instruction");

  // leaders: entry, control-flow targets, instruction after any terminator
  std::set<size_t> leaders = {0};
  std::map<std::string, size_t> label_pos;
  for (size_t i = 0; i < stream.size(); ++i)
    for (const auto& l : stream[i].labels) label_pos[l] = i;
  for (size_t i = 0; i < stream.size(); ++i) {
    const Instr& in = stream[i].instr;
    if (!is_control_flow(in.op) && in.op != Op::kEcall) continue;
    bool intra = is_branch(in.op) || (in.op == Op::kJal && in.rd == kRegZero);
    if (intra && !in.target.empty()) {
      auto it = label_pos.find(in.target);
      if (it == label_pos.end())
        throw ToolError(fn.name + ": jump to undefined label '" + in.target + "'");
      leaders.insert(it->second);
    }
    if (i + 1 < stream.size()) leaders.insert(i + 1);
  }

  for (auto it = leaders.begin(); it != leaders.end(); ++it) {
    size_t start = *it;
    auto next = std::next(it);
    size_t end = next == leaders.end() ? stream.size() : *next;
    CfgBlock b;
    if (!stream[start].labels.empty()) b.label = stream[start].labels.front();
    for (size_t i = start; i < end; ++i) {
      if (i != start && !stream[i].labels.empty())
        throw ToolError("internal: label inside block");
      b.instrs.push_back(stream[i].instr);
    }
    cfg.blocks.push_back(std::move(b));
  }
  // keep alias labels resolvable: a block may carry several labels; map all
  // of them onto the first by rewriting targets
  std::map<std::string, std::string> alias;
  {
    size_t bi = 0;
    for (auto it = leaders.begin(); it != leaders.end(); ++it, ++bi) {
      const auto& labels = stream[*it].labels;
      for (size_t k = 1; k < labels.size(); ++k) alias[labels[k]] = labels[0];
    }
    if (!alias.empty())
      for (auto& b : cfg.blocks)
        for (auto& in : b.instrs)
          if (!in.target.empty() && alias.count(in.target)) in.target = alias[in.target];
  }

  cfg.rebuild_edges();

  // reachability: walk taken/fallthrough/call edges from entry
  std::set<size_t> seen = {0};
  std::vector<size_t> work = {0};
  while (!work.empty()) {
    size_t b = work.back();
    work.pop_back();
    for (const auto& e : cfg.edges)
      if (e.src == b && !seen.count(e.dst)) {
        seen.insert(e.dst);
        work.push_back(e.dst);
      }
  }
  if (seen.size() != cfg.blocks.size()) {
    for (size_t i = 0; i < cfg.blocks.size(); ++i)
      if (!seen.count(i))
        throw ToolError(fn.name + ": unreachable basic block '" + cfg.blocks[i].label + "'");
  }
  return cfg;
}

// Fuses jump-connected pairs where B1's only successor is B2 via a direct
// unconditional jump and B2's only predecessor is B1; iterated to fixpoint.
inline void merge_blocks(Cfg& cfg) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < cfg.blocks.size() && !changed; ++i) {
      auto& b1 = cfg.blocks[i];
      if (b1.instrs.empty()) continue;
      const Instr& last = b1.instrs.back();
      if (last.op != Op::kJal || last.rd != kRegZero || last.target.empty()) continue;
      size_t j = cfg.block_by_label(last.target);
      if (j == i || j == 0) continue;  // entry keeps its implicit callers
      // B2's only predecessor must be B1, through this jump alone
      auto preds = cfg.preds(j);
      if (preds.size() != 1 || preds[0] != i) continue;
      auto succs = cfg.succs(i);
      if (succs.size() != 1 || succs[0] != j) continue;
      if (cfg.blocks[i].force_plain != cfg.blocks[j].force_plain) continue;
      b1.instrs.pop_back();
      b1.instrs.insert(b1.instrs.end(), cfg.blocks[j].instrs.begin(),
                       cfg.blocks[j].instrs.end());
      cfg.blocks.erase(cfg.blocks.begin() + static_cast<long>(j));
      cfg.rebuild_edges();
      changed = true;
    }
  }
}

// Appends an explicit `j next` wherever execution would otherwise fall
// through into the next block, including after not-taken conditional
// branches: a not-taken branch does not reset the cipher.
inline void materialize_fallthroughs(Cfg& cfg) {
  for (size_t i = 0; i + 1 < cfg.blocks.size(); ++i) {
    bool has_ft = false;
    for (const auto& e : cfg.edges)
      if (e.src == i && e.kind == EdgeKind::kFallthrough) has_ft = true;
    if (!has_ft) continue;
    auto& next = cfg.blocks[i + 1];
    if (next.label.empty()) next.label = cfg.fresh_label("bb");
    Instr j{Op::kJal, kRegZero, 0, 0, 0, next.label, 0};
    cfg.blocks[i].instrs.push_back(j);
  }
  cfg.rebuild_edges();
}

// Splits blocks after calls and inserts the enable/disable toggles and
// islands described above. `callee_encrypted` resolves call targets.
inline void bracket_calls(Cfg& cfg, const std::map<std::string, bool>& callee_encrypted) {
  if (!cfg.encrypt) return;
  for (size_t i = 0; i < cfg.blocks.size(); ++i) {
    size_t call_at = cfg.blocks[i].instrs.size();
    for (size_t k = 0; k < cfg.blocks[i].instrs.size(); ++k)
      if (is_call(cfg.blocks[i].instrs[k])) {
        call_at = k;
        break;
      }
    if (call_at == cfg.blocks[i].instrs.size()) continue;

    auto& ins = cfg.blocks[i].instrs;
    const Instr& call = ins[call_at];
    bool callee_enc;
    if (call.op == Op::kJal) {
      auto it = callee_encrypted.find(call.target);
      if (it == callee_encrypted.end())
        throw ToolError(cfg.fn_name + ": call to unknown symbol '" + call.target + "'");
      callee_enc = it->second;
    } else {
      callee_enc = true;  // indirect call stays inside the encryption domain
    }

    // ensure the call terminates its block; carve out a continuation if not
    if (call_at + 1 < ins.size()) {
      CfgBlock cont;
      cont.label = cfg.fresh_label("ret");
      cont.instrs.assign(ins.begin() + static_cast<long>(call_at) + 1, ins.end());
      ins.erase(ins.begin() + static_cast<long>(call_at) + 1, ins.end());
      cfg.blocks.insert(cfg.blocks.begin() + static_cast<long>(i) + 1, std::move(cont));
    }
    if (i + 1 >= cfg.blocks.size())
      throw ToolError(cfg.fn_name + ": call has no continuation block");

    if (!callee_enc) {
      // disable before the call; the plain callee returns onto a plaintext
      // island that re-enables decryption and jumps to the continuation
      auto& blk = cfg.blocks[i].instrs;
      blk.insert(blk.end() - 1, Instr{Op::kDisableDec, 0, 0, 0, 0, "", 0});
      if (cfg.blocks[i + 1].label.empty()) cfg.blocks[i + 1].label = cfg.fresh_label("ret");
      CfgBlock island;
      island.force_plain = true;
      island.instrs.push_back(Instr{Op::kEnableDec, 0, 0, 0, 0, "", 0});
      island.instrs.push_back(
          Instr{Op::kJal, kRegZero, 0, 0, 0, cfg.blocks[i + 1].label, 0});
      cfg.blocks.insert(cfg.blocks.begin() + static_cast<long>(i) + 1, std::move(island));
    }
    cfg.rebuild_edges();
  }
}

// Validates control-flow restrictions for encrypted code.
inline void check_encrypted_cf(const Cfg& cfg) {
  if (!cfg.encrypt) return;
  for (const auto& b : cfg.blocks)
    for (const auto& in : b.instrs) {
      if (in.op == Op::kJalr && in.rd == kRegZero && !is_ret(in))
        throw ToolError(cfg.fn_name +
                        ": indirect jump inside encrypted function (only ret is allowed)");
      if ((is_branch(in.op) || in.op == Op::kJal) && in.target.empty())
        throw ToolError(cfg.fn_name +
                        ": numeric control-flow offset inside encrypted function");
    }
}

inline void insert_iv_slots(Cfg& cfg) {
  if (!cfg.encrypt) return;
  for (auto& b : cfg.blocks) {
    if (b.force_plain) continue;
    if (b.instrs.empty()) throw ToolError(cfg.fn_name + ": empty block");
    b.needs_iv = true;
  }
}

// Lowers a prepared CFG back to an item list (labels, slots, markers).
inline std::vector<Item> cfg_to_items(const Cfg& cfg) {
  std::vector<Item> items;
  for (const auto& b : cfg.blocks) {
    if (!b.label.empty()) items.push_back(Item::make_label(b.label));
    if (b.force_plain && cfg.encrypt) items.push_back(Item::make_marker(true, false));
    if (b.needs_iv) items.push_back(Item::make_ivslot(b.size_words()));
    for (const auto& in : b.instrs) items.push_back(Item::make_instr(in));
    if (b.force_plain && cfg.encrypt) items.push_back(Item::make_marker(false, false));
  }
  return items;
}

struct PrepareOptions {
  bool merge = true;
  // Insert the enable/disable toggles and islands around cross-domain calls.
  // Disabling this leaves a program whose prepared functions still run
  // correctly *without* encryption (jump targets hop IV slots), which is how
  // the reshaping passes are checked for semantic preservation.
  bool bracket = true;
};

// Rewrites call sites in a plain function that target encrypted callees:
// enable_dec before the call, ciphertext island after it.
inline void bracket_plain_caller(Function& fn,
                                 const std::map<std::string, bool>& callee_encrypted,
                                 int& fresh) {
  std::vector<Item> out;
  out.reserve(fn.items.size());
  for (size_t idx = 0; idx < fn.items.size(); ++idx) {
    const Item& it = fn.items[idx];
    bool is_enc_call = false;
    if (it.kind == ItemKind::kInstr && is_call(it.instr) && it.instr.op == Op::kJal) {
      auto found = callee_encrypted.find(it.instr.target);
      if (found == callee_encrypted.end())
        throw ToolError(fn.name + ": call to unknown symbol '" + it.instr.target + "'");
      is_enc_call = found->second;
    }
    if (!is_enc_call) {
      out.push_back(it);
      continue;
    }
    std::string after = ".L" + fn.name + "_after" + std::to_string(fresh++);
    out.push_back(Item::make_instr(Instr{Op::kEnableDec, 0, 0, 0, 0, "", it.line}));
    out.push_back(it);  // the call; the encrypted callee returns onto the island
    out.push_back(Item::make_marker(true, true, it.line));
    out.push_back(Item::make_ivslot(2, it.line));
    out.push_back(Item::make_instr(Instr{Op::kDisableDec, 0, 0, 0, 0, "", it.line}));
    out.push_back(Item::make_instr(Instr{Op::kJal, kRegZero, 0, 0, 0, after, it.line}));
    out.push_back(Item::make_marker(false, true, it.line));
    out.push_back(Item::make_label(after, it.line));
  }
  fn.items = std::move(out);
}

// Whole-program preparation. Encrypted functions go through the full pass
// pipeline; plain functions only get their calls to encrypted callees
// bracketed; data-only functions pass through untouched.
inline AsmProgram prepare_program(const AsmProgram& prog, const PrepareOptions& opts = {}) {
  std::map<std::string, bool> callee_encrypted;
  for (const auto& fn : prog.functions) callee_encrypted[fn.name] = fn.encrypt;

  AsmProgram out = prog;
  int fresh = 0;
  for (auto& fn : out.functions) {
    if (fn.encrypt) {
      Cfg cfg = build_cfg(fn);
      check_encrypted_cf(cfg);
      if (opts.merge) merge_blocks(cfg);
      materialize_fallthroughs(cfg);
      if (opts.bracket) bracket_calls(cfg, callee_encrypted);
      insert_iv_slots(cfg);
      fn.items = cfg_to_items(cfg);
    } else if (opts.bracket) {
      bool has_code = false;
      for (const auto& it : fn.items) has_code |= it.kind == ItemKind::kInstr;
      if (has_code) bracket_plain_caller(fn, callee_encrypted, fresh);
    }
  }
  return out;
}

}  // namespace polysim
