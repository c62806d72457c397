// Copyright 2026 The polysim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>

#include "polysim/image.hpp"
#include "polysim/program.hpp"

namespace polysim {

// Two-pass assembly: pass 1 lays out functions sequentially from `base` and
// collects the symbol table (function names and labels share one namespace);
// pass 2 resolves control-flow targets pc-relative and `la` absolute, emits
// words, and derives the encrypted-region table from function attributes and
// .enc_*/.plain_* overrides.
inline Image assemble(const AsmProgram& prog, u32 base = 0x10000) {
  if (base % 4 != 0) throw ToolError("image base must be word-aligned");
  Image img;
  img.base = base;

  std::map<std::string, u32> syms;
  auto define = [&](const std::string& name, u32 addr, int line) {
    if (!syms.emplace(name, addr).second)
      throw ToolError("line " + std::to_string(line) + ": duplicate symbol '" + name + "'");
    img.symbols.emplace_back(name, addr);
  };

  u32 lc = base;
  for (const auto& fn : prog.functions) {
    define(fn.name, lc, fn.line);
    for (const auto& it : fn.items) {
      if (it.kind == ItemKind::kLabel) define(it.label, lc, it.line);
      lc += it.size_words() * 4;
    }
  }

  auto resolve = [&](const std::string& name, int line) -> u32 {
    auto i = syms.find(name);
    if (i == syms.end())
      throw ToolError("line " + std::to_string(line) + ": undefined symbol '" + name + "'");
    return i->second;
  };

  auto emit_instr = [&](const Instr& in, u32 addr) {
    if (in.op == Op::kLa) {
      u32 target = resolve(in.target, in.line);
      u32 hi = (target + 0x800) >> 12;
      i32 lo = static_cast<i32>(target - (hi << 12));
      img.words.push_back(encode({Op::kLui, in.rd, 0, 0, static_cast<i32>(hi & 0xFFFFF), "", in.line}));
      img.words.push_back(encode({Op::kAddi, in.rd, in.rd, 0, lo, "", in.line}));
      return;
    }
    Instr copy = in;
    if (!in.target.empty()) {
      u32 target = resolve(in.target, in.line);
      copy.imm = static_cast<i32>(target - addr);
      copy.target.clear();
    }
    try {
      img.words.push_back(encode(copy));
    } catch (const ToolError& e) {
      throw ToolError("line " + std::to_string(in.line) + ": " + e.what());
    }
  };

  lc = base;
  for (const auto& fn : prog.functions) {
    u32 enc_run_start = lc;
    bool enc_now = fn.encrypt;
    auto close_run = [&](u32 at) {
      if (enc_now && at > enc_run_start)
        img.regions.push_back({enc_run_start, at, kRegionEncrypted});
    };
    for (const auto& it : fn.items) {
      switch (it.kind) {
        case ItemKind::kLabel:
          break;
        case ItemKind::kEncMarker: {
          bool want = it.marker_begin ? it.marker_encrypt : fn.encrypt;
          if (it.marker_encrypt == fn.encrypt && it.marker_begin)
            throw ToolError("line " + std::to_string(it.line) +
                            ": override marker matches enclosing attribute");
          if (want != enc_now) {
            close_run(lc);
            enc_now = want;
            enc_run_start = lc;
          }
          break;
        }
        case ItemKind::kInstr:
        case ItemKind::kInsnWord:
          emit_instr(it.instr, lc);
          break;
        case ItemKind::kWord:
          img.words.push_back(it.value);
          break;
        case ItemKind::kSpace:
          for (u32 i = 0; i < it.value; ++i) img.words.push_back(0);
          break;
        case ItemKind::kIvSlot:
          img.words.push_back(kIvSlotMagic);
          img.words.push_back(kIvSlotMagic);
          img.words.push_back(it.value);
          break;
      }
      lc += it.size_words() * 4;
    }
    close_run(lc);
  }

  std::string entry = prog.entry_symbol();
  img.entry = resolve(entry, 0);
  if (img.entry < img.base || img.entry >= img.end())
    throw ToolError("entry symbol outside image");
  return img;
}

}  // namespace polysim
