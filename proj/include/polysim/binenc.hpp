// Copyright 2026 The polysim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "polysim/cipher.hpp"
#include "polysim/image.hpp"

namespace polysim {

// ---------------------------------------------------------------------------
// Offline binary encryptor.
//
// Scans each encrypted region of an image for IV slots. A slot before
// encryption holds [magic, magic, nb_instr]. For every slot, in scan order:
//   i)   read nb_instr from the count word,
//   ii)  draw a fresh random IV,
//   iii) overwrite the slot with the 3-word IV encoding,
//   iv)  initialise a software cipher with the IV,
//   v)   encrypt the nb_instr words that follow, in place.
// Regions must be an exact sequence of [slot, block] pairs; anything else is
// a scan error. Plain regions and plaintext islands are never touched.
// ---------------------------------------------------------------------------

struct EncryptStats {
  u32 blocks = 0;
  u32 words_encrypted = 0;
};

inline EncryptStats encrypt_image(Image& img, const Key& key, const CipherConfig& cfg,
                                  u64 seed) {
  cfg.validate();
  Xorshift32 rng(fold_seed(seed));
  EncryptStats stats;
  std::vector<Iv> seen_ivs;
  for (const auto& region : img.regions) {
    if (region.kind != kRegionEncrypted) continue;
    if (region.start % 4 || region.end % 4 || region.start >= region.end)
      throw ToolError("malformed encrypted region " + hex32(region.start));
    u32 addr = region.start;
    u32 region_blocks = 0;
    while (addr < region.end) {
      if (img.word_at(addr) != kIvSlotMagic || addr + 12 > region.end ||
          img.word_at(addr + 4) != kIvSlotMagic)
        throw ToolError("malformed IV slot at " + hex32(addr) +
                        (region_blocks ? " (mid-region garbage or already encrypted)"
                                       : " (region does not start with a slot)"));
      u32 nb_instr = img.word_at(addr + 8);
      if (nb_instr == 0) throw ToolError("empty block at " + hex32(addr));
      u32 body = addr + 12;
      if (body + nb_instr * 4 > region.end)
        throw ToolError("block at " + hex32(addr) + " overruns its region");

      auto slot_words = draw_iv_slot_words(rng);
      Iv iv = Iv::from_slot_words(slot_words);
      for (const auto& prev : seen_ivs)
        if (prev == iv) throw ToolError("random IV collision (astronomically unlikely)");
      seen_ivs.push_back(iv);

      for (int i = 0; i < 3; ++i) img.set_word(addr + 4 * i, slot_words[i]);
      CipherState st = cipher_init(cfg, key, iv);
      for (u32 i = 0; i < nb_instr; ++i) {
        u32 a = body + i * 4;
        img.set_word(a, cipher_encrypt_word(st, img.word_at(a)));
      }
      stats.blocks += 1;
      stats.words_encrypted += nb_instr;
      region_blocks += 1;
      addr = body + nb_instr * 4;
    }
    if (region_blocks == 0)
      throw ToolError("encrypted region " + hex32(region.start) + " contains no IV slots");
  }
  return stats;
}

// Per-block decrypt-and-diff report against the pre-encryption image.
struct BlockReport {
  u32 slot_addr = 0;
  u32 nb_instr = 0;
  bool ok = false;
};

struct VerifyReport {
  std::vector<BlockReport> blocks;
  bool all_ok() const {
    if (blocks.empty()) return false;
    for (const auto& b : blocks)
      if (!b.ok) return false;
    return true;
  }
  u32 failed() const {
    u32 n = 0;
    for (const auto& b : blocks) n += !b.ok;
    return n;
  }
};

inline VerifyReport verify_image(const Image& plain, const Image& enc, const Key& key,
                                 const CipherConfig& cfg) {
  if (plain.base != enc.base || plain.words.size() != enc.words.size())
    throw ToolError("image layout mismatch");
  VerifyReport report;
  for (const auto& region : plain.regions) {
    if (region.kind != kRegionEncrypted) continue;
    u32 addr = region.start;
    while (addr < region.end) {
      if (plain.word_at(addr) != kIvSlotMagic)
        throw ToolError("reference image has no slot at " + hex32(addr));
      u32 nb_instr = plain.word_at(addr + 8);
      BlockReport br;
      br.slot_addr = addr;
      br.nb_instr = nb_instr;
      Iv iv = Iv::from_slot_words({enc.word_at(addr), enc.word_at(addr + 4), enc.word_at(addr + 8)});
      CipherState st = cipher_init(cfg, key, iv);
      br.ok = true;
      for (u32 i = 0; i < nb_instr; ++i) {
        u32 a = addr + 12 + i * 4;
        if (cipher_decrypt_word(st, enc.word_at(a)) != plain.word_at(a)) br.ok = false;
      }
      report.blocks.push_back(br);
      addr += 12 + nb_instr * 4;
    }
  }
  return report;
}

}  // namespace polysim
