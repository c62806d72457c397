// Copyright 2026 The polysim Authors
// SPDX-License-Identifier: Apache-2.0

#include "polysim/cfg.hpp"

#include <gtest/gtest.h>

#include "polysim/assembler.hpp"
#include "polysim/binenc.hpp"
#include "polysim/machine.hpp"

using namespace polysim;

namespace {

const Key kKey = Key::from_hex("0053a6f94c9ff24598eb");
const CipherConfig kCfg = CipherConfig::trivium32();

Function fn_of(const std::string& src, const std::string& name = "f") {
  auto prog = parse_program(src);
  return *prog.find(name);
}

TEST(BuildCfg, StraightLineIsOneBlock) {
  auto cfg = build_cfg(fn_of(
      ".func f\n  add a0, a1, a0\n  xor a2, a1, a0\n  ret\n.endfunc\n"));
  EXPECT_EQ(cfg.blocks.size(), 1u);
  EXPECT_TRUE(cfg.edges.empty());
}

TEST(BuildCfg, DiamondHasFourBlocksFourEdges) {
  auto cfg = build_cfg(fn_of(
      ".func f\n"
      "  beq a0, zero, el\n"
      "  addi a1, a1, 1\n"
      "  j done\n"
      "el:\n"
      "  addi a1, a1, 2\n"
      "done:\n"
      "  ret\n"
      ".endfunc\n"));
  EXPECT_EQ(cfg.blocks.size(), 4u);
  EXPECT_EQ(cfg.edges.size(), 4u);
}

TEST(BuildCfg, UndefinedTargetAndUnreachableRejected) {
  EXPECT_THROW(build_cfg(fn_of(".func f\n  j nowhere\n.endfunc\n")), ToolError);
  EXPECT_THROW(build_cfg(fn_of(
                   ".func f\n  ret\ndead:\n  nop\n  ret\n.endfunc\n")),
               ToolError);
}

TEST(Merge, JumpConnectedPairFuses) {
  // two-block chain jumping B1 -> B2, B2 single-pred: one block after merge
  auto cfg = build_cfg(fn_of(
      ".func f\n  addi a0, a0, 1\n  j b2\nb2:\n  addi a0, a0, 2\n  ret\n.endfunc\n"));
  ASSERT_EQ(cfg.blocks.size(), 2u);
  merge_blocks(cfg);
  ASSERT_EQ(cfg.blocks.size(), 1u);
  // the connecting jump disappeared
  for (const auto& in : cfg.blocks[0].instrs) EXPECT_NE(in.op, Op::kJal);
}

TEST(Merge, MultiplePredecessorsBlockUnchanged) {
  auto cfg = build_cfg(fn_of(
      ".func f\n"
      "  beq a0, zero, b2\n"
      "  j b2\n"
      "b2:\n"
      "  ret\n"
      ".endfunc\n"));
  size_t before = cfg.blocks.size();
  merge_blocks(cfg);
  EXPECT_EQ(cfg.blocks.size(), before);
}

TEST(Merge, ChainOfFiveReachesFixpoint) {
  std::string src = ".func f\n  addi a0, a0, 0\n  j c1\n";
  for (int i = 1; i <= 4; ++i) {
    src += "c" + std::to_string(i) + ":\n  addi a0, a0, " + std::to_string(i) + "\n";
    if (i < 4) src += "  j c" + std::to_string(i + 1) + "\n";
  }
  src += "  ret\n.endfunc\n";
  auto cfg = build_cfg(fn_of(src));
  ASSERT_EQ(cfg.blocks.size(), 5u);
  merge_blocks(cfg);
  EXPECT_EQ(cfg.blocks.size(), 1u);
}

TEST(Fallthrough, NotTakenBranchPathGetsExplicitJump) {
  auto cfg = build_cfg(fn_of(
      ".func f encrypt\n"
      "  beq a0, zero, out\n"
      "  addi a1, a1, 1\n"
      "out:\n"
      "  ret\n"
      ".endfunc\n"));
  materialize_fallthroughs(cfg);
  // block 0 ends [beq, j], block 1 ends [addi, j]
  ASSERT_EQ(cfg.blocks.size(), 3u);
  EXPECT_EQ(cfg.blocks[0].instrs.back().op, Op::kJal);
  EXPECT_EQ(cfg.blocks[1].instrs.back().op, Op::kJal);
  for (const auto& e : cfg.edges) EXPECT_NE(e.kind, EdgeKind::kFallthrough);
}

TEST(Fallthrough, MergedSingleBlockUnchanged) {
  auto cfg = build_cfg(fn_of(".func f encrypt\n  addi a0, a0, 1\n  ret\n.endfunc\n"));
  materialize_fallthroughs(cfg);
  EXPECT_EQ(cfg.blocks.size(), 1u);
  EXPECT_EQ(cfg.blocks[0].instrs.size(), 2u);
}

// The merging figure pair: B1 fallthrough into B2 where B2 has another
// predecessor; after preparation B1 must end with an explicit jump.
TEST(Fallthrough, SharedSuccessorShape) {
  auto cfg = build_cfg(fn_of(
      ".func f encrypt\n"
      "  beq a0, zero, b2\n"  // another predecessor of b2
      "  addi a1, a1, 1\n"    // B1, falls through into b2
      "b2:\n"
      "  ret\n"
      ".endfunc\n"));
  merge_blocks(cfg);
  materialize_fallthroughs(cfg);
  ASSERT_EQ(cfg.blocks.size(), 3u);
  const auto& b1 = cfg.blocks[1];
  ASSERT_EQ(b1.instrs.size(), 2u);
  EXPECT_EQ(b1.instrs.back().op, Op::kJal);
  EXPECT_EQ(b1.instrs.back().target, "b2");
}

TEST(IvSlots, EveryBlockCountsItsWords) {
  auto prog = parse_program(
      ".func f encrypt\n"
      "  beq a0, zero, el\n"
      "  addi a1, a1, 1\n"
      "  j done\n"
      "el:\n"
      "  la a2, f\n"  // la occupies 2 words
      "done:\n"
      "  ret\n"
      ".endfunc\n"
      ".func main\n  ecall\n.endfunc\n");
  auto prepped = prepare_program(prog);
  const Function& f = *prepped.find("f");
  u32 slots = 0;
  std::vector<u32> counts;
  for (const auto& it : f.items)
    if (it.kind == ItemKind::kIvSlot) {
      ++slots;
      counts.push_back(it.value);
    }
  // diamond: 4 blocks, 4 slots
  EXPECT_EQ(slots, 4u);
  // entry: [beq, j] = 2; then: [addi, j] = 2; el: [la, j] = 3; done: [ret] = 1
  EXPECT_EQ(counts, (std::vector<u32>{2, 2, 3, 1}));
  // image grows by exactly 12 bytes per slot
  Image plain = assemble(parse_program(
      ".func f\n  beq a0, zero, el\n  addi a1, a1, 1\n  j done\nel:\n  la a2, f\n"
      "done:\n  ret\n.endfunc\n.func main\n  ecall\n.endfunc\n"));
  Image prep = assemble(prepped);
  // prepared adds 4 slots and 2 materialized jumps
  EXPECT_EQ(prep.words.size(), plain.words.size() + 4 * 3 + 2);
}

TEST(Bracket, EncryptedToEncryptedSplitsWithSlot) {
  auto prog = parse_program(
      ".func f encrypt\n"
      "  addi sp, sp, -16\n"
      "  sw ra, 0(sp)\n"
      "  call g\n"
      "  lw ra, 0(sp)\n"
      "  addi sp, sp, 16\n"
      "  ret\n"
      ".endfunc\n"
      ".func g encrypt\n"
      "  ret\n"
      ".endfunc\n"
      ".func main\n  ecall\n.endfunc\n");
  auto prepped = prepare_program(prog);
  const Function& f = *prepped.find("f");
  u32 slots = 0, islands = 0;
  for (const auto& it : f.items) {
    if (it.kind == ItemKind::kIvSlot) ++slots;
    if (it.kind == ItemKind::kEncMarker) ++islands;
  }
  EXPECT_EQ(slots, 2u);    // entry block + continuation after the call
  EXPECT_EQ(islands, 0u);  // no plaintext island for encrypted callees
}

TEST(Bracket, PlainToPlainUntouched) {
  auto prog = parse_program(
      ".func f\n  call g\n  ret\n.endfunc\n"
      ".func g\n  ret\n.endfunc\n"
      ".func main\n  ecall\n.endfunc\n");
  auto prepped = prepare_program(prog);
  // byte-for-byte: no function is encrypted, so nothing changes
  EXPECT_EQ(assemble(prepped).serialize(), assemble(prog).serialize());
}

TEST(Bracket, IndirectJumpRejectedInsideEncrypted) {
  auto prog = parse_program(
      ".func f encrypt\n  jr a0\n.endfunc\n.func main\n  ecall\n.endfunc\n");
  EXPECT_THROW(prepare_program(prog), ToolError);
}

// ---------------------------------------------------------------------------
// Behavioural checks on prepared programs
// ---------------------------------------------------------------------------

// Straight-line f with a branch diamond, called from a plain main.
const char* kDiamond =
    ".entry main\n"
    ".func main\n"
    "  li a0, 7\n"
    "  li a1, 3\n"
    "  call f\n"
    "  mv t3, a0\n"
    "  li t0, 0xFFFF000C\n"
    "  sw a0, 0(t0)\n"
    "  li a0, 0\n"
    "  ecall\n"
    ".endfunc\n"
    ".func f encrypt\n"
    "  blt a1, a0, big\n"
    "  add a0, a0, a1\n"
    "  j out\n"
    "big:\n"
    "  sub a0, a0, a1\n"
    "out:\n"
    "  slli a0, a0, 1\n"
    "  ret\n"
    ".endfunc\n";

struct RunOutcome {
  u32 exit_code;
  std::string output;
  std::array<u32, 32> regs;
};

RunOutcome run_image(Image img, bool encrypted, u64 seed = 1) {
  if (encrypted) encrypt_image(img, kKey, kCfg, seed);
  Machine m(img, kKey, kCfg, 1, 1u << 20);
  auto r = m.run();
  EXPECT_EQ(r.status, StepStatus::kHalted) << fault_name(m.fault());
  return {m.exit_code(), m.output(), m.regs()};
}

TEST(Prepared, SemanticPreservationUnencrypted) {
  // The reshaping passes (merge, fallthrough fix, IV slots) preserve
  // architectural results when the prepared program runs without encryption:
  // jump targets hop the slots. Cross-domain toggles are excluded here; they
  // are only meaningful under encryption and are covered below.
  auto orig = parse_program(kDiamond);
  auto plain_src = orig;
  plain_src.find("f")->encrypt = false;  // reference: untouched layout
  PrepareOptions no_bracket;
  no_bracket.bracket = false;
  auto prepped = prepare_program(orig, no_bracket);

  auto a = run_image(assemble(plain_src), false);
  auto b = run_image(assemble(prepped), false);
  EXPECT_EQ(a.exit_code, b.exit_code);
  EXPECT_EQ(a.output, b.output);
  EXPECT_EQ(a.regs[28], b.regs[28]);  // t3 carries f's result
}

TEST(Prepared, EncryptedRunMatchesPlainRun) {
  auto orig = parse_program(kDiamond);
  auto plain_src = orig;
  plain_src.find("f")->encrypt = false;
  auto prepped = prepare_program(orig);
  auto plain = run_image(assemble(plain_src), false);
  auto enc = run_image(assemble(prepped), true);
  EXPECT_EQ(plain.exit_code, enc.exit_code);
  EXPECT_EQ(plain.output, enc.output);
  EXPECT_EQ(plain.regs[28], enc.regs[28]);
  EXPECT_EQ(enc.regs[28], 2u * (7 - 3));  // blt 3<7 -> big -> (7-3)<<1
}

TEST(Prepared, MergeOptionalFlagKeepsSemantics) {
  auto orig = parse_program(kDiamond);
  PrepareOptions no_merge;
  no_merge.merge = false;
  auto a = run_image(assemble(prepare_program(orig)), true, 3);
  auto b = run_image(assemble(prepare_program(orig, no_merge)), true, 3);
  EXPECT_EQ(a.exit_code, b.exit_code);
  EXPECT_EQ(a.regs[28], b.regs[28]);
}

// An encrypted function calling an unprotected helper: the island shape.
const char* kUnsecCall =
    ".entry main\n"
    ".func main\n"
    "  li a0, 5\n"
    "  call f_sec\n"
    "  mv t3, a0\n"
    "  li a0, 0\n"
    "  ecall\n"
    ".endfunc\n"
    ".func f_sec encrypt\n"
    "  addi sp, sp, -16\n"
    "  sw ra, 0(sp)\n"
    "  addi a0, a0, 1\n"
    "  call f_unsec\n"
    "  addi a0, a0, 1\n"
    "  lw ra, 0(sp)\n"
    "  addi sp, sp, 16\n"
    "  ret\n"
    ".endfunc\n"
    ".func f_unsec\n"
    "  slli a0, a0, 1\n"
    "  ret\n"
    ".endfunc\n";

TEST(Prepared, UnencryptedCalleeIslandShape) {
  auto prepped = prepare_program(parse_program(kUnsecCall));
  const Function& f = *prepped.find("f_sec");
  // exactly one 2-instruction plaintext island: enable_dec + j, between
  // plain markers, with no IV slot inside
  int in_island = 0, island_instrs = 0, disables = 0;
  for (const auto& it : f.items) {
    if (it.kind == ItemKind::kEncMarker) {
      EXPECT_FALSE(it.marker_encrypt);
      in_island = it.marker_begin;
      continue;
    }
    if (in_island) {
      EXPECT_NE(it.kind, ItemKind::kIvSlot);
      if (it.kind == ItemKind::kInstr) {
        ++island_instrs;
        if (island_instrs == 1) EXPECT_EQ(it.instr.op, Op::kEnableDec);
        if (island_instrs == 2) EXPECT_EQ(it.instr.op, Op::kJal);
      }
    }
    if (it.kind == ItemKind::kInstr && it.instr.op == Op::kDisableDec) ++disables;
  }
  EXPECT_EQ(island_instrs, 2);
  EXPECT_EQ(disables, 1);  // before the call to f_unsec
}

TEST(Prepared, UnencryptedCalleeTogglesExactlyTwiceInsideCallee) {
  auto prepped = prepare_program(parse_program(kUnsecCall));
  Image img = assemble(prepped);
  encrypt_image(img, kKey, kCfg, 17);
  Machine m(img, kKey, kCfg, 1, 1u << 20);
  auto r = m.run();
  ASSERT_EQ(r.status, StepStatus::kHalted) << fault_name(m.fault());
  EXPECT_EQ(m.reg(28), (5u + 1) * 2 + 1);  // ((5+1)<<1)+1

  // toggle log: on (main's call), off (call to f_unsec), on (island jump),
  // off (f_sec's return onto main's ciphertext island exit)
  const auto& tg = m.toggles();
  ASSERT_EQ(tg.size(), 4u);
  EXPECT_TRUE(tg[0].decrypt_on);
  EXPECT_FALSE(tg[1].decrypt_on);
  EXPECT_TRUE(tg[2].decrypt_on);
  EXPECT_FALSE(tg[3].decrypt_on);
  // the middle two are the unprotected-call bracket: (a) at the call site,
  // (c) at the island jump, both inside f_sec's range
  u32 f0 = img.symbol("f_sec"), f1 = img.symbol("f_unsec");
  EXPECT_GE(tg[1].pc, f0);
  EXPECT_LT(tg[1].pc, f1);
  EXPECT_GE(tg[2].pc, f0);
  EXPECT_LT(tg[2].pc, f1);
}

TEST(Prepared, MagicNeverDecodedOnPlainRun) {
  // run toggle-free prepared fixtures unencrypted; the slot-fetch trap must
  // not fire (all slot entries happen via taken control flow)
  PrepareOptions no_bracket;
  no_bracket.bracket = false;
  for (const char* src : {kDiamond, kUnsecCall}) {
    auto prepped = prepare_program(parse_program(src), no_bracket);
    Image img = assemble(prepped);
    Machine m(img, kKey, kCfg, 1, 1u << 20);
    auto r = m.run();
    EXPECT_EQ(r.status, StepStatus::kHalted) << fault_name(m.fault());
    EXPECT_NE(m.fault(), FaultReason::kIvSlotFetch);
  }
}

TEST(Prepared, DynamicCountGrowthIsBounded) {
  // merging never changes the dynamic instruction count by more than the
  // removed jumps; fallthrough materialization only adds jal x0
  auto orig = parse_program(kDiamond);
  auto plain_src = orig;
  plain_src.find("f")->encrypt = false;
  Image ref = assemble(plain_src);
  Machine m0(ref, kKey, kCfg, 1, 1u << 20);
  m0.run();
  PrepareOptions no_bracket;
  no_bracket.bracket = false;
  Image prep = assemble(prepare_program(orig, no_bracket));
  Machine m1(prep, kKey, kCfg, 1, 1u << 20);
  m1.run();
  u64 added = m1.counters().retired - m0.counters().retired;
  u64 cf_added = m1.counters().taken_cf - m0.counters().taken_cf;
  // only materialized jumps can be added, and each added retire is one
  EXPECT_EQ(added, cf_added);
  EXPECT_LE(added, 2u);  // at most one per fallthrough edge in the diamond
}

}  // namespace
