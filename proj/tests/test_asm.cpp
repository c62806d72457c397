// Copyright 2026 The polysim Authors
// SPDX-License-Identifier: Apache-2.0

#include "polysim/assembler.hpp"

#include <gtest/gtest.h>

using namespace polysim;

namespace {

const char* kFig2Listing = R"(
.func f_secure
  lw   a1, 0(a1)
  add  a0, a1, a0
  xor  a2, a1, a0
  mv   a0, a2
  jr   ra
.endfunc
)";

TEST(Parse, RFormatOperands) {
  auto prog = parse_program(".func f\n  add a0, a1, a0\n.endfunc\n");
  ASSERT_EQ(prog.functions.size(), 1u);
  const auto& items = prog.functions[0].items;
  ASSERT_EQ(items.size(), 1u);
  const Instr& in = items[0].instr;
  EXPECT_EQ(in.op, Op::kAdd);
  EXPECT_EQ(in.rd, 10);
  EXPECT_EQ(in.rs1, 11);
  EXPECT_EQ(in.rs2, 10);
}

TEST(Parse, UnknownMnemonicNamesToken) {
  try {
    parse_program(".func f\n  frobnicate a0, a1\n.endfunc\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("frobnicate"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Parse, BadRegisterNamed) {
  try {
    parse_program(".func f\n  add q0, a1, a2\n.endfunc\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("q0"), std::string::npos);
  }
}

TEST(Parse, StraightLineListing) {
  auto prog = parse_program(kFig2Listing);
  ASSERT_EQ(prog.functions.size(), 1u);
  EXPECT_EQ(prog.functions[0].name, "f_secure");
  EXPECT_EQ(prog.functions[0].items.size(), 5u);
  // mv expanded to addi, jr to jalr
  EXPECT_EQ(prog.functions[0].items[3].instr.op, Op::kAddi);
  EXPECT_EQ(prog.functions[0].items[4].instr.op, Op::kJalr);
}

TEST(Parse, AttributesAndDirectives) {
  auto prog = parse_program(
      ".entry main\n"
      ".func f encrypt poly\n"
      "loop:\n"
      "  .ivslot 4\n"
      "  .word 0xDEADBEEF\n"
      "  .space 3\n"
      "  beqz a0, loop\n"
      ".endfunc\n"
      ".func main\n"
      "  ecall\n"
      ".endfunc\n");
  EXPECT_TRUE(prog.functions[0].encrypt);
  EXPECT_TRUE(prog.functions[0].poly);
  EXPECT_EQ(prog.entry_symbol(), "main");
  EXPECT_EQ(prog.functions[0].items[1].kind, ItemKind::kIvSlot);
  EXPECT_EQ(prog.functions[0].items[1].value, 4u);
  EXPECT_EQ(prog.functions[0].items[3].value, 3u);
}

TEST(Parse, LiExpansion) {
  auto prog = parse_program(
      ".func f\n  li a0, 100\n  li a1, 0x12345678\n  li a2, -2049\n.endfunc\n");
  const auto& items = prog.functions[0].items;
  ASSERT_EQ(items.size(), 5u);
  EXPECT_EQ(items[0].instr.op, Op::kAddi);
  EXPECT_EQ(items[0].instr.imm, 100);
  EXPECT_EQ(items[1].instr.op, Op::kLui);
  EXPECT_EQ(items[1].instr.imm, 0x12345);
  EXPECT_EQ(items[2].instr.op, Op::kAddi);
  EXPECT_EQ(items[2].instr.imm, 0x678);
  EXPECT_EQ(items[3].instr.op, Op::kLui);
  EXPECT_EQ(items[4].instr.op, Op::kAddi);
}

TEST(Assemble, KnownEncodings) {
  auto prog = parse_program(".func f\n  add a0, a1, a0\n  nop\n.endfunc\n");
  Image img = assemble(prog, 0x1000);
  ASSERT_EQ(img.words.size(), 2u);
  EXPECT_EQ(img.words[0], 0x00A58533u);
  EXPECT_EQ(img.words[1], 0x00000013u);
}

TEST(Assemble, IvSlotLayoutArithmetic) {
  // two blocks, each carrying an IV slot: block2's symbol sits 12 bytes after
  // block1's last instruction
  auto prog = parse_program(
      ".func f encrypt\n"
      "b1:\n"
      "  .ivslot 2\n"
      "  add a0, a0, a1\n"
      "  j b2\n"
      "b2:\n"
      "  .ivslot 1\n"
      "  ret\n"
      ".endfunc\n");
  Image img = assemble(prog, 0x1000);
  u32 b1 = img.symbol("b1"), b2 = img.symbol("b2");
  u32 b1_end = b1 + 12 + 2 * 4;  // slot + 2 instructions
  EXPECT_EQ(b2, b1_end);
  EXPECT_EQ(img.word_at(b2), kIvSlotMagic);
  EXPECT_EQ(img.word_at(b2 + 8), 1u);
  // j b2 lands on the slot start
  Instr j = decode(img.word_at(b1 + 12 + 4));
  EXPECT_EQ(j.op, Op::kJal);
  EXPECT_EQ(b1 + 12 + 4 + static_cast<u32>(j.imm), b2);
}

TEST(Assemble, RegionsFromAttributesAndOverrides) {
  auto prog = parse_program(
      ".func f encrypt\n"
      "  add a0, a0, a1\n"
      "  .plain_begin\n"
      "  enable_dec\n"
      "  j out\n"
      "  .plain_end\n"
      "out:\n"
      "  ret\n"
      ".endfunc\n"
      ".func g\n"
      "  nop\n"
      "  .enc_begin\n"
      "  .ivslot 2\n"
      "  disable_dec\n"
      "  j done\n"
      "  .enc_end\n"
      "done:\n"
      "  ret\n"
      ".endfunc\n");
  Image img = assemble(prog, 0x2000);
  ASSERT_EQ(img.regions.size(), 3u);
  u32 f = img.symbol("f");
  EXPECT_EQ(img.regions[0].start, f);
  EXPECT_EQ(img.regions[0].end, f + 4);
  EXPECT_EQ(img.regions[1].start, f + 12);  // after the 2-word plaintext island
  EXPECT_EQ(img.regions[1].end, f + 16);
  u32 g = img.symbol("g");
  EXPECT_EQ(img.regions[2].start, g + 4);
  EXPECT_EQ(img.regions[2].end, g + 4 + 12 + 8);
}

TEST(Assemble, LaMaterializesAbsoluteAddress) {
  auto prog = parse_program(
      ".func f\n  la a0, table\n  ret\n.endfunc\n"
      ".func table\n  .word 42\n.endfunc\n");
  Image img = assemble(prog, 0x10000);
  u32 table = img.symbol("table");
  Instr lui = decode(img.words[0]);
  Instr addi = decode(img.words[1]);
  EXPECT_EQ(lui.op, Op::kLui);
  EXPECT_EQ(addi.op, Op::kAddi);
  u32 value = (static_cast<u32>(lui.imm) << 12) + static_cast<u32>(addi.imm);
  EXPECT_EQ(value, table);
}

TEST(Assemble, ErrorsAreDiagnosed) {
  EXPECT_THROW(assemble(parse_program(".func f\n  j nowhere\n.endfunc\n")), ToolError);
  EXPECT_THROW(assemble(parse_program(
                   ".func f\nx:\n  nop\nx:\n  nop\n.endfunc\n")),
               ToolError);
  // branch offset out of range: pad > 4 KiB between branch and target
  std::string far = ".func f\n  beq a0, a1, far\n  .space 2000\nfar:\n  ret\n.endfunc\n";
  EXPECT_THROW(assemble(parse_program(far)), ToolError);
}

TEST(Assemble, LayoutIsDeterministic) {
  std::string src = kFig2Listing;
  src += ".func g encrypt\n  li t0, 0x12345678\n  la t1, f_secure\n  ret\n.endfunc\n";
  auto a = assemble(parse_program(src), 0x8000).serialize();
  auto b = assemble(parse_program(src), 0x8000).serialize();
  EXPECT_EQ(a, b);
}

TEST(Image, SerializeRoundTrips) {
  auto prog = parse_program(
      ".entry main\n"
      ".func main\n  la a0, data\n  lw a1, 0(a0)\n  ecall\n.endfunc\n"
      ".func data encrypt\n  .ivslot 1\n  .word 0x1234\n.endfunc\n");
  Image img = assemble(prog, 0x4000);
  Image back = Image::deserialize(img.serialize());
  EXPECT_EQ(back.base, img.base);
  EXPECT_EQ(back.entry, img.entry);
  EXPECT_EQ(back.words, img.words);
  EXPECT_EQ(back.symbols, img.symbols);
  ASSERT_EQ(back.regions.size(), img.regions.size());
  for (size_t i = 0; i < img.regions.size(); ++i) {
    EXPECT_EQ(back.regions[i].start, img.regions[i].start);
    EXPECT_EQ(back.regions[i].end, img.regions[i].end);
    EXPECT_EQ(back.regions[i].kind, img.regions[i].kind);
  }
}

TEST(Printer, FormatParsesBack) {
  std::string src =
      ".entry main\n"
      ".func f encrypt\n"
      "top:\n"
      "  .ivslot 3\n"
      "  lw a0, 4(sp)\n"
      "  beq a0, zero, top\n"
      "  .plain_begin\n"
      "  enable_dec\n"
      "  .plain_end\n"
      "  la t0, table\n"
      "  jalr ra, t0, 0\n"
      "  ret\n"
      ".endfunc\n"
      ".func table\n"
      "  .word 0xabcdef01\n"
      "  .insn_word sub t0, a0, a1\n"
      "  .space 2\n"
      ".endfunc\n"
      ".func main\n  ecall\n.endfunc\n";
  auto p1 = parse_program(src);
  auto text = format_program(p1);
  auto p2 = parse_program(text);
  // identical layout and encodings
  EXPECT_EQ(assemble(p1, 0x1000).serialize(), assemble(p2, 0x1000).serialize());
  // canonical printing is a fixpoint
  EXPECT_EQ(format_program(p2), text);
}

}  // namespace
