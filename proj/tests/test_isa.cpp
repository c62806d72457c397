// Copyright 2026 The polysim Authors
// SPDX-License-Identifier: Apache-2.0

#include "polysim/isa.hpp"

#include <gtest/gtest.h>

#include <random>

#include "vectors/rv32_vectors.hpp"

using namespace polysim;

namespace {

// Tiny operand builder for the frozen table: "op rd, rs1, rs2" etc.
Instr build(const std::string& text) {
  std::string s = text;
  for (char& c : s)
    if (c == ',' || c == '(' || c == ')') c = ' ';
  std::vector<std::string> tok;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) tok.push_back(s.substr(i, j - i));
    i = j;
  }
  Instr in;
  in.op = *op_by_name(tok[0]);
  auto as_int = [](const std::string& t) {
    return static_cast<i32>(std::stol(t, nullptr, 0));
  };
  switch (format_of(in.op)) {
    case Format::R:
      in.rd = *reg_by_name(tok[1]);
      in.rs1 = *reg_by_name(tok[2]);
      in.rs2 = *reg_by_name(tok[3]);
      break;
    case Format::I:
      if (is_load(in.op)) {  // op rd, imm(rs1)
        in.rd = *reg_by_name(tok[1]);
        in.imm = as_int(tok[2]);
        in.rs1 = *reg_by_name(tok[3]);
      } else if (in.op == Op::kJalr) {  // op rd, rs1, imm
        in.rd = *reg_by_name(tok[1]);
        in.rs1 = *reg_by_name(tok[2]);
        in.imm = as_int(tok[3]);
      } else {
        in.rd = *reg_by_name(tok[1]);
        in.rs1 = *reg_by_name(tok[2]);
        in.imm = as_int(tok[3]);
      }
      break;
    case Format::S:  // op rs2, imm(rs1)
      in.rs2 = *reg_by_name(tok[1]);
      in.imm = as_int(tok[2]);
      in.rs1 = *reg_by_name(tok[3]);
      break;
    case Format::B:
      in.rs1 = *reg_by_name(tok[1]);
      in.rs2 = *reg_by_name(tok[2]);
      in.imm = as_int(tok[3]);
      break;
    case Format::U:
      in.rd = *reg_by_name(tok[1]);
      in.imm = as_int(tok[2]);
      break;
    case Format::J:
      in.rd = *reg_by_name(tok[1]);
      in.imm = as_int(tok[2]);
      break;
    default:
      break;
  }
  return in;
}

TEST(Encode, MatchesIndependentOracle) {
  for (const auto& vec : polysim_test::rv32_vectors()) {
    EXPECT_EQ(encode(build(vec.text)), vec.word) << vec.text;
  }
}

TEST(Decode, AllZerosIsIllegal) {
  EXPECT_EQ(decode(0x00000000).op, Op::kIllegal);
  EXPECT_EQ(decode(0xFFFFFFFF).op, Op::kIllegal);  // the IV slot magic word
}

TEST(Decode, RecoversFields) {
  Instr in = decode(0x00a58533);
  EXPECT_EQ(in.op, Op::kAdd);
  EXPECT_EQ(in.rd, 10);
  EXPECT_EQ(in.rs1, 11);
  EXPECT_EQ(in.rs2, 10);

  Instr br = decode(encode(build("bge t0, t1, -4096")));
  EXPECT_EQ(br.op, Op::kBge);
  EXPECT_EQ(br.imm, -4096);

  Instr j = decode(encode(build("jal x0, +1048574")));
  EXPECT_EQ(j.op, Op::kJal);
  EXPECT_EQ(j.imm, 1048574);
}

TEST(Decode, ExtensionInstructions) {
  Instr initbb{Op::kInitBB, 10, 11, 0, 0, "", 0};
  u32 w = encode(initbb);
  EXPECT_EQ(w & 0x7F, 0x0Bu);
  Instr back = decode(w);
  EXPECT_EQ(back.op, Op::kInitBB);
  EXPECT_EQ(back.rd, 10);
  EXPECT_EQ(back.rs1, 11);

  EXPECT_EQ(decode(encode(Instr{Op::kEncWord, 5, 6, 0, 0, "", 0})).op, Op::kEncWord);
  EXPECT_EQ(decode(encode(Instr{Op::kEnableDec, 0, 0, 0, 0, "", 0})).op, Op::kEnableDec);
  EXPECT_EQ(decode(encode(Instr{Op::kDisableDec, 0, 0, 0, 0, "", 0})).op, Op::kDisableDec);
  // stray operand bits on the parameterless toggles are not valid encodings
  u32 bad = encode(Instr{Op::kEnableDec, 0, 0, 0, 0, "", 0}) | (3u << 7);
  EXPECT_EQ(decode(bad).op, Op::kIllegal);
}

TEST(Encode, RejectsOutOfRangeImmediates) {
  EXPECT_THROW(encode(build("addi sp, sp, 2048")), ToolError);
  EXPECT_THROW(encode(build("beq a0, a1, 4096")), ToolError);
  EXPECT_THROW(encode(Instr{Op::kJal, 0, 0, 0, 3, "", 0}), ToolError);  // odd offset
}

TEST(RoundTrip, RandomWellFormedInstructions) {
  // encode(decode) bijectivity over >= 1e5 random well-formed instructions.
  std::mt19937 gen(12345);
  size_t n_ops;
  const OpInfo* ops = op_table(n_ops);
  auto reg = [&] { return static_cast<u8>(gen() % 32); };
  int checked = 0;
  while (checked < 100000) {
    const OpInfo& info = ops[gen() % n_ops];
    Instr in;
    in.op = info.op;
    switch (info.fmt) {
      case Format::R:
        in.rd = reg(); in.rs1 = reg(); in.rs2 = reg();
        break;
      case Format::I:
        in.rd = reg(); in.rs1 = reg();
        if (in.op == Op::kSlli || in.op == Op::kSrli || in.op == Op::kSrai)
          in.imm = static_cast<i32>(gen() % 32);
        else
          in.imm = static_cast<i32>(gen() % 4096) - 2048;
        break;
      case Format::S:
        in.rs1 = reg(); in.rs2 = reg();
        in.imm = static_cast<i32>(gen() % 4096) - 2048;
        break;
      case Format::B:
        in.rs1 = reg(); in.rs2 = reg();
        in.imm = (static_cast<i32>(gen() % 4096) - 2048) * 2;
        break;
      case Format::U:
        in.rd = reg();
        in.imm = static_cast<i32>(gen() % 0x100000);
        break;
      case Format::J:
        in.rd = reg();
        in.imm = (static_cast<i32>(gen() % 1048576) - 524288) * 2;
        break;
      case Format::Sys:
        break;
      case Format::Ext:
        if (in.op == Op::kInitBB || in.op == Op::kEncWord) {
          in.rd = reg();
          in.rs1 = reg();
        }
        break;
    }
    Instr back = decode(encode(in));
    ASSERT_EQ(back.op, in.op);
    ASSERT_EQ(back.rd, in.rd);
    ASSERT_EQ(back.rs1, in.rs1);
    ASSERT_EQ(back.rs2, in.rs2);
    ASSERT_EQ(back.imm, in.imm);
    ++checked;
  }
}

TEST(Regs, NamesRoundTrip) {
  for (u8 i = 0; i < 32; ++i) EXPECT_EQ(*reg_by_name(reg_name(i)), i);
  EXPECT_EQ(*reg_by_name("x17"), 17);
  EXPECT_EQ(*reg_by_name("fp"), 8);
  EXPECT_FALSE(reg_by_name("x32").has_value());
  EXPECT_FALSE(reg_by_name("frobnicate").has_value());
}

TEST(Classify, CallsAndReturns) {
  EXPECT_TRUE(is_ret(decode(0x00008067)));
  Instr call{Op::kJal, kRegRa, 0, 0, 64, "", 0};
  EXPECT_TRUE(is_call(call));
  EXPECT_FALSE(is_ret(call));
  EXPECT_TRUE(is_control_flow(Op::kBne));
  EXPECT_FALSE(is_control_flow(Op::kAdd));
}

}  // namespace
