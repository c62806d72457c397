// Copyright 2026 The polysim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Frozen RV32IM encoding samples; regenerate with gen_rv32_vectors.py.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace polysim_test {

struct EncodingVector {
  std::string text;  // mnemonic and operands, offsets are pc-relative
  uint32_t word;
};

inline const std::vector<EncodingVector>& rv32_vectors() {
  static const std::vector<EncodingVector> v = {
    {"add a0, a1, a0", 0x00a58533},
    {"sub t0, a0, a1", 0x40b502b3},
    {"xor a2, a1, a0", 0x00a5c633},
    {"mul a0, a1, a2", 0x02c58533},
    {"divu s0, a0, t0", 0x02555433},
    {"addi x0, x0, 0", 0x00000013},
    {"addi sp, sp, -16", 0xff010113},
    {"andi a0, a0, 255", 0x0ff57513},
    {"slli a1, a1, 8", 0x00859593},
    {"srai a2, a2, 31", 0x41f65613},
    {"lw a0, 0(a1)", 0x0005a503},
    {"lbu t0, -4(sp)", 0xffc14283},
    {"sw a0, 12(sp)", 0x00a12623},
    {"sb a1, -1(a0)", 0xfeb50fa3},
    {"beq a0, a1, +16", 0x00b50863},
    {"bne a0, x0, -8", 0xfe051ce3},
    {"bltu a2, a3, +4094", 0x7ed66fe3},
    {"bge t0, t1, -4096", 0x8062d063},
    {"jal x0, +8", 0x0080006f},
    {"jal ra, -2048", 0x801ff0ef},
    {"jal x0, +1048574", 0x7ffff06f},
    {"jalr x0, ra, 0", 0x00008067},
    {"jalr ra, t0, 4", 0x004280e7},
    {"lui a0, 0x12345", 0x12345537},
    {"auipc t1, 0xFFFFF", 0xfffff317},
  };
  return v;
}

}  // namespace polysim_test
