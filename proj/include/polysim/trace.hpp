// Copyright 2026 The polysim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>

#include "polysim/common.hpp"
#include "polysim/isa.hpp"

namespace polysim {

// One recorded execution sample: <PC, INSN, r0, r1, r2>, five 32-bit words.
// Register values are recorded after the instruction has fully propagated.
// Field selection by instruction type:
//   R-type             r0=rs1  r1=rs2  r2=rd
//   I-type (incl jalr) r0=rs1  r1=0    r2=rd
//   S-type             r0=rs1  r1=rs2  r2=0   (no rd field exists; recorded 0)
//   B-type             r0=rs1  r1=rs2  r2=0
//   U-type             r0=0    r1=0    r2=rd
//   J-type             r0=0    r1=0    r2=rd
//   ecall              r0=r1=r2=0
//   enc_word           r0=rs1  r1=0    r2=rd
//   enable/disable_dec r0=r1=r2=0
//   initbb             three samples, one per IV word: r0=word r1=0 r2=0
struct Sample {
  u32 pc = 0;
  u32 insn = 0;
  u32 r0 = 0;
  u32 r1 = 0;
  u32 r2 = 0;
};

using Trace = std::vector<Sample>;

struct TraceMeta {
  std::string algorithm;            // e.g. "aes128"
  std::vector<u8> key;              // fixed key bytes
  std::vector<std::vector<u8>> plaintexts;  // one entry per trace
};

// Trace container with `PTRC` on-disk format, all little-endian u32:
//   magic "PTRC" | version=1 | trace_count
//   per trace: sample_count | samples (5 words each)
// Trace lengths may differ per trace (code polymorphism changes instruction
// counts); analyses truncate to the common prefix.
struct TraceSet {
  std::vector<Trace> traces;

  static constexpr u32 kMagic = 0x43525450;  // "PTRC"

  std::vector<u8> serialize() const {
    std::vector<u8> out;
    auto put = [&](u32 v) {
      for (int i = 0; i < 4; ++i) out.push_back(static_cast<u8>(v >> (8 * i)));
    };
    put(kMagic);
    put(1);
    put(static_cast<u32>(traces.size()));
    for (const auto& tr : traces) {
      put(static_cast<u32>(tr.size()));
      for (const auto& s : tr) {
        put(s.pc);
        put(s.insn);
        put(s.r0);
        put(s.r1);
        put(s.r2);
      }
    }
    return out;
  }

  static TraceSet deserialize(const std::vector<u8>& data) {
    size_t pos = 0;
    auto get = [&]() -> u32 {
      if (pos + 4 > data.size()) throw ParseError("truncated trace file");
      u32 v = static_cast<u32>(data[pos]) | static_cast<u32>(data[pos + 1]) << 8 |
              static_cast<u32>(data[pos + 2]) << 16 | static_cast<u32>(data[pos + 3]) << 24;
      pos += 4;
      return v;
    };
    if (get() != kMagic) throw ParseError("not a PTRC trace file");
    if (get() != 1) throw ParseError("unsupported trace version");
    TraceSet ts;
    u32 n = get();
    ts.traces.resize(n);
    for (u32 i = 0; i < n; ++i) {
      u32 len = get();
      ts.traces[i].resize(len);
      for (u32 j = 0; j < len; ++j) {
        Sample& s = ts.traces[i][j];
        s.pc = get();
        s.insn = get();
        s.r0 = get();
        s.r1 = get();
        s.r2 = get();
      }
    }
    if (pos != data.size()) throw ParseError("trailing bytes in trace file");
    return ts;
  }

  void save(const std::string& path) const {
    auto bytes = serialize();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ToolError("cannot write " + path);
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  }

  static TraceSet load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ToolError("cannot read " + path);
    std::vector<u8> bytes((std::istreambuf_iterator<char>(is)),
                          std::istreambuf_iterator<char>());
    return deserialize(bytes);
  }
};

}  // namespace polysim
