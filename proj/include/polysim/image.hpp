// Copyright 2026 The polysim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <optional>

#include "polysim/common.hpp"

namespace polysim {

// Flat guest memory image.
//
// On-disk format `PVO1`, all fields little-endian 32-bit:
//   magic "PVO1" | version=1 | base | entry | word_count | sym_count | region_count
//   word_count words
//   sym_count symbols: name_len, name bytes (no padding), address
//   region_count regions: start, end, kind (1 = encrypted)
// The region table only lists encrypted ranges; everything else is plain.

constexpr u32 kImageMagic = 0x314F5650;  // "PVO1"
constexpr u32 kIvSlotMagic = 0xFFFFFFFF; // does not decode to any instruction
constexpr u32 kRegionEncrypted = 1;

struct Region {
  u32 start = 0;
  u32 end = 0;  // exclusive
  u32 kind = kRegionEncrypted;
};

struct Image {
  u32 base = 0;
  u32 entry = 0;
  std::vector<u32> words;
  std::vector<std::pair<std::string, u32>> symbols;  // layout order
  std::vector<Region> regions;

  u32 end() const { return base + static_cast<u32>(words.size()) * 4; }

  std::optional<u32> find_symbol(const std::string& name) const {
    for (const auto& [n, a] : symbols)
      if (n == name) return a;
    return std::nullopt;
  }

  u32 symbol(const std::string& name) const {
    auto a = find_symbol(name);
    if (!a) throw ToolError("undefined symbol '" + name + "'");
    return *a;
  }

  u32 word_at(u32 addr) const {
    if (addr < base || addr + 4 > end() || addr % 4 != 0)
      throw ToolError("image address out of range: " + hex32(addr));
    return words[(addr - base) / 4];
  }
  void set_word(u32 addr, u32 v) {
    if (addr < base || addr + 4 > end() || addr % 4 != 0)
      throw ToolError("image address out of range: " + hex32(addr));
    words[(addr - base) / 4] = v;
  }

  std::vector<u8> serialize() const {
    std::vector<u8> out;
    auto put = [&](u32 v) {
      for (int i = 0; i < 4; ++i) out.push_back(static_cast<u8>(v >> (8 * i)));
    };
    put(kImageMagic);
    put(1);
    put(base);
    put(entry);
    put(static_cast<u32>(words.size()));
    put(static_cast<u32>(symbols.size()));
    put(static_cast<u32>(regions.size()));
    for (u32 w : words) put(w);
    for (const auto& [name, addr] : symbols) {
      put(static_cast<u32>(name.size()));
      out.insert(out.end(), name.begin(), name.end());
      put(addr);
    }
    for (const auto& r : regions) {
      put(r.start);
      put(r.end);
      put(r.kind);
    }
    return out;
  }

  static Image deserialize(const std::vector<u8>& data) {
    size_t pos = 0;
    auto get = [&]() -> u32 {
      if (pos + 4 > data.size()) throw ParseError("truncated image file");
      u32 v = static_cast<u32>(data[pos]) | static_cast<u32>(data[pos + 1]) << 8 |
              static_cast<u32>(data[pos + 2]) << 16 | static_cast<u32>(data[pos + 3]) << 24;
      pos += 4;
      return v;
    };
    if (get() != kImageMagic) throw ParseError("not a PVO1 image");
    if (get() != 1) throw ParseError("unsupported image version");
    Image img;
    img.base = get();
    img.entry = get();
    u32 n_words = get(), n_syms = get(), n_regions = get();
    img.words.reserve(n_words);
    for (u32 i = 0; i < n_words; ++i) img.words.push_back(get());
    for (u32 i = 0; i < n_syms; ++i) {
      u32 len = get();
      if (pos + len > data.size()) throw ParseError("truncated symbol table");
      std::string name(data.begin() + pos, data.begin() + pos + len);
      pos += len;
      img.symbols.emplace_back(std::move(name), get());
    }
    for (u32 i = 0; i < n_regions; ++i) {
      Region r;
      r.start = get();
      r.end = get();
      r.kind = get();
      img.regions.push_back(r);
    }
    return img;
  }

  void save(const std::string& path) const {
    auto bytes = serialize();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ToolError("cannot write " + path);
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  }

  static Image load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ToolError("cannot read " + path);
    std::vector<u8> bytes((std::istreambuf_iterator<char>(is)),
                          std::istreambuf_iterator<char>());
    return deserialize(bytes);
  }
};

}  // namespace polysim
