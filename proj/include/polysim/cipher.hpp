// Copyright 2026 The polysim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstring>

#include "polysim/common.hpp"
#include "polysim/rng.hpp"

namespace polysim {

// ---------------------------------------------------------------------------
// Instruction-level encryption primitive.
//
// Two XOR-keystream backends share one interface:
//  * Trivium (80-bit key), word-sliced, 32 keystream bits per state advance.
//  * AES-128 in counter mode (128-bit key); each 32-bit word consumes one
//    counter block and keeps its low word.
//
// Byte conventions (frozen, they define the on-disk and in-guest formats):
//  * Key and IV values are byte arrays in hex-string order.
//  * Trivium loads key/IV per the eSTREAM reference convention: byte order
//    reversed, bits MSB-first. Keystream bytes pack output bits LSB-first;
//    keystream word i is the little-endian load of stream bytes 4i..4i+3.
//  * An IV travels in a 3-word slot: w0 = iv[0..3] LE, w1 = iv[4..7] LE,
//    w2 = iv[8] | iv[9]<<8 | pad<<16 where pad is 16 bits of padding.
// ---------------------------------------------------------------------------

enum class CipherBackend { kTrivium, kAesCtr };

struct Key {
  std::vector<u8> bytes;  // 10 bytes (Trivium) or 16 bytes (AES-CTR)

  static Key from_hex(const std::string& hex) { return Key{parse_hex(hex)}; }
  size_t bits() const { return bytes.size() * 8; }
};

struct Iv {
  std::array<u8, 10> bytes{};  // 80 bits, hex-string order

  static Iv from_hex(const std::string& hex) {
    auto v = parse_hex(hex);
    if (v.size() != 10) throw ToolError("IV must be exactly 80 bits (10 bytes)");
    Iv iv;
    std::memcpy(iv.bytes.data(), v.data(), 10);
    return iv;
  }

  // 3-word slot encoding. The top 16 bits of word 2 are padding: random at
  // encryption time, ignored when decoding.
  std::array<u32, 3> to_slot_words(u16 padding) const {
    auto le32 = [&](int i) {
      return static_cast<u32>(bytes[i]) | static_cast<u32>(bytes[i + 1]) << 8 |
             static_cast<u32>(bytes[i + 2]) << 16 | static_cast<u32>(bytes[i + 3]) << 24;
    };
    return {le32(0), le32(4),
            static_cast<u32>(bytes[8]) | static_cast<u32>(bytes[9]) << 8 |
                static_cast<u32>(padding) << 16};
  }

  static Iv from_slot_words(const std::array<u32, 3>& w) {
    Iv iv;
    for (int i = 0; i < 4; ++i) iv.bytes[i] = static_cast<u8>(w[0] >> (8 * i));
    for (int i = 0; i < 4; ++i) iv.bytes[4 + i] = static_cast<u8>(w[1] >> (8 * i));
    iv.bytes[8] = static_cast<u8>(w[2]);
    iv.bytes[9] = static_cast<u8>(w[2] >> 8);
    return iv;
  }

  bool operator==(const Iv& o) const { return bytes == o.bytes; }
};

// Draws a fresh IV plus 16 padding bits as three raw generator words. This is
// the exact consumption rule shared by the binary encryptor, the initBB
// instruction and the host-side reference generator: three words per IV.
inline std::array<u32, 3> draw_iv_slot_words(Xorshift32& rng) {
  return {rng.next(), rng.next(), rng.next()};
}

struct CipherConfig {
  CipherBackend backend = CipherBackend::kTrivium;
  u32 width_bits = 32;  // keystream bits produced per hardware cycle
  u32 k_init = 35;      // modeled re-initialisation cost in cycles

  static CipherConfig trivium32() { return {CipherBackend::kTrivium, 32, 35}; }
  static CipherConfig trivium128() { return {CipherBackend::kTrivium, 128, 9}; }
  static CipherConfig aes_ctr(u32 k_init = 1) {
    return {CipherBackend::kAesCtr, 128, k_init};
  }

  void validate() const {
    if (k_init < 1) throw ToolError("cipher re-init cost must be >= 1 cycle");
  }

  size_t key_bytes() const { return backend == CipherBackend::kTrivium ? 10 : 16; }
};

// ---------------------------------------------------------------------------
// AES-128 block primitive (used by the AES-CTR backend and by the trace
// analyses' hypothesis model).
// ---------------------------------------------------------------------------

namespace aes {

inline const std::array<u8, 256>& sbox() {
  static const std::array<u8, 256> kSbox = {
      0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b, 0xfe, 0xd7,
      0xab, 0x76, 0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0, 0xad, 0xd4, 0xa2, 0xaf,
      0x9c, 0xa4, 0x72, 0xc0, 0xb7, 0xfd, 0x93, 0x26, 0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5,
      0xe5, 0xf1, 0x71, 0xd8, 0x31, 0x15, 0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a,
      0x07, 0x12, 0x80, 0xe2, 0xeb, 0x27, 0xb2, 0x75, 0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e,
      0x5a, 0xa0, 0x52, 0x3b, 0xd6, 0xb3, 0x29, 0xe3, 0x2f, 0x84, 0x53, 0xd1, 0x00, 0xed,
      0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb, 0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf, 0xd0, 0xef,
      0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45, 0xf9, 0x02, 0x7f, 0x50, 0x3c, 0x9f, 0xa8,
      0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5, 0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff,
      0xf3, 0xd2, 0xcd, 0x0c, 0x13, 0xec, 0x5f, 0x97, 0x44, 0x17, 0xc4, 0xa7, 0x7e, 0x3d,
      0x64, 0x5d, 0x19, 0x73, 0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a, 0x90, 0x88, 0x46, 0xee,
      0xb8, 0x14, 0xde, 0x5e, 0x0b, 0xdb, 0xe0, 0x32, 0x3a, 0x0a, 0x49, 0x06, 0x24, 0x5c,
      0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79, 0xe7, 0xc8, 0x37, 0x6d, 0x8d, 0xd5,
      0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08, 0xba, 0x78, 0x25, 0x2e,
      0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f, 0x4b, 0xbd, 0x8b, 0x8a, 0x70, 0x3e,
      0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e, 0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e,
      0xe1, 0xf8, 0x98, 0x11, 0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55,
      0x28, 0xdf, 0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f,
      0xb0, 0x54, 0xbb, 0x16};
  return kSbox;
}

inline u8 xtime(u8 x) { return static_cast<u8>((x << 1) ^ ((x >> 7) * 0x1b)); }

struct KeySchedule {
  std::array<u8, 176> rk{};  // 11 round keys

  explicit KeySchedule(const u8 key[16]) {
    std::memcpy(rk.data(), key, 16);
    u8 rcon = 1;
    for (int i = 16; i < 176; i += 4) {
      u8 t[4] = {rk[i - 4], rk[i - 3], rk[i - 2], rk[i - 1]};
      if (i % 16 == 0) {
        u8 tmp = t[0];
        t[0] = static_cast<u8>(sbox()[t[1]] ^ rcon);
        t[1] = sbox()[t[2]];
        t[2] = sbox()[t[3]];
        t[3] = sbox()[tmp];
        rcon = xtime(rcon);
      }
      for (int j = 0; j < 4; ++j) rk[i + j] = static_cast<u8>(rk[i - 16 + j] ^ t[j]);
    }
  }
};

inline void encrypt_block_rk(const u8 rk[176], const u8 in[16], u8 out[16]) {
  u8 s[16];
  for (int i = 0; i < 16; ++i) s[i] = static_cast<u8>(in[i] ^ rk[i]);
  for (int round = 1; round <= 10; ++round) {
    for (int i = 0; i < 16; ++i) s[i] = sbox()[s[i]];
    // ShiftRows on column-major layout: byte index = row + 4*col
    u8 t[16];
    for (int c = 0; c < 4; ++c)
      for (int r = 0; r < 4; ++r) t[r + 4 * c] = s[r + 4 * ((c + r) % 4)];
    std::memcpy(s, t, 16);
    if (round < 10) {
      for (int c = 0; c < 4; ++c) {
        u8* p = s + 4 * c;
        u8 a0 = p[0], a1 = p[1], a2 = p[2], a3 = p[3];
        u8 x = static_cast<u8>(a0 ^ a1 ^ a2 ^ a3);
        p[0] ^= static_cast<u8>(xtime(static_cast<u8>(a0 ^ a1)) ^ x);
        p[1] ^= static_cast<u8>(xtime(static_cast<u8>(a1 ^ a2)) ^ x);
        p[2] ^= static_cast<u8>(xtime(static_cast<u8>(a2 ^ a3)) ^ x);
        p[3] ^= static_cast<u8>(xtime(static_cast<u8>(a3 ^ a0)) ^ x);
      }
    }
    for (int i = 0; i < 16; ++i) s[i] ^= rk[16 * round + i];
  }
  std::memcpy(out, s, 16);
}

inline void encrypt_block(const KeySchedule& ks, const u8 in[16], u8 out[16]) {
  encrypt_block_rk(ks.rk.data(), in, out);
}

}  // namespace aes

// ---------------------------------------------------------------------------
// Cipher state
// ---------------------------------------------------------------------------

struct TriviumState {
  // Registers A = s1..s93, B = s94..s177, C = s178..s288, stored with s_n at
  // bit (93-n) / (177-n) / (288-n) so that a 32-step keystream window is a
  // plain shift. Outputs pack LSB-first, matching the byte convention above.
  unsigned __int128 a = 0, b = 0, c = 0;

  static TriviumState load(const Key& key, const Iv& iv) {
    TriviumState st;
    auto set_bit = [](unsigned __int128& reg, int pos) {
      reg |= static_cast<unsigned __int128>(1) << pos;
    };
    // eSTREAM loading: byte order reversed, bits MSB-first.
    for (int i = 0; i < 80; ++i) {
      int bit = (key.bytes[9 - i / 8] >> (7 - i % 8)) & 1;
      if (bit) set_bit(st.a, 92 - i);  // s_{1+i}
    }
    for (int i = 0; i < 80; ++i) {
      int bit = (iv.bytes[9 - i / 8] >> (7 - i % 8)) & 1;
      if (bit) set_bit(st.b, 83 - i);  // s_{94+i}
    }
    set_bit(st.c, 2);  // s286
    set_bit(st.c, 1);  // s287
    set_bit(st.c, 0);  // s288
    for (int i = 0; i < 36; ++i) st.step();  // 4*288 warm-up rounds
    return st;
  }

  // Advances 32 rounds, returning the keystream word.
  u32 step() {
    const u32 M = 0xFFFFFFFFu;
    u32 s66 = static_cast<u32>(a >> 27), s93 = static_cast<u32>(a);
    u32 s162 = static_cast<u32>(b >> 15), s177 = static_cast<u32>(b);
    u32 s243 = static_cast<u32>(c >> 45), s288 = static_cast<u32>(c);
    u32 z = (s66 ^ s93 ^ s162 ^ s177 ^ s243 ^ s288) & M;
    u32 t1 = (s66 ^ s93 ^ (static_cast<u32>(a >> 2) & static_cast<u32>(a >> 1)) ^
              static_cast<u32>(b >> 6)) &
             M;
    u32 t2 = (s162 ^ s177 ^ (static_cast<u32>(b >> 2) & static_cast<u32>(b >> 1)) ^
              static_cast<u32>(c >> 24)) &
             M;
    u32 t3 = (s243 ^ s288 ^ (static_cast<u32>(c >> 2) & static_cast<u32>(c >> 1)) ^
              static_cast<u32>(a >> 24)) &
             M;
    a = (a >> 32) | (static_cast<unsigned __int128>(t3) << 61);
    b = (b >> 32) | (static_cast<unsigned __int128>(t1) << 52);
    c = (c >> 32) | (static_cast<unsigned __int128>(t2) << 79);
    return z;
  }

  bool operator==(const TriviumState& o) const { return a == o.a && b == o.b && c == o.c; }
};

struct AesCtrState {
  std::array<u8, 176> round_keys{};
  std::array<u8, 16> counter{};  // big-endian block counter, SP 800-38A style

  static AesCtrState load(const Key& key, const Iv& iv) {
    AesCtrState st;
    aes::KeySchedule ks(key.bytes.data());
    st.round_keys = ks.rk;
    // Counter block: IV bytes in positions 0..9, remainder zero.
    for (int i = 0; i < 10; ++i) st.counter[i] = iv.bytes[i];
    return st;
  }

  u32 step() {
    u8 block[16];
    aes::encrypt_block_rk(round_keys.data(), counter.data(), block);
    for (int i = 15; i >= 0; --i) {
      if (++counter[i] != 0) break;
    }
    return static_cast<u32>(block[0]) | static_cast<u32>(block[1]) << 8 |
           static_cast<u32>(block[2]) << 16 | static_cast<u32>(block[3]) << 24;
  }

  bool operator==(const AesCtrState& o) const {
    return round_keys == o.round_keys && counter == o.counter;
  }
};

struct CipherState {
  CipherBackend backend = CipherBackend::kTrivium;
  TriviumState trivium;
  AesCtrState aesctr;

  bool operator==(const CipherState& o) const {
    if (backend != o.backend) return false;
    return backend == CipherBackend::kTrivium ? trivium == o.trivium : aesctr == o.aesctr;
  }
};

// Cipher initialisation: the only operation that consumes an IV.
inline CipherState cipher_init(const CipherConfig& cfg, const Key& key, const Iv& iv) {
  if (key.bytes.size() != cfg.key_bytes())
    throw ToolError("key width does not match cipher backend: got " +
                    std::to_string(key.bytes.size() * 8) + " bits");
  CipherState st;
  st.backend = cfg.backend;
  if (cfg.backend == CipherBackend::kTrivium)
    st.trivium = TriviumState::load(key, iv);
  else
    st.aesctr = AesCtrState::load(key, iv);
  return st;
}

// Advances the state by one word and XORs the message with the keystream.
// Encryption and decryption are the same function on XOR constructions; both
// names are kept for readability at call sites.
inline u32 cipher_encrypt_word(CipherState& st, u32 m) {
  u32 z = st.backend == CipherBackend::kTrivium ? st.trivium.step() : st.aesctr.step();
  return m ^ z;
}

inline u32 cipher_decrypt_word(CipherState& st, u32 c) { return cipher_encrypt_word(st, c); }

// Post-emission ciphertext patching: enc(state, m ^ delta) == enc(state, m) ^ delta.
inline u32 patch_ciphertext(u32 c, u32 delta) { return c ^ delta; }

}  // namespace polysim
