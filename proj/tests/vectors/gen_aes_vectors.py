#!/usr/bin/env python3
"""Regenerates the frozen AES vectors in cipher_vectors.hpp using the pyca
`cryptography` package as the independent oracle.

Covers:
  * the FIPS-197 appendix C.1 single-block vector,
  * NIST SP 800-38A F.5.1 CTR-AES128.Encrypt (first two blocks),
  * keystream words for the word-granular CTR construction used by the
    simulator backend (counter = IV zero-extended to 16 bytes, one block per
    32-bit word, low word kept).
"""
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes


def ecb(key: bytes, block: bytes) -> bytes:
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return enc.update(block) + enc.finalize()


def main():
    # FIPS-197 C.1
    key = bytes.fromhex("000102030405060708090a0b0c0d0e0f")
    pt = bytes.fromhex("00112233445566778899aabbccddeeff")
    print("fips197_ct =", ecb(key, pt).hex())

    # SP 800-38A F.5.1
    key = bytes.fromhex("2b7e151628aed2a6abf7158809cf4f3c")
    ctr0 = bytes.fromhex("f0f1f2f3f4f5f6f7f8f9fafbfcfdfeff")
    enc = Cipher(algorithms.AES(key), modes.CTR(ctr0)).encryptor()
    pts = ["6bc1bee22e409f96e93d7e117393172a", "ae2d8a571e03ac9c9eb76fac45af8e51"]
    for i, p in enumerate(pts):
        print(f"sp800_38a_block{i}_ct =", enc.update(bytes.fromhex(p)).hex())

    # Backend keystream words: iv = 000102030405060708 09, counter = iv || 0^6
    key = bytes.fromhex("2b7e151628aed2a6abf7158809cf4f3c")
    iv = bytes.fromhex("00010203040506070809")
    words = []
    for i in range(8):
        ctr = int.from_bytes(iv + bytes(6), "big") + i
        block = ecb(key, ctr.to_bytes(16, "big"))
        words.append(int.from_bytes(block[:4], "little"))
    print("backend_words = {" + ", ".join(f"0x{w:08x}" for w in words) + "}")


if __name__ == "__main__":
    main()
