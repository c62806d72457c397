// Copyright 2026 The polysim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <unordered_map>

#include "polysim/cipher.hpp"
#include "polysim/image.hpp"
#include "polysim/trace.hpp"

namespace polysim {

// ---------------------------------------------------------------------------
// Functional RV32IM-subset simulator with in-fetch decryption.
//
// Decryption model: while decrypt_on, every fetched word passes through the
// fetch-side cipher channel, which chains across sequential instructions.
// A *taken* control-flow instruction first applies the pending enable/disable
// toggle, then (if still decrypting) reads the 3-word IV at the jump target,
// re-initialises the fetch channel and resumes at target+12.
//
// When decrypt_on is false, a taken control flow whose target word is the IV
// slot magic skips the 3-word slot without touching the cipher. This lets
// prepared-but-unencrypted images run, which is how the CFG passes are
// checked for semantic preservation; sequentially fetching a magic word is
// a fault in every mode.
//
// Cycle model: every instruction costs 1 cycle, except a taken control-flow
// instruction under decryption and initbb, which cost k_init. This makes the
// measured decryption overhead exactly 1 + (k_init-1) * rb with rb the taken
// control-flow rate.
//
// MMIO device page (word access only):
//   0xFFFF0000 RNG_WORD  read: next generator word
//   0xFFFF0004 TRACE_CTL write: 1/0 capture on/off
//   0xFFFF0008 EXIT      write: halt, code = written value
//   0xFFFF000C PUTCHAR   write: append low byte to program output
// `ecall` also halts, with code = a0.
// ---------------------------------------------------------------------------

constexpr u32 kMmioRngWord = 0xFFFF0000;
constexpr u32 kMmioTraceCtl = 0xFFFF0004;
constexpr u32 kMmioExit = 0xFFFF0008;
constexpr u32 kMmioPutchar = 0xFFFF000C;

struct PerfCounters {
  u64 retired = 0;     // n: instructions retired
  u64 taken_cf = 0;    // b: control-flow instructions taken
  u64 fetch_inits = 0; // cipher re-inits on the fetch channel
  u64 exec_inits = 0;  // initbb executions (execute channel)
  u64 cycles = 0;

  u64 straight() const { return retired - taken_cf; }        // i = n - b
  u64 inits() const { return fetch_inits + exec_inits; }
  double rb() const { return retired ? static_cast<double>(taken_cf) / static_cast<double>(retired) : 0.0; }

  void add(const PerfCounters& o) {
    retired += o.retired;
    taken_cf += o.taken_cf;
    fetch_inits += o.fetch_inits;
    exec_inits += o.exec_inits;
    cycles += o.cycles;
  }
};

enum class StepStatus { kContinue, kHalted, kFault };

enum class FaultReason {
  kNone,
  kIllegalInstruction,
  kIvSlotFetch,
  kMisalignedFetch,
  kMisalignedAccess,
  kOutOfRange,
  kMmioAccess,
  kEncWordBeforeInit,
  kIvReadOutOfRange,
};

inline const char* fault_name(FaultReason r) {
  switch (r) {
    case FaultReason::kNone: return "none";
    case FaultReason::kIllegalInstruction: return "illegal instruction";
    case FaultReason::kIvSlotFetch: return "IV slot magic fetched as instruction";
    case FaultReason::kMisalignedFetch: return "misaligned fetch";
    case FaultReason::kMisalignedAccess: return "misaligned access";
    case FaultReason::kOutOfRange: return "address out of range";
    case FaultReason::kMmioAccess: return "invalid MMIO access";
    case FaultReason::kEncWordBeforeInit: return "enc_word before initbb";
    case FaultReason::kIvReadOutOfRange: return "IV read out of range";
  }
  return "?";
}

// decrypt_on transition, recorded at the taken control-flow instruction that
// applied it.
struct DecToggle {
  u32 pc;
  bool decrypt_on;
};

struct RegionCounter {
  std::string name;
  u32 start;
  u32 end;  // exclusive
  PerfCounters counters;
};

enum class Pending : u8 { kNone, kEnable, kDisable };

class Machine {
 public:
  Machine(const Image& image, const Key& key, const CipherConfig& config,
          u64 rng_seed = 1, u32 mem_size = 4u << 20)
      : key_(key), config_(config), rng_(fold_seed(rng_seed)) {
    config_.validate();
    base_ = image.base;
    if (mem_size % 4 != 0) throw ToolError("memory size must be word-aligned");
    if (image.words.size() * 4 > mem_size)
      throw ToolError("image does not fit in guest memory");
    if (base_ + mem_size > kMmioRngWord && base_ <= kMmioPutchar)
      throw ToolError("guest memory overlaps the MMIO page");
    mem_.assign(mem_size, 0);
    for (size_t i = 0; i < image.words.size(); ++i) {
      u32 w = image.words[i];
      mem_[i * 4] = static_cast<u8>(w);
      mem_[i * 4 + 1] = static_cast<u8>(w >> 8);
      mem_[i * 4 + 2] = static_cast<u8>(w >> 16);
      mem_[i * 4 + 3] = static_cast<u8>(w >> 24);
    }
    entry_ = image.entry;
    reset();
  }

  // Restores the architectural reset state (memory keeps the loaded image
  // plus any host pokes). decrypt_entry starts execution inside an encrypted
  // entry point: the IV at `entry` is consumed as if reached by a taken jump.
  void reset(bool decrypt_entry = false) {
    regs_.fill(0);
    regs_[kRegSp] = base_ + static_cast<u32>(mem_.size()) - 16;
    pc_ = entry_;
    decrypt_on_ = false;
    pending_ = Pending::kNone;
    exec_ready_ = false;
    halted_ = false;
    fault_ = FaultReason::kNone;
    exit_code_ = 0;
    if (decrypt_entry) {
      decrypt_on_ = true;
      if (!init_fetch_channel(entry_)) return;
      pc_ = entry_ + 12;
      counters_.cycles += config_.k_init;  // modeled entry re-init
    }
  }

  // --- host access -------------------------------------------------------

  u32 reg(u8 r) const { return regs_[r & 31]; }
  void set_reg(u8 r, u32 v) {
    if ((r & 31) != 0) regs_[r & 31] = v;
  }
  u32 pc() const { return pc_; }
  bool decrypt_on() const { return decrypt_on_; }
  bool halted() const { return halted_; }
  u32 exit_code() const { return exit_code_; }
  FaultReason fault() const { return fault_; }
  const PerfCounters& counters() const { return counters_; }
  const std::string& output() const { return output_; }
  const Trace& trace() const { return trace_; }
  Trace take_trace() { return std::move(trace_); }
  const std::vector<DecToggle>& toggles() const { return toggles_; }
  const std::array<u32, 32>& regs() const { return regs_; }

  void set_capture(bool on) { capture_ = on; }
  bool capture() const { return capture_; }

  void add_region_counter(const std::string& name, u32 start, u32 end) {
    regions_.push_back({name, start, end, {}});
  }
  const std::vector<RegionCounter>& region_counters() const { return regions_; }

  bool in_range(u32 addr, u32 len) const {
    return addr >= base_ && addr + len >= addr &&
           addr + len <= base_ + static_cast<u32>(mem_.size());
  }

  void write_bytes(u32 addr, const u8* data, size_t n) {
    if (!in_range(addr, static_cast<u32>(n))) throw ToolError("host write out of range");
    std::memcpy(&mem_[addr - base_], data, n);
  }
  std::vector<u8> read_bytes(u32 addr, size_t n) const {
    if (!in_range(addr, static_cast<u32>(n))) throw ToolError("host read out of range");
    return std::vector<u8>(mem_.begin() + (addr - base_), mem_.begin() + (addr - base_) + n);
  }
  u64 digest(u32 addr, size_t n) const {
    if (!in_range(addr, static_cast<u32>(n))) throw ToolError("digest range out of range");
    return fnv1a64(&mem_[addr - base_], n);
  }

  // --- execution ---------------------------------------------------------

  StepStatus step() {
    if (halted_) return StepStatus::kHalted;
    if (fault_ != FaultReason::kNone) return StepStatus::kFault;

    if (pc_ % 4 != 0) return do_fault(FaultReason::kMisalignedFetch);
    if (!in_range(pc_, 4)) return do_fault(FaultReason::kOutOfRange);
    u32 raw = load_word_nocheck(pc_);
    u32 word = raw;
    if (decrypt_on_) word = cipher_decrypt_word(fetch_state_, raw);
    if (!decrypt_on_ && word == kIvSlotMagic) return do_fault(FaultReason::kIvSlotFetch);

    Instr in = decode(word);
    if (in.op == Op::kIllegal) return do_fault(FaultReason::kIllegalInstruction);

    u32 this_pc = pc_;
    u32 next_pc = pc_ + 4;
    bool taken = false;
    u32 target = 0;
    u64 cost = 1;

    switch (in.op) {
      case Op::kAdd: wr(in.rd, rs1v(in) + rs2v(in)); break;
      case Op::kSub: wr(in.rd, rs1v(in) - rs2v(in)); break;
      case Op::kSll: wr(in.rd, rs1v(in) << (rs2v(in) & 31)); break;
      case Op::kSlt: wr(in.rd, static_cast<i32>(rs1v(in)) < static_cast<i32>(rs2v(in)) ? 1 : 0); break;
      case Op::kSltu: wr(in.rd, rs1v(in) < rs2v(in) ? 1 : 0); break;
      case Op::kXor: wr(in.rd, rs1v(in) ^ rs2v(in)); break;
      case Op::kSrl: wr(in.rd, rs1v(in) >> (rs2v(in) & 31)); break;
      case Op::kSra: wr(in.rd, static_cast<u32>(static_cast<i32>(rs1v(in)) >> (rs2v(in) & 31))); break;
      case Op::kOr: wr(in.rd, rs1v(in) | rs2v(in)); break;
      case Op::kAnd: wr(in.rd, rs1v(in) & rs2v(in)); break;
      case Op::kMul: wr(in.rd, rs1v(in) * rs2v(in)); break;
      case Op::kMulh:
        wr(in.rd, static_cast<u32>((static_cast<i64>(static_cast<i32>(rs1v(in))) *
                                    static_cast<i64>(static_cast<i32>(rs2v(in)))) >> 32));
        break;
      case Op::kMulhsu:
        wr(in.rd, static_cast<u32>((static_cast<i64>(static_cast<i32>(rs1v(in))) *
                                    static_cast<i64>(rs2v(in))) >> 32));
        break;
      case Op::kMulhu:
        wr(in.rd, static_cast<u32>((static_cast<u64>(rs1v(in)) * static_cast<u64>(rs2v(in))) >> 32));
        break;
      case Op::kDiv: {
        i32 a = static_cast<i32>(rs1v(in)), b = static_cast<i32>(rs2v(in));
        wr(in.rd, b == 0 ? 0xFFFFFFFFu
                         : (a == INT32_MIN && b == -1) ? static_cast<u32>(INT32_MIN)
                                                       : static_cast<u32>(a / b));
        break;
      }
      case Op::kDivu: wr(in.rd, rs2v(in) == 0 ? 0xFFFFFFFFu : rs1v(in) / rs2v(in)); break;
      case Op::kRem: {
        i32 a = static_cast<i32>(rs1v(in)), b = static_cast<i32>(rs2v(in));
        wr(in.rd, b == 0 ? static_cast<u32>(a)
                         : (a == INT32_MIN && b == -1) ? 0 : static_cast<u32>(a % b));
        break;
      }
      case Op::kRemu: wr(in.rd, rs2v(in) == 0 ? rs1v(in) : rs1v(in) % rs2v(in)); break;

      case Op::kAddi: wr(in.rd, rs1v(in) + static_cast<u32>(in.imm)); break;
      case Op::kSlti: wr(in.rd, static_cast<i32>(rs1v(in)) < in.imm ? 1 : 0); break;
      case Op::kSltiu: wr(in.rd, rs1v(in) < static_cast<u32>(in.imm) ? 1 : 0); break;
      case Op::kXori: wr(in.rd, rs1v(in) ^ static_cast<u32>(in.imm)); break;
      case Op::kOri: wr(in.rd, rs1v(in) | static_cast<u32>(in.imm)); break;
      case Op::kAndi: wr(in.rd, rs1v(in) & static_cast<u32>(in.imm)); break;
      case Op::kSlli: wr(in.rd, rs1v(in) << in.imm); break;
      case Op::kSrli: wr(in.rd, rs1v(in) >> in.imm); break;
      case Op::kSrai: wr(in.rd, static_cast<u32>(static_cast<i32>(rs1v(in)) >> in.imm)); break;

      case Op::kLui: wr(in.rd, static_cast<u32>(in.imm) << 12); break;
      case Op::kAuipc: wr(in.rd, this_pc + (static_cast<u32>(in.imm) << 12)); break;

      case Op::kLb: case Op::kLh: case Op::kLw: case Op::kLbu: case Op::kLhu: {
        u32 addr = rs1v(in) + static_cast<u32>(in.imm);
        u32 v;
        if (!load_mem(in.op, addr, v)) return StepStatus::kFault;
        wr(in.rd, v);
        break;
      }
      case Op::kSb: case Op::kSh: case Op::kSw: {
        u32 addr = rs1v(in) + static_cast<u32>(in.imm);
        if (!store_mem(in.op, addr, rs2v(in))) return StepStatus::kFault;
        if (halted_) {  // EXIT hypercall retires this instruction first
          finish_instr(in, this_pc, word, cost, false);
          return StepStatus::kHalted;
        }
        break;
      }

      case Op::kBeq: case Op::kBne: case Op::kBlt: case Op::kBge:
      case Op::kBltu: case Op::kBgeu: {
        bool cond = false;
        u32 a = rs1v(in), b = rs2v(in);
        switch (in.op) {
          case Op::kBeq: cond = a == b; break;
          case Op::kBne: cond = a != b; break;
          case Op::kBlt: cond = static_cast<i32>(a) < static_cast<i32>(b); break;
          case Op::kBge: cond = static_cast<i32>(a) >= static_cast<i32>(b); break;
          case Op::kBltu: cond = a < b; break;
          case Op::kBgeu: cond = a >= b; break;
          default: break;
        }
        if (cond) {
          taken = true;
          target = this_pc + static_cast<u32>(in.imm);
        }
        break;
      }
      case Op::kJal:
        wr(in.rd, this_pc + 4);
        taken = true;
        target = this_pc + static_cast<u32>(in.imm);
        break;
      case Op::kJalr: {
        u32 t = (rs1v(in) + static_cast<u32>(in.imm)) & ~1u;
        wr(in.rd, this_pc + 4);
        taken = true;
        target = t;
        break;
      }

      case Op::kEcall:
        halted_ = true;
        exit_code_ = regs_[10];  // a0
        finish_instr(in, this_pc, word, cost, false);
        return StepStatus::kHalted;

      case Op::kInitBB: {
        u32 addr = rs1v(in);
        if (addr % 4 != 0) return do_fault(FaultReason::kMisalignedAccess, addr);
        if (!in_range(addr, 12)) return do_fault(FaultReason::kOutOfRange, addr);
        auto words = draw_iv_slot_words(rng_);
        for (int i = 0; i < 3; ++i) store_word_nocheck(addr + 4 * i, words[i]);
        exec_state_ = cipher_init(config_, key_, Iv::from_slot_words(words));
        exec_ready_ = true;
        wr(in.rd, addr + 12);
        cost = config_.k_init;
        counters_.exec_inits += 1;
        counters_.retired += 1;
        counters_.cycles += cost;
        bump_region(this_pc, cost, false);
        if (capture_) {
          for (int i = 0; i < 3; ++i) trace_.push_back({this_pc, word, words[i], 0, 0});
        }
        pc_ = next_pc;
        return StepStatus::kContinue;
      }
      case Op::kEncWord: {
        if (!exec_ready_) return do_fault(FaultReason::kEncWordBeforeInit);
        wr(in.rd, cipher_encrypt_word(exec_state_, rs1v(in)));
        break;
      }
      case Op::kEnableDec: pending_ = Pending::kEnable; break;
      case Op::kDisableDec: pending_ = Pending::kDisable; break;

      case Op::kLa:
      case Op::kIllegal:
        return do_fault(FaultReason::kIllegalInstruction);
    }

    if (taken) {
      // Apply the armed decryption toggle, then re-initialise or skip.
      if (pending_ != Pending::kNone) {
        bool want = pending_ == Pending::kEnable;
        pending_ = Pending::kNone;
        if (want != decrypt_on_) {
          decrypt_on_ = want;
          toggles_.push_back({this_pc, decrypt_on_});
        }
      }
      if (decrypt_on_) {
        cost = config_.k_init;
        if (!init_fetch_channel(target)) return StepStatus::kFault;
        next_pc = target + 12;
      } else {
        // Unencrypted execution of prepared code: hop over IV slots at jump
        // targets so architectural behaviour matches the unprepared program.
        if (in_range(target, 4) && load_word_nocheck(target) == kIvSlotMagic)
          next_pc = target + 12;
        else
          next_pc = target;
      }
    }

    finish_instr(in, this_pc, word, cost, taken);
    pc_ = next_pc;
    return StepStatus::kContinue;
  }

  struct RunResult {
    StepStatus status = StepStatus::kContinue;
    FaultReason fault = FaultReason::kNone;
    u32 fault_pc = 0;
    u32 exit_code = 0;
    u64 steps = 0;
  };

  RunResult run(u64 max_steps = 100'000'000) {
    RunResult r;
    for (u64 i = 0; i < max_steps; ++i) {
      StepStatus st = step();
      if (st == StepStatus::kContinue) continue;
      r.status = st;
      r.steps = i + 1;
      r.exit_code = exit_code_;
      r.fault = fault_;
      r.fault_pc = pc_;
      return r;
    }
    r.status = StepStatus::kContinue;  // budget exhausted
    r.steps = max_steps;
    return r;
  }

 private:
  u32 rs1v(const Instr& in) const { return regs_[in.rs1]; }
  u32 rs2v(const Instr& in) const { return regs_[in.rs2]; }
  void wr(u8 rd, u32 v) {
    if (rd != 0) regs_[rd] = v;
  }

  StepStatus do_fault(FaultReason r, u32 = 0) {
    fault_ = r;
    return StepStatus::kFault;
  }

  u32 load_word_nocheck(u32 addr) const {
    size_t o = addr - base_;
    return static_cast<u32>(mem_[o]) | static_cast<u32>(mem_[o + 1]) << 8 |
           static_cast<u32>(mem_[o + 2]) << 16 | static_cast<u32>(mem_[o + 3]) << 24;
  }
  void store_word_nocheck(u32 addr, u32 v) {
    size_t o = addr - base_;
    mem_[o] = static_cast<u8>(v);
    mem_[o + 1] = static_cast<u8>(v >> 8);
    mem_[o + 2] = static_cast<u8>(v >> 16);
    mem_[o + 3] = static_cast<u8>(v >> 24);
  }

  bool load_mem(Op op, u32 addr, u32& out) {
    if (addr >= kMmioRngWord && addr <= kMmioPutchar) {
      if (op != Op::kLw || addr % 4 != 0 || addr != kMmioRngWord) {
        do_fault(FaultReason::kMmioAccess, addr);
        return false;
      }
      out = rng_.next();
      return true;
    }
    u32 len = (op == Op::kLw) ? 4 : (op == Op::kLh || op == Op::kLhu) ? 2 : 1;
    if ((op == Op::kLw && addr % 4) || ((op == Op::kLh || op == Op::kLhu) && addr % 2)) {
      do_fault(FaultReason::kMisalignedAccess, addr);
      return false;
    }
    if (!in_range(addr, len)) {
      do_fault(FaultReason::kOutOfRange, addr);
      return false;
    }
    size_t o = addr - base_;
    switch (op) {
      case Op::kLw: out = load_word_nocheck(addr); break;
      case Op::kLh: out = static_cast<u32>(static_cast<i32>(static_cast<i16>(
                        mem_[o] | mem_[o + 1] << 8))); break;
      case Op::kLhu: out = static_cast<u32>(mem_[o] | mem_[o + 1] << 8); break;
      case Op::kLb: out = static_cast<u32>(static_cast<i32>(static_cast<i8>(mem_[o]))); break;
      case Op::kLbu: out = mem_[o]; break;
      default: break;
    }
    return true;
  }

  bool store_mem(Op op, u32 addr, u32 v) {
    if (addr >= kMmioRngWord && addr <= kMmioPutchar) {
      if (op != Op::kSw || addr % 4 != 0) {
        do_fault(FaultReason::kMmioAccess, addr);
        return false;
      }
      switch (addr) {
        case kMmioTraceCtl: capture_ = (v & 1) != 0; return true;
        case kMmioExit: halted_ = true; exit_code_ = v; return true;
        case kMmioPutchar: output_.push_back(static_cast<char>(v & 0xFF)); return true;
        default: do_fault(FaultReason::kMmioAccess, addr); return false;
      }
    }
    u32 len = (op == Op::kSw) ? 4 : (op == Op::kSh) ? 2 : 1;
    if ((op == Op::kSw && addr % 4) || (op == Op::kSh && addr % 2)) {
      do_fault(FaultReason::kMisalignedAccess, addr);
      return false;
    }
    if (!in_range(addr, len)) {
      do_fault(FaultReason::kOutOfRange, addr);
      return false;
    }
    size_t o = addr - base_;
    switch (op) {
      case Op::kSw: store_word_nocheck(addr, v); break;
      case Op::kSh: mem_[o] = static_cast<u8>(v); mem_[o + 1] = static_cast<u8>(v >> 8); break;
      case Op::kSb: mem_[o] = static_cast<u8>(v); break;
      default: break;
    }
    return true;
  }

  // Reads the 3-word IV at `target` and re-initialises the fetch channel.
  // Initialisation states are memoised per IV: loops re-enter blocks with
  // unchanged IVs, and the warm-up is by far the hottest cipher path.
  bool init_fetch_channel(u32 target) {
    if (target % 4 != 0 || !in_range(target, 12)) {
      do_fault(FaultReason::kIvReadOutOfRange, target);
      return false;
    }
    std::array<u32, 3> w = {load_word_nocheck(target), load_word_nocheck(target + 4),
                            load_word_nocheck(target + 8)};
    Iv iv = Iv::from_slot_words(w);
    counters_.fetch_inits += 1;
    u64 k = fnv1a64(iv.bytes.data(), iv.bytes.size());
    auto it = init_cache_.find(k);
    if (it != init_cache_.end() && it->second.first == iv) {
      fetch_state_ = it->second.second;
      return true;
    }
    fetch_state_ = cipher_init(config_, key_, iv);
    init_cache_[k] = {iv, fetch_state_};
    return true;
  }

  void bump_region(u32 pc, u64 cost, bool taken) {
    for (auto& r : regions_) {
      if (pc >= r.start && pc < r.end) {
        r.counters.retired += 1;
        r.counters.cycles += cost;
        if (taken) r.counters.taken_cf += 1;
        break;
      }
    }
  }

  void finish_instr(const Instr& in, u32 pc, u32 word, u64 cost, bool taken) {
    counters_.retired += 1;
    counters_.cycles += cost;
    if (taken) counters_.taken_cf += 1;
    bump_region(pc, cost, taken);
    if (capture_) record_sample(in, pc, word);
  }

  void record_sample(const Instr& in, u32 pc, u32 word) {
    Sample s;
    s.pc = pc;
    s.insn = word;
    switch (format_of(in.op)) {
      case Format::R:
        s.r0 = regs_[in.rs1]; s.r1 = regs_[in.rs2]; s.r2 = regs_[in.rd];
        break;
      case Format::I:
        s.r0 = regs_[in.rs1]; s.r2 = regs_[in.rd];
        break;
      case Format::S:
      case Format::B:
        s.r0 = regs_[in.rs1]; s.r1 = regs_[in.rs2];
        break;
      case Format::U:
      case Format::J:
        s.r2 = regs_[in.rd];
        break;
      case Format::Sys:
        break;
      case Format::Ext:
        if (in.op == Op::kEncWord) {
          s.r0 = regs_[in.rs1];
          s.r2 = regs_[in.rd];
        }
        break;
    }
    trace_.push_back(s);
  }

  // architectural state
  std::array<u32, 32> regs_{};
  u32 pc_ = 0;
  std::vector<u8> mem_;
  u32 base_ = 0;
  u32 entry_ = 0;
  bool decrypt_on_ = false;
  Pending pending_ = Pending::kNone;
  CipherState fetch_state_;
  CipherState exec_state_;
  bool exec_ready_ = false;
  Key key_;
  CipherConfig config_;
  Xorshift32 rng_;

  // host-side state
  bool halted_ = false;
  FaultReason fault_ = FaultReason::kNone;
  u32 exit_code_ = 0;
  PerfCounters counters_;
  std::string output_;
  bool capture_ = false;
  Trace trace_;
  std::vector<DecToggle> toggles_;
  std::vector<RegionCounter> regions_;
  std::unordered_map<u64, std::pair<Iv, CipherState>> init_cache_;
};

}  // namespace polysim
