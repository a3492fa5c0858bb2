#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "awditkit/history.hpp"

namespace awditkit {

enum class ReadViolationKind : std::uint8_t {
  ThinAir,
  AbortedRead,
  FutureRead,
  NotOwnWrite,
  NotLatestWrite,
};

inline std::string_view read_violation_name(ReadViolationKind k) {
  switch (k) {
    case ReadViolationKind::ThinAir: return "thin-air";
    case ReadViolationKind::AbortedRead: return "aborted-read";
    case ReadViolationKind::FutureRead: return "future-read";
    case ReadViolationKind::NotOwnWrite: return "not-own-write";
    case ReadViolationKind::NotLatestWrite: return "not-latest-write";
  }
  return "unknown";
}

struct ReadViolation {
  OpId read = 0;
  ReadViolationKind kind = ReadViolationKind::ThinAir;
  std::optional<OpId> culprit;  // the offending write, when one exists
  TxnId txn = 0;
  Key key = 0;
  Value value = 0;
};

/// Checks every read of every committed transaction against the five read
/// consistency axioms: no thin-air reads, no aborted reads, no future reads,
/// observe own writes, observe latest write. A read failing several axioms is
/// reported once, with the first failing kind in that order. Violations come
/// back in (session, so, po) order of the reads.
inline std::vector<ReadViolation> check_read_consistency(const History& h) {
  std::vector<ReadViolation> out;
  // Latest own write per key, stamped per transaction instead of cleared.
  std::vector<std::uint32_t> own_stamp(h.key_slot_count(), 0);
  std::vector<std::uint32_t> own_index(h.key_slot_count(), 0);
  std::uint32_t stamp = 0;

  for (TxnRef t : h.committed()) {
    const Transaction& txn = h.txn(t);
    std::size_t base = h.op_base(t);
    const std::uint32_t op_count = static_cast<std::uint32_t>(txn.ops.size());
    ++stamp;
    // The scan streams over the dense per-op records; the operation structs
    // themselves are only touched when a violation gets reported.
    for (std::uint32_t i = 0; i < op_count; ++i) {
      const History::OpInfo& info = h.op_info(base + i);
      if (info.flags & History::kIsWrite) {
        own_stamp[info.key_slot] = stamp;
        own_index[info.key_slot] = i;
        continue;
      }
      auto report = [&](ReadViolationKind kind, std::optional<OpId> culprit) {
        const Operation& o = txn.ops[i];
        out.push_back(ReadViolation{o.id, kind, culprit, txn.id, o.key, o.value});
      };
      auto write_op_id = [&] {
        return h.txn(h.txn_of_global(info.writer_global)).ops[info.write_index].id;
      };
      if ((info.flags & History::kHasWr) == 0) {
        report(ReadViolationKind::ThinAir, std::nullopt);
        continue;
      }
      if ((info.flags & History::kWriterCommitted) == 0) {
        report(ReadViolationKind::AbortedRead, write_op_id());
        continue;
      }
      bool own = (info.flags & History::kWriterSame) != 0;
      if (own && info.write_index > i) {
        report(ReadViolationKind::FutureRead, write_op_id());
        continue;
      }
      bool has_own_write = own_stamp[info.key_slot] == stamp;
      if (!own) {
        if (has_own_write) {
          report(ReadViolationKind::NotOwnWrite, txn.ops[own_index[info.key_slot]].id);
          continue;
        }
        if ((info.flags & History::kWriteFinal) == 0) {
          report(ReadViolationKind::NotLatestWrite, write_op_id());
          continue;
        }
      } else if (own_index[info.key_slot] != info.write_index) {
        // Reads an own write, but a later own write to the key intervened.
        report(ReadViolationKind::NotLatestWrite, txn.ops[own_index[info.key_slot]].id);
        continue;
      }
    }
  }
  return out;
}

inline std::string format_read_violation(const History& h, const ReadViolation& v) {
  std::string out = "READ-CONSISTENCY ";
  out += read_violation_name(v.kind);
  out += " read=" + std::to_string(v.read);
  out += " txn=" + std::to_string(v.txn);
  out += " key=" + h.key_name(v.key);
  out += " value=" + std::to_string(v.value);
  return out;
}

}  // namespace awditkit
