#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace awditkit {

using OpId = std::uint64_t;
using TxnId = std::uint64_t;
using Key = std::uint64_t;
using Value = std::uint64_t;

enum class OpKind : std::uint8_t { Read, Write };
enum class TxnStatus : std::uint8_t { Committed, Aborted };

struct Operation {
  OpId id = 0;
  OpKind kind = OpKind::Read;
  Key key = 0;
  Value value = 0;
};

/// A transaction: ordered operations (vector index = program order) plus
/// commit status. Aborted transactions keep their session slot; their writes
/// stay observable for aborted-read detection.
struct Transaction {
  TxnId id = 0;
  TxnStatus status = TxnStatus::Committed;
  std::vector<Operation> ops;

  bool committed() const { return status == TxnStatus::Committed; }
};

/// Canonical transaction handle: (session, position within session).
/// Positions count aborted transactions too, so comparing two refs of the
/// same session decides session order in O(1).
struct TxnRef {
  std::uint32_t session = 0;
  std::uint32_t position = 0;

  friend bool operator==(TxnRef a, TxnRef b) {
    return a.session == b.session && a.position == b.position;
  }
  friend bool operator!=(TxnRef a, TxnRef b) { return !(a == b); }
  friend bool operator<(TxnRef a, TxnRef b) {
    return a.session != b.session ? a.session < b.session : a.position < b.position;
  }
};

/// Resolved write-read entry for one read operation.
struct WrSource {
  TxnRef writer;
  TxnId writer_txn = 0;
  OpId write_op = 0;
  std::uint32_t write_index = 0;  // po index of the write in its transaction
  bool write_is_final = false;    // last write of its transaction to this key
};

/// One external read of a committed transaction (writer is a different
/// transaction), kept in po order of the reads. writer_node is the writer's
/// committed id, or -1 when the writer aborted.
struct ExtRead {
  Key key = 0;
  std::uint32_t key_slot = 0;
  std::int32_t writer_node = -1;
  TxnRef writer;
  OpId read_op = 0;
};

/// Compact form of ExtRead for the scanning passes.
struct HotRead {
  std::uint32_t key_slot = 0;
  std::int32_t writer_node = -1;
};

/// Immutable transactional history: sessions of ordered transactions plus the
/// write-read relation inferred from unique values. Construct through
/// from_sessions() (or the parser) and share freely across threads afterwards.
/// Construction resolves everything the checkers touch per operation into
/// dense arrays; the check loops never hash.
class History {
public:
  History() = default;

  /// Builds a history from raw sessions, inferring wr from unique (key, value)
  /// writes. Callers must supply unique txn ids, op ids, and write values;
  /// these are asserted, not reported (the text parser validates user input).
  /// `named_keys` maps interned ids of non-numeric key tokens to their names.
  static History from_sessions(std::vector<std::vector<Transaction>> sessions,
                               std::unordered_map<Key, std::string> named_keys = {}) {
    History h;
    h.sessions_ = std::move(sessions);
    h.key_names_ = std::move(named_keys);
    h.build();
    return h;
  }

  // -- shape ---------------------------------------------------------------

  std::uint32_t session_count() const { return static_cast<std::uint32_t>(sessions_.size()); }
  std::size_t txn_count() const { return txn_total_; }
  std::size_t op_count() const { return op_count_; }
  std::size_t key_universe() const { return key_slots_.size(); }
  std::size_t aborted_count() const { return txn_total_ - committed_.size(); }

  const std::vector<std::vector<Transaction>>& sessions() const { return sessions_; }

  const Transaction& txn(TxnRef t) const { return sessions_[t.session][t.position]; }

  std::optional<TxnRef> find_txn(TxnId id) const {
    auto it = txn_by_id_.find(id);
    if (it == txn_by_id_.end()) return std::nullopt;
    return it->second;
  }

  // -- committed transactions ----------------------------------------------

  /// Committed transactions in (session, so) order; aborted ones never appear.
  std::span<const TxnRef> committed() const { return committed_; }
  std::size_t committed_count() const { return committed_.size(); }

  /// Dense id of a committed transaction, -1 for aborted ones.
  std::int32_t committed_id(TxnRef t) const { return committed_id_[global_index(t)]; }
  TxnRef committed_ref(std::size_t id) const { return committed_[id]; }

  // -- derived relations ---------------------------------------------------

  const WrSource* wr_source(OpId read) const {
    auto it = wr_.find(read);
    return it == wr_.end() ? nullptr : &it->second;
  }

  /// External reads of a committed transaction, po-ordered. Internal reads
  /// (writer == reader) and thin-air reads are excluded.
  std::span<const ExtRead> ext_reads(TxnRef t) const {
    std::int32_t id = committed_id(t);
    if (id < 0) return {};
    return ext_reads_of(static_cast<std::size_t>(id));
  }

  std::span<const ExtRead> ext_reads_of(std::size_t committed_node) const {
    return std::span<const ExtRead>(er_data_.data() + er_offsets_[committed_node],
                                    er_offsets_[committed_node + 1] - er_offsets_[committed_node]);
  }

  std::span<const HotRead> hot_reads_of(std::size_t committed_node) const {
    return std::span<const HotRead>(er_hot_.data() + er_offsets_[committed_node],
                                    er_offsets_[committed_node + 1] - er_offsets_[committed_node]);
  }

  std::size_t op_count_of(TxnRef t) const {
    std::size_t g = global_index(t);
    return op_base_[g + 1] - op_base_[g];
  }

  /// Transaction-level wr edges of t: one (writer, key) pair per external
  /// read, in po order of the reads.
  std::vector<std::pair<TxnRef, Key>> txn_wr_edges(TxnRef t) const {
    std::vector<std::pair<TxnRef, Key>> out;
    for (const ExtRead& r : ext_reads(t)) out.emplace_back(r.writer, r.key);
    return out;
  }

  /// Keys with at least one write in t, sorted ascending.
  std::span<const Key> keys_written(TxnRef t) const {
    std::size_t g = global_index(t);
    return std::span<const Key>(kw_data_.data() + kw_offsets_[g],
                                kw_offsets_[g + 1] - kw_offsets_[g]);
  }

  /// Same key set as dense slots, sorted ascending by slot.
  std::span<const std::uint32_t> keys_written_slots(TxnRef t) const {
    std::size_t g = global_index(t);
    return std::span<const std::uint32_t>(kws_data_.data() + kw_offsets_[g],
                                          kw_offsets_[g + 1] - kw_offsets_[g]);
  }

  bool writes_key(TxnRef t, Key k) const {
    auto ks = keys_written(t);
    return std::binary_search(ks.begin(), ks.end(), k);
  }

  bool writes_key_slot(TxnRef t, std::uint32_t slot) const {
    auto ks = keys_written_slots(t);
    return std::binary_search(ks.begin(), ks.end(), slot);
  }

  /// Dense interning of the distinct keys, in first-appearance order.
  std::uint32_t key_slot(Key k) const { return key_slots_.at(k); }
  std::uint32_t key_slot_count() const { return static_cast<std::uint32_t>(key_slots_.size()); }

  // -- per-operation resolution (dense, for the linear passes) --------------

  struct OpInfo {
    std::int32_t writer_global = -1;   // global txn index of the wr source
    std::uint32_t write_index = 0;     // po index of that write
    std::uint32_t key_slot = 0;
    std::uint8_t flags = 0;            // OpFlag bits below
  };
  enum OpFlag : std::uint8_t {
    kHasWr = 1,
    kWriterCommitted = 2,
    kWriterSame = 4,
    kWriteFinal = 8,   // the wr source is its transaction's last write to the key
    kIsWrite = 16,
  };

  /// Base slot of a transaction's ops in the dense per-op arrays.
  std::size_t op_base(TxnRef t) const { return op_base_[global_index(t)]; }
  const OpInfo& op_info(std::size_t slot) const { return op_info_[slot]; }
  TxnRef txn_of_global(std::size_t g) const { return global_refs_[g]; }

  // -- key rendering ---------------------------------------------------------

  /// Original token of a key: interned name if the key came from a non-numeric
  /// token, its decimal form otherwise.
  std::string key_name(Key k) const {
    auto it = key_names_.find(k);
    return it == key_names_.end() ? std::to_string(k) : it->second;
  }

  const std::unordered_map<Key, std::string>& named_keys() const { return key_names_; }

private:
  std::size_t global_index(TxnRef t) const { return session_offsets_[t.session] + t.position; }

  void build() {
    session_offsets_.assign(sessions_.size() + 1, 0);
    for (std::size_t s = 0; s < sessions_.size(); ++s)
      session_offsets_[s + 1] = session_offsets_[s] + sessions_[s].size();
    txn_total_ = session_offsets_.back();

    committed_id_.assign(txn_total_, -1);
    global_refs_.assign(txn_total_, TxnRef{});
    op_base_.assign(txn_total_ + 1, 0);
    committed_.clear();
    op_count_ = 0;

    struct WriteLoc {
      std::int32_t txn_global;
      std::uint32_t index;
    };
    // (key, value) -> producing write; uniqueness is a model invariant.
    std::unordered_map<Key, std::unordered_map<Value, WriteLoc>> writes_by_kv;

    for (std::uint32_t s = 0; s < sessions_.size(); ++s) {
      for (std::uint32_t p = 0; p < sessions_[s].size(); ++p) {
        TxnRef ref{s, p};
        std::size_t g = global_index(ref);
        const Transaction& t = sessions_[s][p];
        assert(!t.ops.empty() && "transactions must contain at least one operation");
        global_refs_[g] = ref;
        [[maybe_unused]] bool fresh_txn = txn_by_id_.emplace(t.id, ref).second;
        assert(fresh_txn && "duplicate transaction id");
        if (t.committed()) {
          committed_id_[g] = static_cast<std::int32_t>(committed_.size());
          committed_.push_back(ref);
        }
        op_base_[g] = op_count_;
        op_count_ += t.ops.size();
        for (std::uint32_t i = 0; i < t.ops.size(); ++i) {
          const Operation& o = t.ops[i];
          key_slots_.emplace(o.key, static_cast<std::uint32_t>(key_slots_.size()));
          if (o.kind == OpKind::Write) {
            [[maybe_unused]] bool fresh = writes_by_kv[o.key]
                                              .emplace(o.value, WriteLoc{static_cast<std::int32_t>(g), i})
                                              .second;
            assert(fresh && "duplicate (key, value) write");
          }
        }
      }
    }
    op_base_[txn_total_] = op_count_;

    // Final write per (transaction, key) and the per-op dense resolution.
    op_info_.assign(op_count_, OpInfo{});
    std::vector<char> write_final(op_count_, 0);
    {
      std::vector<std::uint32_t> last_idx(key_slots_.size(), 0);
      std::vector<std::uint32_t> last_stamp(key_slots_.size(), 0);
      std::uint32_t stamp = 0;
      kw_offsets_.assign(txn_total_ + 1, 0);
      std::vector<std::pair<Key, std::uint32_t>> kw_scratch;  // (key, final op index)
      for (std::size_t g = 0; g < txn_total_; ++g) {
        const Transaction& t = txn(global_refs_[g]);
        ++stamp;
        kw_scratch.clear();
        for (std::uint32_t i = 0; i < t.ops.size(); ++i) {
          const Operation& o = t.ops[i];
          std::uint32_t slot = key_slots_.at(o.key);
          op_info_[op_base_[g] + i].key_slot = slot;
          if (o.kind != OpKind::Write) continue;
          op_info_[op_base_[g] + i].flags |= kIsWrite;
          if (last_stamp[slot] != stamp) {
            last_stamp[slot] = stamp;
            kw_scratch.emplace_back(o.key, i);
            last_idx[slot] = static_cast<std::uint32_t>(kw_scratch.size() - 1);
          } else {
            kw_scratch[last_idx[slot]] = {o.key, i};
          }
        }
        std::sort(kw_scratch.begin(), kw_scratch.end());
        kw_offsets_[g + 1] = kw_scratch.size();
        for (auto& [k, idx] : kw_scratch) {
          write_final[op_base_[g] + idx] = 1;
          kw_data_.push_back(k);
          kws_data_.push_back(key_slots_.at(k));
        }
      }
      for (std::size_t g = 0; g < txn_total_; ++g) kw_offsets_[g + 1] += kw_offsets_[g];
      // Slot lists sort independently of the key lists.
      for (std::size_t g = 0; g < txn_total_; ++g)
        std::sort(kws_data_.begin() + kw_offsets_[g], kws_data_.begin() + kw_offsets_[g + 1]);
    }

    // wr: every read maps to the unique matching write, if one exists.
    wr_.reserve(op_count_ / 2);
    for (std::size_t g = 0; g < txn_total_; ++g) {
      const Transaction& t = txn(global_refs_[g]);
      for (std::uint32_t i = 0; i < t.ops.size(); ++i) {
        const Operation& o = t.ops[i];
        if (o.kind != OpKind::Read) continue;
        auto kit = writes_by_kv.find(o.key);
        if (kit == writes_by_kv.end()) continue;
        auto vit = kit->second.find(o.value);
        if (vit == kit->second.end()) continue;
        const WriteLoc& w = vit->second;
        TxnRef wref = global_refs_[w.txn_global];
        const Transaction& wtxn = txn(wref);
        OpInfo& info = op_info_[op_base_[g] + i];
        info.writer_global = w.txn_global;
        info.write_index = w.index;
        info.flags |= kHasWr;
        if (wtxn.committed()) info.flags |= kWriterCommitted;
        if (static_cast<std::size_t>(w.txn_global) == g) info.flags |= kWriterSame;
        if (write_final[op_base_[w.txn_global] + w.index]) info.flags |= kWriteFinal;
        wr_.emplace(o.id, WrSource{wref, wtxn.id, wtxn.ops[w.index].id, w.index,
                                   write_final[op_base_[w.txn_global] + w.index] != 0});
      }
    }

    // External reads of committed transactions, po order.
    er_offsets_.assign(committed_.size() + 1, 0);
    for (std::size_t id = 0; id < committed_.size(); ++id) {
      std::size_t g = global_index(committed_[id]);
      const Transaction& t = txn(committed_[id]);
      for (std::uint32_t i = 0; i < t.ops.size(); ++i) {
        const Operation& o = t.ops[i];
        const OpInfo& info = op_info_[op_base_[g] + i];
        if (o.kind != OpKind::Read || (info.flags & kHasWr) == 0 || (info.flags & kWriterSame))
          continue;
        TxnRef wref = global_refs_[info.writer_global];
        std::int32_t wnode = committed_id_[info.writer_global];
        er_data_.push_back(ExtRead{o.key, info.key_slot, wnode, wref, o.id});
        er_hot_.push_back(HotRead{info.key_slot, wnode});
        ++er_offsets_[id + 1];
      }
    }
    for (std::size_t id = 0; id < committed_.size(); ++id) er_offsets_[id + 1] += er_offsets_[id];
    // er_data_ was appended txn by txn in po order, matching the offsets.
  }

  std::vector<std::vector<Transaction>> sessions_;
  std::unordered_map<Key, std::string> key_names_;

  std::vector<std::size_t> session_offsets_;
  std::size_t txn_total_ = 0;
  std::size_t op_count_ = 0;

  std::vector<TxnRef> committed_;
  std::vector<std::int32_t> committed_id_;
  std::vector<TxnRef> global_refs_;
  std::unordered_map<TxnId, TxnRef> txn_by_id_;
  std::unordered_map<Key, std::uint32_t> key_slots_;

  std::unordered_map<OpId, WrSource> wr_;
  std::vector<std::size_t> op_base_;
  std::vector<OpInfo> op_info_;

  std::vector<std::size_t> kw_offsets_;
  std::vector<Key> kw_data_;
  std::vector<std::uint32_t> kws_data_;
  std::vector<std::size_t> er_offsets_;
  std::vector<ExtRead> er_data_;
  std::vector<HotRead> er_hot_;
};

}  // namespace awditkit
