#pragma once

#include <cassert>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "awditkit/commit_graph.hpp"
#include "awditkit/history.hpp"

namespace awditkit {

/// Per-session latest-predecessor clock. entry[s] is the so-position of the
/// so-latest transaction of session s that happens before the owner, or -1
/// when no such transaction exists. Entries of the same session share a
/// position scale, so the pointwise so-maximum is an integer maximum.
struct VectorClock {
  std::vector<std::int32_t> entries;

  static VectorClock bottom(std::size_t k) {
    VectorClock v;
    v.entries.assign(k, -1);
    return v;
  }

  friend bool operator==(const VectorClock& a, const VectorClock& b) {
    return a.entries == b.entries;
  }
};

inline VectorClock vc_join(const VectorClock& a, const VectorClock& b) {
  assert(a.entries.size() == b.entries.size() && "vector clocks must share the session count");
  VectorClock out = a;
  for (std::size_t i = 0; i < out.entries.size(); ++i)
    if (b.entries[i] > out.entries[i]) out.entries[i] = b.entries[i];
  return out;
}

/// Happens-before clocks for every committed transaction, indexed by the
/// history's committed ids. row(t)[s] is the so-position of the so-latest
/// transaction of session s strictly happening before t (-1 if none).
class HbTable {
public:
  HbTable(std::size_t nodes, std::uint32_t sessions)
      : sessions_(sessions), flat_(nodes * sessions, -1) {}

  std::uint32_t session_count() const { return sessions_; }

  std::span<const std::int32_t> row(std::size_t node) const {
    return std::span<const std::int32_t>(flat_.data() + node * sessions_, sessions_);
  }

  VectorClock clock(std::size_t node) const {
    auto r = row(node);
    VectorClock v;
    v.entries.assign(r.begin(), r.end());
    return v;
  }

  std::span<std::int32_t> mutable_row(std::size_t node) {
    return std::span<std::int32_t>(flat_.data() + node * sessions_, sessions_);
  }

private:
  std::uint32_t sessions_;
  std::vector<std::int32_t> flat_;
};

/// Computes happens-before clocks over an already-built so ∪ wr skeleton, or
/// a cycle witness when the relation is cyclic. Clocks of wr predecessors
/// join in with the predecessor itself included, so a transaction read from
/// is part of the reader's past.
inline std::variant<HbTable, CycleWitness> compute_hb_from(const History& h,
                                                           const CommitGraph& base) {
  auto sorted = topo_sort(base);
  if (std::holds_alternative<CycleWitness>(sorted))
    return std::get<CycleWitness>(std::move(sorted));

  const auto& order = std::get<std::vector<std::int32_t>>(sorted);
  const std::uint32_t k = h.session_count();
  const std::size_t m = base.node_count();
  HbTable hb(m, k);

  // wr predecessors as one compact adjacency block.
  std::vector<std::size_t> pred_off(m + 1, 0);
  for (std::size_t v = 0; v < m; ++v)
    base.for_each_out(v, [&](std::int32_t to, EdgeLabel label) {
      if (label == EdgeLabel::Wr) ++pred_off[to + 1];
    });
  for (std::size_t v = 0; v < m; ++v) pred_off[v + 1] += pred_off[v];
  std::vector<std::int32_t> preds(pred_off[m]);
  {
    std::vector<std::size_t> cursor(pred_off.begin(), pred_off.end() - 1);
    for (std::size_t v = 0; v < m; ++v)
      base.for_each_out(v, [&](std::int32_t to, EdgeLabel label) {
        if (label == EdgeLabel::Wr) preds[cursor[to]++] = static_cast<std::int32_t>(v);
      });
  }

  // Running per-session clock, self-inclusive for the session's own entry.
  std::vector<std::int32_t> session_clock(static_cast<std::size_t>(k) * k, -1);
  for (std::int32_t node : order) {
    TxnRef t = base.node(node);
    auto row = hb.mutable_row(node);
    const std::int32_t* own = session_clock.data() + static_cast<std::size_t>(t.session) * k;
    std::copy(own, own + k, row.begin());
    for (std::size_t p = pred_off[node]; p < pred_off[node + 1]; ++p) {
      TxnRef pt = base.node(preds[p]);
      std::int32_t ppos = static_cast<std::int32_t>(pt.position);
      // A predecessor already inside the row's bound contributes nothing:
      // clocks are transitively closed, so seeing its position implies seeing
      // its entire past.
      if (ppos <= row[pt.session]) continue;
      auto prow = hb.row(preds[p]);
      for (std::uint32_t s = 0; s < k; ++s)
        if (prow[s] > row[s]) row[s] = prow[s];
      row[pt.session] = ppos;
    }
    std::int32_t* sc = session_clock.data() + static_cast<std::size_t>(t.session) * k;
    std::copy(row.begin(), row.end(), sc);
    sc[t.session] = static_cast<std::int32_t>(t.position);
  }
  return hb;
}

inline std::variant<HbTable, CycleWitness> compute_hb(
    const History& h, const std::unordered_set<OpId>* dropped = nullptr) {
  return compute_hb_from(h, build_base_graph(h, dropped));
}

}  // namespace awditkit
