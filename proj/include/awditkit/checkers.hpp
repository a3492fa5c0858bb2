#pragma once

#include <cassert>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include "awditkit/commit_graph.hpp"
#include "awditkit/history.hpp"
#include "awditkit/read_consistency.hpp"
#include "awditkit/vector_clock.hpp"

namespace awditkit {

enum class IsolationLevel : std::uint8_t { RC, RA, CC };

inline std::string_view level_name(IsolationLevel l) {
  switch (l) {
    case IsolationLevel::RC: return "rc";
    case IsolationLevel::RA: return "ra";
    case IsolationLevel::CC: return "cc";
  }
  return "?";
}

inline std::optional<IsolationLevel> parse_level(std::string_view s) {
  if (s == "rc") return IsolationLevel::RC;
  if (s == "ra") return IsolationLevel::RA;
  if (s == "cc") return IsolationLevel::CC;
  return std::nullopt;
}

struct NonRepeatableRead {
  TxnId txn = 0;
  Key key = 0;
  TxnId writer_first = 0;
  TxnId writer_second = 0;
};

/// Outcome of one isolation check. Consistent verdicts carry a witnessing
/// total commit order extending so ∪ wr and every inferred edge. Violations
/// carry the evidence of the first failing phase; when the caller opted to
/// continue past read-consistency errors, any commit cycles found on the
/// cleaned history ride along in `cycles`.
struct Verdict {
  enum class Kind : std::uint8_t { Consistent, ReadConsistency, NonRepeatableRead, CoCycle };

  Kind kind = Kind::Consistent;
  std::vector<TxnRef> commit_order;
  std::vector<ReadViolation> read_violations;
  std::optional<NonRepeatableRead> non_repeatable;
  std::vector<CycleWitness> cycles;

  bool consistent() const { return kind == Kind::Consistent; }
};

inline std::string_view verdict_kind_name(Verdict::Kind k) {
  switch (k) {
    case Verdict::Kind::Consistent: return "consistent";
    case Verdict::Kind::ReadConsistency: return "read-consistency";
    case Verdict::Kind::NonRepeatableRead: return "non-repeatable-read";
    case Verdict::Kind::CoCycle: return "co-cycle";
  }
  return "?";
}

struct CheckOptions {
  /// Drop violating reads from wr and run the commit phase anyway. The
  /// verdict stays a read-consistency violation; extra cycle witnesses found
  /// on the cleaned history are attached.
  bool continue_after_read_errors = false;
};

using DroppedReads = std::unordered_set<OpId>;

/// Total order extending every edge of an acyclic commit graph; unconstrained
/// nodes resolve by (session, so-position) for deterministic output.
inline std::vector<TxnRef> linearize(const CommitGraph& g) {
  auto order = kahn_order(g);
  assert(order.size() == g.node_count() && "linearize requires an acyclic graph");
  std::vector<TxnRef> out;
  out.reserve(order.size());
  for (std::int32_t v : order) out.push_back(g.node(v));
  return out;
}

/// Repeatable reads: no committed transaction reads one key from two distinct
/// external transactions. Returns the first offender in (session, so, po)
/// order. Assumes read consistency was already verified.
inline std::optional<NonRepeatableRead> check_repeatable_reads(
    const History& h, const DroppedReads* dropped = nullptr) {
  struct Cell {
    std::int32_t writer = -1;
    std::uint32_t stamp = 0;
  };
  std::vector<Cell> last_writer(h.key_slot_count());
  std::vector<HotRead> scratch;
  std::uint32_t stamp = 0;
  for (std::size_t i = 0; i < h.committed_count(); ++i) {
    ++stamp;
    for (const HotRead& r : detail::select_reads(h, i, dropped, scratch)) {
      if (r.writer_node < 0) continue;
      Cell& cell = last_writer[r.key_slot];
      if (cell.stamp != stamp) {
        cell.stamp = stamp;
        cell.writer = r.writer_node;
      } else if (cell.writer != r.writer_node) {
        // Resolve ids only on the (rare) violation path.
        TxnRef t = h.committed_ref(i);
        const ExtRead* offending = nullptr;
        for (const ExtRead& er : h.ext_reads_of(i))
          if (er.key_slot == r.key_slot) offending = &er;
        Key key = offending != nullptr ? offending->key : 0;
        return NonRepeatableRead{h.txn(t).id, key, h.txn(h.committed_ref(cell.writer)).id,
                                 h.txn(h.committed_ref(r.writer_node)).id};
      }
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Saturation: build the minimal commit relation forced by each level's axiom
// on top of so ∪ wr. A verdict then only requires an acyclicity check.
// ---------------------------------------------------------------------------

/// Read committed saturation. For each committed reader, scanning its reads
/// in reverse program order with a two-slot stack of upcoming writers per key
/// yields, per observed transaction, exactly the orderings the axiom forces.
inline CommitGraph saturate_rc(const History& h, const DroppedReads* dropped = nullptr) {
  CommitGraph g = build_base_graph(h, dropped);

  struct Slot {
    std::int32_t older = -1;
    std::int32_t newer = -1;
    std::uint32_t stamp = 0;
  };
  std::vector<Slot> upcoming(h.key_slot_count());  // two po-earliest future writers per key
  std::vector<std::uint32_t> writer_stamp(h.committed_count(), 0);
  std::vector<HotRead> scratch;
  std::vector<char> first_of_writer;
  std::vector<std::uint32_t> read_keys;  // key slots with a stack entry, insertion order
  std::uint32_t stamp = 0;

  for (std::size_t i = 0; i < h.committed_count(); ++i) {
    std::span<const HotRead> reads = detail::select_reads(h, i, dropped, scratch);
    if (reads.empty()) continue;

    ++stamp;
    first_of_writer.assign(reads.size(), 0);
    for (std::size_t j = 0; j < reads.size(); ++j) {
      if (reads[j].writer_node < 0) continue;
      std::uint32_t& ws = writer_stamp[reads[j].writer_node];
      if (ws != stamp) {
        ws = stamp;
        first_of_writer[j] = 1;
      }
    }

    read_keys.clear();
    for (std::size_t j = reads.size(); j-- > 0;) {
      std::int32_t t2 = reads[j].writer_node;
      if (t2 < 0) continue;
      if (first_of_writer[j]) {
        auto infer = [&](const Slot& slot) {
          std::int32_t t1 = slot.newer;
          if (t1 == t2) t1 = slot.older;
          if (t1 >= 0) g.add_co_edge(t2, t1);
        };
        auto written = h.keys_written_slots(h.committed_ref(t2));
        if (written.size() <= read_keys.size()) {
          for (std::uint32_t x : written)
            if (upcoming[x].stamp == stamp) infer(upcoming[x]);
        } else {
          for (std::uint32_t x : read_keys)
            if (std::binary_search(written.begin(), written.end(), x)) infer(upcoming[x]);
        }
      }
      Slot& slot = upcoming[reads[j].key_slot];
      if (slot.stamp != stamp) {
        slot.stamp = stamp;
        slot.older = -1;
        slot.newer = t2;
        read_keys.push_back(reads[j].key_slot);
      } else if (slot.newer != t2) {
        slot.older = slot.newer;
        slot.newer = t2;
      }
    }
  }
  return g;
}

/// Read atomic saturation. Callers must have verified repeatable reads, which
/// makes the writer of each (reader, key) pair unique.
inline CommitGraph saturate_ra(const History& h, const DroppedReads* dropped = nullptr) {
  CommitGraph g = build_base_graph(h, dropped);
  const std::uint32_t nslots = h.key_slot_count();

  struct KeyCell {
    std::int32_t writer = -1;
    std::uint32_t stamp = 0;
  };
  std::vector<KeyCell> last_write(nslots);  // per session: latest writer of the key
  std::vector<KeyCell> read_from(nslots);   // per reader: unique writer of the key
  std::vector<std::uint32_t> writer_stamp(h.committed_count(), 0);
  std::vector<std::uint32_t> read_keys;
  std::vector<std::int32_t> writers;
  std::vector<HotRead> hot_scratch;
  std::uint32_t txn_stamp = 0;

  for (std::uint32_t s = 0; s < h.session_count(); ++s) {
    const std::uint32_t session_stamp = s + 1;
    const auto& session = h.sessions()[s];
    for (std::uint32_t p = 0; p < session.size(); ++p) {
      TxnRef t3{s, p};
      std::int32_t i = h.committed_id(t3);
      if (i < 0) continue;

      ++txn_stamp;
      read_keys.clear();
      writers.clear();
      for (const HotRead& r : detail::select_reads(h, static_cast<std::size_t>(i), dropped,
                                                   hot_scratch)) {
        if (r.writer_node < 0) continue;
        KeyCell& cell = read_from[r.key_slot];
        if (cell.stamp != txn_stamp) {
          cell.stamp = txn_stamp;
          cell.writer = r.writer_node;
          read_keys.push_back(r.key_slot);
        }
        std::uint32_t& ws = writer_stamp[r.writer_node];
        if (ws != txn_stamp) {
          ws = txn_stamp;
          writers.push_back(r.writer_node);
        }
      }

      // so case: the session's latest prior writer of x precedes the writer read.
      for (std::uint32_t x : read_keys) {
        std::int32_t t1 = read_from[x].writer;
        const KeyCell& lw = last_write[x];
        if (lw.stamp == session_stamp && lw.writer != t1) g.add_co_edge(lw.writer, t1);
      }

      // wr case: every transaction read from precedes the writers of the other
      // keys it also writes. Intersect through the smaller side.
      for (std::int32_t t2 : writers) {
        auto written = h.keys_written_slots(g.node(t2));
        if (written.size() <= read_keys.size()) {
          for (std::uint32_t x : written) {
            const KeyCell& cell = read_from[x];
            if (cell.stamp == txn_stamp && cell.writer != t2) g.add_co_edge(t2, cell.writer);
          }
        } else {
          for (std::uint32_t x : read_keys) {
            if (!std::binary_search(written.begin(), written.end(), x)) continue;
            std::int32_t t1 = read_from[x].writer;
            if (t1 != t2) g.add_co_edge(t2, t1);
          }
        }
      }

      for (std::uint32_t x : h.keys_written_slots(t3)) {
        last_write[x].writer = i;
        last_write[x].stamp = session_stamp;
      }
    }
  }
  return g;
}

/// Causal consistency saturation. Happens-before clocks bound, per session,
/// the writers a reader causally depends on; cursors over per-(key, session)
/// writer lists advance monotonically within one outer session.
inline std::variant<CommitGraph, CycleWitness> saturate_cc(const History& h,
                                                           const DroppedReads* dropped = nullptr) {
  CommitGraph g = build_base_graph(h, dropped);
  auto hb_or_cycle = compute_hb_from(h, g);
  if (std::holds_alternative<CycleWitness>(hb_or_cycle))
    return std::get<CycleWitness>(std::move(hb_or_cycle));
  const HbTable& hb = std::get<HbTable>(hb_or_cycle);

  auto committed = h.committed();

  // Per-key writer lists grouped into per-session runs, flattened into two
  // arrays; each run carries a cursor that only moves forward within one
  // outer session (the bounds it chases grow monotonically with so).
  struct Run {
    std::uint32_t session;
    std::uint32_t begin;  // into writers_flat
    std::uint32_t end;
    std::uint32_t cursor;
    std::uint32_t stamp;
  };
  std::vector<std::uint32_t> runs_of_slot(h.key_slot_count() + 1, 0);
  std::vector<Run> runs;
  std::vector<std::pair<std::int32_t, std::int32_t>> writers_flat;  // (so-position, node)
  {
    std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> per_slot(h.key_slot_count());
    std::vector<std::uint32_t> run_count(h.key_slot_count(), 0);
    std::vector<std::uint32_t> last_session(h.key_slot_count(), ~0u);
    for (std::size_t i = 0; i < committed.size(); ++i) {
      TxnRef t = committed[i];
      for (std::uint32_t x : h.keys_written_slots(t)) {
        per_slot[x].emplace_back(static_cast<std::int32_t>(t.position),
                                 static_cast<std::int32_t>(i));
        if (last_session[x] != t.session) {
          last_session[x] = t.session;
          ++run_count[x];
        }
      }
    }
    for (std::uint32_t x = 0; x < h.key_slot_count(); ++x)
      runs_of_slot[x + 1] = runs_of_slot[x] + run_count[x];
    runs.reserve(runs_of_slot.back());
    for (std::uint32_t x = 0; x < h.key_slot_count(); ++x) {
      std::uint32_t run_session = ~0u;
      for (auto [pos, node] : per_slot[x]) {
        std::uint32_t s = committed[node].session;
        if (s != run_session) {
          run_session = s;
          runs.push_back(Run{s, static_cast<std::uint32_t>(writers_flat.size()),
                             static_cast<std::uint32_t>(writers_flat.size()), 0, ~0u});
        }
        writers_flat.emplace_back(pos, node);
        ++runs.back().end;
      }
    }
  }

  std::vector<HotRead> hot_scratch;
  for (std::uint32_t s = 0; s < h.session_count(); ++s) {
    const auto& session = h.sessions()[s];
    for (std::uint32_t p = 0; p < session.size(); ++p) {
      TxnRef t3{s, p};
      std::int32_t i = h.committed_id(t3);
      if (i < 0) continue;
      auto bounds = hb.row(i);
      for (const HotRead& r : detail::select_reads(h, static_cast<std::size_t>(i), dropped,
                                                   hot_scratch)) {
        if (r.writer_node < 0) continue;
        std::int32_t t1 = r.writer_node;
        for (std::uint32_t ri = runs_of_slot[r.key_slot]; ri < runs_of_slot[r.key_slot + 1];
             ++ri) {
          Run& run = runs[ri];
          if (run.stamp != s) {
            run.stamp = s;
            run.cursor = run.begin;
          }
          std::int32_t bound = bounds[run.session];
          while (run.cursor < run.end && writers_flat[run.cursor].first <= bound) ++run.cursor;
          if (run.cursor > run.begin) {
            std::int32_t t2 = writers_flat[run.cursor - 1].second;
            if (t2 != t1) g.add_co_edge(t2, t1);
          }
        }
      }
    }
  }
  return g;
}

namespace detail {

struct ReadPhase {
  std::vector<ReadViolation> violations;
  DroppedReads dropped;
  bool stop = false;
};

inline ReadPhase run_read_phase(const History& h, const CheckOptions& opts) {
  ReadPhase phase;
  phase.violations = check_read_consistency(h);
  if (phase.violations.empty()) return phase;
  if (!opts.continue_after_read_errors) {
    phase.stop = true;
    return phase;
  }
  for (const ReadViolation& v : phase.violations) phase.dropped.insert(v.read);
  return phase;
}

inline Verdict graph_verdict(CommitGraph&& g) {
  Verdict v;
  // One Kahn pass decides acyclicity and doubles as the witnessing order; the
  // SCC machinery only runs on the violation path.
  auto order = kahn_order(g);
  if (order.size() == g.node_count()) {
    v.kind = Verdict::Kind::Consistent;
    v.commit_order.reserve(order.size());
    for (std::int32_t n : order) v.commit_order.push_back(g.node(n));
    return v;
  }
  auto sccs = find_sccs(g);
  for (const auto& scc : sccs)
    if (scc.size() > 1) v.cycles.push_back(extract_cycle(g, scc));
  v.kind = Verdict::Kind::CoCycle;
  return v;
}

/// Folds read-phase findings into the commit-phase verdict: read violations
/// dominate, commit cycles found after dropping the bad reads ride along.
inline Verdict merge_read_phase(ReadPhase&& phase, Verdict&& graph) {
  if (phase.violations.empty()) return std::move(graph);
  Verdict v;
  v.kind = Verdict::Kind::ReadConsistency;
  v.read_violations = std::move(phase.violations);
  v.non_repeatable = graph.non_repeatable;
  v.cycles = std::move(graph.cycles);
  return v;
}

}  // namespace detail

inline Verdict check_rc(const History& h, const CheckOptions& opts = {}) {
  auto phase = detail::run_read_phase(h, opts);
  if (phase.stop) {
    Verdict v;
    v.kind = Verdict::Kind::ReadConsistency;
    v.read_violations = std::move(phase.violations);
    return v;
  }
  const DroppedReads* dropped = phase.dropped.empty() ? nullptr : &phase.dropped;
  Verdict graph = detail::graph_verdict(saturate_rc(h, dropped));
  return detail::merge_read_phase(std::move(phase), std::move(graph));
}

inline Verdict check_ra(const History& h, const CheckOptions& opts = {}) {
  auto phase = detail::run_read_phase(h, opts);
  if (phase.stop) {
    Verdict v;
    v.kind = Verdict::Kind::ReadConsistency;
    v.read_violations = std::move(phase.violations);
    return v;
  }
  const DroppedReads* dropped = phase.dropped.empty() ? nullptr : &phase.dropped;
  if (auto nrr = check_repeatable_reads(h, dropped)) {
    Verdict v;
    v.kind = Verdict::Kind::NonRepeatableRead;
    v.non_repeatable = nrr;
    return detail::merge_read_phase(std::move(phase), std::move(v));
  }
  Verdict graph = detail::graph_verdict(saturate_ra(h, dropped));
  return detail::merge_read_phase(std::move(phase), std::move(graph));
}

inline Verdict check_cc(const History& h, const CheckOptions& opts = {}) {
  auto phase = detail::run_read_phase(h, opts);
  if (phase.stop) {
    Verdict v;
    v.kind = Verdict::Kind::ReadConsistency;
    v.read_violations = std::move(phase.violations);
    return v;
  }
  const DroppedReads* dropped = phase.dropped.empty() ? nullptr : &phase.dropped;
  auto graph_or_cycle = saturate_cc(h, dropped);
  Verdict graph;
  if (std::holds_alternative<CycleWitness>(graph_or_cycle)) {
    // so ∪ wr itself is cyclic; saturation cannot meaningfully continue.
    graph.kind = Verdict::Kind::CoCycle;
    graph.cycles.push_back(std::get<CycleWitness>(std::move(graph_or_cycle)));
  } else {
    graph = detail::graph_verdict(std::get<CommitGraph>(std::move(graph_or_cycle)));
  }
  return detail::merge_read_phase(std::move(phase), std::move(graph));
}

/// Linear-time read atomic check for one-session histories, where the commit
/// order is forced to be the session order: scan it once, tracking the most
/// recent writer of each key.
inline Verdict check_ra_one_session(const History& h, const CheckOptions& opts = {}) {
  if (h.session_count() != 1)
    throw std::invalid_argument("check_ra_one_session requires a one-session history");

  auto phase = detail::run_read_phase(h, opts);
  if (phase.stop) {
    Verdict v;
    v.kind = Verdict::Kind::ReadConsistency;
    v.read_violations = std::move(phase.violations);
    return v;
  }
  const DroppedReads* dropped = phase.dropped.empty() ? nullptr : &phase.dropped;

  Verdict graph;
  if (auto nrr = check_repeatable_reads(h, dropped)) {
    graph.kind = Verdict::Kind::NonRepeatableRead;
    graph.non_repeatable = nrr;
    return detail::merge_read_phase(std::move(phase), std::move(graph));
  }

  auto committed = h.committed();
  std::vector<std::int32_t> latest_writer(h.key_slot_count(), -1);
  // Session-order chain from `from` up to `to`, closed by `to -> from`.
  auto so_cycle = [&](std::int32_t from, std::int32_t to, EdgeLabel closing) {
    CycleWitness w;
    for (std::int32_t n = from; n < to; ++n)
      w.edges.push_back(CycleEdge{committed[n], committed[n + 1], EdgeLabel::So});
    w.edges.push_back(CycleEdge{committed[to], committed[from], closing});
    if (closing == EdgeLabel::CoInferred) w.non_sowr_edge_count = 1;
    return w;
  };

  std::vector<HotRead> hot_scratch;
  for (std::size_t i = 0; i < committed.size(); ++i) {
    for (const HotRead& r : detail::select_reads(h, i, dropped, hot_scratch)) {
      if (r.writer_node < 0) continue;
      std::int32_t w = r.writer_node;
      if (w > static_cast<std::int32_t>(i)) {
        // Read from a session-later transaction: so ∪ wr is already cyclic.
        graph.kind = Verdict::Kind::CoCycle;
        graph.cycles.push_back(so_cycle(static_cast<std::int32_t>(i), w, EdgeLabel::Wr));
        return detail::merge_read_phase(std::move(phase), std::move(graph));
      }
      std::int32_t lw = latest_writer[r.key_slot];
      if (lw >= 0 && lw != w) {
        // A later writer of the key intervened between the writer read and the
        // reader; it is forced before that writer, against the session order.
        graph.kind = Verdict::Kind::CoCycle;
        graph.cycles.push_back(so_cycle(w, lw, EdgeLabel::CoInferred));
        return detail::merge_read_phase(std::move(phase), std::move(graph));
      }
    }
    for (std::uint32_t x : h.keys_written_slots(committed[i]))
      latest_writer[x] = static_cast<std::int32_t>(i);
  }

  graph.kind = Verdict::Kind::Consistent;
  graph.commit_order.assign(committed.begin(), committed.end());
  return detail::merge_read_phase(std::move(phase), std::move(graph));
}

/// Dispatch; one-session read atomic checks use the linear fast path.
inline Verdict check(const History& h, IsolationLevel level, const CheckOptions& opts = {}) {
  switch (level) {
    case IsolationLevel::RC: return check_rc(h, opts);
    case IsolationLevel::RA:
      return h.session_count() == 1 ? check_ra_one_session(h, opts) : check_ra(h, opts);
    case IsolationLevel::CC: return check_cc(h, opts);
  }
  throw std::logic_error("unreachable");
}

}  // namespace awditkit
