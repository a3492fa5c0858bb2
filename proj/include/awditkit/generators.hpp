#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "awditkit/history.hpp"

namespace awditkit {

struct UndirectedGraph {
  std::uint32_t node_count = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // canonical (small, large)

  void add_edge(std::uint32_t a, std::uint32_t b) {
    if (a == b) throw std::invalid_argument("self-loops are not allowed");
    if (a > b) std::swap(a, b);
    auto e = std::make_pair(a, b);
    auto it = std::lower_bound(edges.begin(), edges.end(), e);
    if (it == edges.end() || *it != e) edges.insert(it, e);
  }

  std::vector<std::vector<std::uint32_t>> adjacency() const {
    std::vector<std::vector<std::uint32_t>> adj(node_count);
    for (auto [a, b] : edges) {
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    for (auto& n : adj) std::sort(n.begin(), n.end());
    return adj;
  }

  static UndirectedGraph sample(std::uint32_t nodes, double edge_prob, std::uint64_t seed);
};

/// Cubic-time brute force over node triples.
inline bool has_triangle(const UndirectedGraph& g) {
  std::vector<std::vector<char>> adj(g.node_count, std::vector<char>(g.node_count, 0));
  for (auto [a, b] : g.edges) adj[a][b] = adj[b][a] = 1;
  for (std::uint32_t a = 0; a < g.node_count; ++a)
    for (std::uint32_t b = a + 1; b < g.node_count; ++b) {
      if (!adj[a][b]) continue;
      for (std::uint32_t c = b + 1; c < g.node_count; ++c)
        if (adj[b][c] && adj[a][c]) return true;
    }
  return false;
}

enum class Anomaly : std::uint8_t {
  ThinAir,
  AbortedRead,
  FutureRead,
  FracturedRead,
  CausalityViolation,
};

struct RandomSpec {
  std::uint64_t seed = 1;
  std::uint32_t sessions = 4;
  std::uint32_t txns = 64;
  std::uint32_t ops_min = 1;
  std::uint32_t ops_max = 6;
  std::uint32_t keys = 8;
  double read_fraction = 0.5;
  std::set<Anomaly> inject;
};

struct GeneratorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace gen_detail {

class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  std::uint64_t next() { return gen_(); }
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }
  std::uint32_t range(std::uint32_t lo, std::uint32_t hi) {
    return lo + static_cast<std::uint32_t>(below(hi - lo + 1));
  }
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
  std::mt19937_64 gen_;
};

}  // namespace gen_detail

inline UndirectedGraph UndirectedGraph::sample(std::uint32_t nodes, double edge_prob,
                                               std::uint64_t seed) {
  gen_detail::Rng rng(seed);
  UndirectedGraph g;
  g.node_count = nodes;
  for (std::uint32_t a = 0; a < nodes; ++a)
    for (std::uint32_t b = a + 1; b < nodes; ++b)
      if (rng.unit() < edge_prob) g.edges.emplace_back(a, b);
  return g;
}

/// Seeded random history. Without injections the output satisfies causal
/// consistency by construction: every read observes the newest write visible
/// in its transaction's causal past, where newest means largest creation
/// index; the creation order itself then witnesses consistency. An initial
/// transaction seeds every key so reads are always possible; reading it is
/// sound because the read itself puts it into the reader's past.
inline History gen_random(const RandomSpec& spec, std::vector<std::string>* log = nullptr) {
  const std::uint32_t k = spec.sessions;
  const bool wants_txns = spec.txns > 0 || !spec.inject.empty();
  if (wants_txns && k == 0) throw GeneratorError("sessions must be positive");
  if (wants_txns && spec.keys == 0) throw GeneratorError("keys must be positive");
  if (spec.txns > 0 && (spec.ops_min == 0 || spec.ops_min > spec.ops_max))
    throw GeneratorError("ops range must satisfy 1 <= min <= max");
  if (spec.read_fraction < 0.0 || spec.read_fraction > 1.0)
    throw GeneratorError("read fraction must lie in [0, 1]");
  if (spec.inject.count(Anomaly::FracturedRead) > 0 && (k < 2 || spec.keys < 2))
    throw GeneratorError("fractured-read injection needs >= 2 sessions and >= 2 keys");
  if (spec.inject.count(Anomaly::CausalityViolation) > 0 && (k < 3 || spec.keys < 2))
    throw GeneratorError("causality-violation injection needs >= 3 sessions and >= 2 keys");

  gen_detail::Rng rng(spec.seed);
  std::vector<std::vector<Transaction>> sessions(wants_txns ? k : 0);

  OpId next_op = 0;
  Value next_value = 1;
  TxnId next_txn = 0;
  std::uint64_t next_creation = 1;

  struct WriterEntry {
    std::int32_t pos;
    std::uint64_t creation;
    Value value;
  };
  // Per session: key -> so-ordered final writes, and per-transaction clocks
  // (self-inclusive) aligned with session positions.
  std::vector<std::unordered_map<Key, std::vector<WriterEntry>>> writers(sessions.size());
  std::vector<std::vector<std::vector<std::int32_t>>> clocks(sessions.size());
  std::vector<std::vector<std::int32_t>> view(sessions.size(),
                                              std::vector<std::int32_t>(k, -1));

  auto close_txn = [&](std::uint32_t s, Transaction&& t,
                       const std::vector<std::int32_t>& clock_at_close) {
    std::int32_t pos = static_cast<std::int32_t>(sessions[s].size());
    std::uint64_t creation = next_creation++;
    std::unordered_map<Key, Value> finals;
    for (const Operation& o : t.ops)
      if (o.kind == OpKind::Write) finals[o.key] = o.value;
    if (t.committed())
      for (const Operation& o : t.ops)
        if (o.kind == OpKind::Write && finals.at(o.key) == o.value)
          writers[s][o.key].push_back(WriterEntry{pos, creation, o.value});
    std::vector<std::int32_t> clock = clock_at_close;
    clock[s] = pos;
    clocks[s].push_back(clock);
    sessions[s].push_back(std::move(t));
    view[s] = std::move(clock);
  };

  // Initial transaction: one write per key, on session 0.
  if (wants_txns) {
    Transaction init;
    init.id = next_txn++;
    for (Key x = 0; x < spec.keys; ++x)
      init.ops.push_back(Operation{next_op++, OpKind::Write, x, next_value++});
    close_txn(0, std::move(init), std::vector<std::int32_t>(k, -1));
  }

  for (std::uint32_t n = 0; n < spec.txns; ++n) {
    std::uint32_t s = static_cast<std::uint32_t>(rng.below(k));
    Transaction t;
    t.id = next_txn++;
    std::uint32_t count = rng.range(spec.ops_min, spec.ops_max);
    std::vector<std::int32_t> work = view[s];
    std::unordered_map<Key, Value> own;

    for (std::uint32_t c = 0; c < count; ++c) {
      Key x = static_cast<Key>(rng.below(spec.keys));
      bool is_read = rng.unit() < spec.read_fraction;
      if (!is_read) {
        Value v = next_value++;
        t.ops.push_back(Operation{next_op++, OpKind::Write, x, v});
        own[x] = v;
        continue;
      }
      if (auto it = own.find(x); it != own.end()) {
        t.ops.push_back(Operation{next_op++, OpKind::Read, x, it->second});
        continue;
      }
      // Newest visible writer across sessions; the seeding transaction is the
      // fallback of last resort (creation 1, entry on session 0 position 0).
      std::uint32_t best_session = 0;
      std::int32_t best_pos = 0;
      std::uint64_t best_creation = 0;
      Value best_value = 0;
      for (std::uint32_t s2 = 0; s2 < k; ++s2) {
        auto wit = writers[s2].find(x);
        if (wit == writers[s2].end()) continue;
        const auto& list = wit->second;
        std::int32_t bound = work[s2];
        auto pos_it = std::upper_bound(list.begin(), list.end(), bound,
                                       [](std::int32_t b, const WriterEntry& e) { return b < e.pos; });
        if (pos_it == list.begin()) continue;
        const WriterEntry& e = *(pos_it - 1);
        if (e.creation > best_creation) {
          best_creation = e.creation;
          best_session = s2;
          best_pos = e.pos;
          best_value = e.value;
        }
      }
      if (best_creation == 0) {
        // Nothing visible yet: fall back to the seed write for the key.
        best_session = 0;
        best_pos = 0;
        best_value = sessions[0][0].ops[x].value;
      }
      t.ops.push_back(Operation{next_op++, OpKind::Read, x, best_value});
      const auto& wclock = clocks[best_session][best_pos];
      for (std::uint32_t s2 = 0; s2 < k; ++s2)
        if (wclock[s2] > work[s2]) work[s2] = wclock[s2];
    }
    close_txn(s, std::move(t), work);
  }

  auto note = [&](std::string line) {
    if (log != nullptr) log->push_back(std::move(line));
  };

  for (Anomaly a : spec.inject) {
    switch (a) {
      case Anomaly::ThinAir: {
        Key x = static_cast<Key>(rng.below(spec.keys));
        Value ghost = next_value++;
        Transaction t;
        t.id = next_txn++;
        t.ops.push_back(Operation{next_op++, OpKind::Read, x, ghost});
        note("injected thin-air read: txn " + std::to_string(t.id) + " reads unwritten value " +
             std::to_string(ghost));
        close_txn(0, std::move(t), view[0]);
        break;
      }
      case Anomaly::AbortedRead: {
        Key x = static_cast<Key>(rng.below(spec.keys));
        Value v = next_value++;
        Transaction wtxn;
        wtxn.id = next_txn++;
        wtxn.status = TxnStatus::Aborted;
        wtxn.ops.push_back(Operation{next_op++, OpKind::Write, x, v});
        TxnId writer_id = wtxn.id;
        close_txn(0, std::move(wtxn), view[0]);
        Transaction rtxn;
        rtxn.id = next_txn++;
        rtxn.ops.push_back(Operation{next_op++, OpKind::Read, x, v});
        note("injected aborted read: txn " + std::to_string(rtxn.id) + " reads aborted txn " +
             std::to_string(writer_id));
        close_txn(k > 1 ? 1 : 0, std::move(rtxn), view[k > 1 ? 1 : 0]);
        break;
      }
      case Anomaly::FutureRead: {
        Key x = static_cast<Key>(rng.below(spec.keys));
        Value v = next_value++;
        Transaction t;
        t.id = next_txn++;
        t.ops.push_back(Operation{next_op++, OpKind::Read, x, v});
        t.ops.push_back(Operation{next_op++, OpKind::Write, x, v});
        note("injected future read: txn " + std::to_string(t.id) +
             " reads its own later write");
        close_txn(0, std::move(t), view[0]);
        break;
      }
      case Anomaly::FracturedRead: {
        Key x = static_cast<Key>(rng.below(spec.keys));
        Key y = static_cast<Key>((x + 1 + rng.below(spec.keys - 1)) % spec.keys);
        Value va = next_value++, vb = next_value++, vc = next_value++;
        Transaction ta;
        ta.id = next_txn++;
        ta.ops.push_back(Operation{next_op++, OpKind::Write, x, va});
        Transaction tb;
        tb.id = next_txn++;
        tb.ops.push_back(Operation{next_op++, OpKind::Write, x, vb});
        tb.ops.push_back(Operation{next_op++, OpKind::Write, y, vc});
        Transaction tc;
        tc.id = next_txn++;
        tc.ops.push_back(Operation{next_op++, OpKind::Read, x, va});
        tc.ops.push_back(Operation{next_op++, OpKind::Read, y, vc});
        note("injected fractured read: txn " + std::to_string(tc.id) + " sees txn " +
             std::to_string(tb.id) + " only partially");
        close_txn(0, std::move(ta), view[0]);
        close_txn(0, std::move(tb), view[0]);
        close_txn(1, std::move(tc), view[1]);
        break;
      }
      case Anomaly::CausalityViolation: {
        Key x = static_cast<Key>(rng.below(spec.keys));
        Key y = static_cast<Key>((x + 1 + rng.below(spec.keys - 1)) % spec.keys);
        Value va = next_value++, vb = next_value++, vc = next_value++;
        Transaction ta;
        ta.id = next_txn++;
        ta.ops.push_back(Operation{next_op++, OpKind::Write, x, va});
        Transaction tb;
        tb.id = next_txn++;
        tb.ops.push_back(Operation{next_op++, OpKind::Write, x, vb});
        Transaction tc;
        tc.id = next_txn++;
        tc.ops.push_back(Operation{next_op++, OpKind::Read, x, vb});
        tc.ops.push_back(Operation{next_op++, OpKind::Write, y, vc});
        Transaction td;
        td.id = next_txn++;
        td.ops.push_back(Operation{next_op++, OpKind::Read, y, vc});
        td.ops.push_back(Operation{next_op++, OpKind::Read, x, va});
        note("injected causality violation: txn " + std::to_string(td.id) +
             " observes txn " + std::to_string(tc.id) + " but misses txn " + std::to_string(tb.id));
        close_txn(0, std::move(ta), view[0]);
        close_txn(0, std::move(tb), view[0]);
        close_txn(1, std::move(tc), view[1]);
        close_txn(2, std::move(td), view[2]);
        break;
      }
    }
  }

  return History::from_sessions(std::move(sessions));
}

namespace gen_detail {

// Reduction keys: node a's own key is a itself, the per-edge key of writer a
// observed by reader b is V + a*V + b.
inline Key own_key(std::uint32_t a) { return a; }
inline Key edge_key(std::uint32_t nodes, std::uint32_t a, std::uint32_t b) {
  return static_cast<Key>(nodes) + static_cast<Key>(a) * nodes + b;
}

inline Transaction reduction_write_txn(const UndirectedGraph& g,
                                       const std::vector<std::uint32_t>& nbrs, std::uint32_t a,
                                       TxnId id, OpId& next_op, bool with_edge_keys) {
  Transaction t;
  t.id = id;
  for (std::uint32_t b : nbrs) {
    t.ops.push_back(Operation{next_op++, OpKind::Write, own_key(b), a});
    if (with_edge_keys)
      t.ops.push_back(Operation{next_op++, OpKind::Write, edge_key(g.node_count, a, b), a});
  }
  t.ops.push_back(Operation{next_op++, OpKind::Write, own_key(a), a});
  return t;
}

inline Transaction reduction_read_txn(const UndirectedGraph& g,
                                      const std::vector<std::uint32_t>& nbrs, std::uint32_t a,
                                      TxnId id, OpId& next_op, bool with_edge_keys) {
  Transaction t;
  t.id = id;
  if (with_edge_keys)
    for (std::uint32_t b : nbrs)
      t.ops.push_back(Operation{next_op++, OpKind::Read, edge_key(g.node_count, b, a), b});
  for (std::uint32_t b : nbrs)
    t.ops.push_back(Operation{next_op++, OpKind::Read, own_key(b), b});
  return t;
}

}  // namespace gen_detail

/// Triangle reduction with every transaction in its own session. A triangle
/// in g forces contradictory commit orderings between two write transactions;
/// without one the history is even causally consistent.
inline History gen_range_reduction(const UndirectedGraph& g) {
  auto adj = g.adjacency();
  std::vector<std::vector<Transaction>> sessions;
  OpId next_op = 0;
  for (std::uint32_t a = 0; a < g.node_count; ++a)
    sessions.push_back({gen_detail::reduction_write_txn(g, adj[a], a, a, next_op, true)});
  for (std::uint32_t a = 0; a < g.node_count; ++a) {
    if (adj[a].empty()) continue;
    sessions.push_back(
        {gen_detail::reduction_read_txn(g, adj[a], a, g.node_count + a, next_op, true)});
  }
  return History::from_sessions(std::move(sessions));
}

/// Two-session variant without the per-edge keys: all write transactions on
/// one session, all read transactions on the other. Read atomic holds iff the
/// graph is triangle-free.
inline History gen_ra_reduction(const UndirectedGraph& g) {
  auto adj = g.adjacency();
  if (g.node_count == 0) return History::from_sessions({});
  std::vector<std::vector<Transaction>> sessions(2);
  OpId next_op = 0;
  for (std::uint32_t a = 0; a < g.node_count; ++a)
    sessions[0].push_back(gen_detail::reduction_write_txn(g, adj[a], a, a, next_op, false));
  for (std::uint32_t a = 0; a < g.node_count; ++a) {
    if (adj[a].empty()) continue;
    sessions[1].push_back(
        gen_detail::reduction_read_txn(g, adj[a], a, g.node_count + a, next_op, false));
  }
  if (sessions[1].empty()) sessions.pop_back();
  return History::from_sessions(std::move(sessions));
}

/// One-session variant: all write transactions first, then all read
/// transactions. Read committed holds iff the graph is triangle-free.
inline History gen_rc_reduction(const UndirectedGraph& g) {
  auto adj = g.adjacency();
  if (g.node_count == 0) return History::from_sessions({});
  std::vector<std::vector<Transaction>> sessions(1);
  OpId next_op = 0;
  for (std::uint32_t a = 0; a < g.node_count; ++a)
    sessions[0].push_back(gen_detail::reduction_write_txn(g, adj[a], a, a, next_op, true));
  for (std::uint32_t a = 0; a < g.node_count; ++a) {
    if (adj[a].empty()) continue;
    sessions[0].push_back(
        gen_detail::reduction_read_txn(g, adj[a], a, g.node_count + a, next_op, true));
  }
  return History::from_sessions(std::move(sessions));
}

}  // namespace awditkit
