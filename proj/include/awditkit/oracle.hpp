#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "awditkit/checkers.hpp"
#include "awditkit/history.hpp"
#include "awditkit/read_consistency.hpp"

namespace awditkit {

// Brute-force reference checker. Decides consistency by enumerating candidate
// total commit orders and evaluating the isolation axioms literally over all
// quantified tuples. Deliberately shares nothing with the saturation
// checkers beyond the history model itself.

struct OracleBudget {
  std::uint32_t max_committed_txns = 8;
};

enum class OracleOutcome : std::uint8_t { Consistent, Violation, BudgetExceeded };

struct AxiomFailure {
  enum class Kind : std::uint8_t { SoViolated, WrViolated, AxiomViolated };
  Kind kind = Kind::AxiomViolated;
  Key key = 0;
  TxnId t1 = 0;  // transaction the value was read from
  TxnId t2 = 0;  // transaction whose write is being bypassed
  TxnId t3 = 0;  // reading transaction
  OpId read = 0;

  std::string describe() const {
    switch (kind) {
      case Kind::SoViolated:
        return "commit order contradicts session order: " + std::to_string(t1) + " before " +
               std::to_string(t2);
      case Kind::WrViolated:
        return "commit order contradicts write-read: " + std::to_string(t1) + " before " +
               std::to_string(t2);
      case Kind::AxiomViolated:
        return "axiom instance fails: key=" + std::to_string(key) + " t1=" + std::to_string(t1) +
               " t2=" + std::to_string(t2) + " t3=" + std::to_string(t3) +
               " read=" + std::to_string(read);
    }
    return "";
  }
};

namespace oracle_detail {

/// Reachability over so ∪ wr between committed transactions, by repeated
/// squaring-free BFS per node. Test-scale only.
inline std::vector<std::vector<char>> so_wr_reachability(const History& h) {
  auto committed = h.committed();
  const std::size_t m = committed.size();
  std::vector<std::vector<std::int32_t>> succ(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j)
      if (committed[j].session == committed[i].session)
        succ[i].push_back(static_cast<std::int32_t>(j));
    for (const ExtRead& r : h.ext_reads(committed[i])) {
      std::int32_t w = h.committed_id(r.writer);
      if (w >= 0) succ[w].push_back(static_cast<std::int32_t>(i));
    }
  }
  std::vector<std::vector<char>> reach(m, std::vector<char>(m, 0));
  std::vector<std::int32_t> stack;
  for (std::size_t src = 0; src < m; ++src) {
    stack.assign(succ[src].begin(), succ[src].end());
    while (!stack.empty()) {
      std::int32_t v = stack.back();
      stack.pop_back();
      if (reach[src][v]) continue;
      reach[src][v] = 1;
      for (std::int32_t w : succ[v]) stack.push_back(w);
    }
  }
  return reach;
}

struct RankTable {
  std::vector<std::int32_t> rank;  // committed id -> position in co
};

inline RankTable ranks_of(const History& h, std::span<const TxnRef> co) {
  RankTable t;
  t.rank.assign(h.committed_count(), -1);
  for (std::size_t i = 0; i < co.size(); ++i) t.rank[h.committed_id(co[i])] = static_cast<std::int32_t>(i);
  return t;
}

}  // namespace oracle_detail

/// Evaluates one candidate commit order against a level's axiom, quantifier
/// by quantifier. Returns the first failing tuple, or nothing if the order
/// witnesses consistency.
inline std::optional<AxiomFailure> axiom_violation(const History& h, IsolationLevel level,
                                                   std::span<const TxnRef> co) {
  auto committed = h.committed();
  const std::size_t m = committed.size();
  auto ranks = oracle_detail::ranks_of(h, co);
  auto rank = [&](std::int32_t id) { return ranks.rank[id]; };

  // co must respect session order...
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      if (committed[i].session != committed[j].session) continue;
      std::int32_t a = static_cast<std::int32_t>(i), b = static_cast<std::int32_t>(j);
      if (rank(a) > rank(b))
        return AxiomFailure{AxiomFailure::Kind::SoViolated, 0, h.txn(committed[i]).id,
                            h.txn(committed[j]).id, 0, 0};
    }
  // ...and the write-read relation.
  for (std::size_t i = 0; i < m; ++i)
    for (const ExtRead& r : h.ext_reads(committed[i])) {
      std::int32_t w = h.committed_id(r.writer);
      if (w < 0) continue;
      if (rank(w) > rank(static_cast<std::int32_t>(i)))
        return AxiomFailure{AxiomFailure::Kind::WrViolated, r.key, h.txn(r.writer).id,
                            h.txn(committed[i]).id, 0, r.read_op};
    }

  auto fail = [&](Key x, std::int32_t t1, std::int32_t t2, std::int32_t t3, OpId read) {
    return AxiomFailure{AxiomFailure::Kind::AxiomViolated, x, h.txn(committed[t1]).id,
                        h.txn(committed[t2]).id, h.txn(committed[t3]).id, read};
  };

  if (level == IsolationLevel::RC) {
    // For every pair of reads r po r_x of one transaction: the transaction
    // observed through r must commit before the writer of r_x whenever it
    // also writes the key of r_x.
    for (std::size_t i = 0; i < m; ++i) {
      auto reads = h.ext_reads(committed[i]);
      for (std::size_t b = 0; b < reads.size(); ++b) {
        std::int32_t t1 = h.committed_id(reads[b].writer);
        if (t1 < 0) continue;
        for (std::size_t a = 0; a < b; ++a) {
          std::int32_t t2 = h.committed_id(reads[a].writer);
          if (t2 < 0 || t2 == t1) continue;
          if (!h.writes_key(reads[a].writer, reads[b].key)) continue;
          if (rank(t2) > rank(t1)) return fail(reads[b].key, t1, t2, static_cast<std::int32_t>(i),
                                               reads[b].read_op);
        }
      }
    }
    return std::nullopt;
  }

  // RA quantifies t2 over one-step so ∪ wr predecessors of the reader, CC
  // over all transitive ones.
  std::vector<std::vector<char>> reach;
  if (level == IsolationLevel::CC) reach = oracle_detail::so_wr_reachability(h);

  for (std::size_t i = 0; i < m; ++i) {
    std::unordered_set<std::int32_t> direct_writers;
    for (const ExtRead& r : h.ext_reads(committed[i])) {
      std::int32_t w = h.committed_id(r.writer);
      if (w >= 0) direct_writers.insert(w);
    }
    auto before_t3 = [&](std::int32_t t2) {
      if (level == IsolationLevel::CC) return reach[t2][i] != 0;
      TxnRef a = committed[t2], b = committed[i];
      if (a.session == b.session && a.position < b.position) return true;
      return direct_writers.count(t2) > 0;
    };
    for (const ExtRead& r : h.ext_reads(committed[i])) {
      std::int32_t t1 = h.committed_id(r.writer);
      if (t1 < 0) continue;
      for (std::size_t t2 = 0; t2 < m; ++t2) {
        std::int32_t c2 = static_cast<std::int32_t>(t2);
        if (c2 == t1 || !h.writes_key(committed[t2], r.key)) continue;
        if (!before_t3(c2)) continue;
        if (rank(c2) > rank(t1)) return fail(r.key, t1, c2, static_cast<std::int32_t>(i), r.read_op);
      }
    }
  }
  return std::nullopt;
}

inline bool axiom_holds(const History& h, IsolationLevel level, std::span<const TxnRef> co) {
  return !axiom_violation(h, level, co).has_value();
}

/// True when the level's axiom directly forces `before` to commit ahead of
/// `after` in every witnessing commit order (the premise of the axiom holds
/// for some reader). Used to certify minimality of inferred edges.
inline bool axiom_requires_edge(const History& h, IsolationLevel level, TxnRef before,
                                TxnRef after) {
  std::int32_t u = h.committed_id(before), v = h.committed_id(after);
  if (u < 0 || v < 0 || u == v) return false;
  auto committed = h.committed();

  if (level == IsolationLevel::RC) {
    for (std::size_t i = 0; i < committed.size(); ++i) {
      auto reads = h.ext_reads(committed[i]);
      for (std::size_t b = 0; b < reads.size(); ++b) {
        if (h.committed_id(reads[b].writer) != v) continue;
        if (!h.writes_key(before, reads[b].key)) continue;
        for (std::size_t a = 0; a < b; ++a)
          if (h.committed_id(reads[a].writer) == u) return true;
      }
    }
    return false;
  }

  std::vector<std::vector<char>> reach;
  if (level == IsolationLevel::CC) reach = oracle_detail::so_wr_reachability(h);
  for (std::size_t i = 0; i < committed.size(); ++i) {
    bool one_step = false;
    if (committed[i].session == before.session && before.position < committed[i].position)
      one_step = true;
    for (const ExtRead& r : h.ext_reads(committed[i]))
      if (h.committed_id(r.writer) == u) one_step = true;
    bool linked = level == IsolationLevel::CC ? reach[u][i] != 0 : one_step;
    if (!linked) continue;
    for (const ExtRead& r : h.ext_reads(committed[i]))
      if (h.committed_id(r.writer) == v && h.writes_key(before, r.key)) return true;
  }
  return false;
}

/// Exhaustive consistency decision: read consistency plus a backtracking
/// enumeration of the so ∪ wr-respecting permutations of the committed
/// transactions, accepting as soon as one satisfies the axiom.
inline OracleOutcome oracle_check(const History& h, IsolationLevel level,
                                  const OracleBudget& budget = {}) {
  if (h.committed_count() > budget.max_committed_txns) return OracleOutcome::BudgetExceeded;
  if (!check_read_consistency(h).empty()) return OracleOutcome::Violation;

  auto committed = h.committed();
  const std::size_t m = committed.size();
  if (m == 0) return OracleOutcome::Consistent;

  // Immediate predecessors suffice for extension pruning: a node may be
  // placed once its session predecessor and all its writers are placed.
  std::vector<std::vector<std::int32_t>> preds(m);
  std::vector<std::int32_t> last_of_session(h.session_count(), -1);
  for (std::size_t i = 0; i < m; ++i) {
    std::int32_t& prev = last_of_session[committed[i].session];
    if (prev >= 0) preds[i].push_back(prev);
    prev = static_cast<std::int32_t>(i);
    for (const ExtRead& r : h.ext_reads(committed[i])) {
      std::int32_t w = h.committed_id(r.writer);
      if (w >= 0) preds[i].push_back(w);
    }
  }

  std::vector<TxnRef> order;
  order.reserve(m);
  std::vector<char> placed(m, 0);

  auto ready = [&](std::size_t i) {
    if (placed[i]) return false;
    for (std::int32_t p : preds[i])
      if (!placed[p]) return false;
    return true;
  };

  // Lexicographic backtracking over extension-respecting permutations.
  auto search = [&](auto&& self) -> bool {
    if (order.size() == m) return axiom_holds(h, level, order);
    for (std::size_t i = 0; i < m; ++i) {
      if (!ready(i)) continue;
      placed[i] = 1;
      order.push_back(committed[i]);
      if (self(self)) return true;
      order.pop_back();
      placed[i] = 0;
    }
    return false;
  };

  return search(search) ? OracleOutcome::Consistent : OracleOutcome::Violation;
}

}  // namespace awditkit
