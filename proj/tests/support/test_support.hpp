#pragma once

#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "awditkit/generators.hpp"
#include "awditkit/history.hpp"
#include "awditkit/history_io.hpp"

namespace awditkit::test {

inline std::string fixture_path(const std::string& name) {
#ifdef AWDITKIT_TEST_DATA_DIR
  return std::string(AWDITKIT_TEST_DATA_DIR) + "/" + name;
#else
  return "tests/data/" + name;
#endif
}

inline History load_fixture(const std::string& name) {
  std::ifstream f(fixture_path(name), std::ios::binary);
  if (!f) throw std::runtime_error("fixture not found: " + name);
  auto parsed = parse_history(f);
  if (std::holds_alternative<ParseError>(parsed))
    throw std::runtime_error("fixture does not parse: " + name);
  return std::get<History>(std::move(parsed));
}

inline History parse_or_throw(const std::string& text) {
  auto parsed = parse_history(std::string_view(text));
  if (std::holds_alternative<ParseError>(parsed))
    throw std::runtime_error("text does not parse: " +
                             std::string(parse_error_name(std::get<ParseError>(parsed).reason)));
  return std::get<History>(std::move(parsed));
}

struct SamplerSpec {
  std::uint64_t seed = 1;
  std::uint32_t min_sessions = 2;
  std::uint32_t max_sessions = 4;
  std::uint32_t max_committed = 6;
  std::uint32_t max_ops = 4;
  std::uint32_t keys = 4;
  double abort_fraction = 0.15;
  double read_fraction = 0.5;
  double thin_air_fraction = 0.03;
};

/// Unconstrained random histories: reads pick any write of the same key from
/// the whole history (earlier, later, same transaction, aborted) or, rarely, a
/// value never written. Exercises every violation class as well as consistent
/// histories; complements gen_random, whose plain output is consistent by
/// construction.
inline History sample_raw_history(const SamplerSpec& spec) {
  gen_detail::Rng rng(spec.seed);
  std::uint32_t k = rng.range(spec.min_sessions, spec.max_sessions);
  std::uint32_t committed = rng.range(1, spec.max_committed);
  std::uint32_t aborted = rng.unit() < spec.abort_fraction ? 1 : 0;

  struct PlannedOp {
    OpKind kind;
    Key key;
    Value value;  // writes: assigned now; reads: filled in pass two
  };
  struct PlannedTxn {
    std::uint32_t session;
    TxnStatus status;
    std::vector<PlannedOp> ops;
  };

  Value next_value = 1;
  std::vector<PlannedTxn> txns;
  for (std::uint32_t i = 0; i < committed + aborted; ++i) {
    PlannedTxn t;
    t.session = static_cast<std::uint32_t>(rng.below(k));
    t.status = i < committed ? TxnStatus::Committed : TxnStatus::Aborted;
    std::uint32_t ops = rng.range(1, spec.max_ops);
    for (std::uint32_t o = 0; o < ops; ++o) {
      PlannedOp op;
      op.key = static_cast<Key>(rng.below(spec.keys));
      op.kind = rng.unit() < spec.read_fraction ? OpKind::Read : OpKind::Write;
      op.value = op.kind == OpKind::Write ? next_value++ : 0;
      t.ops.push_back(op);
    }
    txns.push_back(std::move(t));
  }

  // Pool of all writes per key, then point reads anywhere into it.
  std::vector<std::vector<Value>> pool(spec.keys);
  for (const PlannedTxn& t : txns)
    for (const PlannedOp& o : t.ops)
      if (o.kind == OpKind::Write) pool[o.key].push_back(o.value);
  for (PlannedTxn& t : txns)
    for (PlannedOp& o : t.ops) {
      if (o.kind != OpKind::Read) continue;
      const auto& candidates = pool[o.key];
      if (candidates.empty() || rng.unit() < spec.thin_air_fraction)
        o.value = next_value++;  // never written
      else
        o.value = candidates[rng.below(candidates.size())];
    }

  std::vector<std::vector<Transaction>> sessions(k);
  OpId next_op = 0;
  TxnId next_id = 1;
  for (PlannedTxn& t : txns) {
    Transaction out;
    out.id = next_id++;
    out.status = t.status;
    for (const PlannedOp& o : t.ops)
      out.ops.push_back(Operation{next_op++, o.kind, o.key, o.value});
    sessions[t.session].push_back(std::move(out));
  }
  while (!sessions.empty() && sessions.back().empty()) sessions.pop_back();
  return History::from_sessions(std::move(sessions));
}

/// Reachability of so ∪ wr by Floyd-Warshall closure; independent of both the
/// vector-clock path and the oracle's per-node BFS.
inline std::vector<std::vector<char>> closure_so_wr(const History& h) {
  auto committed = h.committed();
  const std::size_t m = committed.size();
  std::vector<std::vector<char>> r(m, std::vector<char>(m, 0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j)
      if (i != j && committed[i].session == committed[j].session &&
          committed[i].position < committed[j].position)
        r[i][j] = 1;
    for (const ExtRead& rd : h.ext_reads(committed[i])) {
      std::int32_t w = h.committed_id(rd.writer);
      if (w >= 0) r[w][i] = 1;
    }
  }
  for (std::size_t mid = 0; mid < m; ++mid)
    for (std::size_t a = 0; a < m; ++a)
      if (r[a][mid])
        for (std::size_t b = 0; b < m; ++b)
          if (r[mid][b]) r[a][b] = 1;
  return r;
}

/// SCC partition from a full reachability matrix (mutual reachability).
inline std::vector<std::vector<std::int32_t>> naive_sccs(
    const std::vector<std::vector<char>>& reach) {
  const std::size_t m = reach.size();
  std::vector<std::int32_t> comp(m, -1);
  std::vector<std::vector<std::int32_t>> out;
  for (std::size_t i = 0; i < m; ++i) {
    if (comp[i] >= 0) continue;
    std::vector<std::int32_t> members;
    for (std::size_t j = 0; j < m; ++j)
      if (j == i || (reach[i][j] && reach[j][i])) {
        if (comp[j] < 0) {
          comp[j] = static_cast<std::int32_t>(out.size());
          members.push_back(static_cast<std::int32_t>(j));
        }
      }
    out.push_back(std::move(members));
  }
  return out;
}

/// Triangle detection by boolean matrix squaring: a triangle exists iff some
/// edge (a, b) has A²[a][b] > 0.
inline bool triangle_by_squaring(const UndirectedGraph& g) {
  const std::size_t n = g.node_count;
  std::vector<std::vector<char>> a(n, std::vector<char>(n, 0));
  for (auto [x, y] : g.edges) a[x][y] = a[y][x] = 1;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (!a[i][j]) continue;
      for (std::size_t l = 0; l < n; ++l)
        if (a[i][l] && a[l][j]) return true;
    }
  return false;
}

}  // namespace awditkit::test
