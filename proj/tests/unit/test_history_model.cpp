#include <catch2/catch_amalgamated.hpp>

#include "awditkit/history.hpp"
#include "support/test_support.hpp"

using namespace awditkit;
using test::load_fixture;
using test::parse_or_throw;

TEST_CASE("txn_wr_edges lists external writers in read order") {
  History h = load_fixture("causal_stale_read.hist");
  // txn 4 reads key 1 from txn 3, then key 0 from txn 1
  TxnRef t4 = *h.find_txn(4);
  auto edges = h.txn_wr_edges(t4);
  REQUIRE(edges.size() == 2);
  CHECK(h.txn(edges[0].first).id == 3);
  CHECK(edges[0].second == 1);
  CHECK(h.txn(edges[1].first).id == 1);
  CHECK(edges[1].second == 0);
}

TEST_CASE("txn_wr_edges is empty for write-only and self-reading transactions") {
  History h = parse_or_throw(
      "awdit-history v1\n"
      "session 0\n"
      "txn 1 c\n"
      "w 0 1\n"
      "w 1 2\n"
      "txn 2 c\n"
      "w 2 3\n"
      "r 2 3\n");
  CHECK(h.txn_wr_edges(*h.find_txn(1)).empty());
  CHECK(h.txn_wr_edges(*h.find_txn(2)).empty());  // internal read excluded
}

TEST_CASE("keys_written has set semantics") {
  History h = load_fixture("rc_cycle.hist");
  auto t1 = *h.find_txn(1);
  auto ks = h.keys_written(t1);
  CHECK(std::vector<Key>(ks.begin(), ks.end()) == std::vector<Key>{0, 1});

  History dup = parse_or_throw(
      "awdit-history v1\n"
      "session 0\n"
      "txn 1 c\n"
      "w 0 1\n"
      "w 0 2\n"
      "txn 2 c\n"
      "r 5 7\n");  // read-only transaction; key never written
  auto kd = dup.keys_written(*dup.find_txn(1));
  CHECK(std::vector<Key>(kd.begin(), kd.end()) == std::vector<Key>{0});
  CHECK(dup.keys_written(*dup.find_txn(2)).empty());
}

TEST_CASE("committed iteration follows session then session order") {
  History h = load_fixture("rc_cycle.hist");
  std::vector<TxnId> ids;
  for (TxnRef t : h.committed()) ids.push_back(h.txn(t).id);
  CHECK(ids == std::vector<TxnId>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("aborted transactions keep their slot but never iterate") {
  History h = parse_or_throw(
      "awdit-history v1\n"
      "session 0\n"
      "txn 1 c\n"
      "w 0 1\n"
      "txn 2 a\n"
      "w 0 2\n"
      "txn 3 c\n"
      "w 0 3\n");
  std::vector<TxnId> ids;
  for (TxnRef t : h.committed()) ids.push_back(h.txn(t).id);
  CHECK(ids == std::vector<TxnId>{1, 3});
  CHECK(h.txn_count() == 3);
  CHECK(h.aborted_count() == 1);
  CHECK(h.find_txn(2)->position == 1);  // so slot retained
  CHECK(h.committed_id(*h.find_txn(2)) == -1);
}

TEST_CASE("empty history iterates nothing") {
  History h = parse_or_throw("");
  CHECK(h.committed().empty());
  CHECK(h.op_count() == 0);
  CHECK(h.session_count() == 0);
}

TEST_CASE("history with only an aborted transaction iterates nothing") {
  History h = parse_or_throw(
      "awdit-history v1\n"
      "session 0\n"
      "txn 9 a\n"
      "w 0 1\n");
  CHECK(h.committed().empty());
  CHECK(h.txn_count() == 1);
}

TEST_CASE("wr entries agree on key and value with their reads") {
  // Property over random histories: if a read has a wr source, the write has
  // the same key and value; internal reads never appear as wr edges.
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    test::SamplerSpec spec;
    spec.seed = seed;
    History h = test::sample_raw_history(spec);
    for (const auto& session : h.sessions()) {
      for (const Transaction& t : session) {
        for (const Operation& o : t.ops) {
          if (o.kind != OpKind::Read) continue;
          const WrSource* src = h.wr_source(o.id);
          if (src == nullptr) continue;
          const Operation& w = h.txn(src->writer).ops[src->write_index];
          REQUIRE(w.kind == OpKind::Write);
          REQUIRE(w.key == o.key);
          REQUIRE(w.value == o.value);
          REQUIRE(w.id == src->write_op);
        }
      }
    }
    for (TxnRef t : h.committed())
      for (auto [writer, key] : h.txn_wr_edges(t)) REQUIRE(!(writer == t));
  }
}
