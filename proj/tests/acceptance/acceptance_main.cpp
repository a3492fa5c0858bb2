// Acceptance suite: one line per criterion, nonzero exit when any fails.

#include <malloc.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "awditkit/checkers.hpp"
#include "awditkit/generators.hpp"
#include "awditkit/history_io.hpp"
#include "awditkit/oracle.hpp"
#include "support/test_support.hpp"

using namespace awditkit;
using Clock = std::chrono::steady_clock;

namespace {

struct Failures {
  std::vector<std::string> lines;
  void add(std::string line) { lines.push_back(std::move(line)); }
  bool ok() const { return lines.empty(); }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Streams over a large buffer so every timed repetition starts from the same
/// cold-cache state; otherwise inputs that happen to fit a cache level get an
/// artificial advantage and the scaling ratios measure the hardware, not the
/// algorithm.
inline void scrub_caches() {
  static std::vector<std::uint64_t> junk(4u << 20);  // 32 MB
  std::uint64_t sink = 0;
  for (std::size_t i = 0; i < junk.size(); i += 8) {
    junk[i] += 1;
    sink += junk[i];
  }
  asm volatile("" : : "r"(sink));
}

/// Interleaves the repetitions across the measured inputs so that machine
/// state (frequency, cache pressure) hits every size equally, then keeps the
/// per-input minimum.
template <typename F>
std::vector<double> measure_interleaved(std::size_t count, int reps, F&& body_for_index) {
  std::vector<double> best(count, 1e300);
  for (std::size_t i = 0; i < count; ++i) body_for_index(i);  // warm-up
  for (int r = 0; r < reps; ++r) {
    for (std::size_t i = 0; i < count; ++i) {
      scrub_caches();
      auto start = Clock::now();
      body_for_index(i);
      best[i] = std::min(best[i], seconds_since(start));
    }
  }
  return best;
}

// -- certificate bookkeeping (criterion 4), fed by criteria 1-3 -------------

struct Certificates {
  std::size_t orders_checked = 0;
  std::size_t cycles_checked = 0;
  Failures failures;

  void certify(const History& h, IsolationLevel level, const Verdict& v, const char* tag) {
    if (v.consistent()) {
      ++orders_checked;
      if (v.commit_order.size() != h.committed_count()) {
        failures.add(std::string(tag) + ": commit order is not total");
        return;
      }
      if (auto f = axiom_violation(h, level, v.commit_order))
        failures.add(std::string(tag) + ": returned order fails the axiom: " + f->describe());
      return;
    }
    if (v.kind != Verdict::Kind::CoCycle) return;
    CommitGraph g = [&] {
      if (level == IsolationLevel::RC) return saturate_rc(h);
      if (level == IsolationLevel::RA) return saturate_ra(h);
      auto cc = saturate_cc(h);
      if (std::holds_alternative<CommitGraph>(cc)) return std::get<CommitGraph>(std::move(cc));
      return build_base_graph(h);  // so-wr cycle: witness uses base edges only
    }();
    for (const CycleWitness& w : v.cycles) {
      ++cycles_checked;
      if (w.edges.empty()) {
        failures.add(std::string(tag) + ": empty cycle witness");
        continue;
      }
      for (std::size_t i = 0; i < w.edges.size(); ++i) {
        const CycleEdge& e = w.edges[i];
        const CycleEdge& next = w.edges[(i + 1) % w.edges.size()];
        if (!(e.to == next.from)) {
          failures.add(std::string(tag) + ": witness cycle does not close");
          break;
        }
        std::int32_t from = h.committed_id(e.from), to = h.committed_id(e.to);
        if (from < 0 || to < 0 || !g.has_edge(from, to, e.label)) {
          failures.add(std::string(tag) + ": witness edge missing from the graph");
          break;
        }
      }
    }
  }
};

Certificates g_certs;

// -- shared corpora -----------------------------------------------------------

struct SmallCase {
  History h;
  std::array<bool, 3> consistent{};  // checker outcome per level, rc/ra/cc
};

constexpr IsolationLevel kLevels[3] = {IsolationLevel::RC, IsolationLevel::RA,
                                       IsolationLevel::CC};

std::vector<SmallCase> g_small_suite;       // criterion 2 corpus
std::vector<std::array<bool, 3>> g_reduction_outcomes;  // per reduction history

History timed_history(std::uint64_t seed, std::uint32_t sessions, std::size_t target_ops,
                      std::uint32_t keys, double read_fraction = 0.5) {
  RandomSpec spec;
  spec.seed = seed;
  spec.sessions = sessions;
  spec.keys = keys;
  spec.ops_min = 1;
  spec.ops_max = 8;
  spec.read_fraction = read_fraction;
  spec.txns = static_cast<std::uint32_t>(static_cast<double>(target_ops) / 4.5);
  return gen_random(spec);
}

// -- criteria ---------------------------------------------------------------

Failures criterion1() {
  Failures f;
  auto start = Clock::now();

  auto expect = [&](const char* fixture, IsolationLevel level, bool want_consistent) {
    History h = test::load_fixture(fixture);
    Verdict v = check(h, level, {});
    g_certs.certify(h, level, v, fixture);
    if (v.consistent() != want_consistent)
      f.add(std::string(fixture) + " at " + std::string(level_name(level)) + ": expected " +
            (want_consistent ? "consistent" : "violation"));
  };

  expect("rc_cycle.hist", IsolationLevel::RC, false);
  expect("cc_cycle.hist", IsolationLevel::CC, false);

  History nonmono = test::load_fixture("nonmonotonic_read.hist");
  if (!check_read_consistency(nonmono).empty())
    f.add("nonmonotonic_read.hist: expected clean read consistency");
  expect("nonmonotonic_read.hist", IsolationLevel::RC, false);

  expect("fractured_read.hist", IsolationLevel::RC, true);
  expect("fractured_read.hist", IsolationLevel::RA, false);
  expect("causal_stale_read.hist", IsolationLevel::RA, true);
  expect("causal_stale_read.hist", IsolationLevel::CC, false);
  expect("causal_chain_ok.hist", IsolationLevel::CC, true);

  struct Pattern {
    const char* fixture;
    ReadViolationKind kind;
  };
  for (Pattern p : {Pattern{"thin_air.hist", ReadViolationKind::ThinAir},
                    Pattern{"aborted_read.hist", ReadViolationKind::AbortedRead},
                    Pattern{"future_read.hist", ReadViolationKind::FutureRead},
                    Pattern{"not_own_write.hist", ReadViolationKind::NotOwnWrite},
                    Pattern{"not_latest_write.hist", ReadViolationKind::NotLatestWrite}}) {
    auto violations = check_read_consistency(test::load_fixture(p.fixture));
    if (violations.size() != 1 || violations[0].kind != p.kind)
      f.add(std::string(p.fixture) + ": expected exactly its read-consistency kind");
  }

  double elapsed = seconds_since(start);
  if (elapsed >= 1.0) f.add("fixture suite took " + std::to_string(elapsed) + "s (budget 1s)");
  return f;
}

Failures criterion2() {
  Failures f;
  std::size_t consistent = 0, violating = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    test::SamplerSpec spec;
    spec.seed = seed;
    spec.min_sessions = 2;
    spec.max_sessions = 4;
    spec.max_committed = 6;
    spec.keys = 4;
    SmallCase sc{test::sample_raw_history(spec), {}};
    for (int li = 0; li < 3; ++li) {
      Verdict v = check(sc.h, kLevels[li], {});
      g_certs.certify(sc.h, kLevels[li], v, "small-suite");
      bool checker_ok = v.consistent();
      bool oracle_ok = oracle_check(sc.h, kLevels[li]) == OracleOutcome::Consistent;
      (checker_ok ? consistent : violating) += 1;
      if (checker_ok != oracle_ok)
        f.add("seed " + std::to_string(seed) + " level " +
              std::string(level_name(kLevels[li])) + ": checker " +
              (checker_ok ? "consistent" : "violation") + " vs oracle " +
              (oracle_ok ? "consistent" : "violation"));
      sc.consistent[li] = checker_ok;
    }
    g_small_suite.push_back(std::move(sc));
  }
  std::fprintf(stderr, "  criterion 2: 1000 histories x 3 levels (%zu consistent, %zu violating)\n",
               consistent, violating);
  return f;
}

Failures criterion3() {
  Failures f;
  std::uint64_t with_triangle = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    std::uint32_t nodes = 3 + static_cast<std::uint32_t>(i % 8);  // 3..10
    double p = i % 2 == 0 ? 0.2 : 0.5;
    UndirectedGraph g = UndirectedGraph::sample(nodes, p, 1000 + i);
    bool tri = has_triangle(g);
    with_triangle += tri ? 1 : 0;

    History range = gen_range_reduction(g);
    History ra = gen_ra_reduction(g);
    History rc = gen_rc_reduction(g);

    Verdict v_range_cc = check(range, IsolationLevel::CC, {});
    Verdict v_range_rc = check(range, IsolationLevel::RC, {});
    Verdict v_ra = check(ra, IsolationLevel::RA, {});
    Verdict v_rc = check(rc, IsolationLevel::RC, {});
    g_certs.certify(range, IsolationLevel::CC, v_range_cc, "range-reduction");
    g_certs.certify(range, IsolationLevel::RC, v_range_rc, "range-reduction");
    g_certs.certify(ra, IsolationLevel::RA, v_ra, "ra-reduction");
    g_certs.certify(rc, IsolationLevel::RC, v_rc, "rc-reduction");

    auto demand = [&](const char* label, const Verdict& v) {
      if (!v.consistent() != tri)
        f.add("graph " + std::to_string(i) + " (" + label + "): verdict does not track triangle");
    };
    demand("range/cc", v_range_cc);
    demand("range/rc", v_range_rc);
    demand("ra", v_ra);
    demand("rc", v_rc);

    g_reduction_outcomes.push_back({v_rc.consistent(), v_ra.consistent(), v_range_cc.consistent()});
  }
  std::fprintf(stderr, "  criterion 3: 200 graphs (%llu with a triangle)\n",
               static_cast<unsigned long long>(with_triangle));
  return f;
}

Failures criterion4() {
  Failures f = g_certs.failures;
  if (g_certs.orders_checked < 100) f.add("too few consistent verdicts certified");
  if (g_certs.cycles_checked < 100) f.add("too few cycle witnesses certified");
  std::fprintf(stderr, "  criterion 4: %zu commit orders, %zu cycle witnesses certified\n",
               g_certs.orders_checked, g_certs.cycles_checked);
  return f;
}

Failures criterion5() {
  Failures f;

  // (a) fixed k = 100, ops doubling from 2^14 to 2^17. The key space grows
  // with the history so per-key contention stays constant; otherwise the
  // density of writers per key (and with it the per-read work) would still be
  // ramping up across the measured range.
  std::vector<History> histories;
  for (std::size_t target : {std::size_t(1) << 14, std::size_t(1) << 15, std::size_t(1) << 16,
                             std::size_t(1) << 17})
    histories.push_back(timed_history(17, 100, target,
                                      static_cast<std::uint32_t>(std::max<std::size_t>(
                                          64, target / 64))));
  for (int li = 0; li < 3; ++li) {
    std::vector<double> times = measure_interleaved(
        histories.size(), 9, [&](std::size_t i) { check(histories[i], kLevels[li], {}); });
    std::fprintf(stderr, "  criterion 5a %s: %.4fs %.4fs %.4fs %.4fs\n",
                 std::string(level_name(kLevels[li])).c_str(), times[0], times[1], times[2],
                 times[3]);
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
      double ratio = times[i + 1] / times[i];
      if (ratio > 2.5)
        f.add(std::string(level_name(kLevels[li])) + ": doubling step " + std::to_string(i) +
              " ratio " + std::to_string(ratio) + " > 2.5");
    }
  }

  // (b) fixed n = 1e5 ops, sessions from 25 to 200. Short transactions with a
  // high read share put most of the work into the session-indexed clocks, the
  // component that actually scales with k.
  std::vector<History> by_k;
  for (std::uint32_t k : {25u, 80u, 140u, 200u}) {
    RandomSpec spec;
    spec.seed = 19;
    spec.sessions = k;
    spec.keys = 256;
    spec.ops_min = 1;
    spec.ops_max = 1;
    spec.read_fraction = 0.95;
    spec.txns = 100000;
    by_k.push_back(gen_random(spec));
  }
  std::vector<double> cc_times;
  for (int li = 0; li < 3; ++li) {
    std::vector<double> times = measure_interleaved(
        by_k.size(), 9, [&](std::size_t i) { check(by_k[i], kLevels[li], {}); });
    std::fprintf(stderr, "  criterion 5b %s: %.4fs %.4fs %.4fs %.4fs\n",
                 std::string(level_name(kLevels[li])).c_str(), times[0], times[1], times[2],
                 times[3]);
    if (kLevels[li] == IsolationLevel::CC) {
      cc_times = times;
    } else {
      double mean = 0;
      for (double t : times) mean += t;
      mean /= static_cast<double>(times.size());
      for (double t : times)
        if (std::abs(t - mean) > 0.25 * mean)
          f.add(std::string(level_name(kLevels[li])) +
                ": session scaling moved the runtime by more than 25% of the mean");
    }
  }
  for (std::size_t i = 0; i + 1 < cc_times.size(); ++i)
    if (!(cc_times[i + 1] > cc_times[i]))
      f.add("cc runtime did not increase from k step " + std::to_string(i));
  return f;
}

Failures criterion6() {
  Failures f;

  std::size_t agreements = 0;
  for (std::uint64_t seed = 1; seed <= 500; ++seed) {
    test::SamplerSpec spec;
    spec.seed = 77000 + seed;
    spec.min_sessions = 1;
    spec.max_sessions = 1;
    spec.max_committed = 120;  // up to ~1000 operations
    spec.max_ops = 8;
    spec.keys = 8;
    History h = test::sample_raw_history(spec);
    Verdict fast = check_ra_one_session(h);
    Verdict slow = check_ra(h);
    if (fast.kind != slow.kind)
      f.add("one-session seed " + std::to_string(seed) + ": fast " +
            std::string(verdict_kind_name(fast.kind)) + " vs general " +
            std::string(verdict_kind_name(slow.kind)));
    else
      ++agreements;
  }
  std::fprintf(stderr, "  criterion 6: %zu/500 verdicts agree\n", agreements);

  std::vector<History> sized;
  for (std::size_t target : {std::size_t(1) << 17, std::size_t(1) << 18, std::size_t(1) << 19,
                             std::size_t(1) << 20})
    sized.push_back(timed_history(23, 1, target, 64));
  std::vector<double> times = measure_interleaved(
      sized.size(), 13, [&](std::size_t i) { check_ra_one_session(sized[i]); });
  std::fprintf(stderr, "  criterion 6 timing: %.4fs %.4fs %.4fs %.4fs\n", times[0], times[1],
               times[2], times[3]);
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    double ratio = times[i + 1] / times[i];
    if (ratio > 2.2)
      f.add("one-session doubling step " + std::to_string(i) + " ratio " +
            std::to_string(ratio) + " > 2.2");
  }
  return f;
}

Failures criterion7() {
  Failures f;
  auto demand_chain = [&](const std::array<bool, 3>& ok, const std::string& tag) {
    if (ok[2] && !ok[1]) f.add(tag + ": cc-consistent but ra-violating");
    if (ok[1] && !ok[0]) f.add(tag + ": ra-consistent but rc-violating");
  };
  for (std::size_t i = 0; i < g_small_suite.size(); ++i)
    demand_chain(g_small_suite[i].consistent, "small-suite " + std::to_string(i));
  for (std::size_t i = 0; i < g_reduction_outcomes.size(); ++i)
    demand_chain(g_reduction_outcomes[i], "reduction " + std::to_string(i));
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    test::SamplerSpec spec;
    spec.seed = 90000 + seed;
    spec.min_sessions = 2;
    spec.max_sessions = 6;
    spec.max_committed = 40;
    spec.max_ops = 6;
    spec.keys = 8;
    History h = test::sample_raw_history(spec);
    std::array<bool, 3> ok{};
    for (int li = 0; li < 3; ++li) ok[li] = check(h, kLevels[li], {}).consistent();
    demand_chain(ok, "larger " + std::to_string(seed));
  }
  return f;
}

}  // namespace

int main() {
  // Keep large scratch blocks on the retained heap: the timing criteria
  // otherwise measure page faults from mmap/munmap churn, not the checkers.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, -1);

  struct Criterion {
    const char* name;
    std::function<Failures()> body;
  };
  const Criterion criteria[] = {
      {"figure fixtures give their exact verdicts in under 1s", criterion1},
      {"checker vs oracle agreement on 1000 small histories", criterion2},
      {"reduction verdicts track triangles on 200 graphs", criterion3},
      {"consistent orders and cycle witnesses certify", criterion4},
      {"runtime scaling in ops and sessions", criterion5},
      {"one-session fast path equivalence and linear scaling", criterion6},
      {"consistency is monotone across levels", criterion7},
  };

  bool all_ok = true;
  int index = 1;
  for (const Criterion& c : criteria) {
    Failures f = c.body();
    bool ok = f.ok();
    all_ok = all_ok && ok;
    std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", index, c.name);
    for (const std::string& line : f.lines) std::printf("       %s\n", line.c_str());
    std::fflush(stdout);
    ++index;
  }
  return all_ok ? 0 : 1;
}
