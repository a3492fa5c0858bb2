#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <deque>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "awditkit/history.hpp"

namespace awditkit {

enum class EdgeLabel : std::uint8_t { So, Wr, CoInferred };

inline std::string_view edge_label_name(EdgeLabel l) {
  switch (l) {
    case EdgeLabel::So: return "so";
    case EdgeLabel::Wr: return "wr";
    case EdgeLabel::CoInferred: return "co";
  }
  return "?";
}

struct CycleEdge {
  TxnRef from;
  TxnRef to;
  EdgeLabel label = EdgeLabel::So;
};

/// A simple cycle, one edge per step; the last edge closes back on the first
/// node. non_sowr_edge_count counts the CoInferred steps.
struct CycleWitness {
  std::vector<CycleEdge> edges;
  std::size_t non_sowr_edge_count = 0;
};

/// Directed graph over the committed transactions of one history, holding the
/// partial commit relation: session-order edges between so-adjacent committed
/// pairs, transaction-level write-read edges, and inferred commit edges added
/// by the checkers. Parallel edges with distinct labels are allowed; inferred
/// edges are deduplicated per (source, target) pair. Edges live in one arena
/// threaded through per-node lists, so construction never allocates per node.
class CommitGraph {
public:
  struct Edge {
    std::int32_t to;
    EdgeLabel label;
    std::int32_t next;  // arena index of the next out-edge, -1 ends the list
  };

  CommitGraph() = default;
  explicit CommitGraph(std::vector<TxnRef> nodes)
      : nodes_(std::move(nodes)), head_(nodes_.size(), -1) {
    co_seen_.reserve(nodes_.size());
  }

  std::size_t node_count() const { return nodes_.size(); }
  TxnRef node(std::size_t i) const { return nodes_[i]; }
  std::span<const TxnRef> nodes() const { return nodes_; }
  std::size_t edge_count() const { return edges_.size(); }
  std::size_t co_edge_count() const { return co_seen_.size(); }

  std::int32_t first_edge(std::size_t v) const { return head_[v]; }
  const Edge& edge(std::int32_t e) const { return edges_[e]; }

  /// Applies fn(to, label) to every out-edge of v, newest first.
  template <typename F>
  void for_each_out(std::size_t v, F&& fn) const {
    for (std::int32_t e = head_[v]; e >= 0; e = edges_[e].next) fn(edges_[e].to, edges_[e].label);
  }

  void add_edge(std::int32_t from, std::int32_t to, EdgeLabel label) {
    assert(label != EdgeLabel::CoInferred);
    push(from, to, label);
  }

  void add_co_edge(std::int32_t from, std::int32_t to) {
    assert(from != to);
    std::uint64_t pack = (static_cast<std::uint64_t>(from) << 32) | static_cast<std::uint32_t>(to);
    if (pack == last_co_) return;  // the saturators mostly re-add the last pair
    last_co_ = pack;
    if (co_seen_.insert(pack).second) push(from, to, EdgeLabel::CoInferred);
  }

  bool has_edge(std::int32_t from, std::int32_t to, EdgeLabel label) const {
    for (std::int32_t e = head_[from]; e >= 0; e = edges_[e].next)
      if (edges_[e].to == to && edges_[e].label == label) return true;
    return false;
  }

private:
  void push(std::int32_t from, std::int32_t to, EdgeLabel label) {
    edges_.push_back(Edge{to, label, head_[from]});
    head_[from] = static_cast<std::int32_t>(edges_.size() - 1);
  }

  std::vector<TxnRef> nodes_;
  std::vector<std::int32_t> head_;
  std::vector<Edge> edges_;
  std::unordered_set<std::uint64_t> co_seen_;
  std::uint64_t last_co_ = ~std::uint64_t{0};
};

namespace detail {

inline bool edge_in_mask(EdgeLabel l, bool include_co) {
  return include_co || l != EdgeLabel::CoInferred;
}

/// Reads of committed node i for the scanning passes. The fast path hands out
/// the prebuilt compact records; with drops in play, a filtered copy is made.
inline std::span<const HotRead> select_reads(const History& h, std::size_t i,
                                             const std::unordered_set<OpId>* dropped,
                                             std::vector<HotRead>& scratch) {
  if (dropped == nullptr) return h.hot_reads_of(i);
  scratch.clear();
  for (const ExtRead& r : h.ext_reads_of(i)) {
    if (r.writer_node < 0 || dropped->count(r.read_op) > 0) continue;
    scratch.push_back(HotRead{r.key_slot, r.writer_node});
  }
  return scratch;
}

}  // namespace detail

/// so ∪ wr skeleton of a history. `dropped` lists read operations excluded
/// from wr (reads already reported as read-consistency violations).
inline CommitGraph build_base_graph(const History& h,
                                    const std::unordered_set<OpId>* dropped = nullptr) {
  auto committed = h.committed();
  CommitGraph g(std::vector<TxnRef>(committed.begin(), committed.end()));

  // Session edges between consecutive committed transactions.
  std::vector<std::int32_t> last_in_session(h.session_count(), -1);
  for (std::size_t i = 0; i < committed.size(); ++i) {
    std::int32_t& prev = last_in_session[committed[i].session];
    if (prev >= 0) g.add_edge(prev, static_cast<std::int32_t>(i), EdgeLabel::So);
    prev = static_cast<std::int32_t>(i);
  }

  // Transaction-level wr edges, deduplicated per (writer, reader) pair.
  std::vector<std::uint32_t> writer_stamp(committed.size(), 0);
  std::vector<HotRead> scratch;
  for (std::size_t i = 0; i < committed.size(); ++i) {
    std::uint32_t stamp = static_cast<std::uint32_t>(i) + 1;
    for (const HotRead& r : detail::select_reads(h, i, dropped, scratch)) {
      if (r.writer_node < 0) continue;  // writer aborted; the read is reported elsewhere
      if (writer_stamp[r.writer_node] != stamp) {
        writer_stamp[r.writer_node] = stamp;
        g.add_edge(r.writer_node, static_cast<std::int32_t>(i), EdgeLabel::Wr);
      }
    }
  }
  return g;
}

/// Strongly connected components, emitted in reverse topological order of the
/// condensation. Iterative Tarjan: explicit stacks only, so million-node
/// session chains cannot overflow the call stack.
inline std::vector<std::vector<std::int32_t>> find_sccs(const CommitGraph& g,
                                                        bool include_co = true) {
  const std::size_t n = g.node_count();
  constexpr std::int32_t kUnset = -1;
  std::vector<std::int32_t> index(n, kUnset), lowlink(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::int32_t> stack;
  std::vector<std::vector<std::int32_t>> sccs;

  struct Frame {
    std::int32_t v;
    std::int32_t edge;  // arena index into the out-list, -1 when exhausted
    bool fresh;
  };
  std::vector<Frame> frames;
  std::int32_t next_index = 0;

  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    frames.push_back(Frame{static_cast<std::int32_t>(root), g.first_edge(root), true});
    while (!frames.empty()) {
      Frame& f = frames.back();
      std::int32_t v = f.v;
      if (f.fresh) {
        f.fresh = false;
        index[v] = lowlink[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = true;
      }
      bool descended = false;
      while (f.edge >= 0) {
        const auto& e = g.edge(f.edge);
        f.edge = e.next;
        if (!detail::edge_in_mask(e.label, include_co)) continue;
        if (index[e.to] == kUnset) {
          frames.push_back(Frame{e.to, g.first_edge(e.to), true});
          descended = true;
          break;
        }
        if (on_stack[e.to] && index[e.to] < lowlink[v]) lowlink[v] = index[e.to];
      }
      if (descended) continue;
      if (lowlink[v] == index[v]) {
        std::vector<std::int32_t> scc;
        std::int32_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          scc.push_back(w);
        } while (w != v);
        sccs.push_back(std::move(scc));
      }
      frames.pop_back();
      if (!frames.empty()) {
        std::int32_t child_low = lowlink[v];
        if (child_low < lowlink[frames.back().v]) lowlink[frames.back().v] = child_low;
      }
    }
  }
  return sccs;
}

/// One simple cycle inside an SCC, preferring so/wr edges: a 0/1-cost BFS from
/// the smallest node expands free so/wr edges before inferred ones, so among
/// the cycles it can see it returns one with the fewest inferred edges.
inline CycleWitness extract_cycle(const CommitGraph& g, std::span<const std::int32_t> scc,
                                  bool include_co = true) {
  assert(!scc.empty());
  std::int32_t start = *std::min_element(scc.begin(), scc.end());

  std::unordered_set<std::int32_t> members(scc.begin(), scc.end());
  std::unordered_map<std::int32_t, std::int32_t> dist;
  struct Parent {
    std::int32_t node;
    EdgeLabel label;
  };
  std::unordered_map<std::int32_t, Parent> parent;

  std::deque<std::int32_t> frontier;
  dist[start] = 0;
  frontier.push_back(start);
  while (!frontier.empty()) {
    std::int32_t v = frontier.front();
    frontier.pop_front();
    std::int32_t dv = dist.at(v);
    g.for_each_out(v, [&](std::int32_t to, EdgeLabel label) {
      if (!detail::edge_in_mask(label, include_co)) return;
      if (members.count(to) == 0) return;
      if (to == start) return;  // closing edges are scored below
      std::int32_t cost = label == EdgeLabel::CoInferred ? 1 : 0;
      auto it = dist.find(to);
      if (it == dist.end() || dv + cost < it->second) {
        dist[to] = dv + cost;
        parent[to] = Parent{v, label};
        if (cost == 0)
          frontier.push_front(to);
        else
          frontier.push_back(to);
      }
    });
  }

  // Best cycle through `start`: reached node u with an edge u -> start.
  std::int32_t best_u = -1, best_cost = std::numeric_limits<std::int32_t>::max();
  EdgeLabel best_label = EdgeLabel::So;
  for (std::int32_t u : scc) {
    auto it = dist.find(u);
    if (it == dist.end()) continue;
    g.for_each_out(u, [&](std::int32_t to, EdgeLabel label) {
      if (!detail::edge_in_mask(label, include_co)) return;
      if (to != start) return;
      if (u == start && scc.size() > 1) return;  // ignore self-loops unless singleton
      std::int32_t cost = it->second + (label == EdgeLabel::CoInferred ? 1 : 0);
      if (cost < best_cost) {
        best_cost = cost;
        best_u = u;
        best_label = label;
      }
    });
  }
  assert(best_u >= 0 && "an SCC always closes back on its start node");

  std::vector<CycleEdge> path;
  for (std::int32_t v = best_u; v != start;) {
    const Parent& p = parent.at(v);
    path.push_back(CycleEdge{g.node(p.node), g.node(v), p.label});
    v = p.node;
  }
  std::reverse(path.begin(), path.end());
  path.push_back(CycleEdge{g.node(best_u), g.node(start), best_label});

  CycleWitness w;
  w.edges = std::move(path);
  for (const CycleEdge& e : w.edges)
    if (e.label == EdgeLabel::CoInferred) ++w.non_sowr_edge_count;
  return w;
}

/// Kahn's algorithm with a min-heap keyed by node id, so ties resolve by
/// (session, so-position). Returns a short order when the subgraph is cyclic.
inline std::vector<std::int32_t> kahn_order(const CommitGraph& g, bool include_co = true) {
  const std::size_t n = g.node_count();
  std::vector<std::int32_t> indeg(n, 0);
  for (std::size_t v = 0; v < n; ++v)
    g.for_each_out(v, [&](std::int32_t to, EdgeLabel label) {
      if (detail::edge_in_mask(label, include_co)) ++indeg[to];
    });

  std::priority_queue<std::int32_t, std::vector<std::int32_t>, std::greater<>> ready;
  for (std::size_t v = 0; v < n; ++v)
    if (indeg[v] == 0) ready.push(static_cast<std::int32_t>(v));

  std::vector<std::int32_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    std::int32_t v = ready.top();
    ready.pop();
    order.push_back(v);
    g.for_each_out(v, [&](std::int32_t to, EdgeLabel label) {
      if (!detail::edge_in_mask(label, include_co)) return;
      if (--indeg[to] == 0) ready.push(to);
    });
  }
  return order;
}

/// Any topological order (first-in-first-out Kahn, no tie-break heap); empty
/// when the subgraph is cyclic.
inline std::vector<std::int32_t> kahn_order_fast(const CommitGraph& g, bool include_co = true) {
  const std::size_t n = g.node_count();
  std::vector<std::int32_t> indeg(n, 0);
  for (std::size_t v = 0; v < n; ++v)
    g.for_each_out(v, [&](std::int32_t to, EdgeLabel label) {
      if (detail::edge_in_mask(label, include_co)) ++indeg[to];
    });

  std::vector<std::int32_t> order;
  order.reserve(n);
  for (std::size_t v = 0; v < n; ++v)
    if (indeg[v] == 0) order.push_back(static_cast<std::int32_t>(v));
  for (std::size_t head = 0; head < order.size(); ++head) {
    g.for_each_out(order[head], [&](std::int32_t to, EdgeLabel label) {
      if (!detail::edge_in_mask(label, include_co)) return;
      if (--indeg[to] == 0) order.push_back(to);
    });
  }
  if (order.size() != n) order.clear();
  return order;
}

/// Topological sort of the so ∪ wr skeleton; on a cycle, returns a witness
/// drawn from one nontrivial SCC.
inline std::variant<std::vector<std::int32_t>, CycleWitness> topo_sort(const CommitGraph& g) {
  auto order = kahn_order_fast(g, /*include_co=*/false);
  if (!order.empty() || g.node_count() == 0) return order;
  auto sccs = find_sccs(g, /*include_co=*/false);
  for (const auto& scc : sccs)
    if (scc.size() > 1) return extract_cycle(g, scc, /*include_co=*/false);
  return order;  // unreachable: a failed Kahn pass implies a nontrivial SCC
}

/// Witness rendering: one edge per line, original transaction ids.
inline std::string render_cycle(const History& h, const CycleWitness& w) {
  std::string out;
  for (const CycleEdge& e : w.edges) {
    out += std::to_string(h.txn(e.from).id);
    out += " -[";
    out += edge_label_name(e.label);
    out += "]-> ";
    out += std::to_string(h.txn(e.to).id);
    out += '\n';
  }
  return out;
}

}  // namespace awditkit
