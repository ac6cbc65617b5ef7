#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "samedge/layer_graph.hpp"

namespace samedge {

// Capacities are integer microseconds so flow arithmetic is exact; the
// infinity sentinel is 2^53 us, far above any desk-scale sum yet safe from
// 64-bit overflow during accumulation.
using CapacityUs = std::int64_t;
inline constexpr CapacityUs kInfCapacityUs = CapacityUs{1} << 53;

inline CapacityUs ms_to_capacity(double ms) {
  return static_cast<CapacityUs>(std::llround(ms * 1000.0));
}
inline double capacity_to_ms(CapacityUs us) { return static_cast<double>(us) / 1000.0; }

// Residual flow network. Arcs are stored in pairs: arc i and arc (i ^ 1) are
// each other's reverse, with independent capacities.
class FlowNetwork {
 public:
  struct Arc {
    int from = 0;
    int to = 0;
    CapacityUs residual = 0;   // mutated by max_flow
    CapacityUs original = 0;   // construction-time capacity
  };

  FlowNetwork(int vertex_count, int source, int sink);

  // Adds the forward arc and its paired reverse arc; returns the forward
  // arc's index (reverse is index + 1).
  int add_arc(int from, int to, CapacityUs cap, CapacityUs reverse_cap = 0);

  int vertex_count() const { return static_cast<int>(adjacency_.size()); }
  int source() const { return source_; }
  int sink() const { return sink_; }
  const std::vector<Arc>& arcs() const { return arcs_; }
  const std::vector<int>& arcs_from(int v) const { return adjacency_[v]; }

  // Boykov-Kolmogorov style grow/augment/adopt max-flow. Deterministic for a
  // fixed arc insertion order. Returns the max-flow value, which equals the
  // minimum s-t cut. Throws if the cut is unbounded (malformed reduction).
  CapacityUs max_flow();

  // Vertices reachable from the source in the residual graph after max_flow;
  // this is the canonical minimum cut with the smallest source side.
  std::vector<bool> source_side() const;

 private:
  int source_, sink_;
  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> adjacency_;
};

// An edge/cloud split of the real layers. edge_side is ancestor-closed; the
// virtual entry/exit never appear in either side, though cut arcs may name
// them as endpoints (entry->v arcs carry the input upload and cloud compute,
// v->exit arcs carry edge compute).
struct Partition {
  std::set<int> edge_side;
  std::set<int> cloud_side;
  struct CutArc {
    int from = 0;
    int to = 0;
    double capacity_ms = 0.0;
  };
  std::vector<CutArc> cut_arcs;
  double objective_ms = 0.0;

  bool all_edge() const { return cloud_side.empty(); }
  bool all_cloud() const { return edge_side.empty(); }
  // Number of layers kept on the edge (the "split point" for chains).
  int split_index() const { return static_cast<int>(edge_side.size()); }
};

// Serialized-latency reduction of the split decision to a minimum weighted
// s-t cut: source = entry, sink = exit; per real layer v an arc source->v
// with the cloud compute cost and v->sink with the edge compute cost; per
// dependency (u, v) a forward arc with the transmission time of u's output
// (the graph-level input payload for entry->source arcs, zero into the
// virtual exit) and an infinite reverse arc enforcing ancestor closure.
// Vertex indices: 0 = source/entry, 1 = sink/exit, 2.. = real layers in node
// order.
struct MincutReduction {
  FlowNetwork network;
  std::vector<int> vertex_to_layer;  // network vertex -> layer id
};

MincutReduction build_flow_network(const LayerGraph& g, const std::string& res, double bw_mbps);

// Exact minimum-cut partition at one resolution and scalar bandwidth. Ties
// between minimum cuts resolve to the smallest edge side (source
// reachability).
Partition min_cut_partition(const LayerGraph& g, const std::string& res, double bw_mbps);

// Exhaustive optimum over all ancestor-closed subsets; exponential, intended
// for graphs of at most ~20 real layers. Used by `partition
// --brute-force-check` and as an oracle in tests.
Partition brute_force_min_cut(const LayerGraph& g, const std::string& res, double bw_mbps);

}  // namespace samedge
