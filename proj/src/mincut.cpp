#include "samedge/mincut.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <map>

#include "samedge/netsim.hpp"

namespace samedge {

FlowNetwork::FlowNetwork(int vertex_count, int source, int sink)
    : source_(source), sink_(sink), adjacency_(vertex_count) {
  if (source == sink || source < 0 || sink < 0 || source >= vertex_count || sink >= vertex_count)
    throw Error(ExitCode::internal, "bad flow network terminals");
}

int FlowNetwork::add_arc(int from, int to, CapacityUs cap, CapacityUs reverse_cap) {
  if (from == to || cap < 0 || reverse_cap < 0)
    throw Error(ExitCode::internal, "bad flow arc");
  int idx = static_cast<int>(arcs_.size());
  arcs_.push_back({from, to, cap, cap});
  arcs_.push_back({to, from, reverse_cap, reverse_cap});
  adjacency_[from].push_back(idx);
  adjacency_[to].push_back(idx + 1);
  return idx;
}

CapacityUs FlowNetwork::max_flow() {
  enum : char { kFree = 0, kSource = 1, kSink = 2 };
  const int n = vertex_count();
  std::vector<char> tree(n, kFree);
  std::vector<int> parent(n, -1);  // arc in flow direction: S-tree parent->v, T-tree v->parent
  std::deque<int> active;
  std::deque<int> orphans;

  tree[source_] = kSource;
  tree[sink_] = kSink;
  active.push_back(source_);
  active.push_back(sink_);

  auto root_of = [&](int u) {
    while (u != source_ && u != sink_) {
      if (parent[u] < 0) return -1;
      u = tree[u] == kSource ? arcs_[parent[u]].from : arcs_[parent[u]].to;
    }
    return u;
  };

  CapacityUs flow = 0;
  while (true) {
    // Grow the two search trees until they touch.
    int connector = -1;  // residual arc from an S-tree vertex to a T-tree vertex
    while (!active.empty() && connector < 0) {
      int p = active.front();
      if (tree[p] == kFree) {
        active.pop_front();
        continue;
      }
      for (int a : adjacency_[p]) {
        int grow_arc = tree[p] == kSource ? a : (a ^ 1);
        if (arcs_[grow_arc].residual <= 0) continue;
        int q = arcs_[a].to;
        if (tree[q] == kFree) {
          tree[q] = tree[p];
          parent[q] = grow_arc;
          active.push_back(q);
        } else if (tree[q] != tree[p]) {
          connector = grow_arc;
          break;
        }
      }
      if (connector < 0) active.pop_front();
    }
    if (connector < 0) break;  // trees can no longer meet: maximum flow reached

    // Augment along source -> ... -> connector -> ... -> sink.
    CapacityUs bottleneck = arcs_[connector].residual;
    for (int v = arcs_[connector].from; v != source_; v = arcs_[parent[v]].from)
      bottleneck = std::min(bottleneck, arcs_[parent[v]].residual);
    for (int v = arcs_[connector].to; v != sink_; v = arcs_[parent[v]].to)
      bottleneck = std::min(bottleneck, arcs_[parent[v]].residual);

    auto push = [&](int a) {
      arcs_[a].residual -= bottleneck;
      arcs_[a ^ 1].residual += bottleneck;
      return arcs_[a].residual == 0;
    };
    push(connector);
    for (int v = arcs_[connector].from; v != source_;) {
      int a = parent[v];
      int up = arcs_[a].from;
      if (push(a)) {
        parent[v] = -1;
        orphans.push_back(v);
      }
      v = up;
    }
    for (int v = arcs_[connector].to; v != sink_;) {
      int a = parent[v];
      int down = arcs_[a].to;
      if (push(a)) {
        parent[v] = -1;
        orphans.push_back(v);
      }
      v = down;
    }
    flow += bottleneck;
    if (flow >= kInfCapacityUs / 2)
      throw Error(ExitCode::internal, "unbounded cut: reduction produced an infinite min cut");

    // Adopt orphans: reattach to the same tree or free them.
    while (!orphans.empty()) {
      int v = orphans.front();
      orphans.pop_front();
      char side = tree[v];
      int new_parent_arc = -1;
      for (int a : adjacency_[v]) {
        int u = arcs_[a].to;
        if (tree[u] != side) continue;
        int link = side == kSource ? (a ^ 1) : a;  // S: u->v, T: v->u
        if (arcs_[link].residual <= 0) continue;
        if (root_of(u) < 0) continue;  // u hangs off another orphan
        new_parent_arc = link;
        break;
      }
      if (new_parent_arc >= 0) {
        parent[v] = new_parent_arc;
        continue;
      }
      // v leaves the tree: its children become orphans, and neighbors that
      // could reach the freed region become active again.
      for (int a : adjacency_[v]) {
        int u = arcs_[a].to;
        if (tree[u] != side) continue;
        if (parent[u] >= 0) {
          int pu = side == kSource ? arcs_[parent[u]].from : arcs_[parent[u]].to;
          if (pu == v) {
            parent[u] = -1;
            orphans.push_back(u);
          }
        }
        int link = side == kSource ? (a ^ 1) : a;
        if (arcs_[link].residual > 0) active.push_back(u);
      }
      tree[v] = kFree;
    }
  }
  return flow;
}

std::vector<bool> FlowNetwork::source_side() const {
  std::vector<bool> seen(vertex_count(), false);
  std::deque<int> queue{source_};
  seen[source_] = true;
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    for (int a : adjacency_[v]) {
      if (arcs_[a].residual <= 0 || seen[arcs_[a].to]) continue;
      seen[arcs_[a].to] = true;
      queue.push_back(arcs_[a].to);
    }
  }
  return seen;
}

namespace {

CapacityUs transmission_capacity(double bytes, double bw_mbps) {
  double ms = transmission_time_ms(bytes, bw_mbps);
  if (!std::isfinite(ms)) return kInfCapacityUs;
  return std::min(ms_to_capacity(ms), kInfCapacityUs);
}

// Assembles a Partition from a source-side assignment over network vertices.
Partition partition_from_sides(const MincutReduction& red, const std::vector<bool>& on_edge) {
  Partition part;
  const auto& net = red.network;
  for (int v = 0; v < net.vertex_count(); ++v) {
    if (v == net.source() || v == net.sink()) continue;
    (on_edge[v] ? part.edge_side : part.cloud_side).insert(red.vertex_to_layer[v]);
  }
  CapacityUs total = 0;
  for (std::size_t i = 0; i < net.arcs().size(); i += 2) {  // forward arcs only carry cut weight
    const auto& arc = net.arcs()[i];
    if (arc.original <= 0 || !on_edge[arc.from] || on_edge[arc.to]) continue;
    part.cut_arcs.push_back(
        {red.vertex_to_layer[arc.from], red.vertex_to_layer[arc.to], capacity_to_ms(arc.original)});
    total += arc.original;
  }
  for (std::size_t i = 1; i < net.arcs().size(); i += 2) {
    const auto& arc = net.arcs()[i];
    if (arc.original > 0 && on_edge[arc.from] && !on_edge[arc.to])
      throw Error(ExitCode::internal, "dependency closure violated by reported cut");
  }
  part.objective_ms = capacity_to_ms(total);
  return part;
}

}  // namespace

MincutReduction build_flow_network(const LayerGraph& g, const std::string& res, double bw_mbps) {
  if (!g.resolution_index(res))
    throw Error(ExitCode::config, "undeclared resolution '" + res + "'");
  std::vector<int> vertex_to_layer = {g.entry_id, g.exit_id};
  std::map<int, int> layer_to_vertex = {{g.entry_id, 0}, {g.exit_id, 1}};
  for (const auto& n : g.nodes) {
    if (g.is_virtual(n.id)) continue;
    layer_to_vertex[n.id] = static_cast<int>(vertex_to_layer.size());
    vertex_to_layer.push_back(n.id);
  }
  FlowNetwork net(static_cast<int>(vertex_to_layer.size()), 0, 1);
  for (const auto& n : g.nodes) {
    if (g.is_virtual(n.id)) continue;
    net.add_arc(0, layer_to_vertex.at(n.id), ms_to_capacity(n.cloud_ms.at(res)));
    net.add_arc(layer_to_vertex.at(n.id), 1, ms_to_capacity(n.edge_ms.at(res)));
  }
  for (auto [u, v] : g.edges) {
    if (v == g.exit_id) continue;  // the final embedding's downlink is not part of the cut
    if (u == g.entry_id) {
      // Placing a layer that reads the raw input on the cloud costs the
      // input upload.
      net.add_arc(0, layer_to_vertex.at(v),
                  transmission_capacity(g.input_bytes_at(res), bw_mbps));
    } else {
      // Forward arc: moving the producer's activation up. Infinite reverse
      // arc: a consumer may never run on the edge below a cloud producer.
      net.add_arc(layer_to_vertex.at(u), layer_to_vertex.at(v),
                  transmission_capacity(g.node(u).output_bytes.at(res), bw_mbps),
                  kInfCapacityUs);
    }
  }
  return {std::move(net), std::move(vertex_to_layer)};
}

Partition min_cut_partition(const LayerGraph& g, const std::string& res, double bw_mbps) {
  MincutReduction red = build_flow_network(g, res, bw_mbps);
  CapacityUs flow = red.network.max_flow();
  Partition part = partition_from_sides(red, red.network.source_side());
  if (ms_to_capacity(part.objective_ms) != flow)
    throw Error(ExitCode::internal, "max-flow / min-cut duality violated");
  return part;
}

Partition brute_force_min_cut(const LayerGraph& g, const std::string& res, double bw_mbps) {
  const std::size_t n = g.real_layer_count();
  if (n > 22)
    throw Error(ExitCode::config,
                "exhaustive check supports at most 22 layers, got " + std::to_string(n));
  MincutReduction red = build_flow_network(g, res, bw_mbps);
  const auto& net = red.network;
  const int vertices = net.vertex_count();

  CapacityUs best = -1;
  std::vector<bool> best_sides;
  std::vector<bool> on_edge(vertices, false);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    on_edge.assign(vertices, false);
    on_edge[net.source()] = true;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) on_edge[2 + i] = true;
    CapacityUs total = 0;
    bool closed = true;
    for (const auto& arc : net.arcs()) {
      if (arc.original <= 0 || !on_edge[arc.from] || on_edge[arc.to]) continue;
      if (arc.original >= kInfCapacityUs) {
        closed = false;
        break;
      }
      total += arc.original;
    }
    if (!closed) continue;
    bool better = best < 0 || total < best;
    if (!better && total == best) {
      // Smaller edge side wins ties, matching the canonical residual
      // reachable-set cut (count - 1: best_sides includes the source vertex).
      std::size_t best_real =
          static_cast<std::size_t>(std::count(best_sides.begin(), best_sides.end(), true)) - 1;
      better = static_cast<std::size_t>(std::popcount(mask)) < best_real;
    }
    if (better) {
      best = total;
      best_sides = on_edge;
    }
  }
  if (best < 0) throw Error(ExitCode::internal, "no ancestor-closed partition exists");
  return partition_from_sides(red, best_sides);
}

}  // namespace samedge
