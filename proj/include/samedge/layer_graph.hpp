#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "samedge/common.hpp"

namespace samedge {

// One resolution operating point. Declared sets are normalized ascending by
// pixel count; "resolution index" always means rank in that order.
struct ResolutionLevel {
  std::string label;    // e.g. "1080p"
  std::int64_t pixels;  // > 0
  double scale;         // fraction of native resolution, in (0, 1]
};

// Default 4-level ladder used by the synthetic generator and fixtures.
std::vector<ResolutionLevel> default_resolutions();

// One NN layer. Cost maps are keyed by resolution label and must cover the
// graph's declared resolution set exactly.
struct LayerNode {
  int id = 0;
  std::string name;
  std::map<std::string, double> edge_ms;       // compute time on the edge device
  std::map<std::string, double> cloud_ms;      // compute time on the cloud
  std::map<std::string, double> output_bytes;  // activation size if transmitted
};

// Layer-level DAG of an encoder network plus two virtual vertices. The
// virtual entry/exit carry zero cost and zero output size; the raw-input
// upload charge lives in the graph-level input_bytes map and is placed on
// entry->source dependency arcs by the partitioner.
struct LayerGraph {
  std::vector<LayerNode> nodes;  // includes the virtual entry/exit
  std::vector<std::pair<int, int>> edges;
  int entry_id = -1;
  int exit_id = -1;
  std::vector<ResolutionLevel> resolutions;   // ascending by pixels
  std::map<std::string, double> input_bytes;  // raw input payload per resolution

  const LayerNode& node(int id) const;
  bool is_virtual(int id) const { return id == entry_id || id == exit_id; }
  std::size_t real_layer_count() const { return nodes.size() - 2; }
  const ResolutionLevel& resolution(const std::string& label) const;
  std::optional<int> resolution_index(const std::string& label) const;
  double input_bytes_at(const std::string& label) const;  // 0 when undeclared

  std::vector<int> successors(int id) const;
  std::vector<int> predecessors(int id) const;

  double total_edge_ms(const std::string& res) const;
  double total_cloud_ms(const std::string& res) const;

  // Enforces every structural invariant: acyclicity (cycle errors name a back
  // edge), entry/exit uniqueness and virtuality, reachability of every real
  // node from entry and to exit, resolution-map closure, non-negative values.
  void validate() const;
};

// Producer-before-consumer order, entry first, exit last. Deterministic:
// ready vertices are emitted in ascending id order.
std::vector<int> topological_order(const LayerGraph& g);

// Parses and validates a profile document (see README for the JSON schema).
// Virtual entry/exit are synthesized if absent and wired to all sources and
// sinks.
LayerGraph load_profile_json(const std::string& json_text);
LayerGraph load_profile_file(const std::string& path);

std::string profile_to_json(const LayerGraph& g);

enum class SynthShape { chain, diamond, vit_like };

SynthShape parse_synth_shape(const std::string& s);

struct SynthProfile {
  LayerGraph graph;
  // Accumulated while generating, before graph assembly; lets tests check the
  // assembled graph against the generator's own bookkeeping.
  double declared_edge_ms_total_full_res = 0.0;
};

struct SynthOptions {
  double cloud_speedup = 10.0;      // cloud_ms = edge_ms / speedup
  double base_layer_ms = 100.0;     // mean per-layer edge time at full resolution
  double base_output_bytes = 2.5e6; // mean activation size at full resolution
  double input_bytes_per_pixel = 9.25e6 / 2073600.0;  // 9.25 MB at 1080p
};

// Deterministic synthetic encoder profile; a desk-scale stand-in for a
// measured SAM encoder. Costs scale linearly with pixel count.
SynthProfile synth_profile(int layers, std::uint64_t seed, SynthShape shape,
                           const SynthOptions& opts = {});

}  // namespace samedge
