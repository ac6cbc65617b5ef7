#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "samedge/layer_graph.hpp"
#include "samedge/mincut.hpp"
#include "samedge/netsim.hpp"

namespace samedge {

// One resolution-optimization instance: both encoder profiles, the profiled
// accuracy of every resolution pairing, the network, and the budget.
struct SEROInstance {
  LayerGraph video_encoder;
  LayerGraph prompt_encoder;
  // accuracy_table[video res][prompt res] -> fraction; total on the product
  // of the two declared resolution sets, non-decreasing in each coordinate.
  std::map<std::string, std::map<std::string, double>> accuracy_table;
  double bandwidth_mbps = 0.0;  // scalar link; trace-driven planning ignores it
  double latency_budget_ms = 0.0;
  double decoder_ms_per_prompt = 0.0;
  int prompt_count = 0;      // prompts reaching the decoder after transformation
  int raw_prompt_count = 0;  // before transformation (baselines decode these)
  std::map<std::string, double> video_return_bytes;   // embedding downlink payloads
  std::map<std::string, double> prompt_return_bytes;

  void validate() const;
  double accuracy_at(const std::string& video_res, const std::string& prompt_res) const;
};

struct LatencyBreakdown {
  double edge_compute_ms = 0.0;
  double uplink_ms = 0.0;
  double cloud_compute_ms = 0.0;
  double downlink_ms = 0.0;
  double decoder_ms = 0.0;
  double total_ms = 0.0;  // always the sum of the five components
};

struct BranchPlan {
  std::string res;
  int res_index = 0;
  Partition partition;
  LatencyBreakdown breakdown;  // decoder_ms stays 0 at branch level
};

struct SEROPlan {
  BranchPlan video;
  BranchPlan prompt;
  // Critical-path view: the slower branch's components plus the decoder.
  LatencyBreakdown summary;
  double predicted_latency_ms = 0.0;
  double predicted_accuracy = 0.0;
};

Partition all_edge_partition(const LayerGraph& g, const std::string& res);
Partition all_cloud_partition(const LayerGraph& g);

// Bytes crossing the split: every dependency whose producer stays edge-side
// (or is the virtual entry, which ships the raw input) feeding a cloud-side
// consumer.
double cut_payload_bytes(const LayerGraph& g, const Partition& p, const std::string& res);

// Serialized latency of one branch under a fixed split: edge compute, uplink
// of every cut activation (and the raw input when a source layer sits
// cloud-side), cloud compute, then the embedding downlink. All-edge splits
// pay compute only.
LatencyBreakdown branch_latency(const LayerGraph& g, const Partition& p, const std::string& res,
                                double bw_mbps, double return_bytes);

// Same serialization, but every transfer walks the bandwidth trace starting
// at its actual start time; compute durations are trace-independent.
LatencyBreakdown branch_latency_over_trace(const LayerGraph& g, const Partition& p,
                                           const std::string& res, const BandwidthTrace& trace,
                                           double t0_ms, double return_bytes);

// Exhaustive search over the resolution product; per pair, each branch takes
// the better of staying on the edge and its min-cut split; branches
// synchronize at the decoder (max, not sum). Returns the accuracy-maximal
// feasible plan; ties prefer lower latency, then the lower video resolution
// index, then the lower prompt resolution index. Throws InfeasibleError
// (carrying the minimum achievable latency) when no pair fits the budget.
SEROPlan plan(const SEROInstance& inst);

// Trace-driven variant: split points come from a min cut at an effective
// bandwidth found by fixed-point iteration (at most 5 rounds starting from
// the bandwidth at decision time, then a conservative minimum-over-window
// fallback); candidate latencies integrate the trace. The trace must cover
// [t0, t0 + budget].
SEROPlan plan_under_trace(const SEROInstance& inst, const BandwidthTrace& trace, double t0_ms);

SEROInstance load_instance_file(const std::string& path);
SEROInstance instance_from_json_text(const std::string& json_text, const std::string& base_dir);

nlohmann::ordered_json partition_json(const Partition& p);
nlohmann::ordered_json breakdown_json(const LatencyBreakdown& b);
nlohmann::ordered_json plan_json(const SEROPlan& plan);

}  // namespace samedge
