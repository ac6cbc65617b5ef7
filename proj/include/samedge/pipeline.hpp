#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "samedge/netsim.hpp"
#include "samedge/sero.hpp"

namespace samedge {

enum class Policy { samedge, samedge_wot, vanilla, mcs, srs };

std::string policy_name(Policy p);
Policy parse_policy(const std::string& s);

// Baseline knobs, read from the instance document's `policies` block.
struct PolicyParams {
  double mcs_compute_factor = 1.0;  // edge_ms multiplier of the compressed model
  double mcs_accuracy = 0.0;
  std::map<std::string, double> srs_accuracy;  // video resolution -> accuracy after upsampling

  void validate_for(Policy p, const SEROInstance& inst) const;
};

struct StageEvent {
  std::string stage;  // e.g. "video.uplink", "decoder"
  double start_ms = 0.0;
  double end_ms = 0.0;
};

struct RunReport {
  std::string policy;
  std::string network_class;
  std::uint64_t seed = 0;
  std::vector<StageEvent> events;  // causally ordered; span equals latency_ms
  double latency_ms = 0.0;
  double accuracy = 0.0;
  std::string video_res;
  std::string prompt_res;
  int planned_video_split = 0;  // layers kept on the edge
  int planned_prompt_split = 0;
};

// Runs one query under the given policy.
//   samedge      plan_under_trace, then event replay of the plan
//   samedge-wot  same, but the raw prompt set reaches the decoder untransformed
//   vanilla      both encoders fully cloud-side; steps the resolution ladder
//                down until the replay fits the budget
//   mcs          compressed model fully edge-side at full resolution; never
//                reads the trace
//   srs          vanilla's shape, but uploads stay downsampled and accuracy
//                comes from the upsample table
// The replay serializes the two branches' transfers on the shared link, video
// first, uplink and downlink each; the decoder fires only after both
// embeddings are present.
RunReport simulate(Policy policy, const SEROInstance& inst, const PolicyParams& params,
                   const BandwidthTrace& trace, std::uint64_t seed,
                   const std::string& network_class = "custom");

struct SweepRow {
  std::string policy;
  std::string network_class;
  std::uint64_t seed = 0;
  double latency_ms = 0.0;
  double accuracy = 0.0;
  int planned_video_split = 0;
  int planned_prompt_split = 0;
};

struct SweepSummaryRow {
  std::string policy;
  std::string network_class;
  double mean_latency_ms = 0.0;
  double mean_accuracy = 0.0;
};

struct SweepOptions {
  double sigma = 0.25;       // trace jitter
  double segment_ms = 500.0;
  double duration_ms = 0.0;  // trace horizon; 0 = twice the latency budget
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepSummaryRow> summary;  // means over seeds per (policy, class)
};

// Cross product of policies × classes × seeds; each (class, seed) pair shares
// one synthesized trace across policies.
SweepResult sweep(const SEROInstance& inst, const PolicyParams& params,
                  const std::vector<Policy>& policies, const std::vector<std::string>& classes,
                  const std::vector<std::uint64_t>& seeds, const SweepOptions& opts = {});

struct PipelineConfig {
  SEROInstance instance;
  PolicyParams policies;
};

PipelineConfig load_pipeline_config(const std::string& path);

// CSV report: `#`-prefixed config echo, the row table, then per-(policy,
// class) mean lines as trailing comments.
std::string sweep_csv(const SweepResult& result, const nlohmann::ordered_json& config_echo);

// Accuracy vs. network class, one polyline per policy.
std::string sweep_chart_svg(const SweepResult& result, const std::vector<std::string>& classes);

nlohmann::ordered_json report_json(const RunReport& report);

}  // namespace samedge
