#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "samedge/common.hpp"

namespace samedge {

enum class PromptKind { point, box, scribble };

std::string prompt_kind_name(PromptKind k);
PromptKind parse_prompt_kind(const std::string& s);

// A visual prompt in normalized [0,1]^2 image coordinates.
struct VisualPrompt {
  PromptKind kind = PromptKind::point;
  double x = 0.0, y = 0.0;              // point
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;  // box, x0 < x1 and y0 < y1
  std::vector<std::pair<double, double>> points;  // scribble, >= 2 vertices

  static VisualPrompt make_point(double x, double y);
  static VisualPrompt make_box(double x0, double y0, double x1, double y1);
  static VisualPrompt make_scribble(std::vector<std::pair<double, double>> pts);

  void validate() const;
};

// One rewrite step. Indices address the prompt list as it stands when the op
// runs; combine removes its members and appends the merged box, so later ops
// see the updated list. The merge target is always a box.
struct TransformOp {
  enum class Kind { combine, convert };
  Kind kind = Kind::combine;
  std::vector<int> members;  // combine: >= 2 distinct indices
  int index = -1;            // convert: a point or scribble (boxes cannot convert)

  std::string describe() const;
};

struct TransformStrategy {
  std::vector<TransformOp> ops;  // empty = identity

  std::string describe() const;
  // Stable 16-hex-digit id of the canonical description.
  std::string id() const;
};

std::vector<VisualPrompt> apply_strategy(const std::vector<VisualPrompt>& prompts,
                                         const TransformStrategy& s, double pad);

// Empirical joint histogram of the discretized prompt variable X (rows) and
// the output variable Y (columns).
struct EmpiricalJoint {
  std::vector<std::vector<std::int64_t>> counts;

  std::int64_t total() const;
  void validate() const;
};

// Plug-in entropy in bits of a normalized distribution (0·log 0 = 0).
double entropy(const std::vector<double>& dist);

// I(X;Y) = H(X) + H(Y) - H(X,Y), clamped to >= 0 against rounding.
double mutual_information(const EmpiricalJoint& j);

// The contribution score of a prompt set is the mutual information of its
// induced joint; an empty prompt set contributes nothing.
double contribution_score(const std::vector<VisualPrompt>& prompts, const EmpiricalJoint& j);

// Synthetic promptable-segmentation task on a discrete grid: a ground-truth
// cell region, a raw prompt set, and a decoder latency model that pays a
// fixed base plus a per-prompt decode cost.
struct GridScenario {
  int grid_w = 0;
  int grid_h = 0;
  std::set<int> truth_cells;  // row-major cell indices
  std::vector<VisualPrompt> prompts;
  double decoder_base_ms = 0.0;
  double decoder_ms_per_prompt = 0.0;
  double pad = 0.05;  // box expansion used by combine/convert

  void validate() const;
  int cell_of(double x, double y) const;
};

// Cells a prompt set selects: a point marks its containing cell, a box marks
// cells whose centers it covers, a scribble marks the cells of its vertices.
std::set<int> implied_region(const GridScenario& sc, const std::vector<VisualPrompt>& prompts);

// Intersection-over-union of the implied region with the ground truth.
double region_accuracy(const GridScenario& sc, const std::vector<VisualPrompt>& prompts);

// Joint over X = grid cell (one sample per cell) and Y = predicted in/out
// label of that cell under the implied region.
EmpiricalJoint scenario_joint(const GridScenario& sc, const std::vector<VisualPrompt>& prompts);

double decoder_latency_ms(const GridScenario& sc, std::size_t prompt_count);

struct StrategyEntry {
  double accuracy = 0.0;          // fraction in [0, 1]
  double latency_ms = 0.0;
  double contribution_bits = 0.0;
};

// Keyed by strategy id; std::map keeps persisted and iterated order stable.
using StrategyProfile = std::map<std::string, StrategyEntry>;

struct OfflineOptions {
  bool allow_combine = true;
  bool allow_convert = true;
};

// Profile plus the sampled strategies behind each entry (ids alone cannot be
// replayed; the persisted file keeps only the metrics).
struct OfflineProfile {
  StrategyProfile entries;
  std::map<std::string, TransformStrategy> strategies;
  std::map<std::string, int> prompt_counts;
};

// Random-search profiling: samples `budget` strategies against the evolving
// prompt set, scoring each with the accuracy surrogate, the decoder latency
// model, and the contribution score. Deterministic for a fixed seed.
OfflineProfile offline_profile(const GridScenario& sc, int budget, std::uint64_t seed,
                               const OfflineOptions& opts = {});

// Highest contribution-per-millisecond entry within the latency budget; ties
// break toward lower latency, then lexicographically smaller id. Throws
// InfeasibleError when nothing fits.
std::string online_select(const StrategyProfile& profile, double latency_budget_ms);

// Deterministic demo task: a centered rectangular truth region with random
// point prompts inside it.
GridScenario synth_grid_scenario(int n_points, int grid_w, int grid_h, std::uint64_t seed,
                                 double decoder_base_ms, double decoder_ms_per_prompt);

GridScenario load_scenario_file(const std::string& path);
GridScenario scenario_from_json(const std::string& json_text);
std::string scenario_to_json(const GridScenario& sc);

void save_strategy_profile(const StrategyProfile& profile, const std::string& path);
StrategyProfile load_strategy_profile(const std::string& path);

}  // namespace samedge
