#include "samedge/sero.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace samedge {

using ordered_json = nlohmann::ordered_json;

void SEROInstance::validate() const {
  video_encoder.validate();
  prompt_encoder.validate();
  if (!(latency_budget_ms > 0.0)) throw ValidationError("latency budget must be positive");
  if (decoder_ms_per_prompt < 0.0)
    throw ValidationError("per-prompt decoder latency must be non-negative");
  if (prompt_count < 0) throw ValidationError("prompt count must be non-negative");
  if (raw_prompt_count < prompt_count)
    throw ValidationError("transformation cannot increase the prompt count (raw " +
                          std::to_string(raw_prompt_count) + " < transformed " +
                          std::to_string(prompt_count) + ")");
  auto check_returns = [](const LayerGraph& g, const std::map<std::string, double>& ret,
                          const char* which) {
    for (const auto& r : g.resolutions) {
      auto it = ret.find(r.label);
      if (it == ret.end())
        throw ValidationError(std::string(which) + " return payload missing for resolution '" +
                              r.label + "'");
      if (it->second < 0.0)
        throw ValidationError(std::string(which) + " return payload negative at '" + r.label +
                              "'");
    }
  };
  check_returns(video_encoder, video_return_bytes, "video");
  check_returns(prompt_encoder, prompt_return_bytes, "prompt");

  double prev_row_acc = -1.0;
  for (const auto& vres : video_encoder.resolutions) {
    auto row = accuracy_table.find(vres.label);
    if (row == accuracy_table.end())
      throw ValidationError("accuracy table missing video resolution '" + vres.label + "'");
    double prev = -1.0;
    for (const auto& pres : prompt_encoder.resolutions) {
      auto cell = row->second.find(pres.label);
      if (cell == row->second.end())
        throw ValidationError("accuracy table missing entry (" + vres.label + ", " + pres.label +
                              ")");
      double acc = cell->second;
      if (acc < 0.0 || acc > 1.0)
        throw ValidationError("accuracy (" + vres.label + ", " + pres.label + ") outside [0, 1]");
      if (acc < prev)
        throw ValidationError("accuracy must be non-decreasing in prompt resolution at (" +
                              vres.label + ", " + pres.label + ")");
      prev = acc;
    }
    // Monotonicity in the video coordinate, checked on the first column.
    double first = row->second.at(prompt_encoder.resolutions.front().label);
    if (first < prev_row_acc)
      throw ValidationError("accuracy must be non-decreasing in video resolution at '" +
                            vres.label + "'");
    prev_row_acc = first;
  }
  // Full column-wise monotonicity (the row check above only covers column 0).
  for (const auto& pres : prompt_encoder.resolutions) {
    double prev = -1.0;
    for (const auto& vres : video_encoder.resolutions) {
      double acc = accuracy_table.at(vres.label).at(pres.label);
      if (acc < prev)
        throw ValidationError("accuracy must be non-decreasing in video resolution at (" +
                              vres.label + ", " + pres.label + ")");
      prev = acc;
    }
  }
}

double SEROInstance::accuracy_at(const std::string& video_res,
                                 const std::string& prompt_res) const {
  auto row = accuracy_table.find(video_res);
  if (row == accuracy_table.end() || !row->second.count(prompt_res))
    throw ValidationError("accuracy table missing entry (" + video_res + ", " + prompt_res + ")");
  return row->second.at(prompt_res);
}

namespace {

void check_partition(const LayerGraph& g, const Partition& p) {
  std::size_t covered = 0;
  for (const auto& n : g.nodes) {
    if (g.is_virtual(n.id)) continue;
    bool on_edge = p.edge_side.count(n.id) > 0;
    bool on_cloud = p.cloud_side.count(n.id) > 0;
    if (on_edge == on_cloud)
      throw ValidationError("partition must place layer " + std::to_string(n.id) +
                            " on exactly one side");
    ++covered;
  }
  if (covered != p.edge_side.size() + p.cloud_side.size())
    throw ValidationError("partition names layers outside the graph");
  for (auto [u, v] : g.edges) {
    if (u == g.entry_id || v == g.exit_id) continue;
    if (p.edge_side.count(v) && p.cloud_side.count(u))
      throw ValidationError("partition is not ancestor-closed: layer " + std::to_string(v) +
                            " runs on the edge below cloud layer " + std::to_string(u));
  }
}

struct ComputeSplit {
  double edge_ms = 0.0;
  double cloud_ms = 0.0;
};

ComputeSplit compute_split(const LayerGraph& g, const Partition& p, const std::string& res) {
  ComputeSplit c;
  for (int id : p.edge_side) c.edge_ms += g.node(id).edge_ms.at(res);
  for (int id : p.cloud_side) c.cloud_ms += g.node(id).cloud_ms.at(res);
  return c;
}

}  // namespace

double cut_payload_bytes(const LayerGraph& g, const Partition& p, const std::string& res) {
  double bytes = 0.0;
  for (auto [u, v] : g.edges) {
    if (v == g.exit_id || !p.cloud_side.count(v)) continue;
    if (u == g.entry_id)
      bytes += g.input_bytes_at(res);
    else if (p.edge_side.count(u))
      bytes += g.node(u).output_bytes.at(res);
  }
  return bytes;
}

Partition all_edge_partition(const LayerGraph& g, const std::string& res) {
  Partition p;
  for (const auto& n : g.nodes)
    if (!g.is_virtual(n.id)) p.edge_side.insert(n.id);
  p.objective_ms = 0.0;
  for (int id : p.edge_side) p.objective_ms += g.node(id).edge_ms.at(res);
  return p;
}

Partition all_cloud_partition(const LayerGraph& g) {
  Partition p;
  for (const auto& n : g.nodes)
    if (!g.is_virtual(n.id)) p.cloud_side.insert(n.id);
  return p;
}

LatencyBreakdown branch_latency(const LayerGraph& g, const Partition& p, const std::string& res,
                                double bw_mbps, double return_bytes) {
  if (!(bw_mbps > 0.0)) throw Error(ExitCode::config, "bandwidth must be positive");
  check_partition(g, p);
  ComputeSplit c = compute_split(g, p, res);
  LatencyBreakdown b;
  b.edge_compute_ms = c.edge_ms;
  b.cloud_compute_ms = c.cloud_ms;
  b.uplink_ms = transmission_time_ms(cut_payload_bytes(g, p, res), bw_mbps);
  b.downlink_ms = p.cloud_side.empty() ? 0.0 : transmission_time_ms(return_bytes, bw_mbps);
  b.total_ms = b.edge_compute_ms + b.uplink_ms + b.cloud_compute_ms + b.downlink_ms;
  return b;
}

LatencyBreakdown branch_latency_over_trace(const LayerGraph& g, const Partition& p,
                                           const std::string& res, const BandwidthTrace& trace,
                                           double t0_ms, double return_bytes) {
  check_partition(g, p);
  ComputeSplit c = compute_split(g, p, res);
  LatencyBreakdown b;
  b.edge_compute_ms = c.edge_ms;
  b.cloud_compute_ms = c.cloud_ms;
  double up_start = t0_ms + b.edge_compute_ms;
  double up_end = up_start;
  double payload = cut_payload_bytes(g, p, res);
  if (payload > 0.0) up_end = trace.finish_time_ms(up_start, payload);
  b.uplink_ms = up_end - up_start;
  double cloud_end = up_end + b.cloud_compute_ms;
  double down_end = cloud_end;
  if (!p.cloud_side.empty() && return_bytes > 0.0)
    down_end = trace.finish_time_ms(cloud_end, return_bytes);
  b.downlink_ms = down_end - cloud_end;
  b.total_ms = down_end - t0_ms;
  return b;
}

namespace {

BranchPlan pick_branch(const LayerGraph& g, const std::string& res, Partition all_edge,
                       LatencyBreakdown all_edge_lat, Partition cut, LatencyBreakdown cut_lat) {
  BranchPlan bp;
  bp.res = res;
  bp.res_index = *g.resolution_index(res);
  if (cut_lat.total_ms <= all_edge_lat.total_ms) {  // ties keep the min-cut split
    bp.partition = std::move(cut);
    bp.breakdown = cut_lat;
  } else {
    bp.partition = std::move(all_edge);
    bp.breakdown = all_edge_lat;
  }
  return bp;
}

BranchPlan best_branch_scalar(const LayerGraph& g, const std::string& res, double bw_mbps,
                              double return_bytes) {
  Partition stay = all_edge_partition(g, res);
  Partition cut = min_cut_partition(g, res, bw_mbps);
  return pick_branch(g, res, stay, branch_latency(g, stay, res, bw_mbps, return_bytes),
                     cut, branch_latency(g, cut, res, bw_mbps, return_bytes));
}

BranchPlan best_branch_trace(const LayerGraph& g, const std::string& res,
                             const BandwidthTrace& trace, double t0_ms, double budget_ms,
                             double return_bytes) {
  Partition stay = all_edge_partition(g, res);
  LatencyBreakdown stay_lat = branch_latency_over_trace(g, stay, res, trace, t0_ms, return_bytes);

  // The split decision needs a scalar bandwidth; iterate toward the rate the
  // resulting plan would actually see on the trace. A transfer that outlives
  // the trace makes the split candidate unusable, not the whole branch: keep
  // the all-edge fallback, which never touches the link.
  try {
    double bw_est = trace.bandwidth_at(t0_ms);
    Partition cut;
    LatencyBreakdown cut_lat;
    bool converged = false;
    for (int round = 0; round < 5 && !converged; ++round) {
      cut = min_cut_partition(g, res, bw_est);
      cut_lat = branch_latency_over_trace(g, cut, res, trace, t0_ms, return_bytes);
      double moved_mbits = cut_payload_bytes(g, cut, res) * 8.0 / 1e6;
      if (!cut.cloud_side.empty()) moved_mbits += return_bytes * 8.0 / 1e6;
      double transfer_s = (cut_lat.uplink_ms + cut_lat.downlink_ms) / 1000.0;
      if (transfer_s <= 0.0) {
        converged = true;  // no transmission: the split cannot react to bandwidth
        break;
      }
      double effective = moved_mbits / transfer_s;
      converged = std::abs(effective - bw_est) <= 0.01 * bw_est;
      bw_est = effective;
    }
    if (!converged) {
      // Oscillating estimate: fall back to the worst bandwidth in the window a
      // feasible plan could occupy, so the chosen split never overcommits.
      bw_est = trace.min_mbps(t0_ms, t0_ms + budget_ms);
      cut = min_cut_partition(g, res, bw_est);
      cut_lat = branch_latency_over_trace(g, cut, res, trace, t0_ms, return_bytes);
    }
    return pick_branch(g, res, stay, stay_lat, cut, cut_lat);
  } catch (const TraceError&) {
    BranchPlan bp;
    bp.res = res;
    bp.res_index = *g.resolution_index(res);
    bp.partition = std::move(stay);
    bp.breakdown = stay_lat;
    return bp;
  }
}

template <typename BranchFn>
SEROPlan plan_generic(const SEROInstance& inst, BranchFn best_branch) {
  inst.validate();
  double decoder_ms = inst.decoder_ms_per_prompt * inst.prompt_count;

  std::map<std::string, BranchPlan> video_best, prompt_best;
  for (const auto& r : inst.video_encoder.resolutions)
    video_best[r.label] =
        best_branch(inst.video_encoder, r.label, inst.video_return_bytes.at(r.label));
  for (const auto& r : inst.prompt_encoder.resolutions)
    prompt_best[r.label] =
        best_branch(inst.prompt_encoder, r.label, inst.prompt_return_bytes.at(r.label));

  const SEROPlan* best = nullptr;
  SEROPlan best_plan;
  double min_total = std::numeric_limits<double>::infinity();
  for (const auto& vres : inst.video_encoder.resolutions) {
    for (const auto& pres : inst.prompt_encoder.resolutions) {
      const BranchPlan& v = video_best.at(vres.label);
      const BranchPlan& p = prompt_best.at(pres.label);
      double total = std::max(v.breakdown.total_ms, p.breakdown.total_ms) + decoder_ms;
      min_total = std::min(min_total, total);
      if (total > inst.latency_budget_ms) continue;
      double acc = inst.accuracy_at(vres.label, pres.label);
      bool better = !best;
      if (best) {
        if (acc != best_plan.predicted_accuracy) {
          better = acc > best_plan.predicted_accuracy;
        } else if (total != best_plan.predicted_latency_ms) {
          better = total < best_plan.predicted_latency_ms;
        } else if (v.res_index != best_plan.video.res_index) {
          better = v.res_index < best_plan.video.res_index;
        } else {
          better = p.res_index < best_plan.prompt.res_index;
        }
      }
      if (!better) continue;
      SEROPlan cand;
      cand.video = v;
      cand.prompt = p;
      const LatencyBreakdown& critical =
          v.breakdown.total_ms >= p.breakdown.total_ms ? v.breakdown : p.breakdown;
      cand.summary = critical;
      cand.summary.decoder_ms = decoder_ms;
      cand.summary.total_ms = critical.total_ms + decoder_ms;
      cand.predicted_latency_ms = total;
      cand.predicted_accuracy = acc;
      best_plan = std::move(cand);
      best = &best_plan;
    }
  }
  if (!best)
    throw InfeasibleError("no resolution/split configuration meets the latency budget of " +
                              std::to_string(inst.latency_budget_ms) + " ms",
                          min_total);
  return best_plan;
}

}  // namespace

SEROPlan plan(const SEROInstance& inst) {
  return plan_generic(inst, [&](const LayerGraph& g, const std::string& res, double ret_bytes) {
    return best_branch_scalar(g, res, inst.bandwidth_mbps, ret_bytes);
  });
}

SEROPlan plan_under_trace(const SEROInstance& inst, const BandwidthTrace& trace, double t0_ms) {
  if (t0_ms < 0.0) throw Error(ExitCode::config, "plan start time must be non-negative");
  if (t0_ms + inst.latency_budget_ms > trace.horizon_ms() + 1e-9)
    throw TraceError("trace covers only " + std::to_string(trace.horizon_ms()) +
                     " ms, but planning at " + std::to_string(t0_ms) + " ms needs " +
                     std::to_string(t0_ms + inst.latency_budget_ms) + " ms");
  return plan_generic(inst, [&](const LayerGraph& g, const std::string& res, double ret_bytes) {
    return best_branch_trace(g, res, trace, t0_ms, inst.latency_budget_ms, ret_bytes);
  });
}

namespace {

std::string dirname_of(const std::string& path) {
  auto pos = path.find_last_of('/');
  return pos == std::string::npos ? std::string(".") : path.substr(0, pos);
}

std::string join_path(const std::string& base, const std::string& rel) {
  if (rel.empty() || rel.front() == '/') return rel;
  return base + "/" + rel;
}

std::map<std::string, double> bytes_map_from_json(const nlohmann::json& doc, const char* key) {
  std::map<std::string, double> out;
  for (auto it = doc.at(key).begin(); it != doc.at(key).end(); ++it)
    out[it.key()] = it.value().get<double>();
  return out;
}

}  // namespace

SEROInstance instance_from_json_text(const std::string& json_text, const std::string& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad instance document: ") + e.what());
  }
  try {
    SEROInstance inst;
    inst.video_encoder =
        load_profile_file(join_path(base_dir, doc.at("video_profile").get<std::string>()));
    inst.prompt_encoder =
        load_profile_file(join_path(base_dir, doc.at("prompt_profile").get<std::string>()));
    inst.latency_budget_ms = doc.at("latency_budget_ms").get<double>();
    inst.decoder_ms_per_prompt = doc.at("decoder_ms_per_prompt").get<double>();
    inst.prompt_count = doc.at("prompt_count").get<int>();
    inst.raw_prompt_count =
        doc.contains("raw_prompt_count") ? doc.at("raw_prompt_count").get<int>() : inst.prompt_count;
    if (doc.contains("bandwidth_mbps")) inst.bandwidth_mbps = doc.at("bandwidth_mbps").get<double>();
    inst.video_return_bytes = bytes_map_from_json(doc, "video_return_bytes");
    inst.prompt_return_bytes = bytes_map_from_json(doc, "prompt_return_bytes");
    const auto& table = doc.at("accuracy_table");
    for (auto row = table.begin(); row != table.end(); ++row)
      for (auto cell = row.value().begin(); cell != row.value().end(); ++cell)
        inst.accuracy_table[row.key()][cell.key()] = cell.value().get<double>();
    inst.validate();
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad instance document: ") + e.what());
  }
}

SEROInstance load_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ExitCode::config, "cannot open instance file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return instance_from_json_text(buf.str(), dirname_of(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

ordered_json partition_json(const Partition& p) {
  ordered_json pj;
  pj["edge_side"] = p.edge_side;
  pj["cloud_side"] = p.cloud_side;
  auto arcs = ordered_json::array();
  for (const auto& a : p.cut_arcs)
    arcs.push_back({{"from", a.from}, {"to", a.to}, {"capacity_ms", a.capacity_ms}});
  pj["cut_arcs"] = arcs;
  pj["objective_ms"] = p.objective_ms;
  return pj;
}

ordered_json breakdown_json(const LatencyBreakdown& b) {
  return {{"edge_compute_ms", b.edge_compute_ms},
          {"uplink_ms", b.uplink_ms},
          {"cloud_compute_ms", b.cloud_compute_ms},
          {"downlink_ms", b.downlink_ms},
          {"decoder_ms", b.decoder_ms},
          {"total_ms", b.total_ms}};
}

ordered_json plan_json(const SEROPlan& plan) {
  ordered_json pj;
  auto branch = [](const BranchPlan& b) {
    ordered_json bj;
    bj["resolution"] = b.res;
    bj["partition"] = partition_json(b.partition);
    bj["latency"] = breakdown_json(b.breakdown);
    return bj;
  };
  pj["video"] = branch(plan.video);
  pj["prompt"] = branch(plan.prompt);
  pj["summary"] = breakdown_json(plan.summary);
  pj["predicted_latency_ms"] = plan.predicted_latency_ms;
  pj["predicted_accuracy"] = plan.predicted_accuracy;
  return pj;
}

}  // namespace samedge
