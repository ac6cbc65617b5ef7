#include "samedge/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

namespace samedge {

using ordered_json = nlohmann::ordered_json;

std::string policy_name(Policy p) {
  switch (p) {
    case Policy::samedge: return "samedge";
    case Policy::samedge_wot: return "samedge-wot";
    case Policy::vanilla: return "vanilla";
    case Policy::mcs: return "mcs";
    case Policy::srs: return "srs";
  }
  throw Error(ExitCode::internal, "bad policy");
}

Policy parse_policy(const std::string& s) {
  if (s == "samedge") return Policy::samedge;
  if (s == "samedge-wot") return Policy::samedge_wot;
  if (s == "vanilla") return Policy::vanilla;
  if (s == "mcs") return Policy::mcs;
  if (s == "srs") return Policy::srs;
  throw Error(ExitCode::config,
              "unknown policy '" + s + "' (known: samedge, samedge-wot, vanilla, mcs, srs)");
}

void PolicyParams::validate_for(Policy p, const SEROInstance& inst) const {
  if (p == Policy::mcs) {
    if (!(mcs_compute_factor > 0.0))
      throw ValidationError("mcs compute factor must be positive");
    if (mcs_accuracy < 0.0 || mcs_accuracy > 1.0)
      throw ValidationError("mcs accuracy outside [0, 1]");
  }
  if (p == Policy::srs) {
    for (const auto& r : inst.video_encoder.resolutions) {
      auto it = srs_accuracy.find(r.label);
      if (it == srs_accuracy.end())
        throw ValidationError("srs accuracy table missing resolution '" + r.label + "'");
      if (it->second < 0.0 || it->second > 1.0)
        throw ValidationError("srs accuracy outside [0, 1] at '" + r.label + "'");
    }
  }
}

namespace {

struct BranchSpec {
  const LayerGraph* g = nullptr;
  std::string res;
  Partition part;
  double return_bytes = 0.0;
};

double edge_ms_of(const BranchSpec& b) {
  double ms = 0.0;
  for (int id : b.part.edge_side) ms += b.g->node(id).edge_ms.at(b.res);
  return ms;
}

double cloud_ms_of(const BranchSpec& b) {
  double ms = 0.0;
  for (int id : b.part.cloud_side) ms += b.g->node(id).cloud_ms.at(b.res);
  return ms;
}

// Event replay of one query. Edge compute of the two branches runs in
// parallel (separate encoders); the shared link serializes same-direction
// transfers with the video branch first; the decoder waits for both
// embeddings.
RunReport replay(const SEROInstance& inst, const BranchSpec& video, const BranchSpec& prompt,
                 int decoder_prompts, const BandwidthTrace& trace) {
  RunReport rep;
  auto add = [&](const char* stage, double start, double end) {
    if (end > start) rep.events.push_back({stage, start, end});
  };

  double v_edge_end = edge_ms_of(video);
  double p_edge_end = edge_ms_of(prompt);
  add("video.edge_compute", 0.0, v_edge_end);
  add("prompt.edge_compute", 0.0, p_edge_end);

  double v_payload = cut_payload_bytes(*video.g, video.part, video.res);
  double p_payload = cut_payload_bytes(*prompt.g, prompt.part, prompt.res);
  double v_up_end = v_edge_end;
  if (v_payload > 0.0) {
    v_up_end = trace.finish_time_ms(v_edge_end, v_payload);
    add("video.uplink", v_edge_end, v_up_end);
  }
  double p_up_end = p_edge_end;
  if (p_payload > 0.0) {
    double start = v_payload > 0.0 ? std::max(p_edge_end, v_up_end) : p_edge_end;
    p_up_end = trace.finish_time_ms(start, p_payload);
    add("prompt.uplink", start, p_up_end);
  }

  double v_cloud_end = v_up_end + cloud_ms_of(video);
  add("video.cloud_compute", v_up_end, v_cloud_end);
  double p_cloud_end = p_up_end + cloud_ms_of(prompt);
  add("prompt.cloud_compute", p_up_end, p_cloud_end);

  bool v_dl = !video.part.cloud_side.empty() && video.return_bytes > 0.0;
  bool p_dl = !prompt.part.cloud_side.empty() && prompt.return_bytes > 0.0;
  double v_ready = v_cloud_end;
  if (v_dl) {
    v_ready = trace.finish_time_ms(v_cloud_end, video.return_bytes);
    add("video.downlink", v_cloud_end, v_ready);
  }
  double p_ready = p_cloud_end;
  if (p_dl) {
    double start = v_dl ? std::max(p_cloud_end, v_ready) : p_cloud_end;
    p_ready = trace.finish_time_ms(start, prompt.return_bytes);
    add("prompt.downlink", start, p_ready);
  }

  double decoder_start = std::max(v_ready, p_ready);
  double decoder_end = decoder_start + inst.decoder_ms_per_prompt * decoder_prompts;
  add("decoder", decoder_start, decoder_end);

  rep.latency_ms = decoder_end;
  rep.video_res = video.res;
  rep.prompt_res = prompt.res;
  rep.planned_video_split = video.part.split_index();
  rep.planned_prompt_split = prompt.part.split_index();
  return rep;
}

RunReport run_samedge(const SEROInstance& inst, const BandwidthTrace& trace, bool transform) {
  SEROInstance planned = inst;
  if (!transform) planned.prompt_count = inst.raw_prompt_count;
  SEROPlan sp = plan_under_trace(planned, trace, 0.0);
  BranchSpec video{&inst.video_encoder, sp.video.res, sp.video.partition,
                   inst.video_return_bytes.at(sp.video.res)};
  BranchSpec prompt{&inst.prompt_encoder, sp.prompt.res, sp.prompt.partition,
                    inst.prompt_return_bytes.at(sp.prompt.res)};
  RunReport rep = replay(inst, video, prompt, planned.prompt_count, trace);
  rep.accuracy = sp.predicted_accuracy;
  return rep;
}

RunReport run_descending(Policy policy, const SEROInstance& inst, const PolicyParams& params,
                         const BandwidthTrace& trace) {
  const auto& vres = inst.video_encoder.resolutions;
  const auto& pres = inst.prompt_encoder.resolutions;
  int steps = static_cast<int>(std::max(vres.size(), pres.size()));
  double min_achievable = std::numeric_limits<double>::infinity();
  for (int k = 0; k < steps; ++k) {
    int vi = std::max(0, static_cast<int>(vres.size()) - 1 - k);
    int pi = std::max(0, static_cast<int>(pres.size()) - 1 - k);
    BranchSpec video{&inst.video_encoder, vres[vi].label,
                     all_cloud_partition(inst.video_encoder),
                     inst.video_return_bytes.at(vres[vi].label)};
    BranchSpec prompt{&inst.prompt_encoder, pres[pi].label,
                      all_cloud_partition(inst.prompt_encoder),
                      inst.prompt_return_bytes.at(pres[pi].label)};
    RunReport rep;
    try {
      rep = replay(inst, video, prompt, inst.raw_prompt_count, trace);
    } catch (const TraceError&) {
      continue;  // transfers outlive the trace; certainly over budget
    }
    min_achievable = std::min(min_achievable, rep.latency_ms);
    if (rep.latency_ms <= inst.latency_budget_ms) {
      rep.accuracy = policy == Policy::srs ? params.srs_accuracy.at(vres[vi].label)
                                           : inst.accuracy_at(vres[vi].label, pres[pi].label);
      return rep;
    }
  }
  if (!std::isfinite(min_achievable)) min_achievable = trace.horizon_ms();
  throw InfeasibleError(policy_name(policy) +
                            " misses the latency budget at every resolution step",
                        min_achievable);
}

RunReport run_mcs(const SEROInstance& inst, const PolicyParams& params) {
  const std::string vfull = inst.video_encoder.resolutions.back().label;
  const std::string pfull = inst.prompt_encoder.resolutions.back().label;
  double v_ms = inst.video_encoder.total_edge_ms(vfull) * params.mcs_compute_factor;
  double p_ms = inst.prompt_encoder.total_edge_ms(pfull) * params.mcs_compute_factor;
  double decoder_ms = inst.decoder_ms_per_prompt * inst.raw_prompt_count;
  double total = std::max(v_ms, p_ms) + decoder_ms;
  if (total > inst.latency_budget_ms)
    throw InfeasibleError("mcs misses the latency budget (no degradation mechanism)", total);
  RunReport rep;
  if (v_ms > 0.0) rep.events.push_back({"video.edge_compute", 0.0, v_ms});
  if (p_ms > 0.0) rep.events.push_back({"prompt.edge_compute", 0.0, p_ms});
  if (decoder_ms > 0.0)
    rep.events.push_back({"decoder", std::max(v_ms, p_ms), total});
  rep.latency_ms = total;
  rep.accuracy = params.mcs_accuracy;
  rep.video_res = vfull;
  rep.prompt_res = pfull;
  rep.planned_video_split = static_cast<int>(inst.video_encoder.real_layer_count());
  rep.planned_prompt_split = static_cast<int>(inst.prompt_encoder.real_layer_count());
  return rep;
}

}  // namespace

RunReport simulate(Policy policy, const SEROInstance& inst, const PolicyParams& params,
                   const BandwidthTrace& trace, std::uint64_t seed,
                   const std::string& network_class) {
  inst.validate();
  params.validate_for(policy, inst);
  RunReport rep;
  switch (policy) {
    case Policy::samedge: rep = run_samedge(inst, trace, true); break;
    case Policy::samedge_wot: rep = run_samedge(inst, trace, false); break;
    case Policy::vanilla:
    case Policy::srs: rep = run_descending(policy, inst, params, trace); break;
    case Policy::mcs: rep = run_mcs(inst, params); break;
  }
  rep.policy = policy_name(policy);
  rep.network_class = network_class;
  rep.seed = seed;
  return rep;
}

SweepResult sweep(const SEROInstance& inst, const PolicyParams& params,
                  const std::vector<Policy>& policies, const std::vector<std::string>& classes,
                  const std::vector<std::uint64_t>& seeds, const SweepOptions& opts) {
  if (policies.empty() || classes.empty() || seeds.empty())
    throw Error(ExitCode::config, "sweep needs at least one policy, class, and seed");
  double duration = opts.duration_ms > 0.0 ? opts.duration_ms : 2.0 * inst.latency_budget_ms;
  SweepResult result;
  for (Policy policy : policies) {
    for (const auto& cls : classes) {
      double lat_sum = 0.0, acc_sum = 0.0;
      for (std::uint64_t seed : seeds) {
        BandwidthTrace trace = synth_class_trace(cls, duration, seed, opts.sigma, opts.segment_ms);
        RunReport rep = simulate(policy, inst, params, trace, seed, cls);
        result.rows.push_back({rep.policy, cls, seed, rep.latency_ms, rep.accuracy,
                               rep.planned_video_split, rep.planned_prompt_split});
        lat_sum += rep.latency_ms;
        acc_sum += rep.accuracy;
      }
      result.summary.push_back({policy_name(policy), cls,
                                lat_sum / static_cast<double>(seeds.size()),
                                acc_sum / static_cast<double>(seeds.size())});
    }
  }
  return result;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ExitCode::config, "cannot open instance file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  auto pos = path.find_last_of('/');
  std::string dir = pos == std::string::npos ? std::string(".") : path.substr(0, pos);
  PipelineConfig cfg;
  cfg.instance = instance_from_json_text(text, dir);
  try {
    auto doc = nlohmann::json::parse(text);
    if (doc.contains("policies")) {
      const auto& pj = doc.at("policies");
      if (pj.contains("mcs_compute_factor"))
        cfg.policies.mcs_compute_factor = pj.at("mcs_compute_factor").get<double>();
      if (pj.contains("mcs_accuracy"))
        cfg.policies.mcs_accuracy = pj.at("mcs_accuracy").get<double>();
      if (pj.contains("srs_accuracy"))
        for (auto it = pj.at("srs_accuracy").begin(); it != pj.at("srs_accuracy").end(); ++it)
          cfg.policies.srs_accuracy[it.key()] = it.value().get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": bad policies block: " + e.what());
  }
  return cfg;
}

std::string sweep_csv(const SweepResult& result, const ordered_json& config_echo) {
  std::ostringstream os;
  os << "# " << kToolName << " sweep report, tool version " << kToolVersion << "\n";
  os << "# config " << config_echo.dump() << "\n";
  os << "policy,class,seed,latency_ms,accuracy,planned_video_split,planned_prompt_split\n";
  for (const auto& r : result.rows) {
    os << r.policy << "," << r.network_class << "," << r.seed << ","
       << format_compact(r.latency_ms) << "," << format_compact(r.accuracy) << ","
       << r.planned_video_split << "," << r.planned_prompt_split << "\n";
  }
  for (const auto& s : result.summary) {
    os << "# mean policy=" << s.policy << " class=" << s.network_class
       << " latency_ms=" << format_compact(s.mean_latency_ms)
       << " accuracy=" << format_compact(s.mean_accuracy) << "\n";
  }
  return os.str();
}

std::string sweep_chart_svg(const SweepResult& result, const std::vector<std::string>& classes) {
  const int width = 640, height = 400;
  const double left = 60, right = 610, top = 30, bottom = 360;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  std::vector<std::string> policies;
  for (const auto& s : result.summary)
    if (std::find(policies.begin(), policies.end(), s.policy) == policies.end())
      policies.push_back(s.policy);

  auto x_of = [&](std::size_t i) {
    if (classes.size() <= 1) return (left + right) / 2.0;
    return left + (right - left) * static_cast<double>(i) / (classes.size() - 1);
  };
  auto y_of = [&](double acc) { return bottom - (bottom - top) * acc; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  os << "  <rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  os << "  <line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\""
     << bottom << "\" stroke=\"black\"/>\n";
  os << "  <line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
     << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 5; ++tick) {
    double acc = tick / 5.0;
    os << "  <text x=\"" << left - 8 << "\" y=\"" << y_of(acc) + 4
       << "\" font-size=\"11\" text-anchor=\"end\">" << format_compact(acc) << "</text>\n";
  }
  for (std::size_t i = 0; i < classes.size(); ++i) {
    os << "  <text x=\"" << x_of(i) << "\" y=\"" << bottom + 18
       << "\" font-size=\"11\" text-anchor=\"middle\">" << classes[i] << "</text>\n";
  }
  os << "  <text x=\"" << (left + right) / 2 << "\" y=\"" << bottom + 36
     << "\" font-size=\"12\" text-anchor=\"middle\">network class</text>\n";
  os << "  <text x=\"14\" y=\"" << (top + bottom) / 2
     << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
     << (top + bottom) / 2 << ")\">accuracy</text>\n";
  for (std::size_t pi = 0; pi < policies.size(); ++pi) {
    const char* color = kColors[pi % 5];
    os << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (std::size_t ci = 0; ci < classes.size(); ++ci) {
      for (const auto& s : result.summary) {
        if (s.policy != policies[pi] || s.network_class != classes[ci]) continue;
        os << (first ? "" : " ") << format_compact(x_of(ci)) << ","
           << format_compact(y_of(s.mean_accuracy));
        first = false;
      }
    }
    os << "\"/>\n";
    os << "  <text x=\"" << right - 90 << "\" y=\"" << top + 16 * (pi + 1)
       << "\" font-size=\"11\" fill=\"" << color << "\">" << policies[pi] << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

ordered_json report_json(const RunReport& report) {
  ordered_json rj;
  rj["policy"] = report.policy;
  rj["network_class"] = report.network_class;
  rj["seed"] = report.seed;
  rj["latency_ms"] = report.latency_ms;
  rj["accuracy"] = report.accuracy;
  rj["video"] = {{"resolution", report.video_res},
                 {"planned_split", report.planned_video_split}};
  rj["prompt"] = {{"resolution", report.prompt_res},
                  {"planned_split", report.planned_prompt_split}};
  auto events = ordered_json::array();
  for (const auto& e : report.events)
    events.push_back({{"stage", e.stage}, {"start_ms", e.start_ms}, {"end_ms", e.end_ms}});
  rj["events"] = events;
  return rj;
}

}  // namespace samedge
