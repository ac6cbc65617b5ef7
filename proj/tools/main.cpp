// samedge: planner and simulator for edge/cloud split execution of
// promptable-segmentation pipelines. See README.md for the file formats.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "samedge/common.hpp"
#include "samedge/layer_graph.hpp"
#include "samedge/mincut.hpp"
#include "samedge/netsim.hpp"
#include "samedge/pipeline.hpp"
#include "samedge/prompt_transform.hpp"
#include "samedge/sero.hpp"

namespace {

using namespace samedge;
using ordered_json = nlohmann::ordered_json;

// Missing relative paths fall back to the fixture directory so packaged
// fixtures work from any working directory.
std::string resolve_input(const std::string& path) {
  namespace fs = std::filesystem;
  if (path.empty() || fs::exists(path) || fs::path(path).is_absolute()) return path;
  if (const char* dir = std::getenv("SAMEDGE_FIXTURE_DIR")) {
    fs::path candidate = fs::path(dir) / path;
    if (fs::exists(candidate)) return candidate.string();
  }
  return path;
}

ordered_json tool_header() {
  return {{"name", kToolName}, {"version", kToolVersion}};
}

void write_output(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw Error(ExitCode::config, "cannot write output file '" + out_path + "'");
  out << content;
}

std::string dump_doc(const ordered_json& doc) { return doc.dump(2) + "\n"; }

BandwidthTrace make_trace(const std::string& trace_path, const std::string& net_class,
                          double constant_mbps, double duration_ms, std::uint64_t seed,
                          double sigma, ordered_json& config) {
  if (!trace_path.empty()) {
    config["trace"] = trace_path;
    return load_trace_csv(resolve_input(trace_path));
  }
  if (!net_class.empty()) {
    config["class"] = net_class;
    config["sigma"] = sigma;
    config["duration_ms"] = duration_ms;
    return synth_class_trace(net_class, duration_ms, seed, sigma);
  }
  if (!(constant_mbps > 0.0))
    throw Error(ExitCode::config,
                "no network given: pass --trace, --class, or a positive bandwidth");
  config["bandwidth_mbps"] = constant_mbps;
  config["duration_ms"] = duration_ms;
  return BandwidthTrace::constant(constant_mbps, duration_ms);
}

struct PartitionArgs {
  std::string profile, resolution, out;
  double bandwidth_mbps = 0.0;
  bool brute_force_check = false;
};

int cmd_partition(const PartitionArgs& a) {
  LayerGraph g = load_profile_file(resolve_input(a.profile));
  std::string res = a.resolution.empty() ? g.resolutions.back().label : a.resolution;
  if (!g.resolution_index(res))
    throw Error(ExitCode::config, "undeclared resolution '" + res + "'");
  if (!(a.bandwidth_mbps > 0.0))
    throw Error(ExitCode::config, "bandwidth must be positive");

  Partition part = min_cut_partition(g, res, a.bandwidth_mbps);

  ordered_json doc;
  doc["tool"] = tool_header();
  doc["config"] = {{"profile", a.profile},
                   {"resolution", res},
                   {"bandwidth_mbps", a.bandwidth_mbps},
                   {"brute_force_check", a.brute_force_check}};
  doc["partition"] = partition_json(part);
  if (a.brute_force_check) {
    Partition oracle = brute_force_min_cut(g, res, a.bandwidth_mbps);
    if (ms_to_capacity(oracle.objective_ms) != ms_to_capacity(part.objective_ms) ||
        oracle.edge_side != part.edge_side)
      throw Error(ExitCode::internal,
                  "min-cut result disagrees with exhaustive enumeration (got " +
                      format_compact(part.objective_ms) + " ms, oracle " +
                      format_compact(oracle.objective_ms) + " ms)");
    doc["brute_force_check"] = "passed";
  }
  write_output(a.out, dump_doc(doc));
  return 0;
}

struct PlanArgs {
  std::string instance, trace, net_class, out;
  double bandwidth_mbps = 0.0;  // overrides the instance's scalar link
  double budget_ms = 0.0;
  double sigma = 0.25;
  double duration_ms = 0.0;
  std::uint64_t seed = 1;
};

int cmd_plan(const PlanArgs& a) {
  SEROInstance inst = load_instance_file(resolve_input(a.instance));
  if (a.budget_ms > 0.0) inst.latency_budget_ms = a.budget_ms;
  if (a.bandwidth_mbps > 0.0) inst.bandwidth_mbps = a.bandwidth_mbps;

  ordered_json config = {{"instance", a.instance},
                         {"budget_ms", inst.latency_budget_ms},
                         {"seed", a.seed}};
  SEROPlan sp;
  if (!a.trace.empty() || !a.net_class.empty()) {
    double duration = a.duration_ms > 0.0 ? a.duration_ms : 2.0 * inst.latency_budget_ms;
    BandwidthTrace trace =
        make_trace(a.trace, a.net_class, 0.0, duration, a.seed, a.sigma, config);
    sp = plan_under_trace(inst, trace, 0.0);
  } else {
    config["bandwidth_mbps"] = inst.bandwidth_mbps;
    sp = plan(inst);
  }
  ordered_json doc;
  doc["tool"] = tool_header();
  doc["config"] = config;
  doc["plan"] = plan_json(sp);
  write_output(a.out, dump_doc(doc));
  return 0;
}

struct SimulateArgs {
  std::string instance, policy = "samedge", trace, net_class, out;
  double bandwidth_mbps = 0.0;
  double budget_ms = 0.0;
  double sigma = 0.25;
  double duration_ms = 0.0;
  std::uint64_t seed = 1;
};

int cmd_simulate(const SimulateArgs& a) {
  PipelineConfig cfg = load_pipeline_config(resolve_input(a.instance));
  if (a.budget_ms > 0.0) cfg.instance.latency_budget_ms = a.budget_ms;
  double constant = a.bandwidth_mbps > 0.0 ? a.bandwidth_mbps : cfg.instance.bandwidth_mbps;
  double duration = a.duration_ms > 0.0 ? a.duration_ms : 2.0 * cfg.instance.latency_budget_ms;

  ordered_json config = {{"instance", a.instance},
                         {"policy", a.policy},
                         {"budget_ms", cfg.instance.latency_budget_ms},
                         {"seed", a.seed}};
  BandwidthTrace trace = make_trace(a.trace, a.net_class, constant, duration, a.seed, a.sigma,
                                    config);
  std::string cls = !a.net_class.empty() ? a.net_class
                    : !a.trace.empty()   ? std::string("trace")
                                         : std::string("constant");
  RunReport rep = simulate(parse_policy(a.policy), cfg.instance, cfg.policies, trace, a.seed, cls);

  ordered_json doc;
  doc["tool"] = tool_header();
  doc["config"] = config;
  doc["report"] = report_json(rep);
  write_output(a.out, dump_doc(doc));
  return 0;
}

struct SweepArgs {
  std::string instance, out, chart;
  std::vector<std::string> policies;
  std::vector<std::string> classes;
  std::uint64_t seed = 1;
  int runs = 1;
  double sigma = 0.25;
  double duration_ms = 0.0;
  double budget_ms = 0.0;
};

int cmd_sweep(const SweepArgs& a) {
  PipelineConfig cfg = load_pipeline_config(resolve_input(a.instance));
  if (a.budget_ms > 0.0) cfg.instance.latency_budget_ms = a.budget_ms;
  std::vector<std::string> classes = a.classes;
  if (classes.empty()) classes = {"wired", "5g", "4g-lte", "802.11g", "3g"};
  std::vector<std::string> policy_names =
      a.policies.empty()
          ? std::vector<std::string>{"samedge", "samedge-wot", "vanilla", "mcs", "srs"}
          : a.policies;
  std::vector<Policy> policies;
  for (const auto& name : policy_names) policies.push_back(parse_policy(name));
  if (a.runs < 1) throw Error(ExitCode::config, "--runs must be at least 1");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < a.runs; ++i) seeds.push_back(a.seed + static_cast<std::uint64_t>(i));

  SweepOptions opts;
  opts.sigma = a.sigma;
  opts.duration_ms = a.duration_ms;
  SweepResult result = sweep(cfg.instance, cfg.policies, policies, classes, seeds, opts);

  ordered_json config = {{"instance", a.instance}, {"policies", policy_names},
                         {"classes", classes},     {"seed", a.seed},
                         {"runs", a.runs},         {"sigma", a.sigma},
                         {"budget_ms", cfg.instance.latency_budget_ms}};
  write_output(a.out, sweep_csv(result, config));
  if (!a.chart.empty()) write_output(a.chart, sweep_chart_svg(result, classes));
  return 0;
}

struct TransformArgs {
  std::string scenario, out, profile_out;
  int iterations = 200;
  double budget_ms = -1.0;
  std::uint64_t seed = 1;
  bool no_combine = false, no_convert = false;
};

int cmd_transform(const TransformArgs& a) {
  GridScenario sc = load_scenario_file(resolve_input(a.scenario));
  OfflineOptions opts;
  opts.allow_combine = !a.no_combine;
  opts.allow_convert = !a.no_convert;
  OfflineProfile prof = offline_profile(sc, a.iterations, a.seed, opts);
  if (!a.profile_out.empty()) save_strategy_profile(prof.entries, a.profile_out);

  ordered_json doc;
  doc["tool"] = tool_header();
  doc["config"] = {{"scenario", a.scenario},
                   {"iterations", a.iterations},
                   {"seed", a.seed},
                   {"budget_ms", a.budget_ms},
                   {"allow_combine", opts.allow_combine},
                   {"allow_convert", opts.allow_convert}};
  doc["strategy_count"] = prof.entries.size();
  ordered_json entries;
  for (const auto& [id, e] : prof.entries) {
    entries[id] = {{"accuracy", e.accuracy},
                   {"latency_ms", e.latency_ms},
                   {"contribution_bits", e.contribution_bits},
                   {"prompt_count", prof.prompt_counts.at(id)},
                   {"ops", prof.strategies.at(id).describe()}};
  }
  doc["profile"] = entries;
  if (a.budget_ms >= 0.0) {
    std::string id = online_select(prof.entries, a.budget_ms);
    const StrategyEntry& e = prof.entries.at(id);
    doc["selected"] = {{"id", id},
                       {"accuracy", e.accuracy},
                       {"latency_ms", e.latency_ms},
                       {"contribution_bits", e.contribution_bits},
                       {"prompt_count", prof.prompt_counts.at(id)},
                       {"ops", prof.strategies.at(id).describe()}};
  }
  write_output(a.out, dump_doc(doc));
  return 0;
}

struct SynthProfileArgs {
  std::string shape = "chain", out;
  int layers = 12;
  std::uint64_t seed = 1;
  double cloud_speedup = 10.0;
  double base_layer_ms = 100.0;
};

int cmd_synth_profile(const SynthProfileArgs& a) {
  SynthOptions opts;
  opts.cloud_speedup = a.cloud_speedup;
  opts.base_layer_ms = a.base_layer_ms;
  SynthProfile sp = synth_profile(a.layers, a.seed, parse_synth_shape(a.shape), opts);
  ordered_json doc;
  doc["tool"] = tool_header();
  doc["config"] = {{"layers", a.layers},
                   {"shape", a.shape},
                   {"seed", a.seed},
                   {"cloud_speedup", a.cloud_speedup},
                   {"base_layer_ms", a.base_layer_ms}};
  ordered_json profile = ordered_json::parse(profile_to_json(sp.graph));
  for (auto it = profile.begin(); it != profile.end(); ++it) doc[it.key()] = it.value();
  write_output(a.out, dump_doc(doc));
  return 0;
}

struct SynthTraceArgs {
  std::string net_class = "802.11g", out;
  double duration_ms = 10000.0;
  double sigma = 0.25;
  std::uint64_t seed = 1;
};

int cmd_synth_trace(const SynthTraceArgs& a) {
  BandwidthTrace trace = synth_class_trace(a.net_class, a.duration_ms, a.seed, a.sigma);
  std::ostringstream os;
  os << "# " << kToolName << " " << kToolVersion << " synth trace"
     << " class=" << a.net_class << " duration_ms=" << format_compact(a.duration_ms)
     << " sigma=" << format_compact(a.sigma) << " seed=" << a.seed << "\n";
  os << trace_to_csv(trace);
  write_output(a.out, os.str());
  return 0;
}

struct SynthScenarioArgs {
  std::string out;
  int points = 10, grid = 8;
  std::uint64_t seed = 1;
  double decoder_base_ms = 64.7;
  double decoder_ms_per_prompt = 20.0;
};

int cmd_synth_scenario(const SynthScenarioArgs& a) {
  GridScenario sc = synth_grid_scenario(a.points, a.grid, a.grid, a.seed, a.decoder_base_ms,
                                        a.decoder_ms_per_prompt);
  ordered_json doc;
  doc["tool"] = tool_header();
  doc["config"] = {{"points", a.points},
                   {"grid", a.grid},
                   {"seed", a.seed},
                   {"decoder_base_ms", a.decoder_base_ms},
                   {"decoder_ms_per_prompt", a.decoder_ms_per_prompt}};
  ordered_json body = ordered_json::parse(scenario_to_json(sc));
  for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = it.value();
  write_output(a.out, dump_doc(doc));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edge/cloud split planner and pipeline simulator for promptable segmentation"};
  app.require_subcommand(1);

  PartitionArgs pa;
  auto* partition = app.add_subcommand("partition", "min-cut split of one encoder profile");
  partition->add_option("--profile", pa.profile, "encoder profile JSON")->required();
  partition->add_option("--bandwidth-mbps", pa.bandwidth_mbps, "scalar link rate")->required();
  partition->add_option("--resolution", pa.resolution, "resolution label (default: highest)");
  partition->add_option("--out", pa.out, "output file (default: stdout)");
  partition->add_flag("--brute-force-check", pa.brute_force_check,
                      "verify against exhaustive enumeration");

  PlanArgs pl;
  auto* plan_cmd = app.add_subcommand("plan", "joint resolution + split planning");
  plan_cmd->add_option("--instance", pl.instance, "instance JSON")->required();
  plan_cmd->add_option("--trace", pl.trace, "bandwidth trace CSV");
  plan_cmd->add_option("--class", pl.net_class, "network class for a synthesized trace");
  plan_cmd->add_option("--bandwidth-mbps", pl.bandwidth_mbps, "override the scalar link rate");
  plan_cmd->add_option("--budget-ms", pl.budget_ms, "override the latency budget");
  plan_cmd->add_option("--sigma", pl.sigma, "trace jitter for --class")->capture_default_str();
  plan_cmd->add_option("--duration-ms", pl.duration_ms, "trace horizon for --class");
  plan_cmd->add_option("--seed", pl.seed, "top-level seed")->capture_default_str();
  plan_cmd->add_option("--out", pl.out, "output file (default: stdout)");

  SimulateArgs si;
  auto* sim = app.add_subcommand("simulate", "single-query pipeline replay under one policy");
  sim->add_option("--instance", si.instance, "instance JSON")->required();
  sim->add_option("--policy", si.policy, "samedge|samedge-wot|vanilla|mcs|srs")->capture_default_str();
  sim->add_option("--trace", si.trace, "bandwidth trace CSV");
  sim->add_option("--class", si.net_class, "network class for a synthesized trace");
  sim->add_option("--bandwidth-mbps", si.bandwidth_mbps, "constant-rate link");
  sim->add_option("--budget-ms", si.budget_ms, "override the latency budget");
  sim->add_option("--sigma", si.sigma, "trace jitter for --class")->capture_default_str();
  sim->add_option("--duration-ms", si.duration_ms, "trace horizon");
  sim->add_option("--seed", si.seed, "top-level seed")->capture_default_str();
  sim->add_option("--out", si.out, "output file (default: stdout)");

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "policy x class x seed grid, CSV report");
  sweep_cmd->add_option("--instance", sw.instance, "instance JSON")->required();
  sweep_cmd->add_option("--policy", sw.policies, "policies (default: all five)");
  sweep_cmd->add_option("--class", sw.classes, "network classes (default: all five)");
  sweep_cmd->add_option("--seed", sw.seed, "base seed")->capture_default_str();
  sweep_cmd->add_option("--runs", sw.runs, "seeds per cell, consecutive from --seed")->capture_default_str();
  sweep_cmd->add_option("--sigma", sw.sigma, "trace jitter")->capture_default_str();
  sweep_cmd->add_option("--duration-ms", sw.duration_ms, "trace horizon (default: 2x budget)");
  sweep_cmd->add_option("--budget-ms", sw.budget_ms, "override the latency budget");
  sweep_cmd->add_option("--out", sw.out, "CSV output (default: stdout)");
  sweep_cmd->add_option("--chart", sw.chart, "also write an accuracy-vs-class SVG");

  TransformArgs tr;
  auto* transform = app.add_subcommand("transform", "offline strategy search + online selection");
  transform->add_option("--scenario", tr.scenario, "grid scenario JSON")->required();
  transform->add_option("--iterations", tr.iterations, "random-search budget")->capture_default_str();
  transform->add_option("--budget-ms", tr.budget_ms, "select under this latency budget");
  transform->add_option("--seed", tr.seed, "top-level seed")->capture_default_str();
  transform->add_option("--out", tr.out, "report output (default: stdout)");
  transform->add_option("--profile-out", tr.profile_out, "also write the strategy profile JSON");
  transform->add_flag("--no-combine", tr.no_combine, "forbid combine rewrites");
  transform->add_flag("--no-convert", tr.no_convert, "forbid convert rewrites");

  auto* synth = app.add_subcommand("synth", "generate profiles, traces, and scenarios");
  synth->require_subcommand(1);

  SynthProfileArgs sp;
  auto* synth_profile_cmd = synth->add_subcommand("profile", "synthetic encoder profile");
  synth_profile_cmd->add_option("--layers", sp.layers, "real layer count")->capture_default_str();
  synth_profile_cmd->add_option("--shape", sp.shape, "chain|diamond|vit-like")->capture_default_str();
  synth_profile_cmd->add_option("--seed", sp.seed, "top-level seed")->capture_default_str();
  synth_profile_cmd->add_option("--cloud-speedup", sp.cloud_speedup, "edge/cloud ratio")->capture_default_str();
  synth_profile_cmd->add_option("--base-layer-ms", sp.base_layer_ms, "mean layer cost")->capture_default_str();
  synth_profile_cmd->add_option("--out", sp.out, "output file (default: stdout)");

  SynthTraceArgs st;
  auto* synth_trace_cmd = synth->add_subcommand("trace", "synthetic class trace CSV");
  synth_trace_cmd->add_option("--class", st.net_class, "network class")->capture_default_str();
  synth_trace_cmd->add_option("--duration-ms", st.duration_ms, "horizon")->capture_default_str();
  synth_trace_cmd->add_option("--sigma", st.sigma, "jitter")->capture_default_str();
  synth_trace_cmd->add_option("--seed", st.seed, "top-level seed")->capture_default_str();
  synth_trace_cmd->add_option("--out", st.out, "output file (default: stdout)");

  SynthScenarioArgs ss;
  auto* synth_scenario_cmd = synth->add_subcommand("scenario", "synthetic grid task");
  synth_scenario_cmd->add_option("--points", ss.points, "prompt point count")->capture_default_str();
  synth_scenario_cmd->add_option("--grid", ss.grid, "grid side length")->capture_default_str();
  synth_scenario_cmd->add_option("--seed", ss.seed, "top-level seed")->capture_default_str();
  synth_scenario_cmd->add_option("--decoder-base-ms", ss.decoder_base_ms, "decoder base")->capture_default_str();
  synth_scenario_cmd->add_option("--decoder-ms-per-prompt", ss.decoder_ms_per_prompt,
                                 "decoder per-prompt cost")->capture_default_str();
  synth_scenario_cmd->add_option("--out", ss.out, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::config);
  }

  try {
    if (app.got_subcommand(partition)) return cmd_partition(pa);
    if (app.got_subcommand(plan_cmd)) return cmd_plan(pl);
    if (app.got_subcommand(sim)) return cmd_simulate(si);
    if (app.got_subcommand(sweep_cmd)) return cmd_sweep(sw);
    if (app.got_subcommand(transform)) return cmd_transform(tr);
    if (app.got_subcommand(synth)) {
      if (synth->got_subcommand(synth_profile_cmd)) return cmd_synth_profile(sp);
      if (synth->got_subcommand(synth_trace_cmd)) return cmd_synth_trace(st);
      if (synth->got_subcommand(synth_scenario_cmd)) return cmd_synth_scenario(ss);
    }
    throw Error(ExitCode::config, "no command selected");
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what()
              << " (minimum achievable: " << format_compact(e.min_achievable_ms()) << " ms)\n";
    return static_cast<int>(e.code());
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::internal);
  }
}
