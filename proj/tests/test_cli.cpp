#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "oracles.hpp"
#include "samedge/layer_graph.hpp"
#include "samedge/netsim.hpp"
#include "samedge/prompt_transform.hpp"

using namespace samedge;
using oracle::run_cli;

namespace {

nlohmann::json parse_out(const oracle::RunResult& res) {
  REQUIRE(res.exit_code == 0);
  return nlohmann::json::parse(res.output);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string q(const std::string& s) { return "'" + s + "'"; }

}  // namespace

TEST_CASE("partition command reports the fixture min cut with oracle check") {
  auto res = run_cli("partition --profile " + q(oracle::fixture_path("video_profile.json")) +
                     " --bandwidth-mbps 20 --brute-force-check");
  auto doc = parse_out(res);
  CHECK(doc.at("tool").at("name") == "samedge");
  CHECK(doc.at("tool").at("version") == "0.1.0");
  CHECK(doc.at("config").at("resolution") == "1080p");  // defaults to the top rung
  CHECK(doc.at("partition").at("objective_ms").get<double>() == doctest::Approx(2575.0));
  CHECK(doc.at("partition").at("edge_side") == nlohmann::json::array({1}));
  CHECK(doc.at("brute_force_check") == "passed");
  CHECK(doc.at("partition").at("cut_arcs").size() >= 1);

  auto low = parse_out(
      run_cli("partition --profile " + q(oracle::fixture_path("video_profile.json")) +
              " --bandwidth-mbps 20 --resolution 360p --brute-force-check"));
  CHECK(low.at("config").at("resolution") == "360p");
  CHECK(low.at("partition").at("objective_ms").get<double>() > 0.0);
  CHECK(low.at("brute_force_check") == "passed");
}

TEST_CASE("bad invocations exit with the config code") {
  CHECK(run_cli("partition --bandwidth-mbps 20 2>&1").exit_code == 2);
  CHECK(run_cli("partition --profile /nonexistent.json --bandwidth-mbps 20 2>&1").exit_code == 2);
  CHECK(run_cli("partition --profile " + q(oracle::fixture_path("video_profile.json")) +
                " --bandwidth-mbps 20 --resolution 9000p 2>&1")
            .exit_code == 2);
  CHECK(run_cli("partition --profile " + q(oracle::fixture_path("video_profile.json")) +
                " --bandwidth-mbps -3 2>&1")
            .exit_code == 2);
  CHECK(run_cli("simulate --instance " + q(oracle::fixture_path("instance.json")) +
                " --policy bestest 2>&1")
            .exit_code == 2);
  CHECK(run_cli("sweep --instance " + q(oracle::fixture_path("instance.json")) +
                " --class warpdrive 2>&1")
            .exit_code == 2);
  auto missing_flag = run_cli("partition --bandwidth-mbps 20 2>&1");
  CHECK(missing_flag.output.find("--profile") != std::string::npos);
}

TEST_CASE("malformed documents exit with the schema code") {
  const std::string broken = "/tmp/samedge_cli_broken.json";
  std::ofstream(broken) << "{\"resolutions\": [";
  CHECK(run_cli("partition --profile " + broken + " --bandwidth-mbps 20 2>&1").exit_code == 3);

  std::ofstream(broken) << R"({
    "resolutions": [{"label": "r0", "pixels": 100, "scale": 1.0}],
    "input_bytes": {"r0": 1000.0},
    "nodes": [
      {"id": 1, "edge_ms": {"r0": 1}, "cloud_ms": {"r0": 1}, "output_bytes": {"r0": 10}},
      {"id": 2, "edge_ms": {"r0": 1}, "cloud_ms": {"r0": 1}, "output_bytes": {"r0": 10}}
    ],
    "edges": [[1, 2], [2, 1]]
  })";
  auto cyclic = run_cli("partition --profile " + broken + " --bandwidth-mbps 20 2>&1");
  CHECK(cyclic.exit_code == 3);
  CHECK(cyclic.output.find("cycle") != std::string::npos);
  std::remove(broken.c_str());

  const std::string short_trace = "/tmp/samedge_cli_short_trace.csv";
  std::ofstream(short_trace) << "t_ms,mbps\n0,20\n100,20\n";  // 100 ms horizon vs 4500 budget
  CHECK(run_cli("plan --instance " + q(oracle::fixture_path("instance.json")) + " --trace " +
                short_trace + " 2>&1")
            .exit_code == 3);
  std::remove(short_trace.c_str());
}

TEST_CASE("plan command emits the reference plan") {
  auto doc = parse_out(run_cli("plan --instance " + q(oracle::fixture_path("instance.json"))));
  CHECK(doc.at("config").at("budget_ms").get<double>() == doctest::Approx(4500.0));
  CHECK(doc.at("plan").at("predicted_accuracy").get<double>() == doctest::Approx(0.826));
  CHECK(doc.at("plan").at("predicted_latency_ms").get<double>() == doctest::Approx(3805.0));
  CHECK(doc.at("plan").at("video").at("resolution") == "1080p");
  CHECK(doc.at("plan").at("video").at("partition").at("edge_side") ==
        nlohmann::json::array({1}));
  CHECK(doc.at("plan").at("summary").at("total_ms").get<double>() == doctest::Approx(3805.0));

  auto rich = parse_out(run_cli("plan --instance " + q(oracle::fixture_path("instance.json")) +
                                " --bandwidth-mbps 1000"));
  CHECK(rich.at("plan").at("predicted_accuracy").get<double>() == doctest::Approx(0.826));
  CHECK(rich.at("plan").at("predicted_latency_ms").get<double>() <
        doc.at("plan").at("predicted_latency_ms").get<double>());
}

TEST_CASE("plan reports infeasibility with the achievable floor") {
  auto res = run_cli("plan --instance " + q(oracle::fixture_path("instance.json")) +
                     " --budget-ms 100 2>&1");
  CHECK(res.exit_code == 4);
  CHECK(res.output.find("infeasible:") != std::string::npos);
  CHECK(res.output.find("minimum achievable:") != std::string::npos);
}

TEST_CASE("plan under a zero-jitter class trace matches the scalar plan") {
  auto doc = parse_out(run_cli("plan --instance " + q(oracle::fixture_path("instance.json")) +
                               " --class 802.11g --sigma 0 --seed 3"));
  CHECK(doc.at("config").at("class") == "802.11g");
  CHECK(doc.at("config").at("sigma").get<double>() == 0.0);
  CHECK(doc.at("plan").at("predicted_accuracy").get<double>() == doctest::Approx(0.826));
  CHECK(doc.at("plan").at("predicted_latency_ms").get<double>() == doctest::Approx(3805.0));
}

TEST_CASE("simulate runs single-query replays per policy") {
  auto mcs = parse_out(run_cli("simulate --instance " + q(oracle::fixture_path("instance.json")) +
                               " --policy mcs"));
  CHECK(mcs.at("report").at("policy") == "mcs");
  CHECK(mcs.at("report").at("network_class") == "constant");
  CHECK(mcs.at("report").at("latency_ms").get<double>() == doctest::Approx(1050.0));
  CHECK(mcs.at("report").at("accuracy").get<double>() == doctest::Approx(0.655));

  auto vanilla = parse_out(run_cli("simulate --instance " +
                                   q(oracle::fixture_path("instance.json")) +
                                   " --policy vanilla --class 3g --sigma 0"));
  CHECK(vanilla.at("report").at("network_class") == "3g");
  CHECK(vanilla.at("report").at("video").at("resolution") == "360p");
  CHECK(vanilla.at("report").at("accuracy").get<double>() == doctest::Approx(0.411));

  auto samedge = parse_out(run_cli("simulate --instance " +
                                   q(oracle::fixture_path("instance.json")) + " --seed 7"));
  CHECK(samedge.at("report").at("policy") == "samedge");
  CHECK(samedge.at("report").at("seed") == 7);
  CHECK(samedge.at("report").at("latency_ms").get<double>() == doctest::Approx(4105.0));
  CHECK(samedge.at("report").at("events").size() == 9);
}

TEST_CASE("sweep writes deterministic csv and chart files") {
  const std::string csv1 = "/tmp/samedge_cli_sweep1.csv", csv2 = "/tmp/samedge_cli_sweep2.csv";
  const std::string svg1 = "/tmp/samedge_cli_chart1.svg", svg2 = "/tmp/samedge_cli_chart2.svg";
  const std::string base = "sweep --instance " + q(oracle::fixture_path("instance.json")) +
                           " --sigma 0 --seed 1";
  CHECK(run_cli(base + " --out " + csv1 + " --chart " + svg1).exit_code == 0);
  CHECK(run_cli(base + " --out " + csv2 + " --chart " + svg2).exit_code == 0);

  std::string csv = slurp(csv1);
  CHECK(csv == slurp(csv2));
  CHECK(slurp(svg1) == slurp(svg2));
  CHECK(csv.rfind("# samedge sweep report", 0) == 0);
  CHECK(csv.find("policy,class,seed,latency_ms,accuracy,") != std::string::npos);
  CHECK(csv.find("mcs,wired,1,1050,0.655,12,8") != std::string::npos);
  CHECK(slurp(svg1).rfind("<svg ", 0) == 0);

  std::size_t rows = 0;
  std::istringstream lines(csv);
  for (std::string line; std::getline(lines, line);)
    if (!line.empty() && line[0] != '#' && line.rfind("policy,", 0) != 0) ++rows;
  CHECK(rows == 25);
  for (const auto& f : {csv1, csv2, svg1, svg2}) std::remove(f.c_str());

  auto narrowed = run_cli("sweep --instance " + q(oracle::fixture_path("instance.json")) +
                          " --sigma 0 --policy mcs --class wired --runs 2");
  CHECK(narrowed.exit_code == 0);
  CHECK(narrowed.output.find("mcs,wired,1,") != std::string::npos);
  CHECK(narrowed.output.find("mcs,wired,2,") != std::string::npos);
}

TEST_CASE("transform searches strategies and selects under a budget") {
  const std::string base = "transform --scenario " +
                           q(oracle::fixture_path("transform_fixture.json")) +
                           " --iterations 120 --seed 1";
  auto doc = parse_out(run_cli(base + " --budget-ms 500"));
  CHECK(doc.at("strategy_count").get<int>() >= 1);
  CHECK(doc.at("profile").size() == doc.at("strategy_count").get<std::size_t>());
  REQUIRE(doc.contains("selected"));
  CHECK(doc.at("selected").at("latency_ms").get<double>() <= 500.0);
  CHECK(doc.at("selected").at("prompt_count").get<int>() >= 1);
  CHECK(doc.at("selected").at("ops").is_string());

  auto unselected = parse_out(run_cli(base));
  CHECK(!unselected.contains("selected"));

  auto infeasible = run_cli(base + " --budget-ms 70 2>&1");
  CHECK(infeasible.exit_code == 4);
  CHECK(infeasible.output.find("minimum achievable") != std::string::npos);

  const std::string prof_path = "/tmp/samedge_cli_strategies.json";
  auto with_profile = run_cli(base + " --budget-ms 500 --profile-out " + prof_path);
  CHECK(with_profile.exit_code == 0);
  StrategyProfile persisted = load_strategy_profile(prof_path);
  CHECK(persisted.size() == doc.at("strategy_count").get<std::size_t>());
  std::remove(prof_path.c_str());

  auto identity_only = parse_out(run_cli(base + " --no-combine --no-convert"));
  CHECK(identity_only.at("strategy_count").get<int>() == 1);
}

TEST_CASE("synth profile emits loadable deterministic documents") {
  const std::string path = "/tmp/samedge_cli_profile.json";
  CHECK(run_cli("synth profile --layers 6 --seed 2 --out " + path).exit_code == 0);
  LayerGraph g = load_profile_file(path);  // loader ignores the tool/config keys
  CHECK(g.real_layer_count() == 6);
  CHECK(g.resolutions.size() == 4);

  std::string first = slurp(path);
  CHECK(run_cli("synth profile --layers 6 --seed 2 --out " + path).exit_code == 0);
  CHECK(slurp(path) == first);
  CHECK(run_cli("synth profile --layers 6 --seed 3 --out " + path).exit_code == 0);
  CHECK(slurp(path) != first);
  std::remove(path.c_str());
}

TEST_CASE("synth trace emits loadable deterministic csv") {
  const std::string path = "/tmp/samedge_cli_trace.csv";
  const std::string cmd =
      "synth trace --class 4g-lte --duration-ms 4000 --sigma 0.3 --seed 6 --out " + path;
  CHECK(run_cli(cmd).exit_code == 0);
  std::string first = slurp(path);
  CHECK(first.rfind("# samedge 0.1.0 synth trace class=4g-lte", 0) == 0);

  BandwidthTrace trace = load_trace_csv(path);
  CHECK(trace.horizon_ms() == doctest::Approx(4000.0).epsilon(1e-12));
  CHECK(trace.mean_mbps() == doctest::Approx(50.0).epsilon(1e-9));

  CHECK(run_cli(cmd).exit_code == 0);
  CHECK(slurp(path) == first);
  std::remove(path.c_str());
}

TEST_CASE("synth scenario emits a loadable grid task") {
  auto res = run_cli("synth scenario --points 5 --grid 6 --seed 4");
  REQUIRE(res.exit_code == 0);
  GridScenario sc = scenario_from_json(res.output);
  CHECK(sc.grid_w == 6);
  CHECK(sc.grid_h == 6);
  CHECK(sc.prompts.size() == 5);
  CHECK(!sc.truth_cells.empty());

  auto again = run_cli("synth scenario --points 5 --grid 6 --seed 4");
  CHECK(again.output == res.output);
}

TEST_CASE("bare input names fall back to the fixture directory") {
  setenv("SAMEDGE_FIXTURE_DIR", SAMEDGE_FIXTURES, 1);
  auto doc = parse_out(run_cli("plan --instance instance.json"));
  CHECK(doc.at("plan").at("predicted_accuracy").get<double>() == doctest::Approx(0.826));
  unsetenv("SAMEDGE_FIXTURE_DIR");
  CHECK(run_cli("plan --instance instance.json 2>&1").exit_code == 2);
}

TEST_CASE("explicit stdout target matches the default") {
  const std::string cmd = "partition --profile " +
                          q(oracle::fixture_path("prompt_profile.json")) +
                          " --bandwidth-mbps 20";
  auto default_out = run_cli(cmd);
  auto dashed = run_cli(cmd + " --out -");
  CHECK(default_out.exit_code == 0);
  CHECK(default_out.output == dashed.output);
}
