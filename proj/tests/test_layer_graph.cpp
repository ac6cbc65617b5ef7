#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "oracles.hpp"
#include "samedge/layer_graph.hpp"

using namespace samedge;

namespace {

// Minimal two-layer chain document used as a base for malformed variants.
nlohmann::ordered_json tiny_profile() {
  nlohmann::ordered_json doc;
  doc["resolutions"] = {{{"label", "full"}, {"pixels", 100}, {"scale", 1.0}}};
  doc["nodes"] = {
      {{"id", 1},
       {"name", "a"},
       {"edge_ms", {{"full", 10.0}}},
       {"cloud_ms", {{"full", 1.0}}},
       {"output_bytes", {{"full", 1000.0}}}},
      {{"id", 2},
       {"name", "b"},
       {"edge_ms", {{"full", 20.0}}},
       {"cloud_ms", {{"full", 2.0}}},
       {"output_bytes", {{"full", 2000.0}}}},
  };
  doc["edges"] = {{1, 2}};
  doc["input_bytes"] = {{"full", 5000.0}};
  return doc;
}

}  // namespace

TEST_CASE("default resolution ladder is the ascending 4-level set") {
  auto res = default_resolutions();
  REQUIRE(res.size() == 4);
  CHECK(res[0].label == "360p");
  CHECK(res[1].label == "480p");
  CHECK(res[2].label == "720p");
  CHECK(res[3].label == "1080p");
  for (std::size_t i = 1; i < res.size(); ++i) CHECK(res[i].pixels > res[i - 1].pixels);
  CHECK(res[3].scale == 1.0);
  for (const auto& r : res)
    CHECK(r.scale == doctest::Approx(static_cast<double>(r.pixels) / res[3].pixels).epsilon(1e-12));
}

TEST_CASE("fixture video profile loads with the published totals") {
  LayerGraph g = load_profile_file(oracle::fixture_path("video_profile.json"));
  CHECK(g.real_layer_count() == 12);
  CHECK(g.total_edge_ms("1080p") == doctest::Approx(9000.0).epsilon(1e-12));
  CHECK(g.total_cloud_ms("1080p") == doctest::Approx(900.0).epsilon(1e-12));
  CHECK(g.total_edge_ms("360p") == doctest::Approx(999.6).epsilon(1e-12));
  CHECK(g.input_bytes_at("1080p") == 9.25e6);
  CHECK(g.input_bytes_at("unknown") == 0.0);
  CHECK(g.is_virtual(g.entry_id));
  CHECK(g.is_virtual(g.exit_id));
  REQUIRE(g.resolution_index("720p"));
  CHECK(*g.resolution_index("720p") == 2);
  CHECK(!g.resolution_index("4k"));

  auto order = topological_order(g);
  REQUIRE(order.size() == g.nodes.size());
  CHECK(order.front() == g.entry_id);
  CHECK(order.back() == g.exit_id);
  std::map<int, std::size_t> rank;
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
  for (auto [u, v] : g.edges) CHECK(rank.at(u) < rank.at(v));
}

TEST_CASE("profile JSON round trip preserves structure and costs") {
  LayerGraph g = load_profile_file(oracle::fixture_path("prompt_profile.json"));
  LayerGraph h = load_profile_json(profile_to_json(g));
  CHECK(h.real_layer_count() == g.real_layer_count());
  CHECK(h.edges.size() == g.edges.size());
  for (const auto& r : g.resolutions) {
    CHECK(h.total_edge_ms(r.label) == g.total_edge_ms(r.label));
    CHECK(h.total_cloud_ms(r.label) == g.total_cloud_ms(r.label));
    CHECK(h.input_bytes_at(r.label) == g.input_bytes_at(r.label));
  }
}

TEST_CASE("virtual entry and exit carry no cost and bracket every path") {
  LayerGraph g = load_profile_file(oracle::fixture_path("video_profile.json"));
  for (int id : {g.entry_id, g.exit_id}) {
    const LayerNode& n = g.node(id);
    for (const auto& r : g.resolutions) {
      CHECK(n.edge_ms.at(r.label) == 0.0);
      CHECK(n.cloud_ms.at(r.label) == 0.0);
      CHECK(n.output_bytes.at(r.label) == 0.0);
    }
  }
  CHECK(g.predecessors(g.entry_id).empty());
  CHECK(g.successors(g.exit_id).empty());
  CHECK(g.successors(g.entry_id) == std::vector<int>{1});
}

TEST_CASE("cycles are rejected and the error names a back edge") {
  auto doc = tiny_profile();
  doc["edges"].push_back({2, 1});
  try {
    load_profile_json(doc.dump());
    FAIL("cycle accepted");
  } catch (const CycleError& e) {
    std::string msg = e.what();
    CHECK(msg.find("cycle") != std::string::npos);
    CHECK(((e.from() == 2 && e.to() == 1) || (e.from() == 1 && e.to() == 2)));
  }
}

TEST_CASE("malformed profiles raise schema errors") {
  CHECK_THROWS_AS(load_profile_json("not json"), ValidationError);
  CHECK_THROWS_AS(load_profile_json("{}"), ValidationError);

  auto missing_cost = tiny_profile();
  missing_cost["nodes"][0]["edge_ms"].erase("full");
  CHECK_THROWS_AS(load_profile_json(missing_cost.dump()), ValidationError);

  auto dup_id = tiny_profile();
  dup_id["nodes"][1]["id"] = 1;
  CHECK_THROWS_AS(load_profile_json(dup_id.dump()), ValidationError);

  auto negative = tiny_profile();
  negative["nodes"][0]["cloud_ms"]["full"] = -1.0;
  CHECK_THROWS_AS(load_profile_json(negative.dump()), ValidationError);

  auto bad_scale = tiny_profile();
  bad_scale["resolutions"][0]["scale"] = 1.5;
  CHECK_THROWS_AS(load_profile_json(bad_scale.dump()), ValidationError);

  auto dangling_edge = tiny_profile();
  dangling_edge["edges"].push_back({1, 99});
  CHECK_THROWS_AS(load_profile_json(dangling_edge.dump()), ValidationError);

  auto no_layers = tiny_profile();
  no_layers["nodes"] = nlohmann::ordered_json::array();
  CHECK_THROWS_AS(load_profile_json(no_layers.dump()), ValidationError);
}

TEST_CASE("missing profile file is a configuration error") {
  try {
    load_profile_file("/nonexistent/profile.json");
    FAIL("missing file accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ExitCode::config);
  }
}

TEST_CASE("synthetic profiles are deterministic and match their bookkeeping") {
  for (SynthShape shape : {SynthShape::chain, SynthShape::diamond, SynthShape::vit_like}) {
    SynthProfile a = synth_profile(9, 42, shape);
    SynthProfile b = synth_profile(9, 42, shape);
    CHECK(profile_to_json(a.graph) == profile_to_json(b.graph));
    CHECK(a.graph.real_layer_count() == 9);
    a.graph.validate();
    const std::string full = a.graph.resolutions.back().label;
    CHECK(a.graph.total_edge_ms(full) ==
          doctest::Approx(a.declared_edge_ms_total_full_res).epsilon(1e-9));
    SynthProfile c = synth_profile(9, 43, shape);
    CHECK(profile_to_json(a.graph) != profile_to_json(c.graph));
  }
}

TEST_CASE("synthetic cloud speedup and resolution scaling hold per layer") {
  SynthOptions opts;
  opts.cloud_speedup = 8.0;
  SynthProfile sp = synth_profile(6, 7, SynthShape::chain, opts);
  const LayerGraph& g = sp.graph;
  const std::string full = g.resolutions.back().label;
  for (const auto& n : g.nodes) {
    if (g.is_virtual(n.id)) continue;
    for (const auto& r : g.resolutions) {
      CHECK(n.cloud_ms.at(r.label) ==
            doctest::Approx(n.edge_ms.at(r.label) / opts.cloud_speedup).epsilon(1e-9));
      CHECK(n.edge_ms.at(r.label) ==
            doctest::Approx(n.edge_ms.at(full) * r.scale).epsilon(1e-9));
    }
  }
}

TEST_CASE("synthetic shapes produce the advertised topologies") {
  LayerGraph chain = synth_profile(5, 1, SynthShape::chain).graph;
  for (const auto& n : chain.nodes) {
    if (chain.is_virtual(n.id)) continue;
    CHECK(chain.successors(n.id).size() == 1);
  }
  LayerGraph diamond = synth_profile(6, 1, SynthShape::diamond).graph;
  bool has_fanout = false;
  for (const auto& n : diamond.nodes) {
    if (diamond.is_virtual(n.id)) continue;
    if (diamond.successors(n.id).size() > 1) has_fanout = true;
  }
  CHECK(has_fanout);
  diamond.validate();
  synth_profile(12, 5, SynthShape::vit_like).graph.validate();
}

TEST_CASE("random profile generator emits valid graphs of bounded size") {
  Rng rng(2024);
  for (int i = 0; i < 25; ++i) {
    LayerGraph g = oracle::random_profile(rng, 12, static_cast<int>(rng.uniform_int(1, 3)));
    g.validate();
    CHECK(g.real_layer_count() <= 12);
    auto order = topological_order(g);
    std::map<int, std::size_t> rank;
    for (std::size_t j = 0; j < order.size(); ++j) rank[order[j]] = j;
    for (auto [u, v] : g.edges) CHECK(rank.at(u) < rank.at(v));
  }
}
