#include "samedge/layer_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

namespace samedge {

using ordered_json = nlohmann::ordered_json;

std::vector<ResolutionLevel> default_resolutions() {
  return {
      {"360p", 640ll * 360, 230400.0 / 2073600.0},
      {"480p", 854ll * 480, 409920.0 / 2073600.0},
      {"720p", 1280ll * 720, 921600.0 / 2073600.0},
      {"1080p", 1920ll * 1080, 1.0},
  };
}

const LayerNode& LayerGraph::node(int id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return n;
  }
  throw ValidationError("unknown layer id " + std::to_string(id));
}

const ResolutionLevel& LayerGraph::resolution(const std::string& label) const {
  for (const auto& r : resolutions) {
    if (r.label == label) return r;
  }
  throw ValidationError("undeclared resolution '" + label + "'");
}

std::optional<int> LayerGraph::resolution_index(const std::string& label) const {
  for (std::size_t i = 0; i < resolutions.size(); ++i) {
    if (resolutions[i].label == label) return static_cast<int>(i);
  }
  return std::nullopt;
}

double LayerGraph::input_bytes_at(const std::string& label) const {
  auto it = input_bytes.find(label);
  return it == input_bytes.end() ? 0.0 : it->second;
}

std::vector<int> LayerGraph::successors(int id) const {
  std::vector<int> out;
  for (const auto& [u, v] : edges) {
    if (u == id) out.push_back(v);
  }
  return out;
}

std::vector<int> LayerGraph::predecessors(int id) const {
  std::vector<int> out;
  for (const auto& [u, v] : edges) {
    if (v == id) out.push_back(u);
  }
  return out;
}

double LayerGraph::total_edge_ms(const std::string& res) const {
  double sum = 0.0;
  for (const auto& n : nodes) {
    auto it = n.edge_ms.find(res);
    if (it != n.edge_ms.end()) sum += it->second;
  }
  return sum;
}

double LayerGraph::total_cloud_ms(const std::string& res) const {
  double sum = 0.0;
  for (const auto& n : nodes) {
    auto it = n.cloud_ms.find(res);
    if (it != n.cloud_ms.end()) sum += it->second;
  }
  return sum;
}

namespace {

// Kahn's algorithm with a min-id ready heap; throws CycleError naming a back
// edge when leftover vertices remain.
std::vector<int> topo_or_throw(const LayerGraph& g) {
  std::map<int, int> indeg;
  std::map<int, std::vector<int>> adj;
  for (const auto& n : g.nodes) indeg[n.id] = 0;
  for (const auto& [u, v] : g.edges) {
    adj[u].push_back(v);
    indeg[v] += 1;
  }
  std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
  // Entry is forced first; it is the only vertex allowed to have indegree 0.
  for (const auto& [id, d] : indeg) {
    if (d == 0) ready.push(id);
  }
  std::vector<int> order;
  order.reserve(g.nodes.size());
  while (!ready.empty()) {
    int u = ready.top();
    ready.pop();
    order.push_back(u);
    for (int v : adj[u]) {
      if (--indeg[v] == 0) ready.push(v);
    }
  }
  if (order.size() != g.nodes.size()) {
    // Some vertices sit on a cycle; report one edge inside it.
    std::set<int> emitted(order.begin(), order.end());
    for (const auto& [u, v] : g.edges) {
      if (!emitted.count(u) && !emitted.count(v)) throw CycleError(u, v);
    }
    throw ValidationError("cycle detected");
  }
  return order;
}

}  // namespace

void LayerGraph::validate() const {
  if (nodes.size() < 2) throw ValidationError("graph needs at least entry and exit");
  if (entry_id == exit_id) throw ValidationError("entry and exit must differ");
  if (resolutions.empty()) throw ValidationError("no resolutions declared");

  std::set<int> ids;
  for (const auto& n : nodes) {
    if (!ids.insert(n.id).second)
      throw ValidationError("duplicate layer id " + std::to_string(n.id));
  }
  if (!ids.count(entry_id) || !ids.count(exit_id))
    throw ValidationError("entry/exit id not present among nodes");

  for (std::size_t i = 1; i < resolutions.size(); ++i) {
    if (resolutions[i].pixels <= resolutions[i - 1].pixels)
      throw ValidationError("resolutions must be strictly increasing in pixels");
    if (resolutions[i].scale < resolutions[i - 1].scale)
      throw ValidationError("resolution scale must be monotone with pixels");
  }
  for (const auto& r : resolutions) {
    if (r.pixels <= 0) throw ValidationError("resolution pixels must be > 0");
    if (r.scale <= 0.0 || r.scale > 1.0)
      throw ValidationError("resolution scale must be in (0, 1]");
  }

  for (const auto& [u, v] : edges) {
    if (u == v) throw ValidationError("self-loop on layer " + std::to_string(u));
    if (!ids.count(u) || !ids.count(v))
      throw ValidationError("edge references unknown id " + std::to_string(!ids.count(u) ? u : v));
  }

  // Profile closure and sign checks; virtual vertices must be weightless.
  for (const auto& n : nodes) {
    for (const auto& r : resolutions) {
      auto need = [&](const std::map<std::string, double>& m, const char* what) -> double {
        auto it = m.find(r.label);
        if (it == m.end())
          throw ValidationError("layer " + n.name + " missing " + what + " for resolution " +
                                r.label);
        if (it->second < 0.0)
          throw ValidationError("layer " + n.name + " has negative " + what + " at " + r.label);
        return it->second;
      };
      double e = need(n.edge_ms, "edge_ms");
      double c = need(n.cloud_ms, "cloud_ms");
      double b = need(n.output_bytes, "output_bytes");
      if (is_virtual(n.id) && (e != 0.0 || c != 0.0 || b != 0.0))
        throw ValidationError("virtual vertex " + std::to_string(n.id) +
                              " must have zero cost and zero output size");
    }
  }
  for (const auto& [res, b] : input_bytes) {
    if (b < 0.0) throw ValidationError("negative input_bytes at " + res);
    resolution(res);  // must be declared
  }

  std::vector<int> order = topo_or_throw(*this);

  // Reachability entry -> every node -> exit.
  std::set<int> fwd{entry_id};
  for (int u : order) {
    if (!fwd.count(u)) continue;
    for (int v : successors(u)) fwd.insert(v);
  }
  std::set<int> bwd{exit_id};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (!bwd.count(*it)) continue;
    for (int p : predecessors(*it)) bwd.insert(p);
  }
  for (const auto& n : nodes) {
    if (!fwd.count(n.id))
      throw ValidationError("layer " + n.name + " unreachable from entry");
    if (!bwd.count(n.id)) throw ValidationError("layer " + n.name + " cannot reach exit");
  }
}

std::vector<int> topological_order(const LayerGraph& g) {
  std::vector<int> order = topo_or_throw(g);
  // Entry first, exit last by construction of a valid graph; assert cheaply.
  if (!order.empty() && (order.front() != g.entry_id || order.back() != g.exit_id))
    throw ValidationError("topological order does not start at entry / end at exit");
  return order;
}

namespace {

std::map<std::string, double> zero_map(const std::vector<ResolutionLevel>& rs) {
  std::map<std::string, double> m;
  for (const auto& r : rs) m[r.label] = 0.0;
  return m;
}

void synthesize_virtuals(LayerGraph& g) {
  int max_id = 0;
  for (const auto& n : g.nodes) max_id = std::max(max_id, n.id);

  std::set<int> has_pred, has_succ;
  for (const auto& [u, v] : g.edges) {
    has_succ.insert(u);
    has_pred.insert(v);
  }

  LayerNode entry;
  entry.id = max_id + 1;
  entry.name = "__entry__";
  entry.edge_ms = entry.cloud_ms = entry.output_bytes = zero_map(g.resolutions);
  LayerNode exit_node;
  exit_node.id = max_id + 2;
  exit_node.name = "__exit__";
  exit_node.edge_ms = exit_node.cloud_ms = exit_node.output_bytes = zero_map(g.resolutions);

  std::vector<std::pair<int, int>> extra;
  for (const auto& n : g.nodes) {
    if (!has_pred.count(n.id)) extra.emplace_back(entry.id, n.id);
    if (!has_succ.count(n.id)) extra.emplace_back(n.id, exit_node.id);
  }
  g.entry_id = entry.id;
  g.exit_id = exit_node.id;
  g.nodes.push_back(std::move(entry));
  g.nodes.push_back(std::move(exit_node));
  for (auto& e : extra) g.edges.push_back(e);
}

LayerGraph profile_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ValidationError("profile document must be a JSON object");
  LayerGraph g;
  try {
    for (const auto& rj : doc.at("resolutions")) {
      ResolutionLevel r;
      r.label = rj.at("label").get<std::string>();
      r.pixels = rj.at("pixels").get<std::int64_t>();
      r.scale = rj.at("scale").get<double>();
      g.resolutions.push_back(std::move(r));
    }
    std::sort(g.resolutions.begin(), g.resolutions.end(),
              [](const ResolutionLevel& a, const ResolutionLevel& b) { return a.pixels < b.pixels; });

    for (const auto& nj : doc.at("nodes")) {
      LayerNode n;
      n.id = nj.at("id").get<int>();
      n.name = nj.value("name", "layer" + std::to_string(n.id));
      for (const auto& [k, v] : nj.at("edge_ms").items()) n.edge_ms[k] = v.get<double>();
      for (const auto& [k, v] : nj.at("cloud_ms").items()) n.cloud_ms[k] = v.get<double>();
      for (const auto& [k, v] : nj.at("output_bytes").items()) n.output_bytes[k] = v.get<double>();
      g.nodes.push_back(std::move(n));
    }
    for (const auto& ej : doc.at("edges")) {
      if (!ej.is_array() || ej.size() != 2) throw ValidationError("edge must be a [u, v] pair");
      g.edges.emplace_back(ej[0].get<int>(), ej[1].get<int>());
    }
    if (doc.contains("input_bytes")) {
      for (const auto& [k, v] : doc.at("input_bytes").items()) g.input_bytes[k] = v.get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed profile document: ") + e.what());
  }
  if (g.nodes.empty()) throw ValidationError("profile declares no layers");
  synthesize_virtuals(g);
  g.validate();
  return g;
}

}  // namespace

LayerGraph load_profile_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("profile is not valid JSON: ") + e.what());
  }
  return profile_from_json(doc);
}

LayerGraph load_profile_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ExitCode::config, "cannot open profile file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_profile_json(ss.str());
}

std::string profile_to_json(const LayerGraph& g) {
  ordered_json doc;
  doc["resolutions"] = ordered_json::array();
  for (const auto& r : g.resolutions)
    doc["resolutions"].push_back({{"label", r.label}, {"pixels", r.pixels}, {"scale", r.scale}});
  doc["nodes"] = ordered_json::array();
  for (const auto& n : g.nodes) {
    if (g.is_virtual(n.id)) continue;
    ordered_json nj;
    nj["id"] = n.id;
    nj["name"] = n.name;
    nj["edge_ms"] = n.edge_ms;
    nj["cloud_ms"] = n.cloud_ms;
    nj["output_bytes"] = n.output_bytes;
    doc["nodes"].push_back(std::move(nj));
  }
  doc["edges"] = ordered_json::array();
  for (const auto& [u, v] : g.edges) {
    if (g.is_virtual(u) || g.is_virtual(v)) continue;
    doc["edges"].push_back({u, v});
  }
  doc["input_bytes"] = g.input_bytes;
  return doc.dump(2) + "\n";
}

SynthShape parse_synth_shape(const std::string& s) {
  if (s == "chain") return SynthShape::chain;
  if (s == "diamond") return SynthShape::diamond;
  if (s == "vit-like") return SynthShape::vit_like;
  throw Error(ExitCode::config, "unknown shape '" + s + "' (chain|diamond|vit-like)");
}

SynthProfile synth_profile(int layers, std::uint64_t seed, SynthShape shape,
                           const SynthOptions& opts) {
  if (layers < 1) throw ValidationError("synth_profile requires layers >= 1");
  Rng rng(derive_seed(seed, "synth_profile"));

  LayerGraph g;
  g.resolutions = default_resolutions();

  double declared_total = 0.0;
  const std::string full = g.resolutions.back().label;
  const double full_pixels = static_cast<double>(g.resolutions.back().pixels);

  for (int i = 0; i < layers; ++i) {
    LayerNode n;
    n.id = i + 1;
    n.name = "layer" + std::to_string(i + 1);
    double ms_full = opts.base_layer_ms * rng.uniform_real(0.5, 1.5);
    double bytes_full = opts.base_output_bytes * rng.uniform_real(0.5, 1.5);
    for (const auto& r : g.resolutions) {
      double f = static_cast<double>(r.pixels) / full_pixels;
      n.edge_ms[r.label] = ms_full * f;
      n.cloud_ms[r.label] = ms_full * f / opts.cloud_speedup;
      n.output_bytes[r.label] = std::round(bytes_full * f);
    }
    declared_total += n.edge_ms.at(full);
    g.nodes.push_back(std::move(n));
  }
  for (const auto& r : g.resolutions)
    g.input_bytes[r.label] = std::round(opts.input_bytes_per_pixel * static_cast<double>(r.pixels));

  switch (shape) {
    case SynthShape::chain:
      for (int i = 1; i < layers; ++i) g.edges.emplace_back(i, i + 1);
      break;
    case SynthShape::diamond:
      // Repeated fan-out/fan-in blocks of width 2: 1 -> {2,3} -> 4 -> {5,6} -> 7 ...
      for (int i = 1; i + 1 <= layers; ++i) {
        int pos = (i - 1) % 3;
        if (pos == 0) {
          g.edges.emplace_back(i, i + 1);
          if (i + 2 <= layers) g.edges.emplace_back(i, i + 2);
        } else if (pos == 1) {
          if (i + 2 <= layers) g.edges.emplace_back(i, i + 2);
          else g.edges.emplace_back(i, i + 1);
        } else {
          g.edges.emplace_back(i, i + 1);
        }
      }
      break;
    case SynthShape::vit_like:
      // Transformer-ish chain with skip edges every other block.
      for (int i = 1; i < layers; ++i) g.edges.emplace_back(i, i + 1);
      for (int i = 2; i + 2 <= layers; i += 2) g.edges.emplace_back(i, i + 2);
      break;
  }

  synthesize_virtuals(g);
  g.validate();
  return SynthProfile{std::move(g), declared_total};
}

}  // namespace samedge
