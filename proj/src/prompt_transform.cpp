#include "samedge/prompt_transform.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace samedge {

using ordered_json = nlohmann::ordered_json;

std::string prompt_kind_name(PromptKind k) {
  switch (k) {
    case PromptKind::point: return "point";
    case PromptKind::box: return "box";
    case PromptKind::scribble: return "scribble";
  }
  throw Error(ExitCode::internal, "bad prompt kind");
}

PromptKind parse_prompt_kind(const std::string& s) {
  if (s == "point") return PromptKind::point;
  if (s == "box") return PromptKind::box;
  if (s == "scribble") return PromptKind::scribble;
  throw ValidationError("unknown prompt kind '" + s + "'");
}

VisualPrompt VisualPrompt::make_point(double x, double y) {
  VisualPrompt p;
  p.kind = PromptKind::point;
  p.x = x;
  p.y = y;
  p.validate();
  return p;
}

VisualPrompt VisualPrompt::make_box(double x0, double y0, double x1, double y1) {
  VisualPrompt p;
  p.kind = PromptKind::box;
  p.x0 = x0;
  p.y0 = y0;
  p.x1 = x1;
  p.y1 = y1;
  p.validate();
  return p;
}

VisualPrompt VisualPrompt::make_scribble(std::vector<std::pair<double, double>> pts) {
  VisualPrompt p;
  p.kind = PromptKind::scribble;
  p.points = std::move(pts);
  p.validate();
  return p;
}

namespace {

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0))
    throw ValidationError(std::string(what) + " coordinate " + std::to_string(v) +
                          " outside [0, 1]");
}

}  // namespace

void VisualPrompt::validate() const {
  switch (kind) {
    case PromptKind::point:
      check_unit(x, "point");
      check_unit(y, "point");
      return;
    case PromptKind::box:
      check_unit(x0, "box");
      check_unit(y0, "box");
      check_unit(x1, "box");
      check_unit(y1, "box");
      if (!(x0 < x1 && y0 < y1)) throw ValidationError("box must satisfy x0 < x1 and y0 < y1");
      return;
    case PromptKind::scribble:
      if (points.size() < 2) throw ValidationError("scribble needs at least 2 points");
      for (auto [px, py] : points) {
        check_unit(px, "scribble");
        check_unit(py, "scribble");
      }
      return;
  }
  throw Error(ExitCode::internal, "bad prompt kind");
}

std::string TransformOp::describe() const {
  std::string s;
  if (kind == Kind::combine) {
    std::vector<int> sorted = members;
    std::sort(sorted.begin(), sorted.end());
    s = "combine(";
    for (std::size_t i = 0; i < sorted.size(); ++i)
      s += (i ? "," : "") + std::to_string(sorted[i]);
    s += ")";
  } else {
    s = "convert(" + std::to_string(index) + ")";
  }
  return s + "->box";
}

std::string TransformStrategy::describe() const {
  std::string s;
  for (std::size_t i = 0; i < ops.size(); ++i) s += (i ? ";" : "") + ops[i].describe();
  return s;
}

std::string TransformStrategy::id() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(describe())));
  return buf;
}

namespace {

struct Bounds {
  double x0 = std::numeric_limits<double>::infinity();
  double y0 = std::numeric_limits<double>::infinity();
  double x1 = -std::numeric_limits<double>::infinity();
  double y1 = -std::numeric_limits<double>::infinity();

  void cover(double x, double y) {
    x0 = std::min(x0, x);
    y0 = std::min(y0, y);
    x1 = std::max(x1, x);
    y1 = std::max(y1, y);
  }
  void cover(const VisualPrompt& p) {
    switch (p.kind) {
      case PromptKind::point: cover(p.x, p.y); break;
      case PromptKind::box:
        cover(p.x0, p.y0);
        cover(p.x1, p.y1);
        break;
      case PromptKind::scribble:
        for (auto [px, py] : p.points) cover(px, py);
        break;
    }
  }
  VisualPrompt padded_box(double pad) const {
    return VisualPrompt::make_box(std::max(0.0, x0 - pad), std::max(0.0, y0 - pad),
                                  std::min(1.0, x1 + pad), std::min(1.0, y1 + pad));
  }
};

VisualPrompt convert_prompt(const VisualPrompt& p, double pad) {
  if (p.kind == PromptKind::box) throw ValidationError("a box prompt cannot be converted");
  if (p.kind == PromptKind::point) {
    Bounds b;
    b.cover(p.x, p.y);
    return b.padded_box(pad);  // pad-sized box centered on the point
  }
  Bounds b;  // scribble: its literal bounding box
  b.cover(p);
  return VisualPrompt::make_box(b.x0, b.y0, b.x1, b.y1);
}

void apply_op(std::vector<VisualPrompt>& cur, const TransformOp& op, double pad) {
  const int n = static_cast<int>(cur.size());
  if (op.kind == TransformOp::Kind::combine) {
    if (op.members.size() < 2) throw ValidationError("combine needs at least 2 members");
    std::set<int> distinct(op.members.begin(), op.members.end());
    if (distinct.size() != op.members.size())
      throw ValidationError("combine members must be distinct");
    Bounds b;
    for (int i : op.members) {
      if (i < 0 || i >= n)
        throw ValidationError("combine member " + std::to_string(i) +
                              " out of range for a set of " + std::to_string(n) + " prompts");
      b.cover(cur[i]);
    }
    for (auto it = distinct.rbegin(); it != distinct.rend(); ++it) cur.erase(cur.begin() + *it);
    cur.push_back(b.padded_box(pad));
  } else {
    if (op.index < 0 || op.index >= n)
      throw ValidationError("convert index " + std::to_string(op.index) +
                            " out of range for a set of " + std::to_string(n) + " prompts");
    cur[op.index] = convert_prompt(cur[op.index], pad);
  }
}

}  // namespace

std::vector<VisualPrompt> apply_strategy(const std::vector<VisualPrompt>& prompts,
                                         const TransformStrategy& s, double pad) {
  if (pad < 0.0) throw ValidationError("pad must be non-negative");
  std::vector<VisualPrompt> cur = prompts;
  for (const auto& p : cur) p.validate();
  for (const auto& op : s.ops) apply_op(cur, op, pad);
  return cur;
}

std::int64_t EmpiricalJoint::total() const {
  std::int64_t t = 0;
  for (const auto& row : counts)
    for (auto c : row) t += c;
  return t;
}

void EmpiricalJoint::validate() const {
  if (counts.empty() || counts.front().empty())
    throw ValidationError("joint histogram must be at least 1x1");
  for (const auto& row : counts) {
    if (row.size() != counts.front().size())
      throw ValidationError("joint histogram rows must have equal length");
    for (auto c : row)
      if (c < 0) throw ValidationError("joint histogram counts must be non-negative");
  }
  if (total() <= 0) throw ValidationError("joint histogram has zero total count");
}

double entropy(const std::vector<double>& dist) {
  if (dist.empty()) throw ValidationError("empty distribution");
  double sum = 0.0;
  for (double p : dist) {
    if (p < -1e-12) throw ValidationError("negative probability " + std::to_string(p));
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ValidationError("distribution sums to " + std::to_string(sum) + ", not 1");
  double h = 0.0;
  for (double p : dist)
    if (p > 0.0) h -= p * std::log2(p);
  return std::max(h, 0.0);
}

double mutual_information(const EmpiricalJoint& j) {
  j.validate();
  const double total = static_cast<double>(j.total());
  const std::size_t nx = j.counts.size();
  const std::size_t ny = j.counts.front().size();
  std::vector<double> px(nx, 0.0), py(ny, 0.0), pxy;
  pxy.reserve(nx * ny);
  for (std::size_t xi = 0; xi < nx; ++xi) {
    for (std::size_t yi = 0; yi < ny; ++yi) {
      double p = static_cast<double>(j.counts[xi][yi]) / total;
      px[xi] += p;
      py[yi] += p;
      pxy.push_back(p);
    }
  }
  return std::max(entropy(px) + entropy(py) - entropy(pxy), 0.0);
}

double contribution_score(const std::vector<VisualPrompt>& prompts, const EmpiricalJoint& j) {
  if (prompts.empty()) return 0.0;  // degenerate X: nothing to condition on
  return mutual_information(j);
}

void GridScenario::validate() const {
  if (grid_w < 1 || grid_h < 1) throw ValidationError("grid dimensions must be >= 1");
  for (int c : truth_cells)
    if (c < 0 || c >= grid_w * grid_h)
      throw ValidationError("truth cell " + std::to_string(c) + " outside the grid");
  for (const auto& p : prompts) p.validate();
  if (!(decoder_base_ms > 0.0)) throw ValidationError("decoder base latency must be positive");
  if (!(decoder_ms_per_prompt > 0.0))
    throw ValidationError("per-prompt decoder latency must be positive");
  if (pad < 0.0) throw ValidationError("pad must be non-negative");
}

int GridScenario::cell_of(double x, double y) const {
  int cx = std::clamp(static_cast<int>(std::floor(x * grid_w)), 0, grid_w - 1);
  int cy = std::clamp(static_cast<int>(std::floor(y * grid_h)), 0, grid_h - 1);
  return cy * grid_w + cx;
}

std::set<int> implied_region(const GridScenario& sc, const std::vector<VisualPrompt>& prompts) {
  std::set<int> region;
  for (const auto& p : prompts) {
    switch (p.kind) {
      case PromptKind::point:
        region.insert(sc.cell_of(p.x, p.y));
        break;
      case PromptKind::scribble:
        for (auto [px, py] : p.points) region.insert(sc.cell_of(px, py));
        break;
      case PromptKind::box:
        for (int cy = 0; cy < sc.grid_h; ++cy) {
          for (int cx = 0; cx < sc.grid_w; ++cx) {
            double mx = (cx + 0.5) / sc.grid_w;
            double my = (cy + 0.5) / sc.grid_h;
            if (mx >= p.x0 && mx <= p.x1 && my >= p.y0 && my <= p.y1)
              region.insert(cy * sc.grid_w + cx);
          }
        }
        break;
    }
  }
  return region;
}

double region_accuracy(const GridScenario& sc, const std::vector<VisualPrompt>& prompts) {
  std::set<int> region = implied_region(sc, prompts);
  std::vector<int> both;
  std::set_intersection(region.begin(), region.end(), sc.truth_cells.begin(),
                        sc.truth_cells.end(), std::back_inserter(both));
  std::size_t unions = region.size() + sc.truth_cells.size() - both.size();
  if (unions == 0) return 1.0;  // nothing predicted, nothing to predict
  return static_cast<double>(both.size()) / static_cast<double>(unions);
}

EmpiricalJoint scenario_joint(const GridScenario& sc, const std::vector<VisualPrompt>& prompts) {
  std::set<int> region = implied_region(sc, prompts);
  EmpiricalJoint j;
  j.counts.assign(static_cast<std::size_t>(sc.grid_w) * sc.grid_h, {0, 0});
  for (int c = 0; c < sc.grid_w * sc.grid_h; ++c)
    j.counts[c][region.count(c) ? 1 : 0] = 1;
  return j;
}

double decoder_latency_ms(const GridScenario& sc, std::size_t prompt_count) {
  return sc.decoder_base_ms + sc.decoder_ms_per_prompt * static_cast<double>(prompt_count);
}

OfflineProfile offline_profile(const GridScenario& sc, int budget, std::uint64_t seed,
                               const OfflineOptions& opts) {
  sc.validate();
  if (sc.prompts.empty()) throw ValidationError("scenario has no prompts to transform");
  if (budget < 1) throw Error(ExitCode::config, "profiling budget must be >= 1");
  Rng rng(derive_seed(seed, "offline_profile"));
  OfflineProfile out;
  for (int iter = 0; iter < budget; ++iter) {
    TransformStrategy strat;
    std::vector<VisualPrompt> cur = sc.prompts;
    int op_count = static_cast<int>(rng.uniform_int(0, static_cast<int>(sc.prompts.size())));
    for (int step = 0; step < op_count; ++step) {
      bool can_combine = opts.allow_combine && cur.size() >= 2;
      std::vector<int> convertible;
      if (opts.allow_convert) {
        for (std::size_t i = 0; i < cur.size(); ++i)
          if (cur[i].kind != PromptKind::box) convertible.push_back(static_cast<int>(i));
      }
      if (!can_combine && convertible.empty()) break;
      bool do_combine = can_combine && convertible.empty()
                            ? true
                            : (!can_combine ? false : rng.uniform_int(0, 1) == 0);
      TransformOp op;
      if (do_combine) {
        op.kind = TransformOp::Kind::combine;
        int size = static_cast<int>(rng.uniform_int(2, static_cast<int>(cur.size())));
        std::vector<int> idx(cur.size());
        std::iota(idx.begin(), idx.end(), 0);
        for (int i = 0; i < size; ++i)
          std::swap(idx[i], idx[i + rng.uniform_int(0, static_cast<int>(idx.size()) - 1 - i)]);
        op.members.assign(idx.begin(), idx.begin() + size);
        std::sort(op.members.begin(), op.members.end());
      } else {
        op.kind = TransformOp::Kind::convert;
        op.index = convertible[rng.uniform_int(0, static_cast<int>(convertible.size()) - 1)];
      }
      try {
        apply_op(cur, op, sc.pad);
      } catch (const ValidationError&) {
        break;  // rewrite not applicable here (e.g. degenerate box at pad 0)
      }
      strat.ops.push_back(op);
    }
    std::string sid = strat.id();
    out.entries[sid] = {region_accuracy(sc, cur), decoder_latency_ms(sc, cur.size()),
                        contribution_score(cur, scenario_joint(sc, cur))};
    out.strategies[sid] = strat;
    out.prompt_counts[sid] = static_cast<int>(cur.size());
  }
  return out;
}

std::string online_select(const StrategyProfile& profile, double latency_budget_ms) {
  if (profile.empty()) throw Error(ExitCode::config, "strategy profile is empty");
  const std::string* best_id = nullptr;
  double best_ratio = 0.0, best_latency = 0.0;
  double min_latency = std::numeric_limits<double>::infinity();
  for (const auto& [id, e] : profile) {
    if (!(e.latency_ms > 0.0))
      throw ValidationError("strategy " + id + " has non-positive latency");
    min_latency = std::min(min_latency, e.latency_ms);
    if (e.latency_ms > latency_budget_ms) continue;
    double ratio = e.contribution_bits / e.latency_ms;
    if (!best_id || ratio > best_ratio ||
        (ratio == best_ratio && e.latency_ms < best_latency)) {
      best_id = &id;
      best_ratio = ratio;
      best_latency = e.latency_ms;
    }
  }
  if (!best_id)
    throw InfeasibleError("no transformation strategy satisfies the latency budget of " +
                              std::to_string(latency_budget_ms) + " ms",
                          min_latency);
  return *best_id;
}

GridScenario synth_grid_scenario(int n_points, int grid_w, int grid_h, std::uint64_t seed,
                                 double decoder_base_ms, double decoder_ms_per_prompt) {
  if (n_points < 1) throw Error(ExitCode::config, "need at least one prompt point");
  if (grid_w < 2 || grid_h < 2) throw Error(ExitCode::config, "grid must be at least 2x2");
  GridScenario sc;
  sc.grid_w = grid_w;
  sc.grid_h = grid_h;
  sc.decoder_base_ms = decoder_base_ms;
  sc.decoder_ms_per_prompt = decoder_ms_per_prompt;
  // Centered rectangular object covering roughly a quarter of the frame.
  int cx_lo = grid_w / 4, cx_hi = grid_w - grid_w / 4;
  int cy_lo = grid_h / 4, cy_hi = grid_h - grid_h / 4;
  for (int cy = cy_lo; cy < cy_hi; ++cy)
    for (int cx = cx_lo; cx < cx_hi; ++cx) sc.truth_cells.insert(cy * grid_w + cx);
  Rng rng(derive_seed(seed, "grid_scenario"));
  for (int i = 0; i < n_points; ++i) {
    double x = rng.uniform_real(static_cast<double>(cx_lo) / grid_w,
                                static_cast<double>(cx_hi) / grid_w);
    double y = rng.uniform_real(static_cast<double>(cy_lo) / grid_h,
                                static_cast<double>(cy_hi) / grid_h);
    sc.prompts.push_back(VisualPrompt::make_point(x, y));
  }
  sc.validate();
  return sc;
}

namespace {

ordered_json prompt_to_json(const VisualPrompt& p) {
  ordered_json pj;
  pj["kind"] = prompt_kind_name(p.kind);
  switch (p.kind) {
    case PromptKind::point:
      pj["x"] = p.x;
      pj["y"] = p.y;
      break;
    case PromptKind::box:
      pj["x0"] = p.x0;
      pj["y0"] = p.y0;
      pj["x1"] = p.x1;
      pj["y1"] = p.y1;
      break;
    case PromptKind::scribble: {
      auto pts = ordered_json::array();
      for (auto [px, py] : p.points) pts.push_back({px, py});
      pj["points"] = pts;
      break;
    }
  }
  return pj;
}

VisualPrompt prompt_from_json(const nlohmann::json& pj) {
  VisualPrompt p;
  p.kind = parse_prompt_kind(pj.at("kind").get<std::string>());
  switch (p.kind) {
    case PromptKind::point:
      p.x = pj.at("x").get<double>();
      p.y = pj.at("y").get<double>();
      break;
    case PromptKind::box:
      p.x0 = pj.at("x0").get<double>();
      p.y0 = pj.at("y0").get<double>();
      p.x1 = pj.at("x1").get<double>();
      p.y1 = pj.at("y1").get<double>();
      break;
    case PromptKind::scribble:
      for (const auto& pt : pj.at("points"))
        p.points.emplace_back(pt.at(0).get<double>(), pt.at(1).get<double>());
      break;
  }
  p.validate();
  return p;
}

}  // namespace

std::string scenario_to_json(const GridScenario& sc) {
  ordered_json doc;
  doc["grid"] = {{"width", sc.grid_w}, {"height", sc.grid_h}};
  auto cells = ordered_json::array();
  for (int c : sc.truth_cells) cells.push_back({c % sc.grid_w, c / sc.grid_w});
  doc["truth_cells"] = cells;
  auto prompts = ordered_json::array();
  for (const auto& p : sc.prompts) prompts.push_back(prompt_to_json(p));
  doc["prompts"] = prompts;
  doc["decoder_base_ms"] = sc.decoder_base_ms;
  doc["decoder_ms_per_prompt"] = sc.decoder_ms_per_prompt;
  doc["pad"] = sc.pad;
  return doc.dump(2) + "\n";
}

GridScenario scenario_from_json(const std::string& json_text) {
  try {
    auto doc = nlohmann::json::parse(json_text);
    GridScenario sc;
    sc.grid_w = doc.at("grid").at("width").get<int>();
    sc.grid_h = doc.at("grid").at("height").get<int>();
    for (const auto& cell : doc.at("truth_cells")) {
      int cx = cell.at(0).get<int>(), cy = cell.at(1).get<int>();
      if (cx < 0 || cx >= sc.grid_w || cy < 0 || cy >= sc.grid_h)
        throw ValidationError("truth cell [" + std::to_string(cx) + ", " + std::to_string(cy) +
                              "] outside the grid");
      sc.truth_cells.insert(cy * sc.grid_w + cx);
    }
    for (const auto& pj : doc.at("prompts")) sc.prompts.push_back(prompt_from_json(pj));
    sc.decoder_base_ms = doc.at("decoder_base_ms").get<double>();
    sc.decoder_ms_per_prompt = doc.at("decoder_ms_per_prompt").get<double>();
    if (doc.contains("pad")) sc.pad = doc.at("pad").get<double>();
    sc.validate();
    return sc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad scenario document: ") + e.what());
  }
}

GridScenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ExitCode::config, "cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return scenario_from_json(buf.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void save_strategy_profile(const StrategyProfile& profile, const std::string& path) {
  ordered_json doc;
  for (const auto& [id, e] : profile) {
    doc[id] = {{"accuracy", e.accuracy},
               {"latency_ms", e.latency_ms},
               {"contribution_bits", e.contribution_bits}};
  }
  std::ofstream out(path);
  if (!out) throw Error(ExitCode::config, "cannot write profile file '" + path + "'");
  out << doc.dump(2) << "\n";
}

StrategyProfile load_strategy_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ExitCode::config, "cannot open profile file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    auto doc = nlohmann::json::parse(buf.str());
    StrategyProfile profile;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      StrategyEntry e{it.value().at("accuracy").get<double>(),
                      it.value().at("latency_ms").get<double>(),
                      it.value().at("contribution_bits").get<double>()};
      if (e.accuracy < 0.0 || e.accuracy > 1.0)
        throw ValidationError("strategy " + it.key() + ": accuracy outside [0, 1]");
      if (e.latency_ms < 0.0)
        throw ValidationError("strategy " + it.key() + ": negative latency");
      profile[it.key()] = e;
    }
    if (profile.empty()) throw ValidationError("strategy profile is empty");
    return profile;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": bad profile document: " + e.what());
  }
}

}  // namespace samedge
