#include "samedge/netsim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace samedge {

double transmission_time_ms(double bytes, double mbps) {
  if (bytes <= 0.0) return 0.0;
  if (mbps <= 0.0) return std::numeric_limits<double>::infinity();
  return bytes * 8.0 / (mbps * 1000.0);
}

BandwidthTrace::BandwidthTrace(std::vector<BandwidthSample> samples, double horizon_ms)
    : samples_(std::move(samples)), horizon_ms_(horizon_ms) {
  if (samples_.empty()) throw TraceError("trace has no samples");
  if (samples_.front().t_ms != 0.0) throw TraceError("trace must start at t_ms = 0");
  if (!(horizon_ms_ > 0.0)) throw TraceError("trace horizon must be positive");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (samples_[i].mbps <= 0.0) throw TraceError("bandwidth samples must be positive");
    if (!std::isfinite(samples_[i].mbps) || !std::isfinite(samples_[i].t_ms))
      throw TraceError("non-finite trace sample");
    if (i > 0 && !(samples_[i].t_ms > samples_[i - 1].t_ms))
      throw TraceError("trace sample times must be strictly increasing");
  }
  if (!(samples_.back().t_ms < horizon_ms_))
    throw TraceError("trace horizon must lie after the last sample");
}

BandwidthTrace BandwidthTrace::constant(double mbps, double horizon_ms) {
  return BandwidthTrace({{0.0, mbps}}, horizon_ms);
}

namespace {

std::size_t segment_index(const std::vector<BandwidthSample>& samples, double t_ms) {
  // last sample with t_ms <= t
  std::size_t lo = 0;
  for (std::size_t i = 1; i < samples.size() && samples[i].t_ms <= t_ms; ++i) lo = i;
  return lo;
}

}  // namespace

double BandwidthTrace::bandwidth_at(double t_ms) const {
  if (t_ms < 0.0) t_ms = 0.0;
  if (t_ms >= horizon_ms_)
    throw TraceError("bandwidth queried at " + std::to_string(t_ms) +
                     " ms, past the trace horizon of " + std::to_string(horizon_ms_) + " ms");
  return samples_[segment_index(samples_, t_ms)].mbps;
}

double BandwidthTrace::megabits_between(double t0_ms, double t1_ms) const {
  if (t1_ms > horizon_ms_ + 1e-9)
    throw TraceError("window [" + std::to_string(t0_ms) + ", " + std::to_string(t1_ms) +
                     ") ms extends past the trace horizon of " + std::to_string(horizon_ms_) +
                     " ms");
  t0_ms = std::max(t0_ms, 0.0);
  t1_ms = std::min(t1_ms, horizon_ms_);
  if (t1_ms <= t0_ms) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    double seg_start = samples_[i].t_ms;
    double seg_end = i + 1 < samples_.size() ? samples_[i + 1].t_ms : horizon_ms_;
    double lo = std::max(t0_ms, seg_start);
    double hi = std::min(t1_ms, seg_end);
    if (hi > lo) total += samples_[i].mbps * (hi - lo) / 1000.0;
  }
  return total;
}

double BandwidthTrace::min_mbps(double t0_ms, double t1_ms) const {
  if (t1_ms > horizon_ms_ + 1e-9)
    throw TraceError("window [" + std::to_string(t0_ms) + ", " + std::to_string(t1_ms) +
                     ") ms extends past the trace horizon of " + std::to_string(horizon_ms_) +
                     " ms");
  t0_ms = std::max(t0_ms, 0.0);
  if (t1_ms <= t0_ms) return samples_[segment_index(samples_, std::min(t0_ms, horizon_ms_ - 1e-9))].mbps;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    double seg_start = samples_[i].t_ms;
    double seg_end = i + 1 < samples_.size() ? samples_[i + 1].t_ms : horizon_ms_;
    if (std::min(t1_ms, seg_end) > std::max(t0_ms, seg_start)) best = std::min(best, samples_[i].mbps);
  }
  return best;
}

double BandwidthTrace::finish_time_ms(double start_ms, double bytes) const {
  double t = std::max(start_ms, 0.0);
  if (bytes <= 0.0) return t;
  if (t >= horizon_ms_)
    throw TraceError("transfer starts at " + std::to_string(start_ms) +
                     " ms, past the trace horizon of " + std::to_string(horizon_ms_) + " ms");
  double remaining_mbits = bytes * 8.0 / 1e6;
  for (std::size_t i = segment_index(samples_, t); i < samples_.size(); ++i) {
    double seg_end = i + 1 < samples_.size() ? samples_[i + 1].t_ms : horizon_ms_;
    double mbps = samples_[i].mbps;
    double deliverable = mbps * (seg_end - t) / 1000.0;
    if (mbps > 0.0 && deliverable >= remaining_mbits) return t + remaining_mbits / mbps * 1000.0;
    remaining_mbits -= deliverable;
    t = seg_end;
  }
  std::ostringstream os;
  os << "transfer of " << bytes << " bytes starting at " << start_ms
     << " ms is unfinished at the trace horizon (" << horizon_ms_ << " ms)";
  throw TraceError(os.str());
}

const std::map<std::string, double>& network_class_means() {
  static const std::map<std::string, double> kMeans = {
      {"wired", 1000.0}, {"5g", 100.0}, {"4g-lte", 50.0}, {"802.11g", 20.0}, {"3g", 3.0},
  };
  return kMeans;
}

BandwidthTrace synth_class_trace(const std::string& network_class, double horizon_ms,
                                 std::uint64_t seed, double sigma, double segment_ms) {
  auto it = network_class_means().find(network_class);
  if (it == network_class_means().end()) {
    std::string known;
    for (const auto& [name, _] : network_class_means()) known += (known.empty() ? "" : ", ") + name;
    throw Error(ExitCode::config,
                "unknown network class '" + network_class + "' (known: " + known + ")");
  }
  if (!(horizon_ms > 0.0)) throw Error(ExitCode::config, "trace horizon must be positive");
  if (!(segment_ms > 0.0)) throw Error(ExitCode::config, "trace segment length must be positive");
  double mean = it->second;
  Rng rng(derive_seed(seed, "synth_trace:" + network_class));
  std::vector<BandwidthSample> samples;
  for (double t = 0.0; t < horizon_ms; t += segment_ms)
    samples.push_back({t, mean * std::exp(sigma * rng.normal() - 0.5 * sigma * sigma)});
  // Rescale so the time-averaged bandwidth is the class mean exactly; the
  // jitter then only moves capacity between segments.
  double avg = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double seg_end = i + 1 < samples.size() ? samples[i + 1].t_ms : horizon_ms;
    avg += samples[i].mbps * (seg_end - samples[i].t_ms);
  }
  avg /= horizon_ms;
  for (auto& s : samples) s.mbps *= mean / avg;
  return BandwidthTrace(std::move(samples), horizon_ms);
}

namespace {

double parse_double_field(const std::string& field, int line_no, const std::string& origin) {
  double v = 0.0;
  auto first = field.data();
  auto last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw TraceError(origin + ": line " + std::to_string(line_no) + ": bad number '" + field +
                     "'");
  return v;
}

}  // namespace

BandwidthTrace parse_trace_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool saw_header = false;
  std::vector<std::pair<double, double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string trimmed = line;
    trimmed.erase(std::remove_if(trimmed.begin(), trimmed.end(), ::isspace), trimmed.end());
    if (trimmed.empty() || trimmed[0] == '#') continue;
    if (!saw_header) {
      if (trimmed != "t_ms,mbps")
        throw TraceError(origin + ": expected header 't_ms,mbps', got '" + line + "'");
      saw_header = true;
      continue;
    }
    auto comma = trimmed.find(',');
    if (comma == std::string::npos)
      throw TraceError(origin + ": line " + std::to_string(line_no) + ": expected 't_ms,mbps'");
    rows.emplace_back(parse_double_field(trimmed.substr(0, comma), line_no, origin),
                      parse_double_field(trimmed.substr(comma + 1), line_no, origin));
  }
  if (!saw_header) throw TraceError(origin + ": missing 't_ms,mbps' header");
  if (rows.size() < 2)
    throw TraceError(origin + ": need at least one sample row plus the end-marker row");
  // The final row only marks the horizon; it must repeat the previous
  // bandwidth so the file is unambiguous about what held until the end.
  const auto& [horizon, end_mbps] = rows.back();
  if (std::abs(end_mbps - rows[rows.size() - 2].second) >
      1e-9 * std::max(1.0, std::abs(end_mbps)))
    throw TraceError(origin + ": end-marker row must repeat the last bandwidth value");
  std::vector<BandwidthSample> samples;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) samples.push_back({rows[i].first, rows[i].second});
  try {
    return BandwidthTrace(std::move(samples), horizon);
  } catch (const TraceError& e) {
    throw TraceError(origin + ": " + e.what());
  }
}

BandwidthTrace load_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ExitCode::config, "cannot open trace file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trace_csv(buf.str(), path);
}

std::string trace_to_csv(const BandwidthTrace& trace) {
  std::ostringstream os;
  os << "t_ms,mbps\n";
  for (const auto& s : trace.samples())
    os << format_compact(s.t_ms) << "," << format_compact(s.mbps) << "\n";
  os << format_compact(trace.horizon_ms()) << "," << format_compact(trace.samples().back().mbps)
     << "\n";
  return os.str();
}

void save_trace_csv(const BandwidthTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ExitCode::config, "cannot write trace file '" + path + "'");
  out << trace_to_csv(trace);
}

}  // namespace samedge
