#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "samedge/common.hpp"

namespace samedge {

// Milliseconds to move `bytes` over a `mbps` link: bytes * 8 / (mbps * 1000).
// Zero payload costs nothing even on a dead link; positive payload over a
// non-positive bandwidth is infinite.
double transmission_time_ms(double bytes, double mbps);

// Piecewise-constant bandwidth over time. samples[i] holds from its t_ms up
// to the next sample's t_ms; the last sample holds until horizon_ms. Time
// starts at samples[0].t_ms == 0.
struct BandwidthSample {
  double t_ms = 0.0;
  double mbps = 0.0;
};

class BandwidthTrace {
 public:
  BandwidthTrace() = default;
  BandwidthTrace(std::vector<BandwidthSample> samples, double horizon_ms);

  static BandwidthTrace constant(double mbps, double horizon_ms);

  const std::vector<BandwidthSample>& samples() const { return samples_; }
  double horizon_ms() const { return horizon_ms_; }

  double bandwidth_at(double t_ms) const;  // clamped to [0, horizon)
  // Megabits deliverable over [t0, t1).
  double megabits_between(double t0_ms, double t1_ms) const;
  double mean_mbps() const { return megabits_between(0.0, horizon_ms_) / (horizon_ms_ / 1000.0); }
  double min_mbps(double t0_ms, double t1_ms) const;

  // Completion time of a transfer of `bytes` starting at start_ms, walking
  // the piecewise-constant segments. Throws TraceError if the transfer is
  // still unfinished at the horizon.
  double finish_time_ms(double start_ms, double bytes) const;

 private:
  std::vector<BandwidthSample> samples_;
  double horizon_ms_ = 0.0;
};

// Mean bandwidth per named network class, Mbps.
const std::map<std::string, double>& network_class_means();

// Synthesizes a trace for a named class: per-segment log-normal jitter around
// the class mean, then a global rescale so the time-averaged bandwidth equals
// the class mean exactly. segment_ms controls how often the bandwidth moves.
BandwidthTrace synth_class_trace(const std::string& network_class, double horizon_ms,
                                 std::uint64_t seed, double sigma = 0.25,
                                 double segment_ms = 500.0);

// CSV round trip. Format: header "t_ms,mbps", one row per sample, and a
// final end-marker row at the horizon repeating the last bandwidth.
BandwidthTrace load_trace_csv(const std::string& path);
BandwidthTrace parse_trace_csv(const std::string& text, const std::string& origin = "trace");
std::string trace_to_csv(const BandwidthTrace& trace);
void save_trace_csv(const BandwidthTrace& trace, const std::string& path);

}  // namespace samedge
