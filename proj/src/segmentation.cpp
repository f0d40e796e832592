#include "tugfall/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tugfall {

std::string_view to_string(TrialLabel label) {
  switch (label) {
    case TrialLabel::tug: return "TUG";
    case TrialLabel::tug_m: return "TUG-M";
    case TrialLabel::tug_c: return "TUG-C";
  }
  return "?";
}

TrialLabel parse_trial_label(std::string_view text) {
  if (text == "TUG") return TrialLabel::tug;
  if (text == "TUG-M") return TrialLabel::tug_m;
  if (text == "TUG-C") return TrialLabel::tug_c;
  throw ConfigError("unknown trial label '" + std::string(text) + "'");
}

std::string_view to_string(ThresholdMode mode) {
  switch (mode) {
    case ThresholdMode::deviation: return "deviation";
    case ThresholdMode::mean_level: return "mean_level";
    case ThresholdMode::literal: return "literal";
  }
  return "?";
}

ThresholdMode parse_threshold_mode(std::string_view text) {
  if (text == "deviation") return ThresholdMode::deviation;
  if (text == "mean_level") return ThresholdMode::mean_level;
  if (text == "literal") return ThresholdMode::literal;
  throw ConfigError("unknown threshold mode '" + std::string(text) + "'");
}

std::string_view to_string(SegmentationSource source) {
  return source == SegmentationSource::automatic ? "automatic" : "manual_override";
}

long default_median_window(double sampling_rate_hz) {
  long k = static_cast<long>(std::ceil(0.25 * sampling_rate_hz));
  if (k % 2 == 0) ++k;
  return std::max(k, 3L);
}

const TrialSegment& TrialSegmentation::trial(TrialLabel label) const {
  for (const auto& seg : segments) {
    if (seg.label == label) return seg;
  }
  throw ValidationError("segmentation has no trial labelled " + std::string(to_string(label)));
}

Eigen::VectorXd rolling_median(const Eigen::Ref<const Eigen::VectorXd>& x, long window) {
  const Eigen::Index n = x.size();
  const long half = window / 2;
  Eigen::VectorXd out(n);
  std::vector<double> buf;
  buf.reserve(static_cast<std::size_t>(window));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
    const Eigen::Index hi = std::min<Eigen::Index>(n, i + half + 1);
    buf.assign(x.data() + lo, x.data() + hi);
    const auto mid = buf.begin() + static_cast<std::ptrdiff_t>(buf.size() / 2);
    std::nth_element(buf.begin(), mid, buf.end());
    if (buf.size() % 2 == 1) {
      out[i] = *mid;
    } else {
      const double upper = *mid;
      const double lower = *std::max_element(buf.begin(), mid);
      out[i] = 0.5 * (lower + upper);
    }
  }
  return out;
}

namespace {

long window_samples_for(const SegmentationParams& params, double sampling_rate_hz) {
  return std::max(1L, std::lround(params.window_s * sampling_rate_hz));
}

void check_params(const MagnitudeSignal<double>& signal, const SegmentationParams& params) {
  if (params.median_window < 3 || params.median_window % 2 == 0) {
    throw ConfigError("segmentation: median window must be odd and >= 3");
  }
  if (!(params.window_s > 0)) throw ConfigError("segmentation: window_s must be positive");
  if (params.bridge_gap_windows < 0) throw ConfigError("segmentation: bridge_gap_windows must be >= 0");
  if (!(signal.sampling_rate_hz > 0)) throw ConfigError("segmentation: sampling rate must be positive");
  const long w = window_samples_for(params, signal.sampling_rate_hz);
  if (signal.size() <= 3 * w) {
    throw ValidationError("segmentation: signal must be longer than three summation windows");
  }
}

}  // namespace

ActivityTrace activity_trace(const MagnitudeSignal<double>& signal, const SegmentationParams& params) {
  check_params(signal, params);
  const Eigen::VectorXd& s = signal.values;

  ActivityTrace trace;
  trace.signal_mean = s.mean();
  const Eigen::VectorXd centered = s.array() - trace.signal_mean;
  trace.mean_abs_deviation = centered.cwiseAbs().mean();
  trace.window_samples = window_samples_for(params, signal.sampling_rate_hz);

  if (params.threshold_mode == ThresholdMode::literal) {
    trace.envelope = rolling_median(centered, params.median_window);
  } else {
    trace.envelope = rolling_median(centered.cwiseAbs(), params.median_window);
  }

  const double w = static_cast<double>(trace.window_samples);
  switch (params.threshold_mode) {
    case ThresholdMode::deviation:
      trace.threshold = params.threshold_scale * trace.mean_abs_deviation * w;
      break;
    case ThresholdMode::mean_level:
      trace.threshold = params.threshold_scale * trace.signal_mean * w;
      break;
    case ThresholdMode::literal:
      trace.threshold = params.threshold_scale * trace.signal_mean;
      break;
  }

  const Eigen::Index n = s.size();
  const Eigen::Index windows = (n + trace.window_samples - 1) / trace.window_samples;
  trace.window_sums.resize(windows);
  trace.active.assign(static_cast<std::size_t>(windows), false);
  for (Eigen::Index h = 0; h < windows; ++h) {
    const Eigen::Index start = h * trace.window_samples;
    const Eigen::Index len = std::min<Eigen::Index>(trace.window_samples, n - start);
    trace.window_sums[h] = trace.envelope.segment(start, len).sum();
    // A short tail window is held to a proportionally smaller threshold,
    // except in literal mode where the threshold is not a sum.
    double theta = trace.threshold;
    if (params.threshold_mode != ThresholdMode::literal) theta *= static_cast<double>(len) / w;
    trace.active[static_cast<std::size_t>(h)] = trace.window_sums[h] > theta;
  }
  return trace;
}

std::vector<SampleRange> candidate_segments(const ActivityTrace& trace, Eigen::Index signal_length,
                                            double sampling_rate_hz, const SegmentationParams& params) {
  struct Run {
    long first, last;  // window indices, inclusive
  };
  std::vector<Run> runs;
  const long windows = static_cast<long>(trace.active.size());
  for (long h = 0; h < windows; ++h) {
    if (!trace.active[static_cast<std::size_t>(h)]) continue;
    if (!runs.empty() && h - runs.back().last - 1 <= params.bridge_gap_windows) {
      runs.back().last = h;
    } else {
      runs.push_back({h, h});
    }
  }

  const long min_samples = std::lround(params.min_segment_s * sampling_rate_hz);
  std::vector<SampleRange> out;
  for (const auto& run : runs) {
    SampleRange r{run.first * trace.window_samples,
                  std::min<long>((run.last + 1) * trace.window_samples, static_cast<long>(signal_length))};
    if (r.size() >= min_samples) out.push_back(r);
  }
  return out;
}

TrialSegmentation segment_trials(const MagnitudeSignal<double>& signal, const SegmentationParams& params) {
  const ActivityTrace trace = activity_trace(signal, params);
  std::vector<SampleRange> candidates = candidate_segments(trace, signal.size(), signal.sampling_rate_hz, params);
  if (candidates.size() != 3) {
    std::ostringstream msg;
    msg << "segmentation found " << candidates.size() << " candidate trials, expected 3";
    throw SegmentationAmbiguous(msg.str(), std::move(candidates));
  }

  TrialSegmentation seg;
  seg.source = SegmentationSource::automatic;
  seg.params = params;
  seg.sampling_rate_hz = signal.sampling_rate_hz;
  for (std::size_t i = 0; i < 3; ++i) seg.segments[i] = {candidates[i], params.trial_order[i]};
  return seg;
}

TrialSegmentation apply_override(const MagnitudeSignal<double>& signal, const std::array<BoundaryPair, 3>& boundaries,
                                 const std::array<TrialLabel, 3>& trial_order) {
  const double duration = signal.duration_s();
  double previous_end = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto [start, end] = boundaries[i];
    if (!std::isfinite(start) || !std::isfinite(end) || !(start < end)) {
      throw ValidationError("override: trial " + std::to_string(i + 1) + " must have start < end");
    }
    if (start < 0.0 || end > duration) {
      throw ValidationError("override: trial " + std::to_string(i + 1) + " lies outside the signal duration");
    }
    if (i > 0 && start < previous_end) {
      throw ValidationError("override: trial " + std::to_string(i + 1) + " overlaps or precedes the previous trial");
    }
    previous_end = end;
  }

  TrialSegmentation seg;
  seg.source = SegmentationSource::manual_override;
  seg.sampling_rate_hz = signal.sampling_rate_hz;
  seg.params.trial_order = trial_order;
  for (std::size_t i = 0; i < 3; ++i) {
    SampleRange r{std::lround(boundaries[i].first * signal.sampling_rate_hz),
                  std::lround(boundaries[i].second * signal.sampling_rate_hz)};
    r.end = std::min<long>(r.end, static_cast<long>(signal.size()));
    if (r.size() <= 0) throw ValidationError("override: trial " + std::to_string(i + 1) + " is empty after rounding");
    seg.segments[i] = {r, trial_order[i]};
  }
  return seg;
}

}  // namespace tugfall
