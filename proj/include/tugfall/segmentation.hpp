#pragma once

// Splits a fused recording into its three consecutive TUG trials.
//
// Pipeline: subtract the global mean, rolling-median the (rectified)
// deviation, sum it over consecutive non-overlapping windows, threshold each
// window, merge active windows into runs, bridge single-window gaps, drop runs
// shorter than a plausible trial, and label the survivors in time order.

#include "tugfall/errors.hpp"
#include "tugfall/signal.hpp"

#include <Eigen/Core>

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tugfall {

enum class TrialLabel { tug, tug_m, tug_c };

std::string_view to_string(TrialLabel label);
TrialLabel parse_trial_label(std::string_view text);

/// How the per-window activity threshold is derived.
enum class ThresholdMode {
  /// theta = scale * mean|s - mean(s)| * window_samples, over the rectified
  /// median envelope. Invariant to constant offsets and to amplitude scaling.
  deviation,
  /// theta = scale * mean(s) * window_samples, over the rectified envelope.
  mean_level,
  /// Signed median of s - mean(s) compared against scale * mean(s).
  literal,
};

std::string_view to_string(ThresholdMode mode);
ThresholdMode parse_threshold_mode(std::string_view text);

enum class SegmentationSource { automatic, manual_override };

std::string_view to_string(SegmentationSource source);

struct SegmentationParams {
  /// Rolling-median window in samples; odd and >= 3.
  long median_window = 51;
  double window_s = 0.5;
  double threshold_scale = 0.5;
  ThresholdMode threshold_mode = ThresholdMode::deviation;
  /// Runs separated by at most this many inactive windows are merged.
  long bridge_gap_windows = 1;
  /// Runs shorter than this are discarded before counting.
  double min_segment_s = 3.0;
  /// Label assigned to the first, second and third trial in time.
  std::array<TrialLabel, 3> trial_order{TrialLabel::tug, TrialLabel::tug_m, TrialLabel::tug_c};
};

/// Quarter second of samples, rounded up to the next odd integer (51 at 200 Hz).
long default_median_window(double sampling_rate_hz);

struct TrialSegment {
  SampleRange range;
  TrialLabel label = TrialLabel::tug;
};

struct TrialSegmentation {
  std::array<TrialSegment, 3> segments;
  SegmentationSource source = SegmentationSource::automatic;
  SegmentationParams params;
  double sampling_rate_hz = 200.0;

  const TrialSegment& trial(TrialLabel label) const;
};

/// Intermediate quantities of the segmentation, kept for plot-data output.
struct ActivityTrace {
  double signal_mean = 0.0;
  double mean_abs_deviation = 0.0;
  long window_samples = 0;
  /// Threshold for a full-length window; partial tail windows scale it by length.
  double threshold = 0.0;
  Eigen::VectorXd envelope;
  Eigen::VectorXd window_sums;
  std::vector<bool> active;
};

/// Centered rolling median; windows are truncated at the edges.
Eigen::VectorXd rolling_median(const Eigen::Ref<const Eigen::VectorXd>& x, long window);

ActivityTrace activity_trace(const MagnitudeSignal<double>& signal, const SegmentationParams& params);

/// Merged, bridged and duration-filtered activity runs, in time order.
std::vector<SampleRange> candidate_segments(const ActivityTrace& trace, Eigen::Index signal_length,
                                            double sampling_rate_hz, const SegmentationParams& params);

/// Throws SegmentationAmbiguous (with candidates) unless exactly three trials are found.
TrialSegmentation segment_trials(const MagnitudeSignal<double>& signal, const SegmentationParams& params);

using BoundaryPair = std::pair<double, double>;

/// Manual segmentation from three (start_s, end_s) pairs; indices are
/// round(seconds * sampling_rate) and the end index is exclusive.
TrialSegmentation apply_override(const MagnitudeSignal<double>& signal, const std::array<BoundaryPair, 3>& boundaries,
                                 const std::array<TrialLabel, 3>& trial_order = {TrialLabel::tug, TrialLabel::tug_m,
                                                                                 TrialLabel::tug_c});

}  // namespace tugfall
