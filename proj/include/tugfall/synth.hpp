#pragma once

// Synthetic TUG-like corpus: each subject wears a randomly oriented sensor
// and performs tone bursts ("trials") on a 1 g baseline separated by rest.
// Ground truth (burst boundaries, tones, labels) is known by construction.

#include "tugfall/errors.hpp"
#include "tugfall/signal.hpp"

#include "json.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace tugfall {

struct ToneSet {
  std::vector<double> tones_hz{2.0};
  std::vector<double> amplitudes_g{1.0};
};

struct SynthSpec {
  int subjects = 36;
  double sampling_rate_hz = 200.0;
  /// Fraction of subjects labelled faller (rounded to a count).
  double faller_fraction = 0.5;
  ToneSet faller_tones{{1.8, 3.6}, {0.5, 0.25}};
  ToneSet nonfaller_tones{{1.2, 2.4}, {0.5, 0.25}};
  double burst_min_s = 8.0;
  double burst_max_s = 15.0;
  double gap_min_s = 3.0;
  double gap_max_s = 8.0;
  double lead_s = 3.0;
  double tail_s = 3.0;
  /// Standard deviation of white noise added to each axis, in g.
  double noise_g = 0.01;
  /// Per-subject uniform shift of the fundamental, in Hz (harmonics follow).
  double tone_jitter_hz = 0.0;
  bool random_rotation = true;
  /// Bursts appended after the third trial (adversarial cases).
  int extra_bursts = 0;

  void validate() const;
};

SynthSpec parse_synth_spec(const nlohmann::json& j);
nlohmann::json to_json(const SynthSpec& spec);

struct SubjectTruth {
  std::string subject_id;
  int faller = 0;
  std::string gender;
  /// Burst sample ranges in time order; the first three are the trials.
  std::vector<SampleRange> bursts;
  std::vector<double> tones_hz;
  std::vector<double> amplitudes_g;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
};

struct SyntheticSubject {
  RawRecording<double> recording;
  SubjectTruth truth;
};

/// Burst length in samples holding a whole number of cycles of `f0_hz`
/// (to within rounding), at least one cycle.
long cycle_aligned_length(double duration_s, double f0_hz, double sampling_rate_hz);

SyntheticSubject generate_subject(const SynthSpec& spec, const ToneSet& tones, int faller, std::string subject_id,
                                  std::mt19937_64& rng);

std::vector<SyntheticSubject> generate_cohort(const SynthSpec& spec, std::uint64_t seed);

/// Writes subjects.csv, signals/<id>.csv and ground_truth.json under `dir`.
void write_synthetic_corpus(const SynthSpec& spec, std::uint64_t seed, const std::filesystem::path& dir);

}  // namespace tugfall
