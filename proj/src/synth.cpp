#include "tugfall/synth.hpp"

#include "tugfall/ingest.hpp"
#include "tugfall/table.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace tugfall {

namespace {

void validate_tones(const ToneSet& t, const char* which) {
  if (t.tones_hz.empty() || t.tones_hz.size() != t.amplitudes_g.size()) {
    throw ConfigError(std::string("synth: ") + which + " tones and amplitudes must be non-empty and equal length");
  }
  for (double f : t.tones_hz) {
    if (!(f > 0)) throw ConfigError(std::string("synth: ") + which + " tones must be positive");
  }
  for (double a : t.amplitudes_g) {
    if (!(a >= 0)) throw ConfigError(std::string("synth: ") + which + " amplitudes must be non-negative");
  }
}

ToneSet parse_tones(const nlohmann::json& j, const ToneSet& fallback) {
  ToneSet t = fallback;
  if (j.contains("tones_hz")) t.tones_hz = j.at("tones_hz").get<std::vector<double>>();
  if (j.contains("amplitudes_g")) t.amplitudes_g = j.at("amplitudes_g").get<std::vector<double>>();
  return t;
}

}  // namespace

void SynthSpec::validate() const {
  if (subjects < 1) throw ConfigError("synth: subjects must be >= 1");
  if (!(sampling_rate_hz > 0)) throw ConfigError("synth: sampling rate must be positive");
  if (!(faller_fraction >= 0 && faller_fraction <= 1)) throw ConfigError("synth: faller_fraction must be in [0, 1]");
  if (!(burst_min_s > 0) || !(burst_max_s >= burst_min_s)) throw ConfigError("synth: invalid burst durations");
  if (!(gap_min_s > 0) || !(gap_max_s >= gap_min_s)) throw ConfigError("synth: invalid gap durations");
  if (!(lead_s >= 0) || !(tail_s >= 0)) throw ConfigError("synth: lead/tail durations must be >= 0");
  if (!(noise_g >= 0)) throw ConfigError("synth: noise must be >= 0");
  if (!(tone_jitter_hz >= 0)) throw ConfigError("synth: tone jitter must be >= 0");
  if (extra_bursts < 0) throw ConfigError("synth: extra_bursts must be >= 0");
  validate_tones(faller_tones, "faller");
  validate_tones(nonfaller_tones, "nonfaller");
  for (const ToneSet* t : {&faller_tones, &nonfaller_tones}) {
    const double f0 = *std::min_element(t->tones_hz.begin(), t->tones_hz.end());
    if (tone_jitter_hz >= f0) throw ConfigError("synth: tone jitter must be below the lowest tone");
    for (double f : t->tones_hz) {
      if (f + tone_jitter_hz * f / f0 >= sampling_rate_hz / 2) throw ConfigError("synth: tones must stay below Nyquist");
    }
  }
}

SynthSpec parse_synth_spec(const nlohmann::json& j) {
  SynthSpec s;
  s.subjects = j.value("subjects", s.subjects);
  s.sampling_rate_hz = j.value("sampling_rate_hz", s.sampling_rate_hz);
  s.faller_fraction = j.value("faller_fraction", s.faller_fraction);
  if (j.contains("faller")) s.faller_tones = parse_tones(j.at("faller"), s.faller_tones);
  if (j.contains("nonfaller")) s.nonfaller_tones = parse_tones(j.at("nonfaller"), s.nonfaller_tones);
  s.burst_min_s = j.value("burst_min_s", s.burst_min_s);
  s.burst_max_s = j.value("burst_max_s", s.burst_max_s);
  s.gap_min_s = j.value("gap_min_s", s.gap_min_s);
  s.gap_max_s = j.value("gap_max_s", s.gap_max_s);
  s.lead_s = j.value("lead_s", s.lead_s);
  s.tail_s = j.value("tail_s", s.tail_s);
  s.noise_g = j.value("noise_g", s.noise_g);
  s.tone_jitter_hz = j.value("tone_jitter_hz", s.tone_jitter_hz);
  s.random_rotation = j.value("random_rotation", s.random_rotation);
  s.extra_bursts = j.value("extra_bursts", s.extra_bursts);
  s.validate();
  return s;
}

nlohmann::json to_json(const SynthSpec& s) {
  return {{"subjects", s.subjects},
          {"sampling_rate_hz", s.sampling_rate_hz},
          {"faller_fraction", s.faller_fraction},
          {"faller", {{"tones_hz", s.faller_tones.tones_hz}, {"amplitudes_g", s.faller_tones.amplitudes_g}}},
          {"nonfaller", {{"tones_hz", s.nonfaller_tones.tones_hz}, {"amplitudes_g", s.nonfaller_tones.amplitudes_g}}},
          {"burst_min_s", s.burst_min_s},
          {"burst_max_s", s.burst_max_s},
          {"gap_min_s", s.gap_min_s},
          {"gap_max_s", s.gap_max_s},
          {"lead_s", s.lead_s},
          {"tail_s", s.tail_s},
          {"noise_g", s.noise_g},
          {"tone_jitter_hz", s.tone_jitter_hz},
          {"random_rotation", s.random_rotation},
          {"extra_bursts", s.extra_bursts}};
}

long cycle_aligned_length(double duration_s, double f0_hz, double sampling_rate_hz) {
  const double cycles = std::max(1.0, std::round(duration_s * f0_hz));
  return std::lround(cycles * sampling_rate_hz / f0_hz);
}

SyntheticSubject generate_subject(const SynthSpec& spec, const ToneSet& tones, int faller, std::string subject_id,
                                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double fs = spec.sampling_rate_hz;

  SubjectTruth truth;
  truth.subject_id = std::move(subject_id);
  truth.faller = faller;
  truth.gender = unit(rng) < 0.5 ? "F" : "M";

  const double f0 = *std::min_element(tones.tones_hz.begin(), tones.tones_hz.end());
  const double scale = 1.0 + spec.tone_jitter_hz * (2.0 * unit(rng) - 1.0) / f0;
  for (double f : tones.tones_hz) truth.tones_hz.push_back(f * scale);
  truth.amplitudes_g = tones.amplitudes_g;
  const double f0_subject = f0 * scale;

  const int bursts = 3 + spec.extra_bursts;
  long cursor = std::lround(spec.lead_s * fs);
  for (int b = 0; b < bursts; ++b) {
    if (b > 0) cursor += std::lround((spec.gap_min_s + (spec.gap_max_s - spec.gap_min_s) * unit(rng)) * fs);
    const double duration = spec.burst_min_s + (spec.burst_max_s - spec.burst_min_s) * unit(rng);
    const long length = cycle_aligned_length(duration, f0_subject, fs);
    truth.bursts.push_back({cursor, cursor + length});
    cursor += length;
  }
  const long total = cursor + std::lround(spec.tail_s * fs);

  Eigen::VectorXd magnitude = Eigen::VectorXd::Ones(total);
  const double two_pi = 2.0 * std::numbers::pi;
  for (const auto& burst : truth.bursts) {
    for (long i = burst.start; i < burst.end; ++i) {
      const double t = static_cast<double>(i - burst.start) / fs;
      double v = 0.0;
      for (std::size_t k = 0; k < truth.tones_hz.size(); ++k) v += truth.amplitudes_g[k] * std::sin(two_pi * truth.tones_hz[k] * t);
      magnitude[i] += v;
    }
  }

  if (spec.random_rotation) {
    Eigen::Matrix3d g;
    for (Eigen::Index i = 0; i < 9; ++i) g.data()[i] = gauss(rng);
    Eigen::HouseholderQR<Eigen::Matrix3d> qr(g);
    Eigen::Matrix3d q = qr.householderQ();
    const Eigen::Vector3d d = qr.matrixQR().diagonal().array().sign();
    truth.rotation = q * d.asDiagonal();
  }

  SyntheticSubject out;
  out.recording.subject_id = truth.subject_id;
  out.recording.sampling_rate_hz = fs;
  out.recording.samples.resize(total, 3);
  for (long i = 0; i < total; ++i) {
    Eigen::Vector3d v(spec.noise_g * gauss(rng), spec.noise_g * gauss(rng), magnitude[i] + spec.noise_g * gauss(rng));
    out.recording.samples.row(i) = (truth.rotation * v).transpose();
  }
  out.truth = std::move(truth);
  return out;
}

std::vector<SyntheticSubject> generate_cohort(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  const int fallers = static_cast<int>(std::lround(spec.faller_fraction * spec.subjects));
  std::vector<SyntheticSubject> cohort;
  cohort.reserve(static_cast<std::size_t>(spec.subjects));
  for (int i = 0; i < spec.subjects; ++i) {
    const int faller = i < fallers ? 1 : 0;
    char id[16];
    std::snprintf(id, sizeof id, "S%03d", i + 1);
    cohort.push_back(generate_subject(spec, faller ? spec.faller_tones : spec.nonfaller_tones, faller, id, rng));
  }
  return cohort;
}

void write_synthetic_corpus(const SynthSpec& spec, std::uint64_t seed, const std::filesystem::path& dir) {
  const auto cohort = generate_cohort(spec, seed);
  std::filesystem::create_directories(dir / "signals");

  std::ofstream subjects(dir / "subjects.csv", std::ios::binary);
  subjects << "subject_id,faller,gender\n";
  nlohmann::json truth = nlohmann::json::array();
  for (const auto& s : cohort) {
    subjects << s.truth.subject_id << ',' << s.truth.faller << ',' << s.truth.gender << '\n';
    write_recording(dir / "signals" / (s.truth.subject_id + ".csv"), s.recording);

    nlohmann::json bursts = nlohmann::json::array();
    for (const auto& b : s.truth.bursts) {
      bursts.push_back({{"start_sample", b.start},
                        {"end_sample", b.end},
                        {"start_s", static_cast<double>(b.start) / spec.sampling_rate_hz},
                        {"end_s", static_cast<double>(b.end) / spec.sampling_rate_hz}});
    }
    truth.push_back({{"subject_id", s.truth.subject_id},
                     {"faller", s.truth.faller},
                     {"gender", s.truth.gender},
                     {"bursts", bursts},
                     {"tones_hz", s.truth.tones_hz},
                     {"amplitudes_g", s.truth.amplitudes_g}});
  }
  nlohmann::json doc = {{"seed", seed}, {"spec", to_json(spec)}, {"subjects", truth}};
  std::ofstream(dir / "ground_truth.json", std::ios::binary) << doc.dump(2) << '\n';
}

}  // namespace tugfall
