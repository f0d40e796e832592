#include "tugfall/features.hpp"

#include <algorithm>
#include <cmath>

namespace tugfall {

std::string_view to_string(PseNormalization mode) {
  return mode == PseNormalization::unit_sum ? "unit_sum" : "none";
}

PseNormalization parse_pse_normalization(std::string_view text) {
  if (text == "unit_sum") return PseNormalization::unit_sum;
  if (text == "none") return PseNormalization::none;
  throw ConfigError("unknown PSE normalization '" + std::string(text) + "'");
}

double pse(const PowerSpectrum<double>& spectrum, double epsilon, PseNormalization normalization) {
  Eigen::ArrayXd s = spectrum.power.array();
  if (normalization == PseNormalization::unit_sum) {
    const double total = s.sum();
    if (!(total > 0)) throw FeatureError("pse: spectrum has zero total power");
    s /= total;
  }
  return -(s * (s + epsilon).log()).sum();
}

namespace {

// Non-DC content below this fraction of the total is treated as round-off.
constexpr double kNonDcFloor = 1e-20;

}  // namespace

SpectralPeaks spectral_peaks(const PowerSpectrum<double>& spectrum, int exclusion_bins) {
  if (exclusion_bins < 0) throw ConfigError("spectral_peaks: exclusion width must be >= 0");
  const Eigen::Index bins = spectrum.size();
  if (bins - 1 < 4) throw FeatureError("spectral_peaks: spectrum needs at least 4 non-DC bins");

  const double total = spectrum.power.sum();
  const double non_dc = spectrum.power.tail(bins - 1).sum();
  if (!(non_dc > kNonDcFloor * total)) throw FeatureError("spectral_peaks: spectrum has no non-DC content");

  std::vector<bool> available(static_cast<std::size_t>(bins), true);
  available[0] = false;

  SpectralPeaks out;
  for (std::size_t i = 0; i < 3; ++i) {
    Eigen::Index best = -1;
    for (Eigen::Index k = 1; k < bins; ++k) {
      if (!available[static_cast<std::size_t>(k)]) continue;
      if (best < 0 || spectrum.power[k] > spectrum.power[best]) best = k;
    }
    if (best < 0) throw FeatureError("spectral_peaks: fewer than 3 selectable bins after exclusions");
    out.bins[i] = best;
    out.frequencies_hz[i] = spectrum.frequencies_hz[best];
    out.power[i] = spectrum.power[best];
    const Eigen::Index lo = std::max<Eigen::Index>(1, best - exclusion_bins);
    const Eigen::Index hi = std::min<Eigen::Index>(bins - 1, best + exclusion_bins);
    for (Eigen::Index k = lo; k <= hi; ++k) available[static_cast<std::size_t>(k)] = false;
  }
  return out;
}

std::array<double, 3> wpsp(const std::array<double, 3>& pspf, const std::array<double, 3>& psp) {
  return {pspf[0] * psp[0], pspf[1] * psp[1], pspf[2] * psp[2]};
}

std::string_view to_string(Feature f) {
  switch (f) {
    case Feature::pse: return "pse";
    case Feature::pspf1: return "pspf1";
    case Feature::pspf2: return "pspf2";
    case Feature::pspf3: return "pspf3";
    case Feature::psp1: return "psp1";
    case Feature::psp2: return "psp2";
    case Feature::psp3: return "psp3";
    case Feature::wpsp1: return "wpsp1";
    case Feature::wpsp2: return "wpsp2";
    case Feature::wpsp3: return "wpsp3";
  }
  return "?";
}

std::string_view to_string(Source src) {
  switch (src) {
    case Source::s: return "s";
    case Source::t: return "t";
    case Source::m: return "m";
    case Source::c: return "c";
  }
  return "?";
}

double SpectralFeatureSet::operator[](Feature f) const {
  switch (f) {
    case Feature::pse: return pse;
    case Feature::pspf1: return pspf[0];
    case Feature::pspf2: return pspf[1];
    case Feature::pspf3: return pspf[2];
    case Feature::psp1: return psp[0];
    case Feature::psp2: return psp[1];
    case Feature::psp3: return psp[2];
    case Feature::wpsp1: return wpsp[0];
    case Feature::wpsp2: return wpsp[1];
    case Feature::wpsp3: return wpsp[2];
  }
  return 0.0;
}

SpectralFeatureSet spectral_features(const Eigen::Ref<const Eigen::VectorXd>& segment, double sampling_rate_hz,
                                     const FeatureOptions& options) {
  const auto spectrum = power_spectrum(segment, sampling_rate_hz, SpectrumOptions{options.zero_pad});
  const auto peaks = spectral_peaks(spectrum, options.peak_exclusion_bins);
  SpectralFeatureSet out;
  out.pse = pse(spectrum, options.epsilon, options.pse_normalization);
  out.pspf = peaks.frequencies_hz;
  out.psp = peaks.power;
  out.wpsp = wpsp(out.pspf, out.psp);
  return out;
}

std::string column_name(Feature f, Source src) {
  return std::string(to_string(f)) + "_" + std::string(to_string(src));
}

std::string distance_column_name(Feature f, Source a, Source b) {
  return "d_" + std::string(to_string(f)) + "_" + std::string(to_string(a)) + "_" + std::string(to_string(b));
}

std::vector<std::pair<std::string, double>> FeatureVector::flatten() const {
  std::vector<std::pair<std::string, double>> out;
  out.reserve(100);
  for (Source src : kAllSources) {
    for (Feature f : kAllFeatures) out.emplace_back(column_name(f, src), (*this)[src][f]);
  }
  for (const auto& [a, b] : kSourcePairs) {
    for (Feature f : kAllFeatures) out.emplace_back(distance_column_name(f, a, b), distance(f, a, b));
  }
  return out;
}

const std::vector<std::string>& feature_column_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, value] : FeatureVector{}.flatten()) v.push_back(name);
    return v;
  }();
  return names;
}

Eigen::VectorXd concatenate_trials(const MagnitudeSignal<double>& signal, const TrialSegmentation& seg) {
  Eigen::Index total = 0;
  for (const auto& t : seg.segments) total += t.range.size();
  Eigen::VectorXd out(total);
  Eigen::Index offset = 0;
  for (const auto& t : seg.segments) {
    out.segment(offset, t.range.size()) = signal.values.segment(t.range.start, t.range.size());
    offset += t.range.size();
  }
  return out;
}

FeatureVector build_feature_vector(const MagnitudeSignal<double>& signal, const TrialSegmentation& seg,
                                   const FeatureOptions& options) {
  for (const auto& t : seg.segments) {
    if (t.range.start < 0 || t.range.end > signal.size() || t.range.size() <= 0) {
      throw ValidationError("build_feature_vector: segment outside the signal");
    }
  }
  FeatureVector fv;
  const double fs = signal.sampling_rate_hz;
  auto trial = [&](TrialLabel label) {
    const SampleRange r = seg.trial(label).range;
    return signal.values.segment(r.start, r.size());
  };
  fv.by_source[static_cast<std::size_t>(Source::s)] = spectral_features(concatenate_trials(signal, seg), fs, options);
  fv.by_source[static_cast<std::size_t>(Source::t)] = spectral_features(trial(TrialLabel::tug), fs, options);
  fv.by_source[static_cast<std::size_t>(Source::m)] = spectral_features(trial(TrialLabel::tug_m), fs, options);
  fv.by_source[static_cast<std::size_t>(Source::c)] = spectral_features(trial(TrialLabel::tug_c), fs, options);
  return fv;
}

Eigen::VectorXd minmax_normalize(const Eigen::Ref<const Eigen::VectorXd>& column) {
  if (column.size() == 0) return {};
  const double lo = column.minCoeff();
  const double hi = column.maxCoeff();
  if (!(hi > lo)) return Eigen::VectorXd::Constant(column.size(), 0.5);
  return (column.array() - lo) / (hi - lo);
}

Eigen::VectorXd fuse_average(const std::vector<Eigen::VectorXd>& columns) {
  if (columns.empty()) throw ValidationError("fuse_average: no columns");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(columns.front().size());
  for (const auto& c : columns) {
    if (c.size() != sum.size()) throw ValidationError("fuse_average: column lengths differ");
    sum += c;
  }
  return sum / static_cast<double>(columns.size());
}

FusionSpec feats_avg_preset() {
  return {"feats_avg", {"pse_c", "wpsp2_c", "wpsp3_c"}};
}

FusionSpec dists_avg_preset(int psp_index, int pspf_index, int wpsp_index) {
  auto idx = [](int i) {
    if (i < 1 || i > 3) throw ConfigError("dists_avg: peak index must be 1, 2 or 3");
    return std::to_string(i);
  };
  return {"dists_avg",
          {"d_pse_s_c", "d_psp" + idx(psp_index) + "_s_c", "d_pspf" + idx(pspf_index) + "_t_m",
           "d_wpsp" + idx(wpsp_index) + "_m_c"}};
}

}  // namespace tugfall
