#pragma once

// Spectral features per trial (PSE, peak frequencies, peak powers, weighted
// peaks), pairwise distance features between trials, and cohort-level
// min-max normalized average fusion.

#include "tugfall/errors.hpp"
#include "tugfall/segmentation.hpp"
#include "tugfall/signal.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tugfall {

enum class PseNormalization {
  /// Spectrum scaled to unit sum before the entropy sum.
  unit_sum,
  /// Raw |F(s)|^2 values.
  none,
};

std::string_view to_string(PseNormalization mode);
PseNormalization parse_pse_normalization(std::string_view text);

struct FeatureOptions {
  double epsilon = 0.001;
  PseNormalization pse_normalization = PseNormalization::unit_sum;
  /// Bins removed on each side of a chosen peak before the next search.
  /// Zero excludes only the chosen bin itself.
  int peak_exclusion_bins = 2;
  bool zero_pad = false;
};

/// Power spectral entropy: -sum S(w) log(S(w) + eps), natural log.
double pse(const PowerSpectrum<double>& spectrum, double epsilon = 0.001,
           PseNormalization normalization = PseNormalization::unit_sum);

struct SpectralPeaks {
  std::array<double, 3> frequencies_hz{};
  std::array<double, 3> power{};
  std::array<Eigen::Index, 3> bins{};
};

/// Three largest non-DC bins, each search excluding the neighbourhoods of
/// the previous picks. Ties go to the lower frequency.
SpectralPeaks spectral_peaks(const PowerSpectrum<double>& spectrum, int exclusion_bins = 2);

/// Elementwise pspf * psp.
std::array<double, 3> wpsp(const std::array<double, 3>& pspf, const std::array<double, 3>& psp);

/// |a - b|, the one-dimensional Euclidean distance.
inline double distance_feature(double a, double b) { return std::abs(a - b); }

/// The ten per-source features, in feature-vector order.
enum class Feature { pse, pspf1, pspf2, pspf3, psp1, psp2, psp3, wpsp1, wpsp2, wpsp3 };
inline constexpr std::array<Feature, 10> kAllFeatures{Feature::pse,  Feature::pspf1, Feature::pspf2, Feature::pspf3,
                                                       Feature::psp1, Feature::psp2,  Feature::psp3,  Feature::wpsp1,
                                                       Feature::wpsp2, Feature::wpsp3};
std::string_view to_string(Feature f);

/// s = the three trials concatenated, t = TUG, m = TUG-M, c = TUG-C.
enum class Source { s, t, m, c };
inline constexpr std::array<Source, 4> kAllSources{Source::s, Source::t, Source::m, Source::c};
std::string_view to_string(Source src);

/// All unordered source pairs; (m, c) is included alongside the five
/// enumerated comparisons because the distance fusion uses it.
inline constexpr std::array<std::pair<Source, Source>, 6> kSourcePairs{
    {{Source::s, Source::t}, {Source::s, Source::m}, {Source::s, Source::c},
     {Source::t, Source::m}, {Source::t, Source::c}, {Source::m, Source::c}}};

struct SpectralFeatureSet {
  double pse = 0.0;
  std::array<double, 3> pspf{};
  std::array<double, 3> psp{};
  std::array<double, 3> wpsp{};

  double operator[](Feature f) const;
};

SpectralFeatureSet spectral_features(const Eigen::Ref<const Eigen::VectorXd>& segment, double sampling_rate_hz,
                                     const FeatureOptions& options = {});

/// Column name of a base feature, e.g. "pse_c", "wpsp2_c".
std::string column_name(Feature f, Source src);
/// Column name of a distance feature, e.g. "d_pse_s_c".
std::string distance_column_name(Feature f, Source a, Source b);

struct FeatureVector {
  std::array<SpectralFeatureSet, 4> by_source;

  const SpectralFeatureSet& operator[](Source src) const { return by_source[static_cast<std::size_t>(src)]; }
  double distance(Feature f, Source a, Source b) const { return distance_feature((*this)[a][f], (*this)[b][f]); }

  /// 40 base features followed by 60 distance features, with their column names.
  std::vector<std::pair<std::string, double>> flatten() const;
};

/// Names produced by FeatureVector::flatten, in order.
const std::vector<std::string>& feature_column_names();

/// Samples of the three trials concatenated in time order.
Eigen::VectorXd concatenate_trials(const MagnitudeSignal<double>& signal, const TrialSegmentation& seg);

FeatureVector build_feature_vector(const MagnitudeSignal<double>& signal, const TrialSegmentation& seg,
                                   const FeatureOptions& options = {});

/// (v - min) / (max - min); a constant column maps to 0.5 everywhere.
Eigen::VectorXd minmax_normalize(const Eigen::Ref<const Eigen::VectorXd>& column);

/// Per-row mean of the given columns (each expected in [0, 1]).
Eigen::VectorXd fuse_average(const std::vector<Eigen::VectorXd>& columns);

/// A named normalized-average fusion over table columns.
struct FusionSpec {
  std::string name;
  std::vector<std::string> columns;
};

/// avg(pse_c, wpsp2_c, wpsp3_c).
FusionSpec feats_avg_preset();
/// avg(d_pse_s_c, d_psp<i>_s_c, d_pspf<i>_t_m, d_wpsp<i>_m_c) with the peak index per term.
FusionSpec dists_avg_preset(int psp_index = 1, int pspf_index = 1, int wpsp_index = 1);

}  // namespace tugfall
