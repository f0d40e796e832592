#pragma once

// Signal core: triaxial ingestion types, orientation-independent magnitude
// fusion, zero-phase Butterworth low-pass, and the one-sided power spectrum.

#include "tugfall/errors.hpp"
#include "tugfall/fft.hpp"

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace tugfall {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar = double>
struct RawRecording {
  std::string subject_id;
  /// One row per sample, columns x, y, z in g.
  Eigen::Matrix<Scalar, Eigen::Dynamic, 3> samples;
  Scalar sampling_rate_hz = Scalar(200);

  Eigen::Index size() const { return samples.rows(); }
};

template <typename Scalar>
void validate(const RawRecording<Scalar>& rec) {
  if (rec.samples.rows() == 0) {
    throw IngestionError("recording '" + rec.subject_id + "' has no samples");
  }
  if (!(rec.sampling_rate_hz > Scalar(0)) || !std::isfinite(rec.sampling_rate_hz)) {
    throw IngestionError("recording '" + rec.subject_id + "' has non-positive sampling rate");
  }
  if (!rec.samples.allFinite()) {
    throw IngestionError("recording '" + rec.subject_id + "' contains NaN or Inf samples");
  }
}

struct FilterSpec {
  double cutoff_hz = 99.0;
  int order = 4;

  bool operator==(const FilterSpec&) const = default;
};

template <typename Scalar = double>
struct MagnitudeSignal {
  Vector<Scalar> values;
  Scalar sampling_rate_hz = Scalar(200);
  /// Set once the signal has been low-passed.
  std::optional<FilterSpec> filter;

  Eigen::Index size() const { return values.size(); }
  Scalar duration_s() const { return Scalar(values.size()) / sampling_rate_hz; }
};

/// s(t) = sqrt(x^2 + y^2 + z^2) per sample.
template <typename Scalar>
MagnitudeSignal<Scalar> magnitude_fuse(const RawRecording<Scalar>& rec) {
  validate(rec);
  MagnitudeSignal<Scalar> out;
  out.values = rec.samples.rowwise().norm();
  out.sampling_rate_hz = rec.sampling_rate_hz;
  return out;
}

// ---------------------------------------------------------------------------
// Butterworth low-pass

/// Second-order section in direct form II transposed, a0 normalized to 1.
template <typename Scalar>
struct Biquad {
  Scalar b0, b1, b2, a1, a2;

  Scalar dc_gain() const { return (b0 + b1 + b2) / (Scalar(1) + a1 + a2); }
};

/// Digital Butterworth low-pass via the bilinear transform with cutoff
/// prewarping. Every section has unit DC gain, and all zeros sit at z = -1.
/// Odd orders end with a first-order section (b2 = a2 = 0).
template <typename Scalar>
std::vector<Biquad<Scalar>> butterworth_design(Scalar cutoff_hz, Scalar sampling_rate_hz, int order) {
  if (order < 1) throw ConfigError("butterworth: order must be >= 1");
  if (!(sampling_rate_hz > 0)) throw ConfigError("butterworth: sampling rate must be positive");
  const Scalar nyquist = sampling_rate_hz / Scalar(2);
  if (!(cutoff_hz > 0) || !(cutoff_hz < nyquist)) {
    throw ConfigError("butterworth: cutoff must lie strictly between 0 and Nyquist");
  }

  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar fs2 = Scalar(2) * sampling_rate_hz;
  const Scalar warped = fs2 * std::tan(pi * cutoff_hz / sampling_rate_hz);

  auto bilinear = [&](std::complex<Scalar> p) {
    return (Scalar(1) + p / fs2) / (Scalar(1) - p / fs2);
  };

  std::vector<Biquad<Scalar>> sections;
  for (int k = 0; k < order / 2; ++k) {
    const Scalar theta = pi * Scalar(2 * k + order + 1) / Scalar(2 * order);
    const std::complex<Scalar> pole = bilinear(std::polar(warped, theta));
    const Scalar a1 = Scalar(-2) * pole.real();
    const Scalar a2 = std::norm(pole);
    const Scalar g = (Scalar(1) + a1 + a2) / Scalar(4);
    sections.push_back({g, Scalar(2) * g, g, a1, a2});
  }
  if (order % 2 == 1) {
    const Scalar pole = bilinear(std::complex<Scalar>(-warped, 0)).real();
    const Scalar g = (Scalar(1) - pole) / Scalar(2);
    sections.push_back({g, g, Scalar(0), -pole, Scalar(0)});
  }
  return sections;
}

namespace detail {

// Runs the cascade once over `x` in place. Each section starts in the steady
// state it would reach for a constant input equal to its first sample.
template <typename Scalar>
void sosfilt_inplace(const std::vector<Biquad<Scalar>>& sections, Vector<Scalar>& x) {
  if (x.size() == 0) return;
  for (const auto& s : sections) {
    const Scalar x0 = x[0];
    const Scalar y0 = s.dc_gain() * x0;
    Scalar z2 = s.b2 * x0 - s.a2 * y0;
    Scalar z1 = y0 - s.b0 * x0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const Scalar in = x[i];
      const Scalar out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      x[i] = out;
    }
  }
}

}  // namespace detail

/// Forward-backward Butterworth filtering of a real sequence. The input is
/// extended at both ends by odd reflection of 3 * order samples (clamped to
/// length - 1) and the extension is trimmed afterwards.
template <typename Derived>
Vector<typename Derived::Scalar> filtfilt(const std::vector<Biquad<typename Derived::Scalar>>& sections,
                                          const Eigen::MatrixBase<Derived>& input, Eigen::Index padlen) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = input.size();
  if (n == 0) return {};
  padlen = std::min<Eigen::Index>(padlen, n - 1);

  Vector<Scalar> ext(n + 2 * padlen);
  for (Eigen::Index i = 0; i < padlen; ++i) {
    ext[i] = Scalar(2) * input[0] - input[padlen - i];
    ext[padlen + n + i] = Scalar(2) * input[n - 1] - input[n - 2 - i];
  }
  ext.segment(padlen, n) = input;

  detail::sosfilt_inplace(sections, ext);
  ext.reverseInPlace();
  detail::sosfilt_inplace(sections, ext);
  ext.reverseInPlace();
  return ext.segment(padlen, n);
}

/// Zero-phase Butterworth low-pass of a magnitude signal. Length-preserving.
template <typename Scalar>
MagnitudeSignal<Scalar> butterworth_lowpass(const MagnitudeSignal<Scalar>& signal, Scalar cutoff_hz, int order) {
  const auto sections = butterworth_design(cutoff_hz, signal.sampling_rate_hz, order);
  MagnitudeSignal<Scalar> out;
  out.values = filtfilt(sections, signal.values, Eigen::Index(3 * order));
  out.sampling_rate_hz = signal.sampling_rate_hz;
  out.filter = FilterSpec{static_cast<double>(cutoff_hz), order};
  return out;
}

// ---------------------------------------------------------------------------
// Power spectrum

/// One-sided squared-magnitude spectrum of the unnormalized DFT.
/// power[k] = |X[k]|^2 for k = 0 .. floor(N/2), where N is the transform length.
template <typename Scalar = double>
struct PowerSpectrum {
  Vector<Scalar> frequencies_hz;
  Vector<Scalar> power;
  Scalar bin_width_hz = Scalar(0);
  /// Transform length N (equals the input length unless zero-padded).
  Eigen::Index transform_length = 0;

  Eigen::Index size() const { return power.size(); }

  /// Weight that folds a one-sided bin back to its two-sided energy: 1 for
  /// DC and (even N) Nyquist, 2 otherwise.
  Scalar fold_weight(Eigen::Index k) const {
    if (k == 0) return Scalar(1);
    if (transform_length % 2 == 0 && k == transform_length / 2) return Scalar(1);
    return Scalar(2);
  }

  /// Sum over the full two-sided spectrum; equals N * sum(s^2) (Parseval).
  Scalar two_sided_energy() const {
    Scalar total = 0;
    for (Eigen::Index k = 0; k < power.size(); ++k) total += fold_weight(k) * power[k];
    return total;
  }
};

struct SpectrumOptions {
  /// Zero-pad to the next power of two before transforming.
  bool zero_pad = false;
};

template <typename Derived>
PowerSpectrum<typename Derived::Scalar> power_spectrum(const Eigen::MatrixBase<Derived>& segment,
                                                       typename Derived::Scalar sampling_rate_hz,
                                                       SpectrumOptions options = {}) {
  using Scalar = typename Derived::Scalar;
  if (segment.size() < 2) throw FeatureError("power_spectrum: segment needs at least 2 samples");
  if (!(sampling_rate_hz > 0)) throw ConfigError("power_spectrum: sampling rate must be positive");

  const Eigen::Index n = options.zero_pad ? detail::next_power_of_two(segment.size()) : segment.size();
  Vector<Scalar> padded = Vector<Scalar>::Zero(n);
  padded.head(segment.size()) = segment;

  const ComplexVector<Scalar> spectrum = rfft(padded);
  const Eigen::Index bins = n / 2 + 1;

  PowerSpectrum<Scalar> out;
  out.transform_length = n;
  out.bin_width_hz = sampling_rate_hz / Scalar(n);
  out.power = spectrum.head(bins).cwiseAbs2();
  out.frequencies_hz = Vector<Scalar>::LinSpaced(bins, Scalar(0), Scalar(bins - 1)) * out.bin_width_hz;
  return out;
}

template <typename Scalar>
PowerSpectrum<Scalar> power_spectrum(const MagnitudeSignal<Scalar>& signal, SpectrumOptions options = {}) {
  return power_spectrum(signal.values, signal.sampling_rate_hz, options);
}

}  // namespace tugfall
