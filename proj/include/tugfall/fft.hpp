#pragma once

// Discrete Fourier transform for arbitrary lengths.
//
// Power-of-two lengths use an iterative radix-2 Cooley-Tukey transform; all
// other lengths go through Bluestein's chirp-z algorithm, which re-expresses
// the DFT as a power-of-two circular convolution. The forward transform is
// unnormalized: X[k] = sum_t x[t] exp(-2 pi i k t / N).

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace tugfall {

template <typename Scalar>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

namespace detail {

inline bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

inline Eigen::Index next_power_of_two(Eigen::Index n) {
  Eigen::Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

template <typename Scalar>
void radix2_inplace(ComplexVector<Scalar>& a, bool inverse) {
  const Eigen::Index n = a.size();
  if (n <= 1) return;

  for (Eigen::Index i = 1, j = 0; i < n; ++i) {
    Eigen::Index bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  // Twiddles are evaluated directly rather than by recurrence so the error
  // does not grow with the transform length.
  const Scalar sign = inverse ? Scalar(1) : Scalar(-1);
  std::vector<std::complex<Scalar>> twiddle(static_cast<std::size_t>(n / 2));
  for (Eigen::Index k = 0; k < n / 2; ++k) {
    const Scalar angle = sign * Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(k) / Scalar(n);
    twiddle[static_cast<std::size_t>(k)] = {std::cos(angle), std::sin(angle)};
  }

  for (Eigen::Index len = 2; len <= n; len <<= 1) {
    const Eigen::Index half = len / 2;
    const Eigen::Index stride = n / len;
    for (Eigen::Index start = 0; start < n; start += len) {
      for (Eigen::Index k = 0; k < half; ++k) {
        const std::complex<Scalar> w = twiddle[static_cast<std::size_t>(k * stride)];
        const std::complex<Scalar> u = a[start + k];
        const std::complex<Scalar> v = a[start + k + half] * w;
        a[start + k] = u + v;
        a[start + k + half] = u - v;
      }
    }
  }
}

template <typename Scalar>
ComplexVector<Scalar> bluestein(const ComplexVector<Scalar>& x) {
  const Eigen::Index n = x.size();
  const Eigen::Index m = next_power_of_two(2 * n - 1);

  // chirp[k] = exp(-i pi k^2 / n); k^2 is reduced mod 2n in integer
  // arithmetic to keep the angle small for long inputs.
  ComplexVector<Scalar> chirp(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const long long k2 = (static_cast<long long>(k) * k) % (2LL * n);
    const Scalar angle = -std::numbers::pi_v<Scalar> * Scalar(k2) / Scalar(n);
    chirp[k] = {std::cos(angle), std::sin(angle)};
  }

  ComplexVector<Scalar> a = ComplexVector<Scalar>::Zero(m);
  ComplexVector<Scalar> b = ComplexVector<Scalar>::Zero(m);
  for (Eigen::Index k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
  b[0] = std::conj(chirp[0]);
  for (Eigen::Index k = 1; k < n; ++k) {
    b[k] = std::conj(chirp[k]);
    b[m - k] = std::conj(chirp[k]);
  }

  radix2_inplace(a, false);
  radix2_inplace(b, false);
  a = a.cwiseProduct(b);
  radix2_inplace(a, true);

  ComplexVector<Scalar> out(n);
  for (Eigen::Index k = 0; k < n; ++k) out[k] = chirp[k] * a[k] / Scalar(m);
  return out;
}

}  // namespace detail

/// Unnormalized forward DFT of a complex sequence of any length >= 1.
template <typename Scalar>
ComplexVector<Scalar> fft(ComplexVector<Scalar> data) {
  if (data.size() == 0) throw std::invalid_argument("fft: empty input");
  if (detail::is_power_of_two(data.size())) {
    detail::radix2_inplace(data, false);
    return data;
  }
  return detail::bluestein(data);
}

/// Inverse DFT, scaled by 1/N so that ifft(fft(x)) == x.
template <typename Scalar>
ComplexVector<Scalar> ifft(ComplexVector<Scalar> data) {
  const Eigen::Index n = data.size();
  data = data.conjugate();
  data = fft(std::move(data));
  return data.conjugate() / Scalar(n);
}

/// Forward DFT of a real sequence (full two-sided output).
template <typename Derived>
ComplexVector<typename Derived::Scalar> rfft(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return fft<Scalar>(x.template cast<std::complex<Scalar>>());
}

}  // namespace tugfall
