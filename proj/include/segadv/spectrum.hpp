#pragma once

#include <cmath>
#include <map>
#include <numbers>

#include "segadv/image.hpp"
#include "segadv/random.hpp"

namespace segadv {

/// Per-channel 2D DCT-II coefficients of an image (orthonormal scaling).
template <typename Scalar>
struct Spectrum {
  Image<Scalar> coefficients;

  Geometry geometry() const { return coefficients.geometry(); }
};

struct SpectrumParams {
  double rho = 0.1;    ///< mask entries drawn from U(1 - rho, 1 + rho)
  double sigma = 0.0;  ///< std-dev of the additive pixel noise

  void validate() const {
    if (!(rho >= 0.0) || !std::isfinite(rho)) throw DomainError("spectrum rho must be >= 0");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("spectrum sigma must be >= 0");
  }
  bool is_identity() const { return rho == 0.0 && sigma == 0.0; }
};

/// Orthonormal DCT-II basis, row k = frequency k.
template <typename Scalar>
Plane<Scalar> dct_matrix(Index n) {
  Plane<Scalar> c(n, n);
  const Scalar s0 = std::sqrt(Scalar(1) / Scalar(n));
  const Scalar sk = std::sqrt(Scalar(2) / Scalar(n));
  for (Index k = 0; k < n; ++k) {
    for (Index i = 0; i < n; ++i) {
      c(k, i) = (k == 0 ? s0 : sk) *
                std::cos(std::numbers::pi_v<Scalar> * Scalar(2 * i + 1) * Scalar(k) / Scalar(2 * n));
    }
  }
  return c;
}

namespace detail {

template <typename Scalar>
const Plane<Scalar>& cached_dct_matrix(Index n) {
  thread_local std::map<Index, Plane<Scalar>> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, dct_matrix<Scalar>(n)).first;
  return it->second;
}

}  // namespace detail

template <typename Scalar>
Spectrum<Scalar> dct2(const Image<Scalar>& image) {
  if (image.empty()) throw ShapeError("dct2: empty image");
  if (!image.all_finite()) throw DomainError("dct2: image contains non-finite values");
  const Plane<Scalar>& rows = detail::cached_dct_matrix<Scalar>(image.height());
  const Plane<Scalar>& cols = detail::cached_dct_matrix<Scalar>(image.width());
  std::vector<Plane<Scalar>> out;
  out.reserve(static_cast<std::size_t>(image.channels()));
  for (const auto& p : image.planes()) out.emplace_back(rows * p * cols.transpose());
  return {Image<Scalar>(std::move(out))};
}

template <typename Scalar>
Image<Scalar> idct2(const Spectrum<Scalar>& spectrum) {
  const auto& coef = spectrum.coefficients;
  if (coef.empty()) throw ShapeError("idct2: empty spectrum");
  if (!coef.all_finite()) throw DomainError("idct2: spectrum contains non-finite values");
  const Plane<Scalar>& rows = detail::cached_dct_matrix<Scalar>(coef.height());
  const Plane<Scalar>& cols = detail::cached_dct_matrix<Scalar>(coef.width());
  std::vector<Plane<Scalar>> out;
  out.reserve(static_cast<std::size_t>(coef.channels()));
  for (const auto& p : coef.planes()) out.emplace_back(rows.transpose() * p * cols);
  return Image<Scalar>(std::move(out));
}

/// Inverse transform that also checks the spectrum against the expected image geometry.
template <typename Scalar>
Image<Scalar> idct2(const Spectrum<Scalar>& spectrum, const Geometry& expected) {
  if (spectrum.geometry() != expected) {
    throw ShapeError("idct2: spectrum " + spectrum.geometry().str() + " does not match image " +
                     expected.str());
  }
  return idct2(spectrum);
}

/// iDCT(DCT(x + noise) * mask) with noise ~ N(0, sigma^2) and mask ~ U(1-rho, 1+rho),
/// both drawn fresh from `rng` on every call (noise first, then mask, channel by channel).
/// Identity parameters return `x` unchanged and consume no draws.
template <typename Scalar>
Image<Scalar> spectrum_transform(const Image<Scalar>& x, const SpectrumParams& params,
                                 RandomSource& rng) {
  params.validate();
  if (!x.all_finite()) throw DomainError("spectrum_transform: image contains non-finite values");
  if (params.is_identity()) return x;

  Image<Scalar> noisy = x;
  if (params.sigma > 0.0) {
    for (Index c = 0; c < noisy.channels(); ++c) {
      auto& p = noisy.channel(c);
      for (Index i = 0; i < p.size(); ++i) p.data()[i] += static_cast<Scalar>(rng.normal(0.0, params.sigma));
    }
  }
  Spectrum<Scalar> spec = dct2(noisy);
  if (params.rho > 0.0) {
    for (Index c = 0; c < spec.coefficients.channels(); ++c) {
      auto& p = spec.coefficients.channel(c);
      for (Index i = 0; i < p.size(); ++i) {
        p.data()[i] *= static_cast<Scalar>(rng.uniform(1.0 - params.rho, 1.0 + params.rho));
      }
    }
  }
  return idct2(spec);
}

}  // namespace segadv
