#pragma once

// Independent reference computations for the test suites. Nothing here calls
// the library routine it is used to check.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "segadv/image.hpp"
#include "segadv/random.hpp"

namespace oracle {

using segadv::Image;
using segadv::Index;
using segadv::Plane;

inline Image<double> random_image(segadv::RandomSource& rng, Index h, Index w, Index c) {
  Image<double> x(h, w, c);
  for (Index ch = 0; ch < c; ++ch) {
    for (Index r = 0; r < h; ++r) {
      for (Index col = 0; col < w; ++col) x(r, col, ch) = rng.uniform(0.0, 1.0);
    }
  }
  return x;
}

/// X(k,l) = a(k) a(l) sum_ij x(i,j) cos(pi (2i+1) k / 2H) cos(pi (2j+1) l / 2W)
inline Plane<double> naive_dct2(const Plane<double>& x) {
  const Index h = x.rows(), w = x.cols();
  auto a = [](Index k, Index n) { return k == 0 ? std::sqrt(1.0 / double(n)) : std::sqrt(2.0 / double(n)); };
  Plane<double> out(h, w);
  for (Index k = 0; k < h; ++k) {
    for (Index l = 0; l < w; ++l) {
      double s = 0.0;
      for (Index i = 0; i < h; ++i) {
        for (Index j = 0; j < w; ++j) {
          s += x(i, j) * std::cos(std::numbers::pi * double(2 * i + 1) * double(k) / double(2 * h)) *
               std::cos(std::numbers::pi * double(2 * j + 1) * double(l) / double(2 * w));
        }
      }
      out(k, l) = a(k, h) * a(l, w) * s;
    }
  }
  return out;
}

/// x(i,j) = sum_kl a(k) a(l) X(k,l) cos(...) cos(...)
inline Plane<double> naive_idct2(const Plane<double>& X) {
  const Index h = X.rows(), w = X.cols();
  auto a = [](Index k, Index n) { return k == 0 ? std::sqrt(1.0 / double(n)) : std::sqrt(2.0 / double(n)); };
  Plane<double> out(h, w);
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j) {
      double s = 0.0;
      for (Index k = 0; k < h; ++k) {
        for (Index l = 0; l < w; ++l) {
          s += a(k, h) * a(l, w) * X(k, l) * std::cos(std::numbers::pi * double(2 * i + 1) * double(k) / double(2 * h)) *
               std::cos(std::numbers::pi * double(2 * j + 1) * double(l) / double(2 * w));
        }
      }
      out(i, j) = s;
    }
  }
  return out;
}

/// Pixel-by-pixel IoU with the empty-mask conventions spelled out.
inline double brute_iou(const segadv::BinaryMask& a, const segadv::BinaryMask& b) {
  long inter = 0, uni = 0;
  for (Index r = 0; r < a.rows(); ++r) {
    for (Index c = 0; c < a.cols(); ++c) {
      if (a(r, c) && b(r, c)) ++inter;
      if (a(r, c) || b(r, c)) ++uni;
    }
  }
  if (uni == 0) return 1.0;
  if (inter == 0) return 0.0;
  return double(inter) / double(uni);
}

inline segadv::BinaryMask random_mask(segadv::RandomSource& rng, Index h, Index w, double density) {
  segadv::BinaryMask m(h, w);
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) m(r, c) = rng.uniform(0.0, 1.0) < density;
  }
  return m;
}

/// Scalar loss over pixels, differentiated numerically at one entry.
inline double central_difference(const std::function<double(const Image<double>&)>& f, Image<double> x, Index r,
                                 Index c, Index ch, double h) {
  const double v = x(r, c, ch);
  x(r, c, ch) = v + h;
  const double up = f(x);
  x(r, c, ch) = v - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

inline double clipped_loss(const Plane<double>& y, double neg_th) {
  double s = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    const double v = std::max(y.data()[i], neg_th) - neg_th;
    s += v * v;
  }
  return s;
}

}  // namespace oracle
