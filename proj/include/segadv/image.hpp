#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "segadv/error.hpp"

namespace segadv {

using Index = Eigen::Index;

template <typename Scalar>
using Plane = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using LogitMap = Plane<Scalar>;

using BinaryMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct Geometry {
  Index height = 0;
  Index width = 0;
  Index channels = 0;

  friend bool operator==(const Geometry&, const Geometry&) = default;

  std::string str() const {
    std::ostringstream os;
    os << height << "x" << width << "x" << channels;
    return os.str();
  }
};

/// H x W x C tensor stored as one Eigen plane per channel.
///
/// Used for pixel data in [0,1] as well as for image-shaped perturbations and
/// gradients, which is why the unit-range invariant is checked explicitly
/// (`in_unit_range`) rather than enforced on construction.
template <typename Scalar>
class Image {
 public:
  using PlaneType = Plane<Scalar>;

  Image() = default;

  Image(Index height, Index width, Index channels, Scalar fill = Scalar(0)) {
    if (height < 1 || width < 1 || channels < 1) {
      throw ShapeError("image dimensions must be positive, got " +
                       Geometry{height, width, channels}.str());
    }
    planes_.assign(static_cast<std::size_t>(channels), PlaneType::Constant(height, width, fill));
  }

  explicit Image(std::vector<PlaneType> planes) : planes_(std::move(planes)) {
    if (planes_.empty() || planes_.front().size() == 0) {
      throw ShapeError("image needs at least one non-empty channel");
    }
    for (const auto& p : planes_) {
      if (p.rows() != planes_.front().rows() || p.cols() != planes_.front().cols()) {
        throw ShapeError("image channels disagree in shape");
      }
    }
  }

  static Image zeros(const Geometry& g) { return Image(g.height, g.width, g.channels); }
  static Image zeros_like(const Image& other) { return zeros(other.geometry()); }

  Index height() const { return planes_.empty() ? 0 : planes_.front().rows(); }
  Index width() const { return planes_.empty() ? 0 : planes_.front().cols(); }
  Index channels() const { return static_cast<Index>(planes_.size()); }
  Geometry geometry() const { return {height(), width(), channels()}; }
  bool empty() const { return planes_.empty(); }

  PlaneType& channel(Index c) { return planes_[static_cast<std::size_t>(c)]; }
  const PlaneType& channel(Index c) const { return planes_[static_cast<std::size_t>(c)]; }
  const std::vector<PlaneType>& planes() const { return planes_; }

  Scalar& operator()(Index row, Index col, Index c) { return channel(c)(row, col); }
  Scalar operator()(Index row, Index col, Index c) const { return channel(c)(row, col); }

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> pixel(Index row, Index col) const {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(channels());
    for (Index c = 0; c < channels(); ++c) v(c) = channel(c)(row, col);
    return v;
  }

  template <typename F>
  Image& apply(F&& f) {
    for (auto& p : planes_) p = p.unaryExpr(f);
    return *this;
  }

  Image& operator+=(const Image& o) {
    require_same_geometry(o, "+=");
    for (std::size_t c = 0; c < planes_.size(); ++c) planes_[c] += o.planes_[c];
    return *this;
  }
  Image& operator-=(const Image& o) {
    require_same_geometry(o, "-=");
    for (std::size_t c = 0; c < planes_.size(); ++c) planes_[c] -= o.planes_[c];
    return *this;
  }
  Image& operator*=(Scalar s) {
    for (auto& p : planes_) p *= s;
    return *this;
  }
  Image& operator/=(Scalar s) {
    for (auto& p : planes_) p /= s;
    return *this;
  }

  friend Image operator+(Image a, const Image& b) { return a += b; }
  friend Image operator-(Image a, const Image& b) { return a -= b; }
  friend Image operator*(Image a, Scalar s) { return a *= s; }
  friend Image operator*(Scalar s, Image a) { return a *= s; }

  friend bool operator==(const Image& a, const Image& b) {
    if (a.geometry() != b.geometry()) return false;
    for (std::size_t c = 0; c < a.planes_.size(); ++c) {
      if ((a.planes_[c].array() != b.planes_[c].array()).any()) return false;
    }
    return true;
  }

  Scalar max_abs() const {
    Scalar m(0);
    for (const auto& p : planes_) m = std::max(m, p.cwiseAbs().maxCoeff());
    return m;
  }

  Scalar squared_norm() const {
    Scalar s(0);
    for (const auto& p : planes_) s += p.squaredNorm();
    return s;
  }

  bool all_finite() const {
    return std::all_of(planes_.begin(), planes_.end(),
                       [](const PlaneType& p) { return p.allFinite(); });
  }

  bool in_unit_range() const {
    return std::all_of(planes_.begin(), planes_.end(), [](const PlaneType& p) {
      return (p.array() >= Scalar(0)).all() && (p.array() <= Scalar(1)).all();
    });
  }

  void require_same_geometry(const Image& o, const char* what) const {
    if (geometry() != o.geometry()) {
      throw ShapeError(std::string(what) + ": geometry " + geometry().str() + " vs " +
                       o.geometry().str());
    }
  }

 private:
  std::vector<PlaneType> planes_;
};

template <typename Scalar>
Image<Scalar> clamp(Image<Scalar> x, Scalar lo, Scalar hi) {
  return x.apply([lo, hi](Scalar v) { return std::clamp(v, lo, hi); });
}

/// max |a - b| over all entries.
template <typename Scalar>
Scalar max_abs_diff(const Image<Scalar>& a, const Image<Scalar>& b) {
  a.require_same_geometry(b, "max_abs_diff");
  Scalar m(0);
  for (Index c = 0; c < a.channels(); ++c) {
    m = std::max(m, (a.channel(c) - b.channel(c)).cwiseAbs().maxCoeff());
  }
  return m;
}

struct PointPrompt {
  Index row = 0;
  Index col = 0;

  friend bool operator==(const PointPrompt&, const PointPrompt&) = default;
};

/// Axis-aligned box, used as the attacker-chosen target zone.
struct Region {
  Index top = 0;
  Index left = 0;
  Index height = 0;
  Index width = 0;

  friend bool operator==(const Region&, const Region&) = default;

  bool contains(const PointPrompt& p) const {
    return p.row >= top && p.row < top + height && p.col >= left && p.col < left + width;
  }

  bool fits(const Geometry& g) const {
    return height >= 1 && width >= 1 && top >= 0 && left >= 0 && top + height <= g.height &&
           left + width <= g.width;
  }

  PointPrompt center() const { return {top + height / 2, left + width / 2}; }

  std::string str() const {
    std::ostringstream os;
    os << "[top=" << top << " left=" << left << " h=" << height << " w=" << width << "]";
    return os.str();
  }
};

inline void require_inside(const PointPrompt& p, const Geometry& g) {
  if (p.row < 0 || p.col < 0 || p.row >= g.height || p.col >= g.width) {
    std::ostringstream os;
    os << "prompt (" << p.row << "," << p.col << ") outside image " << g.str();
    throw DomainError(os.str());
  }
}

inline void require_fits(const Region& r, const Geometry& g) {
  if (!r.fits(g)) throw DomainError("region " + r.str() + " not inside image " + g.str());
}

/// Centered box with one-third side lengths (at least one pixel each).
inline Region centered_third(const Geometry& g) {
  const Index h = std::max<Index>(1, g.height / 3);
  const Index w = std::max<Index>(1, g.width / 3);
  return {(g.height - h) / 2, (g.width - w) / 2, h, w};
}

}  // namespace segadv
