#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "segadv/segmenter.hpp"

namespace segadv {

/// Parameters of the analytic point-prompt segmenter.
///
///   logits(i,j) = gain * (threshold - || f(i,j) - x(p) ||^2)
///   f = x + detail_gain * (k (*) x)
///
/// k is a zero-mean, unit-L1, Hann-windowed cosine grating of side
/// `detail_size` and period `detail_period` pixels, applied per channel with
/// edge-clamped borders. On piecewise-smooth images the detail response is
/// near zero away from edges and the model reduces to a color-distance
/// threshold around the prompt color. With detail_gain = 0 it is exactly that.
struct ToyParams {
  double gain = 25.0;
  double threshold = 0.05;
  double detail_gain = 12.0;
  Index detail_size = 9;
  double detail_period = 3.0;

  static ToyParams color_only(double gain = 25.0, double threshold = 0.05) {
    return {gain, threshold, 0.0, 1, 2.0};
  }

  void validate() const {
    if (!(gain > 0.0) || !(threshold > 0.0)) throw DomainError("toy segmenter: gain and threshold must be > 0");
    if (detail_gain < 0.0) throw DomainError("toy segmenter: detail_gain must be >= 0");
    if (detail_size < 1 || detail_size % 2 == 0) throw DomainError("toy segmenter: detail_size must be odd");
    if (!(detail_period > 0.0)) throw DomainError("toy segmenter: detail_period must be > 0");
  }
};

template <typename Scalar>
Plane<Scalar> toy_detail_kernel(const ToyParams& params) {
  const Index n = params.detail_size;
  const Index r = n / 2;
  Plane<Scalar> k(n, n);
  auto hann = [n](Index i) {
    return std::sin(std::numbers::pi * double(i + 1) / double(n + 1)) *
           std::sin(std::numbers::pi * double(i + 1) / double(n + 1));
  };
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) {
      k(a, b) = Scalar(std::cos(2.0 * std::numbers::pi * double(b - r) / params.detail_period) *
                       hann(a) * hann(b));
    }
  }
  k.array() -= k.mean();
  const Scalar l1 = k.cwiseAbs().sum();
  if (l1 > Scalar(0)) k /= l1;
  return k;
}

namespace detail {

/// out(i,j) = sum_ab k(a,b) * p(clamp(i+a-r), clamp(j+b-r))
template <typename Scalar>
Plane<Scalar> correlate_clamped(const Plane<Scalar>& p, const Plane<Scalar>& k) {
  const Index h = p.rows(), w = p.cols(), r = k.rows() / 2;
  Plane<Scalar> out = Plane<Scalar>::Zero(h, w);
  for (Index b = 0; b < k.cols(); ++b) {
    for (Index a = 0; a < k.rows(); ++a) {
      const Scalar kv = k(a, b);
      if (kv == Scalar(0)) continue;
      for (Index j = 0; j < w; ++j) {
        const Index jj = std::clamp<Index>(j + b - r, 0, w - 1);
        for (Index i = 0; i < h; ++i) {
          out(i, j) += kv * p(std::clamp<Index>(i + a - r, 0, h - 1), jj);
        }
      }
    }
  }
  return out;
}

/// Adjoint of correlate_clamped.
template <typename Scalar>
Plane<Scalar> correlate_clamped_adjoint(const Plane<Scalar>& v, const Plane<Scalar>& k) {
  const Index h = v.rows(), w = v.cols(), r = k.rows() / 2;
  Plane<Scalar> out = Plane<Scalar>::Zero(h, w);
  for (Index b = 0; b < k.cols(); ++b) {
    for (Index a = 0; a < k.rows(); ++a) {
      const Scalar kv = k(a, b);
      if (kv == Scalar(0)) continue;
      for (Index j = 0; j < w; ++j) {
        const Index jj = std::clamp<Index>(j + b - r, 0, w - 1);
        for (Index i = 0; i < h; ++i) {
          out(std::clamp<Index>(i + a - r, 0, h - 1), jj) += kv * v(i, j);
        }
      }
    }
  }
  return out;
}

}  // namespace detail

/// Reference differentiable segmenter used for desk-scale experiments.
template <typename Scalar>
class ToySegmenter final : public SegmenterAdapter<Scalar> {
 public:
  explicit ToySegmenter(ToyParams params = {}, std::string name = "toy")
      : params_(params), name_(std::move(name)) {
    params_.validate();
    if (params_.detail_gain > 0.0) kernel_ = toy_detail_kernel<Scalar>(params_);
  }

  std::string name() const override { return name_; }
  bool has_gradient() const override { return true; }
  bool concurrent_safe() const override { return true; }
  const ToyParams& params() const { return params_; }

  Image<Scalar> features(const Image<Scalar>& x) const {
    if (params_.detail_gain == 0.0) return x;
    Image<Scalar> f = x;
    for (Index c = 0; c < x.channels(); ++c) {
      f.channel(c) += Scalar(params_.detail_gain) * detail::correlate_clamped(x.channel(c), kernel_);
    }
    return f;
  }

  LogitMap<Scalar> forward(const PointPrompt& p, const Image<Scalar>& x) const override {
    require_inside(p, x.geometry());
    return logits_from_features(features(x), x, p);
  }

  std::vector<LogitMap<Scalar>> forward_batch(std::span<const PointPrompt> prompts,
                                              const Image<Scalar>& x) const override {
    const Image<Scalar> f = features(x);
    std::vector<LogitMap<Scalar>> out;
    out.reserve(prompts.size());
    for (const auto& p : prompts) {
      require_inside(p, x.geometry());
      out.push_back(logits_from_features(f, x, p));
    }
    return out;
  }

  Image<Scalar> gradient(const PointPrompt& p, const Image<Scalar>& x,
                         const LogitMap<Scalar>& cotangent) const override {
    const PointPrompt one[] = {p};
    const LogitMap<Scalar> cot[] = {cotangent};
    return gradient_batch(one, x, cot);
  }

  Image<Scalar> gradient_batch(std::span<const PointPrompt> prompts, const Image<Scalar>& x,
                               std::span<const LogitMap<Scalar>> cotangents) const override {
    if (prompts.size() != cotangents.size()) throw ShapeError("toy gradient: prompt/cotangent count mismatch");
    const Image<Scalar> f = features(x);
    const Scalar g = Scalar(params_.gain);
    Image<Scalar> grad_f = Image<Scalar>::zeros_like(x);
    Image<Scalar> grad_x = Image<Scalar>::zeros_like(x);
    for (std::size_t k = 0; k < prompts.size(); ++k) {
      const auto& p = prompts[k];
      const auto& cot = cotangents[k];
      require_inside(p, x.geometry());
      if (cot.rows() != x.height() || cot.cols() != x.width()) throw ShapeError("toy gradient: cotangent shape");
      for (Index c = 0; c < x.channels(); ++c) {
        // d logit / d f = -2 g (f - x_p);  d logit / d x_p = +2 g (f - x_p)
        const Plane<Scalar> weighted =
            (Scalar(-2) * g) * cot.cwiseProduct((f.channel(c).array() - x(p.row, p.col, c)).matrix());
        grad_f.channel(c) += weighted;
        grad_x(p.row, p.col, c) -= weighted.sum();
      }
    }
    for (Index c = 0; c < x.channels(); ++c) {
      grad_x.channel(c) += grad_f.channel(c);
      if (params_.detail_gain > 0.0) {
        grad_x.channel(c) +=
            Scalar(params_.detail_gain) * detail::correlate_clamped_adjoint(grad_f.channel(c), kernel_);
      }
    }
    return grad_x;
  }

 private:
  LogitMap<Scalar> logits_from_features(const Image<Scalar>& f, const Image<Scalar>& x,
                                        const PointPrompt& p) const {
    LogitMap<Scalar> dist2 = LogitMap<Scalar>::Zero(x.height(), x.width());
    for (Index c = 0; c < x.channels(); ++c) {
      dist2.array() += (f.channel(c).array() - x(p.row, p.col, c)).square();
    }
    return (Scalar(params_.gain) * (Scalar(params_.threshold) - dist2.array())).matrix();
  }

  ToyParams params_;
  std::string name_;
  Plane<Scalar> kernel_;
};

/// Functional form of the toy segmenter.
template <typename Scalar>
LogitMap<Scalar> toy_segment(const Image<Scalar>& x, const PointPrompt& p, const ToyParams& params = {}) {
  return ToySegmenter<Scalar>(params).forward(p, x);
}

}  // namespace segadv
