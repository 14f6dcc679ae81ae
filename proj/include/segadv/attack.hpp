#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "segadv/image.hpp"
#include "segadv/random.hpp"
#include "segadv/segmenter.hpp"
#include "segadv/spectrum.hpp"

namespace segadv {

struct AttackConfig {
  double epsilon = 8.0 / 255.0;  ///< L-inf budget, fraction of the [0,1] range
  double alpha = 2.0 / 255.0;    ///< step size
  int steps = 40;
  int samples = 20;              ///< spectrum-transformed draws per T-RA step
  double rho = 0.1;
  std::optional<double> sigma;   ///< spectrum noise std-dev; unset means epsilon
  Index lambda = 4;              ///< grid spacing in pixels
  double neg_th = -10.0;
  std::uint64_t seed = 0;

  SpectrumParams spectrum() const { return {rho, sigma.value_or(epsilon)}; }

  void validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw DomainError("epsilon must be >= 0");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be > 0");
    if (steps < 1) throw DomainError("steps must be >= 1");
    if (samples < 1) throw DomainError("samples must be >= 1");
    if (lambda < 1) throw DomainError("lambda must be >= 1");
    if (!(neg_th < 0.0)) throw DomainError("neg_th must be < 0");
    spectrum().validate();
  }
};

/// Attack prompts laid out on an m x n grid (m columns, n rows), row-major.
struct PointSet {
  std::vector<PointPrompt> points;
  Index cols = 0;  ///< m
  Index rows = 0;  ///< n

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Cell-center grid with m = ceil(width / lambda), n = ceil(height / lambda).
inline PointSet sample_grid_points(const Region& region, Index lambda) {
  if (lambda < 1) throw DomainError("sample_grid_points: lambda must be >= 1");
  if (region.height < 1 || region.width < 1) throw DomainError("sample_grid_points: empty region");
  PointSet set;
  set.cols = (region.width + lambda - 1) / lambda;
  set.rows = (region.height + lambda - 1) / lambda;
  set.points.reserve(static_cast<std::size_t>(set.cols * set.rows));
  for (Index i = 0; i < set.rows; ++i) {
    const Index r = region.top + static_cast<Index>(std::floor((double(i) + 0.5) * double(region.height) / double(set.rows)));
    for (Index j = 0; j < set.cols; ++j) {
      const Index c = region.left + static_cast<Index>(std::floor((double(j) + 0.5) * double(region.width) / double(set.cols)));
      set.points.push_back({r, c});
    }
  }
  return set;
}

template <typename Scalar>
struct LossAndGradient {
  Scalar loss = 0;
  Image<Scalar> gradient;
};

namespace detail {

template <typename Scalar>
Scalar clipped_loss(const LogitMap<Scalar>& y, Scalar neg_th) {
  return (y.array().max(neg_th) - neg_th).square().sum();
}

/// dL/dy = 2 (max(y, neg_th) - neg_th); zero wherever y <= neg_th.
template <typename Scalar>
LogitMap<Scalar> clipped_loss_cotangent(const LogitMap<Scalar>& y, Scalar neg_th, Scalar scale) {
  return ((y.array().max(neg_th) - neg_th) * (Scalar(2) * scale)).matrix();
}

template <typename Scalar>
void require_gradient(const SegmenterAdapter<Scalar>& model) {
  if (!model.has_gradient()) throw CapabilityError(model.name() + ": attack needs an adapter with gradients");
}

}  // namespace detail

/// || max(y, neg_th) - neg_th ||^2 for y = model(p, x).
template <typename Scalar>
Scalar point_loss(const SegmenterAdapter<Scalar>& model, const Image<Scalar>& x, const PointPrompt& p,
                  Scalar neg_th) {
  return detail::clipped_loss(predict_logits(model, p, x), neg_th);
}

template <typename Scalar>
LossAndGradient<Scalar> point_loss_and_gradient(const SegmenterAdapter<Scalar>& model, const Image<Scalar>& x,
                                                const PointPrompt& p, Scalar neg_th) {
  detail::require_gradient(model);
  const LogitMap<Scalar> y = predict_logits(model, p, x);
  const LogitMap<Scalar> cot = detail::clipped_loss_cotangent(y, neg_th, Scalar(1));
  Image<Scalar> g = detail::call_adapter(model, "gradient", [&] { return model.gradient(p, x, cot); });
  return {detail::clipped_loss(y, neg_th), std::move(g)};
}

/// Mean of point_loss over the point set.
template <typename Scalar>
Scalar region_loss(const SegmenterAdapter<Scalar>& model, const Image<Scalar>& x, const PointSet& points,
                   Scalar neg_th) {
  if (points.empty()) throw DomainError("region_loss: empty point set");
  const auto ys = predict_logits_batch<Scalar>(model, points.points, x);
  Scalar total(0);
  for (const auto& y : ys) total += detail::clipped_loss(y, neg_th);
  return total / Scalar(points.size());
}

template <typename Scalar>
LossAndGradient<Scalar> region_loss_and_gradient(const SegmenterAdapter<Scalar>& model, const Image<Scalar>& x,
                                                 const PointSet& points, Scalar neg_th) {
  if (points.empty()) throw DomainError("region_loss: empty point set");
  detail::require_gradient(model);
  const auto ys = predict_logits_batch<Scalar>(model, points.points, x);
  const Scalar inv_n = Scalar(1) / Scalar(points.size());
  Scalar total(0);
  std::vector<LogitMap<Scalar>> cots;
  cots.reserve(ys.size());
  for (const auto& y : ys) {
    total += detail::clipped_loss(y, neg_th);
    cots.push_back(detail::clipped_loss_cotangent(y, neg_th, inv_n));
  }
  Image<Scalar> g = detail::call_adapter(model, "gradient", [&] {
    return model.gradient_batch(points.points, x, std::span<const LogitMap<Scalar>>(cots));
  });
  x.require_same_geometry(g, "adapter gradient");
  return {total * inv_n, std::move(g)};
}

/// Clamps delta into [-eps, eps], then shrinks it so that x + delta stays in [0,1].
template <typename Scalar>
Image<Scalar> pgd_project(const Image<Scalar>& x, Image<Scalar> delta, Scalar epsilon) {
  x.require_same_geometry(delta, "pgd_project");
  for (Index c = 0; c < x.channels(); ++c) {
    auto d = delta.channel(c).array();
    const auto xc = x.channel(c).array();
    d = d.max(-epsilon).min(epsilon);
    // 1 - x is rounded, but x + fl(1 - x) still rounds to at most 1 for x in [0,1].
    d = d.max(-xc).min(Scalar(1) - xc);
  }
  return delta;
}

/// True iff ||delta||_inf <= eps and x + delta lies in [0,1] (exact comparison).
template <typename Scalar>
bool within_budget(const Image<Scalar>& x, const Image<Scalar>& delta, Scalar epsilon) {
  if (delta.max_abs() > epsilon) return false;
  return (x + delta).in_unit_range();
}

template <typename Scalar>
Scalar sign_of(Scalar v) {
  return v > Scalar(0) ? Scalar(1) : (v < Scalar(0) ? Scalar(-1) : Scalar(0));
}

/// Called after every projection with the 1-based step, current delta, and the
/// loss measured before the update.
template <typename Scalar>
using StepObserver = std::function<void(int step, const Image<Scalar>& delta, Scalar loss)>;

namespace detail {

template <typename Scalar>
void check_attack_inputs(const SegmenterAdapter<Scalar>& model, const Image<Scalar>& x, const AttackConfig& cfg) {
  cfg.validate();
  require_gradient(model);
  if (!x.all_finite() || !x.in_unit_range()) throw DomainError("attack input must be finite and in [0,1]");
}

template <typename Scalar>
void assert_budget(const Image<Scalar>& x, const Image<Scalar>& delta, Scalar epsilon) {
  if (!within_budget(x, delta, epsilon)) throw std::logic_error("perturbation left the epsilon-ball");
}

}  // namespace detail

/// Sign-gradient descent on the mean clipped loss over `points`.
template <typename Scalar>
Image<Scalar> pgd_descent(const SegmenterAdapter<Scalar>& model, const Image<Scalar>& x, const PointSet& points,
                          const AttackConfig& cfg, const std::type_identity_t<StepObserver<Scalar>>& observer = {}) {
  detail::check_attack_inputs(model, x, cfg);
  if (points.empty()) throw DomainError("attack: empty point set");
  for (const auto& p : points.points) require_inside(p, x.geometry());
  const Scalar eps = Scalar(cfg.epsilon), alpha = Scalar(cfg.alpha), neg_th = Scalar(cfg.neg_th);

  Image<Scalar> delta = Image<Scalar>::zeros_like(x);
  for (int step = 1; step <= cfg.steps; ++step) {
    auto [loss, grad] = region_loss_and_gradient(model, x + delta, points, neg_th);
    for (Index c = 0; c < x.channels(); ++c) {
      delta.channel(c) -= alpha * grad.channel(c).unaryExpr([](Scalar v) { return sign_of(v); });
    }
    delta = pgd_project(x, std::move(delta), eps);
    detail::assert_budget(x, delta, eps);
    if (observer) observer(step, delta, loss);
  }
  return x + delta;
}

/// Sampling-based region attack: PGD over the cell-center grid of `region`.
template <typename Scalar>
Image<Scalar> s_ra(const SegmenterAdapter<Scalar>& model, const Image<Scalar>& x, const Region& region,
                   const AttackConfig& cfg, const std::type_identity_t<StepObserver<Scalar>>& observer = {}) {
  require_fits(region, x.geometry());
  return pgd_descent(model, x, sample_grid_points(region, cfg.lambda), cfg, observer);
}

/// Point-level baseline: PGD against the single prompt at the region center.
template <typename Scalar>
Image<Scalar> point_attack(const SegmenterAdapter<Scalar>& model, const Image<Scalar>& x, const Region& region,
                           const AttackConfig& cfg, const std::type_identity_t<StepObserver<Scalar>>& observer = {}) {
  require_fits(region, x.geometry());
  PointSet center{{region.center()}, 1, 1};
  return pgd_descent(model, x, center, cfg, observer);
}

/// Transferable region attack. Each step averages `samples` sign-gradient steps,
/// each taken at a fresh spectrum transform of the clean image plus the current
/// delta; the gradient is taken w.r.t. that transformed input and applied to delta.
template <typename Scalar>
Image<Scalar> t_ra(const SegmenterAdapter<Scalar>& model, const Image<Scalar>& x, const Region& region,
                   const AttackConfig& cfg, RandomSource& rng, const std::type_identity_t<StepObserver<Scalar>>& observer = {}) {
  detail::check_attack_inputs(model, x, cfg);
  require_fits(region, x.geometry());
  const PointSet points = sample_grid_points(region, cfg.lambda);
  const SpectrumParams spec = cfg.spectrum();
  const Scalar eps = Scalar(cfg.epsilon), alpha = Scalar(cfg.alpha), neg_th = Scalar(cfg.neg_th);
  const Scalar m = Scalar(cfg.samples);

  Image<Scalar> delta = Image<Scalar>::zeros_like(x);
  for (int step = 1; step <= cfg.steps; ++step) {
    Image<Scalar> delta_sum = Image<Scalar>::zeros_like(x);
    Scalar loss_sum(0);
    for (int i = 0; i < cfg.samples; ++i) {
      Image<Scalar> x1 = clamp(spectrum_transform(x, spec, rng) + delta, Scalar(0), Scalar(1));
      auto [loss, grad] = region_loss_and_gradient(model, x1, points, neg_th);
      loss_sum += loss;
      for (Index c = 0; c < x.channels(); ++c) {
        delta_sum.channel(c) += -alpha * grad.channel(c).unaryExpr([](Scalar v) { return sign_of(v); });
      }
    }
    for (Index c = 0; c < x.channels(); ++c) delta.channel(c) += delta_sum.channel(c) / m;
    delta = pgd_project(x, std::move(delta), eps);
    detail::assert_budget(x, delta, eps);
    if (observer) observer(step, delta, loss_sum / m);
  }
  return x + delta;
}

}  // namespace segadv
