#pragma once

#include <span>
#include <string>
#include <vector>

#include "segadv/image.hpp"

namespace segadv {

/// Promptable segmenter: (point prompt, image) -> per-pixel mask logits.
///
/// Implementations must be deterministic for fixed inputs. When `has_gradient()`
/// is true, `gradient` returns the vector-Jacobian product of `forward` with the
/// supplied logit cotangent, shaped like the input image.
template <typename Scalar>
class SegmenterAdapter {
 public:
  virtual ~SegmenterAdapter() = default;

  virtual std::string name() const = 0;
  virtual bool has_gradient() const { return false; }
  /// Whether concurrent `forward`/`gradient` calls on one instance are safe.
  virtual bool concurrent_safe() const { return false; }

  virtual LogitMap<Scalar> forward(const PointPrompt& prompt, const Image<Scalar>& image) const = 0;

  virtual Image<Scalar> gradient(const PointPrompt& /*prompt*/, const Image<Scalar>& /*image*/,
                                 const LogitMap<Scalar>& /*cotangent*/) const {
    throw CapabilityError(name() + ": adapter does not provide gradients");
  }

  virtual std::vector<LogitMap<Scalar>> forward_batch(std::span<const PointPrompt> prompts,
                                                      const Image<Scalar>& image) const {
    std::vector<LogitMap<Scalar>> out;
    out.reserve(prompts.size());
    for (const auto& p : prompts) out.push_back(forward(p, image));
    return out;
  }

  /// Sum over prompts of the per-prompt vector-Jacobian products.
  virtual Image<Scalar> gradient_batch(std::span<const PointPrompt> prompts, const Image<Scalar>& image,
                                       std::span<const LogitMap<Scalar>> cotangents) const {
    if (prompts.size() != cotangents.size()) {
      throw ShapeError(name() + ": gradient_batch needs one cotangent per prompt");
    }
    Image<Scalar> total = Image<Scalar>::zeros_like(image);
    for (std::size_t k = 0; k < prompts.size(); ++k) total += gradient(prompts[k], image, cotangents[k]);
    return total;
  }
};

namespace detail {

template <typename Scalar, typename F>
auto call_adapter(const SegmenterAdapter<Scalar>& model, const char* what, F&& f) {
  try {
    return f();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw AdapterError(model.name() + ": " + what + " failed: " + e.what());
  }
}

template <typename Scalar>
void check_logit_shape(const SegmenterAdapter<Scalar>& model, const LogitMap<Scalar>& y,
                       const Geometry& g) {
  if (y.rows() != g.height || y.cols() != g.width) {
    throw AdapterError(model.name() + ": returned " + std::to_string(y.rows()) + "x" +
                       std::to_string(y.cols()) + " logits for a " + g.str() + " image");
  }
}

}  // namespace detail

/// Validated forward pass. Rejects out-of-bounds prompts and wraps adapter failures.
template <typename Scalar>
LogitMap<Scalar> predict_logits(const SegmenterAdapter<Scalar>& model, const PointPrompt& prompt,
                                const Image<Scalar>& image) {
  require_inside(prompt, image.geometry());
  LogitMap<Scalar> y = detail::call_adapter(model, "forward", [&] { return model.forward(prompt, image); });
  detail::check_logit_shape(model, y, image.geometry());
  return y;
}

template <typename Scalar>
std::vector<LogitMap<Scalar>> predict_logits_batch(const SegmenterAdapter<Scalar>& model,
                                                   std::span<const PointPrompt> prompts,
                                                   const Image<Scalar>& image) {
  for (const auto& p : prompts) require_inside(p, image.geometry());
  auto ys = detail::call_adapter(model, "forward", [&] { return model.forward_batch(prompts, image); });
  if (ys.size() != prompts.size()) throw AdapterError(model.name() + ": forward_batch size mismatch");
  for (const auto& y : ys) detail::check_logit_shape(model, y, image.geometry());
  return ys;
}

/// Strict threshold at zero: a pixel is in the mask iff its logit is > 0.
template <typename Scalar>
BinaryMask binarize(const LogitMap<Scalar>& logits) {
  return logits.array() > Scalar(0);
}

}  // namespace segadv
