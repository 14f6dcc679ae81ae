#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "segadv/attack.hpp"
#include "segadv/image.hpp"
#include "segadv/random.hpp"
#include "segadv/segmenter.hpp"

namespace segadv {

/// |a & b| / |a | b|. Both empty -> 1 (nothing changed); exactly one empty -> 0.
inline double iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("iou: mask shapes " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " and " +
                     std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + " differ");
  }
  const auto inter = (a && b).count();
  const auto uni = (a || b).count();
  if (uni == 0) return 1.0;
  return double(inter) / double(uni);
}

struct EvalRecord {
  std::string image_id;
  PointPrompt test_point;
  double iou = 1.0;
  Index clean_pixels = 0;
  Index adv_pixels = 0;
  AttackConfig config;
};

/// Tolerance on the clean/adversarial budget check; x + delta - x can differ
/// from delta by rounding.
inline constexpr double kBudgetSlack = 1e-12;

/// Click-protocol measurement: one uniform test point in `region`, masks from
/// the clean and adversarial images at that same point, IoU between them.
template <typename Scalar>
EvalRecord evaluate_pair(const SegmenterAdapter<Scalar>& model, const Image<Scalar>& clean,
                         const Image<Scalar>& adv, const Region& region, RandomSource& rng,
                         const std::string& image_id = {}, std::optional<double> epsilon = {}) {
  clean.require_same_geometry(adv, "evaluate_pair");
  require_fits(region, clean.geometry());
  if (epsilon && double(max_abs_diff(clean, adv)) > *epsilon + kBudgetSlack) {
    throw DomainError("evaluate_pair[" + image_id + "]: adversarial image outside the epsilon-ball");
  }
  EvalRecord rec;
  rec.image_id = image_id;
  rec.test_point = rng.point_in(region);
  try {
    const BinaryMask clean_mask = binarize(predict_logits(model, rec.test_point, clean));
    const BinaryMask adv_mask = binarize(predict_logits(model, rec.test_point, adv));
    rec.clean_pixels = clean_mask.count();
    rec.adv_pixels = adv_mask.count();
    rec.iou = iou(adv_mask, clean_mask);
  } catch (const AdapterError& e) {
    throw AdapterError("image " + image_id + ": " + e.what());
  }
  if (epsilon) rec.config.epsilon = *epsilon;
  return rec;
}

/// Arithmetic mean of record IoUs, in [0,1].
inline double miou(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw DomainError("miou: no records");
  double sum = 0.0;
  for (const auto& r : records) sum += r.iou;
  return sum / double(records.size());
}

}  // namespace segadv
