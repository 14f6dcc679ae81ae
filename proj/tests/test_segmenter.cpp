#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "oracles.hpp"
#include "segadv/registry.hpp"
#include "segadv/segmenter.hpp"
#include "segadv/toy_segmenter.hpp"

using namespace segadv;

namespace {

Image<double> disk_image(Index size, const Eigen::Vector3d& bg, const Eigen::Vector3d& fg, double cy, double cx,
                         double radius) {
  Image<double> x(size, size, 3);
  for (Index r = 0; r < size; ++r) {
    for (Index c = 0; c < size; ++c) {
      const bool in = (double(r) - cy) * (double(r) - cy) + (double(c) - cx) * (double(c) - cx) < radius * radius;
      for (Index ch = 0; ch < 3; ++ch) x(r, c, ch) = in ? fg(ch) : bg(ch);
    }
  }
  return x;
}

/// ||x(i,j) - x(p)||^2 < tau, evaluated pixel by pixel.
BinaryMask color_threshold_oracle(const Image<double>& x, const PointPrompt& p, double tau) {
  BinaryMask m(x.height(), x.width());
  for (Index r = 0; r < x.height(); ++r) {
    for (Index c = 0; c < x.width(); ++c) {
      double d = 0.0;
      for (Index ch = 0; ch < x.channels(); ++ch) d += (x(r, c, ch) - x(p.row, p.col, ch)) * (x(r, c, ch) - x(p.row, p.col, ch));
      m(r, c) = d < tau;
    }
  }
  return m;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

class ThrowingAdapter final : public SegmenterAdapter<double> {
 public:
  std::string name() const override { return "broken"; }
  LogitMap<double> forward(const PointPrompt&, const Image<double>&) const override {
    throw std::runtime_error("backend offline");
  }
};

class WrongShapeAdapter final : public SegmenterAdapter<double> {
 public:
  std::string name() const override { return "wrong_shape"; }
  LogitMap<double> forward(const PointPrompt&, const Image<double>& x) const override {
    return LogitMap<double>::Zero(x.height() + 1, x.width());
  }
};

}  // namespace

TEST(Binarize, ThresholdSemantics) {
  EXPECT_FALSE(binarize(LogitMap<double>(LogitMap<double>::Constant(4, 5, -10.0))).any());
  EXPECT_TRUE(binarize(LogitMap<double>(LogitMap<double>::Constant(4, 5, 5.0))).all());
  LogitMap<double> y = LogitMap<double>::Constant(3, 3, -1.0);
  y(1, 2) = 0.25;
  const BinaryMask m = binarize(y);
  EXPECT_EQ(m.count(), 1);
  EXPECT_TRUE(m(1, 2));
}

TEST(Binarize, ZeroIsOutside) {
  EXPECT_FALSE(binarize(LogitMap<double>(LogitMap<double>::Zero(2, 2))).any());
}

TEST(Binarize, InvariantUnderPositiveScaling) {
  RandomSource rng(3);
  LogitMap<double> y(6, 7);
  for (Index i = 0; i < y.size(); ++i) y.data()[i] = rng.uniform(-2.0, 2.0);
  for (double s : {1e-3, 0.5, 7.0, 1e6}) EXPECT_TRUE((binarize(LogitMap<double>(y * s)) == binarize(y)).all());
}

TEST(ToySegmenter, UniformDiskMatchesColorThresholdOracle) {
  const auto x = disk_image(32, {0.1, 0.2, 0.8}, {0.9, 0.7, 0.1}, 15.5, 15.5, 7.0);
  const ToySegmenter<double> model(ToyParams::color_only());
  const PointPrompt p{16, 16};
  const BinaryMask got = binarize(predict_logits(model, p, x));
  EXPECT_TRUE((got == color_threshold_oracle(x, p, 0.05)).all());
  EXPECT_GT(got.count(), 100);
}

TEST(ToySegmenter, TwoDiskImageSegmentsPromptedDiskOnly) {
  Image<double> x = disk_image(40, {0.05, 0.05, 0.05}, {0.9, 0.2, 0.2}, 10, 10, 6);
  const auto b = disk_image(40, {0.05, 0.05, 0.05}, {0.2, 0.3, 0.95}, 28, 28, 7);
  for (Index r = 0; r < 40; ++r) {
    for (Index c = 0; c < 40; ++c) {
      if (b(r, c, 2) > 0.5) {
        for (Index ch = 0; ch < 3; ++ch) x(r, c, ch) = b(r, c, ch);
      }
    }
  }
  const ToySegmenter<double> model(ToyParams::color_only());
  const PointPrompt p{10, 10};
  const BinaryMask got = binarize(model.forward(p, x));
  EXPECT_TRUE((got == color_threshold_oracle(x, p, 0.05)).all());
  for (Index r = 0; r < 40; ++r) {
    for (Index c = 0; c < 40; ++c) {
      const bool in_a = (r - 10.0) * (r - 10.0) + (c - 10.0) * (c - 10.0) < 36.0;
      EXPECT_EQ(got(r, c), in_a) << r << "," << c;
    }
  }
}

TEST(ToySegmenter, DetailChannelIsQuietOnFlatRegions) {
  // Away from edges the default model reduces to the color threshold.
  const auto x = disk_image(48, {0.1, 0.2, 0.8}, {0.9, 0.7, 0.1}, 23.5, 23.5, 14.0);
  const ToySegmenter<double> model;
  const LogitMap<double> y = model.forward({24, 24}, x);
  EXPECT_NEAR(y(24, 24), 25.0 * 0.05, 1e-9);
  EXPECT_NEAR(y(20, 26), 25.0 * 0.05, 1e-9);
  EXPECT_LT(y(2, 2), 0.0);
}

TEST(ToySegmenter, Deterministic) {
  RandomSource rng(4);
  const auto x = oracle::random_image(rng, 20, 20, 3);
  const ToySegmenter<double> model;
  EXPECT_TRUE((model.forward({5, 7}, x).array() == model.forward({5, 7}, x).array()).all());
}

TEST(ToySegmenter, IdenticalColorGivesGainTimesThreshold) {
  const Image<double> x(6, 6, 3, 0.4);
  const LogitMap<double> y = toy_segment(x, {2, 3}, ToyParams::color_only());
  EXPECT_DOUBLE_EQ(y(0, 0), 25.0 * 0.05);
  EXPECT_DOUBLE_EQ(y(5, 5), 25.0 * 0.05);
}

TEST(ToySegmenter, ThresholdDistanceGivesZeroLogit) {
  Image<double> x(1, 2, 1, 0.0);
  x(0, 1, 0) = std::sqrt(0.05);
  const LogitMap<double> y = toy_segment(x, {0, 0}, ToyParams::color_only(25.0, 0.05));
  EXPECT_NEAR(y(0, 1), 0.0, 1e-14);
}

TEST(ToySegmenter, KernelIsZeroMeanUnitL1) {
  const auto k = toy_detail_kernel<double>(ToyParams{});
  EXPECT_NEAR(k.sum(), 0.0, 1e-12);
  EXPECT_NEAR(k.cwiseAbs().sum(), 1.0, 1e-12);
  EXPECT_EQ(k.rows(), 9);
}

TEST(ToySegmenter, ClampedCorrelationAdjointIdentity) {
  RandomSource rng(5);
  const auto k = toy_detail_kernel<double>(ToyParams{});
  const auto a = oracle::random_image(rng, 13, 11, 1).channel(0);
  const auto b = oracle::random_image(rng, 13, 11, 1).channel(0);
  const double lhs = detail::correlate_clamped(a, k).cwiseProduct(b).sum();
  const double rhs = a.cwiseProduct(detail::correlate_clamped_adjoint(b, k)).sum();
  EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(ToySegmenter, LogitGradientMatchesFiniteDifferences) {
  RandomSource rng(6);
  const ToySegmenter<double> model;
  for (int probe = 0; probe < 12; ++probe) {
    const auto x = oracle::random_image(rng, 16, 16, 3);
    const PointPrompt p{rng.index(16), rng.index(16)};
    const Index li = rng.index(16), lj = rng.index(16);
    LogitMap<double> cot = LogitMap<double>::Zero(16, 16);
    cot(li, lj) = 1.0;
    const Image<double> g = model.gradient(p, x, cot);
    auto f = [&](const Image<double>& z) { return model.forward(p, z)(li, lj); };
    // the logit pixel, its neighbours, and the prompt pixel carry the gradient
    const PointPrompt probes[] = {{li, lj}, {li, std::min<Index>(15, lj + 1)}, {std::max<Index>(0, li - 2), lj}, p};
    for (const auto& q : probes) {
      for (Index ch = 0; ch < 3; ++ch) {
        const double fd = oracle::central_difference(f, x, q.row, q.col, ch, 1e-4);
        EXPECT_LT(rel_err(g(q.row, q.col, ch), fd), 1e-5) << "probe " << probe;
      }
    }
  }
}

TEST(ToySegmenter, DirectionalDerivativeMatchesFiniteDifferences) {
  RandomSource rng(7);
  for (const auto& params : {ToyParams{}, ToyParams::color_only()}) {
    const ToySegmenter<double> model(params);
    for (int probe = 0; probe < 10; ++probe) {
      const auto x = oracle::random_image(rng, 12, 14, 3);
      const auto v = oracle::random_image(rng, 12, 14, 3);
      const PointPrompt p{rng.index(12), rng.index(14)};
      LogitMap<double> cot(12, 14);
      for (Index i = 0; i < cot.size(); ++i) cot.data()[i] = rng.uniform(-1.0, 1.0);
      auto f = [&](const Image<double>& z) { return model.forward(p, z).cwiseProduct(cot).sum(); };
      const double h = 1e-4;
      const double fd = (f(x + v * h) - f(x - v * h)) / (2.0 * h);
      const Image<double> g = model.gradient(p, x, cot);
      double analytic = 0.0;
      for (Index ch = 0; ch < 3; ++ch) analytic += g.channel(ch).cwiseProduct(v.channel(ch)).sum();
      EXPECT_LT(rel_err(analytic, fd), 1e-5);
    }
  }
}

TEST(ToySegmenter, BatchedCallsMatchSingleCalls) {
  RandomSource rng(8);
  const ToySegmenter<double> model;
  const auto x = oracle::random_image(rng, 10, 10, 3);
  const std::vector<PointPrompt> ps = {{1, 1}, {5, 6}, {9, 0}};
  std::vector<LogitMap<double>> cots;
  for (std::size_t k = 0; k < ps.size(); ++k) {
    LogitMap<double> c(10, 10);
    for (Index i = 0; i < c.size(); ++i) c.data()[i] = rng.uniform(-1.0, 1.0);
    cots.push_back(c);
  }
  const auto ys = model.forward_batch(ps, x);
  Image<double> sum = Image<double>::zeros_like(x);
  for (std::size_t k = 0; k < ps.size(); ++k) {
    EXPECT_TRUE((ys[k].array() == model.forward(ps[k], x).array()).all());
    sum += model.gradient(ps[k], x, cots[k]);
  }
  const Image<double> batched = model.gradient_batch(ps, x, std::span<const LogitMap<double>>(cots));
  EXPECT_LT(max_abs_diff(batched, sum), 1e-10);
}

TEST(ToySegmenter, TranslationEquivariantOnInteriorCrops) {
  RandomSource rng(9);
  const auto big = oracle::random_image(rng, 40, 40, 3);
  const ToySegmenter<double> model;
  const Index s = 7, t = 5, h = 24, w = 26;
  std::vector<Plane<double>> planes;
  for (Index ch = 0; ch < 3; ++ch) planes.push_back(big.channel(ch).block(s, t, h, w));
  const Image<double> crop(std::move(planes));
  const PointPrompt q{20, 18};
  const LogitMap<double> full = model.forward(q, big);
  const LogitMap<double> shifted = model.forward({q.row - s, q.col - t}, crop);
  const Index r = 4;  // kernel radius
  for (Index i = r; i < h - r; ++i) {
    for (Index j = r; j < w - r; ++j) EXPECT_NEAR(shifted(i, j), full(i + s, j + t), 1e-12);
  }
}

TEST(PredictLogits, RejectsOutOfBoundsPrompt) {
  const ToySegmenter<double> model;
  const Image<double> x(5, 5, 3, 0.5);
  EXPECT_THROW(predict_logits(model, {5, 0}, x), DomainError);
  EXPECT_THROW(predict_logits(model, {0, -1}, x), DomainError);
}

TEST(PredictLogits, WrapsAdapterFailuresWithName) {
  const Image<double> x(5, 5, 3, 0.5);
  try {
    predict_logits(ThrowingAdapter{}, {1, 1}, x);
    FAIL() << "expected AdapterError";
  } catch (const AdapterError& e) {
    EXPECT_NE(std::string(e.what()).find("broken"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("backend offline"), std::string::npos);
  }
  EXPECT_THROW(predict_logits(WrongShapeAdapter{}, {1, 1}, x), AdapterError);
}

TEST(Adapter, GradientlessAdapterRaisesCapabilityError) {
  const ThrowingAdapter model;
  EXPECT_FALSE(model.has_gradient());
  EXPECT_THROW(model.gradient({0, 0}, Image<double>(2, 2, 1), LogitMap<double>::Zero(2, 2)), CapabilityError);
}

TEST(Registry, BuiltInToysAndUnknownNames) {
  EXPECT_TRUE(has_adapter("toyA"));
  EXPECT_TRUE(has_adapter("toyB"));
  const auto b = make_adapter("toyB");
  EXPECT_EQ(b->name(), "toyB");
  const auto* toy_b = dynamic_cast<const ToySegmenter<double>*>(b.get());
  ASSERT_NE(toy_b, nullptr);
  EXPECT_EQ(toy_b->params().gain, 15.0);
  EXPECT_EQ(toy_b->params().threshold, 0.08);
  try {
    make_adapter("vit_x");
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("toyA"), std::string::npos);
  }
}

TEST(Registry, ExternalAdaptersCanRegister) {
  register_adapter("constant_test", [](const AdapterOptions&) {
    return std::make_unique<ToySegmenter<double>>(ToyParams::color_only(), "constant_test");
  });
  EXPECT_EQ(make_adapter("constant_test")->name(), "constant_test");
}
