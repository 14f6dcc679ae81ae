#include "segadv/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "segadv/io.hpp"
#include "segadv/random.hpp"
#include "segadv/segmenter.hpp"
#include "segadv/toy_segmenter.hpp"

namespace segadv {

namespace {

using Color = Eigen::VectorXd;

Color random_color(RandomSource& rng, Index channels) {
  Color c(channels);
  for (Index i = 0; i < channels; ++i) c(i) = rng.uniform(0.0, 1.0);
  return c;
}

Color contrasting_color(RandomSource& rng, const Color& against) {
  // squared distance > 0.3 keeps the target well outside the toy threshold
  for (;;) {
    Color c = random_color(rng, against.size());
    if ((c - against).squaredNorm() > 0.3) return c;
  }
}

struct Ramp {
  Color base, d_row, d_col;
};

Ramp random_ramp(RandomSource& rng, const Color& base, double amplitude) {
  Ramp r{base, Color(base.size()), Color(base.size())};
  for (Index i = 0; i < base.size(); ++i) {
    r.d_row(i) = rng.uniform(-amplitude, amplitude);
    r.d_col(i) = rng.uniform(-amplitude, amplitude);
  }
  return r;
}

template <typename Inside>
void paint(Image<double>& img, const Ramp& ramp, Inside&& inside) {
  const double h = double(img.height()), w = double(img.width());
  for (Index r = 0; r < img.height(); ++r) {
    for (Index c = 0; c < img.width(); ++c) {
      if (!inside(r, c)) continue;
      const double u = double(r) / h - 0.5, v = double(c) / w - 0.5;
      for (Index ch = 0; ch < img.channels(); ++ch) {
        img(r, c, ch) = std::clamp(ramp.base(ch) + ramp.d_row(ch) * u + ramp.d_col(ch) * v, 0.0, 1.0);
      }
    }
  }
}

Image<double> render(const SyntheticSpec& spec, const Region& target, RandomSource& rng) {
  Image<double> img(spec.height, spec.width, spec.channels);
  const Color bg = random_color(rng, spec.channels);
  paint(img, random_ramp(rng, bg, spec.shading), [](Index, Index) { return true; });

  const Index distractors = 1 + rng.index(3);  // 2-4 shapes including the target
  const Index min_side = std::min(spec.height, spec.width);
  for (Index k = 0; k < distractors; ++k) {
    const Ramp ramp = random_ramp(rng, random_color(rng, spec.channels), spec.shading);
    const double cy = double(rng.index(spec.height)), cx = double(rng.index(spec.width));
    const double radius = std::max(2.0, double(min_side) * rng.uniform(0.06, 0.16));
    if (rng.index(2) == 0) {
      paint(img, ramp, [&](Index r, Index c) {
        return (double(r) - cy) * (double(r) - cy) + (double(c) - cx) * (double(c) - cx) < radius * radius;
      });
    } else {
      paint(img, ramp, [&](Index r, Index c) {
        return std::abs(double(r) - cy) < radius && std::abs(double(c) - cx) < radius;
      });
    }
  }

  const Ramp target_ramp = random_ramp(rng, contrasting_color(rng, bg), spec.shading);
  if (rng.index(2) == 0) {
    const double cy = double(target.top) + double(target.height - 1) / 2.0;
    const double cx = double(target.left) + double(target.width - 1) / 2.0;
    const double ry = double(target.height) / 2.0, rx = double(target.width) / 2.0;
    paint(img, target_ramp, [&](Index r, Index c) {
      const double a = (double(r) - cy) / ry, b = (double(c) - cx) / rx;
      return a * a + b * b < 1.0;
    });
  } else {
    paint(img, target_ramp, [&](Index r, Index c) { return target.contains({r, c}); });
  }

  if (spec.texture > 0.0) {
    for (Index ch = 0; ch < img.channels(); ++ch) {
      auto& p = img.channel(ch);
      for (Index i = 0; i < p.size(); ++i) {
        p.data()[i] = std::clamp(p.data()[i] + rng.normal(0.0, spec.texture), 0.0, 1.0);
      }
    }
  }
  return img;
}

std::string item_id(Index i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "img_%03ld", static_cast<long>(i));
  return buf;
}

}  // namespace

Corpus generate_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.count < 1) throw DomainError("synthetic corpus: count must be >= 1");
  if (spec.height < 3 || spec.width < 3 || spec.channels < 1) throw DomainError("synthetic corpus: image too small");
  const Geometry geom{spec.height, spec.width, spec.channels};
  const Region region = centered_third(geom);
  const ToySegmenter<double> check;
  Corpus corpus;
  corpus.reserve(static_cast<std::size_t>(spec.count));
  for (Index i = 0; i < spec.count; ++i) {
    RandomSource rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    for (int attempt = 0;; ++attempt) {
      Image<double> img = render(spec, region, rng);
      // the clean toy mask at the region center must be non-empty
      if (binarize(check.forward(region.center(), img)).any() || attempt == 16) {
        corpus.push_back({item_id(i), std::move(img), region, {}});
        break;
      }
    }
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["images"] = nlohmann::json::array();
  for (const auto& item : corpus) {
    const std::string file = item.id + ".tensor";
    io::save_tensor(item.image, dir / file);
    if (item.image.channels() == 3 || item.image.channels() == 1) {
      io::save_netpbm(item.image, dir / (item.id + (item.image.channels() == 3 ? ".ppm" : ".pgm")));
    }
    nlohmann::json entry{{"id", item.id}, {"file", file}};
    if (item.region) {
      entry["region"] = {{"top", item.region->top},
                         {"left", item.region->left},
                         {"height", item.region->height},
                         {"width", item.region->width}};
    }
    manifest["images"].push_back(entry);
  }
  std::ofstream os(dir / "manifest.json");
  if (!os) throw Error("cannot write manifest in " + dir.string());
  os << manifest.dump(2) << "\n";
}

Corpus load_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("corpus directory not found: " + dir.string());
  Corpus corpus;
  const auto manifest_path = dir / "manifest.json";
  if (std::filesystem::exists(manifest_path)) {
    std::ifstream is(manifest_path);
    try {
      nlohmann::json manifest;
      is >> manifest;
      if (!manifest.contains("images") || !manifest["images"].is_array()) {
        throw Error(manifest_path.string() + ": missing 'images' array");
      }
      for (const auto& entry : manifest["images"]) {
        CorpusItem item;
        item.id = entry.at("id").get<std::string>();
        try {
          item.image = io::load_image(dir / entry.at("file").get<std::string>());
        } catch (const Error& e) {
          item.load_error = e.what();
        }
        if (entry.contains("region")) {
          const auto& r = entry["region"];
          item.region = Region{r.at("top").get<Index>(), r.at("left").get<Index>(), r.at("height").get<Index>(),
                               r.at("width").get<Index>()};
        }
        corpus.push_back(std::move(item));
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(manifest_path.string() + ": " + e.what());
    }
    return corpus;
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto ext = e.path().extension().string();
    if (ext == ".tensor" || ext == ".ppm" || ext == ".pgm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    CorpusItem item{f.stem().string(), {}, std::nullopt, {}};
    try {
      item.image = io::load_image(f);
    } catch (const Error& e) {
      item.load_error = e.what();
    }
    corpus.push_back(std::move(item));
  }
  return corpus;
}

}  // namespace segadv
