#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "segadv/image.hpp"

namespace segadv {

struct CorpusItem {
  std::string id;
  Image<double> image;
  std::optional<Region> region;  ///< recorded target box; unset means "use the default"
  std::string load_error;        ///< non-empty when the image could not be read
};

using Corpus = std::vector<CorpusItem>;

struct SyntheticSpec {
  Index count = 20;
  Index height = 48;
  Index width = 48;
  Index channels = 3;
  double shading = 0.1;   ///< amplitude of the per-shape linear color ramp
  double texture = 0.01;  ///< std-dev of per-pixel texture noise
};

/// Images with 2-4 flat-shaded disks/rectangles on a contrasting background.
/// The last shape is the target: it fills the centered one-third box, which is
/// recorded as the item's region. Deterministic in (spec, seed).
Corpus generate_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed);

/// Writes <dir>/manifest.json plus one .tensor and one 8-bit preview per item.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);

/// Reads a directory written by save_corpus, or, without a manifest, every
/// .tensor/.ppm/.pgm file in the directory (sorted by name, no recorded region).
/// A missing directory or malformed manifest throws; an unreadable image only
/// sets that item's load_error.
Corpus load_corpus(const std::filesystem::path& dir);

}  // namespace segadv
