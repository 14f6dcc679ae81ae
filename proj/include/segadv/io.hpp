#pragma once

#include <filesystem>
#include <string>

#include "segadv/image.hpp"

namespace segadv::io {

/// Lossless tensor file: "SEGT" magic, u32 version, u64 height/width/channels,
/// then float64 little-endian samples, channel-major, row-major within a channel.
void save_tensor(const Image<double>& image, const std::filesystem::path& path);
Image<double> load_tensor(const std::filesystem::path& path);

/// Round-to-nearest 8-bit quantization; each value moves by at most 1/510.
Image<double> quantize_8bit(const Image<double>& image);

/// Binary PPM (3 channels) or PGM (1 channel), 8-bit. Values are clamped to [0,1].
void save_netpbm(const Image<double>& image, const std::filesystem::path& path);
Image<double> load_netpbm(const std::filesystem::path& path);

/// Dispatches on extension: .tensor, .ppm, .pgm.
Image<double> load_image(const std::filesystem::path& path);

struct StoredAdversarial {
  std::filesystem::path tensor;   ///< authoritative full-precision copy
  std::filesystem::path preview;  ///< 8-bit preview
};

/// Writes adv.tensor and an 8-bit preview (adv.ppm / adv.pgm) under `dir`.
/// Rejects images whose perturbation exceeds `epsilon` (when epsilon >= 0).
StoredAdversarial persist_adversarial(const Image<double>& clean, const Image<double>& adv,
                                      const std::filesystem::path& dir, double epsilon = -1.0);

}  // namespace segadv::io
