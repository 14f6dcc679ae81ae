#include "segadv/io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "segadv/evaluation.hpp"

namespace segadv::io {

namespace {

constexpr std::array<char, 4> kMagic = {'S', 'E', 'G', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "tensor files assume a little-endian host");

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string() + " for reading");
  return is;
}

// Netpbm header tokens, skipping '#' comments.
std::string next_token(std::istream& is) {
  std::string tok;
  char ch;
  while (is.get(ch)) {
    if (ch == '#') {
      std::string skip;
      std::getline(is, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(ch);
  }
  return tok;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

void save_tensor(const Image<double>& image, const std::filesystem::path& path) {
  auto os = open_out(path);
  os.write(kMagic.data(), kMagic.size());
  write_pod<std::uint32_t>(os, kVersion);
  write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(image.height()));
  write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(image.width()));
  write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(image.channels()));
  for (Index c = 0; c < image.channels(); ++c) {
    const auto& p = image.channel(c);
    for (Index r = 0; r < image.height(); ++r) {
      for (Index col = 0; col < image.width(); ++col) write_pod<double>(os, p(r, col));
    }
  }
  if (!os) throw Error("write failed: " + path.string());
}

Image<double> load_tensor(const std::filesystem::path& path) {
  auto is = open_in(path);
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw Error(path.string() + ": not a tensor file");
  if (read_pod<std::uint32_t>(is) != kVersion) throw Error(path.string() + ": unsupported tensor version");
  const auto h = static_cast<Index>(read_pod<std::uint64_t>(is));
  const auto w = static_cast<Index>(read_pod<std::uint64_t>(is));
  const auto c = static_cast<Index>(read_pod<std::uint64_t>(is));
  if (!is || h < 1 || w < 1 || c < 1 || h * w * c > (Index(1) << 32)) {
    throw Error(path.string() + ": corrupt tensor header");
  }
  Image<double> image(h, w, c);
  for (Index ch = 0; ch < c; ++ch) {
    auto& p = image.channel(ch);
    for (Index r = 0; r < h; ++r) {
      for (Index col = 0; col < w; ++col) p(r, col) = read_pod<double>(is);
    }
  }
  if (!is) throw Error(path.string() + ": truncated tensor data");
  return image;
}

Image<double> quantize_8bit(const Image<double>& image) {
  Image<double> q = image;
  return q.apply([](double v) { return double(to_byte(v)) / 255.0; });
}

void save_netpbm(const Image<double>& image, const std::filesystem::path& path) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw ShapeError("netpbm preview needs 1 or 3 channels, got " + std::to_string(image.channels()));
  }
  auto os = open_out(path);
  os << (image.channels() == 3 ? "P6" : "P5") << "\n" << image.width() << " " << image.height() << "\n255\n";
  for (Index r = 0; r < image.height(); ++r) {
    for (Index col = 0; col < image.width(); ++col) {
      for (Index c = 0; c < image.channels(); ++c) os.put(static_cast<char>(to_byte(image(r, col, c))));
    }
  }
  if (!os) throw Error("write failed: " + path.string());
}

Image<double> load_netpbm(const std::filesystem::path& path) {
  auto is = open_in(path);
  const std::string magic = next_token(is);
  Index channels = 0;
  if (magic == "P6") channels = 3;
  else if (magic == "P5") channels = 1;
  else throw Error(path.string() + ": only binary PPM/PGM is supported");
  const Index w = std::stol(next_token(is));
  const Index h = std::stol(next_token(is));
  const long maxval = std::stol(next_token(is));
  if (w < 1 || h < 1 || maxval < 1 || maxval > 255) throw Error(path.string() + ": unsupported netpbm header");
  Image<double> image(h, w, channels);
  for (Index r = 0; r < h; ++r) {
    for (Index col = 0; col < w; ++col) {
      for (Index c = 0; c < channels; ++c) {
        const int byte = is.get();
        if (byte == EOF) throw Error(path.string() + ": truncated pixel data");
        image(r, col, c) = double(byte) / double(maxval);
      }
    }
  }
  return image;
}

Image<double> load_image(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".tensor") return load_tensor(path);
  if (ext == ".ppm" || ext == ".pgm") return load_netpbm(path);
  throw Error(path.string() + ": unknown image extension '" + ext + "'");
}

StoredAdversarial persist_adversarial(const Image<double>& clean, const Image<double>& adv,
                                      const std::filesystem::path& dir, double epsilon) {
  clean.require_same_geometry(adv, "persist_adversarial");
  if (epsilon >= 0.0 && max_abs_diff(clean, adv) > epsilon + kBudgetSlack) {
    throw DomainError("persist_adversarial: perturbation exceeds epsilon");
  }
  StoredAdversarial out;
  out.tensor = dir / "adv.tensor";
  save_tensor(adv, out.tensor);
  if (adv.channels() == 1 || adv.channels() == 3) {
    out.preview = dir / (adv.channels() == 3 ? "adv.ppm" : "adv.pgm");
    save_netpbm(adv, out.preview);
  }
  return out;
}

}  // namespace segadv::io
