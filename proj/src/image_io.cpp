#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <png.h>

#include "fforge/raster.hpp"

namespace fforge {
namespace {

struct Raw8 {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 or 3
  std::vector<std::uint8_t> bytes;
};

bool has_suffix(const std::string& path, const std::string& suffix) {
  if (path.size() < suffix.size()) return false;
  std::string tail = path.substr(path.size() - suffix.size());
  std::transform(tail.begin(), tail.end(), tail.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return tail == suffix;
}

std::runtime_error io_error(const std::string& path, const std::string& what) {
  return std::runtime_error(path + ": " + what);
}

// Netpbm header token, skipping whitespace and '#' comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  char ch = 0;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      tok.push_back(ch);
      break;
    }
  }
  while (in.get(ch) && !std::isspace(static_cast<unsigned char>(ch))) tok.push_back(ch);
  return tok;
}

Raw8 read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error(path, "cannot open file");
  const std::string magic = pnm_token(in);
  Raw8 raw;
  if (magic == "P5") {
    raw.channels = 1;
  } else if (magic == "P6") {
    raw.channels = 3;
  } else {
    throw io_error(path, "unsupported netpbm variant '" + magic + "' (expected binary P5/P6)");
  }
  try {
    raw.width = std::stoi(pnm_token(in));
    raw.height = std::stoi(pnm_token(in));
    const int maxval = std::stoi(pnm_token(in));
    if (maxval != 255) throw io_error(path, "unsupported bit depth (maxval " + std::to_string(maxval) + ")");
  } catch (const std::invalid_argument&) {
    throw io_error(path, "malformed netpbm header");
  }
  if (raw.width <= 0 || raw.height <= 0) throw io_error(path, "invalid dimensions");
  raw.bytes.resize(static_cast<std::size_t>(raw.width) * raw.height * raw.channels);
  in.read(reinterpret_cast<char*>(raw.bytes.data()), static_cast<std::streamsize>(raw.bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.bytes.size())) throw io_error(path, "truncated pixel data");
  return raw;
}

Raw8 read_png(const std::string& path, bool want_color) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw io_error(path, std::string("cannot read PNG: ") + image.message);
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw io_error(path, "unsupported bit depth (16-bit PNG)");
  }
  const bool is_color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  if (!want_color && is_color) {
    png_image_free(&image);
    throw io_error(path, "mask must be single-channel grayscale");
  }
  Raw8 raw;
  raw.width = static_cast<int>(image.width);
  raw.height = static_cast<int>(image.height);
  raw.channels = is_color ? 3 : 1;
  image.format = is_color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  raw.bytes.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raw.bytes.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw io_error(path, "cannot decode PNG: " + msg);
  }
  return raw;
}

Raw8 read_raw(const std::string& path, bool want_color) {
  if (has_suffix(path, ".png")) return read_png(path, want_color);
  if (has_suffix(path, ".pgm") || has_suffix(path, ".ppm") || has_suffix(path, ".pnm")) return read_pnm(path);
  throw io_error(path, "unrecognized raster extension");
}

void check_extent(const std::string& path, const Raw8& raw, const std::optional<Extent>& expect) {
  if (expect && (expect->width != raw.width || expect->height != raw.height)) {
    throw io_error(path, "dimension mismatch: got " + std::to_string(raw.width) + "x" + std::to_string(raw.height) +
                             ", expected " + std::to_string(expect->width) + "x" + std::to_string(expect->height));
  }
}

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

void write_raw(const Raw8& raw, const std::string& path) {
  if (has_suffix(path, ".png")) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(raw.width);
    image.height = static_cast<png_uint_32>(raw.height);
    image.format = raw.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.c_str(), 0, raw.bytes.data(), 0, nullptr)) {
      throw io_error(path, std::string("cannot write PNG: ") + image.message);
    }
    return;
  }
  if (has_suffix(path, ".pgm") || has_suffix(path, ".ppm") || has_suffix(path, ".pnm")) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(path, "cannot open for writing");
    out << (raw.channels == 3 ? "P6" : "P5") << "\n" << raw.width << " " << raw.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(raw.bytes.data()), static_cast<std::streamsize>(raw.bytes.size()));
    if (!out) throw io_error(path, "write failed");
    return;
  }
  throw io_error(path, "unrecognized raster extension");
}

}  // namespace

Mask load_mask(const std::string& path, std::optional<Extent> expect) {
  const Raw8 raw = read_raw(path, false);
  if (raw.channels != 1) throw io_error(path, "mask must be single-channel grayscale");
  check_extent(path, raw, expect);
  MaskArray values(raw.height, raw.width);
  for (int r = 0; r < raw.height; ++r)
    for (int c = 0; c < raw.width; ++c) values(r, c) = static_cast<float>(raw.bytes[r * raw.width + c]) / 255.0f;
  return Mask(std::move(values));
}

IntensityImage load_image(const std::string& path, std::optional<Extent> expect) {
  const Raw8 raw = read_raw(path, true);
  check_extent(path, raw, expect);
  PixelArray px(static_cast<Eigen::Index>(raw.width) * raw.height, 3);
  for (Eigen::Index i = 0; i < px.rows(); ++i) {
    for (int ch = 0; ch < 3; ++ch) {
      const std::uint8_t b = raw.channels == 3 ? raw.bytes[i * 3 + ch] : raw.bytes[i];
      px(i, ch) = static_cast<float>(b) / 255.0f;
    }
  }
  return IntensityImage(raw.width, raw.height, std::move(px));
}

void save_mask(const Mask& mask, const std::string& path) {
  Raw8 raw{mask.width(), mask.height(), 1, {}};
  raw.bytes.reserve(static_cast<std::size_t>(mask.width()) * mask.height());
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c) raw.bytes.push_back(to_byte(mask(r, c)));
  write_raw(raw, path);
}

void save_image(const IntensityImage& image, const std::string& path) {
  Raw8 raw{image.width(), image.height(), 3, {}};
  raw.bytes.reserve(static_cast<std::size_t>(image.pixels().size()));
  for (Eigen::Index i = 0; i < image.pixels().rows(); ++i)
    for (int ch = 0; ch < 3; ++ch) raw.bytes.push_back(to_byte(image.pixels()(i, ch)));
  write_raw(raw, path);
}

}  // namespace fforge
