#include "saec/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

namespace saec {

namespace {

class PnmReader {
 public:
  explicit PnmReader(std::string bytes) : bytes_(std::move(bytes)) {}

  std::string magic() {
    if (bytes_.size() < 2) throw ImageIoError("file too short for a PNM header");
    pos_ = 2;
    return bytes_.substr(0, 2);
  }

  std::size_t header_int() {
    skip_space_and_comments();
    std::size_t start = pos_;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (start == pos_) throw ImageIoError("malformed PNM header");
    return std::stoul(bytes_.substr(start, pos_ - start));
  }

  // Exactly one whitespace byte separates the header from binary data.
  void end_header() {
    if (pos_ >= bytes_.size()) throw ImageIoError("truncated PNM header");
    ++pos_;
  }

  unsigned char binary_byte() {
    if (pos_ >= bytes_.size()) throw ImageIoError("truncated PNM pixel data");
    return static_cast<unsigned char>(bytes_[pos_++]);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Tensor read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  PnmReader r(std::move(bytes));
  const std::string magic = r.magic();
  std::size_t channels = 0;
  bool binary = false;
  if (magic == "P2") channels = 1;
  else if (magic == "P3") channels = 3;
  else if (magic == "P5") channels = 1, binary = true;
  else if (magic == "P6") channels = 3, binary = true;
  else throw ImageIoError(path.string() + ": unsupported format '" + magic + "'");

  const std::size_t width = r.header_int();
  const std::size_t height = r.header_int();
  const std::size_t maxval = r.header_int();
  if (width == 0 || height == 0) throw ImageIoError(path.string() + ": empty image");
  if (maxval == 0 || maxval > 255) throw ImageIoError(path.string() + ": unsupported maxval " + std::to_string(maxval));
  if (binary) r.end_header();

  std::vector<double> values(channels * height * width);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        const std::size_t v = binary ? r.binary_byte() : r.header_int();
        if (v > maxval) throw ImageIoError(path.string() + ": sample exceeds maxval");
        values[(c * height + y) * width + x] = static_cast<double>(v) / static_cast<double>(maxval);
      }
    }
  }
  return Tensor::from({channels, height, width}, std::move(values));
}

void write_pnm(const std::filesystem::path& path, const Tensor& image) {
  if (image.rank() != 3 || (image.dim(0) != 1 && image.dim(0) != 3)) {
    throw ImageIoError("write_pnm expects [1|3,H,W], got " + to_string(image.shape()));
  }
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot write " + path.string());
  out << (c == 1 ? "P5" : "P6") << '\n' << w << ' ' << h << "\n255\n";
  std::string pixels(c * h * w, '\0');
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double v = std::clamp(image[(ch * h + y) * w + x], 0.0, 1.0);
        pixels[(y * w + x) * c + ch] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
      }
    }
  }
  out.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw ImageIoError("write failed: " + path.string());
}

Tensor resize_image(const Tensor& image, std::size_t height, std::size_t width, ResizeMode mode) {
  if (image.rank() != 3) throw ShapeError("resize_image expects [C,H,W], got " + to_string(image.shape()));
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (h == height && w == width) return image.detach();
  std::vector<double> out(c * height * width);
  const double sy = static_cast<double>(h) / static_cast<double>(height);
  const double sx = static_cast<double>(w) / static_cast<double>(width);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* src = image.data().data() + ch * h * w;
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        double v;
        if (mode == ResizeMode::nearest) {
          const auto iy = std::min(h - 1, static_cast<std::size_t>((static_cast<double>(y) + 0.5) * sy));
          const auto ix = std::min(w - 1, static_cast<std::size_t>((static_cast<double>(x) + 0.5) * sx));
          v = src[iy * w + ix];
        } else {
          // Half-pixel-centre sampling, edges clamped.
          const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
          const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
          const auto y0 = static_cast<std::size_t>(fy), x0 = static_cast<std::size_t>(fx);
          const std::size_t y1 = std::min(h - 1, y0 + 1), x1 = std::min(w - 1, x0 + 1);
          const double ty = fy - static_cast<double>(y0), tx = fx - static_cast<double>(x0);
          const double top = src[y0 * w + x0] * (1 - tx) + src[y0 * w + x1] * tx;
          const double bottom = src[y1 * w + x0] * (1 - tx) + src[y1 * w + x1] * tx;
          v = top * (1 - ty) + bottom * ty;
        }
        out[(ch * height + y) * width + x] = v;
      }
    }
  }
  return Tensor::from({c, height, width}, std::move(out));
}

Tensor convert_channels(const Tensor& image, std::size_t channels) {
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (c == channels) return image.detach();
  const std::size_t plane = h * w;
  std::vector<double> out(channels * plane);
  if (channels == 1) {
    for (std::size_t i = 0; i < plane; ++i) {
      double acc = 0.0;
      for (std::size_t ch = 0; ch < c; ++ch) acc += image[ch * plane + i];
      out[i] = acc / static_cast<double>(c);
    }
  } else if (c == 1) {
    for (std::size_t ch = 0; ch < channels; ++ch) std::copy_n(image.data().begin(), plane, out.begin() + ch * plane);
  } else {
    throw ShapeError("cannot convert " + std::to_string(c) + " channels to " + std::to_string(channels));
  }
  return Tensor::from({channels, h, w}, std::move(out));
}

Tensor tile_images(const std::vector<Tensor>& panels, std::size_t cols, double border) {
  if (panels.empty() || cols == 0) throw ShapeError("tile_images: nothing to tile");
  const Shape& s = panels.front().shape();
  const std::size_t c = s.at(0), h = s.at(1), w = s.at(2);
  const std::size_t rows = (panels.size() + cols - 1) / cols;
  const std::size_t H = rows * (h + 1) + 1, W = cols * (w + 1) + 1;
  std::vector<double> out(c * H * W, border);
  for (std::size_t p = 0; p < panels.size(); ++p) {
    if (panels[p].shape() != s) throw ShapeError("tile_images: panel shapes differ");
    const std::size_t oy = (p / cols) * (h + 1) + 1, ox = (p % cols) * (w + 1) + 1;
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          out[(ch * H + oy + y) * W + ox + x] = panels[p][(ch * h + y) * w + x];
        }
      }
    }
  }
  return Tensor::from({c, H, W}, std::move(out));
}

}  // namespace saec
