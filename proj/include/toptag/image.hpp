#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace toptag {

/// Row-major 8-bit grayscale image.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  /// Bilinear sample with pixel centers at integer coordinates (clamped at the border).
  double bilinear(double x, double y) const;
};

/// Foreground mask: 1 = foreground, 0 = background.
struct BinaryImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  BinaryImage() = default;
  BinaryImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

  bool fg(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height &&
           data[static_cast<std::size_t>(y) * width + x] != 0;
  }
  void set(int x, int y, bool v) { data[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  std::size_t count() const;
};

/// Summed-area table with a zero first row and column.
class IntegralImage {
 public:
  explicit IntegralImage(const GrayImage& img);

  /// Sum over the inclusive rectangle [x0, x1] x [y0, y1], clipped to the image.
  std::int64_t box_sum(int x0, int y0, int x1, int y1) const;
  /// Mean over the clipped inclusive rectangle.
  double box_mean(int x0, int y0, int x1, int y1) const;
  int width() const { return width_; }
  int height() const { return height_; }
  /// Row-major (width + 1) x (height + 1) table.
  const std::int64_t* data() const { return sums_.data(); }

 private:
  int width_;
  int height_;
  std::vector<std::int64_t> sums_;
};

/// Binary PGM (P5, maxval 255).
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const GrayImage& img, const std::filesystem::path& path);

/// Binary PPM (P6) from interleaved RGB.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  explicit RgbImage(const GrayImage& gray);
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};
void write_ppm(const RgbImage& img, const std::filesystem::path& path);

}  // namespace toptag
