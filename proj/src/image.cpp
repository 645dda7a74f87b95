#include "toptag/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <string>

#include "toptag/error.hpp"

namespace toptag {

double GrayImage::bilinear(double x, double y) const {
  x = std::clamp(x, 0.0, width - 1.0);
  y = std::clamp(y, 0.0, height - 1.0);
  const int x0 = std::min(static_cast<int>(x), width - 2 < 0 ? 0 : width - 2);
  const int y0 = std::min(static_cast<int>(y), height - 2 < 0 ? 0 : height - 2);
  const int x1 = std::min(x0 + 1, width - 1);
  const int y1 = std::min(y0 + 1, height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1.0 - fx) * at(x0, y0) + fx * at(x1, y0);
  const double bottom = (1.0 - fx) * at(x0, y1) + fx * at(x1, y1);
  return (1.0 - fy) * top + fy * bottom;
}

std::size_t BinaryImage::count() const {
  return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

IntegralImage::IntegralImage(const GrayImage& img)
    : width_(img.width),
      height_(img.height),
      sums_(static_cast<std::size_t>(img.width + 1) * (img.height + 1)) {
  const std::size_t stride = static_cast<std::size_t>(width_) + 1;
  std::fill(sums_.begin(), sums_.begin() + static_cast<std::ptrdiff_t>(stride), 0);
  for (int y = 0; y < height_; ++y) {
    const std::uint8_t* src = img.data.data() + static_cast<std::size_t>(y) * width_;
    const std::int64_t* above = sums_.data() + y * stride;
    std::int64_t* row_out = sums_.data() + (y + 1) * stride;
    row_out[0] = 0;
    std::int64_t row = 0;
    for (int x = 0; x < width_; ++x) {
      row += src[x];
      row_out[x + 1] = above[x + 1] + row;
    }
  }
}

std::int64_t IntegralImage::box_sum(int x0, int y0, int x1, int y1) const {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, width_ - 1);
  y1 = std::min(y1, height_ - 1);
  if (x1 < x0 || y1 < y0) return 0;
  const std::size_t stride = static_cast<std::size_t>(width_) + 1;
  return sums_[(y1 + 1) * stride + x1 + 1] - sums_[y0 * stride + x1 + 1] -
         sums_[(y1 + 1) * stride + x0] + sums_[y0 * stride + x0];
}

double IntegralImage::box_mean(int x0, int y0, int x1, int y1) const {
  const int cx0 = std::max(x0, 0), cy0 = std::max(y0, 0);
  const int cx1 = std::min(x1, width_ - 1), cy1 = std::min(y1, height_ - 1);
  if (cx1 < cx0 || cy1 < cy0) return 0.0;
  const double area = static_cast<double>(cx1 - cx0 + 1) * (cy1 - cy0 + 1);
  return static_cast<double>(box_sum(cx0, cy0, cx1, cy1)) / area;
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  while (in) {
    const int c = in.get();
    if (c == EOF) break;
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
      if (!tok.empty()) break;
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  if (pnm_token(in) != "P5") throw Error(ErrorCode::IoFailure, path.string() + " is not a binary PGM");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(pnm_token(in));
    h = std::stoi(pnm_token(in));
    maxval = std::stoi(pnm_token(in));
  } catch (const std::exception&) {
    throw Error(ErrorCode::IoFailure, "malformed PGM header in " + path.string());
  }
  if (w <= 0 || h <= 0 || maxval != 255) {
    throw Error(ErrorCode::IoFailure, "unsupported PGM geometry or maxval in " + path.string());
  }
  GrayImage img(w, h);
  in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.data.size())) {
    throw Error(ErrorCode::IoFailure, "truncated PGM data in " + path.string());
  }
  return img;
}

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

RgbImage::RgbImage(const GrayImage& gray)
    : width(gray.width), height(gray.height), rgb(gray.data.size() * 3) {
  for (std::size_t i = 0; i < gray.data.size(); ++i) {
    rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = gray.data[i];
  }
}

void RgbImage::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
  rgb[i] = r;
  rgb[i + 1] = g;
  rgb[i + 2] = b;
}

void write_ppm(const RgbImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace toptag
