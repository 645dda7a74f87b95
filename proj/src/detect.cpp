#include "toptag/detect.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "toptag/error.hpp"

namespace toptag {

DetectorParams DetectorParams::for_width(int width) {
  DetectorParams p;
  int window = static_cast<int>(std::lround(15.0 * width / 960.0));
  if (window % 2 == 0) ++window;
  p.threshold_window = std::max(window, 3);
  return p;
}

void DetectorParams::validate() const {
  if (threshold_window < 3 || threshold_window % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, "threshold window must be odd and at least 3");
  }
  if (min_area < 0 || arm_min < 1 || arm_divisor < 1 || smoothing_sigma < 0.0 || min_contrast < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "invalid detector parameters");
  }
}

namespace {

constexpr std::array<Pixel, 4> kNeighbours4 = {{{0, -1}, {1, 0}, {0, 1}, {-1, 0}}};
constexpr std::array<Pixel, 8> kNeighbours8 = {
    {{-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}}};

// Labels the 8-connected components of a 0/1 mask, calling `visit` with
// each component's pixels in discovery order. Components are found in
// row-major order of their first pixel.
template <typename Visit>
void for_each_component(int width, int height, std::vector<std::uint8_t> mask, Visit&& visit) {
  std::vector<Pixel> component;
  std::vector<Pixel> stack;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * width + x;
      if (!mask[idx]) continue;
      mask[idx] = 0;
      component.clear();
      stack.assign(1, Pixel{x, y});
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        component.push_back(p);
        for (const Pixel& d : kNeighbours8) {
          const int nx = p.x + d.x, ny = p.y + d.y;
          if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
          const std::size_t nidx = static_cast<std::size_t>(ny) * width + nx;
          if (!mask[nidx]) continue;
          mask[nidx] = 0;
          stack.push_back({nx, ny});
        }
      }
      visit(component);
    }
  }
}

bool is_edge_point(const BinaryImage& b, int x, int y) {
  return b.fg(x, y) && (!b.fg(x, y - 1) || !b.fg(x + 1, y) || !b.fg(x, y + 1) || !b.fg(x - 1, y));
}

Line fit_line(std::span<const Vec2> pts) {
  Vec2 mean = Vec2::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  const Vec2 normal = es.eigenvectors().col(0);  // smallest spread is across the line
  return {normal, normal.dot(mean)};
}

std::optional<Vec2> intersect(const Line& a, const Line& b) {
  Eigen::Matrix2d M;
  M.row(0) = a.normal.transpose();
  M.row(1) = b.normal.transpose();
  const double det = M.determinant();
  if (std::abs(det) < 1e-9) return std::nullopt;
  return M.inverse() * Vec2(a.offset, b.offset);
}

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Corners and side lines from four lines; nullopt unless the result is a
// convex quad with positive orientation.
std::optional<QuadCandidate> quad_from_lines(const std::array<Line, 4>& lines) {
  QuadCandidate q;
  q.side_lines = lines;
  for (int k = 0; k < 4; ++k) {
    const auto c = intersect(lines[(k + 3) % 4], lines[k]);
    if (!c) return std::nullopt;
    q.corners[k] = *c;
  }
  for (int k = 0; k < 4; ++k) {
    const Vec2 e0 = q.corners[(k + 1) % 4] - q.corners[k];
    const Vec2 e1 = q.corners[(k + 2) % 4] - q.corners[(k + 1) % 4];
    if (!(cross(e0, e1) > 0.0)) return std::nullopt;
  }
  return q;
}

}  // namespace

BinaryImage adaptive_threshold(const GrayImage& img, const IntegralImage& integral, int window,
                               int offset, int min_area) {
  if (window < 3 || window % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, "threshold window must be odd and at least 3");
  }
  if (window > img.width || window > img.height) {
    throw Error(ErrorCode::ImageTooSmall, "threshold window exceeds the image");
  }
  const int r = window / 2;
  const int W = img.width;
  const std::int64_t* sums = integral.data();
  const std::size_t stride = static_cast<std::size_t>(W) + 1;
  BinaryImage out(W, img.height);
  for (int y = 0; y < img.height; ++y) {
    const int y0 = std::max(y - r, 0), y1 = std::min(y + r, img.height - 1);
    const std::int64_t* top = sums + static_cast<std::size_t>(y0) * stride;
    const std::int64_t* bot = sums + static_cast<std::size_t>(y1 + 1) * stride;
    const std::uint8_t* src = img.data.data() + static_cast<std::size_t>(y) * W;
    std::uint8_t* dst = out.data.data() + static_cast<std::size_t>(y) * W;
    const std::int64_t rows = y1 - y0 + 1;
    const auto clipped = [&](int x) {
      const int x0 = std::max(x - r, 0), x1 = std::min(x + r, W - 1);
      const std::int64_t count = rows * (x1 - x0 + 1);
      const std::int64_t sum = bot[x1 + 1] - top[x1 + 1] - bot[x0] + top[x0];
      // I < sum/count - offset, kept in integers
      dst[x] = (static_cast<std::int64_t>(src[x]) + offset) * count < sum ? 1 : 0;
    };
    const int inner_begin = std::min(r, W), inner_end = std::max(W - r, inner_begin);
    for (int x = 0; x < inner_begin; ++x) clipped(x);
    const std::int64_t full = rows * window;
    for (int x = inner_begin; x < inner_end; ++x) {
      const std::int64_t sum = bot[x + r + 1] - top[x + r + 1] - bot[x - r] + top[x - r];
      dst[x] = (static_cast<std::int64_t>(src[x]) + offset) * full < sum ? 1 : 0;
    }
    for (int x = inner_end; x < W; ++x) clipped(x);
  }
  if (min_area > 1) {
    for_each_component(out.width, out.height, out.data, [&](const std::vector<Pixel>& comp) {
      if (static_cast<int>(comp.size()) >= min_area) return;
      for (const Pixel& p : comp) out.set(p.x, p.y, false);
    });
  }
  return out;
}

BinaryImage adaptive_threshold(const GrayImage& img, int window, int offset, int min_area) {
  return adaptive_threshold(img, IntegralImage(img), window, offset, min_area);
}

void prune_spurs(BinaryImage& binary) {
  const auto fg_count = [&](int x, int y) {
    return binary.fg(x, y - 1) + binary.fg(x + 1, y) + binary.fg(x, y + 1) + binary.fg(x - 1, y);
  };
  std::vector<Pixel> queue;
  for (int y = 0; y < binary.height; ++y) {
    const std::uint8_t* row = binary.data.data() + static_cast<std::size_t>(y) * binary.width;
    for (int x = 0; x < binary.width; ++x)
      if (row[x] && fg_count(x, y) <= 1) queue.push_back({x, y});
  }
  while (!queue.empty()) {
    const Pixel p = queue.back();
    queue.pop_back();
    if (!binary.fg(p.x, p.y) || fg_count(p.x, p.y) > 1) continue;
    binary.set(p.x, p.y, false);
    for (const Pixel& d : {Pixel{0, -1}, Pixel{1, 0}, Pixel{0, 1}, Pixel{-1, 0}}) {
      const int nx = p.x + d.x, ny = p.y + d.y;
      if (binary.fg(nx, ny) && fg_count(nx, ny) <= 1) queue.push_back({nx, ny});
    }
  }
}

std::vector<EdgeCluster> extract_edge_clusters(const BinaryImage& binary) {
  const int W = binary.width, H = binary.height;
  std::vector<std::uint8_t> edge(binary.data.size(), 0);
  for (int y = 0; y < H; ++y) {
    const std::uint8_t* row = binary.data.data() + static_cast<std::size_t>(y) * W;
    std::uint8_t* out = edge.data() + static_cast<std::size_t>(y) * W;
    const bool inner_row = y > 0 && y + 1 < H;
    for (int x = 0; x < W; ++x) {
      if (!row[x]) continue;
      if (inner_row && x > 0 && x + 1 < W) {
        out[x] = !(row[x - 1] && row[x + 1] && row[x - W] && row[x + W]);
      } else {
        out[x] = is_edge_point(binary, x, y);
      }
    }
  }
  std::vector<EdgeCluster> clusters;
  for_each_component(W, H, std::move(edge),
                     [&](const std::vector<Pixel>& comp) { clusters.push_back(comp); });
  return clusters;
}

namespace {

// Left-hand boundary walk from the top-most, left-most pixel of `part`
// (which must come first). Succeeds when the walk returns to its start state
// having stepped on every pixel of `part` exactly once and on nothing else.
// `member` marks the pixels of `part` and `scratch` is all zero on entry and exit.
std::optional<EdgeCycle> walk_part(const BinaryImage& binary, const std::vector<Pixel>& part,
                                   const std::vector<std::uint8_t>& member,
                                   std::vector<std::uint8_t>& scratch,
                                   const std::function<bool(int, int)>& faces) {
  const auto left = [](Pixel d) { return Pixel{d.y, -d.x}; };
  const auto right = [](Pixel d) { return Pixel{-d.y, d.x}; };
  const auto at = [&](const Pixel& q) { return static_cast<std::size_t>(q.y) * binary.width + q.x; };

  const Pixel start = part.front();
  // First background 4-neighbour in N, E, S, W order; walk with it on the left.
  const std::array<Pixel, 4> order = {{{0, -1}, {1, 0}, {0, 1}, {-1, 0}}};
  Pixel bg{0, 0};
  bool found = false;
  for (const Pixel& d : order) {
    const int nx = start.x + d.x, ny = start.y + d.y;
    if (binary.fg(nx, ny) || !faces(nx, ny)) continue;
    bg = d;
    found = true;
    break;
  }
  if (!found) return std::nullopt;
  const Pixel d0 = right(bg);

  std::vector<Pixel> walk{start};
  Pixel p = start, d = d0;
  const std::size_t max_turns = 4 * part.size() + 8;
  bool closed = false;
  for (std::size_t step = 0; step < max_turns; ++step) {
    const Pixel l = left(d);
    const Pixel diag{p.x + d.x + l.x, p.y + d.y + l.y};
    const Pixel ahead{p.x + d.x, p.y + d.y};
    if (binary.fg(diag.x, diag.y)) {
      p = diag;
      d = l;
    } else if (binary.fg(ahead.x, ahead.y)) {
      p = ahead;
    } else {
      d = right(d);
    }
    if (p == start && d == d0) {
      closed = true;
      break;
    }
    if (!(walk.back() == p)) walk.push_back(p);
  }
  if (!closed) return std::nullopt;
  if (walk.size() > 1 && walk.back() == walk.front()) walk.pop_back();
  if (walk.size() != part.size()) return std::nullopt;

  bool simple = true;
  for (const Pixel& q : walk) {
    auto& v = scratch[at(q)];
    if (v || !member[at(q)]) simple = false;
    v = 1;
  }
  for (const Pixel& q : walk) scratch[at(q)] = 0;
  if (!simple) return std::nullopt;
  return EdgeCycle{std::move(walk)};
}

}  // namespace

std::vector<EdgeCycle> extract_simple_cycles(const BinaryImage& binary,
                                             const std::vector<EdgeCluster>& clusters) {
  const int W = binary.width;
  std::vector<EdgeCycle> cycles;
  std::vector<std::uint8_t> member(static_cast<std::size_t>(W) * binary.height, 0);
  std::vector<std::uint8_t> scratch(member.size(), 0);
  const auto at = [&](const Pixel& q) { return static_cast<std::size_t>(q.y) * W + q.x; };

  for (const auto& cluster : clusters) {
    if (cluster.empty()) continue;
    for (const Pixel& q : cluster) member[at(q)] = 1;
    auto cycle = walk_part(binary, cluster, member, scratch, [](int, int) { return true; });
    for (const Pixel& q : cluster) member[at(q)] = 0;
    if (cycle) {
      cycles.push_back(std::move(*cycle));
      continue;
    }

    // Where a dark outline thins to two pixels its outer and inner edges
    // touch and form one cluster. Split such a cluster by the background
    // region each edge pixel faces and walk every part on its own.
    int x0 = cluster.front().x, x1 = x0, y0 = cluster.front().y, y1 = y0;
    for (const Pixel& q : cluster) {
      x0 = std::min(x0, q.x);
      x1 = std::max(x1, q.x);
      y0 = std::min(y0, q.y);
      y1 = std::max(y1, q.y);
    }
    --x0, --y0, ++x1, ++y1;
    const int bw = x1 - x0 + 1, bh = y1 - y0 + 1;
    // Background regions (4-connected) inside the box; everything reaching
    // the box border is region 0.
    Eigen::MatrixXi region = Eigen::MatrixXi::Constant(bw, bh, -1);
    int next_id = 0;
    std::vector<Pixel> stack;
    const auto flood = [&](int sx, int sy, int id) {
      stack.assign(1, Pixel{sx, sy});
      region(sx, sy) = id;
      while (!stack.empty()) {
        const Pixel c = stack.back();
        stack.pop_back();
        for (const Pixel& d : kNeighbours4) {
          const int nx = c.x + d.x, ny = c.y + d.y;
          if (nx < 0 || ny < 0 || nx >= bw || ny >= bh) continue;
          if (region(nx, ny) >= 0 || binary.fg(nx + x0, ny + y0)) continue;
          region(nx, ny) = id;
          stack.push_back({nx, ny});
        }
      }
    };
    for (int y = 0; y < bh; ++y) {
      for (int x = 0; x < bw; ++x) {
        const bool on_box_border = x == 0 || y == 0 || x == bw - 1 || y == bh - 1;
        if (on_box_border && region(x, y) < 0 && !binary.fg(x + x0, y + y0)) flood(x, y, 0);
      }
    }
    next_id = 1;
    for (int y = 0; y < bh; ++y) {
      for (int x = 0; x < bw; ++x) {
        if (region(x, y) < 0 && !binary.fg(x + x0, y + y0)) flood(x, y, next_id++);
      }
    }
    if (next_id < 2) continue;

    const auto region_at = [&](int x, int y) {
      return (x < x0 || y < y0 || x > x1 || y > y1) ? 0 : region(x - x0, y - y0);
    };
    std::vector<std::vector<Pixel>> buckets(next_id);
    for (const Pixel& q : cluster) {
      std::array<int, 4> ids;
      int count = 0;
      for (const Pixel& d : kNeighbours4) {
        if (binary.fg(q.x + d.x, q.y + d.y)) continue;
        const int id = region_at(q.x + d.x, q.y + d.y);
        if (std::find(ids.begin(), ids.begin() + count, id) == ids.begin() + count) ids[count++] = id;
      }
      for (int i = 0; i < count; ++i) buckets[ids[i]].push_back(q);
    }

    std::vector<std::uint8_t> pending(static_cast<std::size_t>(bw) * bh, 0);
    const auto local = [&](const Pixel& q) { return static_cast<std::size_t>(q.y - y0) * bw + (q.x - x0); };
    for (int id = 0; id < next_id; ++id) {
      auto& bucket = buckets[id];
      if (bucket.empty()) continue;
      std::sort(bucket.begin(), bucket.end(),
                [](const Pixel& l, const Pixel& r) { return l.y != r.y ? l.y < r.y : l.x < r.x; });
      for (const Pixel& q : bucket) pending[local(q)] = 1;
      const auto faces = [&](int x, int y) { return region_at(x, y) == id; };
      // 8-connected parts in raster order, so each part starts top-most, left-most.
      for (const Pixel& seed : bucket) {
        if (!pending[local(seed)]) continue;
        pending[local(seed)] = 0;
        std::vector<Pixel> part{seed};
        for (std::size_t i = 0; i < part.size(); ++i) {
          for (const Pixel& d : kNeighbours8) {
            const Pixel nq{part[i].x + d.x, part[i].y + d.y};
            if (nq.x < x0 || nq.y < y0 || nq.x > x1 || nq.y > y1 || !pending[local(nq)]) continue;
            pending[local(nq)] = 0;
            part.push_back(nq);
          }
        }
        for (const Pixel& q : part) member[at(q)] = 1;
        auto sub = walk_part(binary, part, member, scratch, faces);
        for (const Pixel& q : part) member[at(q)] = 0;
        if (sub) cycles.push_back(std::move(*sub));
      }
    }
  }
  return cycles;
}

std::optional<QuadCandidate> verify_quadrilateral(const EdgeCycle& cycle, int arm,
                                                  double corner_threshold, double smoothing_sigma) {
  const int n = static_cast<int>(cycle.points.size());
  if (arm < 1 || n < 4 * arm) return std::nullopt;
  const auto pt = [&](int i) {
    const Pixel& p = cycle.points[((i % n) + n) % n];
    return Vec2(p.x, p.y);
  };

  std::vector<double> turn(n);
  for (int i = 0; i < n; ++i) {
    const Vec2 a = pt(i) - pt(i - arm);
    const Vec2 b = pt(i + arm) - pt(i);
    const double denom = a.norm() * b.norm();
    turn[i] = denom > 0.0 ? a.dot(b) / denom : 1.0;
  }

  if (smoothing_sigma > 0.0) {
    const int radius = static_cast<int>(std::ceil(3.0 * smoothing_sigma));
    std::vector<double> kernel(2 * radius + 1);
    for (int j = -radius; j <= radius; ++j) {
      kernel[j + radius] = std::exp(-0.5 * j * j / (smoothing_sigma * smoothing_sigma));
    }
    const double norm = std::accumulate(kernel.begin(), kernel.end(), 0.0);
    std::vector<double> smooth(n, 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = -radius; j <= radius; ++j) smooth[i] += kernel[j + radius] * turn[((i + j) % n + n) % n];
      smooth[i] /= norm;
    }
    turn = std::move(smooth);
  }

  // Circular non-minimum suppression; plateaus keep their first sample.
  std::vector<int> valleys;
  for (int i = 0; i < n; ++i) {
    if (!(turn[i] < corner_threshold)) continue;
    bool minimum = true;
    for (int j = 1; j <= arm && minimum; ++j) {
      if (turn[((i - j) % n + n) % n] <= turn[i]) minimum = false;
      if (turn[(i + j) % n] < turn[i]) minimum = false;
    }
    if (minimum) valleys.push_back(i);
    if (valleys.size() > 4) return std::nullopt;
  }
  if (valleys.size() != 4) return std::nullopt;

  const int skip = std::max(arm / 2, 1);
  std::array<Line, 4> lines;
  std::vector<Vec2> side;
  for (int k = 0; k < 4; ++k) {
    const int a = valleys[k];
    const int b = valleys[(k + 1) % 4] + (k == 3 ? n : 0);
    side.clear();
    for (int i = a + skip; i <= b - skip; ++i) side.push_back(pt(i));
    if (side.size() < 3) return std::nullopt;
    lines[k] = fit_line(side);
  }
  auto quad = quad_from_lines(lines);
  if (!quad) {
    // The walk might run the other way round; retry with reversed order.
    std::array<Line, 4> rev = {lines[3], lines[2], lines[1], lines[0]};
    quad = quad_from_lines(rev);
    if (!quad) return std::nullopt;
  }
  // Fitted corners must stay near the raw ones.
  for (const Vec2& c : quad->corners) {
    double best = 1e300;
    for (int v : valleys) best = std::min(best, (c - pt(v)).norm());
    if (best > 2.0 * arm + 2.0) return std::nullopt;
  }
  return quad;
}

QuadCandidate refine_quad_edges(const GrayImage& img, const QuadCandidate& quad) {
  constexpr double kReach = 2.5;
  constexpr double kStep = 0.25;
  constexpr int kSamples = static_cast<int>(2 * kReach / kStep) + 1;

  std::array<Line, 4> lines = quad.side_lines;
  std::vector<Vec2> edge_points;
  for (int k = 0; k < 4; ++k) {
    const Vec2 a = quad.corners[k];
    const Vec2 b = quad.corners[(k + 1) % 4];
    const double len = (b - a).norm();
    if (len < 6.0) return quad;
    const Vec2 dir = (b - a) / len;
    const Vec2 out(dir.y(), -dir.x());
    const double margin = std::max(2.0, 0.1 * len);
    const int count = static_cast<int>(std::floor(len - 2.0 * margin)) + 1;
    edge_points.clear();
    std::array<double, kSamples> profile{};
    for (int s = 0; s < count; ++s) {
      const Vec2 base = a + dir * (margin + s);
      for (int j = 0; j < kSamples; ++j) {
        const Vec2 q = base + out * (-kReach + j * kStep);
        if (q.x() < 0.0 || q.y() < 0.0 || q.x() > img.width - 1.0 || q.y() > img.height - 1.0) {
          profile[j] = std::nan("");
        } else {
          profile[j] = img.bilinear(q.x(), q.y());
        }
      }
      int best = -1;
      double best_grad = 0.0;
      for (int j = 1; j + 1 < kSamples; ++j) {
        const double g = profile[j + 1] - profile[j - 1];
        if (g > best_grad) {
          best_grad = g;
          best = j;
        }
      }
      if (best < 2 || best > kSamples - 3) continue;
      const double gm = profile[best] - profile[best - 2];
      const double g0 = best_grad;
      const double gp = profile[best + 2] - profile[best];
      const double denom = gm - 2.0 * g0 + gp;
      double shift = 0.0;
      if (denom < 0.0) shift = std::clamp(0.5 * (gm - gp) / denom, -0.5, 0.5);
      edge_points.push_back(base + out * (-kReach + (best + shift) * kStep));
    }
    if (edge_points.size() < 3) return quad;
    lines[k] = fit_line(edge_points);
  }
  auto refined = quad_from_lines(lines);
  if (!refined) return quad;
  for (int k = 0; k < 4; ++k) {
    if ((refined->corners[k] - quad.corners[k]).norm() > 3.0) return quad;
  }
  return *refined;
}

std::optional<TagDetection> decode_tag(const GrayImage& img, const IntegralImage& integral,
                                       const QuadCandidate& quad, const TagCodebook& codebook,
                                       double min_contrast) {
  const int k = codebook.cell_count();
  const int g = k + 2;
  if (codebook.entries().empty()) return std::nullopt;

  // Sampling frame starts at the corner nearest the image origin.
  int s0 = 0;
  for (int i = 1; i < 4; ++i) {
    const Vec2& c = quad.corners[i];
    const Vec2& b = quad.corners[s0];
    const double sc = c.x() + c.y(), sb = b.x() + b.y();
    if (sc < sb || (sc == sb && c.y() < b.y())) s0 = i;
  }
  std::array<Vec2, 4> S;
  for (int i = 0; i < 4; ++i) S[i] = quad.corners[(s0 + i) % 4];

  const std::array<PointPair, 4> pairs = {{{Vec2(0, 0), S[0]},
                                           {Vec2(g, 0), S[1]},
                                           {Vec2(g, g), S[2]},
                                           {Vec2(0, g), S[3]}}};
  Homography H;
  try {
    H = dlt_homography(pairs);
  } catch (const Error&) {
    return std::nullopt;
  }

  const auto sample = [&](double gx, double gy) -> std::optional<double> {
    const Vec3 q = H.H * Vec3(gx, gy, 1.0);
    if (!(q.z() > 0.0 || q.z() < 0.0)) return std::nullopt;
    const int x = static_cast<int>(std::lround(q.x() / q.z()));
    const int y = static_cast<int>(std::lround(q.y() / q.z()));
    if (!img.contains(x, y)) return std::nullopt;
    return integral.box_mean(x - 1, y - 1, x + 1, y + 1);
  };

  std::vector<double> border, band;
  for (int r = -1; r <= g; ++r) {
    for (int c = -1; c <= g; ++c) {
      const bool on_band = r == -1 || r == g || c == -1 || c == g;
      const bool on_border = !on_band && (r == 0 || r == g - 1 || c == 0 || c == g - 1);
      if (!on_band && !on_border) continue;
      // A tag cut by the image edge can yield a shrunken quad that still
      // decodes, so the whole quiet zone has to be visible.
      const auto v = sample(c + 0.5, r + 0.5);
      if (!v) return std::nullopt;
      (on_band ? band : border).push_back(*v);
    }
  }
  const double black = std::accumulate(border.begin(), border.end(), 0.0) / border.size();
  const double white = std::accumulate(band.begin(), band.end(), 0.0) / band.size();
  if (white - black < min_contrast) return std::nullopt;
  const double threshold = 0.5 * (black + white);

  int frame_errors = 0;
  for (double v : border) frame_errors += v >= threshold;
  for (double v : band) frame_errors += v < threshold;
  if (4 * frame_errors > static_cast<int>(border.size() + band.size())) return std::nullopt;

  TagCode code = 0;
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) {
      const auto v = sample(c + 1.5, r + 1.5);
      if (!v) return std::nullopt;
      code = (code << 1) | (*v < threshold ? 1U : 0U);
    }
  }

  const CodeMatch match = codebook.best_match(code);
  if (match.tag_id < 0 || match.hamming > codebook.max_hamming()) return std::nullopt;

  TagDetection det;
  det.tag_id = match.tag_id;
  det.hamming = match.hamming;
  det.rotation_applied = 90 * match.rotation;
  for (int i = 0; i < 4; ++i) det.corners[i] = S[(match.rotation + i + 3) % 4];
  return det;
}

std::optional<TagDetection> decode_tag(const GrayImage& img, const QuadCandidate& quad,
                                       const TagCodebook& codebook) {
  return decode_tag(img, IntegralImage(img), quad, codebook);
}

double polygon_area(std::span<const Vec2> poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * a;
}

double convex_overlap_area(std::span<const Vec2> a, std::span<const Vec2> b) {
  // Sutherland-Hodgman: clip a against each edge of b.
  std::vector<Vec2> poly(a.begin(), a.end());
  for (std::size_t i = 0; i < b.size() && !poly.empty(); ++i) {
    const Vec2 e0 = b[i];
    const Vec2 e1 = b[(i + 1) % b.size()];
    const auto side = [&](const Vec2& p) { return cross(e1 - e0, p - e0); };
    std::vector<Vec2> next;
    for (std::size_t j = 0; j < poly.size(); ++j) {
      const Vec2& p = poly[j];
      const Vec2& q = poly[(j + 1) % poly.size()];
      const double sp = side(p), sq = side(q);
      if (sp >= 0.0) next.push_back(p);
      if ((sp >= 0.0) != (sq >= 0.0)) next.push_back(p + (q - p) * (sp / (sp - sq)));
    }
    poly = std::move(next);
  }
  return poly.size() < 3 ? 0.0 : std::abs(polygon_area(poly));
}

std::vector<TagDetection> detect_tags(const GrayImage& img, const TagCodebook& codebook,
                                      const DetectorParams& params) {
  params.validate();
  const IntegralImage integral(img);
  BinaryImage binary =
      adaptive_threshold(img, integral, params.threshold_window, params.threshold_offset, params.min_area);
  prune_spurs(binary);
  const auto clusters = extract_edge_clusters(binary);
  const auto cycles = extract_simple_cycles(binary, clusters);

  std::vector<TagDetection> found;
  for (const auto& cycle : cycles) {
    // Out-of-image pixels count as background, so a boundary running along
    // the frame edge is not a tag outline.
    const bool touches_border = std::any_of(cycle.points.begin(), cycle.points.end(), [&](const Pixel& p) {
      return p.x == 0 || p.y == 0 || p.x == img.width - 1 || p.y == img.height - 1;
    });
    if (touches_border) continue;
    // A tag's black square is the outer boundary of its dark region. Hole
    // boundaries run the other way round; near the camera the ring just
    // inside a tag's edge has one that still decodes, with shrunken corners.
    double twice_area = 0.0;
    for (std::size_t i = 0; i < cycle.points.size(); ++i) {
      const Pixel& a = cycle.points[i];
      const Pixel& b = cycle.points[(i + 1) % cycle.points.size()];
      twice_area += static_cast<double>(a.x) * b.y - static_cast<double>(b.x) * a.y;
    }
    if (twice_area < 0.0) continue;
    const int n = static_cast<int>(cycle.points.size());
    const int arm = std::max(params.arm_min, n / params.arm_divisor);
    auto quad = verify_quadrilateral(cycle, arm, params.corner_threshold, params.smoothing_sigma);
    if (!quad) continue;
    if (params.refine_edges) *quad = refine_quad_edges(img, *quad);
    if (auto det = decode_tag(img, integral, *quad, codebook, params.min_contrast)) found.push_back(*det);
  }

  // Overlapping detections: keep the lower Hamming distance, then the larger quad.
  const auto area = [](const TagDetection& d) {
    std::array<Vec2, 4> c = d.corners;
    return std::abs(polygon_area(c));
  };
  std::stable_sort(found.begin(), found.end(), [&](const TagDetection& a, const TagDetection& b) {
    if (a.hamming != b.hamming) return a.hamming < b.hamming;
    return area(a) > area(b);
  });
  std::vector<TagDetection> kept;
  for (const auto& d : found) {
    std::vector<Vec2> pd(d.corners.begin(), d.corners.end());
    if (polygon_area(pd) < 0.0) std::reverse(pd.begin(), pd.end());
    bool overlaps = false;
    for (const auto& e : kept) {
      std::vector<Vec2> pe(e.corners.begin(), e.corners.end());
      if (polygon_area(pe) < 0.0) std::reverse(pe.begin(), pe.end());
      const double inter = convex_overlap_area(pd, pe);
      if (inter > 0.5 * std::min(std::abs(polygon_area(pd)), std::abs(polygon_area(pe)))) {
        overlaps = true;
        break;
      }
    }
    if (!overlaps) kept.push_back(d);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const TagDetection& a, const TagDetection& b) { return a.tag_id < b.tag_id; });
  return kept;
}

std::vector<TagDetection> detect_tags(const GrayImage& img, const TagCodebook& codebook) {
  return detect_tags(img, codebook, DetectorParams::for_width(img.width));
}

}  // namespace toptag
