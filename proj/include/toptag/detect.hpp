#pragma once

#include <array>
#include <optional>
#include <vector>

#include "toptag/codebook.hpp"
#include "toptag/geometry.hpp"
#include "toptag/image.hpp"

namespace toptag {

struct Pixel {
  int x = 0;
  int y = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// 8-connected set of edge points. The first entry is the cluster's
/// top-most, left-most pixel.
using EdgeCluster = std::vector<Pixel>;

/// Closed boundary walk visiting every pixel of its cluster exactly once.
struct EdgeCycle {
  std::vector<Pixel> points;
};

/// Line {p : normal . p = offset} with unit normal.
struct Line {
  Vec2 normal = Vec2::UnitY();
  double offset = 0.0;
};

/// Convex quadrilateral. Corners have positive signed area in (u, v), so with
/// v pointing down they run clockwise on screen. side_lines[k] joins corner k
/// and corner k+1.
struct QuadCandidate {
  std::array<Vec2, 4> corners;
  std::array<Line, 4> side_lines;
};

struct TagDetection {
  int tag_id = -1;
  std::array<Vec2, 4> corners;  // in layout corner order
  int hamming = 0;
  int rotation_applied = 0;  // degrees: 0, 90, 180 or 270
};

struct DetectorParams {
  int threshold_window = 15;  // odd, pixels
  int threshold_offset = 8;
  int min_area = 24;
  int arm_min = 4;
  int arm_divisor = 24;          // arm = max(arm_min, cycle length / arm_divisor)
  double corner_threshold = 0.95;  // cosine of the local turn
  double smoothing_sigma = 2.0;
  double min_contrast = 30.0;  // white band minus black border, intensity levels
  bool refine_edges = true;

  /// Window scaled with image width from 15 px at 960 px.
  static DetectorParams for_width(int width);
  void validate() const;
};

/// Foreground iff intensity < window mean - offset over the window clipped
/// to the image, then 8-connected foreground sets below min_area are cleared.
/// Throws InvalidArgument for an even or tiny window and ImageTooSmall when
/// the window exceeds either image dimension.
BinaryImage adaptive_threshold(const GrayImage& img, int window, int offset, int min_area = 24);
BinaryImage adaptive_threshold(const GrayImage& img, const IntegralImage& integral, int window,
                               int offset, int min_area = 24);

/// Iteratively clears foreground pixels with at most one foreground
/// 4-neighbour. Removes the one-pixel spikes that thresholding leaves at
/// acute corners, which a boundary walk would otherwise pass twice.
void prune_spurs(BinaryImage& binary);

/// Edge points (foreground with a background 4-neighbour) grouped into
/// 8-connected clusters, in row-major order of their first pixel.
std::vector<EdgeCluster> extract_edge_clusters(const BinaryImage& binary);

/// Walks each cluster keeping background on the left and keeps the walks
/// that return to the start after visiting every cluster pixel exactly once.
std::vector<EdgeCycle> extract_simple_cycles(const BinaryImage& binary,
                                             const std::vector<EdgeCluster>& clusters);

/// Corner detection on the turn signal of a cycle followed by total least
/// squares line fits to the four sides. The signal at P is the cosine of the
/// angle between P - P_L and P_R - P with P_L, P_R `arm` samples away.
std::optional<QuadCandidate> verify_quadrilateral(const EdgeCycle& cycle, int arm,
                                                  double corner_threshold, double smoothing_sigma);

/// Moves each side to the strongest dark-to-light transition along its
/// outward normal (sub-pixel) and re-intersects the sides. Returns the input
/// unchanged if a side has too few usable samples.
QuadCandidate refine_quad_edges(const GrayImage& img, const QuadCandidate& quad);

std::optional<TagDetection> decode_tag(const GrayImage& img, const IntegralImage& integral,
                                       const QuadCandidate& quad, const TagCodebook& codebook,
                                       double min_contrast = 30.0);
std::optional<TagDetection> decode_tag(const GrayImage& img, const QuadCandidate& quad,
                                       const TagCodebook& codebook);

std::vector<TagDetection> detect_tags(const GrayImage& img, const TagCodebook& codebook,
                                      const DetectorParams& params);
std::vector<TagDetection> detect_tags(const GrayImage& img, const TagCodebook& codebook);

/// Area of the intersection of two convex polygons given with positive orientation.
double convex_overlap_area(std::span<const Vec2> a, std::span<const Vec2> b);
double polygon_area(std::span<const Vec2> poly);

}  // namespace toptag
