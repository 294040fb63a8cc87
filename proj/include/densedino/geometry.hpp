#pragma once

#include <optional>
#include <vector>

#include "densedino/rng.hpp"
#include "densedino/types.hpp"

namespace densedino {

enum class ViewKind { global, local };

/// One augmented view of a source image: a real-valued crop box in source
/// pixel coordinates, an optional horizontal mirror, and the square output
/// resolution the crop is resampled to.
struct ViewSpec {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  bool flip = false;
  int out_res = 0;
  ViewKind kind = ViewKind::global;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool contains(double px, double py, double tol = 1e-9) const {
    return px >= x1 - tol && px <= x2 + tol && py >= y1 - tol && py <= y2 + tol;
  }
};

/// Rectangle intersection of two view boxes. ratio = intersection area
/// divided by the smaller view area, so containment scores 1.
struct OverlapRegion {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  double ratio = 0;

  double area() const { return (x2 - x1) * (y2 - y1); }
};

/// A point shared by two views: absolute source coordinates plus its
/// relative coordinates inside each view (flip-adjusted, in [0,1]^2).
struct ReferencePoint {
  double x = 0, y = 0;
  Eigen::Vector2d rel_a;
  Eigen::Vector2d rel_b;
};

struct ViewConfig {
  double global_scale_min = 0.40;
  double global_scale_max = 1.00;
  double local_scale_min = 0.05;
  double local_scale_max = 0.40;
  double aspect_min = 3.0 / 4.0;
  double aspect_max = 4.0 / 3.0;
  double flip_prob = 0.5;
  int global_res = 224;
  int local_res = 96;
  int view_attempts = 100;  // per-view scale/aspect rejection budget
  int set_attempts = 100;   // whole-set overlap rejection budget

  double scale_min(ViewKind k) const {
    return k == ViewKind::global ? global_scale_min : local_scale_min;
  }
  double scale_max(ViewKind k) const {
    return k == ViewKind::global ? global_scale_max : local_scale_max;
  }
  int resolution(ViewKind k) const { return k == ViewKind::global ? global_res : local_res; }
};

/// Random resized crop: area fraction uniform in the kind's scale range,
/// aspect ratio log-uniform, position uniform among fitting placements.
/// Falls back to a deterministic centered crop when rejection sampling
/// cannot fit the requested scale/aspect; throws GeometryError if even the
/// fallback violates the scale range.
ViewSpec sample_view(Rng& rng, double source_w, double source_h, ViewKind kind,
                     const ViewConfig& cfg);

/// Exact rectangle intersection; nullopt when the boxes are disjoint or
/// touch only along an edge.
std::optional<OverlapRegion> overlap(const ViewSpec& a, const ViewSpec& b);

/// Sample a full view set and reject until every (global, other) pair
/// overlaps by at least min_overlap_ratio. Throws GeometryError when the
/// retry budget is exhausted.
std::vector<ViewSpec> sample_view_set(Rng& rng, double source_w, double source_h,
                                      const std::vector<ViewKind>& layout,
                                      double min_overlap_ratio, const ViewConfig& cfg);

/// Map a source point into view-relative coordinates
/// ((x-x1)/(x2-x1), (y-y1)/(y2-y1)); u is mirrored to 1-u for flipped
/// views so a relative coordinate always lands on the same image content.
Eigen::Vector2d to_relative(double px, double py, const ViewSpec& v);

/// Inverse of to_relative.
Eigen::Vector2d to_absolute(const Eigen::Vector2d& rel, const ViewSpec& v);

/// M points uniform over the overlap rectangle of a and b, each carrying
/// its relative coordinates in both views. Throws GeometryError when the
/// views do not overlap.
std::vector<ReferencePoint> sample_reference_points(Rng& rng, const ViewSpec& a,
                                                    const ViewSpec& b, int m);

}  // namespace densedino
