#include "densedino/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace densedino {

namespace {

ViewSpec centered_fallback(Rng& rng, double w, double h, ViewKind kind, const ViewConfig& cfg) {
  // Deterministic fallback: clamp the source aspect into range, then take
  // the largest in-range scale that fits.
  const double ar = std::clamp(w / h, cfg.aspect_min, cfg.aspect_max);
  const double s_fit = std::min({cfg.scale_max(kind), w / (h * ar), (h * ar) / w});
  if (s_fit < cfg.scale_min(kind) - 1e-12) {
    throw GeometryError("unsatisfiable view config: no crop fits the scale/aspect ranges");
  }
  const double area = s_fit * w * h;
  const double cw = std::sqrt(area * ar);
  const double ch = std::sqrt(area / ar);
  ViewSpec v;
  v.x1 = 0.5 * (w - cw);
  v.y1 = 0.5 * (h - ch);
  v.x2 = v.x1 + cw;
  v.y2 = v.y1 + ch;
  v.flip = rng.bernoulli(cfg.flip_prob);
  v.out_res = cfg.resolution(kind);
  v.kind = kind;
  return v;
}

}  // namespace

ViewSpec sample_view(Rng& rng, double source_w, double source_h, ViewKind kind,
                     const ViewConfig& cfg) {
  if (source_w <= 0 || source_h <= 0) throw std::invalid_argument("source size must be positive");
  const double source_area = source_w * source_h;
  const double log_ar_min = std::log(cfg.aspect_min);
  const double log_ar_max = std::log(cfg.aspect_max);

  for (int attempt = 0; attempt < cfg.view_attempts; ++attempt) {
    const double scale = rng.uniform(cfg.scale_min(kind), cfg.scale_max(kind));
    const double ar = std::exp(rng.uniform(log_ar_min, log_ar_max));
    const double area = scale * source_area;
    const double cw = std::sqrt(area * ar);
    const double ch = std::sqrt(area / ar);
    if (cw <= source_w && ch <= source_h) {
      ViewSpec v;
      v.x1 = rng.uniform(0.0, source_w - cw);
      v.y1 = rng.uniform(0.0, source_h - ch);
      v.x2 = v.x1 + cw;
      v.y2 = v.y1 + ch;
      v.flip = rng.bernoulli(cfg.flip_prob);
      v.out_res = cfg.resolution(kind);
      v.kind = kind;
      return v;
    }
  }
  return centered_fallback(rng, source_w, source_h, kind, cfg);
}

std::optional<OverlapRegion> overlap(const ViewSpec& a, const ViewSpec& b) {
  OverlapRegion r;
  r.x1 = std::max(a.x1, b.x1);
  r.y1 = std::max(a.y1, b.y1);
  r.x2 = std::min(a.x2, b.x2);
  r.y2 = std::min(a.y2, b.y2);
  if (r.x2 - r.x1 <= 0.0 || r.y2 - r.y1 <= 0.0) return std::nullopt;
  r.ratio = r.area() / std::min(a.area(), b.area());
  return r;
}

std::vector<ViewSpec> sample_view_set(Rng& rng, double source_w, double source_h,
                                      const std::vector<ViewKind>& layout,
                                      double min_overlap_ratio, const ViewConfig& cfg) {
  if (layout.empty()) throw std::invalid_argument("empty view layout");
  if (min_overlap_ratio < 0.0 || min_overlap_ratio >= 1.0) {
    throw std::invalid_argument("min_overlap_ratio must lie in [0,1)");
  }

  for (int attempt = 0; attempt < cfg.set_attempts; ++attempt) {
    std::vector<ViewSpec> views;
    views.reserve(layout.size());
    for (ViewKind k : layout) views.push_back(sample_view(rng, source_w, source_h, k, cfg));

    if (min_overlap_ratio == 0.0) return views;

    // Constraint covers exactly the loss pairs: teacher side global, student
    // side any other view.
    bool ok = true;
    for (std::size_t i = 0; i < views.size() && ok; ++i) {
      if (views[i].kind != ViewKind::global) continue;
      for (std::size_t j = 0; j < views.size() && ok; ++j) {
        if (j == i) continue;
        auto ov = overlap(views[i], views[j]);
        if (!ov || ov->ratio < min_overlap_ratio) ok = false;
      }
    }
    if (ok) return views;
  }
  throw GeometryError("overlap constraint unsatisfied after " +
                      std::to_string(cfg.set_attempts) + " view-set attempts");
}

Eigen::Vector2d to_relative(double px, double py, const ViewSpec& v) {
  if (!v.contains(px, py, 1e-9 * std::max(v.width(), v.height()) + 1e-12)) {
    throw GeometryError("point outside view box");
  }
  double u = (px - v.x1) / (v.x2 - v.x1);
  double w = (py - v.y1) / (v.y2 - v.y1);
  if (v.flip) u = 1.0 - u;
  return {u, w};
}

Eigen::Vector2d to_absolute(const Eigen::Vector2d& rel, const ViewSpec& v) {
  const double u = v.flip ? 1.0 - rel.x() : rel.x();
  return {v.x1 + u * (v.x2 - v.x1), v.y1 + rel.y() * (v.y2 - v.y1)};
}

std::vector<ReferencePoint> sample_reference_points(Rng& rng, const ViewSpec& a,
                                                    const ViewSpec& b, int m) {
  if (m < 0) throw std::invalid_argument("negative point count");
  const auto ov = overlap(a, b);
  if (!ov) throw GeometryError("views do not overlap; no reference points can be sampled");

  std::vector<ReferencePoint> points;
  points.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    ReferencePoint p;
    p.x = rng.uniform(ov->x1, ov->x2);
    p.y = rng.uniform(ov->y1, ov->y2);
    p.rel_a = to_relative(p.x, p.y, a);
    p.rel_b = to_relative(p.x, p.y, b);
    points.push_back(p);
  }
  return points;
}

}  // namespace densedino
