#include "densedino/scene.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace densedino {

namespace {

struct Shape {
  int cls = 0;       // 1=circle, 2=square, 3=triangle
  double cx = 0, cy = 0;
  double r = 0;      // size parameter; shapes are area-matched to pi*r^2
  Eigen::Vector3d color;

  bool covers(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    switch (cls) {
      case 1:
        return dx * dx + dy * dy <= r * r;
      case 2: {
        // Axis-aligned square of area pi*r^2.
        const double half = r * 0.8862269254527580;  // sqrt(pi)/2
        return std::abs(dx) <= half && std::abs(dy) <= half;
      }
      case 3: {
        // Equilateral triangle of area pi*r^2, apex up (y grows downward).
        const double cr = r * 1.5550883635269477;  // sqrt(4*pi/(3*sqrt(3)))
        const double x0 = cx, y0 = cy - cr;
        const double x1 = cx - cr * 0.8660254037844386, y1 = cy + cr * 0.5;
        const double x2 = cx + cr * 0.8660254037844386, y2 = cy + cr * 0.5;
        const double d0 = (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0);
        const double d1 = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1);
        const double d2 = (x0 - x2) * (y - y2) - (y0 - y2) * (x - x2);
        return (d0 >= 0 && d1 >= 0 && d2 >= 0) || (d0 <= 0 && d1 <= 0 && d2 <= 0);
      }
      default:
        return false;
    }
  }
};

const std::vector<Eigen::Vector3d>& palette() {
  static const std::vector<Eigen::Vector3d> p = {
      {0.90, 0.25, 0.20}, {0.20, 0.55, 0.90}, {0.95, 0.80, 0.25},
      {0.30, 0.80, 0.40}, {0.75, 0.35, 0.85}, {0.95, 0.55, 0.20},
  };
  return p;
}

double source_coord(double lo, double hi, int out_res, int j) {
  return lo + (j + 0.5) * (hi - lo) / out_res;
}

void blur_plane(Mat& plane, const std::vector<double>& kernel, int half) {
  const Index h = plane.rows(), w = plane.cols();
  Mat tmp(h, w);
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j) {
      double acc = 0;
      for (int t = -half; t <= half; ++t) {
        const Index jj = std::clamp<Index>(j + t, 0, w - 1);
        acc += kernel[static_cast<std::size_t>(t + half)] * plane(i, jj);
      }
      tmp(i, j) = acc;
    }
  }
  for (Index j = 0; j < w; ++j) {
    for (Index i = 0; i < h; ++i) {
      double acc = 0;
      for (int t = -half; t <= half; ++t) {
        const Index ii = std::clamp<Index>(i + t, 0, h - 1);
        acc += kernel[static_cast<std::size_t>(t + half)] * tmp(ii, j);
      }
      plane(i, j) = acc;
    }
  }
}

}  // namespace

Scene generate_scene(Rng& rng, const SceneConfig& cfg) {
  if (cfg.canvas <= 0 || cfg.supersample < 1) throw std::invalid_argument("bad scene config");
  if (cfg.num_classes < 0 || cfg.num_classes > 3) {
    throw std::invalid_argument("num_classes must lie in [0,3]");
  }
  const int side = cfg.canvas;
  const double background = rng.uniform(cfg.background_min, cfg.background_max);

  const int count =
      cfg.min_objects +
      static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cfg.max_objects - cfg.min_objects + 1)));
  std::vector<Shape> shapes;
  shapes.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count && cfg.num_classes > 0; ++i) {
    Shape s;
    s.cls = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cfg.num_classes)));
    s.r = rng.uniform(cfg.size_min, cfg.size_max) * side;
    // Keep the whole shape on canvas; extent differs per shape kind.
    const double extent = (s.cls == 3) ? s.r * 1.5550883635269477 : s.r;
    s.cx = rng.uniform(extent, side - extent);
    s.cy = rng.uniform(extent, side - extent);
    const std::size_t color_idx = cfg.color_by_class
                                      ? static_cast<std::size_t>(s.cls - 1)
                                      : static_cast<std::size_t>(rng.uniform_int(palette().size()));
    s.color = palette()[color_idx % palette().size()];
    shapes.push_back(s);
  }

  Scene scene;
  const int ss = cfg.supersample;
  const int hi = side * ss;
  Image big(hi, hi);
  for (auto& p : big.c) p.setConstant(background);
  for (const Shape& s : shapes) {  // back-to-front
    for (int i = 0; i < hi; ++i) {
      const double y = (i + 0.5) / ss;
      for (int j = 0; j < hi; ++j) {
        const double x = (j + 0.5) / ss;
        if (s.covers(x, y)) {
          big.c[0](i, j) = s.color(0);
          big.c[1](i, j) = s.color(1);
          big.c[2](i, j) = s.color(2);
        }
      }
    }
  }

  scene.image.resize(side, side);
  const double inv = 1.0 / (ss * ss);
  for (int ch = 0; ch < 3; ++ch) {
    for (int i = 0; i < side; ++i) {
      for (int j = 0; j < side; ++j) {
        scene.image.c[ch](i, j) = big.c[ch].block(i * ss, j * ss, ss, ss).sum() * inv;
      }
    }
  }

  scene.mask.setZero(side, side);
  for (int i = 0; i < side; ++i) {
    const double y = i + 0.5;
    for (int j = 0; j < side; ++j) {
      const double x = j + 0.5;
      for (auto it = shapes.rbegin(); it != shapes.rend(); ++it) {  // topmost first
        if (it->covers(x, y)) {
          scene.mask(i, j) = it->cls;
          break;
        }
      }
    }
  }
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j)
      if (scene.mask(i, j) != 0) scene.classes.insert(scene.mask(i, j));

  return scene;
}

ViewImage crop_resize(const Image& source, const ViewSpec& spec) {
  const Index h = source.height(), w = source.width();
  if (spec.x1 < -1e-9 || spec.y1 < -1e-9 || spec.x2 > w + 1e-9 || spec.y2 > h + 1e-9 ||
      spec.width() <= 0 || spec.height() <= 0) {
    throw GeometryError("view box out of source bounds");
  }
  const int res = spec.out_res;
  ViewImage out;
  out.spec = spec;
  out.pixels.resize(res, res);

  for (int i = 0; i < res; ++i) {
    const double sy = source_coord(spec.y1, spec.y2, res, i) - 0.5;
    const double syc = std::clamp(sy, 0.0, static_cast<double>(h - 1));
    const Index i0 = static_cast<Index>(std::floor(syc));
    const Index i1 = std::min<Index>(i0 + 1, h - 1);
    const double fy = syc - static_cast<double>(i0);
    for (int j = 0; j < res; ++j) {
      const int ju = spec.flip ? res - 1 - j : j;
      const double sx = source_coord(spec.x1, spec.x2, res, ju) - 0.5;
      const double sxc = std::clamp(sx, 0.0, static_cast<double>(w - 1));
      const Index j0 = static_cast<Index>(std::floor(sxc));
      const Index j1 = std::min<Index>(j0 + 1, w - 1);
      const double fx = sxc - static_cast<double>(j0);
      for (int ch = 0; ch < 3; ++ch) {
        const Mat& p = source.c[ch];
        const double top = p(i0, j0) * (1.0 - fx) + p(i0, j1) * fx;
        const double bot = p(i1, j0) * (1.0 - fx) + p(i1, j1) * fx;
        out.pixels.c[ch](i, j) = top * (1.0 - fy) + bot * fy;
      }
    }
  }
  return out;
}

MatI crop_resize_mask(const MatI& source, const ViewSpec& spec) {
  const Index h = source.rows(), w = source.cols();
  if (spec.x1 < -1e-9 || spec.y1 < -1e-9 || spec.x2 > w + 1e-9 || spec.y2 > h + 1e-9 ||
      spec.width() <= 0 || spec.height() <= 0) {
    throw GeometryError("view box out of source bounds");
  }
  const int res = spec.out_res;
  MatI out(res, res);
  for (int i = 0; i < res; ++i) {
    const double sy = source_coord(spec.y1, spec.y2, res, i);
    const Index ii = std::clamp<Index>(static_cast<Index>(std::floor(sy)), 0, h - 1);
    for (int j = 0; j < res; ++j) {
      const int ju = spec.flip ? res - 1 - j : j;
      const double sx = source_coord(spec.x1, spec.x2, res, ju);
      const Index jj = std::clamp<Index>(static_cast<Index>(std::floor(sx)), 0, w - 1);
      out(i, j) = source(ii, jj);
    }
  }
  return out;
}

ViewImage apply_photometric(Rng& rng, const ViewImage& view, const PhotoConfig& cfg) {
  ViewImage out = view;
  auto& c = out.pixels.c;
  const auto luma = [&]() -> Mat { return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]; };

  if (rng.bernoulli(cfg.jitter_prob)) {
    const double fb = rng.uniform(std::max(0.0, 1.0 - cfg.brightness), 1.0 + cfg.brightness);
    for (auto& p : c) p *= fb;

    const double fc = rng.uniform(std::max(0.0, 1.0 - cfg.contrast), 1.0 + cfg.contrast);
    const double mean = luma().mean();
    for (auto& p : c) p = (p.array() - mean).matrix() * fc + Mat::Constant(p.rows(), p.cols(), mean);

    const double fs = rng.uniform(std::max(0.0, 1.0 - cfg.saturation), 1.0 + cfg.saturation);
    const Mat gray = luma();
    for (auto& p : c) p = (p - gray) * fs + gray;
  }

  if (rng.bernoulli(cfg.grayscale_prob)) {
    const Mat gray = luma();
    for (auto& p : c) p = gray;
  }

  if (rng.bernoulli(cfg.blur_prob)) {
    const double sigma = rng.uniform(cfg.blur_sigma_min, cfg.blur_sigma_max);
    const int half = std::max(1, static_cast<int>(std::ceil(2.5 * sigma)));
    std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
    double sum = 0;
    for (int t = -half; t <= half; ++t) {
      const double v = std::exp(-0.5 * (t / sigma) * (t / sigma));
      kernel[static_cast<std::size_t>(t + half)] = v;
      sum += v;
    }
    for (double& v : kernel) v /= sum;
    for (auto& p : c) blur_plane(p, kernel, half);
  }

  for (auto& p : c) p = p.array().min(1.0).max(0.0).matrix();
  return out;
}

int dominant_class(const Scene& scene) {
  std::vector<Index> counts(16, 0);
  for (Index i = 0; i < scene.mask.rows(); ++i)
    for (Index j = 0; j < scene.mask.cols(); ++j) {
      const int v = scene.mask(i, j);
      if (v > 0 && v < static_cast<int>(counts.size())) ++counts[static_cast<std::size_t>(v)];
    }
  int best = 0;
  Index best_count = 0;
  for (std::size_t k = 1; k < counts.size(); ++k) {
    if (counts[k] > best_count) {
      best_count = counts[k];
      best = static_cast<int>(k);
    }
  }
  return best;
}

}  // namespace densedino
