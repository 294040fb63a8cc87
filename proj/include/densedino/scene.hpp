#pragma once

#include <set>
#include <vector>

#include "densedino/geometry.hpp"
#include "densedino/rng.hpp"
#include "densedino/types.hpp"

namespace densedino {

/// Synthetic scene: RGB canvas, per-pixel class mask (0 = background) and
/// the set of classes actually visible in the mask.
struct Scene {
  Image image;
  MatI mask;
  std::set<int> classes;
};

struct ViewImage {
  Image pixels;
  ViewSpec spec;
};

struct SceneConfig {
  int canvas = 96;
  int supersample = 2;  // image rendered at this factor then box-averaged
  int min_objects = 2;
  int max_objects = 4;
  int num_classes = 3;  // 1=circle, 2=square, 3=triangle
  double size_min = 0.10;  // object radius as fraction of canvas side
  double size_max = 0.22;
  double background_min = 0.08;
  double background_max = 0.18;
  bool color_by_class = false;  // tie palette index to class instead of sampling
};

/// Deterministic multi-object scene. Objects are drawn back-to-front with
/// occlusion; the mask holds the topmost object class at each pixel center.
Scene generate_scene(Rng& rng, const SceneConfig& cfg);

/// Bilinear crop-and-resize of the view box to out_res^2, mirrored when
/// spec.flip. Pixel centers align: box coordinate x1 + (j+0.5)*w/R samples
/// the source at that continuous position.
ViewImage crop_resize(const Image& source, const ViewSpec& spec);

/// Nearest-neighbor resample of a categorical mask under the same
/// geometry as crop_resize.
MatI crop_resize_mask(const MatI& source, const ViewSpec& spec);

struct PhotoConfig {
  double jitter_prob = 0.8;
  double brightness = 0.4;
  double contrast = 0.4;
  double saturation = 0.2;
  double grayscale_prob = 0.2;
  double blur_prob = 0.0;
  double blur_sigma_min = 0.1;
  double blur_sigma_max = 2.0;
};

/// Brightness/contrast/saturation jitter, probabilistic grayscale and
/// truncated-Gaussian blur; output clamped to [0,1].
ViewImage apply_photometric(Rng& rng, const ViewImage& view, const PhotoConfig& cfg);

/// Class with the largest mask area (ties to the smallest id); 0 when the
/// mask is all background.
int dominant_class(const Scene& scene);

}  // namespace densedino
