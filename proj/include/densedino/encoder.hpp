#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "densedino/rng.hpp"
#include "densedino/scene.hpp"
#include "densedino/types.hpp"

namespace densedino {

struct EncoderConfig {
  int image_res = 64;
  int patch_size = 8;
  int depth = 3;
  int embed_dim = 64;
  int heads = 4;
  int proto_dim = 256;  // projection-head output size
  double mlp_ratio = 4.0;
  int bottleneck_dim = 64;
  bool ref_attends_class = true;  // reference queries may read the class column

  int grid() const { return image_res / patch_size; }
  int patch_count() const { return grid() * grid(); }
  int patch_dim() const { return 3 * patch_size * patch_size; }
  int mlp_hidden() const { return static_cast<int>(embed_dim * mlp_ratio); }
  int head_hidden() const { return 4 * embed_dim; }
  void validate() const;
};

struct BlockParams {
  Vec ln1_g, ln1_b;
  Mat wq, wk, wv, wo;
  Vec bq, bk, bv, bo;
  Vec ln2_g, ln2_b;
  Mat w1;  // mlp_hidden x embed_dim
  Vec b1;
  Mat w2;  // embed_dim x mlp_hidden
  Vec b2;
};

struct HeadParams {
  Mat w1;  // head_hidden x embed_dim
  Vec b1;
  Mat w2;  // head_hidden x head_hidden
  Vec b2;
  Mat w3;  // bottleneck x head_hidden
  Vec b3;
  Mat last_v;  // proto_dim x bottleneck; rows unit-normalized at use
};

/// All trainable state of one network (backbone + projection head).
struct EncoderParams {
  EncoderConfig cfg;
  Vec cls_token;
  Mat patch_weight;  // embed_dim x patch_dim
  Vec patch_bias;
  Mat pos_grid;  // (grid*grid) x embed_dim; row i*G+j is the node at patch (i,j)
  std::vector<BlockParams> blocks;
  Vec final_ln_g, final_ln_b;
  HeadParams head;

  static EncoderParams zeros(const EncoderConfig& cfg);
};

/// Random init (truncated normal 0.02 weights, unit norms, zero biases).
EncoderParams init_encoder(const EncoderConfig& cfg, Rng& rng);

/// Flat view of one parameter tensor; names are stable and used for
/// checkpoints, the optimizer and gradient checks.
struct ParamRef {
  std::string name;
  std::string group;  // patch_proj | pos_grid | attention | mlp | head
  bool decay = true;  // participates in weight decay
  double* data = nullptr;
  Index rows = 0, cols = 0;
  Index size() const { return rows * cols; }
};

std::vector<ParamRef> param_refs(EncoderParams& p);

/// FNV-1a over all parameter bytes in registry order.
std::uint64_t param_fingerprint(const EncoderParams& p);

/// Attention reachability: allowed(q, k) means query row q may attend to
/// key column k. Reference-token columns are masked for every query;
/// class and patch tokens see each other fully; reference rows read class
/// and patch columns only (patch columns only when ref_attends_class is
/// off).
struct AttentionMask {
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> allowed;

  /// Additive logit bias: 0 where allowed, -1e9 where masked.
  Mat bias() const;
};

AttentionMask build_attention_mask(int n_patches, int n_ref, bool ref_attends_class = true);

/// The 4x4 tap indices/weights of a Catmull-Rom bicubic sample at
/// relative position (u, v) on a G x G grid whose node (i, j) sits at
/// ((j+0.5)/G, (i+0.5)/G). Out-of-range taps clamp to edge nodes.
struct BicubicTaps {
  std::array<Index, 4> row_idx, col_idx;
  std::array<double, 4> wy, wx;
};

BicubicTaps bicubic_taps(int grid_side, double u, double v);

/// Bicubic sample of every embedding channel at (u, v); linear in the
/// grid values, so gradients scatter through the same taps.
Vec interpolate_pos_embed(const Mat& grid, int grid_side, double u, double v);

Vec gather_taps(const Mat& grid, int grid_side, const BicubicTaps& t);
void scatter_taps(Mat& grid_grad, int grid_side, const BicubicTaps& t, const Vec& g);

struct LnCache {
  Mat xhat;
  Vec rstd;
};

struct BlockCache {
  Mat x_in;
  LnCache ln1;
  Mat ln1_out;
  Mat q, k, v;
  std::vector<Mat> attn;  // per-head softmax matrices, T x T
  Mat merged;             // heads concatenated A*V, T x D
  Mat x_mid;
  LnCache ln2;
  Mat ln2_out;
  Mat mlp_pre, mlp_act;
};

struct HeadCache {
  Mat in;  // (1 + R) x D rows fed to the head (class first, then refs)
  Mat h1, a1, h2, a2;
  Mat z, zn;
  Vec znorm;
  Mat wn;  // row-normalized last_v
  Vec wn_norm;
  Mat logits;
};

struct ForwardCache {
  int n_patches = 0, n_ref = 0, view_grid = 0;
  Mat tokens;
  Mat patch_pixels;  // N x patch_dim
  std::vector<BicubicTaps> patch_taps;  // only for non-native resolutions
  std::vector<BicubicTaps> ref_taps;
  Mat mask_bias;
  std::vector<BlockCache> blocks;
  Mat final_in;
  LnCache final_ln;
  Mat features;
  HeadCache head;
};

struct EncoderOutput {
  Vec cls_feat;
  Mat patch_feats;  // N x D
  Mat ref_feats;    // R x D
  Vec cls_logits;   // proto_dim
  Mat ref_logits;   // R x proto_dim
};

/// Patch embeddings for a view: non-overlapping patches flattened
/// channel-major, linearly projected, plus the positional embedding of
/// each patch center. Native resolution reads grid nodes directly; other
/// resolutions interpolate the grid at the patch centers.
Mat patchify(const EncoderParams& p, const Image& pixels, Mat* pixels_out = nullptr,
             std::vector<BicubicTaps>* taps_out = nullptr);

/// Full forward pass over [class, patches, references]. ref_rels carries
/// the relative coordinates that define the reference tokens.
EncoderOutput encoder_forward(const EncoderParams& p, const Image& pixels,
                              const std::vector<Eigen::Vector2d>& ref_rels, ForwardCache& cache);

/// Shared projection head on arbitrary feature rows: 3-layer GELU MLP to
/// the bottleneck, L2 normalization, then a weight-normalized linear map
/// to prototype logits.
Mat head_forward(const HeadParams& h, const Mat& rows, HeadCache& cache);

/// Backprop of d(loss)/d(class logits) and d(loss)/d(reference logits)
/// through the whole encoder; accumulates into grads (same shapes as the
/// parameters).
void encoder_backward(const EncoderParams& p, const ForwardCache& cache, const Vec& d_cls_logits,
                      const Mat& d_ref_logits, EncoderParams& grads);

}  // namespace densedino
