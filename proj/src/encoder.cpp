#include "densedino/encoder.hpp"

#include <cmath>

#include "densedino/math.hpp"

namespace densedino {

namespace {

constexpr double kLnEps = 1e-6;
constexpr double kNormEps = 1e-12;
constexpr double kMaskBias = -1e9;

Mat layer_norm(const Mat& x, const Vec& g, const Vec& b, LnCache& cache) {
  const Vec mu = x.rowwise().mean();
  Mat centered = x.colwise() - mu;
  const Vec var = centered.array().square().rowwise().mean();
  cache.rstd = (var.array() + kLnEps).rsqrt();
  cache.xhat = centered.array().colwise() * cache.rstd.array();
  Mat y = cache.xhat.array().rowwise() * g.transpose().array();
  y.rowwise() += b.transpose();
  return y;
}

/// dx for a layer-norm row given upstream dy; accumulates dg/db.
Mat layer_norm_backward(const Mat& dy, const LnCache& cache, const Vec& g, Vec& dg, Vec& db) {
  dg += (dy.array() * cache.xhat.array()).colwise().sum().matrix().transpose();
  db += dy.colwise().sum().transpose();
  const Mat dxhat = dy.array().rowwise() * g.transpose().array();
  const Vec m1 = dxhat.rowwise().mean();
  const Vec m2 = (dxhat.array() * cache.xhat.array()).rowwise().mean();
  Mat dx = dxhat.colwise() - m1;
  dx -= cache.xhat.array().colwise() * m2.array();
  return dx.array().colwise() * cache.rstd.array();
}

Mat gelu_mat(const Mat& x) {
  return x.unaryExpr([](double v) { return gelu(v); });
}

Mat gelu_grad_mat(const Mat& x) {
  return x.unaryExpr([](double v) { return gelu_grad(v); });
}

Mat linear(const Mat& x, const Mat& w, const Vec& b) {
  Mat y = x * w.transpose();
  y.rowwise() += b.transpose();
  return y;
}

/// Row-stochastic softmax of logits with an additive mask bias already
/// applied. Masked entries underflow to exactly zero.
Mat softmax_rows(Mat scores) {
  const Vec rowmax = scores.rowwise().maxCoeff();
  scores.colwise() -= rowmax;
  Mat e = scores.array().exp();
  const Vec rowsum = e.rowwise().sum();
  return e.array().colwise() / rowsum.array();
}

void init_mat(Mat& m, Rng& rng, double std_dev) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) m(i, j) = rng.trunc_normal(0.0, std_dev);
}

}  // namespace

void EncoderConfig::validate() const {
  if (image_res <= 0 || patch_size <= 0 || image_res % patch_size != 0) {
    throw ConfigError("image_res must be a positive multiple of patch_size");
  }
  if (embed_dim <= 0 || heads <= 0 || embed_dim % heads != 0) {
    throw ConfigError("embed_dim must be a positive multiple of heads");
  }
  if (depth < 0 || proto_dim <= 0 || bottleneck_dim <= 0 || mlp_ratio <= 0) {
    throw ConfigError("invalid encoder dimensions");
  }
}

EncoderParams EncoderParams::zeros(const EncoderConfig& cfg) {
  cfg.validate();
  EncoderParams p;
  p.cfg = cfg;
  const int d = cfg.embed_dim;
  p.cls_token = Vec::Zero(d);
  p.patch_weight = Mat::Zero(d, cfg.patch_dim());
  p.patch_bias = Vec::Zero(d);
  p.pos_grid = Mat::Zero(cfg.patch_count(), d);
  p.blocks.resize(static_cast<std::size_t>(cfg.depth));
  for (auto& b : p.blocks) {
    b.ln1_g = Vec::Zero(d);
    b.ln1_b = Vec::Zero(d);
    b.wq = Mat::Zero(d, d);
    b.wk = Mat::Zero(d, d);
    b.wv = Mat::Zero(d, d);
    b.wo = Mat::Zero(d, d);
    b.bq = Vec::Zero(d);
    b.bk = Vec::Zero(d);
    b.bv = Vec::Zero(d);
    b.bo = Vec::Zero(d);
    b.ln2_g = Vec::Zero(d);
    b.ln2_b = Vec::Zero(d);
    b.w1 = Mat::Zero(cfg.mlp_hidden(), d);
    b.b1 = Vec::Zero(cfg.mlp_hidden());
    b.w2 = Mat::Zero(d, cfg.mlp_hidden());
    b.b2 = Vec::Zero(cfg.mlp_hidden() == 0 ? 0 : d);
  }
  p.final_ln_g = Vec::Zero(d);
  p.final_ln_b = Vec::Zero(d);
  p.head.w1 = Mat::Zero(cfg.head_hidden(), d);
  p.head.b1 = Vec::Zero(cfg.head_hidden());
  p.head.w2 = Mat::Zero(cfg.head_hidden(), cfg.head_hidden());
  p.head.b2 = Vec::Zero(cfg.head_hidden());
  p.head.w3 = Mat::Zero(cfg.bottleneck_dim, cfg.head_hidden());
  p.head.b3 = Vec::Zero(cfg.bottleneck_dim);
  p.head.last_v = Mat::Zero(cfg.proto_dim, cfg.bottleneck_dim);
  return p;
}

EncoderParams init_encoder(const EncoderConfig& cfg, Rng& rng) {
  EncoderParams p = EncoderParams::zeros(cfg);
  constexpr double std_dev = 0.02;
  for (Index i = 0; i < p.cls_token.size(); ++i) p.cls_token(i) = rng.trunc_normal(0.0, std_dev);
  init_mat(p.patch_weight, rng, std_dev);
  init_mat(p.pos_grid, rng, std_dev);
  for (auto& b : p.blocks) {
    b.ln1_g.setOnes();
    b.ln2_g.setOnes();
    init_mat(b.wq, rng, std_dev);
    init_mat(b.wk, rng, std_dev);
    init_mat(b.wv, rng, std_dev);
    init_mat(b.wo, rng, std_dev);
    init_mat(b.w1, rng, std_dev);
    init_mat(b.w2, rng, std_dev);
  }
  p.final_ln_g.setOnes();
  init_mat(p.head.w1, rng, std_dev);
  init_mat(p.head.w2, rng, std_dev);
  init_mat(p.head.w3, rng, std_dev);
  init_mat(p.head.last_v, rng, std_dev);
  return p;
}

std::vector<ParamRef> param_refs(EncoderParams& p) {
  std::vector<ParamRef> refs;
  auto add = [&](const std::string& name, const std::string& group, bool decay, auto& m) {
    refs.push_back({name, group, decay, m.data(), m.rows(), m.cols()});
  };
  add("cls_token", "patch_proj", true, p.cls_token);
  add("patch_weight", "patch_proj", true, p.patch_weight);
  add("patch_bias", "patch_proj", false, p.patch_bias);
  add("pos_grid", "pos_grid", true, p.pos_grid);
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    auto& b = p.blocks[i];
    const std::string pre = "block" + std::to_string(i) + ".";
    add(pre + "ln1_g", "attention", false, b.ln1_g);
    add(pre + "ln1_b", "attention", false, b.ln1_b);
    add(pre + "wq", "attention", true, b.wq);
    add(pre + "wk", "attention", true, b.wk);
    add(pre + "wv", "attention", true, b.wv);
    add(pre + "wo", "attention", true, b.wo);
    add(pre + "bq", "attention", false, b.bq);
    add(pre + "bk", "attention", false, b.bk);
    add(pre + "bv", "attention", false, b.bv);
    add(pre + "bo", "attention", false, b.bo);
    add(pre + "ln2_g", "mlp", false, b.ln2_g);
    add(pre + "ln2_b", "mlp", false, b.ln2_b);
    add(pre + "w1", "mlp", true, b.w1);
    add(pre + "b1", "mlp", false, b.b1);
    add(pre + "w2", "mlp", true, b.w2);
    add(pre + "b2", "mlp", false, b.b2);
  }
  add("final_ln_g", "head", false, p.final_ln_g);
  add("final_ln_b", "head", false, p.final_ln_b);
  add("head.w1", "head", true, p.head.w1);
  add("head.b1", "head", false, p.head.b1);
  add("head.w2", "head", true, p.head.w2);
  add("head.b2", "head", false, p.head.b2);
  add("head.w3", "head", true, p.head.w3);
  add("head.b3", "head", false, p.head.b3);
  add("head.last_v", "head", true, p.head.last_v);
  return refs;
}

std::uint64_t param_fingerprint(const EncoderParams& p) {
  auto refs = param_refs(const_cast<EncoderParams&>(p));
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& r : refs) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(r.data);
    for (Index i = 0; i < r.size() * static_cast<Index>(sizeof(double)); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  }
  return h;
}

Mat AttentionMask::bias() const {
  Mat b(allowed.rows(), allowed.cols());
  for (Index i = 0; i < allowed.rows(); ++i)
    for (Index j = 0; j < allowed.cols(); ++j) b(i, j) = allowed(i, j) ? 0.0 : kMaskBias;
  return b;
}

AttentionMask build_attention_mask(int n_patches, int n_ref, bool ref_attends_class) {
  if (n_patches < 1 || n_ref < 0) throw std::invalid_argument("bad attention mask sizes");
  const int t = 1 + n_patches + n_ref;
  AttentionMask m;
  m.allowed.setConstant(t, t, false);
  const int core = 1 + n_patches;
  // Class and patch rows: full self-attention among class + patch columns.
  for (int q = 0; q < core; ++q)
    for (int k = 0; k < core; ++k) m.allowed(q, k) = true;
  // Reference rows: queries over class + patch columns only.
  for (int q = core; q < t; ++q) {
    for (int k = ref_attends_class ? 0 : 1; k < core; ++k) m.allowed(q, k) = true;
  }
  return m;
}

BicubicTaps bicubic_taps(int grid_side, double u, double v) {
  if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument("relative coordinate outside [0,1]^2");
  }
  const auto axis = [grid_side](double coord, std::array<Index, 4>& idx, std::array<double, 4>& w) {
    const double g = coord * grid_side - 0.5;
    const double base = std::floor(g);
    const double t = g - base;
    w = cubic_weights(t);
    for (int m = 0; m < 4; ++m) {
      idx[static_cast<std::size_t>(m)] =
          std::clamp<Index>(static_cast<Index>(base) + m - 1, 0, grid_side - 1);
    }
  };
  BicubicTaps taps;
  axis(u, taps.col_idx, taps.wx);
  axis(v, taps.row_idx, taps.wy);
  return taps;
}

Vec gather_taps(const Mat& grid, int grid_side, const BicubicTaps& t) {
  Vec out = Vec::Zero(grid.cols());
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const double w = t.wy[static_cast<std::size_t>(a)] * t.wx[static_cast<std::size_t>(b)];
      const Index node = t.row_idx[static_cast<std::size_t>(a)] * grid_side +
                         t.col_idx[static_cast<std::size_t>(b)];
      out += w * grid.row(node).transpose();
    }
  }
  return out;
}

void scatter_taps(Mat& grid_grad, int grid_side, const BicubicTaps& t, const Vec& g) {
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const double w = t.wy[static_cast<std::size_t>(a)] * t.wx[static_cast<std::size_t>(b)];
      const Index node = t.row_idx[static_cast<std::size_t>(a)] * grid_side +
                         t.col_idx[static_cast<std::size_t>(b)];
      grid_grad.row(node) += w * g.transpose();
    }
  }
}

Vec interpolate_pos_embed(const Mat& grid, int grid_side, double u, double v) {
  if (grid.rows() != static_cast<Index>(grid_side) * grid_side) {
    throw std::invalid_argument("grid rows do not match grid_side^2");
  }
  return gather_taps(grid, grid_side, bicubic_taps(grid_side, u, v));
}

Mat patchify(const EncoderParams& p, const Image& pixels, Mat* pixels_out,
             std::vector<BicubicTaps>* taps_out) {
  const auto& cfg = p.cfg;
  const int res = static_cast<int>(pixels.height());
  if (res != static_cast<int>(pixels.width()) || res % cfg.patch_size != 0) {
    throw std::invalid_argument("view resolution must be square and divisible by patch_size");
  }
  const int ps = cfg.patch_size;
  const int gv = res / ps;
  const int n = gv * gv;
  const int g = cfg.grid();
  const bool native = (gv == g);

  Mat patch_pixels(n, cfg.patch_dim());
  for (int pi = 0; pi < gv; ++pi) {
    for (int pj = 0; pj < gv; ++pj) {
      const int row = pi * gv + pj;
      for (int ch = 0; ch < 3; ++ch) {
        for (int r = 0; r < ps; ++r)
          for (int c = 0; c < ps; ++c)
            patch_pixels(row, ch * ps * ps + r * ps + c) =
                pixels.c[static_cast<std::size_t>(ch)](pi * ps + r, pj * ps + c);
      }
    }
  }

  Mat emb = patch_pixels * p.patch_weight.transpose();
  emb.rowwise() += p.patch_bias.transpose();

  if (native) {
    emb += p.pos_grid;
    if (taps_out) taps_out->clear();
  } else {
    if (taps_out) taps_out->resize(static_cast<std::size_t>(n));
    for (int pi = 0; pi < gv; ++pi) {
      for (int pj = 0; pj < gv; ++pj) {
        const int row = pi * gv + pj;
        const auto taps = bicubic_taps(g, (pj + 0.5) / gv, (pi + 0.5) / gv);
        emb.row(row) += gather_taps(p.pos_grid, g, taps).transpose();
        if (taps_out) (*taps_out)[static_cast<std::size_t>(row)] = taps;
      }
    }
  }
  if (pixels_out) *pixels_out = std::move(patch_pixels);
  return emb;
}

EncoderOutput encoder_forward(const EncoderParams& p, const Image& pixels,
                              const std::vector<Eigen::Vector2d>& ref_rels, ForwardCache& cache) {
  const auto& cfg = p.cfg;
  const int d = cfg.embed_dim;
  const int heads = cfg.heads;
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Mat emb = patchify(p, pixels, &cache.patch_pixels, &cache.patch_taps);
  const int n = static_cast<int>(emb.rows());
  const int r = static_cast<int>(ref_rels.size());
  const int t = 1 + n + r;
  cache.n_patches = n;
  cache.n_ref = r;
  cache.view_grid = static_cast<int>(std::sqrt(static_cast<double>(n)) + 0.5);

  cache.tokens.resize(t, d);
  cache.tokens.row(0) = p.cls_token.transpose();
  cache.tokens.middleRows(1, n) = emb;
  cache.ref_taps.resize(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) {
    cache.ref_taps[static_cast<std::size_t>(i)] =
        bicubic_taps(cfg.grid(), ref_rels[static_cast<std::size_t>(i)].x(),
                     ref_rels[static_cast<std::size_t>(i)].y());
    cache.tokens.row(1 + n + i) =
        gather_taps(p.pos_grid, cfg.grid(), cache.ref_taps[static_cast<std::size_t>(i)])
            .transpose();
  }

  cache.mask_bias = build_attention_mask(n, r, cfg.ref_attends_class).bias();

  cache.blocks.resize(p.blocks.size());
  Mat x = cache.tokens;
  for (std::size_t bi = 0; bi < p.blocks.size(); ++bi) {
    const BlockParams& bp = p.blocks[bi];
    BlockCache& bc = cache.blocks[bi];
    bc.x_in = x;
    bc.ln1_out = layer_norm(x, bp.ln1_g, bp.ln1_b, bc.ln1);
    bc.q = linear(bc.ln1_out, bp.wq, bp.bq);
    bc.k = linear(bc.ln1_out, bp.wk, bp.bk);
    bc.v = linear(bc.ln1_out, bp.wv, bp.bv);
    bc.attn.resize(static_cast<std::size_t>(heads));
    bc.merged.resize(t, d);
    for (int h = 0; h < heads; ++h) {
      const auto qh = bc.q.middleCols(h * dh, dh);
      const auto kh = bc.k.middleCols(h * dh, dh);
      const auto vh = bc.v.middleCols(h * dh, dh);
      Mat scores = qh * kh.transpose() * scale + cache.mask_bias;
      bc.attn[static_cast<std::size_t>(h)] = softmax_rows(std::move(scores));
      bc.merged.middleCols(h * dh, dh) = bc.attn[static_cast<std::size_t>(h)] * vh;
    }
    bc.x_mid = x + linear(bc.merged, bp.wo, bp.bo);
    bc.ln2_out = layer_norm(bc.x_mid, bp.ln2_g, bp.ln2_b, bc.ln2);
    bc.mlp_pre = linear(bc.ln2_out, bp.w1, bp.b1);
    bc.mlp_act = gelu_mat(bc.mlp_pre);
    x = bc.x_mid + linear(bc.mlp_act, bp.w2, bp.b2);
  }

  cache.final_in = x;
  cache.features = layer_norm(x, p.final_ln_g, p.final_ln_b, cache.final_ln);

  Mat head_in(1 + r, d);
  head_in.row(0) = cache.features.row(0);
  for (int i = 0; i < r; ++i) head_in.row(1 + i) = cache.features.row(1 + n + i);
  const Mat logits = head_forward(p.head, head_in, cache.head);

  EncoderOutput out;
  out.cls_feat = cache.features.row(0).transpose();
  out.patch_feats = cache.features.middleRows(1, n);
  out.ref_feats = cache.features.middleRows(1 + n, r);
  out.cls_logits = logits.row(0).transpose();
  out.ref_logits = logits.bottomRows(r);
  if (!out.cls_logits.allFinite() || !out.patch_feats.allFinite() ||
      (r > 0 && !out.ref_logits.allFinite())) {
    throw DivergenceError("non-finite encoder activations");
  }
  return out;
}

Mat head_forward(const HeadParams& h, const Mat& rows, HeadCache& cache) {
  cache.in = rows;
  cache.h1 = linear(rows, h.w1, h.b1);
  cache.a1 = gelu_mat(cache.h1);
  cache.h2 = linear(cache.a1, h.w2, h.b2);
  cache.a2 = gelu_mat(cache.h2);
  cache.z = linear(cache.a2, h.w3, h.b3);
  cache.znorm = cache.z.rowwise().norm();
  cache.zn = cache.z;
  for (Index i = 0; i < cache.z.rows(); ++i) {
    if (cache.znorm(i) < kNormEps)
      cache.zn.row(i).setZero();
    else
      cache.zn.row(i) /= cache.znorm(i);
  }
  cache.wn_norm = h.last_v.rowwise().norm();
  cache.wn = h.last_v;
  for (Index i = 0; i < cache.wn.rows(); ++i) {
    if (cache.wn_norm(i) < kNormEps)
      cache.wn.row(i).setZero();
    else
      cache.wn.row(i) /= cache.wn_norm(i);
  }
  cache.logits = cache.zn * cache.wn.transpose();
  return cache.logits;
}

namespace {

/// Head backward: d_logits over the head rows -> d(head input rows),
/// accumulating head parameter grads.
Mat head_backward(const HeadParams& h, const HeadCache& c, const Mat& d_logits,
                  HeadParams& grads) {
  // Weight-normalized prototype layer.
  Mat dzn = d_logits * c.wn;                 // rows x bottleneck
  const Mat dwn = d_logits.transpose() * c.zn;  // proto x bottleneck
  for (Index i = 0; i < h.last_v.rows(); ++i) {
    if (c.wn_norm(i) < kNormEps) continue;
    const auto u = dwn.row(i);
    const auto w = c.wn.row(i);
    grads.last_v.row(i) += (u - (u.dot(w)) * w) / c.wn_norm(i);
  }

  // L2 normalization of the bottleneck rows.
  Mat dz = dzn;
  for (Index i = 0; i < dz.rows(); ++i) {
    if (c.znorm(i) < kNormEps) {
      dz.row(i).setZero();
    } else {
      const auto y = c.zn.row(i);
      dz.row(i) = (dzn.row(i) - dzn.row(i).dot(y) * y) / c.znorm(i);
    }
  }

  grads.w3 += dz.transpose() * c.a2;
  grads.b3 += dz.colwise().sum().transpose();
  Mat da2 = dz * h.w3;
  Mat dh2 = da2.array() * gelu_grad_mat(c.h2).array();
  grads.w2 += dh2.transpose() * c.a1;
  grads.b2 += dh2.colwise().sum().transpose();
  Mat da1 = dh2 * h.w2;
  Mat dh1 = da1.array() * gelu_grad_mat(c.h1).array();
  grads.w1 += dh1.transpose() * c.in;
  grads.b1 += dh1.colwise().sum().transpose();
  return dh1 * h.w1;
}

}  // namespace

void encoder_backward(const EncoderParams& p, const ForwardCache& cache, const Vec& d_cls_logits,
                      const Mat& d_ref_logits, EncoderParams& grads) {
  const auto& cfg = p.cfg;
  const int d = cfg.embed_dim;
  const int heads = cfg.heads;
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const int n = cache.n_patches;
  const int r = cache.n_ref;
  const int t = 1 + n + r;

  Mat d_logits(1 + r, cfg.proto_dim);
  d_logits.row(0) = d_cls_logits.transpose();
  if (r > 0) d_logits.bottomRows(r) = d_ref_logits;

  const Mat d_head_in = head_backward(p.head, cache.head, d_logits, grads.head);

  Mat d_features = Mat::Zero(t, d);
  d_features.row(0) = d_head_in.row(0);
  for (int i = 0; i < r; ++i) d_features.row(1 + n + i) = d_head_in.row(1 + i);

  Mat dx = layer_norm_backward(d_features, cache.final_ln, p.final_ln_g, grads.final_ln_g,
                               grads.final_ln_b);

  for (std::size_t bi = p.blocks.size(); bi-- > 0;) {
    const BlockParams& bp = p.blocks[bi];
    const BlockCache& bc = cache.blocks[bi];
    BlockParams& bg = grads.blocks[bi];

    // MLP branch.
    Mat dact = dx * bp.w2;
    bg.w2 += dx.transpose() * bc.mlp_act;
    bg.b2 += dx.colwise().sum().transpose();
    Mat dpre = dact.array() * gelu_grad_mat(bc.mlp_pre).array();
    bg.w1 += dpre.transpose() * bc.ln2_out;
    bg.b1 += dpre.colwise().sum().transpose();
    Mat d_ln2out = dpre * bp.w1;
    Mat d_x_mid = dx + layer_norm_backward(d_ln2out, bc.ln2, bp.ln2_g, bg.ln2_g, bg.ln2_b);

    // Attention branch.
    Mat d_merged = d_x_mid * bp.wo;
    bg.wo += d_x_mid.transpose() * bc.merged;
    bg.bo += d_x_mid.colwise().sum().transpose();

    Mat dq(t, d), dk(t, d), dv(t, d);
    for (int h = 0; h < heads; ++h) {
      const auto qh = bc.q.middleCols(h * dh, dh);
      const auto kh = bc.k.middleCols(h * dh, dh);
      const auto vh = bc.v.middleCols(h * dh, dh);
      const Mat& a = bc.attn[static_cast<std::size_t>(h)];
      const auto d_out_h = d_merged.middleCols(h * dh, dh);
      Mat da = d_out_h * vh.transpose();
      dv.middleCols(h * dh, dh) = a.transpose() * d_out_h;
      const Vec rs = (da.array() * a.array()).rowwise().sum();
      Mat ds = a.array() * (da.colwise() - rs).array();
      dq.middleCols(h * dh, dh) = ds * kh * scale;
      dk.middleCols(h * dh, dh) = ds.transpose() * qh * scale;
    }

    Mat d_ln1out = dq * bp.wq + dk * bp.wk + dv * bp.wv;
    bg.wq += dq.transpose() * bc.ln1_out;
    bg.bq += dq.colwise().sum().transpose();
    bg.wk += dk.transpose() * bc.ln1_out;
    bg.bk += dk.colwise().sum().transpose();
    bg.wv += dv.transpose() * bc.ln1_out;
    bg.bv += dv.colwise().sum().transpose();

    dx = d_x_mid + layer_norm_backward(d_ln1out, bc.ln1, bp.ln1_g, bg.ln1_g, bg.ln1_b);
  }

  // Token embeddings.
  grads.cls_token += dx.row(0).transpose();
  const auto d_emb = dx.middleRows(1, n);
  grads.patch_weight += d_emb.transpose() * cache.patch_pixels;
  grads.patch_bias += d_emb.colwise().sum().transpose();
  if (cache.patch_taps.empty()) {
    grads.pos_grid += d_emb;
  } else {
    for (int i = 0; i < n; ++i) {
      scatter_taps(grads.pos_grid, cfg.grid(), cache.patch_taps[static_cast<std::size_t>(i)],
                   d_emb.row(i).transpose());
    }
  }
  for (int i = 0; i < r; ++i) {
    scatter_taps(grads.pos_grid, cfg.grid(), cache.ref_taps[static_cast<std::size_t>(i)],
                 dx.row(1 + n + i).transpose());
  }
}

}  // namespace densedino
