#include "synct/adain.hpp"

#include <cmath>

#include "synct/optim.hpp"

namespace synct {

ChannelStats channel_statistics(const Tensor& feats) {
  ChannelStats st;
  st.mean.resize(feats.c());
  st.stddev.resize(feats.c());
  const double inv_n = 1.0 / static_cast<double>(feats.plane());
  for (int c = 0; c < feats.c(); ++c) {
    const double* p = feats.channel(c);
    double mu = 0.0;
    for (int i = 0; i < feats.plane(); ++i) mu += p[i];
    mu *= inv_n;
    double var = 0.0;
    for (int i = 0; i < feats.plane(); ++i) {
      const double d = p[i] - mu;
      var += d * d;
    }
    st.mean[c] = mu;
    st.stddev[c] = std::sqrt(var * inv_n);
  }
  return st;
}

ChannelStats masked_statistics(const Tensor& feats, const Mask& mask) {
  if (mask.h != feats.h() || mask.w != feats.w())
    throw std::invalid_argument("masked_statistics: mask resolution mismatch");
  std::vector<int> idx;
  for (int i = 0; i < feats.plane(); ++i)
    if (mask.v[i]) idx.push_back(i);
  if (idx.empty()) throw EmptyMaskError("masked_statistics: empty mask");
  if (idx.size() == 1) throw DegenerateMaskError("masked_statistics: single-pixel mask");

  ChannelStats st;
  st.mean.resize(feats.c());
  st.stddev.resize(feats.c());
  const double inv_n = 1.0 / static_cast<double>(idx.size());
  for (int c = 0; c < feats.c(); ++c) {
    const double* p = feats.channel(c);
    double mu = 0.0;
    for (int i : idx) mu += p[i];
    mu *= inv_n;
    double var = 0.0;
    for (int i : idx) {
      const double d = p[i] - mu;
      var += d * d;
    }
    st.mean[c] = mu;
    st.stddev[c] = std::sqrt(var * inv_n);
  }
  return st;
}

AdainResult adain_with_stats(const Tensor& content_feats, const ChannelStats& content_stats,
                             const ChannelStats& style_stats, double eps) {
  if (content_stats.channels() != content_feats.c() ||
      style_stats.channels() != content_feats.c())
    throw std::invalid_argument("adain: channel count mismatch");
  AdainResult res;
  res.out = Tensor(content_feats.c(), content_feats.h(), content_feats.w());
  for (int c = 0; c < content_feats.c(); ++c) {
    const double mu_c = content_stats.mean[c], sd_c = content_stats.stddev[c];
    const double mu_s = style_stats.mean[c], sd_s = style_stats.stddev[c];
    if (sd_c <= eps) res.degenerate_channels.push_back(c);
    const double scale = sd_s / (sd_c + eps);
    const double* src = content_feats.channel(c);
    double* dst = res.out.channel(c);
    for (int i = 0; i < content_feats.plane(); ++i) dst[i] = scale * (src[i] - mu_c) + mu_s;
  }
  return res;
}

AdainResult adain(const Tensor& content_feats, const Tensor& style_feats, double eps) {
  if (content_feats.c() != style_feats.c())
    throw std::invalid_argument("adain: channel count mismatch");
  return adain_with_stats(content_feats, channel_statistics(content_feats),
                          channel_statistics(style_feats), eps);
}

int organ_index(std::uint8_t cls) {
  for (int i = 0; i < kOrganCount; ++i)
    if (kOrganClasses[i] == cls) return i;
  throw std::invalid_argument("organ_index: not an organ class");
}

std::vector<ad::Param*> AdaonModule::params() {
  std::vector<ad::Param*> ps = f.params();
  for (auto* p : g.params()) ps.push_back(p);
  return ps;
}

namespace {

// per-layer feature-resolution masks (encoder resolutions: full, /2, /4)
std::array<Mask, 3> layer_masks(const Mask& pixel_mask) {
  return {pixel_mask, downsample_nn(pixel_mask, 2), downsample_nn(pixel_mask, 4)};
}

bool stats_usable(const Mask& m) { return m.count() >= 2; }

}  // namespace

OrganStyle build_organ_style(StyleEncoder& f, const std::vector<MaskedPatch>& style_exemplars) {
  OrganStyle style;
  for (const auto& ex : style_exemplars) {
    const auto masks = layer_masks(ex.mask);
    if (!stats_usable(masks[2])) continue;  // too small to carry statistics at /4
    ad::Tape t(false);
    const auto feats = f.forward(t, t.leaf(ex.image));
    for (int l = 0; l < 3; ++l) {
      const ChannelStats st = masked_statistics(t.val(feats[l]), masks[l]);
      auto& acc = style.layer_stats[l];
      if (acc.mean.empty()) {
        acc = st;
      } else {
        for (std::size_t c = 0; c < st.mean.size(); ++c) {
          acc.mean[c] += st.mean[c];
          acc.stddev[c] += st.stddev[c];
        }
      }
    }
    ++style.n_exemplars;
  }
  if (style.n_exemplars > 1) {
    const double inv = 1.0 / style.n_exemplars;
    for (auto& st : style.layer_stats)
      for (std::size_t c = 0; c < st.mean.size(); ++c) {
        st.mean[c] *= inv;
        st.stddev[c] *= inv;
      }
  }
  return style;
}

namespace {

Tensor stats_tensor(const std::vector<double>& v) {
  Tensor t(static_cast<int>(v.size()), 1, 1);
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = v[i];
  return t;
}

}  // namespace

AdaonTrainResult train_adaon(AdaonModule& module, const OrganStyle& style,
                             const std::vector<MaskedPatch>& content_exemplars,
                             const AdaonTrainConfig& config) {
  if (!style.available()) throw std::invalid_argument("train_adaon: no style exemplars");
  if (content_exemplars.empty()) throw std::invalid_argument("train_adaon: no content exemplars");

  AdaonTrainResult result;
  auto g_params = module.g.params();
  Adam opt(g_params, {config.lr, config.beta1, config.beta2, 1e-8});

  // pre-encode content exemplars (the encoder is frozen)
  struct Prepared {
    Tensor t_target;  // adain output at the bottleneck
    std::array<Mask, 3> masks;
  };
  std::vector<Prepared> prepared;
  for (const auto& ex : content_exemplars) {
    const auto masks = layer_masks(ex.mask);
    if (!stats_usable(masks[2])) continue;
    ad::Tape t(false);
    const auto feats = module.f.forward(t, t.leaf(ex.image));
    const ChannelStats cstats = masked_statistics(t.val(feats[2]), masks[2]);
    Prepared p;
    p.t_target = adain_with_stats(t.val(feats[2]), cstats, style.layer_stats[2]).out;
    p.masks = masks;
    prepared.push_back(std::move(p));
  }
  if (prepared.empty()) throw std::invalid_argument("train_adaon: content masks too small");

  const std::array<Tensor, 3> style_mu = {stats_tensor(style.layer_stats[0].mean),
                                          stats_tensor(style.layer_stats[1].mean),
                                          stats_tensor(style.layer_stats[2].mean)};
  const std::array<Tensor, 3> style_sd = {stats_tensor(style.layer_stats[0].stddev),
                                          stats_tensor(style.layer_stats[1].stddev),
                                          stats_tensor(style.layer_stats[2].stddev)};

  std::vector<Tensor> last_good;
  auto snapshot = [&] {
    last_good.clear();
    for (auto* p : g_params) last_good.push_back(p->v);
  };
  snapshot();

  for (int step = 0; step < config.steps; ++step) {
    const Prepared& ex = prepared[static_cast<std::size_t>(step) % prepared.size()];

    ad::Tape t(true);
    const int t_in = t.leaf(ex.t_target, false);
    const int out = module.g.forward(t, t_in);
    const auto feats = module.f.forward(t, out);

    const int content_loss = ad::mse_const(t, feats[2], ex.t_target);
    std::vector<std::pair<int, double>> style_terms;
    for (int l = 0; l < 3; ++l) {
      const Tensor mask_t = to_tensor(ex.masks[l]);
      const int mu = ad::channel_mean(t, feats[l], &mask_t);
      const int sd = ad::channel_std(t, feats[l], &mask_t);
      style_terms.emplace_back(ad::mse_const(t, mu, style_mu[l]), 1.0);
      style_terms.emplace_back(ad::mse_const(t, sd, style_sd[l]), 1.0);
    }
    const int style_loss = ad::weighted_sum(t, style_terms);
    const int total = ad::weighted_sum(t, {{content_loss, 1.0}, {style_loss, config.style_weight}});

    const double cv = t.val(content_loss)[0];
    const double sv = t.val(style_loss)[0];
    if (!std::isfinite(cv) || !std::isfinite(sv)) {
      for (std::size_t i = 0; i < g_params.size(); ++i) g_params[i]->v = last_good[i];
      result.aborted_non_finite = true;
      return result;
    }
    result.content_curve.push_back(cv);
    result.style_curve.push_back(sv);

    snapshot();
    opt.zero_grad();
    t.backward(total);
    opt.step();
  }
  module.trained = true;
  return result;
}

LocalStreamOutput local_stream(const Tensor& mr_norm,
                               const std::array<Mask, kOrganCount>& organ_masks,
                               const OrganStyleBank& bank,
                               std::array<AdaonModule, kOrganCount>& modules, bool pass_through) {
  // masks must be pairwise disjoint
  for (int a = 0; a < kOrganCount; ++a)
    for (int b = a + 1; b < kOrganCount; ++b) {
      if (organ_masks[a].v.empty() || organ_masks[b].v.empty()) continue;
      for (std::size_t i = 0; i < organ_masks[a].v.size(); ++i)
        if (organ_masks[a].v[i] && organ_masks[b].v[i])
          throw std::invalid_argument("local_stream: overlapping organ masks");
    }

  LocalStreamOutput out;
  out.combined = Tensor(1, mr_norm.h(), mr_norm.w());
  out.union_mask = Mask(mr_norm.h(), mr_norm.w());
  out.masks = organ_masks;

  for (int o = 0; o < kOrganCount; ++o) {
    const Mask& mask = organ_masks[o];
    if (mask.v.empty() || mask.count() == 0) continue;

    Tensor content(1, mr_norm.h(), mr_norm.w());
    for (std::size_t i = 0; i < content.size(); ++i) content[i] = mr_norm[i] * mask.v[i];

    Tensor stylized;
    const Mask feat_mask = downsample_nn(mask, 4);
    const bool can_stylize = !pass_through && bank.organs[o].available() &&
                             modules[o].trained && feat_mask.count() >= 2;
    if (can_stylize) {
      ad::Tape t(false);
      const auto feats = modules[o].f.forward(t, t.leaf(content));
      const ChannelStats cstats = masked_statistics(t.val(feats[2]), feat_mask);
      const Tensor target =
          adain_with_stats(t.val(feats[2]), cstats, bank.organs[o].layer_stats[2]).out;
      ad::Tape t2(false);
      stylized = t2.val(modules[o].g.forward(t2, t2.leaf(target)));
    } else {
      stylized = content;  // pass-through keeps MR intensities in place
    }

    Tensor organ_out(1, mr_norm.h(), mr_norm.w());
    for (std::size_t i = 0; i < organ_out.size(); ++i) organ_out[i] = stylized[i] * mask.v[i];
    out.combined += organ_out;
    out.per_organ[o] = std::move(organ_out);
    for (std::size_t i = 0; i < out.union_mask.v.size(); ++i) out.union_mask.v[i] |= mask.v[i];
  }
  return out;
}

Tensor fuse(const Tensor& global_out, const LocalStreamOutput& local, const Mask& organ_union_mask) {
  if (organ_union_mask.h != global_out.h() || organ_union_mask.w != global_out.w() ||
      !global_out.same_shape(local.combined))
    throw std::invalid_argument("fuse: dimension mismatch");
  Tensor out = global_out;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (organ_union_mask.v[i]) out[i] = local.combined[i];
  return out;
}

int fuse_op(ad::Tape& t, int global_node, const Tensor& local_combined, const Mask& organ_union) {
  const Tensor& g = t.val(global_node);
  Tensor keep(1, g.h(), g.w());
  Tensor local_masked = local_combined;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    keep[i] = organ_union.v[i] ? 0.0 : 1.0;
    local_masked[i] = organ_union.v[i] ? local_combined[i] : 0.0;
  }
  const int masked_global = ad::mul_const(t, global_node, keep);
  return ad::add(t, masked_global, t.leaf(std::move(local_masked)));
}

}  // namespace synct
