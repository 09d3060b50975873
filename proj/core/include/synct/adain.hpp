#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

#include "synct/morphology.hpp"
#include "synct/networks.hpp"

namespace synct {

class EmptyMaskError : public std::runtime_error {
 public:
  explicit EmptyMaskError(const std::string& what) : std::runtime_error(what) {}
};
class DegenerateMaskError : public std::runtime_error {
 public:
  explicit DegenerateMaskError(const std::string& what) : std::runtime_error(what) {}
};

struct ChannelStats {
  std::vector<double> mean, stddev;
  int channels() const { return static_cast<int>(mean.size()); }
};

// Per-channel mean/std over all pixels.
ChannelStats channel_statistics(const Tensor& feats);
// Statistics restricted to mask-positive locations (mask at feature
// resolution). Throws EmptyMaskError on zero positive pixels and
// DegenerateMaskError on a single-pixel mask.
ChannelStats masked_statistics(const Tensor& feats, const Mask& mask);

struct AdainResult {
  Tensor out;
  std::vector<int> degenerate_channels;  // channels whose content std fell below eps
};

// Aligns the per-channel mean/std of content to those of style:
//   out_c = sigma_style(c) * (content_c - mu_content(c)) / sigma_content(c) + mu_style(c)
// A zero-variance content channel is guarded by eps in the denominator and
// flagged in degenerate_channels.
AdainResult adain(const Tensor& content_feats, const Tensor& style_feats, double eps = 1e-8);
AdainResult adain_with_stats(const Tensor& content_feats, const ChannelStats& content_stats,
                             const ChannelStats& style_stats, double eps = 1e-8);

// organ identifiers for the three restyled structures
inline constexpr int kOrganCount = 3;
inline constexpr std::array<std::uint8_t, kOrganCount> kOrganClasses = {kBladder, kRectum,
                                                                        kRectalGas};
inline constexpr std::array<const char*, kOrganCount> kOrganKeys = {"B", "R", "G"};
int organ_index(std::uint8_t cls);  // class id -> 0..2, throws on background

// Reference style per organ: masked per-layer encoder statistics averaged
// over the CT exemplars of the training split.
struct OrganStyle {
  std::array<ChannelStats, 3> layer_stats;
  int n_exemplars = 0;
  bool available() const { return n_exemplars > 0; }
};
struct OrganStyleBank {
  std::array<OrganStyle, kOrganCount> organs;
};

// One style-transfer unit: frozen random encoder + trainable decoder.
struct AdaonModule {
  StyleEncoder f;
  StyleDecoder g;
  bool trained = false;

  AdaonModule() = default;
  explicit AdaonModule(const std::string& name) : f(name + ".f"), g(name + ".g") {}
  std::vector<ad::Param*> params();
  std::string arch() const { return f.arch() + g.arch(); }
};

struct MaskedPatch {
  Tensor image;  // normalized image, zero outside the mask
  Mask mask;
};

struct AdaonTrainConfig {
  int steps = 400;
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999;
  double style_weight = 1.0;
};

struct AdaonTrainResult {
  std::vector<double> content_curve, style_curve;
  bool aborted_non_finite = false;
};

// Computes the bank entry (masked layer statistics averaged over style
// exemplars) for one organ.
OrganStyle build_organ_style(StyleEncoder& f, const std::vector<MaskedPatch>& style_exemplars);

// Trains the decoder so g(adain(f(content), style_stats)) reproduces the
// organ's CT appearance: content loss ||f(out) - t||^2 plus masked per-layer
// style-statistic losses. On a non-finite loss the last finite parameters are
// restored and the result is marked aborted.
AdaonTrainResult train_adaon(AdaonModule& module, const OrganStyle& style,
                             const std::vector<MaskedPatch>& content_exemplars,
                             const AdaonTrainConfig& config);

struct LocalStreamOutput {
  std::array<Tensor, kOrganCount> per_organ;  // full-frame, zero outside each mask (empty if unused)
  Tensor combined;                            // element-wise sum of the per-organ outputs
  std::array<Mask, kOrganCount> masks;
  Mask union_mask;
};

// Stylizes each organ region of the normalized MR and sums the results.
// pass_through=true copies MR intensities instead of restyling (ablation
// semantics); organs whose bank entry is missing or whose mask is too small
// to carry statistics also fall back to pass-through.
LocalStreamOutput local_stream(const Tensor& mr_norm,
                               const std::array<Mask, kOrganCount>& organ_masks,
                               const OrganStyleBank& bank,
                               std::array<AdaonModule, kOrganCount>& modules, bool pass_through);

// Masked replacement: organ pixels come from the local stream, everything
// else passes the global stream through bit-identically.
Tensor fuse(const Tensor& global_out, const LocalStreamOutput& local, const Mask& organ_union_mask);

// Tape version used during training: gradients flow into the global branch
// only (the local stream is constant within a step).
int fuse_op(ad::Tape& t, int global_node, const Tensor& local_combined, const Mask& organ_union);

}  // namespace synct
