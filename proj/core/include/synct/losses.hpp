#pragma once

#include <cstdint>
#include <vector>

#include "synct/autodiff.hpp"
#include "synct/phantom.hpp"
#include "synct/tensor.hpp"

namespace synct {

// Binary inclusion mask: 1 = pixel participates in the reconstruction loss,
// 0 = excluded (the complement of the union of inconsistent regions).
struct ExclusionMask {
  int h = 0, w = 0;
  std::vector<std::uint8_t> m;

  ExclusionMask() = default;
  ExclusionMask(int h_, int w_) : h(h_), w(w_), m(static_cast<std::size_t>(h_) * w_, 1) {}
  static ExclusionMask all_ones(int h, int w) { return ExclusionMask(h, w); }

  std::uint8_t& at(int y, int x) { return m[static_cast<std::size_t>(y) * w + x]; }
  std::uint8_t at(int y, int x) const { return m[static_cast<std::size_t>(y) * w + x]; }
  Tensor to_tensor() const;
  // non-binary contents are a contract violation
  void validate() const;
};

// mask = complement of the union of non-background pixels of either label map
ExclusionMask exclusion_mask(const LabelMap& label_mr, const LabelMap& label_ct);

// mean absolute difference over all pixels
double l1_loss(const Tensor& pred, const Tensor& target);

// mean over ALL pixels of |u*pred - u*target|; excluded pixels contribute 0.
// mean_over_included switches the denominator to the included-pixel count
// (non-default alternative reading).
double masked_l1_loss(const Tensor& pred, const Tensor& target, const ExclusionMask& u,
                      bool mean_over_included = false);

// least-squares adversarial objectives on raw response maps
double lsgan_d_loss(const Tensor& d_real, const Tensor& d_fake);
double lsgan_g_loss(const Tensor& d_fake);

// frequency-weighted multi-class cross-entropy:
//   -(1/N) * sum_p w_{y(p)}^{-1} * log(probs[y(p)](p) + eps),  w_c = n_c / N.
// Classes absent from y contribute nothing. Throws if probs channel sums
// deviate from 1 by more than 1e-4, or eps <= 0.
double weighted_seg_ce(const Tensor& probs, const LabelMap& y, double eps = 1e-8);

// gan_g + lambda * l_exc
double joint_objective(double gan_g, double l_exc, double lambda = 10.0);

// Per-step / per-epoch loss summary. total follows the variant formula
// documented in train.hpp.
struct LossReport {
  double gan_d = 0, gan_g = 0, l1 = 0, l_exc = 0, seg_ce = 0, style = 0, content = 0, total = 0;
  double lambda = 10.0;

  LossReport& operator+=(const LossReport& o);
  LossReport& operator*=(double s);
  bool all_finite() const;
};

// ---- tape ops (training path); forward values equal the pure functions ----
namespace ops {
int l1(ad::Tape& t, int pred, const Tensor& target);
int masked_l1(ad::Tape& t, int pred, const Tensor& target, const ExclusionMask& u);
int lsgan_d(ad::Tape& t, int d_real, int d_fake);
int lsgan_g(ad::Tape& t, int d_fake);
int seg_ce(ad::Tape& t, int probs, const LabelMap& y, double eps = 1e-8);
}  // namespace ops

}  // namespace synct
