#include "synct/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace synct {

Tensor ExclusionMask::to_tensor() const {
  Tensor t(1, h, w);
  for (std::size_t i = 0; i < m.size(); ++i) t[i] = m[i];
  return t;
}

void ExclusionMask::validate() const {
  if (m.size() != static_cast<std::size_t>(h) * w)
    throw std::invalid_argument("ExclusionMask: buffer size mismatch");
  for (auto v : m)
    if (v > 1) throw std::invalid_argument("ExclusionMask: non-binary mask");
}

ExclusionMask exclusion_mask(const LabelMap& label_mr, const LabelMap& label_ct) {
  if (label_mr.h != label_ct.h || label_mr.w != label_ct.w)
    throw std::invalid_argument("exclusion_mask: label dimensions differ");
  ExclusionMask u(label_mr.h, label_mr.w);
  for (std::size_t i = 0; i < u.m.size(); ++i)
    u.m[i] = (label_mr.cls[i] != kBackground || label_ct.cls[i] != kBackground) ? 0 : 1;
  return u;
}

namespace {
void check_same_shape(const Tensor& a, const Tensor& b, const char* who) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}
}  // namespace

double l1_loss(const Tensor& pred, const Tensor& target) {
  check_same_shape(pred, target, "l1_loss");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - target[i]);
  return s / static_cast<double>(pred.size());
}

double masked_l1_loss(const Tensor& pred, const Tensor& target, const ExclusionMask& u,
                      bool mean_over_included) {
  check_same_shape(pred, target, "masked_l1_loss");
  if (u.h != pred.h() || u.w != pred.w() || pred.c() != 1)
    throw std::invalid_argument("masked_l1_loss: mask dimension mismatch");
  u.validate();
  double s = 0.0;
  std::size_t included = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    s += u.m[i] * std::abs(pred[i] - target[i]);
    included += u.m[i];
  }
  if (mean_over_included) return included == 0 ? 0.0 : s / static_cast<double>(included);
  return s / static_cast<double>(pred.size());
}

double lsgan_d_loss(const Tensor& d_real, const Tensor& d_fake) {
  double sr = 0.0, sf = 0.0;
  for (std::size_t i = 0; i < d_real.size(); ++i) {
    const double d = d_real[i] - 1.0;
    sr += d * d;
  }
  for (std::size_t i = 0; i < d_fake.size(); ++i) sf += d_fake[i] * d_fake[i];
  return sr / static_cast<double>(d_real.size()) + sf / static_cast<double>(d_fake.size());
}

double lsgan_g_loss(const Tensor& d_fake) {
  double s = 0.0;
  for (std::size_t i = 0; i < d_fake.size(); ++i) {
    const double d = d_fake[i] - 1.0;
    s += d * d;
  }
  return s / static_cast<double>(d_fake.size());
}

double weighted_seg_ce(const Tensor& probs, const LabelMap& y, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("weighted_seg_ce: eps must be > 0");
  if (probs.h() != y.h || probs.w() != y.w)
    throw std::invalid_argument("weighted_seg_ce: dimension mismatch");
  const int c = probs.c(), plane = probs.plane();
  for (int p = 0; p < plane; ++p) {
    double s = 0.0;
    for (int ch = 0; ch < c; ++ch) s += probs[static_cast<std::size_t>(ch) * plane + p];
    if (std::abs(s - 1.0) > 1e-4)
      throw std::invalid_argument("weighted_seg_ce: probs not normalized");
  }
  std::vector<std::size_t> counts(c, 0);
  for (auto v : y.cls) {
    if (v >= c) throw std::invalid_argument("weighted_seg_ce: label class out of range");
    ++counts[v];
  }
  // loss = -(1/N) sum_p (N / n_c) log(p + eps) = -sum_p log(p + eps) / n_c
  double loss = 0.0;
  for (int p = 0; p < plane; ++p) {
    const std::uint8_t cls = y.cls[p];
    const double pr = probs[static_cast<std::size_t>(cls) * plane + p];
    loss -= std::log(pr + eps) / static_cast<double>(counts[cls]);
  }
  return loss;
}

double joint_objective(double gan_g, double l_exc, double lambda) {
  return gan_g + lambda * l_exc;
}

LossReport& LossReport::operator+=(const LossReport& o) {
  gan_d += o.gan_d;
  gan_g += o.gan_g;
  l1 += o.l1;
  l_exc += o.l_exc;
  seg_ce += o.seg_ce;
  style += o.style;
  content += o.content;
  total += o.total;
  lambda = o.lambda;
  return *this;
}

LossReport& LossReport::operator*=(double s) {
  gan_d *= s;
  gan_g *= s;
  l1 *= s;
  l_exc *= s;
  seg_ce *= s;
  style *= s;
  content *= s;
  total *= s;
  return *this;
}

bool LossReport::all_finite() const {
  for (double v : {gan_d, gan_g, l1, l_exc, seg_ce, style, content, total})
    if (!std::isfinite(v)) return false;
  return true;
}

namespace ops {

int l1(ad::Tape& t, int pred, const Tensor& target) {
  return ad::mean_abs_diff(t, pred, target);
}

int masked_l1(ad::Tape& t, int pred, const Tensor& target, const ExclusionMask& u) {
  u.validate();
  return ad::masked_mean_abs_diff(t, pred, target, u.to_tensor());
}

int lsgan_d(ad::Tape& t, int d_real, int d_fake) {
  const int real_term = ad::mean_sq_offset(t, d_real, 1.0);
  const int fake_term = ad::mean_sq_offset(t, d_fake, 0.0);
  return ad::weighted_sum(t, {{real_term, 1.0}, {fake_term, 1.0}});
}

int lsgan_g(ad::Tape& t, int d_fake) { return ad::mean_sq_offset(t, d_fake, 1.0); }

int seg_ce(ad::Tape& t, int probs, const LabelMap& y, double eps) {
  const Tensor& pv = t.val(probs);
  // forward value must equal the pure implementation (it validates, too)
  const double value = weighted_seg_ce(pv, y, eps);
  const int c = pv.c(), plane = pv.plane();
  std::vector<double> inv_counts(c, 0.0);
  {
    std::vector<std::size_t> counts(c, 0);
    for (auto v : y.cls) ++counts[v];
    for (int ch = 0; ch < c; ++ch)
      if (counts[ch] > 0) inv_counts[ch] = 1.0 / static_cast<double>(counts[ch]);
  }
  Tensor out(1, 1, 1);
  out[0] = value;
  const int id = t.push(std::move(out), t.needs_grad(probs));
  if (t.needs_grad(id)) {
    auto ycopy = y.cls;
    t.set_back(id, [&t, probs, id, eps, plane, inv_counts, ycopy = std::move(ycopy)] {
      const double g = t.grad_of(id)[0];
      const Tensor& pv = t.val(probs);
      Tensor& gp = t.grad_of(probs);
      for (int p = 0; p < plane; ++p) {
        const std::uint8_t cls = ycopy[p];
        const std::size_t i = static_cast<std::size_t>(cls) * plane + p;
        gp[i] -= g * inv_counts[cls] / (pv[i] + eps);
      }
    });
  }
  return id;
}

}  // namespace ops

}  // namespace synct
