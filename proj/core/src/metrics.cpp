#include "synct/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace synct {

namespace {
void check_dims(const ImageSlice& a, const ImageSlice& b, const char* who) {
  if (a.h != b.h || a.w != b.w) throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}
}  // namespace

std::optional<double> mae(const ImageSlice& a, const ImageSlice& b, const Mask* region) {
  check_dims(a, b, "mae");
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.px.size(); ++i) {
    if (region != nullptr && !region->v[i]) continue;
    s += std::abs(static_cast<double>(a.px[i]) - static_cast<double>(b.px[i]));
    ++n;
  }
  if (n == 0) return std::nullopt;
  return s / static_cast<double>(n);
}

Mask bone_region(const ImageSlice& ct_real, const ImageSlice& ct_syn, float threshold_hu) {
  check_dims(ct_real, ct_syn, "bone_region");
  Mask m(ct_real.h, ct_real.w);
  for (std::size_t i = 0; i < m.v.size(); ++i)
    m.v[i] = (ct_real.px[i] >= threshold_hu || ct_syn.px[i] >= threshold_hu) ? 1 : 0;
  return m;
}

Mask organ_intersection_region(const LabelMap& label_mr, const LabelMap& label_ct,
                               std::uint8_t organ) {
  if (label_mr.h != label_ct.h || label_mr.w != label_ct.w)
    throw std::invalid_argument("organ_intersection_region: dimension mismatch");
  Mask m(label_mr.h, label_mr.w);
  for (std::size_t i = 0; i < m.v.size(); ++i)
    m.v[i] = (label_mr.cls[i] == organ && label_ct.cls[i] == organ) ? 1 : 0;
  return m;
}

Mask gas_identify(const ImageSlice& ct) {
  const int h = ct.h, w = ct.w;
  // air candidates at <= -500 HU; the component touching the border is exterior
  Mask air(h, w);
  for (std::size_t i = 0; i < air.v.size(); ++i) air.v[i] = ct.px[i] <= -500.f ? 1 : 0;
  std::vector<int> labels;
  connected_components(air, labels);
  std::vector<bool> exterior(static_cast<std::size_t>(h) * w + 1, false);
  for (int x = 0; x < w; ++x) {
    if (air.at(0, x)) exterior[labels[x]] = true;
    if (air.at(h - 1, x)) exterior[labels[static_cast<std::size_t>(h - 1) * w + x]] = true;
  }
  for (int y = 0; y < h; ++y) {
    if (air.at(y, 0)) exterior[labels[static_cast<std::size_t>(y) * w]] = true;
    if (air.at(y, w - 1)) exterior[labels[static_cast<std::size_t>(y) * w + w - 1]] = true;
  }
  Mask interior(h, w);
  for (std::size_t i = 0; i < interior.v.size(); ++i)
    interior.v[i] = (air.v[i] && !exterior[labels[i]]) ? 1 : 0;
  return close_cross(open_cross(interior));
}

std::vector<double> to_unit_range(const ImageSlice& img) {
  std::vector<double> out(img.px.size());
  if (img.modality == Modality::CT) {
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = (static_cast<double>(img.px[i]) - kHuLo) / (kHuHi - kHuLo);
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = img.px[i];
  }
  return out;
}

double psnr_unit(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("psnr: dimension mismatch");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.size());
  if (mse < 1e-10) return 100.0;
  return 10.0 * std::log10(1.0 / mse);
}

double psnr(const ImageSlice& a, const ImageSlice& b) {
  check_dims(a, b, "psnr");
  return psnr_unit(to_unit_range(a), to_unit_range(b));
}

double ssim_unit(const std::vector<double>& a, const std::vector<double>& b, int h, int w) {
  if (a.size() != b.size() || a.size() != static_cast<std::size_t>(h) * w)
    throw std::invalid_argument("ssim: dimension mismatch");
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  if (h < kWin || w < kWin) throw std::invalid_argument("ssim: image smaller than the window");

  double kernel[kWin][kWin];
  double ksum = 0.0;
  for (int y = 0; y < kWin; ++y)
    for (int x = 0; x < kWin; ++x) {
      const double dy = y - kWin / 2, dx = x - kWin / 2;
      kernel[y][x] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
      ksum += kernel[y][x];
    }
  for (auto& row : kernel)
    for (double& v : row) v /= ksum;

  double total = 0.0;
  std::size_t n = 0;
  for (int oy = 0; oy + kWin <= h; ++oy)
    for (int ox = 0; ox + kWin <= w; ++ox) {
      double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
      for (int y = 0; y < kWin; ++y)
        for (int x = 0; x < kWin; ++x) {
          const double k = kernel[y][x];
          const double va = a[static_cast<std::size_t>(oy + y) * w + ox + x];
          const double vb = b[static_cast<std::size_t>(oy + y) * w + ox + x];
          mu_a += k * va;
          mu_b += k * vb;
          aa += k * va * va;
          bb += k * vb * vb;
          ab += k * va * vb;
        }
      const double var_a = aa - mu_a * mu_a;
      const double var_b = bb - mu_b * mu_b;
      const double cov = ab - mu_a * mu_b;
      const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
      const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
      total += num / den;
      ++n;
    }
  return total / static_cast<double>(n);
}

double ssim(const ImageSlice& a, const ImageSlice& b) {
  check_dims(a, b, "ssim");
  return ssim_unit(to_unit_range(a), to_unit_range(b), a.h, a.w);
}

double dsc(const Mask& pred, const Mask& gt) {
  if (pred.h != gt.h || pred.w != gt.w) throw std::invalid_argument("dsc: dimension mismatch");
  std::size_t inter = 0, total = 0;
  for (std::size_t i = 0; i < pred.v.size(); ++i) {
    inter += pred.v[i] & gt.v[i];
    total += pred.v[i] + gt.v[i];
  }
  if (total == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

double iou(const Mask& a, const Mask& b) {
  if (a.h != b.h || a.w != b.w) throw std::invalid_argument("iou: dimension mismatch");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    inter += a.v[i] & b.v[i];
    uni += a.v[i] | b.v[i];
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace synct
