#pragma once

#include <optional>

#include "synct/morphology.hpp"
#include "synct/phantom.hpp"

namespace synct {

// Mean absolute error in HU over a region (all pixels when mask is null).
// Empty regions yield nullopt ("reported as absent, not zero").
std::optional<double> mae(const ImageSlice& a, const ImageSlice& b, const Mask* region = nullptr);

// union of the thresholded masks of both CTs (inclusive >= threshold)
Mask bone_region(const ImageSlice& ct_real, const ImageSlice& ct_syn, float threshold_hu = 150.f);

// (label_mr == organ) AND (label_ct == organ)
Mask organ_intersection_region(const LabelMap& label_mr, const LabelMap& label_ct,
                               std::uint8_t organ);

// Gas recovery from a CT image: <= -500 HU inside the body interior, then
// morphological opening and closing with a 3x3 cross.
Mask gas_identify(const ImageSlice& ct);

// PSNR on the normalized [0,1] representation (data range 1), capped at
// 100 dB when MSE < 1e-10.
double psnr(const ImageSlice& a, const ImageSlice& b);
double psnr_unit(const std::vector<double>& a, const std::vector<double>& b);

// SSIM, 11x11 Gaussian window (sigma 1.5), k1=0.01, k2=0.03, data range 1,
// averaged over valid window positions.
double ssim(const ImageSlice& a, const ImageSlice& b);
double ssim_unit(const std::vector<double>& a, const std::vector<double>& b, int h, int w);

// Dice similarity coefficient; defined as 1.0 when both masks are empty.
double dsc(const Mask& pred, const Mask& gt);

// intersection-over-union companion (same empty-mask convention)
double iou(const Mask& a, const Mask& b);

// [0,1] representation used by psnr/ssim
std::vector<double> to_unit_range(const ImageSlice& img);

}  // namespace synct
