#pragma once

#include <cstdint>
#include <vector>

#include "synct/phantom.hpp"

namespace synct {

// Binary pixel mask with 4-connected morphology helpers.
struct Mask {
  int h = 0, w = 0;
  std::vector<std::uint8_t> v;

  Mask() = default;
  Mask(int h_, int w_) : h(h_), w(w_), v(static_cast<std::size_t>(h_) * w_, 0) {}

  std::uint8_t& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
  std::uint8_t at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
  std::size_t count() const;
  bool empty_mask() const { return count() == 0; }
};

Mask mask_of_class(const LabelMap& lbl, std::uint8_t cls);
// union of all non-background classes
Mask organ_union(const LabelMap& lbl);

Mask mask_and(const Mask& a, const Mask& b);
Mask mask_or(const Mask& a, const Mask& b);

// 3x3 cross structuring element
Mask erode_cross(const Mask& m);
Mask dilate_cross(const Mask& m);
Mask open_cross(const Mask& m);
Mask close_cross(const Mask& m);

// 4-connected component labels (0 = off); returns the number of components
int connected_components(const Mask& m, std::vector<int>& labels);

// nearest-neighbor downsample by an integer factor (for feature-space masks)
Mask downsample_nn(const Mask& m, int factor);

Tensor to_tensor(const Mask& m);

}  // namespace synct
