#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "synct/rng.hpp"
#include "synct/tensor.hpp"

namespace synct {

enum class Modality { MR, CT };

std::string to_string(Modality m);
Modality modality_from_string(const std::string& s);

// Single-channel 2D intensity grid. CT pixels are Hounsfield units in
// [-1000, 2000]; MR pixels are arbitrary units in [0, 1]. Pixels are stored
// as float32, the on-disk precision, so write->read round-trips bit-exactly.
struct ImageSlice {
  int h = 0, w = 0;
  Modality modality = Modality::MR;
  std::vector<float> px;

  ImageSlice() = default;
  ImageSlice(int h_, int w_, Modality m) : h(h_), w(w_), modality(m), px(static_cast<std::size_t>(h_) * w_, 0.f) {}
  float& at(int y, int x) { return px[static_cast<std::size_t>(y) * w + x]; }
  float at(int y, int x) const { return px[static_cast<std::size_t>(y) * w + x]; }
  // throws std::invalid_argument on shape/range/NaN violations
  void validate() const;
};

// organ class ids
inline constexpr std::uint8_t kBackground = 0;
inline constexpr std::uint8_t kBladder = 1;
inline constexpr std::uint8_t kRectum = 2;
inline constexpr std::uint8_t kRectalGas = 3;
inline constexpr int kNumClasses = 4;

struct LabelMap {
  int h = 0, w = 0;
  Modality source_modality = Modality::MR;
  std::vector<std::uint8_t> cls;

  LabelMap() = default;
  LabelMap(int h_, int w_, Modality m) : h(h_), w(w_), source_modality(m), cls(static_cast<std::size_t>(h_) * w_, 0) {}
  std::uint8_t& at(int y, int x) { return cls[static_cast<std::size_t>(y) * w + x]; }
  std::uint8_t at(int y, int x) const { return cls[static_cast<std::size_t>(y) * w + x]; }
  std::size_t count(std::uint8_t c) const;
  void validate() const;
};

struct EllipseSpec {
  double cx = 0, cy = 0, rx = 0, ry = 0;  // fractions of the image side
};

// Procedural pelvic phantom: body ellipse with bone (femoral heads + sacrum),
// bladder, rectum and optional rectal gas. Inconsistencies between the MR and
// CT renderings are injected through per-modality bladder scale, gas presence
// and gas displacement.
struct PhantomConfig {
  int size = 128;

  EllipseSpec body{0.50, 0.52, 0.42, 0.36};
  EllipseSpec bone_left{0.20, 0.56, 0.060, 0.060};
  EllipseSpec bone_right{0.80, 0.56, 0.060, 0.060};
  EllipseSpec sacrum{0.50, 0.82, 0.100, 0.035};
  EllipseSpec bladder{0.50, 0.38, 0.140, 0.105};
  EllipseSpec rectum{0.50, 0.68, 0.095, 0.085};
  EllipseSpec gas{0.50, 0.68, 0.058, 0.048};

  double bladder_scale_mr = 1.0;
  double bladder_scale_ct = 1.0;
  bool gas_present_mr = false;
  bool gas_present_ct = false;
  double gas_dx_mr = 0.0, gas_dy_mr = 0.0;  // gas center shift, fractions of size
  double gas_dx_ct = 0.0, gas_dy_ct = 0.0;

  // noise_sigma is in MR units; CT noise is noise_sigma * 300 HU
  double noise_sigma = 0.0;
  double mr_bias_field_amplitude = 0.0;
  std::uint64_t seed = 0;

  // throws std::invalid_argument when geometry violates the constraints
  // (radii out of (0, 0.5), organs outside the body, gas outside the rectum,
  // bone overlapping organs, organs touching the border)
  void validate() const;
};

// rendered intensity constants
namespace phantom_hu {
inline constexpr float kAir = -1000.f;
inline constexpr float kTissue = 0.f;
inline constexpr float kBone = 700.f;
inline constexpr float kBladder = 10.f;
inline constexpr float kRectumWall = 40.f;
inline constexpr float kGas = -1000.f;
}  // namespace phantom_hu
namespace phantom_mr {
inline constexpr float kAir = 0.03f;
inline constexpr float kTissue = 0.45f;
inline constexpr float kBone = 0.10f;
inline constexpr float kBladder = 0.92f;
inline constexpr float kRectumWall = 0.60f;
inline constexpr float kGas = 0.05f;
}  // namespace phantom_mr

struct PhantomPair {
  ImageSlice mr, ct;
  LabelMap label_mr, label_ct;
};

// Deterministic given config.seed; bit-identical across invocations.
PhantomPair generate_phantom(const PhantomConfig& config);

// identity, horizontal flip, vertical flip, both axes; labels flipped with images
std::array<PhantomPair, 4> augment_flip(const PhantomPair& pair);

ImageSlice flip_image(const ImageSlice& img, bool flip_h, bool flip_v);
LabelMap flip_label(const LabelMap& lbl, bool flip_h, bool flip_v);

// CT window used for training normalization
inline constexpr double kHuLo = -1000.0;
inline constexpr double kHuHi = 2000.0;

// CT [-1000,2000] -> [-1,1]; MR [0,1] -> [-1,1]. Throws on out-of-range pixels.
Tensor normalize_for_training(const ImageSlice& img);
// exact inverse of the CT mapping; output clamped to the HU window
ImageSlice denormalize_ct(const Tensor& t);

}  // namespace synct
