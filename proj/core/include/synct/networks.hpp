#pragma once

#include <array>
#include <string>
#include <vector>

#include "synct/layers.hpp"

namespace synct {

// Translation generator: 3-conv encoder with raw-input skip concatenation,
// 9 residual blocks, 3 transposed-conv decoder, tanh output in (-1, 1).
// Input sizes must be divisible by 4 (two stride-2 encoder convs).
struct Generator {
  int base_channels = 0;
  int in_ch = 1, out_ch = 1;
  double dropout_rate = 0.5;

  Conv2d enc1, enc2, enc3;
  InstanceNorm in1, in2, in3;
  std::vector<ResBlock> blocks;
  TConv2d dec1, dec2, out;
  InstanceNorm dn1, dn2;

  Generator() = default;
  explicit Generator(int base, int in_channels = 1, int out_channels = 1);

  // training=true enables dropout inside residual blocks (draws from rng)
  int forward(ad::Tape& t, int x, Rng& rng, bool training);
  Tensor infer(const Tensor& x);

  void init(Rng& rng, double stddev = 0.02);
  std::vector<ad::Param*> params();
  std::string arch() const;
};

// Patch discriminator: 6 convs (strides 2,2,2,1,1,1), normalization + ReLU on
// all but the first and last, raw 1-channel response map (least-squares loss).
// Minimum input is 8x8.
struct Discriminator {
  int base_channels = 0;
  std::array<Conv2d, 6> convs;
  std::array<InstanceNorm, 4> norms;  // layers 2..5

  Discriminator() = default;
  explicit Discriminator(int base, int in_channels = 1);

  int forward(ad::Tape& t, int x);
  Tensor infer(const Tensor& x);

  void init(Rng& rng, double stddev = 0.02);
  std::vector<ad::Param*> params();
  std::string arch() const;

  static constexpr int kMinInput = 8;
};

// Per-pixel classifier: 3 convs, 6 residual blocks, 3 transposed convs,
// channel softmax over num_classes.
struct Segmenter {
  int base_channels = 0;
  int num_classes = 4;

  Conv2d enc1, enc2, enc3;
  InstanceNorm in1, in2, in3;
  std::vector<ResBlock> blocks;
  TConv2d dec1, dec2, out;
  InstanceNorm dn1, dn2;

  Segmenter() = default;
  explicit Segmenter(int base, int classes = 4, int in_channels = 1);

  int forward(ad::Tape& t, int x);
  Tensor infer(const Tensor& x);

  void init(Rng& rng, double stddev = 0.02);
  std::vector<ad::Param*> params();
  std::string arch() const;
};

// Fixed random convolutional feature encoder for style statistics (frozen).
struct StyleEncoder {
  Conv2d c1, c2, c3;

  StyleEncoder() = default;
  explicit StyleEncoder(const std::string& name);

  // returns the three post-ReLU feature node ids (full, /2, /4 resolution)
  std::array<int, 3> forward(ad::Tape& t, int x);

  void init(Rng& rng, double stddev = 0.02);
  // He-scaled random features carry usable first/second-moment statistics
  void init_he(Rng& rng);
  std::vector<ad::Param*> params();
  std::string arch() const;
};

// Trainable mirror of StyleEncoder with a linear output head.
struct StyleDecoder {
  TConv2d d1, d2;
  Conv2d out;

  StyleDecoder() = default;
  explicit StyleDecoder(const std::string& name);

  int forward(ad::Tape& t, int x);

  void init(Rng& rng, double stddev = 0.02);
  std::vector<ad::Param*> params();
  std::string arch() const;
};

// Gaussian init per the shared convention: conv weights ~ N(0, stddev^2),
// biases 0, normalization scale 1 / offset 0. Deterministic given the rng.
template <typename Net>
void init_params(Net& net, std::uint64_t seed, double stddev = 0.02) {
  Rng rng(seed);
  net.init(rng, stddev);
}

std::size_t param_count(const std::vector<ad::Param*>& ps);

}  // namespace synct
