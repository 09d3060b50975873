#pragma once
#include <cmath>

#include <string>
#include <vector>

#include "synct/autodiff.hpp"

namespace synct {

// Layer wrappers owning their parameters. Forward passes run on an ad::Tape.

struct Conv2d {
  int cin = 0, cout = 0, k = 3, stride = 1, pad = 1;
  ad::Param w, b;

  Conv2d() = default;
  Conv2d(const std::string& name, int cin_, int cout_, int k_, int stride_, int pad_,
         bool trainable = true)
      : cin(cin_), cout(cout_), k(k_), stride(stride_), pad(pad_),
        w(name + ".w", cout_, cin_, k_ * k_, trainable),
        b(name + ".b", cout_, 1, 1, trainable) {}

  int operator()(ad::Tape& t, int x) { return ad::conv2d(t, x, w, b, k, stride, pad); }
  void init(Rng& rng, double stddev) {
    for (std::size_t i = 0; i < w.v.size(); ++i) w.v[i] = rng.normal(0.0, stddev);
    b.v.zero();
  }
  // He scaling keeps activations O(1) through ReLU stacks
  void init_he(Rng& rng) { init(rng, std::sqrt(2.0 / (static_cast<double>(cin) * k * k))); }
  void collect(std::vector<ad::Param*>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }
  std::string spec() const {
    return "conv(" + std::to_string(cin) + "->" + std::to_string(cout) + ",k" + std::to_string(k) +
           ",s" + std::to_string(stride) + ",p" + std::to_string(pad) + ")";
  }
};

struct TConv2d {
  int cin = 0, cout = 0, k = 3, stride = 1, pad = 1, out_pad = 0;
  ad::Param w, b;

  TConv2d() = default;
  TConv2d(const std::string& name, int cin_, int cout_, int k_, int stride_, int pad_, int out_pad_,
          bool trainable = true)
      : cin(cin_), cout(cout_), k(k_), stride(stride_), pad(pad_), out_pad(out_pad_),
        w(name + ".w", cin_, cout_, k_ * k_, trainable),
        b(name + ".b", cout_, 1, 1, trainable) {}

  int operator()(ad::Tape& t, int x) { return ad::tconv2d(t, x, w, b, k, stride, pad, out_pad); }
  void init(Rng& rng, double stddev) {
    for (std::size_t i = 0; i < w.v.size(); ++i) w.v[i] = rng.normal(0.0, stddev);
    b.v.zero();
  }
  void init_he(Rng& rng) { init(rng, std::sqrt(2.0 / (static_cast<double>(cin) * k * k))); }
  void collect(std::vector<ad::Param*>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }
  std::string spec() const {
    return "tconv(" + std::to_string(cin) + "->" + std::to_string(cout) + ",k" + std::to_string(k) +
           ",s" + std::to_string(stride) + ",p" + std::to_string(pad) + ",op" +
           std::to_string(out_pad) + ")";
  }
};

struct InstanceNorm {
  int c = 0;
  double eps = 1e-5;
  ad::Param gamma, beta;

  InstanceNorm() = default;
  InstanceNorm(const std::string& name, int c_)
      : c(c_), gamma(name + ".gamma", c_, 1, 1), beta(name + ".beta", c_, 1, 1) {}

  int operator()(ad::Tape& t, int x) { return ad::instance_norm(t, x, gamma, beta, eps); }
  void init() {
    gamma.v.fill(1.0);
    beta.v.zero();
  }
  void collect(std::vector<ad::Param*>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
  }
  std::string spec() const { return "inorm(" + std::to_string(c) + ")"; }
};

// conv-norm-relu-dropout-conv-norm with an identity skip
struct ResBlock {
  Conv2d c1, c2;
  InstanceNorm n1, n2;
  double dropout_rate = 0.0;

  ResBlock() = default;
  ResBlock(const std::string& name, int channels, double dropout)
      : c1(name + ".c1", channels, channels, 3, 1, 1),
        c2(name + ".c2", channels, channels, 3, 1, 1),
        n1(name + ".n1", channels),
        n2(name + ".n2", channels),
        dropout_rate(dropout) {}

  int operator()(ad::Tape& t, int x, Rng& rng, bool training) {
    int h = c1(t, x);
    h = n1(t, h);
    h = ad::relu(t, h);
    h = ad::dropout(t, h, dropout_rate, rng, training);
    h = c2(t, h);
    h = n2(t, h);
    return ad::add(t, x, h);
  }
  void init(Rng& rng, double stddev) {
    c1.init(rng, stddev);
    c2.init(rng, stddev);
    n1.init();
    n2.init();
  }
  void collect(std::vector<ad::Param*>& out) {
    c1.collect(out);
    n1.collect(out);
    c2.collect(out);
    n2.collect(out);
  }
  std::string spec() const {
    return "res[" + c1.spec() + ";" + n1.spec() + ";relu;drop(" + std::to_string(dropout_rate) +
           ");" + c2.spec() + ";" + n2.spec() + "]";
  }
};

}  // namespace synct
