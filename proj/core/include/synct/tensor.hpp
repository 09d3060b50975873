#pragma once

#include <cassert>
#include <cstddef>
#include <new>
#include <vector>

namespace synct {

// 64-byte-aligned allocation keeps Eigen's kernel dispatch (alignment
// peeling) identical across processes, which bit-exact resume depends on.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t kAlign = 64;

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(kAlign)));
  }
  void deallocate(T* p, std::size_t) noexcept {
    ::operator delete(p, std::align_val_t(kAlign));
  }
  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const {
    return true;
  }
};

using AlignedDoubles = std::vector<double, AlignedAllocator<double>>;

// Dense C x H x W array of doubles, row-major within a channel.
// Batch dimension is deliberately absent: the training protocol is batch size 1.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int c, int h, int w) : c_(c), h_(h), w_(w), v_(static_cast<std::size_t>(c) * h * w, 0.0) {}

  static Tensor full(int c, int h, int w, double value) {
    Tensor t(c, h, w);
    for (auto& x : t.v_) x = value;
    return t;
  }

  int c() const { return c_; }
  int h() const { return h_; }
  int w() const { return w_; }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }
  int plane() const { return h_ * w_; }

  bool same_shape(const Tensor& o) const { return c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }

  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }
  double& at(int ch, int y, int x) { return v_[(static_cast<std::size_t>(ch) * h_ + y) * w_ + x]; }
  double at(int ch, int y, int x) const { return v_[(static_cast<std::size_t>(ch) * h_ + y) * w_ + x]; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  double* channel(int ch) { return v_.data() + static_cast<std::size_t>(ch) * plane(); }
  const double* channel(int ch) const { return v_.data() + static_cast<std::size_t>(ch) * plane(); }

  void fill(double value) {
    for (auto& x : v_) x = value;
  }
  void zero() { fill(0.0); }

  Tensor& operator+=(const Tensor& o) {
    assert(same_shape(o));
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
  }
  Tensor& operator-=(const Tensor& o) {
    assert(same_shape(o));
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    return *this;
  }
  Tensor& operator*=(double s) {
    for (auto& x : v_) x *= s;
    return *this;
  }

  bool all_finite() const;
  double min() const;
  double max() const;
  double mean() const;

 private:
  int c_ = 0, h_ = 0, w_ = 0;
  AlignedDoubles v_;
};

}  // namespace synct
