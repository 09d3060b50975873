#pragma once

#include <Eigen/Core>

#include "synct/tensor.hpp"

namespace synct {

// Row-major matrices so that matrix rows map directly onto tensor channel planes.
using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline int conv_out_size(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}
inline int tconv_out_size(int in, int k, int stride, int pad, int out_pad) {
  return (in - 1) * stride - 2 * pad + k + out_pad;
}

// Patch matrix of shape (C*k*k, oh*ow); row = (ci*k + ky)*k + kx, col = oy*ow + ox.
// Out-of-bounds taps read as zero (zero padding).
MatRM im2col(const Tensor& x, int k, int stride, int pad, int oh, int ow);

// Exact adjoint of im2col: scatter-adds the patch matrix back into a C x h x w tensor.
Tensor col2im(const MatRM& cols, int c, int h, int w, int k, int stride, int pad, int oh, int ow);

// Convolution, zero padding. Weights w: (Cout, Cin, k*k), bias b: (Cout, 1, 1).
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int k, int stride, int pad);
// Accumulates into dx/dw/db (any may be null to skip).
void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, int k, int stride, int pad,
                     Tensor* dx, Tensor* dw, Tensor* db);

// Transposed convolution (adjoint of a conv with the same geometry).
// Weights w: (Cin, Cout, k*k), bias b: (Cout, 1, 1).
Tensor tconv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int k, int stride, int pad,
                       int out_pad);
void tconv2d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, int k, int stride, int pad,
                      int out_pad, Tensor* dx, Tensor* dw, Tensor* db);

// Average pooling by an integer factor (used for the generator's input skip taps).
Tensor avgpool_forward(const Tensor& x, int factor);
void avgpool_backward(const Tensor& dy, int factor, Tensor* dx);

}  // namespace synct
