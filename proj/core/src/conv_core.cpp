#include "synct/conv_core.hpp"

#include <cassert>

namespace synct {

MatRM im2col(const Tensor& x, int k, int stride, int pad, int oh, int ow) {
  const int c = x.c(), h = x.h(), w = x.w();
  MatRM cols = MatRM::Zero(static_cast<Eigen::Index>(c) * k * k, static_cast<Eigen::Index>(oh) * ow);
  for (int ci = 0; ci < c; ++ci) {
    const double* plane = x.channel(ci);
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const Eigen::Index row = (static_cast<Eigen::Index>(ci) * k + ky) * k + kx;
        double* dst = cols.data() + row * cols.cols();
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          const double* src = plane + static_cast<std::size_t>(iy) * w;
          double* d = dst + static_cast<std::size_t>(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < w) d[ox] = src[ix];
          }
        }
      }
    }
  }
  return cols;
}

Tensor col2im(const MatRM& cols, int c, int h, int w, int k, int stride, int pad, int oh, int ow) {
  assert(cols.rows() == static_cast<Eigen::Index>(c) * k * k);
  assert(cols.cols() == static_cast<Eigen::Index>(oh) * ow);
  Tensor x(c, h, w);
  for (int ci = 0; ci < c; ++ci) {
    double* plane = x.channel(ci);
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const Eigen::Index row = (static_cast<Eigen::Index>(ci) * k + ky) * k + kx;
        const double* src = cols.data() + row * cols.cols();
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          double* d = plane + static_cast<std::size_t>(iy) * w;
          const double* s = src + static_cast<std::size_t>(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < w) d[ix] += s[ox];
          }
        }
      }
    }
  }
  return x;
}

using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int k, int stride, int pad) {
  const int cout = w.c(), cin = w.h();
  assert(cin == x.c());
  assert(w.w() == k * k);
  const int oh = conv_out_size(x.h(), k, stride, pad);
  const int ow = conv_out_size(x.w(), k, stride, pad);
  const MatRM cols = im2col(x, k, stride, pad, oh, ow);
  CMapRM wm(w.data(), cout, static_cast<Eigen::Index>(cin) * k * k);

  Tensor y(cout, oh, ow);
  MapRM ym(y.data(), cout, static_cast<Eigen::Index>(oh) * ow);
  ym.noalias() = wm * cols;
  for (int co = 0; co < cout; ++co) ym.row(co).array() += b[co];
  return y;
}

void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, int k, int stride, int pad,
                     Tensor* dx, Tensor* dw, Tensor* db) {
  const int cout = w.c(), cin = w.h();
  const int oh = dy.h(), ow = dy.w();
  CMapRM wm(w.data(), cout, static_cast<Eigen::Index>(cin) * k * k);
  CMapRM dym(dy.data(), cout, static_cast<Eigen::Index>(oh) * ow);

  if (dw != nullptr) {
    const MatRM cols = im2col(x, k, stride, pad, oh, ow);
    MapRM dwm(dw->data(), cout, static_cast<Eigen::Index>(cin) * k * k);
    dwm.noalias() += dym * cols.transpose();
  }
  if (db != nullptr) {
    for (int co = 0; co < cout; ++co) (*db)[co] += dym.row(co).sum();
  }
  if (dx != nullptr) {
    MatRM dcols(static_cast<Eigen::Index>(cin) * k * k, static_cast<Eigen::Index>(oh) * ow);
    dcols.noalias() = wm.transpose() * dym;
    *dx += col2im(dcols, x.c(), x.h(), x.w(), k, stride, pad, oh, ow);
  }
}

Tensor tconv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int k, int stride, int pad,
                       int out_pad) {
  const int cin = w.c(), cout = w.h();
  assert(cin == x.c());
  const int ih = x.h(), iw = x.w();
  const int oh = tconv_out_size(ih, k, stride, pad, out_pad);
  const int ow = tconv_out_size(iw, k, stride, pad, out_pad);

  CMapRM wm(w.data(), cin, static_cast<Eigen::Index>(cout) * k * k);
  CMapRM xm(x.data(), cin, static_cast<Eigen::Index>(ih) * iw);
  MatRM cols(static_cast<Eigen::Index>(cout) * k * k, static_cast<Eigen::Index>(ih) * iw);
  cols.noalias() = wm.transpose() * xm;

  // The output plays the "input" role of a virtual conv going (oh,ow) -> (ih,iw).
  Tensor y = col2im(cols, cout, oh, ow, k, stride, pad, ih, iw);
  for (int co = 0; co < cout; ++co) {
    double* plane = y.channel(co);
    for (int i = 0; i < y.plane(); ++i) plane[i] += b[co];
  }
  return y;
}

void tconv2d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, int k, int stride, int pad,
                      int out_pad, Tensor* dx, Tensor* dw, Tensor* db) {
  (void)out_pad;
  const int cin = w.c(), cout = w.h();
  const int ih = x.h(), iw = x.w();
  CMapRM wm(w.data(), cin, static_cast<Eigen::Index>(cout) * k * k);

  const MatRM dycols = im2col(dy, k, stride, pad, ih, iw);
  if (dx != nullptr) {
    MapRM dxm(dx->data(), cin, static_cast<Eigen::Index>(ih) * iw);
    dxm.noalias() += wm * dycols;
  }
  if (dw != nullptr) {
    CMapRM xm(x.data(), cin, static_cast<Eigen::Index>(ih) * iw);
    MapRM dwm(dw->data(), cin, static_cast<Eigen::Index>(cout) * k * k);
    dwm.noalias() += xm * dycols.transpose();
  }
  if (db != nullptr) {
    for (int co = 0; co < cout; ++co) {
      const double* plane = dy.channel(co);
      double s = 0.0;
      for (int i = 0; i < dy.plane(); ++i) s += plane[i];
      (*db)[co] += s;
    }
  }
}

Tensor avgpool_forward(const Tensor& x, int factor) {
  assert(x.h() % factor == 0 && x.w() % factor == 0);
  const int oh = x.h() / factor, ow = x.w() / factor;
  const double inv = 1.0 / (factor * factor);
  Tensor y(x.c(), oh, ow);
  for (int c = 0; c < x.c(); ++c)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double s = 0.0;
        for (int fy = 0; fy < factor; ++fy)
          for (int fx = 0; fx < factor; ++fx) s += x.at(c, oy * factor + fy, ox * factor + fx);
        y.at(c, oy, ox) = s * inv;
      }
  return y;
}

void avgpool_backward(const Tensor& dy, int factor, Tensor* dx) {
  const double inv = 1.0 / (factor * factor);
  for (int c = 0; c < dy.c(); ++c)
    for (int oy = 0; oy < dy.h(); ++oy)
      for (int ox = 0; ox < dy.w(); ++ox) {
        const double g = dy.at(c, oy, ox) * inv;
        for (int fy = 0; fy < factor; ++fy)
          for (int fx = 0; fx < factor; ++fx) dx->at(c, oy * factor + fy, ox * factor + fx) += g;
      }
}

}  // namespace synct
