#include "synct/autodiff.hpp"

#include <cassert>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "synct/conv_core.hpp"

namespace synct {
namespace ad {

int Tape::leaf(Tensor value, bool needs_grad) { return push(std::move(value), needs_grad); }

int Tape::push(Tensor value, bool needs_grad) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = grad_enabled_ && needs_grad;
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::set_back(int id, std::function<void()> back) {
  if (grad_enabled_) nodes_[id].back = std::move(back);
}

Tensor& Tape::grad_of(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.c(), n.value.h(), n.value.w());
  return n.grad;
}

void Tape::backward(int loss_id) {
  if (!grad_enabled_) throw std::logic_error("backward on a grad-disabled tape");
  if (nodes_[loss_id].value.size() != 1) throw std::logic_error("backward seed must be scalar");
  grad_of(loss_id)[0] = 1.0;
  for (int i = loss_id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.back && !n.grad.empty()) n.back();
  }
}

// ---------------------------------------------------------------------------

int relu(Tape& t, int x) {
  const Tensor& xv = t.val(x);
  Tensor y = xv;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] < 0.0) y[i] = 0.0;
  const int id = t.push(std::move(y), t.needs_grad(x));
  if (t.needs_grad(id))
    t.set_back(id, [&t, x, id] {
      const Tensor& g = t.grad_of(id);
      const Tensor& xv = t.val(x);
      Tensor& gx = t.grad_of(x);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (xv[i] > 0.0) gx[i] += g[i];
    });
  return id;
}

int tanh_op(Tape& t, int x) {
  const Tensor& xv = t.val(x);
  Tensor y(xv.c(), xv.h(), xv.w());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(xv[i]);
  const int id = t.push(std::move(y), t.needs_grad(x));
  if (t.needs_grad(id))
    t.set_back(id, [&t, x, id] {
      const Tensor& g = t.grad_of(id);
      const Tensor& yv = t.val(id);
      Tensor& gx = t.grad_of(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - yv[i] * yv[i]);
    });
  return id;
}

int add(Tape& t, int a, int b) {
  assert(t.val(a).same_shape(t.val(b)));
  Tensor y = t.val(a);
  y += t.val(b);
  const bool ng = t.needs_grad(a) || t.needs_grad(b);
  const int id = t.push(std::move(y), ng);
  if (t.needs_grad(id))
    t.set_back(id, [&t, a, b, id] {
      const Tensor& g = t.grad_of(id);
      if (t.needs_grad(a)) t.grad_of(a) += g;
      if (t.needs_grad(b)) t.grad_of(b) += g;
    });
  return id;
}

int mul_const(Tape& t, int a, const Tensor& m) {
  const Tensor& av = t.val(a);
  assert(av.same_shape(m));
  Tensor y(av.c(), av.h(), av.w());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * m[i];
  const int id = t.push(std::move(y), t.needs_grad(a));
  if (t.needs_grad(id)) {
    Tensor mc = m;  // keep the mask alive
    t.set_back(id, [&t, a, id, mc = std::move(mc)] {
      const Tensor& g = t.grad_of(id);
      Tensor& ga = t.grad_of(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mc[i];
    });
  }
  return id;
}

int concat_ch(Tape& t, int a, int b) {
  const Tensor& av = t.val(a);
  const Tensor& bv = t.val(b);
  assert(av.h() == bv.h() && av.w() == bv.w());
  Tensor y(av.c() + bv.c(), av.h(), av.w());
  std::copy(av.data(), av.data() + av.size(), y.data());
  std::copy(bv.data(), bv.data() + bv.size(), y.data() + av.size());
  const bool ng = t.needs_grad(a) || t.needs_grad(b);
  const int id = t.push(std::move(y), ng);
  if (t.needs_grad(id))
    t.set_back(id, [&t, a, b, id] {
      const Tensor& g = t.grad_of(id);
      const std::size_t na = t.val(a).size();
      if (t.needs_grad(a)) {
        Tensor& ga = t.grad_of(a);
        for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
      }
      if (t.needs_grad(b)) {
        Tensor& gb = t.grad_of(b);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[na + i];
      }
    });
  return id;
}

int avgpool(Tape& t, int x, int factor) {
  Tensor y = avgpool_forward(t.val(x), factor);
  const int id = t.push(std::move(y), t.needs_grad(x));
  if (t.needs_grad(id))
    t.set_back(id, [&t, x, id, factor] { avgpool_backward(t.grad_of(id), factor, &t.grad_of(x)); });
  return id;
}

int softmax_ch(Tape& t, int x) {
  const Tensor& xv = t.val(x);
  const int c = xv.c(), plane = xv.plane();
  Tensor y(c, xv.h(), xv.w());
  for (int p = 0; p < plane; ++p) {
    double mx = xv[p];
    for (int ch = 1; ch < c; ++ch) mx = std::max(mx, xv[ch * plane + p]);
    double sum = 0.0;
    for (int ch = 0; ch < c; ++ch) {
      const double e = std::exp(xv[ch * plane + p] - mx);
      y[ch * plane + p] = e;
      sum += e;
    }
    const double inv = 1.0 / sum;
    for (int ch = 0; ch < c; ++ch) y[ch * plane + p] *= inv;
  }
  const int id = t.push(std::move(y), t.needs_grad(x));
  if (t.needs_grad(id))
    t.set_back(id, [&t, x, id] {
      const Tensor& g = t.grad_of(id);
      const Tensor& yv = t.val(id);
      Tensor& gx = t.grad_of(x);
      const int c = yv.c(), plane = yv.plane();
      for (int p = 0; p < plane; ++p) {
        double dot = 0.0;
        for (int ch = 0; ch < c; ++ch) dot += g[ch * plane + p] * yv[ch * plane + p];
        for (int ch = 0; ch < c; ++ch) {
          const std::size_t i = static_cast<std::size_t>(ch) * plane + p;
          gx[i] += yv[i] * (g[i] - dot);
        }
      }
    });
  return id;
}

int dropout(Tape& t, int x, double rate, Rng& rng, bool training) {
  if (!training || rate <= 0.0) return x;
  const Tensor& xv = t.val(x);
  const double keep = 1.0 - rate;
  const double scale = 1.0 / keep;
  auto mask = std::make_shared<Tensor>(xv.c(), xv.h(), xv.w());
  Tensor y(xv.c(), xv.h(), xv.w());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double m = rng.uniform() < keep ? scale : 0.0;
    (*mask)[i] = m;
    y[i] = xv[i] * m;
  }
  const int id = t.push(std::move(y), t.needs_grad(x));
  if (t.needs_grad(id))
    t.set_back(id, [&t, x, id, mask] {
      const Tensor& g = t.grad_of(id);
      Tensor& gx = t.grad_of(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*mask)[i];
    });
  return id;
}

// ---------------------------------------------------------------------------

namespace {
inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }
}  // namespace

int mean_abs_diff(Tape& t, int x, const Tensor& target) {
  const Tensor& xv = t.val(x);
  assert(xv.same_shape(target));
  const double inv_n = 1.0 / static_cast<double>(xv.size());
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += std::abs(xv[i] - target[i]);
  Tensor y(1, 1, 1);
  y[0] = s * inv_n;
  const int id = t.push(std::move(y), t.needs_grad(x));
  if (t.needs_grad(id)) {
    Tensor tc = target;
    t.set_back(id, [&t, x, id, inv_n, tc = std::move(tc)] {
      const double g = t.grad_of(id)[0] * inv_n;
      const Tensor& xv = t.val(x);
      Tensor& gx = t.grad_of(x);
      for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += g * sign(xv[i] - tc[i]);
    });
  }
  return id;
}

int masked_mean_abs_diff(Tape& t, int x, const Tensor& target, const Tensor& mask01) {
  const Tensor& xv = t.val(x);
  assert(xv.same_shape(target) && xv.same_shape(mask01));
  const double inv_n = 1.0 / static_cast<double>(xv.size());
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += std::abs(mask01[i] * (xv[i] - target[i]));
  Tensor y(1, 1, 1);
  y[0] = s * inv_n;
  const int id = t.push(std::move(y), t.needs_grad(x));
  if (t.needs_grad(id)) {
    Tensor tc = target, mc = mask01;
    t.set_back(id, [&t, x, id, inv_n, tc = std::move(tc), mc = std::move(mc)] {
      const double g = t.grad_of(id)[0] * inv_n;
      const Tensor& xv = t.val(x);
      Tensor& gx = t.grad_of(x);
      for (std::size_t i = 0; i < xv.size(); ++i)
        gx[i] += g * mc[i] * sign(mc[i] * (xv[i] - tc[i]));
    });
  }
  return id;
}

int mean_sq_offset(Tape& t, int x, double target) {
  const Tensor& xv = t.val(x);
  const double inv_n = 1.0 / static_cast<double>(xv.size());
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double d = xv[i] - target;
    s += d * d;
  }
  Tensor y(1, 1, 1);
  y[0] = s * inv_n;
  const int id = t.push(std::move(y), t.needs_grad(x));
  if (t.needs_grad(id))
    t.set_back(id, [&t, x, id, inv_n, target] {
      const double g = t.grad_of(id)[0] * 2.0 * inv_n;
      const Tensor& xv = t.val(x);
      Tensor& gx = t.grad_of(x);
      for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += g * (xv[i] - target);
    });
  return id;
}

int mse_const(Tape& t, int x, const Tensor& target) {
  const Tensor& xv = t.val(x);
  assert(xv.same_shape(target));
  const double inv_n = 1.0 / static_cast<double>(xv.size());
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double d = xv[i] - target[i];
    s += d * d;
  }
  Tensor y(1, 1, 1);
  y[0] = s * inv_n;
  const int id = t.push(std::move(y), t.needs_grad(x));
  if (t.needs_grad(id)) {
    Tensor tc = target;
    t.set_back(id, [&t, x, id, inv_n, tc = std::move(tc)] {
      const double g = t.grad_of(id)[0] * 2.0 * inv_n;
      const Tensor& xv = t.val(x);
      Tensor& gx = t.grad_of(x);
      for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += g * (xv[i] - tc[i]);
    });
  }
  return id;
}

int weighted_sum(Tape& t, const std::vector<std::pair<int, double>>& terms) {
  double s = 0.0;
  bool ng = false;
  for (const auto& [id, w] : terms) {
    assert(t.val(id).size() == 1);
    s += w * t.val(id)[0];
    ng = ng || t.needs_grad(id);
  }
  Tensor y(1, 1, 1);
  y[0] = s;
  const int id = t.push(std::move(y), ng);
  if (t.needs_grad(id)) {
    auto terms_c = terms;
    t.set_back(id, [&t, id, terms_c = std::move(terms_c)] {
      const double g = t.grad_of(id)[0];
      for (const auto& [nid, w] : terms_c)
        if (t.needs_grad(nid)) t.grad_of(nid)[0] += g * w;
    });
  }
  return id;
}

// ---------------------------------------------------------------------------

namespace {

// Collects the active pixel indices of a 1 x H x W 0/1 mask (all pixels if null).
std::vector<int> mask_indices(const Tensor* mask01, int plane) {
  std::vector<int> idx;
  if (mask01 == nullptr) {
    idx.resize(plane);
    for (int i = 0; i < plane; ++i) idx[i] = i;
  } else {
    for (int i = 0; i < plane; ++i)
      if ((*mask01)[i] > 0.5) idx.push_back(i);
  }
  return idx;
}

}  // namespace

int channel_mean(Tape& t, int x, const Tensor* mask01) {
  const Tensor& xv = t.val(x);
  auto idx = std::make_shared<std::vector<int>>(mask_indices(mask01, xv.plane()));
  if (idx->empty()) throw std::invalid_argument("channel_mean: empty mask");
  const double inv_n = 1.0 / static_cast<double>(idx->size());
  Tensor y(xv.c(), 1, 1);
  for (int c = 0; c < xv.c(); ++c) {
    const double* plane = xv.channel(c);
    double s = 0.0;
    for (int i : *idx) s += plane[i];
    y[c] = s * inv_n;
  }
  const int id = t.push(std::move(y), t.needs_grad(x));
  if (t.needs_grad(id))
    t.set_back(id, [&t, x, id, idx, inv_n] {
      const Tensor& g = t.grad_of(id);
      Tensor& gx = t.grad_of(x);
      const int plane = t.val(x).plane();
      for (int c = 0; c < t.val(x).c(); ++c) {
        const double gc = g[c] * inv_n;
        double* gp = gx.data() + static_cast<std::size_t>(c) * plane;
        for (int i : *idx) gp[i] += gc;
      }
    });
  return id;
}

int channel_std(Tape& t, int x, const Tensor* mask01, double eps_var) {
  const Tensor& xv = t.val(x);
  auto idx = std::make_shared<std::vector<int>>(mask_indices(mask01, xv.plane()));
  if (idx->empty()) throw std::invalid_argument("channel_std: empty mask");
  const double inv_n = 1.0 / static_cast<double>(idx->size());
  auto means = std::make_shared<std::vector<double>>(xv.c());
  Tensor y(xv.c(), 1, 1);
  for (int c = 0; c < xv.c(); ++c) {
    const double* plane = xv.channel(c);
    double s = 0.0;
    for (int i : *idx) s += plane[i];
    const double mu = s * inv_n;
    (*means)[c] = mu;
    double v = 0.0;
    for (int i : *idx) {
      const double d = plane[i] - mu;
      v += d * d;
    }
    y[c] = std::sqrt(v * inv_n + eps_var);
  }
  const int id = t.push(std::move(y), t.needs_grad(x));
  if (t.needs_grad(id))
    t.set_back(id, [&t, x, id, idx, means, inv_n] {
      const Tensor& g = t.grad_of(id);
      const Tensor& sv = t.val(id);
      const Tensor& xv = t.val(x);
      Tensor& gx = t.grad_of(x);
      const int plane = xv.plane();
      for (int c = 0; c < xv.c(); ++c) {
        // d(sigma)/dx_i = (x_i - mu) / (n * sigma)
        const double k = g[c] * inv_n / sv[c];
        const double mu = (*means)[c];
        const double* xp = xv.data() + static_cast<std::size_t>(c) * plane;
        double* gp = gx.data() + static_cast<std::size_t>(c) * plane;
        for (int i : *idx) gp[i] += k * (xp[i] - mu);
      }
    });
  return id;
}

// ---------------------------------------------------------------------------

int conv2d(Tape& t, int x, Param& w, Param& b, int k, int stride, int pad) {
  const Tensor& xv = t.val(x);
  const int cout = w.v.c(), cin = w.v.h();
  assert(cin == xv.c());
  const int oh = conv_out_size(xv.h(), k, stride, pad);
  const int ow = conv_out_size(xv.w(), k, stride, pad);

  auto cols = std::make_shared<MatRM>(im2col(xv, k, stride, pad, oh, ow));
  Eigen::Map<const MatRM> wm(w.v.data(), cout, static_cast<Eigen::Index>(cin) * k * k);
  Tensor y(cout, oh, ow);
  Eigen::Map<MatRM> ym(y.data(), cout, static_cast<Eigen::Index>(oh) * ow);
  ym.noalias() = wm * (*cols);
  for (int co = 0; co < cout; ++co) ym.row(co).array() += b.v[co];

  const bool ng = t.needs_grad(x) || (t.grad_enabled() && w.trainable);
  const int id = t.push(std::move(y), ng);
  if (t.needs_grad(id))
    t.set_back(id, [&t, x, id, &w, &b, k, stride, pad, oh, ow, cols] {
      const Tensor& dy = t.grad_of(id);
      const Tensor& xv = t.val(x);
      const int cout = w.v.c(), cin = w.v.h();
      Eigen::Map<const MatRM> dym(dy.data(), cout, static_cast<Eigen::Index>(oh) * ow);
      if (w.trainable) {
        Eigen::Map<MatRM> dwm(w.g.data(), cout, static_cast<Eigen::Index>(cin) * k * k);
        dwm.noalias() += dym * cols->transpose();
        for (int co = 0; co < cout; ++co) b.g[co] += dym.row(co).sum();
      }
      if (t.needs_grad(x)) {
        Eigen::Map<const MatRM> wm(w.v.data(), cout, static_cast<Eigen::Index>(cin) * k * k);
        MatRM dcols(static_cast<Eigen::Index>(cin) * k * k, static_cast<Eigen::Index>(oh) * ow);
        dcols.noalias() = wm.transpose() * dym;
        t.grad_of(x) += col2im(dcols, xv.c(), xv.h(), xv.w(), k, stride, pad, oh, ow);
      }
    });
  return id;
}

int tconv2d(Tape& t, int x, Param& w, Param& b, int k, int stride, int pad, int out_pad) {
  const Tensor& xv = t.val(x);
  Tensor y = tconv2d_forward(xv, w.v, b.v, k, stride, pad, out_pad);
  const bool ng = t.needs_grad(x) || (t.grad_enabled() && w.trainable);
  const int id = t.push(std::move(y), ng);
  if (t.needs_grad(id))
    t.set_back(id, [&t, x, id, &w, &b, k, stride, pad, out_pad] {
      const Tensor& dy = t.grad_of(id);
      const Tensor& xv = t.val(x);
      Tensor* dx = t.needs_grad(x) ? &t.grad_of(x) : nullptr;
      Tensor* dw = w.trainable ? &w.g : nullptr;
      Tensor* db = w.trainable ? &b.g : nullptr;
      tconv2d_backward(xv, w.v, dy, k, stride, pad, out_pad, dx, dw, db);
    });
  return id;
}

int instance_norm(Tape& t, int x, Param& gamma, Param& beta, double eps) {
  const Tensor& xv = t.val(x);
  const int c = xv.c(), plane = xv.plane();
  assert(gamma.v.c() == c && beta.v.c() == c);
  auto xhat = std::make_shared<Tensor>(c, xv.h(), xv.w());
  auto inv_std = std::make_shared<std::vector<double>>(c);
  Tensor y(c, xv.h(), xv.w());
  const double inv_n = 1.0 / static_cast<double>(plane);
  for (int ch = 0; ch < c; ++ch) {
    const double* xp = xv.channel(ch);
    double mu = 0.0;
    for (int i = 0; i < plane; ++i) mu += xp[i];
    mu *= inv_n;
    double var = 0.0;
    for (int i = 0; i < plane; ++i) {
      const double d = xp[i] - mu;
      var += d * d;
    }
    var *= inv_n;
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[ch] = is;
    double* hp = xhat->channel(ch);
    double* yp = y.channel(ch);
    const double g = gamma.v[ch], bta = beta.v[ch];
    for (int i = 0; i < plane; ++i) {
      const double h = (xp[i] - mu) * is;
      hp[i] = h;
      yp[i] = g * h + bta;
    }
  }
  const bool ng = t.needs_grad(x) || (t.grad_enabled() && gamma.trainable);
  const int id = t.push(std::move(y), ng);
  if (t.needs_grad(id))
    t.set_back(id, [&t, x, id, &gamma, &beta, xhat, inv_std] {
      const Tensor& dy = t.grad_of(id);
      const int c = dy.c(), plane = dy.plane();
      const double inv_n = 1.0 / static_cast<double>(plane);
      for (int ch = 0; ch < c; ++ch) {
        const double* dyp = dy.channel(ch);
        const double* hp = xhat->channel(ch);
        double sum_dy = 0.0, sum_dyh = 0.0;
        for (int i = 0; i < plane; ++i) {
          sum_dy += dyp[i];
          sum_dyh += dyp[i] * hp[i];
        }
        if (gamma.trainable) {
          gamma.g[ch] += sum_dyh;
          beta.g[ch] += sum_dy;
        }
        if (t.needs_grad(x)) {
          Tensor& gx = t.grad_of(x);
          double* gp = gx.data() + static_cast<std::size_t>(ch) * plane;
          const double k = gamma.v[ch] * (*inv_std)[ch];
          const double m_dy = sum_dy * inv_n, m_dyh = sum_dyh * inv_n;
          for (int i = 0; i < plane; ++i) gp[i] += k * (dyp[i] - m_dy - hp[i] * m_dyh);
        }
      }
    });
  return id;
}

double finite_diff(Param& p, std::size_t i, const std::function<double()>& f, double step) {
  const double orig = p.v[i];
  p.v[i] = orig + step;
  const double hi = f();
  p.v[i] = orig - step;
  const double lo = f();
  p.v[i] = orig;
  return (hi - lo) / (2.0 * step);
}

}  // namespace ad
}  // namespace synct
