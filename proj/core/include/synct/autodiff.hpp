#pragma once

#include <deque>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "synct/rng.hpp"
#include "synct/tensor.hpp"

namespace synct {
namespace ad {

// A trainable (or frozen) parameter tensor with its gradient accumulator.
struct Param {
  std::string name;
  Tensor v;
  Tensor g;
  bool trainable = true;

  Param() = default;
  Param(std::string n, int c, int h, int w, bool train = true)
      : name(std::move(n)), v(c, h, w), g(c, h, w), trainable(train) {}
  void zero_grad() { g.zero(); }
};

// Define-by-run reverse-mode tape. Nodes are created in topological order,
// so the backward sweep is a single reverse pass. With grad disabled the ops
// skip caches and closures entirely (inference mode).
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  int leaf(Tensor value, bool needs_grad = false);
  int push(Tensor value, bool needs_grad);
  void set_back(int id, std::function<void()> back);

  Tensor& val(int id) { return nodes_[id].value; }
  const Tensor& val(int id) const { return nodes_[id].value; }
  bool needs_grad(int id) const { return grad_enabled_ && nodes_[id].needs_grad; }
  bool has_grad(int id) const { return !nodes_[id].grad.empty(); }
  // lazily allocated, zero-filled
  Tensor& grad_of(int id);

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse.
  void backward(int loss_id);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    std::function<void()> back;
  };
  std::deque<Node> nodes_;
  bool grad_enabled_;
};

// ---- elementwise / structural ops ----
int relu(Tape& t, int x);
int tanh_op(Tape& t, int x);
int add(Tape& t, int a, int b);
// y = a * m elementwise with a constant tensor (e.g. a 0/1 mask)
int mul_const(Tape& t, int a, const Tensor& m);
int concat_ch(Tape& t, int a, int b);
int avgpool(Tape& t, int x, int factor);
// per-pixel softmax across channels
int softmax_ch(Tape& t, int x);
// inverted dropout; identity when !training or rate == 0
int dropout(Tape& t, int x, double rate, Rng& rng, bool training);

// ---- reductions (scalar 1x1x1 outputs) ----
int mean_abs_diff(Tape& t, int x, const Tensor& target);
int masked_mean_abs_diff(Tape& t, int x, const Tensor& target, const Tensor& mask01);
// mean((x - target)^2), scalar target
int mean_sq_offset(Tape& t, int x, double target);
// mean((x - target)^2), tensor target
int mse_const(Tape& t, int x, const Tensor& target);
// weighted sum of scalar nodes
int weighted_sum(Tape& t, const std::vector<std::pair<int, double>>& terms);

// ---- per-channel statistics (C x 1 x 1 outputs) ----
// mask: 1 x H x W 0/1 tensor or nullptr for unmasked; needs >= 1 positive pixel
int channel_mean(Tape& t, int x, const Tensor* mask01);
// sigma = sqrt(var + eps_var); eps keeps the backward finite at zero variance
int channel_std(Tape& t, int x, const Tensor* mask01, double eps_var = 1e-12);

// ---- layer primitives (parameters owned by the caller) ----
int conv2d(Tape& t, int x, Param& w, Param& b, int k, int stride, int pad);
int tconv2d(Tape& t, int x, Param& w, Param& b, int k, int stride, int pad, int out_pad);
int instance_norm(Tape& t, int x, Param& gamma, Param& beta, double eps = 1e-5);

// Central finite-difference derivative of f() with respect to p.v[i].
double finite_diff(Param& p, std::size_t i, const std::function<double()>& f, double step = 1e-3);

}  // namespace ad
}  // namespace synct
