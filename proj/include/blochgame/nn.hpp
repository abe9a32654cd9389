// Minimal differentiable-computation engine: dense and 2D-convolutional
// layers, ReLU, bounded (tanh-affine) outputs, mean-squared-error loss and
// Adam. Layers carry their own forward cache; backward consumes it and
// accumulates parameter gradients.
//
// Tensors are row-major, rank 2 (batch, features) or rank 4 NHWC. A
// rank-2 tensor maps onto Eigen as a column-major (features x batch)
// matrix with zero copies, which is what all the GEMMs below use.
// Everything is templated on the scalar so training runs in float while
// gradient checks instantiate double.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "blochgame/rng.hpp"

namespace blochgame::nn {

template <class S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using ArrayX = Eigen::Array<S, Eigen::Dynamic, 1>;

template <class S>
struct Tensor {
  std::array<Eigen::Index, 4> shape{0, 0, 0, 0};  // rank 2: (n, f); rank 4: (n, h, w, c)
  int rank{0};
  ArrayX<S> v;

  static Tensor rank2(Eigen::Index n, Eigen::Index f) {
    Tensor t;
    t.rank = 2;
    t.shape = {n, f, 0, 0};
    t.v = ArrayX<S>::Zero(n * f);
    return t;
  }
  static Tensor rank4(Eigen::Index n, Eigen::Index h, Eigen::Index w, Eigen::Index c) {
    Tensor t;
    t.rank = 4;
    t.shape = {n, h, w, c};
    t.v = ArrayX<S>::Zero(n * h * w * c);
    return t;
  }

  Eigen::Index batch() const { return shape[0]; }
  Eigen::Index features() const {
    return rank == 2 ? shape[1] : shape[1] * shape[2] * shape[3];
  }
  Eigen::Index size() const { return v.size(); }

  // (features x batch) view of a rank-2 tensor; column j is sample j
  auto mat() { return Eigen::Map<Matrix<S>>(v.data(), shape[1], shape[0]); }
  auto mat() const { return Eigen::Map<const Matrix<S>>(v.data(), shape[1], shape[0]); }

  bool all_finite() const { return v.isFinite().all(); }
};

template <class S>
struct ParamView {
  std::string name;
  S* value;
  S* grad;
  Eigen::Index size;
  std::vector<Eigen::Index> blob_shape;  // row-major shape of the stored blob
};

// Self-description, used to rebuild a network from a checkpoint manifest.
struct LayerSpec {
  std::string kind;  // dense | conv2d | relu | flatten | tanh_scale
  int in = 0, out = 0;
  int kernel = 0, stride = 0;
  std::vector<double> lo, hi;  // tanh_scale bounds per output unit
};

template <class S>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<S> forward(const Tensor<S>& x, bool cache) = 0;
  virtual Tensor<S> backward(const Tensor<S>& dy) = 0;
  virtual std::vector<ParamView<S>> params() { return {}; }
  virtual LayerSpec spec() const = 0;
  virtual void init(Rng&) {}
  // overrides the init bound of the parameterised layers (final-layer init)
  virtual void set_init_bound(double) {}

 protected:
  void require_cache(bool have) const {
    if (!have) throw std::logic_error("backward called before forward");
  }
};

template <class S>
class DenseLayer final : public Layer<S> {
 public:
  DenseLayer(int in, int out)
      : in_(in), out_(out), w_(Matrix<S>::Zero(out, in)), b_(Vector<S>::Zero(out)),
        gw_(Matrix<S>::Zero(out, in)), gb_(Vector<S>::Zero(out)) {}

  Tensor<S> forward(const Tensor<S>& x, bool cache) override {
    if (x.rank != 2 || x.shape[1] != in_) throw std::invalid_argument("dense: input shape mismatch");
    Tensor<S> y = Tensor<S>::rank2(x.shape[0], out_);
    y.mat().noalias() = w_ * x.mat();
    y.mat().colwise() += b_;
    if (cache) {
      x_ = x;
      has_cache_ = true;
    }
    return y;
  }

  Tensor<S> backward(const Tensor<S>& dy) override {
    this->require_cache(has_cache_);
    gw_.noalias() += dy.mat() * x_.mat().transpose();
    gb_.noalias() += dy.mat().rowwise().sum();
    Tensor<S> dx = Tensor<S>::rank2(x_.shape[0], in_);
    dx.mat().noalias() = w_.transpose() * dy.mat();
    return dx;
  }

  std::vector<ParamView<S>> params() override {
    return {{"w", w_.data(), gw_.data(), w_.size(), {in_, out_}},
            {"b", b_.data(), gb_.data(), b_.size(), {out_}}};
  }

  LayerSpec spec() const override {
    return {.kind = "dense", .in = static_cast<int>(in_), .out = static_cast<int>(out_)};
  }

  void init(Rng& rng) override {
    const double bound = init_bound_ > 0 ? init_bound_ : 1.0 / std::sqrt(static_cast<double>(in_));
    for (Eigen::Index i = 0; i < w_.size(); ++i) w_.data()[i] = static_cast<S>(rng.uniform(-bound, bound));
    for (Eigen::Index i = 0; i < b_.size(); ++i) b_.data()[i] = static_cast<S>(rng.uniform(-bound, bound));
  }
  void set_init_bound(double b) override { init_bound_ = b; }

  Matrix<S>& weights() { return w_; }
  Vector<S>& bias() { return b_; }

 private:
  Eigen::Index in_, out_;
  Matrix<S> w_;
  Vector<S> b_;
  Matrix<S> gw_;
  Vector<S> gb_;
  Tensor<S> x_;
  bool has_cache_{false};
  double init_bound_{0.0};
};

// 3x3 (or kxk) convolution, NHWC, ceil-mode "same" padding: the output is
// ceil(in/stride) and any odd padding goes to the bottom/right edge.
// Weights are kept as an (out_ch x k*k*in_ch) matrix whose storage order
// equals a row-major (k, k, in_ch, out_ch) tensor; forward is im2col + GEMM.
template <class S>
class Conv2dLayer final : public Layer<S> {
 public:
  Conv2dLayer(int in_ch, int out_ch, int kernel, int stride)
      : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride),
        w_(Matrix<S>::Zero(out_ch, kernel * kernel * in_ch)), b_(Vector<S>::Zero(out_ch)),
        gw_(Matrix<S>::Zero(out_ch, kernel * kernel * in_ch)), gb_(Vector<S>::Zero(out_ch)) {}

  Tensor<S> forward(const Tensor<S>& x, bool cache) override {
    if (x.rank != 4 || x.shape[3] != in_ch_) throw std::invalid_argument("conv2d: input shape mismatch");
    const Eigen::Index n = x.shape[0], h = x.shape[1], w = x.shape[2];
    const Eigen::Index ho = (h + stride_ - 1) / stride_, wo = (w + stride_ - 1) / stride_;
    const int pad_h = pad_begin(h, ho), pad_w = pad_begin(w, wo);

    Matrix<S> cols(kernel_ * kernel_ * in_ch_, n * ho * wo);
    im2col(x, cols, ho, wo, pad_h, pad_w);

    Tensor<S> y = Tensor<S>::rank4(n, ho, wo, out_ch_);
    Eigen::Map<Matrix<S>> ymap(y.v.data(), out_ch_, n * ho * wo);
    ymap.noalias() = w_ * cols;
    ymap.colwise() += b_;

    if (cache) {
      cols_ = std::move(cols);
      in_shape_ = x.shape;
      out_shape_ = y.shape;
      has_cache_ = true;
    }
    return y;
  }

  Tensor<S> backward(const Tensor<S>& dy) override {
    this->require_cache(has_cache_);
    const Eigen::Index n = in_shape_[0], h = in_shape_[1], w = in_shape_[2];
    const Eigen::Index ho = out_shape_[1], wo = out_shape_[2];
    const int pad_h = pad_begin(h, ho), pad_w = pad_begin(w, wo);

    Eigen::Map<const Matrix<S>> dymap(dy.v.data(), out_ch_, n * ho * wo);
    gw_.noalias() += dymap * cols_.transpose();
    gb_.noalias() += dymap.rowwise().sum();

    Matrix<S> dcols(kernel_ * kernel_ * in_ch_, n * ho * wo);
    dcols.noalias() = w_.transpose() * dymap;

    Tensor<S> dx = Tensor<S>::rank4(n, h, w, in_ch_);
    col2im(dcols, dx, ho, wo, pad_h, pad_w);
    return dx;
  }

  std::vector<ParamView<S>> params() override {
    return {{"w", w_.data(), gw_.data(), w_.size(), {kernel_, kernel_, in_ch_, out_ch_}},
            {"b", b_.data(), gb_.data(), b_.size(), {out_ch_}}};
  }

  LayerSpec spec() const override {
    return {.kind = "conv2d", .in = static_cast<int>(in_ch_), .out = static_cast<int>(out_ch_),
            .kernel = kernel_, .stride = stride_};
  }

  void init(Rng& rng) override {
    const double fan_in = static_cast<double>(kernel_ * kernel_ * in_ch_);
    const double bound = init_bound_ > 0 ? init_bound_ : 1.0 / std::sqrt(fan_in);
    for (Eigen::Index i = 0; i < w_.size(); ++i) w_.data()[i] = static_cast<S>(rng.uniform(-bound, bound));
    for (Eigen::Index i = 0; i < b_.size(); ++i) b_.data()[i] = static_cast<S>(rng.uniform(-bound, bound));
  }
  void set_init_bound(double b) override { init_bound_ = b; }

 private:
  int pad_begin(Eigen::Index in, Eigen::Index out) const {
    const Eigen::Index total = std::max<Eigen::Index>((out - 1) * stride_ + kernel_ - in, 0);
    return static_cast<int>(total / 2);
  }

  void im2col(const Tensor<S>& x, Matrix<S>& cols, Eigen::Index ho, Eigen::Index wo,
              int pad_h, int pad_w) const {
    const Eigen::Index n = x.shape[0], h = x.shape[1], w = x.shape[2];
    const S* src = x.v.data();
    Eigen::Index m = 0;
    for (Eigen::Index in = 0; in < n; ++in)
      for (Eigen::Index oy = 0; oy < ho; ++oy)
        for (Eigen::Index ox = 0; ox < wo; ++ox, ++m) {
          S* col = cols.col(m).data();
          Eigen::Index r = 0;
          for (int ky = 0; ky < kernel_; ++ky) {
            const Eigen::Index iy = oy * stride_ - pad_h + ky;
            for (int kx = 0; kx < kernel_; ++kx) {
              const Eigen::Index ix = ox * stride_ - pad_w + kx;
              if (iy >= 0 && iy < h && ix >= 0 && ix < w) {
                const S* px = src + ((in * h + iy) * w + ix) * in_ch_;
                for (Eigen::Index c = 0; c < in_ch_; ++c) col[r++] = px[c];
              } else {
                for (Eigen::Index c = 0; c < in_ch_; ++c) col[r++] = S(0);
              }
            }
          }
        }
  }

  void col2im(const Matrix<S>& dcols, Tensor<S>& dx, Eigen::Index ho, Eigen::Index wo,
              int pad_h, int pad_w) const {
    const Eigen::Index n = dx.shape[0], h = dx.shape[1], w = dx.shape[2];
    S* dst = dx.v.data();
    Eigen::Index m = 0;
    for (Eigen::Index in = 0; in < n; ++in)
      for (Eigen::Index oy = 0; oy < ho; ++oy)
        for (Eigen::Index ox = 0; ox < wo; ++ox, ++m) {
          const S* col = dcols.col(m).data();
          Eigen::Index r = 0;
          for (int ky = 0; ky < kernel_; ++ky) {
            const Eigen::Index iy = oy * stride_ - pad_h + ky;
            for (int kx = 0; kx < kernel_; ++kx) {
              const Eigen::Index ix = ox * stride_ - pad_w + kx;
              if (iy >= 0 && iy < h && ix >= 0 && ix < w) {
                S* px = dst + ((in * h + iy) * w + ix) * in_ch_;
                for (Eigen::Index c = 0; c < in_ch_; ++c) px[c] += col[r++];
              } else {
                r += in_ch_;
              }
            }
          }
        }
  }

  Eigen::Index in_ch_, out_ch_;
  int kernel_, stride_;
  Matrix<S> w_;
  Vector<S> b_;
  Matrix<S> gw_;
  Vector<S> gb_;
  Matrix<S> cols_;
  std::array<Eigen::Index, 4> in_shape_{}, out_shape_{};
  bool has_cache_{false};
  double init_bound_{0.0};
};

template <class S>
class ReluLayer final : public Layer<S> {
 public:
  Tensor<S> forward(const Tensor<S>& x, bool cache) override {
    Tensor<S> y = x;
    y.v = y.v.max(S(0));
    if (cache) {
      x_ = x;
      has_cache_ = true;
    }
    return y;
  }
  Tensor<S> backward(const Tensor<S>& dy) override {
    this->require_cache(has_cache_);
    Tensor<S> dx = dy;
    dx.v = dy.v * (x_.v > S(0)).template cast<S>();
    return dx;
  }
  LayerSpec spec() const override { return {.kind = "relu"}; }

 private:
  Tensor<S> x_;
  bool has_cache_{false};
};

template <class S>
class FlattenLayer final : public Layer<S> {
 public:
  Tensor<S> forward(const Tensor<S>& x, bool cache) override {
    if (cache) {
      in_shape_ = x.shape;
      in_rank_ = x.rank;
      has_cache_ = true;
    }
    Tensor<S> y = x;
    y.rank = 2;
    y.shape = {x.shape[0], x.features(), 0, 0};
    return y;
  }
  Tensor<S> backward(const Tensor<S>& dy) override {
    this->require_cache(has_cache_);
    Tensor<S> dx = dy;
    dx.rank = in_rank_;
    dx.shape = in_shape_;
    return dx;
  }
  LayerSpec spec() const override { return {.kind = "flatten"}; }

 private:
  std::array<Eigen::Index, 4> in_shape_{};
  int in_rank_{0};
  bool has_cache_{false};
};

// y_i = (hi_i + lo_i)/2 + (hi_i - lo_i)/2 * tanh(x_i)
template <class S>
class TanhScaleLayer final : public Layer<S> {
 public:
  TanhScaleLayer(std::vector<double> lo, std::vector<double> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size() || lo_.empty()) throw std::invalid_argument("tanh_scale: bad bounds");
    centre_.resize(static_cast<Eigen::Index>(lo_.size()));
    half_.resize(centre_.size());
    for (Eigen::Index i = 0; i < centre_.size(); ++i) {
      centre_(i) = static_cast<S>((hi_[i] + lo_[i]) / 2.0);
      half_(i) = static_cast<S>((hi_[i] - lo_[i]) / 2.0);
    }
  }

  Tensor<S> forward(const Tensor<S>& x, bool cache) override {
    if (x.rank != 2 || x.shape[1] != centre_.size())
      throw std::invalid_argument("tanh_scale: input shape mismatch");
    Tensor<S> y = x;
    auto ymat = y.mat();
    ymat = x.mat().array().tanh().matrix();
    if (cache) {
      t_ = y;  // cache tanh(x)
      has_cache_ = true;
    }
    ymat = (ymat.array().colwise() * half_.array()).matrix();
    ymat.colwise() += centre_;
    return y;
  }

  Tensor<S> backward(const Tensor<S>& dy) override {
    this->require_cache(has_cache_);
    Tensor<S> dx = dy;
    dx.mat() = (dy.mat().array() * (S(1) - t_.mat().array().square())).matrix();
    dx.mat() = (dx.mat().array().colwise() * half_.array()).matrix();
    return dx;
  }

  LayerSpec spec() const override { return {.kind = "tanh_scale", .lo = lo_, .hi = hi_}; }

 private:
  std::vector<double> lo_, hi_;
  Vector<S> centre_, half_;
  Tensor<S> t_;
  bool has_cache_{false};
};

template <class S>
std::unique_ptr<Layer<S>> layer_from_spec(const LayerSpec& spec) {
  if (spec.kind == "dense") return std::make_unique<DenseLayer<S>>(spec.in, spec.out);
  if (spec.kind == "conv2d") return std::make_unique<Conv2dLayer<S>>(spec.in, spec.out, spec.kernel, spec.stride);
  if (spec.kind == "relu") return std::make_unique<ReluLayer<S>>();
  if (spec.kind == "flatten") return std::make_unique<FlattenLayer<S>>();
  if (spec.kind == "tanh_scale") return std::make_unique<TanhScaleLayer<S>>(spec.lo, spec.hi);
  throw std::invalid_argument("unknown layer kind: " + spec.kind);
}

template <class S>
class Sequential {
 public:
  Sequential() = default;

  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  template <class L, class... Args>
  L& add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  void add_from_spec(const LayerSpec& spec) { layers_.push_back(layer_from_spec<S>(spec)); }

  Tensor<S> forward(const Tensor<S>& x, bool cache = true) {
    Tensor<S> y = x;
    for (auto& l : layers_) y = l->forward(y, cache);
    return y;
  }

  Tensor<S> backward(const Tensor<S>& dy) {
    Tensor<S> g = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
  }

  std::vector<ParamView<S>> params() {
    std::vector<ParamView<S>> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      for (auto p : layers_[i]->params()) {
        p.name = "l" + std::to_string(i) + "." + p.name;
        out.push_back(std::move(p));
      }
    }
    return out;
  }

  std::vector<LayerSpec> specs() const {
    std::vector<LayerSpec> out;
    out.reserve(layers_.size());
    for (const auto& l : layers_) out.push_back(l->spec());
    return out;
  }

  void init(Rng& rng) {
    for (auto& l : layers_) l->init(rng);
  }

  Layer<S>& layer(std::size_t i) { return *layers_.at(i); }
  std::size_t layer_count() const { return layers_.size(); }

 private:
  std::vector<std::unique_ptr<Layer<S>>> layers_;
};

template <class S>
void zero_grads(const std::vector<ParamView<S>>& params) {
  for (const auto& p : params) Eigen::Map<Vector<S>>(p.grad, p.size).setZero();
}

// mean over all elements of (pred - target)^2
template <class S>
S mse(const Tensor<S>& pred, const Tensor<S>& target) {
  return (pred.v - target.v).square().mean();
}

template <class S>
Tensor<S> mse_grad(const Tensor<S>& pred, const Tensor<S>& target) {
  Tensor<S> g = pred;
  g.v = S(2) * (pred.v - target.v) / static_cast<S>(pred.size());
  return g;
}

// standard bias-corrected Adam; one slot per parameter tensor
template <class S>
class Adam {
 public:
  Adam(const std::vector<ParamView<S>>& params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params) slots_.push_back({ArrayX<S>::Zero(p.size), ArrayX<S>::Zero(p.size)});
  }

  void step(const std::vector<ParamView<S>>& params) {
    if (params.size() != slots_.size()) throw std::invalid_argument("adam: parameter list changed");
    ++t_;
    const S c1 = S(1) - static_cast<S>(std::pow(beta1_, t_));
    const S c2 = S(1) - static_cast<S>(std::pow(beta2_, t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto g = Eigen::Map<const ArrayX<S>>(params[i].grad, params[i].size);
      auto x = Eigen::Map<ArrayX<S>>(params[i].value, params[i].size);
      auto& [m, v] = slots_[i];
      m = static_cast<S>(beta1_) * m + (S(1) - static_cast<S>(beta1_)) * g;
      v = static_cast<S>(beta2_) * v + (S(1) - static_cast<S>(beta2_)) * g.square();
      x -= static_cast<S>(lr_) * (m / c1) / ((v / c2).sqrt() + static_cast<S>(eps_));
    }
  }

  long step_count() const { return t_; }

 private:
  struct Slot {
    ArrayX<S> m, v;
  };
  std::vector<Slot> slots_;
  double lr_, beta1_, beta2_, eps_;
  long t_{0};
};

}  // namespace blochgame::nn
