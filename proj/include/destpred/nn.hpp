#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "destpred/rng.hpp"

namespace destpred::nn {

// Row-major dense tensor of 64-bit floats.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> v;

  Tensor() = default;
  static Tensor zeros(std::vector<std::size_t> shape);
  std::size_t count() const;

  // 2-D helpers; shape {rows, cols}. Vectors use shape {n}.
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  double& at(std::size_t r, std::size_t c) { return v[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * cols() + c]; }
};

// Named value with a same-shaped gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, std::vector<std::size_t> shape);
  void zero_grad();
  std::size_t size() const { return value.v.size(); }
};

// Table of shape {embed_dim, vocab}; a lookup of id yields column id.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::string name, std::size_t embed_dim, std::size_t vocab,
                 Rng& rng);

  std::size_t dim() const { return table.value.rows(); }
  std::size_t vocab() const { return table.value.cols(); }

  // Output row n = column ids[n]; throws std::invalid_argument on an id
  // outside [0, vocab).
  Tensor forward(std::span<const int> ids) const;
  // Scatter-adds d_out rows into the looked-up columns' gradients.
  void backward(std::span<const int> ids, const Tensor& d_out);

  Parameter table;
};

class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(std::string name, std::size_t in, std::size_t out, bool relu,
             Rng& rng);

  struct Cache {
    std::vector<double> x;
    std::vector<double> pre;  // affine output before the nonlinearity
  };

  std::vector<double> forward(std::span<const double> x,
                              Cache* cache = nullptr) const;
  // Returns d_x; accumulates into W.grad / b.grad.
  std::vector<double> backward(const Cache& cache,
                               std::span<const double> d_y);

  std::size_t in_dim() const { return W.value.cols(); }
  std::size_t out_dim() const { return W.value.rows(); }

  Parameter W;  // {out, in}
  Parameter b;  // {out}
  bool relu = false;
};

// Single LSTM layer over a right-padded sequence. Masked steps carry h and c
// through unchanged and never read their input row.
class LstmLayer {
 public:
  LstmLayer() = default;
  LstmLayer(std::string name, std::size_t in, std::size_t hidden, Rng& rng);

  struct Cache {
    Tensor x;                               // {T, in}
    std::vector<char> mask;                 // 1 = active
    std::vector<std::vector<double>> h;     // [T+1][H], h[0] = zeros
    std::vector<std::vector<double>> c;     // [T+1][H]
    std::vector<std::vector<double>> gates; // [T][4H] post-activation i,f,g,o
    std::vector<std::vector<double>> tanh_c;
  };

  // Returns per-step hidden states {T, H} (carried values on masked steps).
  Tensor forward(const Tensor& x, const std::vector<char>& mask,
                 Cache* cache = nullptr) const;
  // d_out {T, H} -> d_x {T, in}; accumulates weight gradients.
  Tensor backward(const Cache& cache, const Tensor& d_out);

  std::size_t hidden() const { return Wh.value.cols(); }
  std::size_t in_dim() const { return Wx.value.cols(); }

  Parameter Wx;  // {4H, in}
  Parameter Wh;  // {4H, H}
  Parameter b;   // {4H}; forget-gate block initialized to 1
};

// Many-to-one stack: emits the top layer's hidden state at the last unmasked
// step (zeros when every step is masked).
class LstmStack {
 public:
  LstmStack() = default;
  LstmStack(const std::string& name, std::size_t in, std::size_t hidden,
            int n_layers, Rng& rng);

  struct Cache {
    std::vector<LstmLayer::Cache> layers;
    std::vector<char> mask;
    int last_unmasked = -1;
    std::size_t steps = 0;
  };

  std::vector<double> forward(const Tensor& x, const std::vector<char>& mask,
                              Cache* cache = nullptr) const;
  Tensor backward(const Cache& cache, std::span<const double> d_final);

  std::size_t hidden() const { return layers.back().hidden(); }
  std::vector<LstmLayer> layers;
};

// Numerically stable softmax: positive outputs summing to 1.
std::vector<double> softmax(std::span<const double> logits);
// d_logits given softmax output y and upstream d_y.
std::vector<double> softmax_backward(std::span<const double> y,
                                     std::span<const double> d_y);
// a first, b second.
std::vector<double> concat(std::span<const double> a,
                           std::span<const double> b);

// Adaptive-moment optimizer with bias correction. The parameter list is bound
// on the first step and must stay identical afterwards. A non-finite gradient
// raises std::runtime_error("diverged").
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  void step(std::span<Parameter* const> params);

  double lr;

 private:
  double beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
  std::vector<Parameter*> bound_;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t params_checked = 0;
};

// Central finite differences with step h over every parameter scalar.
// `loss` evaluates the objective at the current parameter values;
// `compute_grads` zeroes gradients and runs the analytic backward pass.
// Relative error denominator is max(|analytic|, |numeric|, denom_floor).
GradCheckReport gradient_check(std::span<Parameter* const> params,
                               const std::function<double()>& loss,
                               const std::function<void()>& compute_grads,
                               double h = 1e-5, double denom_floor = 1e-2);

}  // namespace destpred::nn
