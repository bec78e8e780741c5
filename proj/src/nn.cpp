#include "destpred/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace destpred::nn {
namespace {

double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

void glorot_fill(Tensor& t, std::size_t fan_in, std::size_t fan_out,
                 Rng& rng) {
  const double lim = glorot_limit(fan_in, fan_out);
  for (double& x : t.v) x = rng.uniform(-lim, lim);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  Tensor t;
  t.shape = std::move(shape);
  t.v.assign(t.count(), 0.0);
  return t;
}

std::size_t Tensor::count() const {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

Parameter::Parameter(std::string n, std::vector<std::size_t> shape)
    : name(std::move(n)),
      value(Tensor::zeros(shape)),
      grad(Tensor::zeros(shape)) {}

void Parameter::zero_grad() {
  std::fill(grad.v.begin(), grad.v.end(), 0.0);
}

EmbeddingTable::EmbeddingTable(std::string name, std::size_t embed_dim,
                               std::size_t vocab, Rng& rng)
    : table(std::move(name), {embed_dim, vocab}) {
  glorot_fill(table.value, vocab, embed_dim, rng);
}

Tensor EmbeddingTable::forward(std::span<const int> ids) const {
  const std::size_t d = dim();
  const std::size_t nv = vocab();
  Tensor out = Tensor::zeros({ids.size(), d});
  for (std::size_t n = 0; n < ids.size(); ++n) {
    const int id = ids[n];
    if (id < 0 || static_cast<std::size_t>(id) >= nv) {
      throw std::invalid_argument("embedding id out of range: " +
                                  std::to_string(id));
    }
    for (std::size_t k = 0; k < d; ++k) {
      out.at(n, k) = table.value.at(k, static_cast<std::size_t>(id));
    }
  }
  return out;
}

void EmbeddingTable::backward(std::span<const int> ids, const Tensor& d_out) {
  const std::size_t d = dim();
  for (std::size_t n = 0; n < ids.size(); ++n) {
    const auto id = static_cast<std::size_t>(ids[n]);
    for (std::size_t k = 0; k < d; ++k) {
      table.grad.at(k, id) += d_out.at(n, k);
    }
  }
}

DenseLayer::DenseLayer(std::string name, std::size_t in, std::size_t out,
                       bool relu_, Rng& rng)
    : W(name + ".W", {out, in}), b(name + ".b", {out}), relu(relu_) {
  glorot_fill(W.value, in, out, rng);
}

std::vector<double> DenseLayer::forward(std::span<const double> x,
                                        Cache* cache) const {
  const std::size_t in = in_dim(), out = out_dim();
  if (x.size() != in) throw std::invalid_argument("dense input size mismatch");
  std::vector<double> pre(out);
  for (std::size_t r = 0; r < out; ++r) {
    double s = b.value.v[r];
    const double* wr = &W.value.v[r * in];
    for (std::size_t c = 0; c < in; ++c) s += wr[c] * x[c];
    pre[r] = s;
  }
  std::vector<double> y = pre;
  if (relu) {
    for (double& t : y) t = std::max(0.0, t);
  }
  if (cache) {
    cache->x.assign(x.begin(), x.end());
    cache->pre = std::move(pre);
  }
  return y;
}

std::vector<double> DenseLayer::backward(const Cache& cache,
                                         std::span<const double> d_y) {
  const std::size_t in = in_dim(), out = out_dim();
  std::vector<double> d_pre(d_y.begin(), d_y.end());
  if (relu) {
    for (std::size_t r = 0; r < out; ++r) {
      if (cache.pre[r] <= 0.0) d_pre[r] = 0.0;
    }
  }
  std::vector<double> d_x(in, 0.0);
  for (std::size_t r = 0; r < out; ++r) {
    const double g = d_pre[r];
    if (g == 0.0) continue;
    double* wgr = &W.grad.v[r * in];
    const double* wr = &W.value.v[r * in];
    for (std::size_t c = 0; c < in; ++c) {
      wgr[c] += g * cache.x[c];
      d_x[c] += g * wr[c];
    }
    b.grad.v[r] += g;
  }
  return d_x;
}

LstmLayer::LstmLayer(std::string name, std::size_t in, std::size_t hidden,
                     Rng& rng)
    : Wx(name + ".Wx", {4 * hidden, in}),
      Wh(name + ".Wh", {4 * hidden, hidden}),
      b(name + ".b", {4 * hidden}) {
  glorot_fill(Wx.value, in, hidden, rng);
  glorot_fill(Wh.value, hidden, hidden, rng);
  // Forget-gate block starts open so early training does not wash out state.
  for (std::size_t k = hidden; k < 2 * hidden; ++k) b.value.v[k] = 1.0;
}

Tensor LstmLayer::forward(const Tensor& x, const std::vector<char>& mask,
                          Cache* cache) const {
  const std::size_t T = x.rows();
  const std::size_t in = in_dim();
  const std::size_t H = hidden();
  if (x.cols() != in) throw std::invalid_argument("lstm input size mismatch");
  if (mask.size() != T) throw std::invalid_argument("mask length mismatch");

  Cache local;
  Cache& cc = cache ? *cache : local;
  cc.x = x;
  cc.mask = mask;
  cc.h.assign(T + 1, std::vector<double>(H, 0.0));
  cc.c.assign(T + 1, std::vector<double>(H, 0.0));
  cc.gates.assign(T, {});
  cc.tanh_c.assign(T, {});

  Tensor out = Tensor::zeros({T, H});
  for (std::size_t t = 0; t < T; ++t) {
    if (!mask[t]) {
      cc.h[t + 1] = cc.h[t];
      cc.c[t + 1] = cc.c[t];
      for (std::size_t k = 0; k < H; ++k) out.at(t, k) = cc.h[t + 1][k];
      continue;
    }
    std::vector<double> z(4 * H);
    for (std::size_t r = 0; r < 4 * H; ++r) {
      double s = b.value.v[r];
      const double* wxr = &Wx.value.v[r * in];
      for (std::size_t c2 = 0; c2 < in; ++c2) s += wxr[c2] * x.at(t, c2);
      const double* whr = &Wh.value.v[r * H];
      for (std::size_t c2 = 0; c2 < H; ++c2) s += whr[c2] * cc.h[t][c2];
      z[r] = s;
    }
    std::vector<double>& g = cc.gates[t];
    g.resize(4 * H);
    for (std::size_t k = 0; k < H; ++k) {
      g[k] = sigmoid(z[k]);                    // input gate
      g[H + k] = sigmoid(z[H + k]);            // forget gate
      g[2 * H + k] = std::tanh(z[2 * H + k]);  // candidate
      g[3 * H + k] = sigmoid(z[3 * H + k]);    // output gate
    }
    cc.c[t + 1].resize(H);
    cc.h[t + 1].resize(H);
    cc.tanh_c[t].resize(H);
    for (std::size_t k = 0; k < H; ++k) {
      cc.c[t + 1][k] = g[H + k] * cc.c[t][k] + g[k] * g[2 * H + k];
      cc.tanh_c[t][k] = std::tanh(cc.c[t + 1][k]);
      cc.h[t + 1][k] = g[3 * H + k] * cc.tanh_c[t][k];
      out.at(t, k) = cc.h[t + 1][k];
    }
  }
  return out;
}

Tensor LstmLayer::backward(const Cache& cache, const Tensor& d_out) {
  const std::size_t T = cache.x.rows();
  const std::size_t in = in_dim();
  const std::size_t H = hidden();
  Tensor d_x = Tensor::zeros({T, in});
  std::vector<double> dh(H, 0.0), dc(H, 0.0);
  for (std::size_t ti = T; ti-- > 0;) {
    for (std::size_t k = 0; k < H; ++k) dh[k] += d_out.at(ti, k);
    if (!cache.mask[ti]) continue;  // carried step: dh/dc flow through

    const std::vector<double>& g = cache.gates[ti];
    std::vector<double> dz(4 * H);
    std::vector<double> dc_prev(H);
    for (std::size_t k = 0; k < H; ++k) {
      const double i = g[k], f = g[H + k], cand = g[2 * H + k],
                   o = g[3 * H + k];
      const double tc = cache.tanh_c[ti][k];
      const double d_o = dh[k] * tc;
      const double d_c = dc[k] + dh[k] * o * (1.0 - tc * tc);
      const double d_i = d_c * cand;
      const double d_f = d_c * cache.c[ti][k];
      const double d_cand = d_c * i;
      dz[k] = d_i * i * (1.0 - i);
      dz[H + k] = d_f * f * (1.0 - f);
      dz[2 * H + k] = d_cand * (1.0 - cand * cand);
      dz[3 * H + k] = d_o * o * (1.0 - o);
      dc_prev[k] = d_c * f;
    }
    std::vector<double> dh_prev(H, 0.0);
    for (std::size_t r = 0; r < 4 * H; ++r) {
      const double gz = dz[r];
      if (gz == 0.0) continue;
      double* wxg = &Wx.grad.v[r * in];
      const double* wxr = &Wx.value.v[r * in];
      for (std::size_t c2 = 0; c2 < in; ++c2) {
        wxg[c2] += gz * cache.x.at(ti, c2);
        d_x.at(ti, c2) += gz * wxr[c2];
      }
      double* whg = &Wh.grad.v[r * H];
      const double* whr = &Wh.value.v[r * H];
      for (std::size_t c2 = 0; c2 < H; ++c2) {
        whg[c2] += gz * cache.h[ti][c2];
        dh_prev[c2] += gz * whr[c2];
      }
      b.grad.v[r] += gz;
    }
    dh = std::move(dh_prev);
    dc = std::move(dc_prev);
  }
  return d_x;
}

LstmStack::LstmStack(const std::string& name, std::size_t in,
                     std::size_t hidden, int n_layers, Rng& rng) {
  if (n_layers < 1) throw std::invalid_argument("lstm stack needs >= 1 layer");
  layers.reserve(static_cast<std::size_t>(n_layers));
  for (int l = 0; l < n_layers; ++l) {
    layers.emplace_back(name + std::to_string(l), l == 0 ? in : hidden, hidden,
                        rng);
  }
}

std::vector<double> LstmStack::forward(const Tensor& x,
                                       const std::vector<char>& mask,
                                       Cache* cache) const {
  Cache local;
  Cache& cc = cache ? *cache : local;
  cc.layers.assign(layers.size(), {});
  cc.mask = mask;
  cc.steps = x.rows();
  cc.last_unmasked = -1;
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (mask[t]) cc.last_unmasked = static_cast<int>(t);
  }
  Tensor cur = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    cur = layers[l].forward(cur, mask, &cc.layers[l]);
  }
  const std::size_t H = hidden();
  std::vector<double> out(H, 0.0);
  if (cc.last_unmasked >= 0) {
    for (std::size_t k = 0; k < H; ++k) {
      out[k] = cur.at(static_cast<std::size_t>(cc.last_unmasked), k);
    }
  }
  return out;
}

Tensor LstmStack::backward(const Cache& cache,
                           std::span<const double> d_final) {
  const std::size_t H = hidden();
  Tensor d = Tensor::zeros({cache.steps, H});
  if (cache.last_unmasked >= 0) {
    for (std::size_t k = 0; k < H; ++k) {
      d.at(static_cast<std::size_t>(cache.last_unmasked), k) = d_final[k];
    }
  }
  for (std::size_t l = layers.size(); l-- > 0;) {
    d = layers[l].backward(cache.layers[l], d);
  }
  return d;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("softmax of empty vector");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> y(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    y[i] = std::exp(logits[i] - mx);
    sum += y[i];
  }
  for (double& t : y) t /= sum;
  return y;
}

std::vector<double> softmax_backward(std::span<const double> y,
                                     std::span<const double> d_y) {
  double dot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) dot += y[i] * d_y[i];
  std::vector<double> d_x(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) d_x[i] = y[i] * (d_y[i] - dot);
  return d_x;
}

std::vector<double> concat(std::span<const double> a,
                           std::span<const double> b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Adam::Adam(double lr_, double beta1, double beta2, double eps)
    : lr(lr_), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(std::span<Parameter* const> params) {
  if (bound_.empty()) {
    bound_.assign(params.begin(), params.end());
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i]->size(), 0.0);
      v_[i].assign(params[i]->size(), 0.0);
    }
  } else if (bound_.size() != params.size() ||
             !std::equal(bound_.begin(), bound_.end(), params.begin())) {
    throw std::invalid_argument("optimizer bound to a different parameter set");
  }

  for (const Parameter* p : params) {
    for (double g : p->grad.v) {
      if (!std::isfinite(g)) throw std::runtime_error("diverged");
    }
  }

  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double g = p.grad.v[k];
      m_[i][k] = beta1_ * m_[i][k] + (1.0 - beta1_) * g;
      v_[i][k] = beta2_ * v_[i][k] + (1.0 - beta2_) * g * g;
      const double mhat = m_[i][k] / bc1;
      const double vhat = v_[i][k] / bc2;
      p.value.v[k] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

GradCheckReport gradient_check(std::span<Parameter* const> params,
                               const std::function<double()>& loss,
                               const std::function<void()>& compute_grads,
                               double h, double denom_floor) {
  compute_grads();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const Parameter* p : params) analytic.push_back(p->grad.v);

  GradCheckReport rep;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double saved = p.value.v[k];
      p.value.v[k] = saved + h;
      const double lp = loss();
      p.value.v[k] = saved - h;
      const double lm = loss();
      p.value.v[k] = saved;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = analytic[i][k];
      const double denom =
          std::max({std::abs(fd), std::abs(an), denom_floor});
      const double rel = std::abs(fd - an) / denom;
      ++rep.params_checked;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_param = p.name;
        rep.worst_index = k;
        rep.analytic = an;
        rep.numeric = fd;
      }
    }
  }
  return rep;
}

}  // namespace destpred::nn
