#pragma once

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "specrl/rng.hpp"

namespace specrl {

// ============================================================================
//  Multilayer perceptron
//
//  Dense layers with tanh hidden activations and a linear output layer.
//  Weights are plain double matrices (row-major); gradients use the same
//  shapes, so an Mlp doubles as its own gradient buffer.
// ============================================================================

struct Mlp {
  std::vector<int> sizes;                 // layer widths, input first
  std::vector<std::vector<double>> W;     // W[l]: sizes[l+1] x sizes[l], row-major
  std::vector<std::vector<double>> b;     // b[l]: sizes[l+1]

  int num_layers() const { return static_cast<int>(W.size()); }
  int in_dim() const { return sizes.front(); }
  int out_dim() const { return sizes.back(); }

  static Mlp zeros(const std::vector<int>& sizes) {
    if (sizes.size() < 2) throw std::invalid_argument("mlp: needs input and output layers");
    Mlp m;
    m.sizes = sizes;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      m.W.emplace_back(static_cast<std::size_t>(sizes[l + 1]) * sizes[l], 0.0);
      m.b.emplace_back(sizes[l + 1], 0.0);
    }
    return m;
  }

  /// Uniform Xavier initialisation.
  static Mlp xavier(const std::vector<int>& sizes, Rng& rng) {
    Mlp m = zeros(sizes);
    for (int l = 0; l < m.num_layers(); ++l) {
      const double a = std::sqrt(6.0 / (sizes[l] + sizes[l + 1]));
      std::uniform_real_distribution<double> d(-a, a);
      for (auto& w : m.W[l]) w = d(rng);
    }
    return m;
  }

  struct Cache {
    std::vector<std::vector<double>> act;  // act[0] = input, act[l+1] = layer l output
  };

  std::vector<double> forward(const std::vector<double>& x, Cache* cache = nullptr) const {
    if (static_cast<int>(x.size()) != in_dim())
      throw std::invalid_argument("mlp: input dimension mismatch");
    if (cache) {
      cache->act.clear();
      cache->act.push_back(x);
    }
    std::vector<double> cur = x;
    for (int l = 0; l < num_layers(); ++l) {
      const int rows = sizes[l + 1], cols = sizes[l];
      std::vector<double> next(rows);
      for (int r = 0; r < rows; ++r) {
        double z = b[l][r];
        const double* wr = &W[l][static_cast<std::size_t>(r) * cols];
        for (int c = 0; c < cols; ++c) z += wr[c] * cur[c];
        next[r] = (l + 1 == num_layers()) ? z : std::tanh(z);
      }
      cur = std::move(next);
      if (cache) cache->act.push_back(cur);
    }
    return cur;
  }

  /// Accumulate gradients of a scalar loss into `grad`, given the gradient
  /// w.r.t. the (linear) output layer.
  void backward(const Cache& cache, const std::vector<double>& dout, Mlp& grad) const {
    std::vector<double> d = dout;
    for (int l = num_layers() - 1; l >= 0; --l) {
      const int rows = sizes[l + 1], cols = sizes[l];
      const auto& in = cache.act[l];
      for (int r = 0; r < rows; ++r) {
        grad.b[l][r] += d[r];
        double* gw = &grad.W[l][static_cast<std::size_t>(r) * cols];
        for (int c = 0; c < cols; ++c) gw[c] += d[r] * in[c];
      }
      if (l == 0) break;
      std::vector<double> dprev(cols, 0.0);
      for (int r = 0; r < rows; ++r) {
        const double* wr = &W[l][static_cast<std::size_t>(r) * cols];
        for (int c = 0; c < cols; ++c) dprev[c] += wr[c] * d[r];
      }
      // through the tanh of layer l-1
      for (int c = 0; c < cols; ++c) dprev[c] *= 1.0 - cache.act[l][c] * cache.act[l][c];
      d = std::move(dprev);
    }
  }

  template <typename Fn>
  void for_each_param(Fn&& fn) {
    for (int l = 0; l < num_layers(); ++l) {
      for (auto& w : W[l]) fn(w);
      for (auto& x : b[l]) fn(x);
    }
  }

  int num_params() const {
    int n = 0;
    for (int l = 0; l < num_layers(); ++l) n += static_cast<int>(W[l].size() + b[l].size());
    return n;
  }
};

inline bool mlp_equal(const Mlp& a, const Mlp& b) {
  return a.sizes == b.sizes && a.W == b.W && a.b == b.b;
}

// ----------------------------------------------------------------------------
//  Adam optimiser
// ----------------------------------------------------------------------------

struct Adam {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Mlp m, v;
  long long t = 0;

  explicit Adam(const Mlp& shape) : m(Mlp::zeros(shape.sizes)), v(Mlp::zeros(shape.sizes)) {}

  void step(Mlp& params, const Mlp& grad, double lr) {
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (int l = 0; l < params.num_layers(); ++l) {
      auto upd = [&](double& p, double& mm, double& vv, double g) {
        mm = beta1 * mm + (1.0 - beta1) * g;
        vv = beta2 * vv + (1.0 - beta2) * g * g;
        p -= lr * (mm / c1) / (std::sqrt(vv / c2) + eps);
      };
      for (std::size_t i = 0; i < params.W[l].size(); ++i)
        upd(params.W[l][i], m.W[l][i], v.W[l][i], grad.W[l][i]);
      for (std::size_t i = 0; i < params.b[l].size(); ++i)
        upd(params.b[l][i], m.b[l][i], v.b[l][i], grad.b[l][i]);
    }
  }
};

// ----------------------------------------------------------------------------
//  Checkpoint blocks
// ----------------------------------------------------------------------------

inline void save_mlp(std::ostream& out, const Mlp& m, const std::string& name) {
  out << "mlp " << name << "\nsizes";
  for (int s : m.sizes) out << ' ' << s;
  out << "\n" << std::setprecision(17);
  for (int l = 0; l < m.num_layers(); ++l) {
    out << "layer " << l << "\n";
    for (std::size_t i = 0; i < m.W[l].size(); ++i)
      out << m.W[l][i] << (i + 1 == m.W[l].size() ? "\n" : " ");
    for (std::size_t i = 0; i < m.b[l].size(); ++i)
      out << m.b[l][i] << (i + 1 == m.b[l].size() ? "\n" : " ");
  }
  out << "end\n";
}

inline Mlp load_mlp(std::istream& in, const std::string& expect_name) {
  std::string tok, name;
  if (!(in >> tok >> name) || tok != "mlp" || name != expect_name)
    throw std::runtime_error("checkpoint: expected 'mlp " + expect_name + "' block");
  if (!(in >> tok) || tok != "sizes") throw std::runtime_error("checkpoint: missing sizes");
  std::string rest;
  std::getline(in, rest);
  std::istringstream ss(rest);
  std::vector<int> sizes;
  int s;
  while (ss >> s) sizes.push_back(s);
  Mlp m = Mlp::zeros(sizes);
  for (int l = 0; l < m.num_layers(); ++l) {
    int idx;
    if (!(in >> tok >> idx) || tok != "layer" || idx != l)
      throw std::runtime_error("checkpoint: malformed layer block");
    for (auto& w : m.W[l])
      if (!(in >> w)) throw std::runtime_error("checkpoint: truncated weights");
    for (auto& x : m.b[l])
      if (!(in >> x)) throw std::runtime_error("checkpoint: truncated bias");
  }
  if (!(in >> tok) || tok != "end") throw std::runtime_error("checkpoint: missing end marker");
  return m;
}

}  // namespace specrl
