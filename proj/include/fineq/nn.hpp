#ifndef FINEQ_NN_HPP
#define FINEQ_NN_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fineq/rng.hpp"
#include "fineq/types.hpp"

// Minimal dense networks in double precision: enough for the four-unit actor
// and the 32-unit critic, with gradients that can be checked against finite
// differences.
namespace fineq::nn {

struct Layer {
  int in = 0;
  int out = 0;
  std::vector<double> w;  // row-major [out][in]
  std::vector<double> b;
};

// Fully-connected net, rectified-linear hidden activations, linear output.
struct Mlp {
  std::vector<Layer> layers;

  static Mlp make(std::span<const int> sizes) {
    if (sizes.size() < 2)
      throw ValidationError("network needs at least input and output sizes");
    Mlp net;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
      Layer l;
      l.in = sizes[i];
      l.out = sizes[i + 1];
      if (l.in <= 0 || l.out <= 0) throw ValidationError("layer sizes must be positive");
      l.w.assign(static_cast<std::size_t>(l.in) * l.out, 0.0);
      l.b.assign(static_cast<std::size_t>(l.out), 0.0);
      net.layers.push_back(std::move(l));
    }
    return net;
  }

  int input_size() const { return layers.front().in; }
  int output_size() const { return layers.back().out; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers) n += l.w.size() + l.b.size();
    return n;
  }

  void init_uniform(Rng& rng) {
    for (Layer& l : layers) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
      for (double& v : l.w) v = rng.uniform(-bound, bound);
      for (double& v : l.b) v = rng.uniform(-bound, bound);
    }
  }

  bool finite() const {
    for (const Layer& l : layers) {
      for (double v : l.w)
        if (!std::isfinite(v)) return false;
      for (double v : l.b)
        if (!std::isfinite(v)) return false;
    }
    return true;
  }
};

// Per-layer activations kept from a forward pass for the backward pass.
struct Workspace {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;
};

inline std::span<const double> forward(const Mlp& net, std::span<const double> x,
                                       Workspace& ws) {
  const std::size_t depth = net.layers.size();
  ws.pre.resize(depth);
  ws.post.resize(depth);
  std::span<const double> cur = x;
  for (std::size_t li = 0; li < depth; ++li) {
    const Layer& l = net.layers[li];
    auto& pre = ws.pre[li];
    pre.assign(static_cast<std::size_t>(l.out), 0.0);
    for (int o = 0; o < l.out; ++o) {
      double acc = l.b[static_cast<std::size_t>(o)];
      const double* row = l.w.data() + static_cast<std::size_t>(o) * l.in;
      for (int i = 0; i < l.in; ++i) acc += row[i] * cur[static_cast<std::size_t>(i)];
      pre[static_cast<std::size_t>(o)] = acc;
    }
    auto& post = ws.post[li];
    post = pre;
    if (li + 1 < depth)
      for (double& v : post) v = v > 0.0 ? v : 0.0;
    cur = post;
  }
  return cur;
}

struct Gradients {
  std::vector<std::vector<double>> w;
  std::vector<std::vector<double>> b;

  static Gradients zeros_like(const Mlp& net) {
    Gradients g;
    for (const Layer& l : net.layers) {
      g.w.emplace_back(l.w.size(), 0.0);
      g.b.emplace_back(l.b.size(), 0.0);
    }
    return g;
  }

  void reset() {
    for (auto& v : w) std::fill(v.begin(), v.end(), 0.0);
    for (auto& v : b) std::fill(v.begin(), v.end(), 0.0);
  }
};

// Accumulates dL/dparams for one sample; `dout` is dL/d(network output) and
// `ws` must come from a forward pass of the same input.
inline void backward(const Mlp& net, const Workspace& ws, std::span<const double> x,
                     std::span<const double> dout, Gradients& grads) {
  const int depth = static_cast<int>(net.layers.size());
  std::vector<double> delta(dout.begin(), dout.end());
  for (int li = depth - 1; li >= 0; --li) {
    const Layer& l = net.layers[static_cast<std::size_t>(li)];
    if (li + 1 < depth) {
      // rectifier gate of this layer's own output
      const auto& pre = ws.pre[static_cast<std::size_t>(li)];
      for (int o = 0; o < l.out; ++o)
        if (pre[static_cast<std::size_t>(o)] <= 0.0) delta[static_cast<std::size_t>(o)] = 0.0;
    }
    const std::span<const double> input =
        li == 0 ? x : std::span<const double>(ws.post[static_cast<std::size_t>(li - 1)]);
    auto& gw = grads.w[static_cast<std::size_t>(li)];
    auto& gb = grads.b[static_cast<std::size_t>(li)];
    for (int o = 0; o < l.out; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      gb[static_cast<std::size_t>(o)] += d;
      double* grow = gw.data() + static_cast<std::size_t>(o) * l.in;
      for (int i = 0; i < l.in; ++i) grow[i] += d * input[static_cast<std::size_t>(i)];
    }
    if (li > 0) {
      std::vector<double> prev(static_cast<std::size_t>(l.in), 0.0);
      for (int o = 0; o < l.out; ++o) {
        const double d = delta[static_cast<std::size_t>(o)];
        if (d == 0.0) continue;
        const double* row = l.w.data() + static_cast<std::size_t>(o) * l.in;
        for (int i = 0; i < l.in; ++i) prev[static_cast<std::size_t>(i)] += d * row[i];
      }
      delta = std::move(prev);
    }
  }
}

inline double global_norm(const Gradients& g) {
  double sq = 0.0;
  for (const auto& v : g.w)
    for (double x : v) sq += x * x;
  for (const auto& v : g.b)
    for (double x : v) sq += x * x;
  return std::sqrt(sq);
}

inline void clip_global_norm(Gradients& g, double max_norm) {
  const double norm = global_norm(g);
  if (norm <= max_norm || norm == 0.0) return;
  const double scale = max_norm / norm;
  for (auto& v : g.w)
    for (double& x : v) x *= scale;
  for (auto& v : g.b)
    for (double& x : v) x *= scale;
}

inline void sgd_step(Mlp& net, const Gradients& g, double lr) {
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    Layer& l = net.layers[li];
    for (std::size_t i = 0; i < l.w.size(); ++i) l.w[i] -= lr * g.w[li][i];
    for (std::size_t i = 0; i < l.b.size(); ++i) l.b[i] -= lr * g.b[li][i];
  }
}

// Adaptive-moment alternative to the plain step; off by default in training
// configs because the step sizes in the hyperparameter table are plain rates.
struct AdamState {
  Gradients m;
  Gradients v;
  long steps = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros_like(const Mlp& net) {
    AdamState s;
    s.m = Gradients::zeros_like(net);
    s.v = Gradients::zeros_like(net);
    return s;
  }
};

inline void adam_step(Mlp& net, AdamState& st, const Gradients& g, double lr) {
  ++st.steps;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.steps));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.steps));
  auto update = [&](std::vector<double>& p, std::vector<double>& m, std::vector<double>& v,
                    const std::vector<double>& grad) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = st.beta1 * m[i] + (1.0 - st.beta1) * grad[i];
      v[i] = st.beta2 * v[i] + (1.0 - st.beta2) * grad[i] * grad[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + st.eps);
    }
  };
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    update(net.layers[li].w, st.m.w[li], st.v.w[li], g.w[li]);
    update(net.layers[li].b, st.m.b[li], st.v.b[li], g.b[li]);
  }
}

}  // namespace fineq::nn

#endif  // FINEQ_NN_HPP
