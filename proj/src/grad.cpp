#include "minigt/grad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "minigt/errors.hpp"
#include "minigt/kernels.hpp"

namespace minigt {

Grads Grads::zeros_like(const GTParams& p) {
  Grads g;
  g.dW_Q = Mat(p.cfg.m_a, p.d);
  g.dW_K = Mat(p.cfg.m_a, p.d);
  g.dW_V = Mat(p.cfg.m_b, p.d);
  g.dW_O = Mat(p.cfg.m, p.cfg.m_b);
  g.db.assign(p.cfg.Z, 0.0);
  return g;
}

Grads backward(const ForwardCache& cache, const GTParams& p, const Graph& g, int n, int y) {
  if (cache.node != n || static_cast<int>(cache.preact.size()) != p.cfg.m ||
      cache.values.cols != p.cfg.m_b)
    throw Error("internal: forward cache does not match parameters");
  if (y != 1 && y != -1) throw ArgumentError("backward: label must be +/-1");

  Grads out = Grads::zeros_like(p);
  if (1.0 - y * cache.F <= 0.0) return out;  // hinge plateau

  const auto& k = kernels::ops();
  const int ns = static_cast<int>(cache.S.size());
  const double dF = -static_cast<double>(y);

  // dL/dh masked through the ReLU, folded with the frozen output layer.
  std::vector<double> dh(p.cfg.m);
  for (int i = 0; i < p.cfg.m; ++i) dh[i] = cache.relu_mask[i] ? dF * p.a[i] : 0.0;

  // dW_O = dh . aggregated^T
  k.ger(1.0, dh.data(), p.cfg.m, cache.aggregated.data(), p.cfg.m_b, out.dW_O.a.data());

  // dAgg = W_O^T dh
  std::vector<double> d_agg(p.cfg.m_b);
  k.matvec_t(p.W_O.a.data(), p.cfg.m, p.cfg.m_b, dh.data(), d_agg.data());

  // Aggregated = W_V (sum_i w_i x_i), so dW_V = dAgg . (sum_i w_i x_i)^T.
  std::vector<double> xbar(p.d, 0.0);
  for (int i = 0; i < ns; ++i)
    k.axpy(cache.weights[i], g.features.row(cache.S[i]), xbar.data(), p.d);
  k.ger(1.0, d_agg.data(), p.cfg.m_b, xbar.data(), p.d, out.dW_V.a.data());

  if (p.attention_frozen()) return out;  // GCN: W_Q, W_K, b never move

  // Softmax backprop: dlogit_i = w_i (dw_i - sum_j w_j dw_j).
  std::vector<double> dlogit(ns);
  double mixed = 0.0;
  for (int i = 0; i < ns; ++i) {
    dlogit[i] = k.dot(d_agg.data(), cache.values.row(i), p.cfg.m_b);
    mixed += cache.weights[i] * dlogit[i];
  }
  for (int i = 0; i < ns; ++i) dlogit[i] = cache.weights[i] * (dlogit[i] - mixed);

  // dW_Q = (sum_i dlogit_i k_i) x_n^T ; dW_K = q (sum_i dlogit_i x_i)^T.
  std::vector<double> ksum(p.cfg.m_a, 0.0), xsum(p.d, 0.0);
  for (int i = 0; i < ns; ++i) {
    k.axpy(dlogit[i], cache.keys.row(i), ksum.data(), p.cfg.m_a);
    k.axpy(dlogit[i], g.features.row(cache.S[i]), xsum.data(), p.d);
  }
  k.ger(1.0, ksum.data(), p.cfg.m_a, g.features.row(n), p.d, out.dW_Q.a.data());
  k.ger(1.0, cache.query.data(), p.cfg.m_a, xsum.data(), p.d, out.dW_K.a.data());

  if (!p.pe_frozen())
    for (int i = 0; i < ns; ++i) out.db[cache.pe_slots[i] - 1] += dlogit[i];
  return out;
}

namespace {

struct TensorRef {
  double* data;
  std::size_t size;
  bool frozen;
};

std::vector<TensorRef> trainable_tensors(GTParams& p) {
  return {
      {p.W_Q.a.data(), p.W_Q.a.size(), p.attention_frozen()},
      {p.W_K.a.data(), p.W_K.a.size(), p.attention_frozen()},
      {p.W_V.a.data(), p.W_V.a.size(), false},
      {p.W_O.a.data(), p.W_O.a.size(), false},
      {p.b.data(), p.b.size(), p.pe_frozen()},
  };
}

std::vector<double*> grad_arrays(Grads& g) {
  return {g.dW_Q.a.data(), g.dW_K.a.data(), g.dW_V.a.data(), g.dW_O.a.data(), g.db.data()};
}

std::vector<std::pair<const double*, std::size_t>> grad_views(const Grads& g) {
  return {{g.dW_Q.a.data(), g.dW_Q.a.size()},
          {g.dW_K.a.data(), g.dW_K.a.size()},
          {g.dW_V.a.data(), g.dW_V.a.size()},
          {g.dW_O.a.data(), g.dW_O.a.size()},
          {g.db.data(), g.db.size()}};
}

bool masks_equal(const ForwardCache& a, const ForwardCache& b) {
  return a.relu_mask == b.relu_mask;
}

}  // namespace

Grads finite_diff(const GTParams& p, const Graph& g, int n, std::span<const int> S, int y, double h) {
  if (!(h >= 1e-6 && h <= 1e-3))
    throw ArgumentError("finite_diff: step must lie in [1e-6, 1e-3]");

  GTParams work = p;
  Grads out = Grads::zeros_like(p);
  auto tensors = trainable_tensors(work);
  auto grads = grad_arrays(out);

  ForwardCache center, plus, minus;
  forward(p, g, n, S, center);
  const double center_margin = 1.0 - y * center.F;

  for (std::size_t t = 0; t < tensors.size(); ++t) {
    if (tensors[t].frozen) continue;  // not a parameter in this mode
    for (std::size_t j = 0; j < tensors[t].size; ++j) {
      double& coord = tensors[t].data[j];
      const double saved = coord;

      coord = saved + h;
      const double f_plus = forward(work, g, n, S, plus);
      coord = saved - h;
      const double f_minus = forward(work, g, n, S, minus);
      coord = saved;

      const bool hinge_active_plus = 1.0 - y * f_plus > 0.0;
      const bool hinge_active_minus = 1.0 - y * f_minus > 0.0;
      const bool near_kink = std::abs(center_margin) <= 10.0 * h ||
                             hinge_active_plus != hinge_active_minus ||
                             !masks_equal(plus, minus);
      if (near_kink) {
        grads[t][j] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      grads[t][j] = (hinge_loss(f_plus, y) - hinge_loss(f_minus, y)) / (2.0 * h);
    }
  }
  return out;
}

double max_rel_error(const Grads& lhs, const Grads& rhs, double floor) {
  const auto lv = grad_views(lhs);
  const auto rv = grad_views(rhs);
  double worst = 0.0;
  for (std::size_t t = 0; t < lv.size(); ++t) {
    if (lv[t].second != rv[t].second) throw Error("internal: gradient shape mismatch");
    for (std::size_t j = 0; j < lv[t].second; ++j) {
      const double a = lv[t].first[j];
      const double b = rv[t].first[j];
      if (std::isnan(a) || std::isnan(b)) continue;
      const double denom = std::max({std::abs(a), std::abs(b), floor});
      worst = std::max(worst, std::abs(a - b) / denom);
    }
  }
  return worst;
}

namespace {

double pairwise_sum(std::vector<double>& buf) {
  std::size_t n = buf.size();
  while (n > 1) {
    std::size_t half = n / 2;
    for (std::size_t i = 0; i < half; ++i) buf[i] = buf[2 * i] + buf[2 * i + 1];
    if (n % 2) {
      buf[half] = buf[n - 1];
      ++half;
    }
    n = half;
  }
  return buf[0];
}

}  // namespace

Grads batch_mean(std::span<const Grads> batch) {
  if (batch.empty()) throw ArgumentError("batch_mean: empty batch");
  Grads out = batch[0];
  auto dst = grad_arrays(out);
  const auto shape = grad_views(out);

  std::vector<std::vector<std::pair<const double*, std::size_t>>> views;
  views.reserve(batch.size());
  for (const Grads& g : batch) {
    views.push_back(grad_views(g));
    for (std::size_t t = 0; t < shape.size(); ++t)
      if (views.back()[t].second != shape[t].second)
        throw Error("internal: gradient shape mismatch");
  }

  std::vector<double> buf(batch.size());
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (std::size_t t = 0; t < shape.size(); ++t) {
    for (std::size_t j = 0; j < shape[t].second; ++j) {
      for (std::size_t k = 0; k < batch.size(); ++k) buf[k] = views[k][t].first[j];
      dst[t][j] = pairwise_sum(buf) * inv;
    }
  }
  return out;
}

void sgd_step(GTParams& p, std::span<const Grads> batch, double eta) {
  if (batch.empty()) throw ArgumentError("sgd_step: empty batch");
  const Grads mean = batch_mean(batch);
  auto tensors = trainable_tensors(p);
  const auto views = grad_views(mean);
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    if (tensors[t].frozen) continue;
    if (tensors[t].size != views[t].second) throw Error("internal: gradient shape mismatch");
    kernels::ops().axpy(-eta, views[t].first, tensors[t].data, tensors[t].size);
  }
}

}  // namespace minigt
