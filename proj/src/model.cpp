#include "minigt/model.hpp"

#include <cmath>

#include "minigt/errors.hpp"
#include "minigt/kernels.hpp"

namespace minigt {

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::GT: return "GT";
    case Mode::GT_NOPE: return "GT_NOPE";
    case Mode::GCN: return "GCN";
  }
  return "?";
}

Mode mode_from_name(const std::string& s) {
  if (s == "GT") return Mode::GT;
  if (s == "GT_NOPE") return Mode::GT_NOPE;
  if (s == "GCN") return Mode::GCN;
  throw ConfigError("unknown mode '" + s + "' (expected GT, GT_NOPE, or GCN)");
}

GTParams init_params(const ModelConfig& cfg, int d, std::uint64_t seed) {
  if (cfg.m_a < 1 || cfg.m_b < 1 || cfg.m < 1 || cfg.Z < 1 || d < 1)
    throw ConfigError("init_params: dimensions must be positive");
  if (cfg.init.paper_literal_scale && (cfg.m_a != d || cfg.m_b != d))
    throw ConfigError("paper-literal init requires m_a = m_b = d");

  GTParams p;
  p.cfg = cfg;
  p.d = d;

  Rng rng(derive_seed(seed, "init"));

  p.W_O = Mat(cfg.m, cfg.m_b);
  for (double& v : p.W_O.a) v = cfg.init.xi * rng.normal();

  p.a.resize(cfg.m);
  const double unit = 1.0 / std::sqrt(static_cast<double>(cfg.m));
  for (double& v : p.a) v = rng.coin() ? unit : -unit;

  p.b.assign(cfg.Z, 0.0);

  // Value embedding: orthonormal U plus small noise (rows when m_b <= d,
  // otherwise columns).
  {
    Mat U;
    if (cfg.m_b <= d) {
      U = Mat::gaussian(cfg.m_b, d, rng);
      orthonormalize_rows(U);
    } else {
      Mat Ut = Mat::gaussian(d, cfg.m_b, rng);
      orthonormalize_rows(Ut);
      U = Mat(cfg.m_b, d);
      for (int i = 0; i < cfg.m_b; ++i)
        for (int j = 0; j < d; ++j) U(i, j) = Ut(j, i);
    }
    if (cfg.init.paper_literal_scale) {
      const double scale = cfg.init.sigma * cfg.init.sigma / (cfg.init.c0 * cfg.init.c0);
      p.W_V = U;
      kernels::ops().scal(scale, p.W_V.a.data(), p.W_V.a.size());
    } else {
      p.W_V = U;
      const double noise = cfg.init.sigma / std::sqrt(static_cast<double>(cfg.m_b));
      for (double& v : p.W_V.a) v += noise * rng.normal();
    }
  }

  if (cfg.mode == Mode::GCN) {
    p.W_Q = Mat(cfg.m_a, d);
    p.W_K = Mat(cfg.m_a, d);
  } else if (cfg.init.paper_literal_scale) {
    const double scale = cfg.init.delta * cfg.init.delta / (cfg.init.c0 * cfg.init.c0);
    p.W_Q = Mat::identity(cfg.m_a, d);
    kernels::ops().scal(scale, p.W_Q.a.data(), p.W_Q.a.size());
    p.W_K = p.W_Q;
  } else {
    const double noise = cfg.init.delta / std::sqrt(static_cast<double>(cfg.m_a));
    p.W_Q = Mat::identity(cfg.m_a, d);
    for (double& v : p.W_Q.a) v = cfg.init.attn_init_scale * v + noise * rng.normal();
    p.W_K = Mat::identity(cfg.m_a, d);
    for (double& v : p.W_K.a) v = cfg.init.attn_init_scale * v + noise * rng.normal();
  }
  return p;
}

int pe_index(int spd_value, int Z) {
  if (spd_value < 0) throw ArgumentError("pe_index: negative distance");
  const int i = spd_value + 1;
  return i < Z ? i : Z;
}

namespace {

// Truncated distances from n to every member of S, via the cache when it
// matches the model's Z, else one BFS.
void spd_slots(const GTParams& p, const Graph& g, int n, std::span<const int> S,
               std::vector<int>& slots) {
  slots.resize(S.size());
  if (g.has_spd_cache() && g.spd_zcap >= p.cfg.Z) {
    const auto row = g.spd_row(n);
    for (std::size_t i = 0; i < S.size(); ++i) slots[i] = pe_index(row[S[i]], p.cfg.Z);
  } else {
    const auto dist = spd(g, n, p.cfg.Z);
    for (std::size_t i = 0; i < S.size(); ++i) slots[i] = pe_index(dist[S[i]], p.cfg.Z);
  }
}

// Logits and softmax weights; the shared front half of forward().
void attention_weights(const GTParams& p, const Graph& g, int n, std::span<const int> S,
                       ForwardCache& cache) {
  if (S.empty()) throw ArgumentError("forward: empty sample set");
  if (n < 0 || n >= g.N) throw ArgumentError("forward: node out of range");
  const auto& k = kernels::ops();
  const int ns = static_cast<int>(S.size());

  cache.node = n;
  cache.S.assign(S.begin(), S.end());
  spd_slots(p, g, n, S, cache.pe_slots);

  // Raw logits g(s,n) = (W_K x_s).(W_Q x_n) + b[slot]; identically the b term
  // in GCN mode where W_K = W_Q = 0.
  cache.logits.resize(ns);
  if (p.cfg.mode == Mode::GCN) {
    cache.keys.reshape(0, 0);
    cache.query.clear();
    for (int i = 0; i < ns; ++i) cache.logits[i] = p.b[cache.pe_slots[i] - 1];
  } else {
    cache.query.resize(p.cfg.m_a);
    k.matvec(p.W_Q.a.data(), p.cfg.m_a, p.d, g.features.row(n), cache.query.data());
    cache.keys.reshape(ns, p.cfg.m_a);
    for (int i = 0; i < ns; ++i) {
      k.matvec(p.W_K.a.data(), p.cfg.m_a, p.d, g.features.row(S[i]), cache.keys.row(i));
      cache.logits[i] = k.dot(cache.keys.row(i), cache.query.data(), p.cfg.m_a) +
                        p.b[cache.pe_slots[i] - 1];
    }
  }

  // Stable softmax.
  cache.weights.resize(ns);
  const double mx = k.reduce_max(cache.logits.data(), ns);
  for (int i = 0; i < ns; ++i) cache.weights[i] = std::exp(cache.logits[i] - mx);
  const double total = k.reduce_sum(cache.weights.data(), ns);
  k.scal(1.0 / total, cache.weights.data(), ns);
}

}  // namespace

double forward(const GTParams& p, const Graph& g, int n, std::span<const int> S, ForwardCache& cache) {
  attention_weights(p, g, n, S, cache);
  const auto& k = kernels::ops();
  const int ns = static_cast<int>(S.size());

  // Value aggregation.
  cache.values.reshape(ns, p.cfg.m_b);
  cache.aggregated.assign(p.cfg.m_b, 0.0);
  for (int i = 0; i < ns; ++i) {
    k.matvec(p.W_V.a.data(), p.cfg.m_b, p.d, g.features.row(S[i]), cache.values.row(i));
    k.axpy(cache.weights[i], cache.values.row(i), cache.aggregated.data(), p.cfg.m_b);
  }

  // Two-layer head.
  cache.preact.resize(p.cfg.m);
  k.matvec(p.W_O.a.data(), p.cfg.m, p.cfg.m_b, cache.aggregated.data(), cache.preact.data());
  cache.relu_mask.resize(p.cfg.m);
  for (int i = 0; i < p.cfg.m; ++i) {
    const double h = cache.preact[i];
    cache.relu_mask[i] = h > 0.0 || (p.cfg.relu_active_at_zero && h == 0.0) ? 1 : 0;
  }
  cache.F = k.relu_dot(p.a.data(), cache.preact.data(), p.cfg.m);
  return cache.F;
}

double hinge_loss(double F, int y) {
  if (y != 1 && y != -1) throw ArgumentError("hinge_loss: label must be +/-1");
  const double margin = 1.0 - y * F;
  return margin > 0.0 ? margin : 0.0;
}

std::vector<double> attention_row(const GTParams& p, const Graph& g, int n, std::span<const int> S) {
  ForwardCache cache;
  attention_weights(p, g, n, S, cache);
  return cache.weights;
}

}  // namespace minigt
