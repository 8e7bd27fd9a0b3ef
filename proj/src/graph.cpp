#include "minigt/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <unordered_set>

#include "minigt/errors.hpp"

namespace minigt {

PatternBank make_patterns(int M, int d, std::uint64_t seed) {
  if (M < 2) throw ArgumentError("make_patterns: need at least two patterns");
  if (M > d) throw ArgumentError("make_patterns: pattern count exceeds feature dimension");
  Rng rng(derive_seed(seed, "patterns"));
  PatternBank bank;
  bank.M = M;
  bank.d = d;
  bank.vectors = Mat::gaussian(M, d, rng);
  orthonormalize_rows(bank.vectors);
  return bank;
}

SyntheticCounts plan_counts(const SyntheticConfig& cfg) {
  if (cfg.N <= 0) throw ConfigError("N must be positive");
  if (cfg.M < 2 || cfg.M > cfg.d) throw ConfigError("need 2 <= M <= d");
  if (cfg.gamma_d < 0.0 || cfg.gamma_d > 1.0) throw ConfigError("gamma_d must lie in [0,1]");
  if (cfg.eps_S < 0.0 || cfg.eps_S >= 0.5) throw ConfigError("eps_S must lie in [0, 0.5)");
  if (cfg.eps_0 < 0.0 || cfg.eps_0 >= 0.5) throw ConfigError("eps_0 must lie in [0, 0.5)");
  if (cfg.deg_min < 1) throw ConfigError("deg_min must be at least 1");
  if (cfg.c0 < 0.0) throw ConfigError("c0 must be nonnegative");

  SyntheticCounts counts;
  counts.per_discriminative_class = static_cast<int>(std::llround(cfg.gamma_d * cfg.N / 2.0));
  const int remaining = cfg.N - 2 * counts.per_discriminative_class;
  if (remaining < 0) throw ConfigError("discriminative classes exceed the node budget");
  if (remaining > 0 && cfg.M == 2)
    throw ConfigError("non-discriminative nodes exist but M=2 leaves no pattern for them");

  counts.per_pattern.assign(cfg.M, 0);
  counts.per_pattern[0] = counts.per_discriminative_class;
  counts.per_pattern[1] = counts.per_discriminative_class;
  if (cfg.M > 2) {
    const int base = remaining / (cfg.M - 2);
    const int extra = remaining % (cfg.M - 2);
    for (int p = 2; p < cfg.M; ++p) counts.per_pattern[p] = base + (p - 2 < extra ? 1 : 0);
  }

  counts.edges_confusion = static_cast<int>(std::llround(cfg.deg_min * cfg.eps_S));
  counts.edges_relevant = cfg.deg_min - counts.edges_confusion;
  const int needed = std::max(counts.edges_relevant, counts.edges_confusion);
  if (remaining > 0 && counts.per_discriminative_class < needed) {
    if (!cfg.cap_connections)
      throw ConfigError("too few discriminative nodes to satisfy per-node connection targets");
    counts.edges_relevant = std::min(counts.edges_relevant, counts.per_discriminative_class);
    counts.edges_confusion = std::min(counts.edges_confusion, counts.per_discriminative_class);
  }
  return counts;
}

namespace {

// Adds intra-class edges, lowest-degree nodes first, until every class member
// reaches deg_min. Partners are drawn uniformly among still-deficient
// non-neighbors when possible, otherwise among all class non-neighbors.
void top_up_class(std::vector<std::unordered_set<int>>& nbr, std::span<const int> members,
                  int deg_min, Rng& rng, const char* class_name) {
  for (;;) {
    int u = -1;
    std::size_t best = 0;
    for (int v : members) {
      if (static_cast<int>(nbr[v].size()) < deg_min && (u < 0 || nbr[v].size() < best)) {
        u = v;
        best = nbr[v].size();
      }
    }
    if (u < 0) return;

    std::vector<int> deficient, any;
    for (int v : members) {
      if (v == u || nbr[u].count(v)) continue;
      any.push_back(v);
      if (static_cast<int>(nbr[v].size()) < deg_min) deficient.push_back(v);
    }
    const std::vector<int>& pool = deficient.empty() ? any : deficient;
    if (pool.empty())
      throw GenerationError(std::string("degree top-up exhausted all pairs within class ") + class_name);
    const int v = pool[rng.below(pool.size())];
    nbr[u].insert(v);
    nbr[v].insert(u);
  }
}

}  // namespace

Graph generate(const SyntheticConfig& cfg) {
  const SyntheticCounts counts = plan_counts(cfg);
  const PatternBank bank = make_patterns(cfg.M, cfg.d, cfg.seed);

  Graph g;
  g.N = cfg.N;
  g.d = cfg.d;
  g.class_count = 2;

  // Pattern assignment in blocks: mu_1 nodes first, then mu_2, then the rest.
  g.pattern_of.assign(cfg.N, 0);
  {
    int node = 0;
    for (int p = 0; p < cfg.M; ++p)
      for (int i = 0; i < counts.per_pattern[p]; ++i) g.pattern_of[node++] = p + 1;
  }

  std::vector<int> class1, class2, nondisc;
  for (int n = 0; n < cfg.N; ++n) {
    if (g.pattern_of[n] == 1) class1.push_back(n);
    else if (g.pattern_of[n] == 2) class2.push_back(n);
    else nondisc.push_back(n);
  }

  // Features: N(mu_pattern, c0^2 I), renormalized to the unit sphere.
  {
    Rng rng(derive_seed(cfg.seed, "features"));
    g.features = Mat(cfg.N, cfg.d);
    for (int n = 0; n < cfg.N; ++n) {
      double* x = g.features.row(n);
      const double* mu = bank.vectors.row(g.pattern_of[n] - 1);
      for (int j = 0; j < cfg.d; ++j) x[j] = mu[j] + cfg.c0 * rng.normal();
      const double nrm = vec_norm({x, static_cast<std::size_t>(cfg.d)});
      if (!(nrm > 0.0)) throw GenerationError("zero-norm feature draw");
      kernels::ops().scal(1.0 / nrm, x, cfg.d);
    }
  }

  // Provisional labels: discriminative classes are fixed, the rest are fair
  // i.i.d. coins.
  g.clean_labels.assign(cfg.N, 0);
  {
    Rng rng(derive_seed(cfg.seed, "provisional_labels"));
    for (int n : class1) g.clean_labels[n] = +1;
    for (int n : class2) g.clean_labels[n] = -1;
    for (int n : nondisc) g.clean_labels[n] = rng.coin() ? +1 : -1;
  }

  std::vector<std::unordered_set<int>> nbr(cfg.N);
  auto add_edge = [&](int u, int v) {
    nbr[u].insert(v);
    nbr[v].insert(u);
  };

  // Label-directed edges from each non-discriminative node.
  {
    Rng rng(derive_seed(cfg.seed, "edges"));
    for (int n : nondisc) {
      const auto& relevant = g.clean_labels[n] > 0 ? class1 : class2;
      const auto& confusion = g.clean_labels[n] > 0 ? class2 : class1;
      for (int v : sample_without_replacement<int>(rng, relevant, counts.edges_relevant))
        add_edge(n, v);
      for (int v : sample_without_replacement<int>(rng, confusion, counts.edges_confusion))
        add_edge(n, v);
    }
  }

  // Intra-class top-up to the degree floor.
  {
    Rng rng(derive_seed(cfg.seed, "topup"));
    top_up_class(nbr, class1, cfg.deg_min, rng, "mu_1");
    top_up_class(nbr, class2, cfg.deg_min, rng, "mu_2");
  }

  // Label corruption: flip a uniformly chosen floor(eps_0*N) subset.
  g.labels = g.clean_labels;
  {
    const int flips = static_cast<int>(cfg.eps_0 * cfg.N);
    if (flips > 0) {
      Rng rng(derive_seed(cfg.seed, "corruption"));
      std::vector<int> all(cfg.N);
      std::iota(all.begin(), all.end(), 0);
      for (int v : sample_without_replacement<int>(rng, all, flips)) g.labels[v] = -g.labels[v];
    }
  }

  g.adj.resize(cfg.N);
  for (int n = 0; n < cfg.N; ++n) {
    g.adj[n].assign(nbr[n].begin(), nbr[n].end());
    std::sort(g.adj[n].begin(), g.adj[n].end());
  }
  return g;
}

std::vector<std::uint16_t> spd(const Graph& g, int n, int Z_cap) {
  if (n < 0 || n >= g.N) throw ArgumentError("spd: node out of range");
  if (Z_cap < 2) throw ArgumentError("spd: Z_cap must be at least 2");
  const std::uint16_t sat = static_cast<std::uint16_t>(Z_cap - 1);
  std::vector<std::uint16_t> dist(g.N, sat);
  dist[n] = 0;
  std::deque<int> queue{n};
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    const std::uint16_t du = dist[u];
    if (du + 1 >= sat) continue;  // deeper nodes keep the saturation value
    for (int v : g.adj[u]) {
      if (dist[v] == sat) {
        dist[v] = static_cast<std::uint16_t>(du + 1);
        queue.push_back(v);
      }
    }
  }
  return dist;
}

void Graph::build_spd_cache(int Z_cap) {
  if (Z_cap < 2) throw ArgumentError("build_spd_cache: Z_cap must be at least 2");
  spd_zcap = Z_cap;
  spd_cache.assign(static_cast<std::size_t>(N) * N, 0);
  for (int n = 0; n < N; ++n) {
    const auto row = spd(*this, n, Z_cap);
    std::copy(row.begin(), row.end(), spd_cache.begin() + static_cast<std::size_t>(n) * N);
  }
}

std::vector<int> neighborhood(const Graph& g, int n, int z) {
  if (n < 0 || n >= g.N) throw ArgumentError("neighborhood: node out of range");
  if (z < 1) throw ArgumentError("neighborhood: distance must be at least 1");
  std::vector<int> out;
  if (g.has_spd_cache() && z < g.spd_zcap - 1) {
    const auto row = g.spd_row(n);
    for (int v = 0; v < g.N; ++v)
      if (row[v] == z) out.push_back(v);
    return out;
  }
  // Exact even past any cache truncation: BFS capped one level deeper.
  const auto dist = spd(g, n, z + 2);
  for (int v = 0; v < g.N; ++v)
    if (dist[v] == z) out.push_back(v);
  return out;
}

namespace {

// Per-node margins for z = 1..Z_cap-1 in one BFS pass.
void node_margins(const Graph& g, int n, int Z_cap, std::span<int> out) {
  const auto dist = spd(g, n, Z_cap + 1);  // exact through Z_cap-1
  const int relevant = g.clean_labels[n] > 0 ? 1 : 2;
  const int confusion = 3 - relevant;
  std::fill(out.begin(), out.end(), 0);
  for (int v = 0; v < g.N; ++v) {
    const int zv = dist[v];
    if (zv < 1 || zv > Z_cap - 1) continue;
    if (g.pattern_of[v] == relevant) out[zv - 1] += 1;
    else if (g.pattern_of[v] == confusion) out[zv - 1] -= 1;
  }
}

}  // namespace

int winning_margin(const Graph& g, int n, int z) {
  if (g.pattern_of.empty()) throw ArgumentError("winning_margin: pattern assignments absent");
  if (n < 0 || n >= g.N) throw ArgumentError("winning_margin: node out of range");
  if (g.clean_labels[n] == 0) throw ArgumentError("winning_margin: node has no label");
  const int relevant = g.clean_labels[n] > 0 ? 1 : 2;
  const int confusion = 3 - relevant;
  int margin = 0;
  for (int v : neighborhood(g, n, z)) {
    if (g.pattern_of[v] == relevant) ++margin;
    else if (g.pattern_of[v] == confusion) --margin;
  }
  return margin;
}

MarginProfile margin_profile(const Graph& g, int Z_cap) {
  if (g.N == 0) throw ArgumentError("margin_profile: empty graph");
  if (g.pattern_of.empty()) throw ArgumentError("margin_profile: pattern assignments absent");
  if (Z_cap < 2) throw ArgumentError("margin_profile: Z_cap must be at least 2");

  const int nz = Z_cap - 1;
  MarginProfile profile;
  profile.delta_bar.assign(nz, 0.0);

  std::vector<std::vector<int>> margins(g.N, std::vector<int>(nz, 0));
  for (int n = 0; n < g.N; ++n) {
    node_margins(g, n, Z_cap, margins[n]);
    for (int z = 0; z < nz; ++z) profile.delta_bar[z] += margins[n][z];
  }
  for (int z = 0; z < nz; ++z) profile.delta_bar[z] /= g.N;

  profile.z_m = 1;
  for (int z = 1; z < nz; ++z)
    if (profile.delta_bar[z] > profile.delta_bar[profile.z_m - 1]) profile.z_m = z + 1;

  int positive = 0;
  for (int n = 0; n < g.N; ++n)
    if (margins[n][profile.z_m - 1] > 0) ++positive;
  profile.per_node_positive_fraction = static_cast<double>(positive) / g.N;
  return profile;
}

ConfusionEstimate confusion_ratio(const Graph& g, std::span<const ConfusionSample> samples, int z_m) {
  if (g.pattern_of.empty()) throw ArgumentError("confusion_ratio: pattern assignments absent");
  ConfusionEstimate est;
  double acc = 0.0;
  for (const auto& record : samples) {
    const auto shell = neighborhood(g, record.node, z_m);
    std::unordered_set<int> in_shell(shell.begin(), shell.end());
    const int relevant = g.clean_labels[record.node] > 0 ? 1 : 2;
    const int confusion = 3 - relevant;
    int n_rel = 0, n_conf = 0;
    for (int v : record.sampled) {
      if (!in_shell.count(v)) continue;
      if (g.pattern_of[v] == relevant) ++n_rel;
      else if (g.pattern_of[v] == confusion) ++n_conf;
    }
    if (n_rel + n_conf == 0) {
      ++est.skipped;
      continue;
    }
    acc += static_cast<double>(n_conf) / (n_rel + n_conf);
    ++est.used;
  }
  if (est.used == 0)
    throw NumericalError("confusion_ratio: every record had an empty denominator");
  est.ratio = acc / est.used;
  return est;
}

}  // namespace minigt
