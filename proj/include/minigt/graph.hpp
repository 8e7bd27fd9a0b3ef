#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "minigt/mat.hpp"

namespace minigt {

// Orthonormal pattern vectors, one per row.
struct PatternBank {
  Mat vectors;  // M x d
  int M = 0;
  int d = 0;
};

// Gram-Schmidt on a seeded Gaussian M x d matrix; deterministic per seed.
PatternBank make_patterns(int M, int d, std::uint64_t seed);

struct SyntheticConfig {
  int N = 1000;
  int M = 10;
  int d = 20;
  double c0 = 0.01;      // feature noise std
  double gamma_d = 0.4;  // discriminative fraction
  double eps_S = 0.0;    // confusion ratio target
  double eps_0 = 0.0;    // label corruption fraction
  int deg_min = 120;
  std::uint64_t seed = 1;
  // Clamp per-node connection targets to the discriminative class sizes
  // instead of rejecting the config. Small-gamma_d regimes (class size below
  // deg_min) are unreachable otherwise; with the cap, non-discriminative
  // degrees may end below deg_min.
  bool cap_connections = false;
};

// Integer counts the generator commits to for a given config.
struct SyntheticCounts {
  int per_discriminative_class = 0;          // round(gamma_d*N/2)
  std::vector<int> per_pattern;              // size M
  int edges_relevant = 0;                    // per non-discriminative node
  int edges_confusion = 0;                   // complement, sums to deg_min
};
SyntheticCounts plan_counts(const SyntheticConfig& cfg);

struct Graph {
  int N = 0;
  int d = 0;
  int class_count = 2;
  Mat features;                           // N x d, unit rows
  std::vector<int> labels;                // post-corruption; +/-1 for synthetic, class ids for loaded graphs
  std::vector<int> clean_labels;          // pre-corruption ground truth
  std::vector<int> pattern_of;            // 1..M for synthetic graphs, empty otherwise
  std::vector<std::vector<int>> adj;      // sorted, undirected, no self loops

  // Truncated all-pairs SPD cache; 0 means absent. Entries saturate at
  // spd_zcap-1 (unreachable included).
  int spd_zcap = 0;
  std::vector<std::uint16_t> spd_cache;

  int degree(int n) const { return static_cast<int>(adj[n].size()); }
  bool has_spd_cache() const { return spd_zcap > 0; }
  std::span<const std::uint16_t> spd_row(int n) const {
    return {spd_cache.data() + static_cast<std::size_t>(n) * N, static_cast<std::size_t>(N)};
  }
  // Builds (or rebuilds) the cache. Call before sharing the graph across
  // threads; the finished graph is then safely read-only.
  void build_spd_cache(int Z_cap);
};

// The synthetic structured graph: pattern assignment, Gaussian features on
// unit sphere, label-directed edges to discriminative nodes, intra-class
// degree top-up, then label corruption.
Graph generate(const SyntheticConfig& cfg);

// BFS distances from n, truncated: anything beyond Z_cap-1 (including
// unreachable nodes) reports Z_cap-1.
std::vector<std::uint16_t> spd(const Graph& g, int n, int Z_cap);

// Nodes at truncated SPD exactly z from n, ascending. For z below the cache
// saturation value this is the exact distance-z set.
std::vector<int> neighborhood(const Graph& g, int n, int z);

// |D_* cap N_z^n| - |D_# cap N_z^n|, with class-relevant/confusion sets
// resolved by n's pre-corruption label.
int winning_margin(const Graph& g, int n, int z);

struct MarginProfile {
  std::vector<double> delta_bar;       // index z-1 holds avg margin at distance z
  int z_m = 1;                         // argmax, ties toward smaller z
  double per_node_positive_fraction = 0.0;  // fraction with margin(z_m) > 0
};
MarginProfile margin_profile(const Graph& g, int Z_cap);

struct ConfusionSample {
  int node = 0;
  std::vector<int> sampled;
};

struct ConfusionEstimate {
  double ratio = 0.0;
  int used = 0;
  int skipped = 0;  // records with no discriminative node in the core shell
};

// Mean over records of |S_# cap N_zm| / |(S_* u S_#) cap N_zm|.
ConfusionEstimate confusion_ratio(const Graph& g, std::span<const ConfusionSample> samples, int z_m);

}
