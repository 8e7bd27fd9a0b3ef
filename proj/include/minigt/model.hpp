#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "minigt/graph.hpp"
#include "minigt/mat.hpp"

namespace minigt {

enum class Mode { GT, GT_NOPE, GCN };

const char* mode_name(Mode m);
Mode mode_from_name(const std::string& s);

struct InitConfig {
  double delta = 0.2;   // attention embedding noise
  double sigma = 0.1;   // value embedding noise
  double xi = 0.01;     // W_O entry std
  double attn_init_scale = 1.0;
  double c0 = 0.01;     // only used by the literal scaling below
  // Reproduces the printed init scales delta^2/c0^2 and sigma^2/c0^2 verbatim
  // (saturates the softmax immediately; kept for faithfulness experiments).
  bool paper_literal_scale = false;
};

struct ModelConfig {
  int m_a = 20;
  int m_b = 20;
  int m = 400;
  int Z = 20;
  Mode mode = Mode::GT;
  InitConfig init;
  bool relu_active_at_zero = true;  // subgradient convention at the ReLU kink
};

struct GTParams {
  ModelConfig cfg;
  int d = 0;
  Mat W_Q;                 // m_a x d
  Mat W_K;                 // m_a x d
  Mat W_V;                 // m_b x d
  Mat W_O;                 // m x m_b
  std::vector<double> a;   // m entries, +/-1/sqrt(m), frozen
  std::vector<double> b;   // Z positional biases

  bool attention_frozen() const { return cfg.mode == Mode::GCN; }
  bool pe_frozen() const { return cfg.mode != Mode::GT; }
};

// W_O ~ N(0, xi^2); a uniform +/-1/sqrt(m); b = 0; W_Q = W_K =
// attn_init_scale * I + N(0, delta^2/m_a); W_V = orthonormal U + N(0,
// sigma^2/m_b). GCN mode zeroes and freezes W_Q, W_K, b; no-PE mode zeroes
// and freezes b.
GTParams init_params(const ModelConfig& cfg, int d, std::uint64_t seed);

// One-hot PE slot for a truncated SPD value: spd+1, saturating at Z. 1-based.
int pe_index(int spd_value, int Z);

struct ForwardCache {
  std::vector<int> S;
  std::vector<int> pe_slots;       // 1-based pe_index per sampled node
  std::vector<double> logits;      // g(s, n)
  std::vector<double> weights;     // softmax over S
  Mat values;                      // |S| x m_b rows of W_V x_s
  Mat keys;                        // |S| x m_a rows of W_K x_s (empty in GCN mode)
  std::vector<double> query;       // W_Q x_n
  std::vector<double> aggregated;  // V_n
  std::vector<double> preact;      // W_O V_n
  std::vector<std::uint8_t> relu_mask;
  double F = 0.0;
  int node = -1;
};

// Single-node forward pass. Softmax is max-subtracted. SPDs come from the
// graph's cache when present (built for cfg.Z), otherwise one BFS per call.
double forward(const GTParams& p, const Graph& g, int n, std::span<const int> S, ForwardCache& cache);

double hinge_loss(double F, int y);

// The softmax weights of forward's cache, keyed by position in S.
std::vector<double> attention_row(const GTParams& p, const Graph& g, int n, std::span<const int> S);

}
