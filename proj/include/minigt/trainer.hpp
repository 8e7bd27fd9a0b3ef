#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "minigt/grad.hpp"
#include "minigt/model.hpp"

namespace minigt {

enum class PolicyKind { Dist12, WholeGraph, CoreOnly, FullNeighborhood };

struct SamplePolicy {
  PolicyKind kind = PolicyKind::Dist12;
  int k = 60;  // sampled nodes (the center node is added on top for Dist12)
  int z = 1;   // shell distance for CoreOnly / FullNeighborhood
};

const char* policy_name(PolicyKind k);
PolicyKind policy_from_name(const std::string& s);

struct TrainConfig {
  double eta = 0.01;
  int B = 20;
  long T = -1;       // iteration count; when negative, epochs below applies
  int epochs = 150;  // T = epochs * ceil(|L|/B)
  int label_budget = 400;
  SamplePolicy policy;
  double success_threshold = 1e-3;
  std::uint64_t eval_seed = 0;  // 0: derived from the run seed
  long pretrain_T0 = 0;         // warmup steps updating W_O only
  int eval_every = 1;           // epochs between metric records
};

struct AttnMass {
  double relevant = 0.0;
  double confusion = 0.0;
  double other = 0.0;
};

struct RunResult {
  std::vector<long> iteration;  // recorded iteration indices (0 = before training)
  std::vector<double> train_loss;
  std::vector<double> test_hinge;
  std::vector<double> test_01;
  std::vector<std::vector<double>> b_history;
  std::vector<AttnMass> attn_mass;
  long iterations_to_threshold = -1;  // -1: never crossed
  GTParams final_params;
  std::vector<int> labeled;
  int realized_positive_labels = 0;
  long total_iterations = 0;
};

// Draws the aggregation set S^{n,t}. Dist12 returns {n} plus k nodes from the
// distance-1/2 shells; WholeGraph k nodes from V; CoreOnly k from the
// distance-z shell; FullNeighborhood the whole shell.
std::vector<int> sample_nodes(const Graph& g, int n, const SamplePolicy& policy, Rng& rng);

struct EvalResult {
  double hinge = 0.0;
  double zero_one = 0.0;
};

// Mean hinge and 0/1 error with one deterministic per-node sample fixed by
// eval_seed; sign(0) counts as an error.
EvalResult evaluate(const GTParams& p, const Graph& g, std::span<const int> eval_set,
                    const SamplePolicy& policy, std::uint64_t eval_seed);

// Average attention mass on class-relevant / confusion / remaining sampled
// nodes over the given labeled set.
AttnMass attention_concentration(const GTParams& p, const Graph& g, std::span<const int> labeled,
                                 const SamplePolicy& policy, Rng& rng);

// Mini-batch SGD over a uniformly drawn label set, recording metric curves
// every eval_every epochs on the unlabeled remainder (falling back to the
// labeled set when no node is unlabeled). Bit-identical for identical
// (graph, configs, seed).
RunResult train(const Graph& g, const ModelConfig& mcfg, const TrainConfig& tcfg, std::uint64_t seed);

}
