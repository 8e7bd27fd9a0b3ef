#include "minigt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "minigt/errors.hpp"

namespace minigt {

const char* policy_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::Dist12: return "DIST12";
    case PolicyKind::WholeGraph: return "WHOLE_GRAPH";
    case PolicyKind::CoreOnly: return "CORE_ONLY";
    case PolicyKind::FullNeighborhood: return "FULL_NEIGHBORHOOD";
  }
  return "?";
}

PolicyKind policy_from_name(const std::string& s) {
  if (s == "DIST12") return PolicyKind::Dist12;
  if (s == "WHOLE_GRAPH") return PolicyKind::WholeGraph;
  if (s == "CORE_ONLY") return PolicyKind::CoreOnly;
  if (s == "FULL_NEIGHBORHOOD") return PolicyKind::FullNeighborhood;
  throw ConfigError("unknown sampling policy '" + s + "'");
}

std::vector<int> sample_nodes(const Graph& g, int n, const SamplePolicy& policy, Rng& rng) {
  if (n < 0 || n >= g.N) throw ArgumentError("sample_nodes: node out of range");
  switch (policy.kind) {
    case PolicyKind::Dist12: {
      std::vector<int> pool = neighborhood(g, n, 1);
      {
        const std::vector<int> two = neighborhood(g, n, 2);
        pool.insert(pool.end(), two.begin(), two.end());
      }
      if (pool.empty())
        throw ArgumentError("sample_nodes: node " + std::to_string(n) + " has an empty distance-1/2 pool");
      std::vector<int> out{n};
      const auto picked = sample_without_replacement<int>(rng, pool, policy.k);
      out.insert(out.end(), picked.begin(), picked.end());
      return out;
    }
    case PolicyKind::WholeGraph: {
      std::vector<int> pool(g.N);
      std::iota(pool.begin(), pool.end(), 0);
      return sample_without_replacement<int>(rng, pool, policy.k);
    }
    case PolicyKind::CoreOnly: {
      const std::vector<int> pool = neighborhood(g, n, policy.z);
      if (pool.empty())
        throw ArgumentError("sample_nodes: node " + std::to_string(n) + " has an empty distance-" +
                            std::to_string(policy.z) + " shell");
      return sample_without_replacement<int>(rng, pool, policy.k);
    }
    case PolicyKind::FullNeighborhood: {
      std::vector<int> pool = neighborhood(g, n, policy.z);
      if (pool.empty())
        throw ArgumentError("sample_nodes: node " + std::to_string(n) + " has an empty distance-" +
                            std::to_string(policy.z) + " shell");
      return pool;
    }
  }
  throw ArgumentError("sample_nodes: bad policy");
}

EvalResult evaluate(const GTParams& p, const Graph& g, std::span<const int> eval_set,
                    const SamplePolicy& policy, std::uint64_t eval_seed) {
  if (eval_set.empty()) throw ArgumentError("evaluate: empty evaluation set");
  EvalResult res;
  ForwardCache cache;
  for (int n : eval_set) {
    Rng rng(derive_seed(eval_seed, "eval_node", n));
    const auto S = sample_nodes(g, n, policy, rng);
    const double F = forward(p, g, n, S, cache);
    const int y = g.labels[n];
    res.hinge += hinge_loss(F, y);
    const int sgn = F > 0.0 ? 1 : (F < 0.0 ? -1 : 0);
    res.zero_one += sgn != y ? 1.0 : 0.0;
  }
  res.hinge /= static_cast<double>(eval_set.size());
  res.zero_one /= static_cast<double>(eval_set.size());
  return res;
}

AttnMass attention_concentration(const GTParams& p, const Graph& g, std::span<const int> labeled,
                                 const SamplePolicy& policy, Rng& rng) {
  if (labeled.empty()) throw ArgumentError("attention_concentration: empty labeled set");
  if (g.pattern_of.empty())
    throw ArgumentError("attention_concentration: pattern assignments absent");
  AttnMass mass;
  for (int n : labeled) {
    const auto S = sample_nodes(g, n, policy, rng);
    const auto weights = attention_row(p, g, n, S);
    const int relevant = g.clean_labels[n] > 0 ? 1 : 2;
    const int confusion = 3 - relevant;
    for (std::size_t i = 0; i < S.size(); ++i) {
      if (g.pattern_of[S[i]] == relevant) mass.relevant += weights[i];
      else if (g.pattern_of[S[i]] == confusion) mass.confusion += weights[i];
      else mass.other += weights[i];
    }
  }
  const double inv = 1.0 / static_cast<double>(labeled.size());
  mass.relevant *= inv;
  mass.confusion *= inv;
  mass.other *= inv;
  return mass;
}

namespace {

bool all_finite(const GTParams& p) {
  auto ok = [](const std::vector<double>& v) {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  };
  return ok(p.W_Q.a) && ok(p.W_K.a) && ok(p.W_V.a) && ok(p.W_O.a) && ok(p.b);
}

}  // namespace

RunResult train(const Graph& g, const ModelConfig& mcfg, const TrainConfig& tcfg, std::uint64_t seed) {
  if (tcfg.label_budget < 1 || tcfg.label_budget > g.N)
    throw ConfigError("label_budget must lie in [1, N]");
  if (tcfg.B < 1 || tcfg.B > tcfg.label_budget)
    throw ConfigError("batch size must lie in [1, label_budget]");
  if (tcfg.eval_every < 1) throw ConfigError("eval_every must be positive");

  RunResult result;

  // Label set: uniform without stratification; balance recorded, not enforced.
  {
    Rng rng(derive_seed(seed, "labels"));
    std::vector<int> all(g.N);
    std::iota(all.begin(), all.end(), 0);
    result.labeled = sample_without_replacement<int>(rng, all, tcfg.label_budget);
    std::sort(result.labeled.begin(), result.labeled.end());
  }
  for (int n : result.labeled)
    if (g.labels[n] > 0) ++result.realized_positive_labels;

  std::vector<int> eval_set;
  {
    std::vector<char> is_labeled(g.N, 0);
    for (int n : result.labeled) is_labeled[n] = 1;
    for (int n = 0; n < g.N; ++n)
      if (!is_labeled[n]) eval_set.push_back(n);
    if (eval_set.empty()) eval_set = result.labeled;  // saturated budget: test on L
  }

  const std::uint64_t eval_seed =
      tcfg.eval_seed != 0 ? tcfg.eval_seed : derive_seed(seed, "eval");

  GTParams params = init_params(mcfg, g.d, seed);

  const long iters_per_epoch =
      (tcfg.label_budget + tcfg.B - 1) / tcfg.B;
  const long T = tcfg.T >= 0 ? tcfg.T : static_cast<long>(tcfg.epochs) * iters_per_epoch;
  result.total_iterations = T;

  auto record = [&](long t) {
    const EvalResult train_eval = evaluate(params, g, result.labeled, tcfg.policy, eval_seed);
    const EvalResult test_eval = evaluate(params, g, eval_set, tcfg.policy, eval_seed);
    result.iteration.push_back(t);
    result.train_loss.push_back(train_eval.hinge);
    result.test_hinge.push_back(test_eval.hinge);
    result.test_01.push_back(test_eval.zero_one);
    result.b_history.push_back(params.b);
    if (!g.pattern_of.empty()) {
      Rng attn_rng(derive_seed(eval_seed, "attn"));
      result.attn_mass.push_back(
          attention_concentration(params, g, result.labeled, tcfg.policy, attn_rng));
    } else {
      result.attn_mass.push_back({});
    }
    if (result.iterations_to_threshold < 0 && test_eval.hinge < tcfg.success_threshold)
      result.iterations_to_threshold = t;
  };

  record(0);

  ForwardCache cache;
  std::vector<Grads> batch_grads;
  for (long t = 0; t < T; ++t) {
    Rng rng(derive_seed(seed, "iter", static_cast<std::uint64_t>(t)));
    const auto batch = sample_without_replacement<int>(rng, result.labeled, tcfg.B);
    batch_grads.clear();
    for (int n : batch) {
      const auto S = sample_nodes(g, n, tcfg.policy, rng);
      const double F = forward(params, g, n, S, cache);
      if (!std::isfinite(F))
        throw DivergenceError("non-finite loss at iteration " + std::to_string(t), t);
      batch_grads.push_back(backward(cache, params, g, n, g.labels[n]));
      if (t < tcfg.pretrain_T0) {
        Grads& gr = batch_grads.back();
        gr.dW_Q.fill(0.0);
        gr.dW_K.fill(0.0);
        gr.dW_V.fill(0.0);
        std::fill(gr.db.begin(), gr.db.end(), 0.0);
      }
    }
    sgd_step(params, batch_grads, tcfg.eta);
    if (!all_finite(params))
      throw DivergenceError("non-finite parameter at iteration " + std::to_string(t), t);
    if ((t + 1) % (iters_per_epoch * tcfg.eval_every) == 0 || t + 1 == T) record(t + 1);
  }

  result.final_params = std::move(params);
  return result;
}

}  // namespace minigt
