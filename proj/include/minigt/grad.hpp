#pragma once

#include <span>

#include "minigt/model.hpp"

namespace minigt {

// Gradients of the single-node hinge loss w.r.t. the trainable tensors.
// Tensors frozen by the mode are present but identically zero; a has no
// gradient.
struct Grads {
  Mat dW_Q, dW_K, dW_V, dW_O;
  std::vector<double> db;

  static Grads zeros_like(const GTParams& p);
};

// Exact reverse-mode subgradient through the forward pass, with the fixed
// conventions: hinge gradient is -y when 1 - yF > 0 (zero otherwise), ReLU
// active per cache mask.
Grads backward(const ForwardCache& cache, const GTParams& p, const Graph& g, int n, int y);

// Central finite differences per trainable scalar. Coordinates that sit or
// land within 10h of a hinge/ReLU kink (detected by comparing the two
// perturbed caches and the center margins) are reported as NaN and must be
// ignored by comparisons. Frozen tensors are not parameters and stay zero.
Grads finite_diff(const GTParams& p, const Graph& g, int n, std::span<const int> S, int y, double h);

// Generic central difference, kept here so the differencer itself is testable
// against analytic derivatives.
template <class F>
double central_diff(F&& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Largest relative disagreement between two gradient sets, skipping NaN
// coordinates; near-zero pairs are compared against `floor`.
double max_rel_error(const Grads& lhs, const Grads& rhs, double floor = 1e-6);

// One SGD step with the batch-mean gradient (pairwise-reduced, so summation
// order cannot leak into results). Frozen tensors and a are untouched.
void sgd_step(GTParams& p, std::span<const Grads> batch, double eta);

// The pairwise-reduced batch mean itself, exposed for tests.
Grads batch_mean(std::span<const Grads> batch);

}
