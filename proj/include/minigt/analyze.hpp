#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "minigt/graph.hpp"

namespace minigt {

struct ExternalGraphBundle {
  std::string edges_path;
  std::string features_path;
  std::string labels_path;
  int class_count = 0;  // 0: infer from the label file
  int Z_cap = 20;
};

// Text-bundle loader: undirected deduplicated adjacency, unit-renormalized
// feature rows, labels as class indices. pattern_of stays empty.
Graph load_graph(const ExternalGraphBundle& bundle);

struct EigResult {
  Mat vectors;  // 3 x dim, orthonormal rows
  std::array<double, 3> values{};
  std::array<bool, 3> converged{};
  std::array<double, 3> residuals{};
  bool degenerate = false;  // near-equal eigenvalues; the basis is arbitrary
};

// Top three eigenpairs of the centered covariance of one class, via power
// iteration with deflation. Convergence: successive Rayleigh quotients within
// 1e-8, at most 1e4 iterations per vector.
EigResult top_eigvecs(const Mat& class_features, std::uint64_t seed = 9001);

struct DiscFraction {
  double fraction = 0.0;
  int zero_projection_count = 0;  // counted non-discriminative, logged
  bool degenerate_mean = false;   // near-zero mean representation
};

// Fraction of class members whose 3-d eigenspace representation lies within
// pi/4 of the mean representation.
DiscFraction discriminative_fraction(const Mat& class_features, const EigResult& eig);

struct NormalizedMarginProfile {
  std::vector<double> delta_bar;  // index z-1: mean of per-node margin / |N_z|
  int z_m = 1;
  double positive_fraction = 0.0;
  long empty_neighborhoods = 0;  // (node, z) pairs contributing zero
};

// Winning-margin profile for class-labeled graphs: same-class discriminative
// count minus the per-other-class average, each node's term divided by its
// shell size. disc_sets holds one node list per class.
NormalizedMarginProfile normalized_margin_profile(const Graph& g, std::span<const int> class_of,
                                                  const std::vector<std::vector<int>>& disc_sets,
                                                  int Z_cap);

// Single-node term, exposed so the profile is checkable pointwise.
double normalized_margin_term(const Graph& g, int n, int z, std::span<const int> class_of,
                              const std::vector<std::vector<int>>& disc_sets);

}
