#include "minigt/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "minigt/errors.hpp"
#include "minigt/io.hpp"
#include "minigt/kernels.hpp"

namespace minigt {

Graph load_graph(const ExternalGraphBundle& bundle) {
  Graph g;

  // Features fix N and d.
  {
    const auto lines = read_lines(bundle.features_path);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto fields = split_fields(lines[i], ',');
      std::vector<double> row;
      row.reserve(fields.size());
      for (const auto& f : fields)
        row.push_back(parse_double(f, bundle.features_path, static_cast<int>(i) + 1));
      if (!rows.empty() && row.size() != rows.front().size())
        throw DataError(bundle.features_path + ":" + std::to_string(i + 1) +
                        ": inconsistent feature dimension");
      rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError(bundle.features_path + ": no feature rows");
    g.N = static_cast<int>(rows.size());
    g.d = static_cast<int>(rows.front().size());
    g.features = Mat(g.N, g.d);
    for (int n = 0; n < g.N; ++n) {
      std::copy(rows[n].begin(), rows[n].end(), g.features.row(n));
      const double nrm = vec_norm(g.features.row_span(n));
      if (!(nrm > 0.0))
        throw DataError(bundle.features_path + ": zero-norm feature row for node " +
                        std::to_string(n));
      kernels::ops().scal(1.0 / nrm, g.features.row(n), g.d);
    }
  }

  // Labels, one per node.
  {
    const auto lines = read_lines(bundle.labels_path);
    g.labels.assign(g.N, 0);
    std::vector<char> seen(g.N, 0);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto fields = split_fields(lines[i], ',');
      if (fields.size() != 2)
        throw DataError(bundle.labels_path + ":" + std::to_string(i + 1) +
                        ": expected 'node,label'");
      const long node = parse_long(fields[0], bundle.labels_path, static_cast<int>(i) + 1);
      const long label = parse_long(fields[1], bundle.labels_path, static_cast<int>(i) + 1);
      if (node < 0 || node >= g.N)
        throw DataError(bundle.labels_path + ":" + std::to_string(i + 1) +
                        ": node id out of range: " + std::to_string(node));
      g.labels[node] = static_cast<int>(label);
      seen[node] = 1;
    }
    for (int n = 0; n < g.N; ++n)
      if (!seen[n]) throw DataError(bundle.labels_path + ": no label for node " + std::to_string(n));
  }

  // Class count: +/-1 labels mean binary, otherwise dense class ids.
  {
    std::set<int> distinct(g.labels.begin(), g.labels.end());
    const bool pm_one = distinct.size() <= 2 && distinct.count(1) + distinct.count(-1) == distinct.size();
    if (bundle.class_count > 0) {
      g.class_count = bundle.class_count;
    } else if (pm_one) {
      g.class_count = 2;
    } else {
      int mx = 0;
      for (int v : distinct) {
        if (v < 0) throw DataError(bundle.labels_path + ": negative class id " + std::to_string(v));
        mx = std::max(mx, v);
      }
      g.class_count = mx + 1;
    }
  }
  g.clean_labels = g.labels;

  // Edges.
  {
    const auto lines = read_lines(bundle.edges_path);
    g.adj.assign(g.N, {});
    std::set<std::pair<int, int>> seen;
    bool any = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      any = true;
      const auto fields = split_fields(lines[i], ' ');
      if (fields.size() != 2)
        throw DataError(bundle.edges_path + ":" + std::to_string(i + 1) + ": expected 'u v'");
      const long u = parse_long(fields[0], bundle.edges_path, static_cast<int>(i) + 1);
      const long v = parse_long(fields[1], bundle.edges_path, static_cast<int>(i) + 1);
      if (u < 0 || u >= g.N || v < 0 || v >= g.N)
        throw DataError(bundle.edges_path + ":" + std::to_string(i + 1) + ": node id out of range");
      if (u == v) continue;  // self loops dropped
      const auto key = std::minmax(static_cast<int>(u), static_cast<int>(v));
      if (!seen.insert(key).second) continue;  // duplicates dropped
      g.adj[key.first].push_back(key.second);
      g.adj[key.second].push_back(key.first);
    }
    if (!any) throw DataError(bundle.edges_path + ": empty edge file");
    for (auto& nbrs : g.adj) std::sort(nbrs.begin(), nbrs.end());
  }

  g.build_spd_cache(bundle.Z_cap);
  return g;
}

EigResult top_eigvecs(const Mat& class_features, std::uint64_t seed) {
  const int n = class_features.rows;
  const int dim = class_features.cols;
  if (n < 4) throw ArgumentError("top_eigvecs: need at least 4 samples");
  const auto& k = kernels::ops();

  // Centered covariance, 1/(n-1).
  std::vector<double> mean(dim, 0.0);
  for (int i = 0; i < n; ++i) k.axpy(1.0, class_features.row(i), mean.data(), dim);
  k.scal(1.0 / n, mean.data(), dim);
  Mat cov(dim, dim);
  {
    std::vector<double> centered(dim);
    for (int i = 0; i < n; ++i) {
      std::copy(class_features.row(i), class_features.row(i) + dim, centered.begin());
      k.axpy(-1.0, mean.data(), centered.data(), dim);
      k.ger(1.0 / (n - 1), centered.data(), dim, centered.data(), dim, cov.a.data());
    }
  }

  EigResult res;
  res.vectors = Mat(3, dim);
  Rng rng(derive_seed(seed, "power_iteration"));
  std::vector<double> v(dim), w(dim);
  for (int e = 0; e < 3; ++e) {
    for (double& x : v) x = rng.normal();
    // Project out previously found directions, then normalize.
    auto deflate = [&](std::vector<double>& u) {
      for (int p = 0; p < e; ++p) {
        const double proj = k.dot(res.vectors.row(p), u.data(), dim);
        k.axpy(-proj, res.vectors.row(p), u.data(), dim);
      }
    };
    deflate(v);
    double nrm = vec_norm(v);
    if (!(nrm > 0.0)) throw NumericalError("top_eigvecs: degenerate start vector");
    k.scal(1.0 / nrm, v.data(), dim);

    double lambda_prev = 0.0;
    bool converged = false;
    for (int it = 0; it < 10000; ++it) {
      k.matvec(cov.a.data(), dim, dim, v.data(), w.data());
      deflate(w);
      const double lambda = k.dot(v.data(), w.data(), dim);
      nrm = vec_norm(w);
      if (!(nrm > 1e-300)) {  // null direction: any unit vector is an eigenvector
        converged = true;
        lambda_prev = 0.0;
        break;
      }
      for (int j = 0; j < dim; ++j) v[j] = w[j] / nrm;
      if (it > 0 && std::abs(lambda - lambda_prev) < 1e-8) {
        lambda_prev = lambda;
        converged = true;
        break;
      }
      lambda_prev = lambda;
    }
    std::copy(v.begin(), v.end(), res.vectors.row(e));
    res.values[e] = lambda_prev;
    res.converged[e] = converged;
    k.matvec(cov.a.data(), dim, dim, v.data(), w.data());
    deflate(w);
    k.axpy(-lambda_prev, v.data(), w.data(), dim);
    res.residuals[e] = vec_norm(w);
  }
  res.degenerate = res.values[0] - res.values[2] <= 0.1 * std::max(res.values[0], 1e-12);
  return res;
}

DiscFraction discriminative_fraction(const Mat& class_features, const EigResult& eig) {
  const int n = class_features.rows;
  const int dim = class_features.cols;
  if (eig.vectors.rows != 3 || eig.vectors.cols != dim)
    throw ArgumentError("discriminative_fraction: need 3 eigenvectors of matching dimension");
  const auto& k = kernels::ops();

  Mat reps(n, 3);
  for (int i = 0; i < n; ++i)
    for (int e = 0; e < 3; ++e)
      reps(i, e) = k.dot(eig.vectors.row(e), class_features.row(i), dim);

  double mean[3] = {0, 0, 0};
  for (int i = 0; i < n; ++i)
    for (int e = 0; e < 3; ++e) mean[e] += reps(i, e);
  for (double& v : mean) v /= n;
  const double mean_norm = std::sqrt(mean[0] * mean[0] + mean[1] * mean[1] + mean[2] * mean[2]);

  DiscFraction out;
  if (mean_norm < 1e-12) {
    out.degenerate_mean = true;
    return out;
  }
  const double threshold = std::cos(3.14159265358979323846 / 4.0);
  int inside = 0;
  for (int i = 0; i < n; ++i) {
    const double* r = reps.row(i);
    const double rn = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
    if (rn < 1e-300) {
      ++out.zero_projection_count;
      continue;
    }
    const double c = (r[0] * mean[0] + r[1] * mean[1] + r[2] * mean[2]) / (rn * mean_norm);
    if (c > threshold) ++inside;
  }
  out.fraction = static_cast<double>(inside) / n;
  return out;
}

namespace {

struct ClassMasks {
  std::vector<std::vector<char>> is_disc;  // per class bitmask over nodes
};

ClassMasks build_masks(int N, const std::vector<std::vector<int>>& disc_sets) {
  ClassMasks masks;
  masks.is_disc.assign(disc_sets.size(), std::vector<char>(N, 0));
  for (std::size_t c = 0; c < disc_sets.size(); ++c)
    for (int v : disc_sets[c]) masks.is_disc[c][v] = 1;
  return masks;
}

double margin_term_from_shell(std::span<const int> shell, int node_class, const ClassMasks& masks) {
  if (shell.empty()) return 0.0;
  const int C = static_cast<int>(masks.is_disc.size());
  int same = 0;
  long other = 0;
  for (int v : shell) {
    for (int c = 0; c < C; ++c) {
      if (!masks.is_disc[c][v]) continue;
      if (c == node_class) ++same;
      else ++other;
    }
  }
  const double other_avg = C > 1 ? static_cast<double>(other) / (C - 1) : 0.0;
  return (same - other_avg) / static_cast<double>(shell.size());
}

}  // namespace

double normalized_margin_term(const Graph& g, int n, int z, std::span<const int> class_of,
                              const std::vector<std::vector<int>>& disc_sets) {
  if (n < 0 || n >= g.N) throw ArgumentError("normalized_margin_term: node out of range");
  const ClassMasks masks = build_masks(g.N, disc_sets);
  const auto shell = neighborhood(g, n, z);
  return margin_term_from_shell(shell, class_of[n], masks);
}

NormalizedMarginProfile normalized_margin_profile(const Graph& g, std::span<const int> class_of,
                                                  const std::vector<std::vector<int>>& disc_sets,
                                                  int Z_cap) {
  if (static_cast<int>(class_of.size()) != g.N)
    throw ArgumentError("normalized_margin_profile: class_of size mismatch");
  if (disc_sets.empty()) throw ArgumentError("normalized_margin_profile: no discriminative sets");
  if (Z_cap < 2) throw ArgumentError("normalized_margin_profile: Z_cap must be at least 2");

  const ClassMasks masks = build_masks(g.N, disc_sets);
  const int nz = Z_cap - 1;
  NormalizedMarginProfile out;
  out.delta_bar.assign(nz, 0.0);

  Mat terms(g.N, nz);
  std::vector<std::vector<int>> shells(nz);
  for (int n = 0; n < g.N; ++n) {
    const auto dist = spd(g, n, Z_cap + 1);
    for (auto& s : shells) s.clear();
    for (int v = 0; v < g.N; ++v) {
      const int zv = dist[v];
      if (zv >= 1 && zv <= nz) shells[zv - 1].push_back(v);
    }
    for (int z = 0; z < nz; ++z) {
      if (shells[z].empty()) ++out.empty_neighborhoods;
      terms(n, z) = margin_term_from_shell(shells[z], class_of[n], masks);
      out.delta_bar[z] += terms(n, z);
    }
  }
  for (double& v : out.delta_bar) v /= g.N;

  out.z_m = 1;
  for (int z = 1; z < nz; ++z)
    if (out.delta_bar[z] > out.delta_bar[out.z_m - 1]) out.z_m = z + 1;

  int positive = 0;
  for (int n = 0; n < g.N; ++n)
    if (terms(n, out.z_m - 1) > 0.0) ++positive;
  out.positive_fraction = static_cast<double>(positive) / g.N;
  return out;
}

}  // namespace minigt
