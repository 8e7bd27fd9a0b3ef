#include "minigt/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "minigt/errors.hpp"

namespace minigt {

void parallel_for(int jobs, std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  jobs = std::max(1, jobs);
  const std::size_t workers = std::min<std::size_t>(jobs, n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

// One generate -> train -> evaluate pipeline; divergence becomes a failed
// record instead of an exception.
TrialRecord run_trial(SyntheticConfig gcfg, const ModelConfig& mcfg, TrainConfig tcfg,
                      std::uint64_t trial_seed, RunResult* curves_out = nullptr) {
  TrialRecord rec;
  rec.seed = trial_seed;
  gcfg.seed = trial_seed;
  try {
    Graph g = generate(gcfg);
    g.build_spd_cache(mcfg.Z);
    RunResult run = train(g, mcfg, tcfg, trial_seed);
    rec.final_hinge = run.test_hinge.back();
    rec.iterations_to_threshold = run.iterations_to_threshold;
    rec.success = rec.final_hinge < tcfg.success_threshold;
    if (curves_out) *curves_out = std::move(run);
  } catch (const DivergenceError&) {
    rec.diverged = true;
    rec.final_hinge = std::numeric_limits<double>::infinity();
    rec.success = false;
  }
  return rec;
}

void apply_axis(SyntheticConfig& cfg, SweepAxis axis, double value) {
  if (axis == SweepAxis::GammaD) cfg.gamma_d = value;
  else cfg.eps_S = value;
}

}  // namespace

SweepMatrix sweep(SweepAxis axis, std::span<const double> axis_values,
                  std::span<const int> L_grid, int trials, const SweepBase& base) {
  if (trials < 1) throw ConfigError("sweep: trials must be at least 1");
  if (axis_values.empty() || L_grid.empty()) throw ConfigError("sweep: empty grid");

  SweepMatrix m;
  m.axis = axis;
  m.axis_values.assign(axis_values.begin(), axis_values.end());
  m.L_values.assign(L_grid.begin(), L_grid.end());
  m.trials = trials;
  const std::size_t cells = axis_values.size() * L_grid.size();
  m.success_count.assign(cells, 0);
  m.records.assign(cells, {});
  for (auto& r : m.records) r.resize(trials);

  const std::size_t total = cells * static_cast<std::size_t>(trials);
  parallel_for(base.jobs, total, [&](std::size_t flat) {
    const int k = static_cast<int>(flat % trials);
    const std::size_t cell = flat / trials;
    const int j = static_cast<int>(cell % L_grid.size());
    const int i = static_cast<int>(cell / L_grid.size());

    SyntheticConfig gcfg = base.gcfg;
    apply_axis(gcfg, axis, axis_values[i]);
    TrainConfig tcfg = base.tcfg;
    tcfg.label_budget = L_grid[j];
    const std::uint64_t seed = derive_seed(base.seed, "cell", i, j, k);
    m.records[cell][k] = run_trial(gcfg, base.mcfg, tcfg, seed);
  });

  for (std::size_t c = 0; c < cells; ++c)
    for (const auto& rec : m.records[c])
      if (rec.success) ++m.success_count[c];
  return m;
}

ScalingFit fit_scaling(const SweepMatrix& matrix, ScalingTransform transform) {
  ScalingFit fit;
  const int nl = static_cast<int>(matrix.L_values.size());
  fit.row_status.assign(matrix.axis_values.size(), Crossing::Ok);

  for (int i = 0; i < static_cast<int>(matrix.axis_values.size()); ++i) {
    int first = -1;
    for (int j = 0; j < nl; ++j) {
      if (matrix.success_fraction(i, j) >= 0.5) {
        first = j;
        break;
      }
    }
    if (first < 0) {
      fit.row_status[i] = Crossing::AboveGrid;
      continue;
    }
    if (first == 0) {
      fit.row_status[i] = Crossing::BelowGrid;
      continue;
    }
    const double f_lo = matrix.success_fraction(i, first - 1);
    const double f_hi = matrix.success_fraction(i, first);
    const double L_lo = matrix.L_values[first - 1];
    const double L_hi = matrix.L_values[first];
    const double min_L = L_lo + (0.5 - f_lo) / (f_hi - f_lo) * (L_hi - L_lo);

    const double v = matrix.axis_values[i];
    double x = 0.0;
    switch (transform) {
      case ScalingTransform::GammaNeg2: x = 1.0 / (v * v); break;
      case ScalingTransform::GammaNeg4: x = 1.0 / (v * v * v * v); break;
      case ScalingTransform::OneMinusEpsNeg2: x = 1.0 / ((1.0 - v) * (1.0 - v)); break;
    }
    fit.x.push_back(x);
    fit.y.push_back(min_L);
    fit.used_axis_indices.push_back(i);
  }

  if (fit.x.size() < 3)
    throw NumericalError("fit_scaling: need at least 3 usable 50% crossings, have " +
                         std::to_string(fit.x.size()));

  const std::size_t n = fit.x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    lx[i] = std::log(fit.x[i]);
    ly[i] = std::log(fit.y[i]);
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double denom = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ly[i] - (fit.slope * lx[i] + fit.intercept);
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

std::vector<ConvergenceCurve> convergence_study(std::span<const double> eps0_list,
                                                const SweepBase& base, int seeds) {
  if (seeds < 1) throw ConfigError("convergence_study: seeds must be at least 1");
  for (double e : eps0_list)
    if (e < 0.0 || e > 0.4) throw ConfigError("convergence_study: eps_0 must lie in [0, 0.4]");

  struct Slot {
    RunResult run;
    bool diverged = false;
  };
  std::vector<Slot> slots(eps0_list.size() * seeds);
  parallel_for(base.jobs, slots.size(), [&](std::size_t flat) {
    const int s = static_cast<int>(flat % seeds);
    const int e = static_cast<int>(flat / seeds);
    SyntheticConfig gcfg = base.gcfg;
    gcfg.eps_0 = eps0_list[e];
    const std::uint64_t seed = derive_seed(base.seed, "convergence", e, s);
    TrialRecord rec = run_trial(gcfg, base.mcfg, base.tcfg, seed, &slots[flat].run);
    slots[flat].diverged = rec.diverged;
  });

  std::vector<ConvergenceCurve> out;
  for (std::size_t e = 0; e < eps0_list.size(); ++e) {
    ConvergenceCurve curve;
    curve.eps0 = eps0_list[e];
    int used = 0;
    for (int s = 0; s < seeds; ++s) {
      const Slot& slot = slots[e * seeds + s];
      if (slot.diverged) continue;
      if (curve.iteration.empty()) {
        curve.iteration = slot.run.iteration;
        curve.test_hinge.assign(curve.iteration.size(), 0.0);
      }
      for (std::size_t i = 0; i < curve.test_hinge.size(); ++i)
        curve.test_hinge[i] += slot.run.test_hinge[i];
      ++used;
    }
    if (used == 0) {
      curve.converged = false;
      out.push_back(std::move(curve));
      continue;
    }
    for (double& v : curve.test_hinge) v /= used;

    const std::size_t n = curve.test_hinge.size();
    const std::size_t tail = std::max<std::size_t>(1, n / 10);
    double plateau = 0.0;
    for (std::size_t i = n - tail; i < n; ++i) plateau += curve.test_hinge[i];
    plateau /= tail;
    curve.plateau = plateau;

    for (std::size_t i = 0; i < n; ++i) {
      if (curve.test_hinge[i] <= plateau + 0.05) {
        curve.iterations_to_band = curve.iteration[i];
        break;
      }
    }

    // Converged when the final stretch stopped moving.
    if (n >= 2 * tail) {
      double prev = 0.0;
      for (std::size_t i = n - 2 * tail; i < n - tail; ++i) prev += curve.test_hinge[i];
      prev /= tail;
      curve.converged = std::abs(prev - plateau) <= std::max(0.02, 0.1 * plateau);
    } else {
      curve.converged = false;
    }
    out.push_back(std::move(curve));
  }
  return out;
}

IterationScaling iteration_scaling(std::span<const double> gammas, Mode mode,
                                   const SweepBase& base, int seeds) {
  if (seeds < 1) throw ConfigError("iteration_scaling: seeds must be at least 1");
  IterationScaling out;
  out.gammas.assign(gammas.begin(), gammas.end());
  out.median_iterations.assign(gammas.size(), -1.0);
  out.excluded.assign(gammas.size(), false);

  std::vector<TrialRecord> recs(gammas.size() * seeds);
  parallel_for(base.jobs, recs.size(), [&](std::size_t flat) {
    const int s = static_cast<int>(flat % seeds);
    const int gi = static_cast<int>(flat / seeds);
    SyntheticConfig gcfg = base.gcfg;
    gcfg.gamma_d = gammas[gi];
    ModelConfig mcfg = base.mcfg;
    mcfg.mode = mode;
    const std::uint64_t seed = derive_seed(base.seed, "iters", gi, s);
    recs[flat] = run_trial(gcfg, mcfg, base.tcfg, seed);
  });

  for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
    std::vector<double> crossed;
    for (int s = 0; s < seeds; ++s) {
      const auto& rec = recs[gi * seeds + s];
      if (!rec.diverged && rec.iterations_to_threshold >= 0)
        crossed.push_back(static_cast<double>(rec.iterations_to_threshold));
    }
    if (crossed.size() * 2 <= static_cast<std::size_t>(seeds)) {
      out.excluded[gi] = true;
      continue;
    }
    std::sort(crossed.begin(), crossed.end());
    const std::size_t n = crossed.size();
    out.median_iterations[gi] =
        n % 2 ? crossed[n / 2] : 0.5 * (crossed[n / 2 - 1] + crossed[n / 2]);
  }

  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int used = 0;
  for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
    if (out.excluded[gi]) continue;
    const double med = out.median_iterations[gi];
    lo = std::min(lo, med);
    hi = std::max(hi, med);
    const double x = std::log(1.0 / (gammas[gi] * gammas[gi]));
    const double y = std::log(med);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++used;
  }
  out.maxmin_ratio = used > 0 && lo > 0.0 ? hi / lo : 1.0;
  if (used >= 2) {
    const double denom = used * sxx - sx * sx;
    out.loglog_slope_vs_gamma_neg2 = denom != 0.0 ? (used * sxy - sx * sy) / denom : 0.0;
  }
  return out;
}

double gradcheck_random_instances(int instances, std::uint64_t seed, double h) {
  if (instances < 1) throw ConfigError("gradcheck: instances must be at least 1");
  double worst = 0.0;
  for (int i = 0; i < instances; ++i) {
    Rng rng(derive_seed(seed, "gradcheck", i));

    SyntheticConfig gcfg;
    gcfg.N = 20 + static_cast<int>(rng.below(41));  // 20..60
    gcfg.M = 3 + static_cast<int>(rng.below(3));
    gcfg.d = 6 + static_cast<int>(rng.below(7));
    gcfg.c0 = 0.02 + 0.08 * rng.uniform();
    gcfg.gamma_d = 0.4 + 0.2 * rng.uniform();  // keeps the class sizes above deg_min
    gcfg.eps_S = rng.below(2) ? 0.0 : 0.2;
    gcfg.deg_min = 3;
    gcfg.seed = rng.next_u64();
    Graph g = generate(gcfg);

    ModelConfig mcfg;
    mcfg.m_a = 4 + static_cast<int>(rng.below(9));
    mcfg.m_b = 4 + static_cast<int>(rng.below(9));
    mcfg.m = 8 + static_cast<int>(rng.below(25));  // <= 32
    mcfg.Z = 4 + static_cast<int>(rng.below(5));
    mcfg.mode = i % 3 == 0 ? Mode::GT : (i % 3 == 1 ? Mode::GT_NOPE : Mode::GCN);
    g.build_spd_cache(mcfg.Z);
    GTParams params = init_params(mcfg, gcfg.d, rng.next_u64());
    // Stir b so its gradient path is exercised away from zero.
    if (mcfg.mode == Mode::GT)
      for (double& v : params.b) v = 0.3 * rng.normal();

    const int n = static_cast<int>(rng.below(g.N));
    SamplePolicy policy;
    policy.kind = PolicyKind::Dist12;
    policy.k = 6 + static_cast<int>(rng.below(7));
    const auto S = sample_nodes(g, n, policy, rng);
    const int y = g.labels[n];

    ForwardCache cache;
    forward(params, g, n, S, cache);
    const Grads analytic = backward(cache, params, g, n, y);
    const Grads numeric = finite_diff(params, g, n, S, y, h);
    worst = std::max(worst, max_rel_error(analytic, numeric));
  }
  return worst;
}

AblationResult mode_ablation(const SweepBase& base, std::span<const AblationArm> arms, int trials) {
  if (arms.empty()) throw ConfigError("mode_ablation: no arms");
  if (trials < 1) throw ConfigError("mode_ablation: trials must be at least 1");

  AblationResult out;
  out.arms.assign(arms.begin(), arms.end());
  out.records.assign(arms.size(), std::vector<TrialRecord>(trials));
  out.sample_runs.resize(arms.size());

  parallel_for(base.jobs, trials, [&](std::size_t trial) {
    const std::uint64_t seed = derive_seed(base.seed, "ablation", trial);
    SyntheticConfig gcfg = base.gcfg;
    gcfg.seed = seed;
    Graph g;
    bool graph_ok = true;
    try {
      g = generate(gcfg);
      g.build_spd_cache(base.mcfg.Z);
    } catch (const Error&) {
      graph_ok = false;
    }
    for (std::size_t a = 0; a < arms.size(); ++a) {
      TrialRecord& rec = out.records[a][trial];
      rec.seed = seed;
      if (!graph_ok) {
        rec.diverged = true;
        rec.final_hinge = std::numeric_limits<double>::infinity();
        continue;
      }
      ModelConfig mcfg = base.mcfg;
      mcfg.mode = arms[a].mode;
      TrainConfig tcfg = base.tcfg;
      tcfg.policy = arms[a].policy;
      try {
        // Same seed across arms: identical graph, label set, and shared init
        // streams; only mode and sampling differ.
        RunResult run = train(g, mcfg, tcfg, seed);
        rec.final_hinge = run.test_hinge.back();
        rec.iterations_to_threshold = run.iterations_to_threshold;
        rec.success = rec.final_hinge < tcfg.success_threshold;
        if (trial == 0) out.sample_runs[a] = std::move(run);
      } catch (const DivergenceError&) {
        rec.diverged = true;
        rec.final_hinge = std::numeric_limits<double>::infinity();
      }
    }
  });
  return out;
}

}  // namespace minigt
