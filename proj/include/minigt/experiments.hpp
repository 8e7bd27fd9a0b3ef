#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "minigt/trainer.hpp"

namespace minigt {

// Runs fn(0..n-1) on up to `jobs` worker threads. Work items must be
// independent; results land in caller-owned slots, so the schedule cannot
// affect outputs.
void parallel_for(int jobs, std::size_t n, const std::function<void(std::size_t)>& fn);

enum class SweepAxis { GammaD, EpsS };

struct SweepBase {
  SyntheticConfig gcfg;
  ModelConfig mcfg;
  TrainConfig tcfg;
  std::uint64_t seed = 1;
  int jobs = 1;
};

struct TrialRecord {
  std::uint64_t seed = 0;
  double final_hinge = 0.0;
  long iterations_to_threshold = -1;
  bool diverged = false;
  bool success = false;
};

struct SweepMatrix {
  SweepAxis axis = SweepAxis::GammaD;
  std::vector<double> axis_values;
  std::vector<int> L_values;
  int trials = 0;
  std::vector<int> success_count;                // axis-major: [i * L + j]
  std::vector<std::vector<TrialRecord>> records;  // same indexing

  int cell(int i, int j) const { return i * static_cast<int>(L_values.size()) + j; }
  double success_fraction(int i, int j) const {
    return static_cast<double>(success_count[cell(i, j)]) / trials;
  }
};

// Fully independent seeded generate -> train -> evaluate pipelines per cell
// and trial; success means final test hinge below the configured threshold.
// Divergent trials count as failures and never abort the sweep.
SweepMatrix sweep(SweepAxis axis, std::span<const double> axis_values,
                  std::span<const int> L_grid, int trials, const SweepBase& base);

enum class ScalingTransform { GammaNeg2, GammaNeg4, OneMinusEpsNeg2 };

// Censoring status per axis row.
enum class Crossing { Ok, BelowGrid, AboveGrid };

struct ScalingFit {
  std::vector<double> x;  // transformed axis values with a usable crossing
  std::vector<double> y;  // interpolated minimal label budget at 50% success
  std::vector<int> used_axis_indices;
  std::vector<Crossing> row_status;  // one per axis value
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
};

// Per axis value, the minimal |L| whose success fraction reaches 0.5 (linear
// interpolation between the bracketing grid points), then the log-log
// least-squares slope against the transformed axis.
ScalingFit fit_scaling(const SweepMatrix& matrix, ScalingTransform transform);

struct ConvergenceCurve {
  double eps0 = 0.0;
  std::vector<long> iteration;
  std::vector<double> test_hinge;  // averaged over seeds
  double plateau = 0.0;            // mean over the final 10% of records
  long iterations_to_band = -1;    // first record at or below plateau + 0.05
  bool converged = false;
};

std::vector<ConvergenceCurve> convergence_study(std::span<const double> eps0_list,
                                                const SweepBase& base, int seeds);

struct IterationScaling {
  std::vector<double> gammas;
  std::vector<double> median_iterations;  // -1 where excluded
  std::vector<bool> excluded;             // threshold unreachable for > half the seeds
  double maxmin_ratio = 0.0;
  double loglog_slope_vs_gamma_neg2 = 0.0;
};

IterationScaling iteration_scaling(std::span<const double> gammas, Mode mode,
                                   const SweepBase& base, int seeds);

struct AblationArm {
  std::string name;
  Mode mode = Mode::GT;
  SamplePolicy policy;
};

struct AblationResult {
  std::vector<AblationArm> arms;
  std::vector<std::vector<TrialRecord>> records;  // arm-major
  std::vector<RunResult> sample_runs;             // trial 0 curves, one per arm
};

// Matched-arm comparison on a shared graph, label set, and initialization per
// trial (guaranteed by seeding; only mode and sampling differ across arms).
AblationResult mode_ablation(const SweepBase& base, std::span<const AblationArm> arms, int trials);

// Backward vs central finite differences over randomly drawn small graphs,
// params, nodes, and modes; returns the worst relative disagreement.
double gradcheck_random_instances(int instances, std::uint64_t seed, double h);

}
