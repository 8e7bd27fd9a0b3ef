// minigt: synthetic-graph generation, shallow graph-transformer training,
// sweep experiments, and graph diagnostics from one binary.
//
// Exit codes: 0 ok, 1 usage, 2 config, 3 numerical failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "minigt/analyze.hpp"
#include "minigt/config.hpp"
#include "minigt/errors.hpp"
#include "minigt/experiments.hpp"
#include "minigt/io.hpp"
#include "minigt/kernels.hpp"
#include "minigt/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace minigt;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  int jobs = 1;
  std::uint64_t seed = 1;
};

ConfigMap load_config(const CommonArgs& args) {
  if (args.config_path.empty()) return {};
  if (!fs::exists(args.config_path))
    throw ArgumentError("config file not found: " + args.config_path);
  return parse_config_file(args.config_path);
}

const std::set<std::string> kGraphKeys = {"N", "M", "d", "c0", "gamma_d", "eps_S",
                                          "eps_0", "deg_min", "Z", "cap_connections"};
const std::set<std::string> kModelKeys = {"m_a", "m_b", "m", "mode", "delta", "sigma", "xi",
                                          "attn_init_scale", "paper_literal_scale",
                                          "relu_active_at_zero"};
const std::set<std::string> kTrainKeys = {"eta", "B", "epochs", "T", "label_budget", "policy",
                                          "policy_k", "policy_z", "threshold", "eval_seed",
                                          "pretrain_T0", "eval_every"};

std::set<std::string> merge_keys(std::initializer_list<const std::set<std::string>*> sets,
                                 std::initializer_list<std::string> extra = {}) {
  std::set<std::string> out;
  for (const auto* s : sets) out.insert(s->begin(), s->end());
  out.insert(extra.begin(), extra.end());
  return out;
}

SyntheticConfig graph_config(const ConfigMap& cfg, std::uint64_t seed) {
  SyntheticConfig g;
  g.N = static_cast<int>(cfg.get_long("N", g.N));
  g.M = static_cast<int>(cfg.get_long("M", g.M));
  g.d = static_cast<int>(cfg.get_long("d", g.d));
  g.c0 = cfg.get_double("c0", g.c0);
  g.gamma_d = cfg.get_double("gamma_d", g.gamma_d);
  g.eps_S = cfg.get_double("eps_S", g.eps_S);
  g.eps_0 = cfg.get_double("eps_0", g.eps_0);
  g.deg_min = static_cast<int>(cfg.get_long("deg_min", g.deg_min));
  g.cap_connections = cfg.get_bool("cap_connections", g.cap_connections);
  g.seed = seed;
  return g;
}

ModelConfig model_config(const ConfigMap& cfg, const SyntheticConfig& g) {
  ModelConfig m;
  m.m_a = static_cast<int>(cfg.get_long("m_a", m.m_a));
  m.m_b = static_cast<int>(cfg.get_long("m_b", m.m_b));
  m.m = static_cast<int>(cfg.get_long("m", m.m));
  m.Z = static_cast<int>(cfg.get_long("Z", m.Z));
  m.mode = mode_from_name(cfg.get_string("mode", "GT"));
  m.init.delta = cfg.get_double("delta", m.init.delta);
  m.init.sigma = cfg.get_double("sigma", m.init.sigma);
  m.init.xi = cfg.get_double("xi", m.init.xi);
  m.init.attn_init_scale = cfg.get_double("attn_init_scale", m.init.attn_init_scale);
  m.init.paper_literal_scale = cfg.get_bool("paper_literal_scale", false);
  m.init.c0 = g.c0;
  m.relu_active_at_zero = cfg.get_bool("relu_active_at_zero", true);
  return m;
}

TrainConfig train_config(const ConfigMap& cfg) {
  TrainConfig t;
  t.eta = cfg.get_double("eta", t.eta);
  t.B = static_cast<int>(cfg.get_long("B", t.B));
  t.T = cfg.get_long("T", t.T);
  t.epochs = static_cast<int>(cfg.get_long("epochs", t.epochs));
  t.label_budget = static_cast<int>(cfg.get_long("label_budget", t.label_budget));
  t.policy.kind = policy_from_name(cfg.get_string("policy", "DIST12"));
  t.policy.k = static_cast<int>(cfg.get_long("policy_k", t.policy.k));
  t.policy.z = static_cast<int>(cfg.get_long("policy_z", t.policy.z));
  t.success_threshold = cfg.get_double("threshold", t.success_threshold);
  t.eval_seed = cfg.get_u64("eval_seed", t.eval_seed);
  t.pretrain_T0 = cfg.get_long("pretrain_T0", t.pretrain_T0);
  t.eval_every = static_cast<int>(cfg.get_long("eval_every", t.eval_every));
  return t;
}

json graph_json(const SyntheticConfig& g) {
  return {{"N", g.N},         {"M", g.M},       {"d", g.d},         {"c0", g.c0},
          {"gamma_d", g.gamma_d}, {"eps_S", g.eps_S}, {"eps_0", g.eps_0},
          {"deg_min", g.deg_min}, {"seed", g.seed}, {"cap_connections", g.cap_connections}};
}

json model_json(const ModelConfig& m) {
  return {{"m_a", m.m_a},
          {"m_b", m.m_b},
          {"m", m.m},
          {"Z", m.Z},
          {"mode", mode_name(m.mode)},
          {"delta", m.init.delta},
          {"sigma", m.init.sigma},
          {"xi", m.init.xi},
          {"attn_init_scale", m.init.attn_init_scale},
          {"paper_literal_scale", m.init.paper_literal_scale},
          {"relu_active_at_zero", m.relu_active_at_zero}};
}

json train_json(const TrainConfig& t) {
  return {{"eta", t.eta},
          {"B", t.B},
          {"T", t.T},
          {"epochs", t.epochs},
          {"label_budget", t.label_budget},
          {"policy", policy_name(t.policy.kind)},
          {"policy_k", t.policy.k},
          {"policy_z", t.policy.z},
          {"threshold", t.success_threshold},
          {"eval_seed", t.eval_seed},
          {"pretrain_T0", t.pretrain_T0},
          {"eval_every", t.eval_every}};
}

struct ManifestWriter {
  std::string command;
  CommonArgs args;
  json config = json::object();
  std::vector<std::string> outputs;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void write() const {
    fs::create_directories(args.out_dir);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json manifest{{"command", command},
                  {"version", kVersion},
                  {"kernel_backend", kernels::backend_name()},
                  {"seed", args.seed},
                  {"jobs", args.jobs},
                  {"config", config},
                  {"outputs", outputs},
                  {"wall_clock_seconds", elapsed}};
    std::ofstream out(fs::path(args.out_dir) / "manifest.json");
    out << manifest.dump(2) << '\n';
  }
};

int cmd_gen(const CommonArgs& args) {
  const ConfigMap cfg = load_config(args);
  cfg.require_known_keys(merge_keys({&kGraphKeys}));
  const SyntheticConfig gcfg = graph_config(cfg, args.seed);
  const int Z = static_cast<int>(cfg.get_long("Z", 20));

  ManifestWriter manifest{"gen", args};
  manifest.config = graph_json(gcfg);
  manifest.config["Z"] = Z;

  Graph g = generate(gcfg);
  g.build_spd_cache(Z);
  write_graph_bundle(g, args.out_dir);
  manifest.outputs = {"edges.txt", "features.csv", "labels.csv", "patterns.csv"};
  manifest.write();

  const MarginProfile profile = margin_profile(g, Z);
  std::printf("generated N=%d graph: z_m=%d, positive margin fraction %.4f\n", g.N, profile.z_m,
              profile.per_node_positive_fraction);
  return 0;
}

Graph load_or_generate(const ConfigMap& cfg, const SyntheticConfig& gcfg, int Z,
                       const std::string& graph_dir) {
  if (graph_dir.empty()) {
    Graph g = generate(gcfg);
    g.build_spd_cache(Z);
    return g;
  }
  ExternalGraphBundle bundle;
  bundle.edges_path = (fs::path(graph_dir) / "edges.txt").string();
  bundle.features_path = (fs::path(graph_dir) / "features.csv").string();
  bundle.labels_path = (fs::path(graph_dir) / "labels.csv").string();
  bundle.Z_cap = Z;
  Graph g = load_graph(bundle);
  const fs::path patterns = fs::path(graph_dir) / "patterns.csv";
  if (fs::exists(patterns)) {
    g.pattern_of.assign(g.N, 0);
    const auto lines = read_lines(patterns.string());
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto fields = split_fields(lines[i], ',');
      if (fields.size() != 2)
        throw DataError(patterns.string() + ":" + std::to_string(i + 1) + ": expected 'node,pattern'");
      const long node = parse_long(fields[0], patterns.string(), static_cast<int>(i) + 1);
      if (node < 0 || node >= g.N)
        throw DataError(patterns.string() + ":" + std::to_string(i + 1) + ": node id out of range");
      g.pattern_of[node] = static_cast<int>(parse_long(fields[1], patterns.string(),
                                                       static_cast<int>(i) + 1));
    }
  }
  (void)cfg;
  return g;
}

int cmd_train(const CommonArgs& args) {
  const ConfigMap cfg = load_config(args);
  cfg.require_known_keys(merge_keys({&kGraphKeys, &kModelKeys, &kTrainKeys}, {"graph_dir"}));
  const SyntheticConfig gcfg = graph_config(cfg, derive_seed(args.seed, "graph"));
  const ModelConfig mcfg = model_config(cfg, gcfg);
  const TrainConfig tcfg = train_config(cfg);
  const std::string graph_dir = cfg.get_string("graph_dir", "");

  ManifestWriter manifest{"train", args};
  manifest.config["graph"] = graph_json(gcfg);
  manifest.config["model"] = model_json(mcfg);
  manifest.config["train"] = train_json(tcfg);
  if (!graph_dir.empty()) manifest.config["graph_dir"] = graph_dir;

  const Graph g = load_or_generate(cfg, gcfg, mcfg.Z, graph_dir);
  const RunResult run = train(g, mcfg, tcfg, args.seed);

  fs::create_directories(args.out_dir);
  write_run_csv(run, fs::path(args.out_dir) / "run.csv");
  write_param_snapshot(run.final_params, fs::path(args.out_dir) / "snapshot", args.seed);
  manifest.outputs = {"run.csv", "snapshot"};
  manifest.write();

  std::printf("final test hinge %.6g, 0/1 error %.4f, threshold crossed at %ld\n",
              run.test_hinge.back(), run.test_01.back(), run.iterations_to_threshold);
  return 0;
}

int cmd_sweep(const CommonArgs& args) {
  const ConfigMap cfg = load_config(args);
  cfg.require_known_keys(merge_keys({&kGraphKeys, &kModelKeys, &kTrainKeys},
                                    {"axis", "axis_values", "L_grid", "trials", "fit_transform"}));
  SweepBase base;
  base.gcfg = graph_config(cfg, 0);
  base.mcfg = model_config(cfg, base.gcfg);
  base.tcfg = train_config(cfg);
  base.seed = args.seed;
  base.jobs = args.jobs;

  const std::string axis_name = cfg.get_string("axis", "gamma_d");
  SweepAxis axis;
  if (axis_name == "gamma_d") axis = SweepAxis::GammaD;
  else if (axis_name == "eps_S") axis = SweepAxis::EpsS;
  else throw ConfigError("axis must be gamma_d or eps_S");

  const std::vector<double> axis_values =
      cfg.get_double_list("axis_values", {0.2, 0.3, 0.4, 0.5});
  const std::vector<long> L_grid_long = cfg.get_long_list("L_grid", {100, 200, 400, 800});
  std::vector<int> L_grid(L_grid_long.begin(), L_grid_long.end());
  const int trials = static_cast<int>(cfg.get_long("trials", 10));
  if (trials < 1) throw ConfigError("trials must be at least 1");

  ManifestWriter manifest{"sweep", args};
  manifest.config["graph"] = graph_json(base.gcfg);
  manifest.config["model"] = model_json(base.mcfg);
  manifest.config["train"] = train_json(base.tcfg);
  manifest.config["axis"] = axis_name;
  manifest.config["axis_values"] = axis_values;
  manifest.config["L_grid"] = L_grid;
  manifest.config["trials"] = trials;

  const SweepMatrix matrix = sweep(axis, axis_values, L_grid, trials, base);
  fs::create_directories(args.out_dir);
  write_sweep_csv(matrix, fs::path(args.out_dir) / "sweep.csv");
  write_sweep_pgm(matrix, fs::path(args.out_dir) / "sweep.pgm");
  manifest.outputs = {"sweep.csv", "sweep.pgm"};

  const std::string transform_name = cfg.get_string("fit_transform", "");
  if (!transform_name.empty()) {
    ScalingTransform transform;
    if (transform_name == "gamma_neg2") transform = ScalingTransform::GammaNeg2;
    else if (transform_name == "gamma_neg4") transform = ScalingTransform::GammaNeg4;
    else if (transform_name == "one_minus_eps_neg2") transform = ScalingTransform::OneMinusEpsNeg2;
    else throw ConfigError("fit_transform must be gamma_neg2, gamma_neg4, or one_minus_eps_neg2");
    const ScalingFit fit = fit_scaling(matrix, transform);
    std::ofstream out(fs::path(args.out_dir) / "fit.csv");
    out << "transformed_x,min_L\n";
    out.precision(17);
    for (std::size_t i = 0; i < fit.x.size(); ++i) out << fit.x[i] << ',' << fit.y[i] << '\n';
    out << "# slope," << fit.slope << "\n# intercept," << fit.intercept << "\n# residual,"
        << fit.residual << '\n';
    manifest.outputs.push_back("fit.csv");
    std::printf("scaling fit: slope %.4f (residual %.4g)\n", fit.slope, fit.residual);
  }
  manifest.write();
  return 0;
}

int cmd_analyze(const CommonArgs& args) {
  const ConfigMap cfg = load_config(args);
  cfg.require_known_keys({"edges", "features", "labels", "classes", "Z_cap"});
  ExternalGraphBundle bundle;
  bundle.edges_path = cfg.get_string("edges", "");
  bundle.features_path = cfg.get_string("features", "");
  bundle.labels_path = cfg.get_string("labels", "");
  bundle.class_count = static_cast<int>(cfg.get_long("classes", 0));
  bundle.Z_cap = static_cast<int>(cfg.get_long("Z_cap", 20));
  if (bundle.edges_path.empty() || bundle.features_path.empty() || bundle.labels_path.empty())
    throw ConfigError("analyze needs edges=, features=, labels= paths");

  ManifestWriter manifest{"analyze", args};
  manifest.config = {{"edges", bundle.edges_path},
                     {"features", bundle.features_path},
                     {"labels", bundle.labels_path},
                     {"classes", bundle.class_count},
                     {"Z_cap", bundle.Z_cap}};

  const Graph g = load_graph(bundle);

  // Class ids: +/-1 labels map to classes {0: +1, 1: -1}.
  std::vector<int> class_of(g.N, 0);
  const bool pm_one = g.class_count == 2 &&
                      std::all_of(g.labels.begin(), g.labels.end(),
                                  [](int v) { return v == 1 || v == -1; });
  for (int n = 0; n < g.N; ++n) class_of[n] = pm_one ? (g.labels[n] > 0 ? 0 : 1) : g.labels[n];

  fs::create_directories(args.out_dir);

  // Per-class eigen cone test.
  std::vector<std::vector<int>> disc_sets(g.class_count);
  {
    std::ofstream out(fs::path(args.out_dir) / "disc_fractions.csv");
    out << "class,count,fraction,zero_projections,degenerate,eig1,eig2,eig3\n";
    for (int c = 0; c < g.class_count; ++c) {
      std::vector<int> members;
      for (int n = 0; n < g.N; ++n)
        if (class_of[n] == c) members.push_back(n);
      if (members.size() < 4) {
        out << c << ',' << members.size() << ",,,skipped,,,\n";
        continue;
      }
      Mat feats(static_cast<int>(members.size()), g.d);
      for (std::size_t i = 0; i < members.size(); ++i)
        std::copy(g.features.row(members[i]), g.features.row(members[i]) + g.d,
                  feats.row(static_cast<int>(i)));
      const EigResult eig = top_eigvecs(feats, derive_seed(args.seed, "eig", c));
      const DiscFraction frac = discriminative_fraction(feats, eig);
      const auto& k = kernels::ops();
      double mean_rep[3] = {0, 0, 0};
      for (std::size_t i = 0; i < members.size(); ++i)
        for (int e = 0; e < 3; ++e)
          mean_rep[e] += k.dot(eig.vectors.row(e), feats.row(static_cast<int>(i)), g.d);
      for (std::size_t i = 0; i < members.size(); ++i) {
        const double* x = feats.row(static_cast<int>(i));
        double rep[3], rn = 0.0, cn = 0.0, dotp = 0.0;
        for (int e = 0; e < 3; ++e) {
          rep[e] = k.dot(eig.vectors.row(e), x, g.d);
          rn += rep[e] * rep[e];
          cn += mean_rep[e] * mean_rep[e];
          dotp += rep[e] * mean_rep[e];
        }
        if (rn > 0 && cn > 0 && dotp / std::sqrt(rn * cn) > std::cos(3.14159265358979323846 / 4.0))
          disc_sets[c].push_back(members[i]);
      }
      out << c << ',' << members.size() << ',' << frac.fraction << ','
          << frac.zero_projection_count << ',' << (eig.degenerate ? 1 : 0) << ',' << eig.values[0]
          << ',' << eig.values[1] << ',' << eig.values[2] << '\n';
    }
  }

  // Normalized winning-margin profile over the cone-test sets.
  {
    const NormalizedMarginProfile profile =
        normalized_margin_profile(g, class_of, disc_sets, bundle.Z_cap);
    std::ofstream out(fs::path(args.out_dir) / "margin_profile.csv");
    out << "z,normalized_delta_bar\n";
    for (std::size_t z = 0; z < profile.delta_bar.size(); ++z)
      out << z + 1 << ',' << profile.delta_bar[z] << '\n';
    out << "# z_m," << profile.z_m << "\n# positive_fraction," << profile.positive_fraction
        << "\n# empty_neighborhood_terms," << profile.empty_neighborhoods << '\n';
    std::printf("z_m=%d, positive margin fraction %.4f\n", profile.z_m, profile.positive_fraction);
  }

  manifest.outputs = {"disc_fractions.csv", "margin_profile.csv"};
  manifest.write();
  return 0;
}

int cmd_gradcheck(const CommonArgs& args) {
  const ConfigMap cfg = load_config(args);
  cfg.require_known_keys({"instances", "h", "tolerance"});
  const int instances = static_cast<int>(cfg.get_long("instances", 100));
  const double h = cfg.get_double("h", 1e-4);
  const double tolerance = cfg.get_double("tolerance", 1e-4);

  ManifestWriter manifest{"gradcheck", args};
  manifest.config = {{"instances", instances}, {"h", h}, {"tolerance", tolerance}};

  const double worst = gradcheck_random_instances(instances, args.seed, h);
  manifest.config["max_rel_error"] = worst;
  manifest.write();
  std::printf("gradcheck: max relative error %.3g over %d instances (tolerance %.3g)\n", worst,
              instances, tolerance);
  if (!(worst <= tolerance)) {
    std::fprintf(stderr, "gradcheck FAILED\n");
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shallow graph transformer lab"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "key=value config file");
    sub->add_option("--out", args.out_dir, "output directory");
    sub->add_option("--jobs", args.jobs, "worker threads");
    sub->add_option("--seed", args.seed, "base RNG seed");
  };

  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic graph bundle");
  CLI::App* train = app.add_subcommand("train", "train one model and record curves");
  CLI::App* sweep = app.add_subcommand("sweep", "success-fraction sweep over a grid");
  CLI::App* analyze = app.add_subcommand("analyze", "eigen cone test and margin profile");
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  for (auto* sub : {gen, train, sweep, analyze, gradcheck}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << e.what() << '\n';
    return 1;
  }

  try {
    if (gen->parsed()) return cmd_gen(args);
    if (train->parsed()) return cmd_train(args);
    if (sweep->parsed()) return cmd_sweep(args);
    if (analyze->parsed()) return cmd_analyze(args);
    if (gradcheck->parsed()) return cmd_gradcheck(args);
    return 1;
  } catch (const ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
