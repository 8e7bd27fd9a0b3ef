#include "minigt/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "minigt/errors.hpp"

namespace minigt {

namespace fs = std::filesystem;

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  return out;
}

double parse_double(const std::string& s, const std::string& path, int lineno) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(path + ":" + std::to_string(lineno) + ": not a number: '" + s + "'");
  }
}

long parse_long(const std::string& s, const std::string& path, int lineno) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(path + ":" + std::to_string(lineno) + ": not an integer: '" + s + "'");
  }
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  return out;
}

void write_full(const fs::path& path, const char* fmt_row, const Mat& m) {
  std::ofstream out = open_out(path);
  char buf[32];
  for (int i = 0; i < m.rows; ++i) {
    for (int j = 0; j < m.cols; ++j) {
      std::snprintf(buf, sizeof buf, fmt_row, m(i, j));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace

void write_graph_bundle(const Graph& g, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out = open_out(dir / "edges.txt");
    for (int u = 0; u < g.N; ++u)
      for (int v : g.adj[u])
        if (u < v) out << u << ' ' << v << '\n';
  }
  write_full(dir / "features.csv", "%.17g", g.features);
  {
    std::ofstream out = open_out(dir / "labels.csv");
    for (int n = 0; n < g.N; ++n) out << n << ',' << g.labels[n] << '\n';
  }
  if (!g.pattern_of.empty()) {
    std::ofstream out = open_out(dir / "patterns.csv");
    for (int n = 0; n < g.N; ++n) out << n << ',' << g.pattern_of[n] << '\n';
  }
}

void write_run_csv(const RunResult& run, const fs::path& path) {
  std::ofstream out = open_out(path);
  out << "iteration,train_loss,test_hinge,test_01,attn_relevant,attn_confusion,attn_other";
  const std::size_t Z = run.b_history.empty() ? 0 : run.b_history[0].size();
  for (std::size_t z = 0; z < Z; ++z) out << ",b_" << z;
  out << '\n';
  for (std::size_t i = 0; i < run.iteration.size(); ++i) {
    out << run.iteration[i] << ',' << run.train_loss[i] << ',' << run.test_hinge[i] << ','
        << run.test_01[i] << ',' << run.attn_mass[i].relevant << ',' << run.attn_mass[i].confusion
        << ',' << run.attn_mass[i].other;
    for (std::size_t z = 0; z < Z; ++z) out << ',' << run.b_history[i][z];
    out << '\n';
  }
}

void write_sweep_csv(const SweepMatrix& m, const fs::path& path) {
  std::ofstream out = open_out(path);
  const char* axis = m.axis == SweepAxis::GammaD ? "gamma_d" : "eps_S";
  out << "axis,axis_value,L,trial,seed,final_hinge,iterations_to_threshold,diverged,success\n";
  for (std::size_t i = 0; i < m.axis_values.size(); ++i) {
    for (std::size_t j = 0; j < m.L_values.size(); ++j) {
      const auto& cell = m.records[m.cell(static_cast<int>(i), static_cast<int>(j))];
      for (std::size_t k = 0; k < cell.size(); ++k) {
        const TrialRecord& r = cell[k];
        out << axis << ',' << m.axis_values[i] << ',' << m.L_values[j] << ',' << k << ','
            << r.seed << ',' << r.final_hinge << ',' << r.iterations_to_threshold << ','
            << (r.diverged ? 1 : 0) << ',' << (r.success ? 1 : 0) << '\n';
      }
    }
  }
}

void write_sweep_pgm(const SweepMatrix& m, const fs::path& path) {
  std::ofstream out = open_out(path);
  out << "P2\n# success fraction, white = all trials succeed\n";
  out << m.L_values.size() << ' ' << m.axis_values.size() << "\n255\n";
  for (std::size_t i = 0; i < m.axis_values.size(); ++i) {
    for (std::size_t j = 0; j < m.L_values.size(); ++j) {
      const double frac = m.success_fraction(static_cast<int>(i), static_cast<int>(j));
      if (j) out << ' ';
      out << static_cast<int>(std::lround(255.0 * frac));
    }
    out << '\n';
  }
}

void write_param_snapshot(const GTParams& p, const fs::path& dir, std::uint64_t seed) {
  fs::create_directories(dir);
  write_full(dir / "W_Q.csv", "%.17g", p.W_Q);
  write_full(dir / "W_K.csv", "%.17g", p.W_K);
  write_full(dir / "W_V.csv", "%.17g", p.W_V);
  write_full(dir / "W_O.csv", "%.17g", p.W_O);
  {
    std::ofstream out = open_out(dir / "a.csv");
    for (double v : p.a) out << v << '\n';
  }
  {
    std::ofstream out = open_out(dir / "b.csv");
    for (double v : p.b) out << v << '\n';
  }
  nlohmann::json manifest{
      {"mode", mode_name(p.cfg.mode)},
      {"d", p.d},
      {"m_a", p.cfg.m_a},
      {"m_b", p.cfg.m_b},
      {"m", p.cfg.m},
      {"Z", p.cfg.Z},
      {"seed", seed},
  };
  std::ofstream out = open_out(dir / "params.json");
  out << manifest.dump(2) << '\n';
}

}  // namespace minigt
