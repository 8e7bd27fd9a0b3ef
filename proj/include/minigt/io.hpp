#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "minigt/experiments.hpp"
#include "minigt/graph.hpp"
#include "minigt/model.hpp"
#include "minigt/trainer.hpp"

namespace minigt {

// Whole-file text helpers; parse errors carry path and line number.
std::vector<std::string> read_lines(const std::string& path);
std::vector<std::string> split_fields(const std::string& line, char sep);
double parse_double(const std::string& s, const std::string& path, int lineno);
long parse_long(const std::string& s, const std::string& path, int lineno);

// Graph bundle: edges.txt ("u v" per line, 0-based), features.csv (N x d),
// labels.csv ("node,label"), patterns.csv ("node,pattern") when present.
void write_graph_bundle(const Graph& g, const std::filesystem::path& dir);

void write_run_csv(const RunResult& run, const std::filesystem::path& path);

void write_sweep_csv(const SweepMatrix& m, const std::filesystem::path& path);

// Greyscale success map, white = every trial succeeded (plain-text P2 PGM).
void write_sweep_pgm(const SweepMatrix& m, const std::filesystem::path& path);

// Flat CSV per tensor plus a small JSON manifest (dims, mode, seed).
void write_param_snapshot(const GTParams& p, const std::filesystem::path& dir,
                          std::uint64_t seed);

}
