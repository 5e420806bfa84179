// SPDX-License-Identifier: Apache-2.0

#ifndef GKDV_IO_HPP
#define GKDV_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gkdv/analysis.hpp"
#include "gkdv/eigen_solver.hpp"
#include "gkdv/evolution.hpp"

namespace gkdv
{

inline constexpr const char *tool_version = "gkdv 1.0.0";

// Shortest round-trip decimal form with 17 significant digits.
std::string format_real(double value);

//
// Profile files: <stem>.csv with the lines
//   # gkdv-profile v1
//   xi,f
//   <xi>,<f>          (one row per grid point)
// and the sidecar <stem>.json holding
//   {model, amplitude, lambda, h, b, mode, residual_norm}.
//
void write_profile(const SolitonProfile &profile, const std::filesystem::path &csv_path);
// Accepts the CSV path or a directory containing profile.csv.
SolitonProfile read_profile(const std::filesystem::path &path);
std::filesystem::path sidecar_path(const std::filesystem::path &csv_path);

struct WaveRecord
{
  double amplitude; // signed
  double center;
  double lambda;
};

struct RunMetadata
{
  ModelSpec model;
  PeriodicGrid grid;
  EvolveConfig config;
  std::vector<WaveRecord> waves;
};

//
// Run directory layout:
//   run.json         model, grid, config, waves, version
//   snap_<k>.csv     "# t=<time>", "x,u", rows
//   diagnostics.csv  "t,mass,momentum", rows
//
class RunWriter
{
public:
  RunWriter(const std::filesystem::path &dir, const RunMetadata &meta);
  void write_snapshot(const PeriodicGrid &grid, const Snapshot &snapshot);
  void write_diagnostics(const std::vector<DiagnosticsRecord> &diagnostics);

private:
  std::filesystem::path dir_;
  int next_index_ = 0;
};

RunData read_run(const std::filesystem::path &dir);
RunMetadata read_run_metadata(const std::filesystem::path &dir);

// Creates `dir`; fails with ValidationError if it exists and is not empty,
// unless `force`, in which case its contents are removed first.
void prepare_output_dir(const std::filesystem::path &dir, bool force);

struct RunManifest
{
  std::string command;
  nlohmann::json parameters;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  double wall_seconds = 0.0;
};

// Writes manifest.json; refuses to overwrite an existing manifest.
void write_manifest(const std::filesystem::path &dir, const RunManifest &manifest);
nlohmann::json manifest_to_json(const RunManifest &manifest);

void write_json(const std::filesystem::path &path, const nlohmann::json &value);
nlohmann::json read_json(const std::filesystem::path &path);

} // namespace gkdv

#endif // GKDV_IO_HPP
