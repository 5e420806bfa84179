// SPDX-License-Identifier: Apache-2.0

#include "gkdv/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gkdv/errors.hpp"

namespace gkdv
{

namespace fs = std::filesystem;

std::string format_real(double value)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace
{

std::ofstream open_out(const fs::path &path)
{
  std::ofstream out(path);
  if (!out)
    throw ValidationError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const fs::path &path)
{
  std::ifstream in(path);
  if (!in)
    throw ValidationError("cannot open " + path.string());
  return in;
}

// from_chars rather than stod: stod reports subnormal values as out of range.
double parse_real(const std::string &text, const fs::path &path)
{
  const char *first = text.data();
  const char *last = first + text.size();
  while (first < last && (*first == ' ' || *first == '\t'))
    ++first;
  double v = 0.0;
  const auto [end, ec] = std::from_chars(first, last, v);
  const bool trailing = text.find_first_not_of(" \t\r", end - text.data()) != std::string::npos;
  if (ec != std::errc() || end == first || trailing)
    throw ValidationError("malformed number '" + text + "' in " + path.string());
  return v;
}

// Two-column numeric CSV; '#' lines are returned through `comments`.
void read_two_columns(const fs::path &path, const std::string &header, std::vector<double> &a,
                      std::vector<double> &b, std::vector<std::string> *comments = nullptr)
{
  std::ifstream in = open_in(path);
  std::string line;
  bool seen_header = false;
  while (std::getline(in, line))
  {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    if (line[0] == '#')
    {
      if (comments)
        comments->push_back(line);
      continue;
    }
    if (!seen_header)
    {
      if (line != header)
        throw ValidationError("expected header '" + header + "' in " + path.string());
      seen_header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ValidationError("malformed row '" + line + "' in " + path.string());
    a.push_back(parse_real(line.substr(0, comma), path));
    b.push_back(parse_real(line.substr(comma + 1), path));
  }
  if (!seen_header)
    throw ValidationError("missing header in " + path.string());
}

nlohmann::json grid_to_json(const PeriodicGrid &grid)
{
  return {{"x_left", grid.x_left}, {"x_right", grid.x_right}, {"points", grid.points},
          {"h", grid.h()}};
}

} // namespace

void write_json(const fs::path &path, const nlohmann::json &value)
{
  std::ofstream out = open_out(path);
  out << value.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path &path)
{
  std::ifstream in = open_in(path);
  try
  {
    return nlohmann::json::parse(in);
  }
  catch (const nlohmann::json::exception &e)
  {
    throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

fs::path sidecar_path(const fs::path &csv_path)
{
  fs::path p = csv_path;
  p.replace_extension(".json");
  return p;
}

void write_profile(const SolitonProfile &profile, const fs::path &csv_path)
{
  {
    std::ofstream out = open_out(csv_path);
    out << "# gkdv-profile v1\n";
    out << "xi,f\n";
    for (Eigen::Index i = 0; i < profile.xi.size(); ++i)
      out << format_real(profile.xi(i)) << ',' << format_real(profile.values(i)) << '\n';
  }
  write_json(sidecar_path(csv_path), {{"model", profile.model},
                                      {"amplitude", profile.amplitude},
                                      {"lambda", profile.lambda},
                                      {"h", profile.h()},
                                      {"b", profile.b()},
                                      {"mode", to_string(profile.mode)},
                                      {"residual_norm", profile.residual_norm},
                                      {"iterations", profile.iterations}});
}

SolitonProfile read_profile(const fs::path &path)
{
  const fs::path csv = fs::is_directory(path) ? path / "profile.csv" : path;
  std::vector<double> xi, f;
  std::vector<std::string> comments;
  read_two_columns(csv, "xi,f", xi, f, &comments);
  if (comments.empty() || comments.front() != "# gkdv-profile v1")
    throw ValidationError(csv.string() + " is not a gkdv-profile v1 file");
  if (xi.size() < 9)
    throw ValidationError(csv.string() + " has too few grid points");

  const nlohmann::json meta = read_json(sidecar_path(csv));
  SolitonProfile profile;
  try
  {
    profile.model = meta.at("model").get<ModelSpec>();
    profile.amplitude = meta.at("amplitude").get<double>();
    profile.lambda = meta.at("lambda").get<double>();
    profile.mode = boundary_mode_from_string(meta.at("mode").get<std::string>());
    profile.residual_norm = meta.at("residual_norm").get<double>();
    profile.iterations = meta.value("iterations", 0);
  }
  catch (const nlohmann::json::exception &e)
  {
    throw ValidationError("malformed profile sidecar " + sidecar_path(csv).string() + ": "
                          + e.what());
  }
  profile.xi = Eigen::Map<const Eigen::VectorXd>(xi.data(), static_cast<Eigen::Index>(xi.size()));
  profile.values = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
  if (profile.xi(0) != 0.0)
    throw ValidationError(csv.string() + ": profile grid must start at xi = 0");
  return profile;
}

RunWriter::RunWriter(const fs::path &dir, const RunMetadata &meta) : dir_(dir)
{
  nlohmann::json waves = nlohmann::json::array();
  for (const WaveRecord &w : meta.waves)
    waves.push_back({{"amplitude", w.amplitude}, {"center", w.center}, {"lambda", w.lambda}});
  write_json(dir_ / "run.json",
             {{"version", tool_version},
              {"model", meta.model},
              {"grid", grid_to_json(meta.grid)},
              {"config",
               {{"dt", meta.config.dt},
                {"t_end", meta.config.t_end},
                {"snapshot_stride", meta.config.snapshot_stride},
                {"newton_tol", meta.config.newton_tol},
                {"newton_max", meta.config.newton_max},
                {"linearized", meta.config.linearized}}},
              {"waves", waves}});
}

void RunWriter::write_snapshot(const PeriodicGrid &grid, const Snapshot &snapshot)
{
  std::ofstream out = open_out(dir_ / ("snap_" + std::to_string(next_index_++) + ".csv"));
  out << "# t=" << format_real(snapshot.t) << '\n';
  out << "x,u\n";
  for (int i = 0; i < grid.points; ++i)
    out << format_real(grid.x(i)) << ',' << format_real(snapshot.u(i)) << '\n';
}

void RunWriter::write_diagnostics(const std::vector<DiagnosticsRecord> &diagnostics)
{
  std::ofstream out = open_out(dir_ / "diagnostics.csv");
  out << "t,mass,momentum\n";
  for (const DiagnosticsRecord &d : diagnostics)
    out << format_real(d.t) << ',' << format_real(d.mass) << ',' << format_real(d.momentum) << '\n';
}

RunMetadata read_run_metadata(const fs::path &dir)
{
  const nlohmann::json j = read_json(dir / "run.json");
  RunMetadata meta;
  try
  {
    meta.model = j.at("model").get<ModelSpec>();
    const auto &g = j.at("grid");
    meta.grid = PeriodicGrid(g.at("x_left").get<double>(), g.at("x_right").get<double>(),
                             g.at("points").get<int>());
    const auto &c = j.at("config");
    meta.config.dt = c.at("dt").get<double>();
    meta.config.t_end = c.at("t_end").get<double>();
    meta.config.snapshot_stride = c.at("snapshot_stride").get<int>();
    meta.config.newton_tol = c.at("newton_tol").get<double>();
    meta.config.newton_max = c.at("newton_max").get<int>();
    meta.config.linearized = c.value("linearized", false);
    for (const auto &w : j.at("waves"))
      meta.waves.push_back({w.at("amplitude").get<double>(), w.at("center").get<double>(),
                            w.at("lambda").get<double>()});
  }
  catch (const nlohmann::json::exception &e)
  {
    throw ValidationError("malformed run.json in " + dir.string() + ": " + e.what());
  }
  return meta;
}

RunData read_run(const fs::path &dir)
{
  if (!fs::is_directory(dir))
    throw ValidationError(dir.string() + " is not a run directory");
  const RunMetadata meta = read_run_metadata(dir);
  RunData run;
  run.model = meta.model;
  run.grid = meta.grid;
  run.dt = meta.config.dt;
  for (const WaveRecord &w : meta.waves)
  {
    run.initial_amplitudes.push_back(w.amplitude);
    run.initial_centers.push_back(w.center);
    run.initial_speeds.push_back(w.lambda);
  }
  for (int k = 0;; ++k)
  {
    const fs::path snap = dir / ("snap_" + std::to_string(k) + ".csv");
    if (!fs::exists(snap))
      break;
    std::vector<double> x, u;
    std::vector<std::string> comments;
    read_two_columns(snap, "x,u", x, u, &comments);
    if (comments.empty() || comments.front().rfind("# t=", 0) != 0)
      throw ValidationError(snap.string() + ": missing '# t=' header");
    if (static_cast<int>(u.size()) != run.grid.points)
      throw ValidationError(snap.string() + ": row count does not match the grid");
    run.snapshots.push_back(
        {parse_real(comments.front().substr(4), snap),
         Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size()))});
  }
  if (run.snapshots.empty())
    throw ValidationError(dir.string() + " contains no snapshots");
  std::vector<double> t, mass;
  std::ifstream in = open_in(dir / "diagnostics.csv");
  std::string line;
  std::getline(in, line);
  if (line != "t,mass,momentum")
    throw ValidationError("malformed diagnostics.csv in " + dir.string());
  while (std::getline(in, line))
  {
    if (line.empty())
      continue;
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c))
      throw ValidationError("malformed diagnostics row '" + line + "'");
    run.diagnostics.push_back({parse_real(a, dir), parse_real(b, dir), parse_real(c, dir)});
  }
  return run;
}

void prepare_output_dir(const fs::path &dir, bool force)
{
  if (fs::exists(dir))
  {
    if (!fs::is_directory(dir))
      throw ValidationError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir))
    {
      if (!force)
        throw ValidationError("output directory " + dir.string()
                              + " is not empty (use --force to overwrite)");
      for (const auto &entry : fs::directory_iterator(dir))
        fs::remove_all(entry.path());
    }
    return;
  }
  fs::create_directories(dir);
}

nlohmann::json manifest_to_json(const RunManifest &manifest)
{
  return {{"command", manifest.command},   {"parameters", manifest.parameters},
          {"inputs", manifest.inputs},     {"outputs", manifest.outputs},
          {"version", tool_version},       {"wall_seconds", manifest.wall_seconds}};
}

void write_manifest(const fs::path &dir, const RunManifest &manifest)
{
  const fs::path path = dir / "manifest.json";
  if (fs::exists(path))
    throw ValidationError("manifest already exists in " + dir.string());
  write_json(path, manifest_to_json(manifest));
}

} // namespace gkdv
