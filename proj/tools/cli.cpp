// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gkdv/analysis.hpp"
#include "gkdv/eigen_solver.hpp"
#include "gkdv/errors.hpp"
#include "gkdv/evolution.hpp"
#include "gkdv/io.hpp"

namespace gkdv::cli
{

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

class Stopwatch
{
public:
  double seconds() const
  {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct ModelFlags
{
  std::string preset;
  std::optional<double> alpha, beta, gamma;
  std::optional<int> m, n;

  void add_to(CLI::App *app)
  {
    app->add_option("--preset", preset, "Named model: k22, k33, kdv, kdv-k22, mkdv-k33")
        ->check(CLI::IsMember({"k22", "k33", "kdv", "kdv-k22", "mkdv-k33"}));
    app->add_option("--alpha", alpha, "Convective coefficient");
    app->add_option("--m", m, "Convective exponent");
    app->add_option("--beta", beta, "Linear dispersion coefficient");
    app->add_option("--gamma", gamma, "Nonlinear dispersion coefficient");
    app->add_option("--n", n, "Dispersive exponent");
  }

  bool given() const { return !preset.empty() || alpha || beta || gamma || m || n; }

  ModelSpec resolve() const
  {
    ModelSpec model;
    if (preset == "k33")
      model = ModelSpec::kmn(3, 3);
    else if (preset == "kdv")
      model = ModelSpec::kdv();
    else if (preset == "kdv-k22")
      model = ModelSpec::kdv_k22();
    else if (preset == "mkdv-k33")
      model = ModelSpec::mkdv_k33();
    model.alpha = alpha.value_or(model.alpha);
    model.beta = beta.value_or(model.beta);
    model.gamma = gamma.value_or(model.gamma);
    model.m = m.value_or(model.m);
    model.n = n.value_or(model.n);
    model.validate();
    return model;
  }
};

FilterPolicy filter_from_string(const std::string &name)
{
  if (name == "auto")
    return FilterPolicy::Automatic;
  if (name == "always")
    return FilterPolicy::Always;
  if (name == "on-increase")
    return FilterPolicy::OnIncrease;
  return FilterPolicy::Never;
}

// --- soliton ---------------------------------------------------------------

struct SolitonArgs
{
  ModelFlags model;
  double amplitude = 1.0;
  double h = 0.05;
  std::optional<double> b;
  std::string mode;
  double tol = 1e-10;
  int max_iter = 200;
  std::string filter = "auto";
  std::string out;
  bool force = false;
};

int cmd_soliton(const SolitonArgs &args, std::ostream &out)
{
  Stopwatch clock;
  const ModelSpec model = args.model.resolve();
  const BoundaryMode mode = args.mode.empty()
                                ? (model.beta == 0.0 ? BoundaryMode::Dirichlet : BoundaryMode::Robin)
                                : boundary_mode_from_string(args.mode);
  if ((mode == BoundaryMode::Robin) != (model.beta > 0.0))
    throw ValidationError("mode/model mismatch: dirichlet requires beta = 0, robin requires beta > 0");
  const double b = args.b.value_or(default_truncation(model, args.amplitude, mode));
  const auto problem = DiscreteEigenProblem::from_spacing(model, args.amplitude, args.h, b, mode);
  prepare_output_dir(args.out, args.force);

  NewtonConfig config;
  config.tol = args.tol;
  config.max_iter = args.max_iter;
  config.filter_policy = filter_from_string(args.filter);
  const SolitonProfile profile = newton_solve(problem, config);

  const fs::path csv = fs::path(args.out) / "profile.csv";
  write_profile(profile, csv);
  write_manifest(args.out, {"soliton",
                            {{"model", model},
                             {"amplitude", args.amplitude},
                             {"h", problem.h()},
                             {"b", problem.b()},
                             {"intervals", problem.intervals()},
                             {"mode", to_string(mode)},
                             {"tol", args.tol},
                             {"max_iter", args.max_iter},
                             {"filter", args.filter}},
                            {},
                            {csv.string(), sidecar_path(csv).string()},
                            clock.seconds()});
  out << "lambda = " << format_real(profile.lambda) << '\n'
      << "residual_norm = " << format_real(profile.residual_norm) << '\n'
      << "iterations = " << profile.iterations << '\n';
  return exit_ok;
}

// --- scale -----------------------------------------------------------------

struct ScaleArgs
{
  std::string in;
  double amplitude = 1.0;
  std::string out;
  bool force = false;
};

int cmd_scale(const ScaleArgs &args, std::ostream &out)
{
  Stopwatch clock;
  const SolitonProfile source = read_profile(args.in);
  const SolitonProfile scaled = scale_profile(source, args.amplitude);
  prepare_output_dir(args.out, args.force);
  const fs::path csv = fs::path(args.out) / "profile.csv";
  write_profile(scaled, csv);
  write_manifest(args.out, {"scale",
                            {{"amplitude", args.amplitude}},
                            {args.in},
                            {csv.string(), sidecar_path(csv).string()},
                            clock.seconds()});
  out << "lambda = " << format_real(scaled.lambda) << '\n';
  return exit_ok;
}

// --- collide ---------------------------------------------------------------

struct CollideArgs
{
  ModelFlags model;
  std::vector<std::string> profiles;
  std::vector<double> domain;
  double h = 0.1;
  std::optional<double> dt;
  double t_end = 0.0;
  int snap = 100;
  double newton_tol = 1e-12;
  int newton_max = 25;
  bool resolve = false;
  std::string out;
  bool force = false;
};

struct WaveSpec
{
  std::string path;
  double center;
  int sign;
};

double parse_number(const std::string &text, const std::string &context)
{
  try
  {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size())
      return v;
  }
  catch (const std::exception &)
  {
  }
  throw ValidationError("cannot parse '" + text + "' in " + context);
}

// FILE@CENTER[@SIGN]
WaveSpec parse_wave(const std::string &spec)
{
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t pos; (pos = spec.find('@', start)) != std::string::npos; start = pos + 1)
    parts.push_back(spec.substr(start, pos - start));
  parts.push_back(spec.substr(start));
  if (parts.size() < 2 || parts.size() > 3 || parts[0].empty())
    throw ValidationError("--profile expects FILE@CENTER[@SIGN], got '" + spec + "'");
  WaveSpec wave{parts[0], parse_number(parts[1], "--profile " + spec), 1};
  if (parts.size() == 3)
  {
    const double s = parse_number(parts[2], "--profile " + spec);
    if (s != 1.0 && s != -1.0)
      throw ValidationError("--profile sign must be 1 or -1 in '" + spec + "'");
    wave.sign = static_cast<int>(s);
  }
  return wave;
}

struct CollideOutcome
{
  RunData data;
  double wall_seconds;
};

CollideOutcome collide(const CollideArgs &args, double h, double dt_override, int snap,
                       bool resolve, const fs::path &dir, std::ostream &out)
{
  Stopwatch clock;
  if (args.profiles.empty())
    throw ValidationError("collide: at least one --profile is required (nothing to evolve)");
  if (args.domain.size() != 2)
    throw ValidationError("collide: --domain expects two numbers");
  std::vector<WaveSpec> specs;
  std::vector<SolitonProfile> profiles;
  for (const std::string &s : args.profiles)
  {
    specs.push_back(parse_wave(s));
    profiles.push_back(read_profile(specs.back().path));
  }
  const ModelSpec model = args.model.given() ? args.model.resolve() : profiles.front().model;
  for (std::size_t k = 0; k < profiles.size(); ++k)
    if (!(profiles[k].model == model))
      throw ValidationError("collide: profile " + specs[k].path + " was solved for "
                            + profiles[k].model.describe() + ", not " + model.describe());
  if (resolve)
    for (SolitonProfile &p : profiles)
      p = newton_solve(DiscreteEigenProblem::from_spacing(model, p.amplitude, h, p.b(), p.mode));

  const PeriodicGrid grid = PeriodicGrid::from_spacing(args.domain[0], args.domain[1], h);
  std::vector<EmbeddedWave> waves;
  RunMetadata meta{model, grid, {}, {}};
  double max_speed = 0.0;
  for (std::size_t k = 0; k < profiles.size(); ++k)
  {
    waves.push_back({&profiles[k], specs[k].center, specs[k].sign});
    meta.waves.push_back(
        {specs[k].sign * profiles[k].amplitude, specs[k].center, profiles[k].lambda});
    max_speed = std::max(max_speed, std::abs(profiles[k].lambda));
  }
  const PeriodicField initial = embed(waves, grid);

  EvolveConfig config;
  config.dt = dt_override > 0.0 ? dt_override : default_time_step(grid.h(), max_speed, 0.01);
  config.t_end = args.t_end;
  config.snapshot_stride = snap;
  config.newton_tol = args.newton_tol;
  config.newton_max = args.newton_max;
  meta.config = config;

  prepare_output_dir(dir, args.force);
  RunWriter writer(dir, meta);
  std::vector<DiagnosticsRecord> diagnostics;
  RunResult result;
  try
  {
    result = run(initial, model, config,
                 [&](const Snapshot &s, const DiagnosticsRecord &d) {
                   writer.write_snapshot(grid, s);
                   diagnostics.push_back(d);
                 });
  }
  catch (...)
  {
    writer.write_diagnostics(diagnostics);
    throw;
  }
  writer.write_diagnostics(result.diagnostics);

  json params{{"model", model},
              {"domain", args.domain},
              {"h", grid.h()},
              {"points", grid.points},
              {"dt", config.dt},
              {"t_end", config.t_end},
              {"snapshot_stride", config.snapshot_stride},
              {"newton_tol", config.newton_tol},
              {"newton_max", config.newton_max},
              {"resolve", resolve},
              {"profiles", args.profiles}};
  std::vector<std::string> inputs;
  for (const WaveSpec &w : specs)
    inputs.push_back(w.path);
  const double seconds = clock.seconds();
  write_manifest(dir, {"collide", params, inputs, {(dir / "run.json").string()}, seconds});

  const DiagnosticsRecord &first = result.diagnostics.front();
  const DiagnosticsRecord &last = result.diagnostics.back();
  out << "run " << dir.string() << ": " << result.snapshots.size() << " snapshots to t = "
      << format_real(last.t) << ", dt = " << format_real(config.dt) << '\n'
      << "mass drift = " << format_real(last.mass - first.mass) << '\n';

  RunData data{model, grid, config.dt, std::move(result.snapshots), std::move(result.diagnostics),
               {}, {}, {}};
  for (const WaveRecord &w : meta.waves)
  {
    data.initial_amplitudes.push_back(w.amplitude);
    data.initial_centers.push_back(w.center);
    data.initial_speeds.push_back(w.lambda);
  }
  return {std::move(data), seconds};
}

// --- analyze ---------------------------------------------------------------

struct AnalyzeArgs
{
  std::string run_dir;
  std::string out;
  bool plot = false;
  std::string compare;
  double threshold = 0.0;
  double window = 0.0;
  bool force = false;
};

std::string plot_script(const fs::path &run_dir, const RunData &run, double ripple)
{
  std::ostringstream gp;
  const std::size_t count = run.snapshots.size();
  const double top = std::max(1e-12, run.snapshots.front().u.cwiseAbs().maxCoeff());
  gp << "# gnuplot script: snapshot waterfall and ripple zoom\n"
     << "set datafile separator ','\n"
     << "set key off\n"
     << "set xlabel 'x'\n"
     << "set term pngcairo size 1000,800\n"
     << "set output '" << (run_dir / "waterfall.png").string() << "'\n"
     << "set ylabel 't'\n"
     << "plot for [k=0:" << count - 1 << "] '" << (run_dir / "snap_").string()
     << "'.k.'.csv' every ::2 using 1:($2/" << format_real(top) << " + k) with lines lc rgb 'black'\n"
     << "set output '" << (run_dir / "ripple.png").string() << "'\n"
     << "set ylabel 'u'\n"
     << "set yrange [" << format_real(-5.0 * ripple) << ":" << format_real(5.0 * ripple) << "]\n"
     << "plot '" << (run_dir / ("snap_" + std::to_string(count - 1) + ".csv")).string()
     << "' every ::2 using 1:2 with lines lc rgb 'blue'\n";
  return gp.str();
}

json analysis_report(const RunData &run, const AnalysisOptions &options)
{
  json report = analysis_to_json(analyze_run(run, options));
  report["snapshots"] = run.snapshots.size();
  if (!run.diagnostics.empty())
  {
    const auto &first = run.diagnostics.front();
    const auto &last = run.diagnostics.back();
    report["mass_drift"] = last.mass - first.mass;
    report["momentum_drift"] = last.momentum - first.momentum;
  }
  return report;
}

json refinement_report(const RunData &coarse, const RunData &fine, const fs::path &fine_dir,
                       const AnalysisOptions &options)
{
  return {{"fine_run", fine_dir.string()},
          {"h_coarse", coarse.grid.h()},
          {"h_fine", fine.grid.h()},
          {"ripple_coarse", measure_quantity(coarse, RefinementQuantity::RippleAmplitude, options)},
          {"ripple_fine", measure_quantity(fine, RefinementQuantity::RippleAmplitude, options)},
          {"ripple_ratio",
           refinement_compare(coarse, fine, RefinementQuantity::RippleAmplitude, options)},
          {"oscillation_ratio",
           refinement_compare(coarse, fine, RefinementQuantity::TrailingOscillation, options)}};
}

int cmd_analyze(const AnalyzeArgs &args, const std::vector<std::string> &raw, std::ostream &out)
{
  Stopwatch clock;
  const fs::path run_dir = args.run_dir;
  const RunData run = read_run(run_dir);
  const fs::path report_path = args.out.empty() ? run_dir / "report.json" : fs::path(args.out);
  if (fs::exists(report_path) && !args.force)
    throw ValidationError(report_path.string() + " exists (use --force to overwrite)");
  AnalysisOptions options{args.threshold, args.window};
  json report = analysis_report(run, options);
  if (!args.compare.empty())
    report["refinement"] = refinement_report(run, read_run(args.compare), args.compare, options);
  std::vector<std::string> outputs{report_path.string()};
  if (args.plot)
  {
    fs::path script = report_path;
    script.replace_extension(".gp");
    std::ofstream(script) << plot_script(run_dir, run, report["ripples"].back()["ripple_amplitude"]);
    outputs.push_back(script.string());
  }
  std::vector<std::string> inputs{args.run_dir};
  if (!args.compare.empty())
    inputs.push_back(args.compare);
  report["manifest"] = manifest_to_json({"analyze", raw, inputs, outputs, clock.seconds()});
  write_json(report_path, report);

  out << "relative_ripple = " << format_real(report["relative_ripple"].get<double>()) << '\n';
  if (report.contains("max_height_change"))
    out << "max_height_change = " << format_real(report["max_height_change"].get<double>()) << '\n';
  if (report.contains("refinement"))
    out << "ripple_ratio = " << format_real(report["refinement"]["ripple_ratio"].get<double>())
        << '\n';
  return exit_ok;
}

// --- converge --------------------------------------------------------------

int cmd_converge(const CollideArgs &args, std::ostream &out)
{
  Stopwatch clock;
  const fs::path root = args.out;
  prepare_output_dir(root, args.force);
  CollideArgs sub = args;
  sub.force = false;
  const double dt = args.dt.value_or(0.0);
  // Each grid starts from its own discrete solitons.
  const CollideOutcome coarse = collide(sub, args.h, dt, args.snap, true, root / "coarse", out);
  const double dt_fine = coarse.data.dt / 2.0;
  const CollideOutcome fine =
      collide(sub, args.h / 2.0, dt_fine, 2 * args.snap, true, root / "fine", out);

  const AnalysisOptions options;
  json report{{"coarse", analysis_report(coarse.data, options)},
              {"fine", analysis_report(fine.data, options)},
              {"refinement", refinement_report(coarse.data, fine.data, root / "fine", options)}};
  write_json(root / "report.json", report);
  write_manifest(root, {"converge",
                        {{"h", args.h}, {"dt", coarse.data.dt}, {"t_end", args.t_end},
                         {"profiles", args.profiles}, {"domain", args.domain}},
                        args.profiles,
                        {(root / "coarse").string(), (root / "fine").string(),
                         (root / "report.json").string()},
                        clock.seconds()});
  out << "ripple_ratio = "
      << format_real(report["refinement"]["ripple_ratio"].get<double>()) << '\n'
      << "oscillation_ratio = "
      << format_real(report["refinement"]["oscillation_ratio"].get<double>()) << '\n';
  return exit_ok;
}

void add_collide_options(CLI::App *app, CollideArgs &args)
{
  args.model.add_to(app);
  app->add_option("--profile", args.profiles, "Profile to embed as FILE@CENTER[@SIGN]");
  app->add_option("--domain", args.domain, "Periodic domain end points")->expected(2)->required();
  app->add_option("--h", args.h, "Grid spacing")->required();
  app->add_option("--dt", args.dt, "Time step (default h/2 * min(1, 1/max speed), at most 0.01)");
  app->add_option("--t-end", args.t_end, "Final time")->required();
  app->add_option("--snap", args.snap, "Time steps between snapshots")->check(CLI::PositiveNumber);
  app->add_option("--newton-tol", args.newton_tol, "Inner Newton tolerance");
  app->add_option("--newton-max", args.newton_max, "Inner Newton iteration cap");
  app->add_option("--out", args.out, "Output directory")->required();
  app->add_flag("--force", args.force, "Overwrite a non-empty output directory");
}

std::string json_scalar(const json &value)
{
  return value.is_string() ? value.get<std::string>() : value.dump();
}

} // namespace

std::vector<std::string> expand_config(const std::vector<std::string> &args)
{
  std::vector<std::string> rest;
  std::optional<std::string> config_path;
  for (std::size_t i = 0; i < args.size(); ++i)
  {
    if (args[i] == "--config" && i + 1 < args.size())
      config_path = args[++i];
    else if (args[i].rfind("--config=", 0) == 0)
      config_path = args[i].substr(9);
    else
      rest.push_back(args[i]);
  }
  if (!config_path)
    return rest;
  const json config = read_json(*config_path);
  if (!config.is_object())
    throw ValidationError("config file must hold a JSON object");

  auto given = [&](const std::string &flag) {
    return std::any_of(rest.begin(), rest.end(), [&](const std::string &a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  std::vector<std::string> expanded;
  for (const auto &[key, value] : config.items())
  {
    const std::string flag = "--" + key;
    if (given(flag))
      continue;
    if (value.is_boolean())
    {
      if (value.get<bool>())
        expanded.push_back(flag);
    }
    else if (value.is_array())
    {
      expanded.push_back(flag);
      for (const json &v : value)
        expanded.push_back(json_scalar(v));
    }
    else
    {
      expanded.push_back(flag);
      expanded.push_back(json_scalar(value));
    }
  }
  // Subcommand name first, then file flags, then command-line flags.
  std::vector<std::string> out;
  auto it = rest.begin();
  if (it != rest.end() && !it->empty() && (*it)[0] != '-')
    out.push_back(*it++);
  out.insert(out.end(), expanded.begin(), expanded.end());
  out.insert(out.end(), it, rest.end());
  return out;
}

int run(const std::vector<std::string> &raw_args, std::ostream &out, std::ostream &err)
{
  CLI::App app{"Numerical solitons of generalized KdV equations", "gkdv"};
  app.require_subcommand(1);
  // Keep -h free: --h is the grid spacing.
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", tool_version);

  SolitonArgs soliton;
  auto *soliton_cmd = app.add_subcommand("soliton", "Solve the travelling-wave eigenproblem");
  soliton.model.add_to(soliton_cmd);
  soliton_cmd->add_option("--amplitude", soliton.amplitude, "Peak value f(0) = A");
  soliton_cmd->add_option("--h", soliton.h, "Grid spacing");
  soliton_cmd->add_option("--b", soliton.b, "Truncation point");
  soliton_cmd->add_option("--mode", soliton.mode, "Artificial boundary condition")
      ->check(CLI::IsMember({"dirichlet", "robin"}));
  soliton_cmd->add_option("--tol", soliton.tol, "Newton tolerance on max |F|");
  soliton_cmd->add_option("--max-iter", soliton.max_iter, "Newton iteration cap");
  soliton_cmd->add_option("--filter", soliton.filter, "Low-pass filter policy")
      ->check(CLI::IsMember({"auto", "always", "on-increase", "never"}));
  soliton_cmd->add_option("--out", soliton.out, "Output directory")->required();
  soliton_cmd->add_flag("--force", soliton.force, "Overwrite a non-empty output directory");

  ScaleArgs scale;
  auto *scale_cmd = app.add_subcommand("scale", "Rescale a beta = 0 profile to a new amplitude");
  scale_cmd->add_option("--in", scale.in, "Input profile (CSV or directory)")->required();
  scale_cmd->add_option("--amplitude", scale.amplitude, "New amplitude")->required();
  scale_cmd->add_option("--out", scale.out, "Output directory")->required();
  scale_cmd->add_flag("--force", scale.force, "Overwrite a non-empty output directory");

  CollideArgs collide_args;
  auto *collide_cmd = app.add_subcommand("collide", "Embed profiles and evolve them");
  add_collide_options(collide_cmd, collide_args);
  collide_cmd->add_flag("--resolve", collide_args.resolve,
                        "Re-solve each profile on the evolution grid before embedding");

  CollideArgs converge_args;
  auto *converge_cmd =
      app.add_subcommand("converge", "Run collide at h and h/2 and compare ripple amplitudes");
  add_collide_options(converge_cmd, converge_args);

  AnalyzeArgs analyze;
  auto *analyze_cmd = app.add_subcommand("analyze", "Track peaks and measure ripples of a run");
  analyze_cmd->add_option("--run", analyze.run_dir, "Run directory")->required();
  analyze_cmd->add_option("--out", analyze.out, "Report path (default RUN/report.json)");
  analyze_cmd->add_flag("--plot", analyze.plot, "Also write a gnuplot script");
  analyze_cmd->add_option("--compare", analyze.compare, "Refined run to compare against");
  analyze_cmd->add_option("--threshold", analyze.threshold, "Peak detection threshold");
  analyze_cmd->add_option("--window", analyze.window, "Peak window half-width");
  analyze_cmd->add_flag("--force", analyze.force, "Overwrite an existing report");

  try
  {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);

    if (soliton_cmd->parsed())
      return cmd_soliton(soliton, out);
    if (scale_cmd->parsed())
      return cmd_scale(scale, out);
    if (collide_cmd->parsed())
    {
      collide(collide_args, collide_args.h, collide_args.dt.value_or(0.0), collide_args.snap,
              collide_args.resolve, collide_args.out, out);
      return exit_ok;
    }
    if (converge_cmd->parsed())
      return cmd_converge(converge_args, out);
    if (analyze_cmd->parsed())
      return cmd_analyze(analyze, raw_args, out);
    return exit_validation;
  }
  catch (const CLI::ParseError &e)
  {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_validation;
  }
  catch (const ValidationError &e)
  {
    err << "error: " << e.what() << '\n';
    return exit_validation;
  }
  catch (const NoConvergenceError &e)
  {
    err << "numerical failure: " << e.what() << " (iterations " << e.iterations()
        << ", last residual " << format_real(e.last_residual()) << ")\n";
    return exit_numerical;
  }
  catch (const StepFailure &e)
  {
    err << "numerical failure at t = " << format_real(e.time()) << ": " << e.what() << '\n';
    return exit_numerical;
  }
  catch (const NumericalError &e)
  {
    err << "numerical failure: " << e.what() << '\n';
    return exit_numerical;
  }
  catch (const fs::filesystem_error &e)
  {
    err << "error: " << e.what() << '\n';
    return exit_validation;
  }
  catch (const nlohmann::json::exception &e)
  {
    err << "error: " << e.what() << '\n';
    return exit_validation;
  }
}

} // namespace gkdv::cli
