// SPDX-License-Identifier: Apache-2.0

#include "gkdv/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gkdv/errors.hpp"

namespace gkdv
{

namespace
{

double wrap_into_domain(const PeriodicGrid &grid, double x)
{
  const double len = grid.length();
  double y = std::fmod(x - grid.x_left, len);
  if (y < 0.0)
    y += len;
  return grid.x_left + y;
}

// Image of x (mod L) closest to reference.
double nearest_image(const PeriodicGrid &grid, double x, double reference)
{
  return reference + grid.periodic_offset(x, reference);
}

} // namespace

std::vector<Peak> find_peaks(const PeriodicField &field, double threshold)
{
  if (!(threshold > 0.0))
    throw ValidationError("find_peaks: threshold must be positive");
  const Eigen::VectorXd &u = field.u;
  const int m = static_cast<int>(u.size());
  const double h = field.grid.h();
  std::vector<Peak> peaks;
  for (int i = 0; i < m; ++i)
  {
    const double a = std::abs(u((i + m - 1) % m));
    const double b = std::abs(u(i));
    const double c = std::abs(u((i + 1) % m));
    if (!(b > threshold) || b < a || !(b > c))
      continue;
    const double curvature = a - 2.0 * b + c;
    const double p = curvature != 0.0 ? 0.5 * (a - c) / curvature : 0.0;
    peaks.push_back({wrap_into_domain(field.grid, field.grid.x(i) + p * h),
                     b - 0.25 * (a - c) * p, u(i) > 0.0 ? 1 : -1});
  }
  return peaks;
}

std::vector<PeakTrack> track_peaks(const PeriodicGrid &grid, const std::vector<Snapshot> &snapshots,
                                   const TrackingOptions &options)
{
  std::vector<PeakTrack> tracks;
  if (snapshots.empty())
    return tracks;
  const double h = grid.h();
  std::vector<std::vector<int>> indices; // snapshot index of each track point

  {
    const PeriodicField first{grid, snapshots.front().u, snapshots.front().t};
    int id = 0;
    for (const Peak &p : find_peaks(first, options.threshold))
    {
      tracks.push_back({id++, p.sign, p.height, {{first.t, p.position, p.height}}});
      indices.push_back({0});
    }
  }

  for (std::size_t s = 1; s < snapshots.size(); ++s)
  {
    const PeriodicField field{grid, snapshots[s].u, snapshots[s].t};
    const std::vector<Peak> peaks = find_peaks(field, options.threshold);
    const double dt_snap = snapshots[s].t - snapshots[s - 1].t;

    struct Claim
    {
      int peak = -1;
      double position = 0.0;
      double distance = 0.0;
    };
    std::vector<Claim> claims(tracks.size());
    for (std::size_t k = 0; k < tracks.size(); ++k)
    {
      const PeakTrack &track = tracks[k];
      const TrackPoint &last = track.points.back();
      const std::vector<int> &idx = indices[k];
      const double since = field.t - last.t;
      std::optional<double> speed;
      const std::size_t np = track.points.size();
      if (np >= 2 && idx[np - 1] - idx[np - 2] == 1)
        speed = (last.position - track.points[np - 2].position) / (last.t - track.points[np - 2].t);
      const double predicted = last.position + speed.value_or(0.0) * since;
      const double v_ref = speed ? std::abs(*speed) : options.max_speed;
      const double gate = 2.0 * h + v_ref * dt_snap + 0.5 * v_ref * std::max(0.0, since - dt_snap);
      for (std::size_t j = 0; j < peaks.size(); ++j)
      {
        const Peak &p = peaks[j];
        if (p.sign != track.sign
            || std::abs(p.height - track.initial_height)
                   > options.height_tolerance * track.initial_height)
          continue;
        const double pos = nearest_image(grid, p.position, predicted);
        const double dist = std::abs(pos - predicted);
        if (dist <= gate && (claims[k].peak < 0 || dist < claims[k].distance))
          claims[k] = {static_cast<int>(j), pos, dist};
      }
    }
    for (std::size_t k = 0; k < tracks.size(); ++k)
    {
      if (claims[k].peak < 0)
        continue;
      const bool contested = std::any_of(claims.begin(), claims.end(), [&](const Claim &c) {
        return &c != &claims[k] && c.peak == claims[k].peak;
      });
      if (contested)
        continue;
      tracks[k].points.push_back(
          {field.t, claims[k].position, peaks[static_cast<std::size_t>(claims[k].peak)].height});
      indices[k].push_back(static_cast<int>(s));
    }
  }
  return tracks;
}

SpeedEstimate estimate_speed(const PeakTrack &track, double t_begin, double t_end)
{
  std::vector<const TrackPoint *> pts;
  for (const TrackPoint &p : track.points)
    if (p.t >= t_begin - 1e-12 && p.t <= t_end + 1e-12)
      pts.push_back(&p);
  if (pts.size() < 3)
    throw ValidationError("estimate_speed: need at least 3 samples in the time window");
  const double count = static_cast<double>(pts.size());
  double mt = 0.0, mx = 0.0;
  for (const TrackPoint *p : pts)
  {
    mt += p->t;
    mx += p->position;
  }
  mt /= count;
  mx /= count;
  double stt = 0.0, stx = 0.0;
  for (const TrackPoint *p : pts)
  {
    stt += (p->t - mt) * (p->t - mt);
    stx += (p->t - mt) * (p->position - mx);
  }
  if (!(stt > 0.0))
    throw ValidationError("estimate_speed: samples share a single time");
  const double slope = stx / stt;
  double residual = 0.0;
  for (const TrackPoint *p : pts)
    residual = std::max(residual, std::abs(p->position - (mx + slope * (p->t - mt))));
  return {slope, residual, static_cast<int>(pts.size())};
}

RippleReport ripple_amplitude(const PeriodicField &field, const std::vector<Peak> &peaks,
                              double window_half_width, double reference_amplitude)
{
  if (!(window_half_width > 0.0))
    throw ValidationError("ripple_amplitude: window half-width must be positive");
  if (!(reference_amplitude > 0.0))
    throw ValidationError("ripple_amplitude: reference amplitude must be positive");
  const PeriodicGrid &grid = field.grid;
  bool any = false;
  double ripple = 0.0;
  for (int i = 0; i < grid.points; ++i)
  {
    const double x = grid.x(i);
    const bool covered = std::any_of(peaks.begin(), peaks.end(), [&](const Peak &p) {
      return std::abs(grid.periodic_offset(x, p.position)) <= window_half_width;
    });
    if (covered)
      continue;
    any = true;
    ripple = std::max(ripple, std::abs(field.u(i)));
  }
  if (!any)
    throw ValidationError("ripple_amplitude: peak windows cover the whole domain");
  return {field.t, ripple, ripple / reference_amplitude, window_half_width};
}

double default_window_half_width(const PeriodicField &field, const std::vector<Peak> &peaks)
{
  const PeriodicGrid &grid = field.grid;
  const int m = grid.points;
  const double h = grid.h();
  double widest = 0.0;
  for (const Peak &p : peaks)
  {
    const int center = static_cast<int>(std::lround((p.position - grid.x_left) / h)) % m;
    for (int dir : {-1, 1})
    {
      int steps = 1;
      for (; steps < m / 2; ++steps)
      {
        const double here = std::abs(field.u(((center + dir * steps) % m + m) % m));
        const double next = std::abs(field.u(((center + dir * (steps + 1)) % m + m) % m));
        if (here < 0.01 * p.height)
          break;
        // End of the monotone shoulder.
        if (here < 0.25 * p.height && next > here)
          break;
      }
      const double reach = std::abs(grid.periodic_offset(grid.x(((center + dir * steps) % m + m) % m),
                                                         p.position));
      widest = std::max(widest, reach);
    }
  }
  return widest > 0.0 ? 1.5 * widest : h;
}

namespace
{

double smallest_amplitude(const RunData &run)
{
  double smallest = std::numeric_limits<double>::infinity();
  for (double a : run.initial_amplitudes)
    smallest = std::min(smallest, std::abs(a));
  if (std::isfinite(smallest) && smallest > 0.0)
    return smallest;
  if (run.snapshots.empty())
    throw ValidationError("run has no snapshots");
  // Fall back to the peaks of the initial field.
  const PeriodicField first{run.grid, run.snapshots.front().u, run.snapshots.front().t};
  const double top = first.u.cwiseAbs().maxCoeff();
  if (!(top > 0.0))
    throw ValidationError("initial field is identically zero");
  for (const Peak &p : find_peaks(first, 0.05 * top))
    smallest = std::min(smallest, p.height);
  return smallest;
}

double speed_bound(const RunData &run)
{
  double v = 0.0;
  for (double s : run.initial_speeds)
    v = std::max(v, std::abs(s));
  if (v > 0.0)
    return 1.5 * v;
  // Unknown speeds: allow a generous bound of 10 length units per time unit.
  return 10.0;
}

RippleReport snapshot_ripple(const RunData &run, const Snapshot &snap, double threshold,
                             double reference, const AnalysisOptions &options)
{
  const PeriodicField field{run.grid, snap.u, snap.t};
  const std::vector<Peak> peaks = find_peaks(field, threshold);
  const double window = options.window_half_width > 0.0 ? options.window_half_width
                                                       : default_window_half_width(field, peaks);
  return ripple_amplitude(field, peaks, window, reference);
}

} // namespace

RunAnalysis analyze_run(const RunData &run, const AnalysisOptions &options)
{
  if (run.snapshots.empty())
    throw ValidationError("analyze_run: run has no snapshots");
  RunAnalysis out;
  out.reference_amplitude = smallest_amplitude(run);
  out.threshold = options.threshold > 0.0 ? options.threshold : 0.1 * out.reference_amplitude;

  TrackingOptions tracking;
  tracking.threshold = out.threshold;
  tracking.max_speed = speed_bound(run);
  out.tracks = track_peaks(run.grid, run.snapshots, tracking);

  const double t_first = run.snapshots.front().t;
  const double t_last = run.snapshots.back().t;
  const double dt_snap =
      run.snapshots.size() > 1 ? run.snapshots[1].t - run.snapshots[0].t : 0.0;
  // Speeds come from the initial stretch of each track during which it is
  // seen in every snapshot and no other peak is within two window widths.
  const PeriodicField first_field{run.grid, run.snapshots.front().u, t_first};
  const double isolation =
      2.0 * default_window_half_width(first_field, find_peaks(first_field, out.threshold));
  std::vector<std::vector<Peak>> peaks_at(run.snapshots.size());
  for (std::size_t s = 0; s < run.snapshots.size(); ++s)
    peaks_at[s] = find_peaks(PeriodicField{run.grid, run.snapshots[s].u, run.snapshots[s].t},
                             out.threshold);
  for (const PeakTrack &track : out.tracks)
  {
    std::size_t end = 0;
    for (; end < track.points.size(); ++end)
    {
      const TrackPoint &p = track.points[end];
      const std::size_t s = static_cast<std::size_t>(
          std::lround((p.t - t_first) / std::max(dt_snap, 1e-300)));
      if (s >= run.snapshots.size() || std::abs(run.snapshots[s].t - p.t) > 1e-9)
        break;
      if (end > 0 && p.t - track.points[end - 1].t > 1.5 * dt_snap + 1e-12)
        break;
      const bool crowded = std::any_of(peaks_at[s].begin(), peaks_at[s].end(), [&](const Peak &q) {
        const double d = std::abs(run.grid.periodic_offset(q.position, p.position));
        return d > 2.0 * run.grid.h() && d < isolation;
      });
      if (crowded)
        break;
    }
    try
    {
      if (end < 3)
        throw ValidationError("too few isolated samples");
      out.speeds.push_back(estimate_speed(track, track.points.front().t, track.points[end - 1].t));
    }
    catch (const ValidationError &)
    {
      out.speeds.push_back(std::nullopt);
    }
  }

  // Collisions can exchange identities between peaks, so elasticity compares
  // the final peaks with the initial ones after sorting by signed height.
  if (run.snapshots.size() > 1)
  {
    auto signed_heights = [&](const Snapshot &snap) {
      std::vector<double> hs;
      for (const Peak &p : find_peaks(PeriodicField{run.grid, snap.u, snap.t}, out.threshold))
        hs.push_back(p.sign * p.height);
      std::sort(hs.begin(), hs.end());
      return hs;
    };
    const std::vector<double> before = signed_heights(run.snapshots.front());
    const std::vector<double> after = signed_heights(run.snapshots.back());
    if (!before.empty() && before.size() == after.size())
    {
      double change = 0.0;
      for (std::size_t k = 0; k < before.size(); ++k)
        change = std::max(change, std::abs(after[k] / before[k] - 1.0));
      out.max_height_change = change;
    }
  }

  out.ripples.push_back(
      snapshot_ripple(run, run.snapshots.front(), out.threshold, out.reference_amplitude, options));
  if (run.snapshots.size() > 1 || t_last != t_first)
    out.ripples.push_back(
        snapshot_ripple(run, run.snapshots.back(), out.threshold, out.reference_amplitude, options));
  return out;
}

double measure_quantity(const RunData &run, RefinementQuantity quantity,
                        const AnalysisOptions &options)
{
  // Both quantities are the largest |u| outside the wave windows of the final
  // snapshot: after a collision the radiated oscillations are what remains there.
  (void)quantity;
  if (run.snapshots.empty())
    throw ValidationError("measure_quantity: run has no snapshots");
  const double reference = smallest_amplitude(run);
  const double threshold = options.threshold > 0.0 ? options.threshold : 0.1 * reference;
  return snapshot_ripple(run, run.snapshots.back(), threshold, reference, options).ripple_amplitude;
}

double refinement_compare(const RunData &coarse, const RunData &fine, RefinementQuantity quantity,
                          const AnalysisOptions &options)
{
  auto mismatch = [](const std::string &what) {
    throw ValidationError("refinement_compare: runs differ in " + what);
  };
  if (!(coarse.model == fine.model))
    mismatch("model");
  if (coarse.grid.x_left != fine.grid.x_left || coarse.grid.x_right != fine.grid.x_right)
    mismatch("domain");
  if (coarse.initial_amplitudes != fine.initial_amplitudes
      || coarse.initial_centers != fine.initial_centers)
    mismatch("initial condition");
  if (coarse.snapshots.empty() || fine.snapshots.empty())
    mismatch("snapshot count (one run is empty)");
  if (std::abs(coarse.snapshots.back().t - fine.snapshots.back().t) > 1e-9
      || std::abs(coarse.snapshots.front().t - fine.snapshots.front().t) > 1e-9)
    mismatch("snapshot times");
  if (fine.grid.h() > coarse.grid.h() * (1.0 + 1e-12))
    mismatch("resolution (fine grid is coarser)");
  const double qc = measure_quantity(coarse, quantity, options);
  const double qf = measure_quantity(fine, quantity, options);
  if (qc == qf)
    return 1.0;
  if (qc == 0.0)
    return std::numeric_limits<double>::infinity();
  return qf / qc;
}

nlohmann::json analysis_to_json(const RunAnalysis &analysis)
{
  using nlohmann::json;
  json tracks = json::array();
  json speeds = json::array();
  for (std::size_t k = 0; k < analysis.tracks.size(); ++k)
  {
    const PeakTrack &track = analysis.tracks[k];
    json points = json::array();
    for (const TrackPoint &p : track.points)
      points.push_back({{"t", p.t}, {"position", p.position}, {"height", p.height}});
    tracks.push_back({{"id", track.id},
                      {"sign", track.sign},
                      {"initial_height", track.initial_height},
                      {"points", points}});
    const auto &speed = analysis.speeds[k];
    if (speed)
      speeds.push_back({{"track", track.id},
                        {"speed", speed->speed},
                        {"fit_residual", speed->fit_residual},
                        {"samples", speed->samples}});
  }
  json ripples = json::array();
  for (const RippleReport &r : analysis.ripples)
    ripples.push_back({{"t", r.time},
                       {"ripple_amplitude", r.ripple_amplitude},
                       {"relative_ripple", r.relative_ripple},
                       {"window_half_width", r.window_half_width}});
  json out{{"threshold", analysis.threshold},
           {"reference_amplitude", analysis.reference_amplitude},
           {"tracks", tracks},
           {"speeds", speeds},
           {"ripples", ripples},
           {"relative_ripple", analysis.ripples.back().relative_ripple}};
  if (analysis.max_height_change)
    out["max_height_change"] = *analysis.max_height_change;
  return out;
}

} // namespace gkdv
