// SPDX-License-Identifier: Apache-2.0

#ifndef GKDV_ANALYSIS_HPP
#define GKDV_ANALYSIS_HPP

#include <optional>
#include <vector>

#include <json.hpp>

#include "gkdv/evolution.hpp"

namespace gkdv
{

struct Peak
{
  double position; // in [x_left, x_right)
  double height;   // |u| at the fitted maximum
  int sign;        // sign of u at the peak
};

// Local maxima of |u| above threshold, located to sub-grid accuracy by a
// parabola through the three points around each discrete maximum.
std::vector<Peak> find_peaks(const PeriodicField &field, double threshold);

struct TrackPoint
{
  double t;
  double position; // unwrapped
  double height;
};

struct PeakTrack
{
  int id = 0;
  int sign = 1;
  double initial_height = 0.0;
  std::vector<TrackPoint> points;
};

struct TrackingOptions
{
  double threshold = 0.0;
  // Bound on wave speeds, used for the association gate before a track has
  // its own speed estimate.
  double max_speed = 0.0;
  // A peak continues a track only if its height is within this fraction of
  // the track's initial height; merged peaks during a collision fail this test
  // and suspend the track.
  double height_tolerance = 0.2;
};

// Follow every peak of the first snapshot through the run. A peak continues a
// track when its unwrapped position is within speed * dt_snap + 2h of the
// predicted position (widened while the track is suspended) and its height
// and sign match. Ambiguous matches suspend the track for that snapshot.
std::vector<PeakTrack> track_peaks(const PeriodicGrid &grid, const std::vector<Snapshot> &snapshots,
                                   const TrackingOptions &options);

struct SpeedEstimate
{
  double speed;
  double fit_residual; // max |position - fit|
  int samples;
};

// Least-squares slope of unwrapped position against time over [t_begin, t_end].
// Throws ValidationError with fewer than 3 samples in the window.
SpeedEstimate estimate_speed(const PeakTrack &track, double t_begin, double t_end);

struct RippleReport
{
  double time = 0.0;
  double ripple_amplitude = 0.0;
  double relative_ripple = 0.0;
  double window_half_width = 0.0;
};

// max |u_i| over points farther than window_half_width (periodic distance) from
// every peak, and that value divided by reference_amplitude. Throws
// ValidationError when the windows cover the whole domain.
RippleReport ripple_amplitude(const PeriodicField &field, const std::vector<Peak> &peaks,
                              double window_half_width, double reference_amplitude);

// 1.5 times the largest distance from a peak to where |u| first falls below
// 1% of that peak's height, searched outward on both sides.
double default_window_half_width(const PeriodicField &field, const std::vector<Peak> &peaks);

// Run data needed for post-processing, as produced in memory or read back from
// a run directory.
struct RunData
{
  ModelSpec model;
  PeriodicGrid grid;
  double dt = 0.0;
  std::vector<Snapshot> snapshots;
  std::vector<DiagnosticsRecord> diagnostics;
  // Amplitudes (with sign) and speeds of the embedded waves, if known.
  std::vector<double> initial_amplitudes;
  std::vector<double> initial_speeds;
  std::vector<double> initial_centers;
};

enum class RefinementQuantity
{
  RippleAmplitude,
  TrailingOscillation
};

struct AnalysisOptions
{
  // <= 0 selects 10% of the smallest embedded amplitude.
  double threshold = 0.0;
  // <= 0 selects default_window_half_width on the measured snapshot.
  double window_half_width = 0.0;
};

struct RunAnalysis
{
  std::vector<PeakTrack> tracks;
  std::vector<std::optional<SpeedEstimate>> speeds;
  std::vector<RippleReport> ripples; // initial and final snapshot
  double threshold = 0.0;
  double reference_amplitude = 0.0;
  // Largest |final / initial - 1| between the peaks of the first and last
  // snapshots, paired in order of signed height. Empty if the peak counts differ.
  std::optional<double> max_height_change;
};

RunAnalysis analyze_run(const RunData &run, const AnalysisOptions &options = {});

// Ripple (or trailing-oscillation) amplitude of the final snapshot.
double measure_quantity(const RunData &run, RefinementQuantity quantity,
                        const AnalysisOptions &options = {});

// quantity(fine) / quantity(coarse) at the common final time. The runs must
// share model, domain, initial waves and snapshot times, with h_fine <= h_coarse.
double refinement_compare(const RunData &coarse, const RunData &fine, RefinementQuantity quantity,
                          const AnalysisOptions &options = {});

nlohmann::json analysis_to_json(const RunAnalysis &analysis);

} // namespace gkdv

#endif // GKDV_ANALYSIS_HPP
