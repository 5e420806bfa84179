// SPDX-License-Identifier: Apache-2.0

#ifndef GKDV_EVOLUTION_HPP
#define GKDV_EVOLUTION_HPP

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "gkdv/eigen_solver.hpp"
#include "gkdv/model.hpp"
#include "gkdv/numerics.hpp"

namespace gkdv
{

// Uniform periodic grid x_i = x_left + i h, i = 0..M-1, h = (x_right - x_left) / M.
struct PeriodicGrid
{
  double x_left = 0.0;
  double x_right = 1.0;
  int points = 8;

  PeriodicGrid() = default;
  PeriodicGrid(double left, double right, int m);
  // M = round((right - left) / h).
  static PeriodicGrid from_spacing(double left, double right, double h);

  double length() const noexcept { return x_right - x_left; }
  double h() const noexcept { return length() / points; }
  double x(int i) const noexcept { return x_left + i * h(); }
  Eigen::VectorXd coordinates() const;
  // Signed distance x - c folded into [-L/2, L/2).
  double periodic_offset(double x, double c) const noexcept;

  friend bool operator==(const PeriodicGrid &, const PeriodicGrid &) = default;
};

struct PeriodicField
{
  PeriodicGrid grid;
  Eigen::VectorXd u;
  double t = 0.0;
};

// Periodic centered first difference (v_{i+1} - v_{i-1}) / (2h).
template <typename Derived>
auto apply_d1(const Eigen::MatrixBase<Derived> &v, typename Derived::Scalar h)
{
  using Scalar = typename Derived::Scalar;
  const Eigen::Index m = v.size();
  VectorX<Scalar> out(m);
  const Scalar c = Scalar(1) / (Scalar(2) * h);
  for (Eigen::Index i = 0; i < m; ++i)
    out(i) = c * (v((i + 1) % m) - v((i + m - 1) % m));
  return out;
}

// Periodic centered third difference (v_{i+2} - 2 v_{i+1} + 2 v_{i-1} - v_{i-2}) / (2h^3),
// the composition of apply_d1 with the three-point second difference.
template <typename Derived>
auto apply_d3(const Eigen::MatrixBase<Derived> &v, typename Derived::Scalar h)
{
  using Scalar = typename Derived::Scalar;
  const Eigen::Index m = v.size();
  VectorX<Scalar> out(m);
  const Scalar c = Scalar(1) / (Scalar(2) * h * h * h);
  for (Eigen::Index i = 0; i < m; ++i)
    out(i) = c * (v((i + 2) % m) - Scalar(2) * v((i + 1) % m) + Scalar(2) * v((i + m - 1) % m)
                  - v((i + m - 2) % m));
  return out;
}

// Semi-discrete right-hand side -(D1 g(u) + D3 w(u)).
Eigen::VectorXd spatial_operator(const ModelSpec &model, const Eigen::VectorXd &u, double h);

struct EvolveConfig
{
  double dt = 0.005;
  double t_end = 0.0;
  int snapshot_stride = 100;
  double newton_tol = 1e-12;
  int newton_max = 25;
  // One Newton iteration from the previous level instead of a full solve.
  bool linearized = false;
};

struct EmbeddedWave
{
  const SolitonProfile *profile;
  double center;
  int sign = 1;
};

// Two waves overlap when both exceed this magnitude at one grid point.
inline constexpr double embed_overlap_threshold = 1e-8;

// Superpose even extensions of the profiles on the periodic grid. Throws
// OverlapError when two waves are simultaneously above the threshold.
PeriodicField embed(const std::vector<EmbeddedWave> &waves, const PeriodicGrid &grid);

// One Crank-Nicolson step
//   (v - u) / dt + [D1 g(v) + D3 w(v)] / 2 + [D1 g(u) + D3 w(u)] / 2 = 0
// solved by damped Newton with the cyclic pentadiagonal Jacobian. dt may be
// negative (backward step). Throws NoConvergenceError or BlowupError; the
// input field is never modified.
PeriodicField step(const PeriodicField &field, const ModelSpec &model, double dt,
                   const EvolveConfig &config);

struct Invariants
{
  double mass;
  double momentum;
};

// mass = h sum u, momentum = h sum u^2.
Invariants invariants(const PeriodicField &field);

struct Snapshot
{
  double t;
  Eigen::VectorXd u;
};

struct DiagnosticsRecord
{
  double t;
  double mass;
  double momentum;
};

struct RunResult
{
  PeriodicGrid grid;
  std::vector<Snapshot> snapshots;
  std::vector<DiagnosticsRecord> diagnostics;
};

// Called for every recorded snapshot, in time order.
using SnapshotObserver = std::function<void(const Snapshot &, const DiagnosticsRecord &)>;

// Steps to t_end with a time step of t_end / ceil(t_end / dt), recording the
// initial state, every snapshot_stride steps and the final state. Step errors
// are rethrown as StepFailure carrying the failing time.
RunResult run(const PeriodicField &initial, const ModelSpec &model, const EvolveConfig &config,
              const SnapshotObserver &observer = {}, bool keep_snapshots = true);

// h/2 * min(1, 1 / max_speed), capped.
double default_time_step(double h, double max_speed, double cap);

} // namespace gkdv

#endif // GKDV_EVOLUTION_HPP
