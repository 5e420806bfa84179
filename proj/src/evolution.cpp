// SPDX-License-Identifier: Apache-2.0

#include "gkdv/evolution.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "gkdv/errors.hpp"

namespace gkdv
{

PeriodicGrid::PeriodicGrid(double left, double right, int m) : x_left(left), x_right(right), points(m)
{
  if (!(right > left) || !std::isfinite(left) || !std::isfinite(right))
    throw ValidationError("periodic domain needs x_left < x_right");
  if (m < 8)
    throw ValidationError("periodic grid needs at least 8 points");
}

PeriodicGrid PeriodicGrid::from_spacing(double left, double right, double h)
{
  if (!(h > 0.0))
    throw ValidationError("grid spacing must be positive");
  const double ratio = (right - left) / h;
  if (!(ratio < 1e9))
    throw ValidationError("domain too large for the grid spacing");
  return PeriodicGrid(left, right, static_cast<int>(std::lround(ratio)));
}

Eigen::VectorXd PeriodicGrid::coordinates() const
{
  Eigen::VectorXd xs(points);
  for (int i = 0; i < points; ++i)
    xs(i) = x(i);
  return xs;
}

double PeriodicGrid::periodic_offset(double x, double c) const noexcept
{
  const double len = length();
  double d = std::fmod(x - c, len);
  if (d < -0.5 * len)
    d += len;
  else if (d >= 0.5 * len)
    d -= len;
  return d;
}

namespace
{

struct NodalFluxes
{
  Eigen::VectorXd g, w, dg, dw;
};

NodalFluxes nodal_fluxes(const ModelSpec &model, const Eigen::VectorXd &u, bool derivatives)
{
  const Eigen::Index m = u.size();
  NodalFluxes out{Eigen::VectorXd(m), Eigen::VectorXd(m), {}, {}};
  if (derivatives)
  {
    out.dg.resize(m);
    out.dw.resize(m);
  }
  for (Eigen::Index i = 0; i < m; ++i)
  {
    const auto f = flux_values(model, u(i));
    out.g(i) = f.g;
    out.w(i) = f.w;
    if (derivatives)
    {
      const auto d = flux_derivatives(model, u(i));
      out.dg(i) = d.g;
      out.dw(i) = d.w;
    }
  }
  return out;
}

// dt/2 * (D1 g + D3 w)
Eigen::VectorXd half_step_operator(const NodalFluxes &flux, double h, double dt)
{
  return 0.5 * dt * (apply_d1(flux.g, h) + apply_d3(flux.w, h));
}

} // namespace

Eigen::VectorXd spatial_operator(const ModelSpec &model, const Eigen::VectorXd &u, double h)
{
  const NodalFluxes flux = nodal_fluxes(model, u, false);
  return -(apply_d1(flux.g, h) + apply_d3(flux.w, h));
}

PeriodicField embed(const std::vector<EmbeddedWave> &waves, const PeriodicGrid &grid)
{
  PeriodicField field{grid, Eigen::VectorXd::Zero(grid.points), 0.0};
  if (waves.empty())
    return field;
  Eigen::VectorXi above = Eigen::VectorXi::Zero(grid.points);
  for (const EmbeddedWave &wave : waves)
  {
    if (wave.profile == nullptr)
      throw ValidationError("embed: null profile");
    if (wave.sign != 1 && wave.sign != -1)
      throw ValidationError("embed: sign must be +1 or -1");
    if (wave.sign < 0 && !wave.profile->model.odd_symmetric())
      throw ValidationError("embed: negated waves are solutions only for odd-symmetric models");
    if (!(2.0 * wave.profile->b() < grid.length()))
      throw ValidationError("embed: profile extent 2b does not fit in the periodic domain");
    for (int i = 0; i < grid.points; ++i)
    {
      const double v = wave.profile->value_at(grid.periodic_offset(grid.x(i), wave.center));
      if (v == 0.0)
        continue;
      if (std::abs(v) > embed_overlap_threshold && ++above(i) > 1)
        throw OverlapError("embed: waves overlap above 1e-8 at x = " + std::to_string(grid.x(i)));
      field.u(i) += wave.sign * v;
    }
  }
  return field;
}

PeriodicField step(const PeriodicField &field, const ModelSpec &model, double dt,
                   const EvolveConfig &config)
{
  if (!(dt != 0.0) || !std::isfinite(dt))
    throw ValidationError("step: dt must be finite and nonzero");
  if (!(config.newton_tol > 0.0) || config.newton_max < 1)
    throw ValidationError("step: need newton_tol > 0 and newton_max >= 1");
  const PeriodicGrid &grid = field.grid;
  const double h = grid.h();
  const Eigen::Index m = field.u.size();
  if (m != grid.points)
    throw ValidationError("step: field size does not match grid");
  if (!field.u.allFinite())
    throw ValidationError("step: field is not finite");

  const Eigen::VectorXd explicit_part =
      field.u - half_step_operator(nodal_fluxes(model, field.u, false), h, dt);

  const double c1 = 0.5 * dt / (2.0 * h);
  const double c3 = 0.5 * dt / (2.0 * h * h * h);
  Eigen::VectorXd v = field.u;
  NodalFluxes flux = nodal_fluxes(model, v, true);
  Eigen::VectorXd residual = v + half_step_operator(flux, h, dt) - explicit_part;
  double norm = residual.lpNorm<Eigen::Infinity>();

  const int max_iter = config.linearized ? 1 : config.newton_max;
  bool converged = norm <= config.newton_tol;
  int iter = 0;
  while (!converged && iter < max_iter)
  {
    ++iter;
    CyclicBandedMatrix<double> jac(m, 2);
    for (Eigen::Index i = 0; i < m; ++i)
    {
      const auto col = [&](Eigen::Index d) { return jac.wrap(i + d); };
      jac.band(0, i) = 1.0;
      jac.band(-1, i) = -c1 * flux.dg(col(-1)) + 2.0 * c3 * flux.dw(col(-1));
      jac.band(1, i) = c1 * flux.dg(col(1)) - 2.0 * c3 * flux.dw(col(1));
      jac.band(-2, i) = -c3 * flux.dw(col(-2));
      jac.band(2, i) = c3 * flux.dw(col(2));
    }
    const Eigen::VectorXd delta = solve_cyclic_banded(jac, Eigen::VectorXd(-residual));

    double s = 1.0;
    Eigen::VectorXd trial;
    NodalFluxes trial_flux;
    Eigen::VectorXd trial_residual;
    double trial_norm = std::numeric_limits<double>::infinity();
    for (; s >= 1.0 / 256.0; s /= 2.0)
    {
      trial = v + s * delta;
      trial_flux = nodal_fluxes(model, trial, true);
      trial_residual = trial + half_step_operator(trial_flux, h, dt) - explicit_part;
      trial_norm = trial_residual.lpNorm<Eigen::Infinity>();
      if (trial_norm < norm || config.linearized)
        break;
    }
    const bool decreased = trial_norm < norm;
    const double update = s * delta.lpNorm<Eigen::Infinity>();
    v = std::move(trial);
    flux = std::move(trial_flux);
    residual = std::move(trial_residual);
    norm = trial_norm;
    if (!v.allFinite() || v.lpNorm<Eigen::Infinity>() > 1e6)
      throw BlowupError("step: field magnitude exceeded 1e6");

    // The residual of a converged iterate can sit slightly above a very tight
    // tolerance because of round-off in the D3 stencil; accept it once the
    // Newton update no longer changes the iterate.
    const double floor =
        16.0 * std::numeric_limits<double>::epsilon() * (1.0 + v.lpNorm<Eigen::Infinity>());
    converged = config.linearized || norm <= config.newton_tol
                || (update <= floor && norm <= 1e3 * config.newton_tol);
    if (!converged && !decreased)
      throw NoConvergenceError("step: Newton iteration stalled (try a smaller dt)", iter, norm);
  }
  if (!converged)
    throw NoConvergenceError("step: Newton did not converge in " + std::to_string(iter)
                                 + " iterations (residual " + std::to_string(norm)
                                 + "); try a smaller dt",
                             iter, norm);
  return PeriodicField{grid, std::move(v), field.t + dt};
}

Invariants invariants(const PeriodicField &field)
{
  const double h = field.grid.h();
  return {trapezoid_integral(field.u, h, true),
          trapezoid_integral(Eigen::VectorXd(field.u.array().square()), h, true)};
}

RunResult run(const PeriodicField &initial, const ModelSpec &model, const EvolveConfig &config,
              const SnapshotObserver &observer, bool keep_snapshots)
{
  if (!(config.dt > 0.0) || !(config.t_end >= 0.0) || !(config.newton_tol > 0.0)
      || config.snapshot_stride < 1)
    throw ValidationError("run: need dt > 0, t_end >= 0, newton_tol > 0, snapshot_stride >= 1");
  model.validate();

  RunResult result;
  result.grid = initial.grid;
  auto record = [&](const PeriodicField &field) {
    const Invariants inv = invariants(field);
    Snapshot snap{field.t, field.u};
    DiagnosticsRecord diag{field.t, inv.mass, inv.momentum};
    if (observer)
      observer(snap, diag);
    if (keep_snapshots)
      result.snapshots.push_back(std::move(snap));
    result.diagnostics.push_back(diag);
  };

  PeriodicField field = initial;
  record(field);
  if (config.t_end == 0.0)
    return result;
  const long steps = std::max(1L, static_cast<long>(std::ceil(config.t_end / config.dt - 1e-9)));
  const double dt = config.t_end / steps;
  const double t0 = initial.t;
  for (long k = 1; k <= steps; ++k)
  {
    try
    {
      field = step(field, model, dt, config);
    }
    catch (const NumericalError &e)
    {
      throw StepFailure(std::string(e.what()) + " at t = " + std::to_string(field.t), field.t);
    }
    // Avoid drift in the clock from repeated addition.
    field.t = t0 + k * dt;
    if (k % config.snapshot_stride == 0 || k == steps)
      record(field);
  }
  return result;
}

double default_time_step(double h, double max_speed, double cap)
{
  double dt = 0.5 * h * std::min(1.0, 1.0 / std::max(std::abs(max_speed), 1e-300));
  return std::min(dt, cap);
}

} // namespace gkdv
