// SPDX-License-Identifier: Apache-2.0

#include "gkdv/eigen_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gkdv/errors.hpp"
#include "gkdv/numerics.hpp"

namespace gkdv
{

std::string to_string(BoundaryMode mode)
{
  return mode == BoundaryMode::Dirichlet ? "dirichlet" : "robin";
}

BoundaryMode boundary_mode_from_string(const std::string &name)
{
  if (name == "dirichlet")
    return BoundaryMode::Dirichlet;
  if (name == "robin")
    return BoundaryMode::Robin;
  throw ValidationError("unknown boundary mode '" + name + "' (expected dirichlet or robin)");
}

DiscreteEigenProblem::DiscreteEigenProblem(const ModelSpec &model, double amplitude, double b,
                                           int intervals, BoundaryMode mode)
  : model_(model), amplitude_(amplitude), b_(b), intervals_(intervals), mode_(mode)
{
  model_.validate();
  if (!(amplitude > 0.0) || !std::isfinite(amplitude))
    throw ValidationError("amplitude must be positive");
  if (!(b > 0.0) || !std::isfinite(b))
    throw ValidationError("truncation point b must be positive");
  if (intervals < 8)
    throw ValidationError("eigenproblem needs at least 8 grid intervals");
  if (mode == BoundaryMode::Dirichlet && model.beta != 0.0)
    throw ValidationError("dirichlet mode requires beta = 0 (compact support)");
  if (mode == BoundaryMode::Robin && !(model.beta > 0.0))
    throw ValidationError("robin mode requires beta > 0 (linear dispersion in the tail)");
  if (mode == BoundaryMode::Dirichlet && model.m == model.n && model.n >= 2 && model.is_pure_kmn()
      && !(b > compacton_half_width(model.n)))
    throw ValidationError("truncation point b must exceed the compacton half-width n pi / (n - 1)");
}

DiscreteEigenProblem DiscreteEigenProblem::from_spacing(const ModelSpec &model, double amplitude,
                                                        double h, double b, BoundaryMode mode)
{
  if (!(h > 0.0) || !std::isfinite(h))
    throw ValidationError("grid spacing h must be positive");
  const double ratio = b / h;
  if (!(ratio < 1e8))
    throw ValidationError("b / h too large");
  return DiscreteEigenProblem(model, amplitude, b, static_cast<int>(std::lround(ratio)), mode);
}

Eigen::VectorXd DiscreteEigenProblem::full_profile(const Eigen::VectorXd &unknowns) const
{
  if (unknowns.size() != profile_unknowns())
    throw ValidationError("profile vector has the wrong length for this problem");
  Eigen::VectorXd full = Eigen::VectorXd::Zero(intervals_ + 1);
  full(0) = amplitude_;
  full.segment(1, unknowns.size()) = unknowns;
  return full;
}

namespace
{

void check_lambda(const DiscreteEigenProblem &problem, double lambda)
{
  if (!std::isfinite(lambda))
    throw NumericalError("eigenvalue iterate is not finite");
  if (problem.mode() == BoundaryMode::Robin && !(lambda > 0.0))
    throw EigenvalueSignError("robin closure requires lambda > 0 (got " + std::to_string(lambda)
                              + ")");
}

// Ghost value f_{N+1} from the central-difference Robin closure
// (f_{N+1} - f_{N-1}) / (2h) = -sqrt(lambda / beta) f_N.
double robin_ghost(const DiscreteEigenProblem &problem, const Eigen::VectorXd &full, double lambda)
{
  const int n = problem.intervals();
  return full(n - 1) - 2.0 * problem.h() * std::sqrt(lambda / problem.model().beta) * full(n);
}

} // namespace

Eigen::VectorXd assemble_residual(const DiscreteEigenProblem &problem, const Eigen::VectorXd &f,
                                  double lambda)
{
  check_lambda(problem, lambda);
  const ModelSpec &model = problem.model();
  const Eigen::VectorXd full = problem.full_profile(f);
  const int n = problem.intervals();
  const double inv_h2 = 1.0 / (problem.h() * problem.h());

  // w at i = -1..N+1, offset by one.
  Eigen::VectorXd w(n + 3);
  for (int i = 0; i <= n; ++i)
    w(i + 1) = flux_values(model, full(i)).w;
  w(0) = w(2);
  w(n + 2) = problem.mode() == BoundaryMode::Robin
                 ? flux_values(model, robin_ghost(problem, full, lambda)).w
                 : 0.0;

  Eigen::VectorXd residual(problem.system_size());
  for (int i = 0; i < n; ++i)
    residual(i) = -lambda * full(i) + flux_values(model, full(i)).g
                  + (w(i + 2) - 2.0 * w(i + 1) + w(i)) * inv_h2;
  if (problem.mode() == BoundaryMode::Dirichlet)
    return residual;
  // Robin: the stencil at i = N with the ghost value from the closure.
  residual(n) = -lambda * full(n) + flux_values(model, full(n)).g
                + (w(n + 2) - 2.0 * w(n + 1) + w(n)) * inv_h2;
  return residual;
}

Eigen::MatrixXd assemble_jacobian(const DiscreteEigenProblem &problem, const Eigen::VectorXd &f,
                                  double lambda)
{
  check_lambda(problem, lambda);
  const ModelSpec &model = problem.model();
  const Eigen::VectorXd full = problem.full_profile(f);
  const int n = problem.intervals();
  const int size = problem.system_size();
  const int lambda_col = size - 1;
  const double inv_h2 = 1.0 / (problem.h() * problem.h());

  // Equation i (0-based row) couples f_{i-1}, f_i, f_{i+1}; unknown f_j sits in column j - 1.
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(size, size);
  auto add = [&](int row, int grid_index, double value) {
    if (grid_index >= 1 && grid_index <= problem.profile_unknowns())
      jac(row, grid_index - 1) += value;
  };
  const int pde_rows = problem.mode() == BoundaryMode::Robin ? n + 1 : n;
  for (int i = 0; i < pde_rows; ++i)
  {
    const auto dflux = flux_derivatives(model, full(i));
    add(i, i, -lambda + dflux.g - 2.0 * dflux.w * inv_h2);
    jac(i, lambda_col) = -full(i);
    if (i == 0)
    {
      // Ghost f_{-1} = f_1.
      add(i, 1, 2.0 * flux_derivatives(model, full(1)).w * inv_h2);
      continue;
    }
    add(i, i - 1, flux_derivatives(model, full(i - 1)).w * inv_h2);
    if (i < n)
    {
      add(i, i + 1, flux_derivatives(model, full(i + 1)).w * inv_h2);
      continue;
    }
    // Robin row: ghost = f_{N-1} - 2h sqrt(lambda / beta) f_N.
    const double h = problem.h();
    const double root = std::sqrt(lambda / model.beta);
    const double ghost_w = flux_derivatives(model, robin_ghost(problem, full, lambda)).w * inv_h2;
    add(i, n - 1, ghost_w);
    add(i, n, -2.0 * h * root * ghost_w);
    jac(i, lambda_col) += ghost_w * (-h * full(n) / std::sqrt(lambda * model.beta));
  }
  return jac;
}

InitialGuess initial_guess(const DiscreteEigenProblem &problem)
{
  const int unknowns = problem.profile_unknowns();
  Eigen::VectorXd f(unknowns);
  for (int j = 0; j < unknowns; ++j)
  {
    const double xi = (j + 1) * problem.h();
    const double s = 1.0 / std::cosh(xi / 2.0);
    const double v = problem.amplitude() * s * s;
    f(j) = v < 1e-14 ? 0.0 : v;
  }
  const ModelSpec &model = problem.model();
  return {f, model.alpha * int_pow(problem.amplitude(), model.m - 1) / 2.0};
}

namespace
{

bool filter_by_default(const ModelSpec &model)
{
  return model.beta == 0.0 && model.n > 1;
}

void clamp_negative(Eigen::VectorXd &f)
{
  f = f.cwiseMax(0.0);
}

// Filters the profile part on the full grid, keeping f(0) = A and the far end fixed.
Eigen::VectorXd filtered(const DiscreteEigenProblem &problem, const Eigen::VectorXd &f)
{
  const Eigen::VectorXd full = low_pass_filter(problem.full_profile(f), true);
  return full.segment(1, problem.profile_unknowns());
}

SolitonProfile make_profile(const DiscreteEigenProblem &problem, const Eigen::VectorXd &f,
                           double lambda, double residual_norm, int iterations)
{
  SolitonProfile out;
  out.model = problem.model();
  out.xi = Eigen::VectorXd::LinSpaced(problem.intervals() + 1, 0.0, problem.b());
  out.values = problem.full_profile(f);
  out.lambda = lambda;
  out.amplitude = problem.amplitude();
  out.mode = problem.mode();
  out.residual_norm = residual_norm;
  out.iterations = iterations;
  return out;
}

} // namespace

SolitonProfile newton_solve(const DiscreteEigenProblem &problem, const NewtonConfig &config)
{
  return newton_solve(problem, initial_guess(problem), config);
}

SolitonProfile newton_solve(const DiscreteEigenProblem &problem, const InitialGuess &start,
                            const NewtonConfig &config)
{
  if (!(config.tol > 0.0) || config.max_iter < 1)
    throw ValidationError("newton_solve: need tol > 0 and max_iter >= 1");
  if (start.f.size() != problem.profile_unknowns())
    throw ValidationError("newton_solve: initial guess has the wrong length");

  const bool dirichlet = problem.mode() == BoundaryMode::Dirichlet;
  FilterPolicy policy = config.filter_policy;
  if (policy == FilterPolicy::Automatic)
    policy = filter_by_default(problem.model()) ? FilterPolicy::Always : FilterPolicy::OnIncrease;

  Eigen::VectorXd f = start.f;
  double lambda = start.lambda;
  if (dirichlet)
    clamp_negative(f);
  Eigen::VectorXd residual = assemble_residual(problem, f, lambda);
  double norm = residual.lpNorm<Eigen::Infinity>();
  int filtered_steps = 0;

  for (int iter = 1; iter <= config.max_iter; ++iter)
  {
    if (norm <= config.tol)
      break;
    const Eigen::VectorXd delta =
        solve_dense(assemble_jacobian(problem, f, lambda), Eigen::VectorXd(-residual));

    double step = 1.0;
    Eigen::VectorXd trial_f;
    double trial_lambda = lambda;
    Eigen::VectorXd trial_residual;
    double trial_norm = std::numeric_limits<double>::infinity();
    bool decreased = false;
    for (; step >= config.min_damping; step /= 2.0)
    {
      trial_f = f + step * delta.head(f.size());
      trial_lambda = lambda + step * delta(f.size());
      if (!dirichlet && !(trial_lambda > 0.0))
        continue;
      trial_residual = assemble_residual(problem, trial_f, trial_lambda);
      trial_norm = trial_residual.lpNorm<Eigen::Infinity>();
      if (trial_norm < norm)
      {
        decreased = true;
        break;
      }
    }
    if (!std::isfinite(trial_norm))
    {
      // Every damped step left the admissible region; take the smallest one anyway
      // so the sign violation surfaces from assembly.
      trial_f = f + config.min_damping * delta.head(f.size());
      trial_lambda = lambda + config.min_damping * delta(f.size());
      trial_residual = assemble_residual(problem, trial_f, trial_lambda);
      trial_norm = trial_residual.lpNorm<Eigen::Infinity>();
    }

    f = std::move(trial_f);
    lambda = trial_lambda;
    bool modified = false;
    const bool filter_now =
        filtered_steps < config.max_filtered_steps && trial_norm > config.filter_cutoff
        && (policy == FilterPolicy::Always || (policy == FilterPolicy::OnIncrease && !decreased));
    if (filter_now && f.size() >= 2)
    {
      f = filtered(problem, f);
      ++filtered_steps;
      modified = true;
    }
    if (dirichlet && f.minCoeff() < 0.0)
    {
      clamp_negative(f);
      modified = true;
    }
    if (f.cwiseAbs().maxCoeff() > config.blowup_factor * problem.amplitude())
      throw BlowupError("eigen-solve blew up: max |f| exceeds " + std::to_string(config.blowup_factor)
                        + " * A at iteration " + std::to_string(iter));
    if (modified)
    {
      residual = assemble_residual(problem, f, lambda);
      norm = residual.lpNorm<Eigen::Infinity>();
    }
    else
    {
      residual = std::move(trial_residual);
      norm = trial_norm;
    }

    if (norm <= config.tol)
      return make_profile(problem, f, lambda, norm, iter);
    if (!std::isfinite(norm))
      throw NoConvergenceError("eigen-solve produced a non-finite residual", iter, norm);
  }
  if (norm <= config.tol)
    return make_profile(problem, f, lambda, norm, 0);
  throw NoConvergenceError("eigen-solve did not converge in " + std::to_string(config.max_iter)
                               + " iterations (last residual " + std::to_string(norm) + ")",
                           config.max_iter, norm);
}

double SolitonProfile::value_at(double x) const
{
  const double r = std::abs(x);
  const Eigen::Index last = xi.size() - 1;
  if (r > xi(last))
    return 0.0;
  const double h = (xi(last) - xi(0)) / last;
  const Eigen::Index i = std::min<Eigen::Index>(static_cast<Eigen::Index>(r / h), last - 1);
  const double t = (r - xi(i)) / h;
  return (1.0 - t) * values(i) + t * values(i + 1);
}

SolitonProfile scale_profile(const SolitonProfile &profile, double new_amplitude)
{
  if (profile.model.beta != 0.0)
    throw ValidationError("amplitude scaling applies only to beta = 0 models");
  if (!(new_amplitude > 0.0) || !std::isfinite(new_amplitude))
    throw ValidationError("new amplitude must be positive");
  const ModelSpec &model = profile.model;
  const double s = new_amplitude / profile.amplitude;
  if (s == 1.0)
    return profile;
  const double stretch = std::pow(s, 0.5 * (model.m - model.n));
  SolitonProfile out = profile;
  out.xi = profile.xi / stretch;
  out.values = profile.values * s;
  out.values(0) = new_amplitude;
  out.lambda = profile.lambda * std::pow(s, model.m - 1);
  out.amplitude = new_amplitude;
  out.residual_norm = profile.residual_norm * std::pow(s, model.m);
  return out;
}

ExactComparison verify_against_exact(const SolitonProfile &profile)
{
  if (!profile.model.admits_exact_compacton())
    throw ValidationError("exact comparison needs a pure K(n,n) model with n >= 2");
  const int n = profile.model.n;
  const double lambda_exact = compacton_speed(n, profile.amplitude);
  double err = 0.0;
  for (Eigen::Index i = 0; i < profile.xi.size(); ++i)
    err = std::max(err, std::abs(profile.values(i)
                                 - exact_compacton(profile.model, lambda_exact, profile.xi(i))));
  return {err, std::abs(profile.lambda - lambda_exact), lambda_exact};
}

double default_truncation(const ModelSpec &model, double amplitude, BoundaryMode mode)
{
  if (mode == BoundaryMode::Dirichlet)
    return 8.0;
  const double lambda0 = model.alpha * int_pow(amplitude, model.m - 1) / 2.0;
  if (!(lambda0 > 0.0) || !(model.beta > 0.0))
    throw ValidationError("robin truncation needs a positive initial speed and beta > 0");
  return -std::log(1e-8) / std::sqrt(lambda0 / model.beta);
}

} // namespace gkdv
