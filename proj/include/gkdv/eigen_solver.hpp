// SPDX-License-Identifier: Apache-2.0

#ifndef GKDV_EIGEN_SOLVER_HPP
#define GKDV_EIGEN_SOLVER_HPP

#include <string>

#include <Eigen/Dense>

#include "gkdv/model.hpp"

namespace gkdv
{

//
// Travelling-wave profiles u(x, t) = f(x - lambda t) of the power-law family
// satisfy, after one integration with zero integration constant,
//
//   -lambda f + alpha f^m + (beta f + gamma f^n)'' = 0,   f(0) = A, f'(0) = 0,
//
// on the half-line. The problem is truncated to [0, b] with either
//   Dirichlet  f(b) = 0                         (compactons, beta = 0), or
//   Robin      f'(b) = -sqrt(lambda / beta) f(b) (exponential tails, beta > 0),
// and discretized with second-order central differences on xi_i = i h.
//

enum class BoundaryMode
{
  Dirichlet,
  Robin
};

std::string to_string(BoundaryMode mode);
BoundaryMode boundary_mode_from_string(const std::string &name);

class DiscreteEigenProblem
{
public:
  // Throws ValidationError when the combination is inconsistent (see validate()).
  DiscreteEigenProblem(const ModelSpec &model, double amplitude, double b, int intervals,
                       BoundaryMode mode);

  // N = round(b / h); the grid spacing is then recomputed as b / N.
  static DiscreteEigenProblem from_spacing(const ModelSpec &model, double amplitude, double h,
                                           double b, BoundaryMode mode);

  const ModelSpec &model() const noexcept { return model_; }
  double amplitude() const noexcept { return amplitude_; }
  double b() const noexcept { return b_; }
  int intervals() const noexcept { return intervals_; }
  double h() const noexcept { return b_ / intervals_; }
  BoundaryMode mode() const noexcept { return mode_; }

  // Unknown f-values: f_1..f_{N-1} (Dirichlet) or f_1..f_N (Robin).
  int profile_unknowns() const noexcept
  {
    return mode_ == BoundaryMode::Dirichlet ? intervals_ - 1 : intervals_;
  }
  // Size of the square nonlinear system: profile unknowns plus lambda.
  int system_size() const noexcept { return profile_unknowns() + 1; }

  // Full grid values f_0..f_N from the unknown part.
  Eigen::VectorXd full_profile(const Eigen::VectorXd &unknowns) const;

private:
  ModelSpec model_;
  double amplitude_;
  double b_;
  int intervals_;
  BoundaryMode mode_;
};

// Residual of the discrete system for unknowns f (profile part) and lambda.
// Throws EigenvalueSignError for lambda <= 0 in Robin mode.
Eigen::VectorXd assemble_residual(const DiscreteEigenProblem &problem, const Eigen::VectorXd &f,
                                  double lambda);

// Analytic Jacobian with respect to (f, lambda); the lambda column is last.
Eigen::MatrixXd assemble_jacobian(const DiscreteEigenProblem &problem, const Eigen::VectorXd &f,
                                  double lambda);

struct InitialGuess
{
  Eigen::VectorXd f;
  double lambda;
};

// A sech^2(xi / 2) profile and lambda_0 = alpha A^{m-1} / 2.
InitialGuess initial_guess(const DiscreteEigenProblem &problem);

enum class FilterPolicy
{
  Automatic,  // Always for pure K(m,n) with n > 1, OnIncrease otherwise
  Always,     // after every accepted step during the filtering phase
  OnIncrease, // only after steps where the line search could not reduce the residual
  Never
};

struct NewtonConfig
{
  double tol = 1e-10;
  int max_iter = 200;
  double min_damping = 1.0 / 256.0;
  FilterPolicy filter_policy = FilterPolicy::Automatic;
  // Filtering stops once the residual drops below filter_cutoff or after
  // max_filtered_steps applications; the fixed point of Newton is unfiltered.
  double filter_cutoff = 1e-3;
  int max_filtered_steps = 20;
  // Iterates are rejected as a blowup when max |f| exceeds blowup_factor * A.
  double blowup_factor = 1e3;
};

struct SolitonProfile
{
  ModelSpec model;
  Eigen::VectorXd xi;
  Eigen::VectorXd values;
  double lambda = 0.0;
  double amplitude = 0.0;
  BoundaryMode mode = BoundaryMode::Dirichlet;
  double residual_norm = 0.0;
  int iterations = 0;

  double h() const { return xi(1) - xi(0); }
  double b() const { return xi(xi.size() - 1); }

  // Even extension to the whole line, linear interpolation on the grid.
  // Outside [-b, b] the profile is zero.
  double value_at(double x) const;
};

SolitonProfile newton_solve(const DiscreteEigenProblem &problem, const NewtonConfig &config = {});
SolitonProfile newton_solve(const DiscreteEigenProblem &problem, const InitialGuess &start,
                            const NewtonConfig &config = {});

// Rescale a beta = 0 profile to amplitude A_new:
//   values * s, xi / B, lambda * s^{m-1},   s = A_new / A, B = s^{(m-n)/2}.
// The speed exponent is m - 1; the leading-order balance -A lambda(A) + A^m lambda_1
// fixes it (a speed proportional to A^m would not reproduce the K(n,n) compacton).
SolitonProfile scale_profile(const SolitonProfile &profile, double new_amplitude);

struct ExactComparison
{
  double max_abs_error;
  double lambda_error;
  double lambda_exact;
};

// Sup-norm distance of the profile to the closed-form K(n,n) compacton with the
// same amplitude, and |lambda - lambda_exact(A)|.
ExactComparison verify_against_exact(const SolitonProfile &profile);

// Default truncation point: 8 for Dirichlet, otherwise the smallest b with
// exp(-sqrt(lambda_0 / beta) b) < 1e-8 under the initial-guess speed.
double default_truncation(const ModelSpec &model, double amplitude, BoundaryMode mode);

} // namespace gkdv

#endif // GKDV_EIGEN_SOLVER_HPP
