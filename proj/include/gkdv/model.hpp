// SPDX-License-Identifier: Apache-2.0

#ifndef GKDV_MODEL_HPP
#define GKDV_MODEL_HPP

#include <cmath>
#include <numbers>
#include <string>

#include <json.hpp>

namespace gkdv
{

// x^k for a non-negative integer k by repeated multiplication. Exact sign
// handling for negative x, which std::pow with a real exponent would not give.
template <typename Scalar>
constexpr Scalar int_pow(Scalar x, int k)
{
  Scalar r(1);
  for (int i = 0; i < k; ++i)
    r *= x;
  return r;
}

//
// Power-law member of the generalized KdV family
//
//   u_t + (alpha u^m)_x + (beta u + gamma u^n)_xxx = 0.
//
// K(m,n) is (1, m, 0, 1, n), KdV is (1, 2, 1, 0, 1).
//
struct ModelSpec
{
  double alpha = 1.0;
  int m = 2;
  double beta = 0.0;
  double gamma = 1.0;
  int n = 2;

  static ModelSpec kmn(int m, int n) { return {1.0, m, 0.0, 1.0, n}; }
  static ModelSpec kdv() { return {1.0, 2, 1.0, 0.0, 1}; }
  // u_t + (2u^2)_x + (u + u^2)_xxx = 0
  static ModelSpec kdv_k22() { return {2.0, 2, 1.0, 1.0, 2}; }
  // u_t + (2u^3)_x + (u + u^3)_xxx = 0
  static ModelSpec mkdv_k33() { return {2.0, 3, 1.0, 1.0, 3}; }

  // Throws ValidationError when an invariant is violated.
  void validate() const;

  // u -> -u maps solutions to solutions.
  bool odd_symmetric() const noexcept { return (m % 2 == 1) && (n % 2 == 1); }

  // Pure K(m,n): no linear dispersion, unit coefficients elsewhere.
  bool is_pure_kmn() const noexcept { return beta == 0.0 && alpha == 1.0 && gamma == 1.0; }

  bool admits_exact_compacton() const noexcept { return is_pure_kmn() && m == n && n >= 2; }

  std::string describe() const;

  friend bool operator==(const ModelSpec &, const ModelSpec &) = default;
};

void to_json(nlohmann::json &j, const ModelSpec &model);
void from_json(const nlohmann::json &j, ModelSpec &model);

// Convective flux g = alpha u^m and dispersive flux w = beta u + gamma u^n.
template <typename Scalar>
struct Fluxes
{
  Scalar g;
  Scalar w;
};

template <typename Scalar>
Fluxes<Scalar> flux_values(const ModelSpec &model, Scalar u)
{
  return {Scalar(model.alpha) * int_pow(u, model.m),
          Scalar(model.beta) * u + Scalar(model.gamma) * int_pow(u, model.n)};
}

// Derivatives dg/du and dw/du.
template <typename Scalar>
Fluxes<Scalar> flux_derivatives(const ModelSpec &model, Scalar u)
{
  return {Scalar(model.alpha * model.m) * int_pow(u, model.m - 1),
          Scalar(model.beta) + Scalar(model.gamma * model.n) * int_pow(u, model.n - 1)};
}

// Half-width n pi / (n - 1) of the K(n,n) compacton support.
inline double compacton_half_width(int n)
{
  return n * std::numbers::pi / (n - 1);
}

// Speed of the K(n,n) compacton with peak value A: A = (2 lambda n / (n+1))^{1/(n-1)}.
inline double compacton_speed(int n, double amplitude)
{
  return std::pow(amplitude, n - 1) * (n + 1) / (2.0 * n);
}

// Closed-form K(n,n) compacton travelling at speed lambda, evaluated at xi = x - lambda t.
// Zero on and outside the support edge |xi| >= n pi / (n - 1).
double exact_compacton(const ModelSpec &model, double lambda, double xi);

} // namespace gkdv

#endif // GKDV_MODEL_HPP
