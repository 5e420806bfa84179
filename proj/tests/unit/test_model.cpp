#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <doctest.h>

#include "gkdv/errors.hpp"
#include "gkdv/model.hpp"

using namespace gkdv;
using std::numbers::pi;

TEST_CASE("flux values for the presets")
{
  auto k22 = flux_values(ModelSpec::kmn(2, 2), 3.0);
  CHECK(k22.g == 9.0);
  CHECK(k22.w == 9.0);

  auto kdv = flux_values(ModelSpec::kdv(), 3.0);
  CHECK(kdv.g == 9.0);
  CHECK(kdv.w == 3.0);

  auto mix = flux_values(ModelSpec::kdv_k22(), -1.0);
  CHECK(mix.g == 2.0);
  CHECK(mix.w == 0.0);

  auto zero = flux_values(ModelSpec::mkdv_k33(), 0.0);
  CHECK(zero.g == 0.0);
  CHECK(zero.w == 0.0);
}

TEST_CASE("flux derivatives match finite differences")
{
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (const auto &model : {ModelSpec::kmn(2, 2), ModelSpec::kmn(3, 3), ModelSpec::kdv(),
                            ModelSpec::kdv_k22(), ModelSpec::mkdv_k33(), ModelSpec{0.5, 4, 2.0, -1.5, 5}})
  {
    for (int trial = 0; trial < 20; ++trial)
    {
      const double u = dist(rng);
      const double e = 1e-6;
      auto plus = flux_values(model, u + e);
      auto minus = flux_values(model, u - e);
      auto d = flux_derivatives(model, u);
      CHECK(d.g == doctest::Approx((plus.g - minus.g) / (2 * e)).epsilon(1e-7));
      CHECK(d.w == doctest::Approx((plus.w - minus.w) / (2 * e)).epsilon(1e-7));
    }
  }
}

TEST_CASE("odd models have odd fluxes")
{
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  for (const auto &model : {ModelSpec::mkdv_k33(), ModelSpec::kmn(3, 3), ModelSpec::kmn(5, 3)})
  {
    REQUIRE(model.odd_symmetric());
    for (int trial = 0; trial < 50; ++trial)
    {
      const double u = dist(rng);
      CHECK(flux_values(model, -u).g == -flux_values(model, u).g);
      CHECK(flux_values(model, -u).w == -flux_values(model, u).w);
    }
  }
  CHECK_FALSE(ModelSpec::kdv_k22().odd_symmetric());
  CHECK_FALSE(ModelSpec::kdv().odd_symmetric());
}

TEST_CASE("validation rejects bad models")
{
  CHECK_NOTHROW(ModelSpec::kdv().validate());
  CHECK_THROWS_AS((ModelSpec{1.0, 0, 0.0, 1.0, 2}).validate(), ValidationError);
  CHECK_THROWS_AS((ModelSpec{1.0, 2, 0.0, 1.0, 0}).validate(), ValidationError);
  CHECK_THROWS_AS((ModelSpec{1.0, 2, -1.0, 1.0, 2}).validate(), ValidationError);
  CHECK_NOTHROW((ModelSpec{0.0, 2, 0.0, 1.0, 2}).validate());
  CHECK_THROWS_AS((ModelSpec{1.0, 2, 0.0, 0.0, 2}).validate(), ValidationError);
  CHECK_THROWS_AS((ModelSpec{std::nan(""), 2, 0.0, 1.0, 2}).validate(), ValidationError);
}

TEST_CASE("model json round trip")
{
  for (const auto &model : {ModelSpec::kmn(3, 3), ModelSpec::kdv_k22(), ModelSpec{0.1, 4, 0.3, 0.7, 5}})
  {
    nlohmann::json j = model;
    CHECK(j.get<ModelSpec>() == model);
  }
  nlohmann::json bad = {{"alpha", 1.0}, {"m", 2}, {"beta", 0.0}, {"gamma", 1.0}, {"n", -1}};
  CHECK_THROWS_AS(bad.get<ModelSpec>(), ValidationError);
}

TEST_CASE("exact K(2,2) compacton values")
{
  const auto model = ModelSpec::kmn(2, 2);
  CHECK(compacton_speed(2, 1.0) == doctest::Approx(0.75));
  CHECK(exact_compacton(model, 0.75, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(exact_compacton(model, 0.75, pi) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(exact_compacton(model, 0.75, 2 * pi) == 0.0);
  CHECK(exact_compacton(model, 0.75, 7.0) == 0.0);
  CHECK(exact_compacton(model, 0.75, -7.0) == 0.0);
}

TEST_CASE("exact K(3,3) compacton values")
{
  const auto model = ModelSpec::kmn(3, 3);
  CHECK(compacton_half_width(3) == doctest::Approx(1.5 * pi));
  CHECK(compacton_speed(3, 1.0) == doctest::Approx(2.0 / 3.0));
  CHECK(exact_compacton(model, 2.0 / 3.0, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(exact_compacton(model, 2.0 / 3.0, 1.5 * pi) == 0.0);
  CHECK(exact_compacton(model, 2.0 / 3.0, 0.75 * pi) == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("exact compacton is rejected for other models")
{
  CHECK_THROWS_AS(exact_compacton(ModelSpec::kdv(), 1.0, 0.0), ValidationError);
  CHECK_THROWS_AS(exact_compacton(ModelSpec::kmn(3, 2), 1.0, 0.0), ValidationError);
  CHECK_THROWS_AS(exact_compacton(ModelSpec::kdv_k22(), 1.0, 0.0), ValidationError);
}

TEST_CASE("exact compacton is even and non-negative")
{
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(-12.0, 12.0);
  for (int n : {2, 3, 4})
  {
    const auto model = ModelSpec::kmn(n, n);
    for (double lambda : {0.3, 0.75, 2.0})
      for (int trial = 0; trial < 50; ++trial)
      {
        const double xi = dist(rng);
        const double f = exact_compacton(model, lambda, xi);
        CHECK(f == exact_compacton(model, lambda, -xi));
        CHECK(f >= 0.0);
      }
  }
}

// Residual of -lambda f + f^n + (f^n)'' with a fourth-order stencil for the
// second derivative, evaluated on the open support well away from the edge.
static double interior_residual(int n, double h)
{
  const auto model = ModelSpec::kmn(n, n);
  const double lambda = 0.9;
  const double edge = compacton_half_width(n);
  auto fn = [&](double xi) { return std::pow(exact_compacton(model, lambda, xi), n); };
  double worst = 0.0;
  for (double xi = 0.0; xi < edge - 1.0; xi += h)
  {
    const double d2 = (-fn(xi + 2 * h) + 16 * fn(xi + h) - 30 * fn(xi) + 16 * fn(xi - h)
                       - fn(xi - 2 * h))
                      / (12 * h * h);
    const double r = -lambda * exact_compacton(model, lambda, xi) + fn(xi) + d2;
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

TEST_CASE("exact compacton satisfies the travelling-wave ODE on its support")
{
  for (int n : {2, 3, 4})
  {
    const double coarse = interior_residual(n, 0.02);
    const double fine = interior_residual(n, 0.01);
    CAPTURE(n);
    CHECK(coarse < 1e-5);
    CHECK(coarse / fine > 4.0);
  }
}

TEST_CASE("describe names the model")
{
  CHECK(!ModelSpec::kdv().describe().empty());
}
