// SPDX-License-Identifier: Apache-2.0

#include "gkdv/model.hpp"

#include <cmath>
#include <sstream>

#include "gkdv/errors.hpp"

namespace gkdv
{

void ModelSpec::validate() const
{
  if (m < 1 || n < 1)
    throw ValidationError("model exponents must satisfy m >= 1 and n >= 1");
  if (beta < 0.0)
    throw ValidationError("linear dispersion coefficient beta must be non-negative");
  if (beta == 0.0 && gamma == 0.0)
    throw ValidationError("model has no dispersion (beta = gamma = 0)");
  if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(gamma))
    throw ValidationError("model coefficients must be finite");
}

std::string ModelSpec::describe() const
{
  std::ostringstream os;
  os << "u_t + (" << alpha << " u^" << m << ")_x + (" << beta << " u + " << gamma << " u^" << n
     << ")_xxx = 0";
  return os.str();
}

void to_json(nlohmann::json &j, const ModelSpec &model)
{
  j = nlohmann::json{{"alpha", model.alpha},
                     {"m", model.m},
                     {"beta", model.beta},
                     {"gamma", model.gamma},
                     {"n", model.n}};
}

void from_json(const nlohmann::json &j, ModelSpec &model)
{
  try
  {
    j.at("alpha").get_to(model.alpha);
    j.at("m").get_to(model.m);
    j.at("beta").get_to(model.beta);
    j.at("gamma").get_to(model.gamma);
    j.at("n").get_to(model.n);
  }
  catch (const nlohmann::json::exception &e)
  {
    throw ValidationError(std::string("malformed model object: ") + e.what());
  }
  model.validate();
}

double exact_compacton(const ModelSpec &model, double lambda, double xi)
{
  if (!model.admits_exact_compacton())
    throw ValidationError("exact compacton requires a pure K(n,n) model with n >= 2");
  if (!(lambda > 0.0))
    throw ValidationError("compacton speed must be positive");
  const int n = model.n;
  if (std::abs(xi) >= compacton_half_width(n))
    return 0.0;
  const double c = std::cos((n - 1) * xi / (2.0 * n));
  return std::pow(2.0 * lambda * n / (n + 1) * c * c, 1.0 / (n - 1));
}

} // namespace gkdv
