#include "lpcfg/noise.hpp"

#include <cstdio>

namespace lpcfg {

std::string to_string(NoiseScheme scheme) {
  switch (scheme) {
    case NoiseScheme::kNone:
      return "none";
    case NoiseScheme::kDropout:
      return "dropout";
    case NoiseScheme::kGaussianAdditive:
      return "add";
    case NoiseScheme::kGaussianMultiplicative:
      return "mul";
  }
  return "none";
}

NoiseScheme noise_scheme_from_string(const std::string& name) {
  if (name == "none") return NoiseScheme::kNone;
  if (name == "dropout") return NoiseScheme::kDropout;
  if (name == "add" || name == "gaussian_additive") {
    return NoiseScheme::kGaussianAdditive;
  }
  if (name == "mul" || name == "gaussian_multiplicative") {
    return NoiseScheme::kGaussianMultiplicative;
  }
  throw ConfigError("unknown noise scheme: " + name);
}

SparseFeatureVector dropout_features(const SparseFeatureVector& vector,
                                     double sigma, RandomSource& rng) {
  SparseFeatureVector out;
  for (const auto& [id, v] : vector.entries) {
    if (rng.uniform() >= sigma) out.entries.emplace_back(id, v);
  }
  return out;
}

Eigen::VectorXd gaussian_perturb(const Eigen::VectorXd& x, double sigma,
                                 NoiseScheme mode, RandomSource& rng) {
  if (sigma == 0.0) return x;
  Eigen::VectorXd eps(x.size());
  for (int i = 0; i < x.size(); ++i) eps(i) = rng.normal(0.0, sigma);
  if (mode == NoiseScheme::kGaussianAdditive) return x + eps;
  if (mode == NoiseScheme::kGaussianMultiplicative) {
    return x.cwiseProduct(Eigen::VectorXd::Ones(x.size()) + eps);
  }
  throw ConfigError("gaussian_perturb requires a gaussian mode");
}

uint64_t model_seed(uint64_t master_seed, NoiseScheme scheme, double sigma,
                    int replicate) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "model|%s|%.17g|%d", to_string(scheme).c_str(),
                sigma, replicate);
  return derive_seed(master_seed, buf);
}

}  // namespace lpcfg
