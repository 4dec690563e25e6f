#ifndef LPCFG_NOISE_HPP
#define LPCFG_NOISE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "lpcfg/errors.hpp"
#include "lpcfg/features.hpp"
#include "lpcfg/rng.hpp"

namespace lpcfg {

enum class NoiseScheme { kNone, kDropout, kGaussianAdditive, kGaussianMultiplicative };

std::string to_string(NoiseScheme scheme);
NoiseScheme noise_scheme_from_string(const std::string& name);

// Feature-perturbation setting for one trained model. Dropout acts on the
// raw feature vectors before the SVD step; the Gaussian schemes act on the
// concatenated projections after it.
struct NoiseSpec {
  NoiseScheme scheme = NoiseScheme::kNone;
  double sigma = 0.0;
  uint64_t seed = 0;

  void check() const {
    if (scheme == NoiseScheme::kDropout && (sigma < 0.0 || sigma > 1.0)) {
      throw ConfigError("dropout sigma must be in [0,1]");
    }
    if ((scheme == NoiseScheme::kGaussianAdditive ||
         scheme == NoiseScheme::kGaussianMultiplicative) &&
        sigma < 0.0) {
      throw ConfigError("gaussian sigma must be >= 0");
    }
  }
};

// Independently removes each stored nonzero with probability sigma.
SparseFeatureVector dropout_features(const SparseFeatureVector& vector,
                                     double sigma, RandomSource& rng);

// Draws a fresh epsilon ~ N(0, sigma^2 I) and returns x + eps (additive) or
// x (1 + eps) coordinate-wise (multiplicative).
Eigen::VectorXd gaussian_perturb(const Eigen::VectorXd& x, double sigma,
                                 NoiseScheme mode, RandomSource& rng);

// Seed for one ensemble member, derived from the master seed and the member
// coordinates; recorded in model metadata for reproducibility.
uint64_t model_seed(uint64_t master_seed, NoiseScheme scheme, double sigma,
                    int replicate);

}  // namespace lpcfg

#endif  // LPCFG_NOISE_HPP
