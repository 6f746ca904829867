#pragma once

#include <complex>
#include <string>
#include <vector>

#include "skewtensor/rng.hpp"
#include "skewtensor/spd.hpp"
#include "skewtensor/special.hpp"
#include "skewtensor/tensor.hpp"

namespace skewtensor {

enum class Family { Normal, SkewT, GenHyperbolic, VarianceGamma, Sal, Nig };

std::string family_name(Family f);        // normal | st | gh | vg | sal | nig
Family family_from_name(const std::string& name);
inline bool family_is_skewed(Family f) { return f != Family::Normal; }
int family_extra_scalars(Family f);       // free mixing scalars: 1,2,1,0,1,0

// Parameters of one tensor-variate law: location M, skewness A, per-mode
// scales, and the mixing scalars of the chosen family. Only the scalars of
// the active family are meaningful.
struct FamilyParams {
  Family family = Family::Normal;
  Tensor location;
  Tensor skewness;
  ScaleSet scales;
  double dof = 4.0;                // SkewT tail weight, > 0
  double gh_index = -0.5;          // GenHyperbolic index
  double gh_concentration = 1.0;   // GenHyperbolic concentration, > 0
  double vg_shape = 2.0;           // VarianceGamma shape, > 0 (Sal: pinned to 1)
  double nig_concentration = 1.0;  // Nig concentration, > 0

  long long n_star() const { return location.size(); }
  const std::vector<int>& dims() const { return location.dims(); }

  // Pins the family's structural constraints: zero skewness for Normal,
  // vg_shape == 1 for Sal.
  void canonicalize();
  // Throws value_error on dimension mismatches or out-of-domain scalars.
  void validate() const;
};

// E[W] and E[W^2] of the mixing weight. e_w2 is +infinity for SkewT with
// dof <= 4; dof <= 2 throws numeric_error (no mean).
struct LatentMoments {
  double e_w, e_w2;
};
LatentMoments latent_moments(const FamilyParams& p);

// E[X] = location + E[W] * skewness.
Tensor mean_tensor(const FamilyParams& p);

double sample_latent(const FamilyParams& p, Rng& rng);
std::vector<Tensor> sample(const FamilyParams& p, int n, Rng& rng);

// Conditional law of the mixing weight given an observation, as the GIG
// triple (a, b, lambda); a == 0 (SkewT with zero skewness) degenerates to
// inverse-gamma. Not defined for Normal (throws value_error).
struct CondLatent {
  double a, b, lambda;
};

// Shared evaluation engine: caches the whitened skewness, its quadratic
// form, and the family's normalizing constant, so per-observation work is
// one whitening pass plus one Bessel evaluation.
class FamilyEvaluator {
 public:
  explicit FamilyEvaluator(FamilyParams p);

  struct Quad {
    double delta;  // residual quadratic form under the inverse Kronecker scale
    double cross;  // residual-skewness cross form
  };
  Quad quad(const Tensor& x) const;

  double rho() const { return rho_; }
  double log_density(const Quad& q) const;
  CondLatent conditional(const Quad& q) const;
  const FamilyParams& params() const { return params_; }

 private:
  FamilyParams params_;
  Tensor white_skew_;
  double rho_ = 0.0;
  double log_norm_ = 0.0;     // family constant of the closed-form density
  double log_norm_t0_ = 0.0;  // SkewT zero-skewness (tensor-t) constant
};

double log_density(const Tensor& x, const FamilyParams& p);
CondLatent conditional_w(const Tensor& x, const FamilyParams& p);

// Second-order structure. cov_vec is the covariance of the first-mode-
// fastest vectorization (Kronecker factors in reversed mode order);
// gram_rows is E[X1 X1^T] for the mode-0 unfolding X1 (dim n_0 x n_0);
// gram_cols is E[X1^T X1] with columns ordered first-remaining-mode
// fastest. Requires finite E[W^2].
struct SecondMoments {
  Matrix cov_vec;
  Matrix gram_rows;
  Matrix gram_cols;
};
SecondMoments second_moments(const FamilyParams& p);

// Characteristic function E[exp(i <vec T, vec X>)].
std::complex<double> char_fn(const Tensor& t, const FamilyParams& p);

}  // namespace skewtensor
