#pragma once

#include <optional>
#include <string>
#include <vector>

#include "skewtensor/families.hpp"

namespace skewtensor {

enum class ScaleUpdate { FlipFlop, Mode1 };

std::string scale_update_name(ScaleUpdate u);
ScaleUpdate scale_update_from_name(const std::string& name);

struct EStepStats {
  std::vector<double> e_w;      // E[W | x_i]
  std::vector<double> e_inv_w;  // E[1/W | x_i]
  std::vector<double> e_log_w;  // E[log W | x_i]
  double mean_w = 0.0;
  double mean_inv_w = 0.0;
  double mean_log_w = 0.0;
  double loglik = 0.0;  // observed-data log-likelihood at the given params
  // Set when a residual quadratic form has effectively vanished, which happens
  // only when the fit is riding a degenerate scale direction; the stats are
  // still finite (the form is floored) but no further update should use them.
  bool scale_collapsed = false;
};

EStepStats e_step(const std::vector<Tensor>& xs, const FamilyParams& p);

double observed_loglik(const std::vector<Tensor>& xs, const FamilyParams& p);

struct LinearUpdate {
  Tensor location;
  Tensor skewness;
  bool degenerate = false;
};

// Joint location/skewness conditional maximizer. When the system is singular
// (as it always is for unit weights) it falls back to the sample mean and a
// zero skewness and reports the fallback.
LinearUpdate update_linear(const std::vector<Tensor>& xs, const EStepStats& s);

void update_family_scalars(FamilyParams& p, const EStepStats& s,
                           std::vector<std::string>& warnings, int iteration);

// Weighted scatter statistic for one mode; the scale update is
// (n_mode / (N n*)) times this. The two variants contract in different
// orders but compute the same matrix.
Matrix scale_stat_flipflop(const std::vector<Tensor>& xs, const Tensor& location,
                           const Tensor& skewness, const ScaleSet& scales,
                           const EStepStats& s, int mode);
Matrix scale_stat_mode1(const std::vector<Tensor>& xs, const Tensor& location,
                        const Tensor& skewness, const ScaleSet& scales,
                        const EStepStats& s, int mode);

// Quadratic part of the expected complete-data log-likelihood,
// sum_i (b_i delta_i - 2 cross_i) + (sum_i a_i) rho, either accumulated
// observation-wise or traced against the mode statistic.
double weighted_scale_form_direct(const std::vector<Tensor>& xs,
                                  const Tensor& location, const Tensor& skewness,
                                  const ScaleSet& scales, const EStepStats& s);
double weighted_scale_form_traced(const std::vector<Tensor>& xs,
                                  const Tensor& location, const Tensor& skewness,
                                  const ScaleSet& scales, const EStepStats& s,
                                  int mode, ScaleUpdate algo);

// Rescales every scale but the last to trace n_d, absorbing the factors into
// the last one so the Kronecker product is unchanged.
void normalize_scales(ScaleSet& scales);

// Symmetrizes, then adds epsilon to the diagonal when the spectrum is not
// safely positive. Throws numeric_error if that still fails.
Matrix regularize_spd(const Matrix& s, double epsilon, bool* regularized = nullptr);

bool aitken_converged(const std::vector<double>& loglik_trace, double tol);

long long count_free_params(const FamilyParams& p);
double bic(double loglik, long long n_free_params, long long n_obs);

enum class InitScheme { Moment, Provided };

struct FitConfig {
  int max_iter = 200;
  double aitken_tol = 1e-5;
  double reg_epsilon = 0.001;
  ScaleUpdate scale_update = ScaleUpdate::FlipFlop;
  InitScheme init = InitScheme::Moment;
  std::optional<FamilyParams> init_params;
};

struct FitResult {
  FamilyParams params;
  std::vector<double> loglik_trace;
  int iterations = 0;
  bool converged = false;
  double loglik = 0.0;
  double bic = 0.0;
  long long n_free_params = 0;
  std::vector<int> regularized_iterations;  // 1-based
  std::vector<std::string> warnings;
};

FamilyParams moment_init(const std::vector<Tensor>& xs, Family family,
                         double reg_epsilon);

FitResult fit(const std::vector<Tensor>& xs, Family family,
              const FitConfig& cfg = {});

}  // namespace skewtensor
