#pragma once

#include <string>
#include <vector>

#include "skewtensor/ecm.hpp"

namespace skewtensor {

// Random SPD matrix with eigenvalues uniform on [1, max_cond] and a Haar-ish
// eigenbasis from the QR of a standard normal matrix.
Matrix gen_random_spd(Rng& rng, int n, double max_cond = 10.0);

// Ground-truth parameters for one synthetic dataset: random scales, standard
// normal location entries (rescaled so the location energy is snr times the
// noise energy; snr <= 0 keeps the raw draw), skewness entries
// N(0, skew_sigma^2), and fixed mixing scalars per family.
FamilyParams make_truth(Family family, const std::vector<int>& dims,
                        double skew_sigma, double snr, double max_cond, Rng& rng);

// ||est - truth||_F / ||truth||_F; absolute norm when the truth is zero.
double relative_error(const Tensor& est, const Tensor& truth);

// Same for the Kronecker products of two scale sets, evaluated factor-wise
// without materializing either product.
double relative_error_kron(const ScaleSet& est, const ScaleSet& truth);

struct StudyCell {
  std::vector<int> dims;
  int n_obs = 0;
};

struct StudySpec {
  std::vector<StudyCell> cells;
  int replications = 1;
  Family truth_family = Family::SkewT;
  std::vector<Family> fit_families = {Family::Normal,        Family::SkewT,
                                      Family::GenHyperbolic, Family::VarianceGamma,
                                      Family::Sal,           Family::Nig};
  double skew_sigma = 12.0;
  double snr = 0.5;
  double max_cond = 10.0;
  uint64_t seed = 1;
  ScaleUpdate scale_update = ScaleUpdate::FlipFlop;
  int max_iter = 200;
  double aitken_tol = 1e-5;
  double reg_epsilon = 0.001;
};

StudySpec desk_profile();
StudySpec full_profile();

struct StudyRow {
  int cell = 0;
  std::vector<int> dims;
  int n_obs = 0;
  int rep = 0;
  Family truth_family = Family::SkewT;
  Family fit_family = Family::Normal;
  bool converged = false;
  int iterations = 0;
  double loglik = 0.0;
  double bic = 0.0;
  double rel_err_mean = 0.0;
  double rel_err_kron = 0.0;
  std::string status = "ok";  // "ok" or "error: ..."
  double wall_time_sec = 0.0;
};

struct StudyResult {
  StudySpec spec;
  std::vector<StudyRow> rows;  // ordered by (cell, rep, fit family)
};

// Runs every (cell, replicate) job, fitting each family to the same dataset.
// Jobs are independent (seeded by mix_seed(seed, cell, rep)) and run in
// parallel; everything but wall_time_sec is reproducible.
StudyResult run_study(const StudySpec& spec);

}  // namespace skewtensor
