#pragma once

#include <vector>

#include "skewtensor/tensor.hpp"

namespace skewtensor {

// Symmetric positive definite matrix with its Cholesky factorization cached.
// Construction rejects matrices that are asymmetric beyond 1e-12 relative or
// not positive definite (Cholesky failure).
class SpdMatrix {
 public:
  explicit SpdMatrix(Matrix m);
  static SpdMatrix identity(int n);

  int n() const { return static_cast<int>(mat_.rows()); }
  const Matrix& matrix() const { return mat_; }
  // L with matrix() == L * L^T.
  const Matrix& chol_lower() const { return chol_; }
  // F == L^{-1}, so F^T F == matrix()^{-1}. Whitening factor.
  const Matrix& inv_factor() const { return inv_factor_; }
  double log_det() const { return log_det_; }
  Matrix inverse() const { return inv_factor_.transpose() * inv_factor_; }
  double trace() const { return mat_.trace(); }

 private:
  Matrix mat_, chol_, inv_factor_;
  double log_det_ = 0.0;
};

// One scale matrix per tensor mode.
using ScaleSet = std::vector<SpdMatrix>;

ScaleSet identity_scales(const std::vector<int>& dims);
std::vector<int> scale_dims(const ScaleSet& scales);

// sum_d (size / (2 n_d)) * log det S_d: the log-det part every density shares.
double half_weighted_log_det(const ScaleSet& scales);

// prod_d trace(S_d) == trace of the Kronecker product.
double kron_trace(const ScaleSet& scales);

// Apply the whitening factor F_d of every scale (t x_d F_d for all d), so the
// squared norm of the result is the quadratic form under kron(S_d)^{-1}.
Tensor whiten(const Tensor& t, const ScaleSet& scales);

// Same, skipping one mode.
Tensor whiten_except(const Tensor& t, const ScaleSet& scales, int skip_mode);

// Apply the Cholesky factor L_d to every mode: colors an iid standard normal
// tensor to covariance kron(S_d) in vectorized form.
Tensor color(const Tensor& t, const ScaleSet& scales);

// vec(x - m)^T kron(S)^{-1} vec(x - m), via whitening, never materializing
// the Kronecker product.
double quad_residual(const Tensor& x, const Tensor& m, const ScaleSet& scales);

// vec(a)^T kron(S)^{-1} vec(a).
double quad_skew(const Tensor& a, const ScaleSet& scales);

// vec(x - m)^T kron(S)^{-1} vec(a).
double cross_form(const Tensor& x, const Tensor& m, const Tensor& a,
                  const ScaleSet& scales);

}  // namespace skewtensor
