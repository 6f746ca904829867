#include "skewtensor/spd.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace skewtensor {

SpdMatrix::SpdMatrix(Matrix m) : mat_(std::move(m)) {
  if (mat_.rows() != mat_.cols() || mat_.rows() < 1)
    throw value_error("SpdMatrix must be square and non-empty");
  const double scale = mat_.cwiseAbs().maxCoeff();
  const double asym = (mat_ - mat_.transpose()).cwiseAbs().maxCoeff();
  if (scale > 0 && asym > 1e-12 * scale)
    throw value_error("SpdMatrix input is not symmetric");
  mat_ = 0.5 * (mat_ + mat_.transpose().eval());
  Eigen::LLT<Matrix> llt(mat_);
  if (llt.info() != Eigen::Success)
    throw numeric_error("matrix is not positive definite");
  chol_ = llt.matrixL();
  inv_factor_ = chol_.triangularView<Eigen::Lower>().solve(
      Matrix::Identity(mat_.rows(), mat_.cols()));
  log_det_ = 2.0 * chol_.diagonal().array().log().sum();
}

SpdMatrix SpdMatrix::identity(int n) { return SpdMatrix(Matrix::Identity(n, n)); }

ScaleSet identity_scales(const std::vector<int>& dims) {
  ScaleSet s;
  s.reserve(dims.size());
  for (int n : dims) s.push_back(SpdMatrix::identity(n));
  return s;
}

std::vector<int> scale_dims(const ScaleSet& scales) {
  std::vector<int> dims;
  dims.reserve(scales.size());
  for (const auto& s : scales) dims.push_back(s.n());
  return dims;
}

double half_weighted_log_det(const ScaleSet& scales) {
  const long long n = num_elements(scale_dims(scales));
  double acc = 0.0;
  for (const auto& s : scales) acc += static_cast<double>(n) / (2.0 * s.n()) * s.log_det();
  return acc;
}

double kron_trace(const ScaleSet& scales) {
  double acc = 1.0;
  for (const auto& s : scales) acc *= s.trace();
  return acc;
}

namespace {

void check_compatible(const Tensor& t, const ScaleSet& scales) {
  if (t.order() != static_cast<int>(scales.size()))
    throw value_error("scale count does not match tensor order");
  for (int d = 0; d < t.order(); ++d)
    if (scales[static_cast<size_t>(d)].n() != t.dim(d))
      throw value_error("scale size does not match tensor dim");
}

}  // namespace

Tensor whiten(const Tensor& t, const ScaleSet& scales) {
  check_compatible(t, scales);
  Tensor out = t;
  for (int d = 0; d < t.order(); ++d)
    out = mode_product(out, scales[static_cast<size_t>(d)].inv_factor(), d);
  return out;
}

Tensor whiten_except(const Tensor& t, const ScaleSet& scales, int skip_mode) {
  check_compatible(t, scales);
  Tensor out = t;
  for (int d = 0; d < t.order(); ++d)
    if (d != skip_mode)
      out = mode_product(out, scales[static_cast<size_t>(d)].inv_factor(), d);
  return out;
}

Tensor color(const Tensor& t, const ScaleSet& scales) {
  check_compatible(t, scales);
  Tensor out = t;
  for (int d = 0; d < t.order(); ++d)
    out = mode_product(out, scales[static_cast<size_t>(d)].chol_lower(), d);
  return out;
}

double quad_residual(const Tensor& x, const Tensor& m, const ScaleSet& scales) {
  Tensor w = whiten(x - m, scales);
  return w.data().squaredNorm();
}

double quad_skew(const Tensor& a, const ScaleSet& scales) {
  Tensor w = whiten(a, scales);
  return w.data().squaredNorm();
}

double cross_form(const Tensor& x, const Tensor& m, const Tensor& a,
                  const ScaleSet& scales) {
  Tensor wr = whiten(x - m, scales);
  Tensor wa = whiten(a, scales);
  return wr.data().dot(wa.data());
}

}  // namespace skewtensor
