#include "skewtensor/tensor.hpp"

#include <numeric>
#include <string>

namespace skewtensor {

namespace {

void check_dims(const std::vector<int>& dims) {
  if (dims.empty() || dims.size() > 8)
    throw value_error("tensor order must be between 1 and 8, got " +
                      std::to_string(dims.size()));
  for (int n : dims)
    if (n < 1) throw value_error("tensor dims must be >= 1");
}

// Product of dims before `mode` (outer) and after it (inner).
struct Split {
  long long outer, inner;
};

Split split_at(const std::vector<int>& dims, int mode) {
  Split s{1, 1};
  for (int k = 0; k < static_cast<int>(dims.size()); ++k) {
    if (k < mode) s.outer *= dims[static_cast<size_t>(k)];
    if (k > mode) s.inner *= dims[static_cast<size_t>(k)];
  }
  return s;
}

void check_mode(const Tensor& t, int mode) {
  if (mode < 0 || mode >= t.order())
    throw value_error("mode index out of range");
}

}  // namespace

long long num_elements(const std::vector<int>& dims) {
  long long n = 1;
  for (int d : dims) n *= d;
  return n;
}

Tensor::Tensor(std::vector<int> dims, double fill) : dims_(std::move(dims)) {
  check_dims(dims_);
  data_ = Vector::Constant(num_elements(dims_), fill);
}

Tensor::Tensor(std::vector<int> dims, Vector data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  check_dims(dims_);
  if (data_.size() != num_elements(dims_))
    throw value_error("tensor data length does not match dims");
}

long long Tensor::offset(const std::vector<int>& idx) const {
  if (idx.size() != dims_.size()) throw value_error("index order mismatch");
  long long off = 0;
  for (size_t k = 0; k < dims_.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= dims_[k]) throw value_error("index out of range");
    off = off * dims_[k] + idx[k];
  }
  return off;
}

Tensor& Tensor::operator+=(const Tensor& o) {
  if (!same_dims(o)) throw value_error("tensor dims mismatch");
  data_ += o.data_;
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& o) {
  if (!same_dims(o)) throw value_error("tensor dims mismatch");
  data_ -= o.data_;
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  data_ *= s;
  return *this;
}

Vector vec_first_fastest(const Tensor& t) {
  const int d = t.order();
  Vector out(t.size());
  std::vector<int> idx(static_cast<size_t>(d), 0);
  const auto& dims = t.dims();
  for (long long li = 0; li < t.size(); ++li) {
    // li walks storage order; rebuild the mirrored offset with mode 0 fastest.
    long long rev = 0;
    for (int k = d - 1; k >= 0; --k) rev = rev * dims[static_cast<size_t>(k)] + idx[static_cast<size_t>(k)];
    out[rev] = t[li];
    for (int k = d - 1; k >= 0; --k) {
      if (++idx[static_cast<size_t>(k)] < dims[static_cast<size_t>(k)]) break;
      idx[static_cast<size_t>(k)] = 0;
    }
  }
  return out;
}

Matrix matricize(const Tensor& t, int mode) {
  check_mode(t, mode);
  const int nj = t.dim(mode);
  const long long rows = t.size() / nj;
  Matrix out(rows, nj);
  const Split s = split_at(t.dims(), mode);
  // Storage offset = (hi * nj + c) * inner + lo; row index = hi * inner + lo,
  // i.e. the mode-j digit is deleted from the mixed-radix representation.
  long long li = 0;
  for (long long hi = 0; hi < s.outer; ++hi)
    for (int c = 0; c < nj; ++c)
      for (long long lo = 0; lo < s.inner; ++lo, ++li)
        out(hi * s.inner + lo, c) = t[li];
  return out;
}

Tensor unmatricize(const Matrix& m, const std::vector<int>& dims, int mode) {
  check_dims(dims);
  if (mode < 0 || mode >= static_cast<int>(dims.size()))
    throw value_error("mode index out of range");
  const int nj = dims[static_cast<size_t>(mode)];
  const long long n = num_elements(dims);
  if (m.rows() != n / nj || m.cols() != nj)
    throw value_error("matrix shape does not match target dims");
  Tensor out(dims);
  const Split s = split_at(dims, mode);
  long long li = 0;
  for (long long hi = 0; hi < s.outer; ++hi)
    for (int c = 0; c < nj; ++c)
      for (long long lo = 0; lo < s.inner; ++lo, ++li)
        out[li] = m(hi * s.inner + lo, c);
  return out;
}

Tensor mode_product(const Tensor& t, const Matrix& m, int mode) {
  check_mode(t, mode);
  const int nd = t.dim(mode);
  if (m.cols() != nd) throw value_error("mode_product: matrix columns must equal mode dim");
  const int r = static_cast<int>(m.rows());
  std::vector<int> out_dims = t.dims();
  out_dims[static_cast<size_t>(mode)] = r;
  Tensor out(out_dims);
  const Split s = split_at(t.dims(), mode);
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  for (long long o = 0; o < s.outer; ++o) {
    Eigen::Map<const RowMat> src(t.data().data() + o * nd * s.inner, nd, s.inner);
    Eigen::Map<RowMat> dst(out.data().data() + o * r * s.inner, r, s.inner);
    dst.noalias() = m * src;
  }
  return out;
}

Matrix kron_chain(const std::vector<Matrix>& ms) {
  if (ms.empty()) throw value_error("kron_chain needs at least one factor");
  Matrix acc = ms[0];
  for (size_t k = 1; k < ms.size(); ++k) {
    const Matrix& b = ms[k];
    Matrix next(acc.rows() * b.rows(), acc.cols() * b.cols());
    for (long long i = 0; i < acc.rows(); ++i)
      for (long long j = 0; j < acc.cols(); ++j)
        next.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = acc(i, j) * b;
    acc = std::move(next);
  }
  return acc;
}

Tensor swap_modes(const Tensor& t, int mode_a, int mode_b) {
  check_mode(t, mode_a);
  check_mode(t, mode_b);
  if (mode_a == mode_b) return t;
  std::vector<int> out_dims = t.dims();
  std::swap(out_dims[static_cast<size_t>(mode_a)], out_dims[static_cast<size_t>(mode_b)]);
  Tensor out(out_dims);
  const int d = t.order();
  std::vector<int> idx(static_cast<size_t>(d), 0);
  for (long long li = 0; li < t.size(); ++li) {
    std::vector<int> jdx = idx;
    std::swap(jdx[static_cast<size_t>(mode_a)], jdx[static_cast<size_t>(mode_b)]);
    out.at(jdx) = t[li];
    for (int k = d - 1; k >= 0; --k) {
      if (++idx[static_cast<size_t>(k)] < t.dims()[static_cast<size_t>(k)]) break;
      idx[static_cast<size_t>(k)] = 0;
    }
  }
  return out;
}

}  // namespace skewtensor
