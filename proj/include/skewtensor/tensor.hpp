#pragma once

#include <Eigen/Dense>
#include <vector>

#include "skewtensor/error.hpp"

namespace skewtensor {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Dense real tensor of order D, 1 <= D <= 8.
//
// Storage is linear with the LAST mode fastest: entry (i_0, ..., i_{D-1})
// lives at offset ((i_0 * n_1 + i_1) * n_2 + ...) + i_{D-1}. Under this
// layout the raw buffer read in order IS the vectorization used throughout
// the library, and the covariance of the vectorization of a separable-scale
// draw is kron(S_0, S_1, ..., S_{D-1}) in declared mode order.
//
// Modes are indexed 0-based everywhere in code.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<int> dims, double fill = 0.0);
  Tensor(std::vector<int> dims, Vector data);

  int order() const { return static_cast<int>(dims_.size()); }
  const std::vector<int>& dims() const { return dims_; }
  int dim(int mode) const { return dims_[static_cast<size_t>(mode)]; }
  long long size() const { return data_.size(); }

  double& operator[](long long i) { return data_[i]; }
  double operator[](long long i) const { return data_[i]; }

  double& at(const std::vector<int>& idx) { return data_[offset(idx)]; }
  double at(const std::vector<int>& idx) const { return data_[offset(idx)]; }
  long long offset(const std::vector<int>& idx) const;

  const Vector& data() const { return data_; }
  Vector& data() { return data_; }

  bool same_dims(const Tensor& other) const { return dims_ == other.dims_; }

  Tensor& operator+=(const Tensor& o);
  Tensor& operator-=(const Tensor& o);
  Tensor& operator*=(double s);
  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
  friend Tensor operator*(double s, Tensor t) { return t *= s; }

  double norm() const { return data_.norm(); }

 private:
  std::vector<int> dims_;
  Vector data_;
};

long long num_elements(const std::vector<int>& dims);

// The vectorization: identical to the storage order (last mode fastest).
inline const Vector& vec(const Tensor& t) { return t.data(); }

// Vectorization with the FIRST mode fastest (the reversed-Kronecker
// orientation used by the second-moment formulas).
Vector vec_first_fastest(const Tensor& t);

// Mode-j unfolding as an (size/n_j) x n_j matrix: column c holds all entries
// with i_j = c; rows run over the remaining modes in declared order, last
// mode fastest. vec(t) equals the column-major stacking of matricize(t, 0).
Matrix matricize(const Tensor& t, int mode);

// Inverse of matricize for the given target dims.
Tensor unmatricize(const Matrix& m, const std::vector<int>& dims, int mode);

// Mode-d product: contracts mode d against the columns of m, so the result
// has dim(mode d) == m.rows(). For vectors (order 1), mode 0 gives m * v.
Tensor mode_product(const Tensor& t, const Matrix& m, int mode);

// kron(ms[0], ms[1], ..., ms.back()) in the given order.
Matrix kron_chain(const std::vector<Matrix>& ms);

// Exchange two modes (entries move with their indices).
Tensor swap_modes(const Tensor& t, int mode_a, int mode_b);

// Exchange mode 1 with mode l (0-based, 2 <= l < D); the reordering the
// scale-update slab machinery uses for modes beyond the second.
inline Tensor permute_l2(const Tensor& t, int l) { return swap_modes(t, 1, l); }

}  // namespace skewtensor
