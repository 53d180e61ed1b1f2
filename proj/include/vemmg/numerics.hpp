#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <string>
#include <vector>

#include "vemmg/errors.hpp"

namespace vemmg::numerics {

struct Triplet {
  int row;
  int col;
  double value;
};

/// Sparse symmetric matrix storing the lower triangle in compressed rows.
class SparseSymMatrix {
 public:
  SparseSymMatrix() = default;

  /// Builds from triplets; entries may address either triangle and duplicates
  /// are summed. Explicit zeros are dropped.
  static SparseSymMatrix from_triplets(int n, std::vector<Triplet> entries);

  int size() const { return n_; }
  int nnz_lower() const { return static_cast<int>(val_.size()); }

  /// y = A x with symmetric expansion of the stored triangle.
  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;

  double diagonal(int i) const;

  Eigen::SparseMatrix<double> to_eigen() const; // full symmetric copy

  /// Writes "row col value" per stored lower-triangle entry.
  void save_triplets(const std::string& path) const;

  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& cols() const { return col_; }
  const std::vector<double>& values() const { return val_; }

 private:
  int n_ = 0;
  std::vector<int> row_ptr_;
  std::vector<int> col_;
  std::vector<double> val_;
};

Eigen::VectorXd spmv(const SparseSymMatrix& A, const Eigen::VectorXd& x);

/// Reusable sparse Cholesky factorization of an SPD SparseSymMatrix.
class CholeskyFactor {
 public:
  explicit CholeskyFactor(const SparseSymMatrix& A);
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  int size() const { return n_; }

 private:
  int n_ = 0;
  Eigen::SparseMatrix<double> A_;
  std::shared_ptr<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>> llt_;
};

/// Direct solve with one step of iterative refinement.
Eigen::VectorXd cholesky_solve(const SparseSymMatrix& A, const Eigen::VectorXd& b);

/// Jacobi-preconditioned conjugate gradients to a relative residual.
Eigen::VectorXd cg_solve(const SparseSymMatrix& A, const Eigen::VectorXd& b, double tol,
                         int max_iterations);

/// Sub-matrix over the indices with new_index[i] >= 0 (e.g. boundary
/// elimination); new_index maps old to new positions.
SparseSymMatrix restrict_indices(const SparseSymMatrix& full, const std::vector<int>& new_index,
                                 int new_n);

} // namespace vemmg::numerics
