#include "vemmg/numerics.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>

namespace vemmg::numerics {

SparseSymMatrix SparseSymMatrix::from_triplets(int n, std::vector<Triplet> entries) {
  if (n <= 0) throw DimensionMismatch("matrix dimension must be positive");
  for (auto& t : entries) {
    if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n)
      throw DimensionMismatch("triplet index out of range");
    if (t.col > t.row) std::swap(t.row, t.col); // keep lower triangle
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseSymMatrix m;
  m.n_ = n;
  m.row_ptr_.assign(n + 1, 0);
  for (size_t i = 0; i < entries.size();) {
    size_t j = i;
    double s = 0.0;
    while (j < entries.size() && entries[j].row == entries[i].row &&
           entries[j].col == entries[i].col) {
      s += entries[j].value;
      ++j;
    }
    if (s != 0.0) {
      m.col_.push_back(entries[i].col);
      m.val_.push_back(s);
      m.row_ptr_[entries[i].row + 1]++;
    }
    i = j;
  }
  for (int r = 0; r < n; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
  return m;
}

Eigen::VectorXd SparseSymMatrix::multiply(const Eigen::VectorXd& x) const {
  if (x.size() != n_) throw DimensionMismatch("spmv dimension mismatch");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n_);
  for (int r = 0; r < n_; ++r) {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      int c = col_[k];
      double v = val_[k];
      y[r] += v * x[c];
      if (c != r) y[c] += v * x[r];
    }
  }
  return y;
}

double SparseSymMatrix::diagonal(int i) const {
  for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
    if (col_[k] == i) return val_[k];
  return 0.0;
}

Eigen::SparseMatrix<double> SparseSymMatrix::to_eigen() const {
  std::vector<Eigen::Triplet<double>> ts;
  ts.reserve(2 * val_.size());
  for (int r = 0; r < n_; ++r) {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      ts.emplace_back(r, col_[k], val_[k]);
      if (col_[k] != r) ts.emplace_back(col_[k], r, val_[k]);
    }
  }
  Eigen::SparseMatrix<double> m(n_, n_);
  m.setFromTriplets(ts.begin(), ts.end());
  return m;
}

void SparseSymMatrix::save_triplets(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw SolverFailure("cannot open " + path);
  out.precision(17);
  for (int r = 0; r < n_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      out << r << " " << col_[k] << " " << val_[k] << "\n";
}

Eigen::VectorXd spmv(const SparseSymMatrix& A, const Eigen::VectorXd& x) {
  return A.multiply(x);
}

CholeskyFactor::CholeskyFactor(const SparseSymMatrix& A)
    : n_(A.size()),
      A_(A.to_eigen()),
      llt_(std::make_shared<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>()) {
  llt_->compute(A_);
  if (llt_->info() != Eigen::Success)
    throw NotPositiveDefinite("sparse Cholesky factorization failed");
}

Eigen::VectorXd CholeskyFactor::solve(const Eigen::VectorXd& b) const {
  if (b.size() != n_) throw DimensionMismatch("cholesky solve dimension mismatch");
  Eigen::VectorXd x = llt_->solve(b);
  x += llt_->solve(b - A_ * x); // one refinement step
  return x;
}

Eigen::VectorXd cholesky_solve(const SparseSymMatrix& A, const Eigen::VectorXd& b) {
  CholeskyFactor f(A);
  Eigen::VectorXd x = f.solve(b);
#ifndef NDEBUG
  double bn = b.norm();
  if (bn > 0.0) assert((A.multiply(x) - b).norm() / bn <= 1e-11);
#endif
  return x;
}

Eigen::VectorXd cg_solve(const SparseSymMatrix& A, const Eigen::VectorXd& b, double tol,
                         int max_iterations) {
  if (b.size() != A.size()) throw DimensionMismatch("cg dimension mismatch");
  int n = A.size();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  double bnorm = b.norm();
  if (bnorm == 0.0) return x;
  Eigen::VectorXd inv_diag(n);
  for (int i = 0; i < n; ++i) {
    double d = A.diagonal(i);
    if (d <= 0.0) throw NotPositiveDefinite("nonpositive diagonal in cg");
    inv_diag[i] = 1.0 / d;
  }
  Eigen::VectorXd r = b;
  Eigen::VectorXd z = inv_diag.asDiagonal() * r;
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd Ap = A.multiply(p);
    double alpha = rz / p.dot(Ap);
    x += alpha * p;
    r -= alpha * Ap;
    if (r.norm() <= tol * bnorm) return x;
    z = inv_diag.asDiagonal() * r;
    double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  throw CgStagnation("cg did not reach tolerance");
}

SparseSymMatrix restrict_indices(const SparseSymMatrix& full, const std::vector<int>& new_index,
                                 int new_n) {
  if (static_cast<int>(new_index.size()) != full.size())
    throw DimensionMismatch("index map size mismatch");
  std::vector<Triplet> ts;
  const auto& rp = full.row_ptr();
  const auto& cols = full.cols();
  const auto& vals = full.values();
  for (int r = 0; r < full.size(); ++r) {
    if (new_index[r] < 0) continue;
    for (int k = rp[r]; k < rp[r + 1]; ++k) {
      if (new_index[cols[k]] < 0) continue;
      ts.push_back({new_index[r], new_index[cols[k]], vals[k]});
    }
  }
  return SparseSymMatrix::from_triplets(new_n, std::move(ts));
}

} // namespace vemmg::numerics
