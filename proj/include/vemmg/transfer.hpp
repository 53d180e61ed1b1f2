#pragma once

#include <memory>
#include <optional>

#include "vemmg/mesh.hpp"
#include "vemmg/numerics.hpp"
#include "vemmg/rbspace.hpp"

namespace vemmg::transfer {

enum class RestrictionMode { Algebraic, L2Projection };

/// What the cross-level operators need to know about one level.
struct LevelContext {
  const PolygonalMesh* mesh = nullptr;
  const std::vector<rbspace::ElementRbBasis>* bases = nullptr;
  const std::vector<int>* vertex_to_free = nullptr;
  int n_free = 0;
};

/// Candidate cell pairs (coarse, fine) from the bounding-box bucket index.
/// Guaranteed to contain every pair with positive intersection area.
std::vector<std::pair<int, int>> broad_phase_pairs(const PolygonalMesh& coarse,
                                                   const PolygonalMesh& fine);

/// Cross mass B[a,p] = integral of (fine basis a)(coarse basis p) over Omega,
/// free dofs only. Narrow phase clips at sub-triangle granularity so the
/// piecewise-linear product is integrated exactly; throws CoverageGap if the
/// fragment areas do not add up to |Omega|.
Eigen::SparseMatrix<double> cross_mass(const LevelContext& coarse, const LevelContext& fine);

/// Mass solves: sparse Cholesky up to 20000 dofs, diagonally preconditioned
/// CG (relative residual 1e-12) beyond.
class MassSolver {
 public:
  explicit MassSolver(numerics::SparseSymMatrix m);
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  const numerics::SparseSymMatrix& matrix() const { return m_; }
  int size() const { return m_.size(); }

 private:
  numerics::SparseSymMatrix m_;
  std::optional<numerics::CholeskyFactor> factor_;
};

/// Intergrid operators between consecutive levels: the prolongation is the
/// L2 projection between the reconstructed spaces (M_fine x = B v), the
/// residual restriction its algebraic adjoint by default.
class TransferOperator {
 public:
  TransferOperator(int coarse_level, int fine_level, Eigen::SparseMatrix<double> cross,
                   std::shared_ptr<const MassSolver> fine_mass,
                   std::shared_ptr<const MassSolver> coarse_mass,
                   RestrictionMode mode = RestrictionMode::Algebraic);

  Eigen::VectorXd prolong(const Eigen::VectorXd& v_coarse) const;
  Eigen::VectorXd restrict_residual(const Eigen::VectorXd& r_fine) const;

  const Eigen::SparseMatrix<double>& cross() const { return cross_; }
  RestrictionMode mode() const { return mode_; }
  int coarse_level() const { return coarse_level_; }
  int fine_level() const { return fine_level_; }

 private:
  int coarse_level_ = -1;
  int fine_level_ = -1;
  Eigen::SparseMatrix<double> cross_; // fine_free x coarse_free
  std::shared_ptr<const MassSolver> fine_mass_;
  std::shared_ptr<const MassSolver> coarse_mass_;
  RestrictionMode mode_ = RestrictionMode::Algebraic;
};

} // namespace vemmg::transfer
