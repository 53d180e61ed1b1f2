#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "vemmg/mesh.hpp"
#include "vemmg/numerics.hpp"
#include "vemmg/rbspace.hpp"
#include "vemmg/transfer.hpp"
#include "vemmg/vem.hpp"

namespace vemmg::mg {

struct MgConfig {
  int m1 = 3; // pre-smoothing steps
  int m2 = 3; // post-smoothing steps
  double tol = 1e-8;
  int max_iterations = 200;
  double lambda_tol = 1e-3;
};

struct MgReport {
  int n_it = 0;
  std::vector<double> residual_history; // length n_it + 1
  double rho = 0.0;                     // geometric mean reduction per iteration
  std::vector<double> lambda;           // smoother constants per level (coarsest first)
  double wall_seconds = 0.0;
  bool converged = false;
};

/// Largest eigenvalue by power iteration (seeded start vector, Rayleigh
/// quotient stop on relative change), multiplied by 1.05 so the Richardson
/// step stays contractive under the estimation error.
double estimate_lambda(const numerics::SparseSymMatrix& A, double tol_rel = 1e-3);

/// Exactly `steps` updates z <- z + (g - A z) / lambda.
void richardson(const numerics::SparseSymMatrix& A, const Eigen::VectorXd& g, Eigen::VectorXd& z,
                double lambda, int steps);

/// exp(log(|r_n| / |r_0|) / n); EmptyHistory for fewer than two entries.
double convergence_factor(const std::vector<double>& history);

struct SetupOptions {
  int rb_complexity = 1;
  int rb_snapshots = 40;
  int rb_depth = 3;
  std::uint64_t rb_seed = 9001;
  std::string rb_cache_dir;
  transfer::RestrictionMode restriction = transfer::RestrictionMode::Algebraic;
  double lambda_tol = 1e-3;
  bool rb_exact_load = false;    // integrate the reconstructed basis in the load
  bool rb_stabilization = false; // assemble through the rb-side local form
};

/// Everything the cycle needs, built once per mesh hierarchy: level systems,
/// reconstructed bases, mass matrices, transfer operators, smoother
/// constants, and cached factorizations for every possible coarsest level.
struct Hierarchy {
  MeshHierarchy meshes;
  std::vector<vem::DiscreteSystem> systems;
  std::vector<std::vector<rbspace::ElementRbBasis>> bases;
  std::vector<numerics::SparseSymMatrix> mass; // free dofs
  std::vector<std::shared_ptr<transfer::MassSolver>> mass_solvers;
  std::vector<transfer::TransferOperator> transfers; // [j]: level j -> j+1
  std::vector<double> lambda;                        // [0] unused
  std::vector<std::shared_ptr<numerics::CholeskyFactor>> coarse_factors; // per level < finest

  int n_levels() const { return static_cast<int>(systems.size()); }
};

Hierarchy setup(const MeshHierarchy& meshes, const vem::ScalarField& f,
                const SetupOptions& options = {});

/// One W-cycle iteration at `level`, solving exactly at `base`.
Eigen::VectorXd w_cycle(const Hierarchy& hier, int level, int base, const Eigen::VectorXd& g,
                        const Eigen::VectorXd& z0, int m1, int m2);

/// Outer iteration on the finest `levels_used` levels from the zero initial
/// guess until the relative residual drops below tol.
std::pair<Eigen::VectorXd, MgReport> solve(const Hierarchy& hier, int levels_used,
                                           const MgConfig& config);

} // namespace vemmg::mg
