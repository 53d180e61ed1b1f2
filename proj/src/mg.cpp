#include "vemmg/mg.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <set>

namespace vemmg::mg {

double estimate_lambda(const numerics::SparseSymMatrix& A, double tol_rel) {
  int n = A.size();
  std::mt19937_64 rng(7777);
  std::normal_distribution<double> g;
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = g(rng);
  x.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 10000; ++it) {
    Eigen::VectorXd y = A.multiply(x);
    double rayleigh = x.dot(y);
    double ynorm = y.norm();
    if (ynorm == 0.0) return 1.05 * 0.0; // zero matrix
    x = y / ynorm;
    if (it > 0 && std::abs(rayleigh - lambda) <= tol_rel * std::abs(rayleigh))
      return 1.05 * rayleigh;
    lambda = rayleigh;
  }
  throw NonConvergence("power iteration did not settle");
}

void richardson(const numerics::SparseSymMatrix& A, const Eigen::VectorXd& g, Eigen::VectorXd& z,
                double lambda, int steps) {
  for (int s = 0; s < steps; ++s) z += (g - A.multiply(z)) / lambda;
}

double convergence_factor(const std::vector<double>& history) {
  if (history.size() < 2) throw EmptyHistory("need at least two residual norms");
  double r0 = history.front();
  double rn = history.back();
  if (r0 == 0.0 || rn == 0.0) return 0.0;
  int n = static_cast<int>(history.size()) - 1;
  return std::exp(std::log(rn / r0) / n);
}

Hierarchy setup(const MeshHierarchy& meshes, const vem::ScalarField& f,
                const SetupOptions& options) {
  Hierarchy hier;
  hier.meshes = meshes;
  int levels = hier.meshes.n_levels();
  if (levels < 1) throw std::invalid_argument("empty mesh hierarchy");

  std::set<int> classes;
  for (const PolygonalMesh& mesh : hier.meshes.levels)
    for (const auto& cell : mesh.cells) classes.insert(static_cast<int>(cell.size()));
  rbspace::CompressorSet compressors;
  rbspace::TrainingOptions train;
  train.n_snapshots = options.rb_snapshots;
  train.depth = options.rb_depth;
  train.seed = options.rb_seed;
  train.cache_dir = options.rb_cache_dir;
  compressors.ensure(classes, options.rb_complexity, train);

  hier.bases.resize(levels);
  hier.systems.resize(levels);
  hier.mass.resize(levels);
  hier.mass_solvers.resize(levels);
  for (int l = 0; l < levels; ++l) {
    const PolygonalMesh& mesh = hier.meshes.levels[l];
    hier.bases[l] =
        rbspace::build_level_bases(mesh, compressors, options.rb_complexity, options.rb_depth);
    vem::AssembleOptions assemble;
    const auto& level_bases = hier.bases[l];
    if (options.rb_exact_load)
      assemble.load_weights = [&level_bases](int c) { return level_bases[c].integrals; };
    if (options.rb_stabilization)
      assemble.local_form = [&level_bases](int c) {
        return rbspace::local_rb_form(level_bases[c]);
      };
    hier.systems[l] = vem::assemble(mesh, f, assemble);
    hier.systems[l].level = l;
    auto full_mass = rbspace::level_mass_matrix(mesh, hier.bases[l]);
    hier.mass[l] = numerics::restrict_indices(full_mass, hier.systems[l].vertex_to_free,
                                              hier.systems[l].n_free());
    hier.mass_solvers[l] = std::make_shared<transfer::MassSolver>(hier.mass[l]);
  }

  for (int l = 0; l + 1 < levels; ++l) {
    transfer::LevelContext coarse{&hier.meshes.levels[l], &hier.bases[l],
                                  &hier.systems[l].vertex_to_free, hier.systems[l].n_free()};
    transfer::LevelContext fine{&hier.meshes.levels[l + 1], &hier.bases[l + 1],
                                &hier.systems[l + 1].vertex_to_free,
                                hier.systems[l + 1].n_free()};
    hier.transfers.emplace_back(l, l + 1, transfer::cross_mass(coarse, fine),
                                hier.mass_solvers[l + 1], hier.mass_solvers[l],
                                options.restriction);
  }

  hier.lambda.assign(levels, 0.0);
  for (int l = 1; l < levels; ++l)
    hier.lambda[l] = estimate_lambda(hier.systems[l].stiffness, options.lambda_tol);

  // every level may act as the coarsest of a sub-hierarchy
  hier.coarse_factors.resize(levels);
  for (int l = 0; l < levels; ++l)
    hier.coarse_factors[l] =
        std::make_shared<numerics::CholeskyFactor>(hier.systems[l].stiffness);
  return hier;
}

Eigen::VectorXd w_cycle(const Hierarchy& hier, int level, int base, const Eigen::VectorXd& g,
                        const Eigen::VectorXd& z0, int m1, int m2) {
  if (level == base) return hier.coarse_factors[base]->solve(g);

  const numerics::SparseSymMatrix& A = hier.systems[level].stiffness;
  double lambda = hier.lambda[level];
  Eigen::VectorXd z = z0;
  richardson(A, g, z, lambda, m1);

  const transfer::TransferOperator& op = hier.transfers[level - 1];
  Eigen::VectorXd r_coarse = op.restrict_residual(g - A.multiply(z));
  Eigen::VectorXd e_bar =
      w_cycle(hier, level - 1, base, r_coarse,
              Eigen::VectorXd::Zero(hier.systems[level - 1].n_free()), m1, m2);
  Eigen::VectorXd e = w_cycle(hier, level - 1, base, r_coarse, e_bar, m1, m2);
  z += op.prolong(e);

  richardson(A, g, z, lambda, m2);
  return z;
}

std::pair<Eigen::VectorXd, MgReport> solve(const Hierarchy& hier, int levels_used,
                                           const MgConfig& config) {
  if (levels_used < 1 || levels_used > hier.n_levels())
    throw std::invalid_argument("levels_used out of range");
  int top = hier.n_levels() - 1;
  int base = hier.n_levels() - levels_used;
  if (base != top && !hier.coarse_factors[base])
    throw SolverFailure("no factorization cached for the coarsest level");

  const numerics::SparseSymMatrix& A = hier.systems[top].stiffness;
  const Eigen::VectorXd& f = hier.systems[top].load;

  MgReport report;
  for (int l = base; l <= top; ++l) report.lambda.push_back(hier.lambda[l]);

  auto t0 = std::chrono::steady_clock::now();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(A.size());
  double r0 = f.norm();
  report.residual_history.push_back(r0);
  for (int k = 1; k <= config.max_iterations; ++k) {
    u = levels_used == 1 ? hier.coarse_factors[base]->solve(f)
                         : w_cycle(hier, top, base, f, u, config.m1, config.m2);
    double rk = (f - A.multiply(u)).norm();
    report.residual_history.push_back(rk);
    report.n_it = k;
    if (r0 == 0.0 ? rk == 0.0 : rk / r0 < config.tol) {
      report.converged = true;
      break;
    }
  }
  report.rho = convergence_factor(report.residual_history);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(u), std::move(report)};
}

} // namespace vemmg::mg
