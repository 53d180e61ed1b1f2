#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "vemmg/mesh.hpp"
#include "vemmg/rbspace.hpp"
#include "vemmg/transfer.hpp"

using namespace vemmg;
using transfer::LevelContext;
using transfer::MassSolver;
using transfer::RestrictionMode;
using transfer::TransferOperator;

namespace {

constexpr int kDepth = 3;

struct Level {
  PolygonalMesh mesh;
  std::vector<rbspace::ElementRbBasis> bases;
  std::vector<int> v2f;
  int n_free = 0;
  numerics::SparseSymMatrix mass_free;
  std::shared_ptr<MassSolver> solver;

  LevelContext ctx() const { return {&mesh, &bases, &v2f, n_free}; }
};

rbspace::CompressorSet& compressors() {
  static rbspace::CompressorSet set;
  static bool ready = false;
  if (!ready) {
    rbspace::TrainingOptions opts;
    opts.n_snapshots = 12;
    opts.depth = kDepth;
    set.ensure({4, 5, 6, 7, 8, 9, 10}, 2, opts);
    ready = true;
  }
  return set;
}

Level make_level(PolygonalMesh mesh, int m = 1) {
  Level lvl;
  lvl.mesh = std::move(mesh);
  lvl.bases = rbspace::build_level_bases(lvl.mesh, compressors(), m, kDepth);
  lvl.v2f.assign(lvl.mesh.n_vertices(), -1);
  for (int v = 0; v < lvl.mesh.n_vertices(); ++v)
    if (!lvl.mesh.boundary_vertex[v]) lvl.v2f[v] = lvl.n_free++;
  auto full = rbspace::level_mass_matrix(lvl.mesh, lvl.bases);
  lvl.mass_free = numerics::restrict_indices(full, lvl.v2f, lvl.n_free);
  lvl.solver = std::make_shared<MassSolver>(lvl.mass_free);
  return lvl;
}

PolygonalMesh cartesian_mesh(int k) {
  PolygonalMesh m;
  for (int j = 0; j <= k; ++j)
    for (int i = 0; i <= k; ++i) m.vertices.push_back({double(i) / k, double(j) / k});
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) {
      int v0 = j * (k + 1) + i;
      m.cells.push_back({v0, v0 + 1, v0 + k + 2, v0 + k + 1});
    }
  m.boundary_vertex.assign(m.vertices.size(), 0);
  for (int v = 0; v < m.n_vertices(); ++v) {
    const Vec2& p = m.vertices[v];
    if (p.x() == 0.0 || p.x() == 1.0 || p.y() == 0.0 || p.y() == 1.0) m.boundary_vertex[v] = 1;
  }
  m.finalize();
  return m;
}

// half-plane clipper written independently of geometry::clip_convex
std::vector<Vec2> halfplane_clip(std::vector<Vec2> poly, const Vec2& a, const Vec2& b) {
  std::vector<Vec2> out;
  int m = static_cast<int>(poly.size());
  auto side = [&](const Vec2& p) {
    return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
  };
  for (int i = 0; i < m; ++i) {
    Vec2 p = poly[i], q = poly[(i + 1) % m];
    double dp = side(p), dq = side(q);
    if (dp >= 0.0) out.push_back(p);
    if ((dp > 0.0 && dq < 0.0) || (dp < 0.0 && dq > 0.0))
      out.push_back(p + dp / (dp - dq) * (q - p));
  }
  return out;
}

double oracle_entry(const Level& fine, const Level& coarse, int fine_vertex, int coarse_vertex) {
  const auto& rule = TriangleQuadrature::gauss_duffy(6);
  double total = 0.0;
  for (int f = 0; f < fine.mesh.n_cells(); ++f) {
    const auto& fcell = fine.mesh.cells[f];
    auto it = std::find(fcell.begin(), fcell.end(), fine_vertex);
    if (it == fcell.end()) continue;
    Eigen::VectorXd fdof = Eigen::VectorXd::Zero(fcell.size());
    fdof[it - fcell.begin()] = 1.0;
    for (int c = 0; c < coarse.mesh.n_cells(); ++c) {
      const auto& ccell = coarse.mesh.cells[c];
      auto jt = std::find(ccell.begin(), ccell.end(), coarse_vertex);
      if (jt == ccell.end()) continue;
      Eigen::VectorXd cdof = Eigen::VectorXd::Zero(ccell.size());
      cdof[jt - ccell.begin()] = 1.0;
      const auto& fb = fine.bases[f];
      const auto& cb = coarse.bases[c];
      for (size_t tf = 0; tf < fb.topo->triangles.size(); ++tf) {
        auto ftri = fb.physical_triangle(tf);
        for (size_t tc = 0; tc < cb.topo->triangles.size(); ++tc) {
          auto ctri = cb.physical_triangle(tc);
          std::vector<Vec2> frag = {ftri[0], ftri[1], ftri[2]};
          for (int e = 0; e < 3 && frag.size() >= 3; ++e)
            frag = halfplane_clip(frag, ctri[e], ctri[(e + 1) % 3]);
          if (frag.size() < 3) continue;
          for (size_t k = 2; k < frag.size(); ++k) {
            double a2 = (frag[k - 1] - frag[0]).x() * (frag[k] - frag[0]).y() -
                        (frag[k - 1] - frag[0]).y() * (frag[k] - frag[0]).x();
            if (a2 <= 0.0) continue;
            for (size_t q = 0; q < rule.weights.size(); ++q) {
              const auto& l = rule.barycentric[q];
              Vec2 x = l[0] * frag[0] + l[1] * frag[k - 1] + l[2] * frag[k];
              total += rule.weights[q] * 0.5 * a2 * fb.evaluate(fdof, x) * cb.evaluate(cdof, x);
            }
          }
        }
      }
    }
  }
  return total;
}

} // namespace

TEST_CASE("cross mass on identical meshes equals the level mass matrix") {
  Level lvl = make_level(generate_polygonal_mesh(16, 3, 60));
  // total fragment area check (|Omega| to 1e-8) runs inside cross_mass
  Eigen::SparseMatrix<double> b = transfer::cross_mass(lvl.ctx(), lvl.ctx());
  Eigen::SparseMatrix<double> m = lvl.mass_free.to_eigen();
  CHECK((Eigen::MatrixXd(b) - Eigen::MatrixXd(m)).lpNorm<Eigen::Infinity>() <= 1e-10);

  TransferOperator op(0, 0, b, lvl.solver, lvl.solver, RestrictionMode::Algebraic);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  Eigen::VectorXd v(lvl.n_free);
  for (int i = 0; i < lvl.n_free; ++i) v[i] = g(rng);
  CHECK((op.prolong(v) - v).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK((op.restrict_residual(v) - v).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("prolong: zero and defining property M_f x = B v") {
  Level coarse = make_level(generate_polygonal_mesh(16, 5, 60));
  Level fine = make_level(generate_polygonal_mesh(64, 6, 60));
  Eigen::SparseMatrix<double> b = transfer::cross_mass(coarse.ctx(), fine.ctx());
  TransferOperator op(0, 1, b, fine.solver, coarse.solver);

  CHECK(op.prolong(Eigen::VectorXd::Zero(coarse.n_free)).norm() == 0.0);
  CHECK(op.restrict_residual(Eigen::VectorXd::Zero(fine.n_free)).norm() == 0.0);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  Eigen::VectorXd v(coarse.n_free);
  for (int i = 0; i < coarse.n_free; ++i) v[i] = g(rng);
  Eigen::VectorXd x = op.prolong(v);
  Eigen::VectorXd lhs = fine.mass_free.multiply(x);
  Eigen::VectorXd rhs = b * v;
  CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());

  // L2 projection is non-expansive: |Pv|_{M_f} <= |v|_{M_c}
  double coarse_norm2 = v.dot(coarse.mass_free.multiply(v));
  double fine_norm2 = x.dot(lhs);
  CHECK(fine_norm2 <= coarse_norm2 + 1e-10);
}

TEST_CASE("restriction is the adjoint of prolongation (algebraic mode)") {
  Level coarse = make_level(generate_polygonal_mesh(8, 11, 60));
  Level fine = make_level(generate_polygonal_mesh(32, 12, 60));
  Eigen::SparseMatrix<double> b = transfer::cross_mass(coarse.ctx(), fine.ctx());
  TransferOperator op(0, 1, b, fine.solver, coarse.solver);

  std::mt19937_64 rng(13);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd r(fine.n_free), v(coarse.n_free);
    for (int i = 0; i < fine.n_free; ++i) r[i] = g(rng);
    for (int i = 0; i < coarse.n_free; ++i) v[i] = g(rng);
    double lhs = op.restrict_residual(r).dot(v);
    double rhs = r.dot(op.prolong(v));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("l2-projection restriction applies the coarse mass inverse") {
  Level coarse = make_level(generate_polygonal_mesh(8, 21, 60));
  Level fine = make_level(generate_polygonal_mesh(32, 22, 60));
  Eigen::SparseMatrix<double> b = transfer::cross_mass(coarse.ctx(), fine.ctx());
  TransferOperator alg(0, 1, b, fine.solver, coarse.solver, RestrictionMode::Algebraic);
  TransferOperator l2(0, 1, b, fine.solver, coarse.solver, RestrictionMode::L2Projection);
  Eigen::VectorXd r = Eigen::VectorXd::LinSpaced(fine.n_free, -1.0, 1.0);
  Eigen::VectorXd expected = coarse.solver->solve(alg.restrict_residual(r));
  CHECK((l2.restrict_residual(r) - expected).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("broad phase covers every intersecting cell pair") {
  PolygonalMesh coarse = generate_polygonal_mesh(32, 31, 60);
  PolygonalMesh fine = generate_polygonal_mesh(128, 32, 60);
  auto pairs = transfer::broad_phase_pairs(coarse, fine);
  std::set<std::pair<int, int>> have(pairs.begin(), pairs.end());
  for (int c = 0; c < coarse.n_cells(); ++c) {
    Polygon cp = coarse.cell_polygon(c);
    for (int f = 0; f < fine.n_cells(); ++f) {
      double area = 0.0;
      for (const Polygon& frag : intersect(cp, fine.cell_polygon(f))) area += frag.area();
      if (area > 1e-12) CHECK(have.count({c, f}) == 1);
    }
  }
}

TEST_CASE("cartesian 2x2 vs 4x4: entries match the independent supermesh oracle") {
  Level coarse = make_level(cartesian_mesh(2), 2);
  Level fine = make_level(cartesian_mesh(4), 2);
  REQUIRE(coarse.n_free == 1);
  Eigen::SparseMatrix<double> b = transfer::cross_mass(coarse.ctx(), fine.ctx());
  Eigen::MatrixXd bd(b);

  int coarse_center = -1;
  for (int v = 0; v < coarse.mesh.n_vertices(); ++v)
    if (coarse.v2f[v] == 0) coarse_center = v;
  for (int fine_vertex : {6, 7, 12}) { // interior vertices of the 5x5 grid
    REQUIRE(fine.v2f[fine_vertex] >= 0);
    double oracle = oracle_entry(fine, coarse, fine_vertex, coarse_center);
    CHECK(bd(fine.v2f[fine_vertex], 0) == doctest::Approx(oracle).epsilon(1e-6));
  }
}
