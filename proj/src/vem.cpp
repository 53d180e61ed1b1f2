#include "vemmg/vem.hpp"

#include <cmath>

#include "vemmg/parallel.hpp"

namespace vemmg::vem {

ElementProjector elliptic_projector(const Polygon& K) {
  ElementProjector p;
  p.n = K.size();
  p.center = K.centroid();
  p.h = K.diameter();
  p.area = K.area();
  int n = p.n;

  if (p.area / (p.h * p.h) < 1e-12) throw SingularProjector("flat element");

  auto m1 = [&](const Vec2& x) { return (x.x() - p.center.x()) / p.h; };
  auto m2 = [&](const Vec2& x) { return (x.y() - p.center.y()) / p.h; };

  double perimeter = 0.0;
  for (int i = 0; i < n; ++i) perimeter += (K.vertex((i + 1) % n) - K.vertex(i)).norm();

  Eigen::Matrix3d G = Eigen::Matrix3d::Zero();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(3, n);
  G(0, 0) = 1.0;
  G(1, 1) = G(2, 2) = p.area / (p.h * p.h);
  // boundary-mean row, trapezoid rule per edge (exact for linears)
  for (int i = 0; i < n; ++i) {
    const Vec2& a = K.vertex(i);
    const Vec2& b = K.vertex((i + 1) % n);
    double len = (b - a).norm();
    G(0, 1) += len * 0.5 * (m1(a) + m1(b)) / perimeter;
    G(0, 2) += len * 0.5 * (m2(a) + m2(b)) / perimeter;
    B(0, i) += 0.5 * len / perimeter;
    B(0, (i + 1) % n) += 0.5 * len / perimeter;
    // (grad m . n_e) |e| for the integrated-by-parts gradient rows
    Vec2 t = b - a;
    Vec2 n_scaled{t.y(), -t.x()}; // outward normal times |e| for CCW polygons
    double fx = n_scaled.x() / p.h;
    double fy = n_scaled.y() / p.h;
    B(1, i) += 0.5 * fx;
    B(1, (i + 1) % n) += 0.5 * fx;
    B(2, i) += 0.5 * fy;
    B(2, (i + 1) % n) += 0.5 * fy;
  }

  Eigen::FullPivLU<Eigen::Matrix3d> lu(G);
  if (!lu.isInvertible()) throw SingularProjector("projection system singular");
  p.pi_star = lu.solve(B);

  Eigen::MatrixXd D(n, 3);
  for (int i = 0; i < n; ++i) {
    D(i, 0) = 1.0;
    D(i, 1) = m1(K.vertex(i));
    D(i, 2) = m2(K.vertex(i));
  }
  p.pi = D * p.pi_star;
  return p;
}

Eigen::MatrixXd local_stiffness(const ElementProjector& p) {
  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  H(1, 1) = H(2, 2) = p.area / (p.h * p.h);
  Eigen::MatrixXd consistency = p.pi_star.transpose() * H * p.pi_star;
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(p.n, p.n) - p.pi;
  return consistency + d.transpose() * d;
}

Eigen::MatrixXd local_stiffness(const Polygon& K) {
  return local_stiffness(elliptic_projector(K));
}

namespace {

double mean_value(const Polygon& K, const ScalarField& f) {
  double acc = 0.0;
  for (const QuadPoint& q : quadrature_on_polygon(K, 2)) acc += q.w * f(q.x);
  return acc / K.area();
}

} // namespace

Eigen::VectorXd local_load(const Polygon& K, const ScalarField& f) {
  double pif = mean_value(K, f);
  return Eigen::VectorXd::Constant(K.size(), pif * K.area() / K.size());
}

Eigen::VectorXd local_load(const Polygon& K, const ScalarField& f,
                           const Eigen::VectorXd& basis_integrals) {
  if (basis_integrals.size() != K.size())
    throw DimensionMismatch("basis integral count does not match vertex count");
  return mean_value(K, f) * basis_integrals;
}

DiscreteSystem assemble(const PolygonalMesh& mesh, const ScalarField& f,
                        const AssembleOptions& options) {
  DiscreteSystem sys;
  int nv = mesh.n_vertices();
  int nc = mesh.n_cells();
  sys.vertex_to_free.assign(nv, -1);
  for (int v = 0; v < nv; ++v) {
    if (mesh.boundary_vertex[v]) continue;
    sys.vertex_to_free[v] = static_cast<int>(sys.free_to_vertex.size());
    sys.free_to_vertex.push_back(v);
  }

  sys.projectors.resize(nc);
  sys.local_matrices.resize(nc);
  std::vector<Eigen::VectorXd> local_loads(nc);
  std::vector<std::string> failures(nc);
  parallel_for(nc, [&](int c) {
    try {
      Polygon K = mesh.cell_polygon(c);
      sys.projectors[c] = elliptic_projector(K);
      sys.projectors[c].cell = c;
      sys.local_matrices[c] =
          options.local_form ? options.local_form(c) : local_stiffness(sys.projectors[c]);
      local_loads[c] = options.load_weights ? local_load(K, f, options.load_weights(c))
                                            : local_load(K, f);
    } catch (const std::exception& e) {
      failures[c] = e.what();
    }
  });
  for (int c = 0; c < nc; ++c)
    if (!failures[c].empty())
      throw SingularProjector("cell " + std::to_string(c) + ": " + failures[c]);

  int nf = sys.n_free();
  std::vector<numerics::Triplet> triplets;
  sys.load = Eigen::VectorXd::Zero(nf);
  for (int c = 0; c < nc; ++c) {
    const auto& cell = mesh.cells[c];
    int n = static_cast<int>(cell.size());
    const Eigen::MatrixXd& A = sys.local_matrices[c];
    for (int i = 0; i < n; ++i) {
      int gi = sys.vertex_to_free[cell[i]];
      if (gi < 0) continue;
      sys.load[gi] += local_loads[c][i];
      for (int j = 0; j <= i; ++j) {
        int gj = sys.vertex_to_free[cell[j]];
        if (gj < 0) continue;
        triplets.push_back({gi, gj, A(i, j)});
      }
    }
  }
  sys.stiffness = numerics::SparseSymMatrix::from_triplets(nf, std::move(triplets));
  return sys;
}

numerics::SparseSymMatrix full_stiffness(const PolygonalMesh& mesh) {
  std::vector<numerics::Triplet> triplets;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    Eigen::MatrixXd A = local_stiffness(mesh.cell_polygon(c));
    const auto& cell = mesh.cells[c];
    for (int i = 0; i < static_cast<int>(cell.size()); ++i)
      for (int j = 0; j <= i; ++j) triplets.push_back({cell[i], cell[j], A(i, j)});
  }
  return numerics::SparseSymMatrix::from_triplets(mesh.n_vertices(), std::move(triplets));
}

Eigen::VectorXd expand_to_vertices(const DiscreteSystem& sys, const Eigen::VectorXd& u_free) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(sys.vertex_to_free.size());
  for (int k = 0; k < sys.n_free(); ++k) u[sys.free_to_vertex[k]] = u_free[k];
  return u;
}

double h1_seminorm_error(const PolygonalMesh& mesh, const DiscreteSystem& sys,
                         const Eigen::VectorXd& u_free, const VectorField& grad_exact) {
  Eigen::VectorXd u = expand_to_vertices(sys, u_free);
  double err2 = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto& cell = mesh.cells[c];
    Eigen::VectorXd dofs(cell.size());
    for (size_t i = 0; i < cell.size(); ++i) dofs[i] = u[cell[i]];
    const ElementProjector& p = sys.projectors[c];
    Eigen::Vector2d gh = p.gradient(p.coefficients(dofs));
    for (const QuadPoint& q : quadrature_on_polygon(mesh.cell_polygon(c), 4))
      err2 += q.w * (gh - grad_exact(q.x)).squaredNorm();
  }
  return std::sqrt(err2);
}

} // namespace vemmg::vem
