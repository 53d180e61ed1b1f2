#pragma once

#include <functional>

#include "vemmg/mesh.hpp"
#include "vemmg/numerics.hpp"

namespace vemmg::vem {

using ScalarField = std::function<double(const Vec2&)>;
using VectorField = std::function<Eigen::Vector2d(const Vec2&)>;

/// Element-local projection onto linears, orthogonal in the gradient inner
/// product and fixed by the boundary-mean constraint. Monomials are
/// {1, (x-xc)/hK, (y-yc)/hK} with xc the centroid and hK the diameter.
struct ElementProjector {
  int cell = -1;
  int n = 0;
  Vec2 center = Vec2::Zero();
  double h = 0.0;
  double area = 0.0;
  Eigen::MatrixXd pi_star; // 3 x N, dof values -> monomial coefficients
  Eigen::MatrixXd pi;      // N x N, dof values -> dof values of the projection

  Eigen::Vector3d coefficients(const Eigen::VectorXd& dofs) const { return pi_star * dofs; }
  double eval(const Eigen::Vector3d& c, const Vec2& x) const {
    return c[0] + c[1] * (x.x() - center.x()) / h + c[2] * (x.y() - center.y()) / h;
  }
  Eigen::Vector2d gradient(const Eigen::Vector3d& c) const {
    return {c[1] / h, c[2] / h};
  }
};

/// Gradient terms are computed exactly through boundary integration by parts;
/// edge integrals use the trapezoid rule, exact for the piecewise-linear traces.
ElementProjector elliptic_projector(const Polygon& K);

/// Gradient consistency term plus the unit-scaled vertex-value stabilization
/// applied to the non-projected part. Symmetric PSD with kernel = constants.
Eigen::MatrixXd local_stiffness(const ElementProjector& p);
Eigen::MatrixXd local_stiffness(const Polygon& K);

/// Loads use the piecewise-constant projection of f; the virtual basis
/// integral defaults to |K|/N per vertex unless explicit weights are given.
Eigen::VectorXd local_load(const Polygon& K, const ScalarField& f);
Eigen::VectorXd local_load(const Polygon& K, const ScalarField& f,
                           const Eigen::VectorXd& basis_integrals);

struct AssembleOptions {
  /// Per-cell integral of each basis function (e.g. from reconstructed
  /// bases); empty means the |K|/N closure.
  std::function<Eigen::VectorXd(int)> load_weights;
  /// Per-cell replacement for the local bilinear form (swaps the
  /// stabilization for an externally computed one); empty means the
  /// built-in form.
  std::function<Eigen::MatrixXd(int)> local_form;
};

/// Global problem on the free (interior) degrees of freedom; homogeneous
/// Dirichlet values are eliminated.
struct DiscreteSystem {
  int level = -1;
  numerics::SparseSymMatrix stiffness;
  Eigen::VectorXd load;
  std::vector<int> vertex_to_free; // -1 for boundary vertices
  std::vector<int> free_to_vertex;
  std::vector<ElementProjector> projectors;    // kept for downstream reuse
  std::vector<Eigen::MatrixXd> local_matrices; // kept for downstream reuse

  int n_free() const { return static_cast<int>(free_to_vertex.size()); }
};

DiscreteSystem assemble(const PolygonalMesh& mesh, const ScalarField& f,
                        const AssembleOptions& options = {});

/// Stiffness over all vertices, no elimination (kernel diagnostics).
numerics::SparseSymMatrix full_stiffness(const PolygonalMesh& mesh);

/// Zero-padded vertex vector from a free-dof vector.
Eigen::VectorXd expand_to_vertices(const DiscreteSystem& sys, const Eigen::VectorXd& u_free);

/// H1-seminorm distance between the projected discrete gradient and an exact
/// gradient field.
double h1_seminorm_error(const PolygonalMesh& mesh, const DiscreteSystem& sys,
                         const Eigen::VectorXd& u_free, const VectorField& grad_exact);

} // namespace vemmg::vem
