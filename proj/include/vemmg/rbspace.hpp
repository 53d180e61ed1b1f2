#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>

#include "vemmg/mesh.hpp"
#include "vemmg/numerics.hpp"
#include "vemmg/vem.hpp"

namespace vemmg::rbspace {

/// Geometry-independent refinement pattern shared by every N-gon at a given
/// depth: the centroid fan with each fan triangle split 4^r times. Nodes on
/// spokes and at the centroid are interior; polygon vertices and edge nodes
/// are boundary.
struct SubTriTopology {
  int n_poly_vertices = 0;
  int depth = 0;
  int lattice = 0; // 2^depth subdivisions per fan edge
  int n_nodes = 0;

  struct NodeRef {
    int fan;
    int b, c; // barycentric lattice coordinates; a = lattice - b - c
  };
  std::vector<NodeRef> node_refs;
  std::vector<std::array<int, 3>> triangles;
  std::vector<uint8_t> is_boundary;
  std::vector<int> boundary_nodes; // vertices first, then per-edge nodes
  std::vector<int> interior_nodes;
  std::vector<int> boundary_pos; // node -> index in boundary_nodes, else -1
  std::vector<int> interior_pos;
  std::vector<std::vector<int>> fan_grid; // (fan, lattice slot) -> node
  Eigen::MatrixXd boundary_hat;           // n_boundary x N trace of each vertex hat

  int n_boundary() const { return static_cast<int>(boundary_nodes.size()); }
  int n_interior() const { return static_cast<int>(interior_nodes.size()); }
  int grid_slot(int b, int c) const { return b * (lattice + 1) - b * (b - 1) / 2 + c; }

  /// Cached, shared across elements of the same class.
  static std::shared_ptr<const SubTriTopology> get(int n_poly_vertices, int depth);
};

/// Conforming P1 triangulation of one polygon with assembled Laplace and mass
/// operators. The stiffness matrix is invariant under translation, rotation
/// and scaling of the polygon, so coefficient vectors computed on a physical
/// element and on its normalized copy (centroid at the origin, unit diameter)
/// coincide.
struct SubTriangulation {
  std::shared_ptr<const SubTriTopology> topo;
  Eigen::MatrixX2d nodes;
  Eigen::SparseMatrix<double> stiffness; // full
  Eigen::SparseMatrix<double> mass;      // full
  Eigen::SparseMatrix<double> a_ii;      // interior x interior stiffness block
  Eigen::SparseMatrix<double> a_ib;      // interior x boundary stiffness block
};

SubTriangulation build_subtriangulation(const Polygon& K, int depth);

/// Translates the centroid to the origin and scales the diameter to one.
Polygon normalized_polygon(const Polygon& K);

/// Nodal coefficients (n_nodes x N) of the interior Laplace solves with the
/// vertex hat traces as boundary data.
Eigen::MatrixXd harmonic_extension_hifi(const SubTriangulation& st);
Eigen::MatrixXd harmonic_extension_hifi(const Polygon& K, int depth);

/// POD compression of the non-polynomial components of the hat extensions
/// over a family of perturbed regular N-gons, orthonormal in the
/// H1-seminorm of the reference (regular N-gon) sub-triangulation.
struct RbCompressor {
  int n_poly_vertices = 0;
  int depth = 0;
  int n_snapshots = 0;
  std::uint64_t seed = 0;
  Eigen::VectorXd singular_values; // all, non-increasing
  Eigen::MatrixXd modes;           // n_interior x kept
  bool rank_deficient = false;     // fewer nonzero singular values than requested

  int kept() const { return static_cast<int>(modes.cols()); }

  void save(const std::string& path) const;
  static RbCompressor load(const std::string& path);
};

RbCompressor train_compressor(int n_poly_vertices, int n_snapshots, int m, int depth,
                              std::uint64_t seed);

/// The training family: index 0 is the regular N-gon, higher indices are
/// independently reproducible perturbations of it (vertices displaced
/// uniformly in a disk of radius 0.25 x circumradius). Not normalized.
Polygon snapshot_polygon(int n_poly_vertices, int index, std::uint64_t seed);

/// Explicit piecewise-linear representation of the N reconstructed basis
/// functions of one polygon.
class ElementRbBasis {
 public:
  int cell = -1;
  int n = 0;      // polygon vertex count
  int m_used = 0; // rb modes used (0 for triangles)
  std::shared_ptr<const SubTriTopology> topo;
  Eigen::MatrixX2d nodes; // physical node positions
  Vec2 fan_center = Vec2::Zero();
  std::vector<Vec2> poly_verts;
  double scale = 0.0; // polygon diameter
  Eigen::MatrixXd pi_star;
  Eigen::MatrixXd pi;
  double grad_gram = 0.0;    // |K| / h_K^2
  Eigen::MatrixXd nodal;     // n_nodes x N values of e^rb_i
  Eigen::VectorXd integrals; // per-basis integral over K
  Eigen::MatrixXd local_mass;

  struct Located {
    int tri;
    Eigen::Vector3d lambda;
  };
  /// Fan-sector lookup, then the lattice cell inside the fan triangle.
  Located locate(const Vec2& x) const; // throws PointOutsideElement

  /// v^rb(x) = (projected linear)(x) + sum_i c_i etilde_i(x) with
  /// c = (I - Pi) dofs.
  double evaluate(const Eigen::VectorXd& dofs, const Vec2& x) const;

  /// Values of all N basis functions at a located point.
  Eigen::VectorXd basis_values(const Located& loc) const;

  std::array<Vec2, 3> physical_triangle(int tri) const;

  /// Nodal values of etilde_i = e^rb_i - (projected linear of hat i).
  Eigen::MatrixXd etilde_nodal() const;
};

/// Online reduced solve per element class: Galerkin projection of the local
/// harmonic problems onto the leading m POD modes. Triangles need no
/// compressor (their hats are the linears themselves).
ElementRbBasis rb_basis_for_element(const Polygon& K, const RbCompressor* compressor, int m,
                                    int depth);

/// Local bilinear form evaluated through the reconstructed-space identity:
/// gradient consistency plus the vertex-value stabilization of the dof
/// coefficient differences. Coincides with the standard local stiffness.
Eigen::MatrixXd local_rb_form(const ElementRbBasis& basis);

struct TrainingOptions {
  int n_snapshots = 40;
  int depth = 3;
  std::uint64_t seed = 9001;
  std::string cache_dir; // optional compressor cache
};

/// One trained compressor per vertex-count class.
class CompressorSet {
 public:
  void ensure(const std::set<int>& classes, int max_m, const TrainingOptions& options);
  const RbCompressor* find(int n_poly_vertices) const;

 private:
  std::map<int, RbCompressor> by_class_;
};

/// Reconstructed bases for every cell of a mesh (parallel over cells).
std::vector<ElementRbBasis> build_level_bases(const PolygonalMesh& mesh,
                                              const CompressorSet& compressors, int m,
                                              int depth);

/// Global mass matrix of the reconstructed space over all vertices.
numerics::SparseSymMatrix level_mass_matrix(const PolygonalMesh& mesh,
                                            const std::vector<ElementRbBasis>& bases);

} // namespace vemmg::rbspace
