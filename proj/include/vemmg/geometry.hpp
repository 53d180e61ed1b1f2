#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vemmg/errors.hpp"

namespace vemmg {

using Vec2 = Eigen::Vector2d;

/// Simple planar polygon with counterclockwise vertex order.
/// Construction normalizes orientation and rejects degenerate input:
/// fewer than 3 vertices, |area| < 1e-14, or consecutive vertices closer
/// than 1e-12 * diameter.
class Polygon {
 public:
  explicit Polygon(std::vector<Vec2> vertices);

  int size() const { return static_cast<int>(verts_.size()); }
  const Vec2& vertex(int i) const { return verts_[i]; }
  const std::vector<Vec2>& vertices() const { return verts_; }

  double area() const { return area_; }
  Vec2 centroid() const { return centroid_; }
  double diameter() const { return diameter_; }

  bool is_convex() const;
  /// Star-shaped with respect to the centroid: every centroid fan triangle
  /// is non-negatively oriented.
  bool star_shaped() const;
  /// Point-in-polygon test; points within tol of the boundary count as inside.
  bool contains(const Vec2& p, double tol = 1e-10) const;

 private:
  std::vector<Vec2> verts_;
  double area_ = 0.0;
  Vec2 centroid_ = Vec2::Zero();
  double diameter_ = 0.0;
};

struct Triangle {
  Vec2 a, b, c;
  double area() const;
  Vec2 centroid() const { return (a + b + c) / 3.0; }
};

double polygon_signed_area(const std::vector<Vec2>& pts);
double polygon_diameter(const std::vector<Vec2>& pts);
Vec2 polygon_centroid(const std::vector<Vec2>& pts);

double area(const Polygon& p);
Vec2 centroid(const Polygon& p);
double diameter(const Polygon& p);

/// Partition of p into triangles whose areas sum to area(p).
/// Centroid fan for star-shaped polygons, ear clipping otherwise.
std::vector<Triangle> triangulate(const Polygon& p);

/// Clips `subject` against a convex counterclockwise polygon `clip`
/// (Sutherland-Hodgman). Points within eps of a clip edge are kept.
/// Returns the clipped vertex chain; fewer than 3 points means empty.
std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject,
                              const std::vector<Vec2>& clip, double eps);

/// Pieces of p ∩ q, each a valid polygon. Convex inputs produce a single
/// component; otherwise the triangulations are clipped pairwise and the
/// fragments are returned unmerged (their total measure is what downstream
/// quadrature consumes). Fragments below 1e-12 * min(|p|,|q|) are discarded.
std::vector<Polygon> intersect(const Polygon& p, const Polygon& q);

/// Quadrature rule on the reference triangle in barycentric coordinates,
/// weights normalized to sum to one.
struct TriangleQuadrature {
  std::vector<Eigen::Vector3d> barycentric;
  std::vector<double> weights;
  int order = 0; // polynomial degree integrated exactly

  /// Cached rules for order 1..4 (all weights positive). UnsupportedOrder otherwise.
  static const TriangleQuadrature& get(int order);
  /// Collapsed Gauss-Legendre product rule, exact to the requested degree.
  static TriangleQuadrature gauss_duffy(int degree);
};

struct QuadPoint {
  Vec2 x;
  double w;
};

/// Physical-space quadrature on a polygon: triangulate, then map the
/// reference rule. Weight sum equals area(p).
std::vector<QuadPoint> quadrature_on_polygon(const Polygon& p, int order);

/// Gauss-Legendre nodes/weights on [0,1] (weights sum to 1).
void gauss_legendre_01(int n, std::vector<double>& x, std::vector<double>& w);

} // namespace vemmg
