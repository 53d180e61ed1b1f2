#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vemmg/geometry.hpp"

namespace vemmg {

/// Conforming polygonal tessellation of the unit square. Cells list their
/// vertices counterclockwise; every interior edge is shared by exactly two
/// cells.
struct PolygonalMesh {
  std::vector<Vec2> vertices;
  std::vector<std::vector<int>> cells;
  std::vector<uint8_t> boundary_vertex;

  // per-cell caches, filled by finalize()
  std::vector<double> cell_area;
  std::vector<Vec2> cell_centroid;
  std::vector<double> cell_diameter;
  double h = 0.0; // max cell diameter

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_cells() const { return static_cast<int>(cells.size()); }
  Polygon cell_polygon(int c) const;

  /// Recomputes the per-cell caches and h.
  void finalize();
};

/// Sequence of independently generated meshes, coarse to fine, with the
/// element-count ratio 1/4 between consecutive levels.
struct MeshHierarchy {
  std::vector<PolygonalMesh> levels;
  std::vector<double> h;          // per level
  double quasi_uniformity_c = 0.0; // min over j of h_j / h_{j-1}

  int n_levels() const { return static_cast<int>(levels.size()); }
};

/// Lloyd-relaxed clipped Voronoi tessellation of (0,1)^2.
/// Deterministic for fixed arguments; retries internally with a perturbed
/// seed (up to 5 times) if the construction degenerates.
PolygonalMesh generate_polygonal_mesh(int n_cells, std::uint64_t seed,
                                      int lloyd_iterations = 100);

/// Levels with counts finest_count / 4^(J-j), each from its own derived seed
/// (seed*31 + j). finest_count must be divisible by 4^(levels-1).
MeshHierarchy build_hierarchy(int finest_count, int levels, std::uint64_t seed);

struct ValidationReport {
  struct Item {
    std::string what;
    int cell = -1; // -1 when not tied to a cell
  };
  std::vector<Item> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks tiling, orientation, star-shapedness, edge conformity, boundary
/// placement, and spot-checks pairwise interior overlap.
ValidationReport validate(const PolygonalMesh& m);

/// Versioned JSON, lossless round trip (format_version 1).
void save_mesh(const PolygonalMesh& m, const std::string& path);
PolygonalMesh load_mesh(const std::string& path);

} // namespace vemmg
