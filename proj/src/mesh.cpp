#include "vemmg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <random>
#include <unordered_map>

#include <json.hpp>

namespace vemmg {

Polygon PolygonalMesh::cell_polygon(int c) const {
  std::vector<Vec2> pts;
  pts.reserve(cells[c].size());
  for (int v : cells[c]) pts.push_back(vertices[v]);
  return Polygon(std::move(pts));
}

void PolygonalMesh::finalize() {
  int nc = n_cells();
  cell_area.resize(nc);
  cell_centroid.resize(nc);
  cell_diameter.resize(nc);
  h = 0.0;
  for (int c = 0; c < nc; ++c) {
    std::vector<Vec2> pts;
    pts.reserve(cells[c].size());
    for (int v : cells[c]) pts.push_back(vertices[v]);
    cell_area[c] = polygon_signed_area(pts);
    cell_centroid[c] = polygon_centroid(pts);
    cell_diameter[c] = polygon_diameter(pts);
    h = std::max(h, cell_diameter[c]);
  }
}

namespace {

// keep the half-plane n . (x - p0) <= 0
std::vector<Vec2> clip_halfplane(const std::vector<Vec2>& poly, const Vec2& p0, const Vec2& n) {
  std::vector<Vec2> out;
  out.reserve(poly.size() + 1);
  int m = static_cast<int>(poly.size());
  for (int i = 0; i < m; ++i) {
    const Vec2& prev = poly[(i + m - 1) % m];
    const Vec2& cur = poly[i];
    double dp = n.dot(prev - p0);
    double dc = n.dot(cur - p0);
    bool prev_in = dp <= 0.0;
    bool cur_in = dc <= 0.0;
    if (cur_in) {
      if (!prev_in) out.push_back(prev + (dp / (dp - dc)) * (cur - prev));
      out.push_back(cur);
    } else if (prev_in) {
      out.push_back(prev + (dp / (dp - dc)) * (cur - prev));
    }
  }
  return out;
}

double max_dist2_to_vertices(const Vec2& s, const std::vector<Vec2>& poly) {
  double d2 = 0.0;
  for (const Vec2& v : poly) d2 = std::max(d2, (v - s).squaredNorm());
  return d2;
}

// Clipped Voronoi cells of the seed set inside the unit square. Neighbor
// candidates come from a uniform bucket grid, processed by increasing
// distance until the remaining seeds cannot cut the current cell
// (|s_j - s_i| > 2 max_v |v - s_i|).
class VoronoiBuilder {
 public:
  explicit VoronoiBuilder(const std::vector<Vec2>& seeds) : seeds_(seeds) {
    g_ = std::max(1, static_cast<int>(std::floor(std::sqrt(double(seeds.size())))));
    bins_.assign(g_ * g_, {});
    for (int i = 0; i < static_cast<int>(seeds.size()); ++i) bins_[bin_of(seeds[i])].push_back(i);
  }

  std::vector<Vec2> cell(int i) const {
    static const std::vector<Vec2> square = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    std::vector<Vec2> poly = square;
    const Vec2& s = seeds_[i];
    double sec2 = 4.0 * max_dist2_to_vertices(s, poly);

    using Cand = std::pair<double, int>;
    std::priority_queue<Cand, std::vector<Cand>, std::greater<Cand>> heap;
    int bx = bin_x(s), by = bin_y(s);
    int ring = 0;
    int max_ring = 2 * g_ + 2;
    auto ring_lb = [&](int k) {
      double d = (k - 1) * (1.0 / g_);
      return k <= 0 ? 0.0 : d * d;
    };
    auto gather = [&](int k) {
      for (int dx = -k; dx <= k; ++dx) {
        for (int dy = -k; dy <= k; ++dy) {
          if (std::max(std::abs(dx), std::abs(dy)) != k) continue;
          int x = bx + dx, y = by + dy;
          if (x < 0 || x >= g_ || y < 0 || y >= g_) continue;
          for (int j : bins_[x * g_ + y])
            if (j != i) heap.push({(seeds_[j] - s).squaredNorm(), j});
        }
      }
    };
    // The final cell is an intersection of half-planes, so processing order
    // only matters for how fast the security radius shrinks: clip the nearest
    // known candidate first and fetch another bucket ring only when no
    // processable candidate remains.
    for (;;) {
      if (!heap.empty() && heap.top().first <= sec2) {
        auto [d2, j] = heap.top();
        heap.pop();
        if (d2 < 1e-30) throw GenerationFailure("coincident seed points");
        Vec2 mid = 0.5 * (s + seeds_[j]);
        poly = clip_halfplane(poly, mid, seeds_[j] - s);
        if (poly.size() < 3) throw GenerationFailure("voronoi cell collapsed");
        sec2 = 4.0 * max_dist2_to_vertices(s, poly);
        continue;
      }
      if (ring <= max_ring && ring_lb(ring) <= sec2) {
        gather(ring++);
        continue;
      }
      break;
    }
    return poly;
  }

 private:
  int bin_x(const Vec2& p) const {
    return std::clamp(static_cast<int>(p.x() * g_), 0, g_ - 1);
  }
  int bin_y(const Vec2& p) const {
    return std::clamp(static_cast<int>(p.y() * g_), 0, g_ - 1);
  }
  int bin_of(const Vec2& p) const { return bin_x(p) * g_ + bin_y(p); }

  const std::vector<Vec2>& seeds_;
  int g_ = 1;
  std::vector<std::vector<int>> bins_;
};

void snap_to_boundary(Vec2& p) {
  for (int d = 0; d < 2; ++d) {
    if (std::abs(p[d]) <= 1e-12) p[d] = 0.0;
    if (std::abs(p[d] - 1.0) <= 1e-12) p[d] = 1.0;
  }
}

bool on_domain_boundary(const Vec2& p) {
  return p.x() == 0.0 || p.x() == 1.0 || p.y() == 0.0 || p.y() == 1.0;
}

// Welds coincident cell corners (tolerance 1e-9) into shared mesh vertices.
class VertexWelder {
 public:
  int index_of(const Vec2& p, std::vector<Vec2>& verts) {
    long long ix = llround(p.x() / kQuantum), iy = llround(p.y() / kQuantum);
    for (long long dx = -1; dx <= 1; ++dx) {
      for (long long dy = -1; dy <= 1; ++dy) {
        auto it = table_.find(key(ix + dx, iy + dy));
        if (it == table_.end()) continue;
        for (int v : it->second)
          if ((verts[v] - p).norm() <= kTol) return v;
      }
    }
    int v = static_cast<int>(verts.size());
    verts.push_back(p);
    table_[key(ix, iy)].push_back(v);
    return v;
  }

 private:
  static constexpr double kQuantum = 1e-9;
  static constexpr double kTol = 1e-9;
  static long long key(long long ix, long long iy) { return ix * 2000003LL + iy; }
  std::unordered_map<long long, std::vector<int>> table_;
};

PolygonalMesh extract_mesh(const std::vector<std::vector<Vec2>>& raw_cells) {
  PolygonalMesh m;
  VertexWelder welder;
  for (const auto& rc : raw_cells) {
    std::vector<int> cell;
    for (Vec2 p : rc) {
      snap_to_boundary(p);
      int v = welder.index_of(p, m.vertices);
      if (cell.empty() || cell.back() != v) cell.push_back(v);
    }
    while (cell.size() > 1 && cell.front() == cell.back()) cell.pop_back();
    if (cell.size() < 3) throw GenerationFailure("cell degenerated during welding");
    // canonical rotation: start at the smallest vertex index
    auto mn = std::min_element(cell.begin(), cell.end());
    std::rotate(cell.begin(), mn, cell.end());
    m.cells.push_back(std::move(cell));
  }
  m.boundary_vertex.assign(m.vertices.size(), 0);
  for (int v = 0; v < m.n_vertices(); ++v)
    if (on_domain_boundary(m.vertices[v])) m.boundary_vertex[v] = 1;
  m.finalize();
  return m;
}

PolygonalMesh try_generate(int n_cells, std::uint64_t seed, int lloyd_iterations) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec2> seeds(n_cells);
  for (auto& s : seeds) {
    s.x() = u(rng);
    s.y() = u(rng);
  }
  std::vector<std::vector<Vec2>> polys(n_cells);
  for (int it = 0; it <= lloyd_iterations; ++it) {
    VoronoiBuilder vb(seeds);
    for (int i = 0; i < n_cells; ++i) polys[i] = vb.cell(i);
    if (it == lloyd_iterations) break;
    for (int i = 0; i < n_cells; ++i) {
      double a = polygon_signed_area(polys[i]);
      if (a <= 1e-14) throw GenerationFailure("empty voronoi cell");
      seeds[i] = polygon_centroid(polys[i]);
    }
  }
  PolygonalMesh m = extract_mesh(polys);
  ValidationReport rep = validate(m);
  if (!rep.ok()) throw GenerationFailure("generated mesh fails validation: " + rep.violations.front().what);
  return m;
}

} // namespace

PolygonalMesh generate_polygonal_mesh(int n_cells, std::uint64_t seed, int lloyd_iterations) {
  if (n_cells < 4) throw std::invalid_argument("need at least 4 cells");
  if (lloyd_iterations < 0) throw std::invalid_argument("negative lloyd iteration count");
  std::string last;
  for (int attempt = 0; attempt < 5; ++attempt) {
    try {
      return try_generate(n_cells, seed + attempt * 0x9E3779B97F4A7C15ULL, lloyd_iterations);
    } catch (const GenerationFailure& e) {
      last = e.what();
    }
  }
  throw GenerationFailure("mesh generation failed after 5 attempts: " + last);
}

MeshHierarchy build_hierarchy(int finest_count, int levels, std::uint64_t seed) {
  if (levels < 1) throw std::invalid_argument("need at least one level");
  long long div = 1;
  for (int k = 1; k < levels; ++k) div *= 4;
  if (finest_count % div != 0)
    throw std::invalid_argument("finest count not divisible by 4^(levels-1)");
  MeshHierarchy hier;
  for (int j = 1; j <= levels; ++j) {
    long long scale = 1;
    for (int k = j; k < levels; ++k) scale *= 4;
    int count = static_cast<int>(finest_count / scale);
    hier.levels.push_back(generate_polygonal_mesh(count, seed * 31 + j));
    hier.h.push_back(hier.levels.back().h);
  }
  hier.quasi_uniformity_c = 1.0;
  for (int j = 1; j < levels; ++j) {
    if (hier.h[j] > hier.h[j - 1])
      throw HierarchyConstraintViolation("h increased from level " + std::to_string(j) +
                                         " to " + std::to_string(j + 1));
    hier.quasi_uniformity_c = std::min(hier.quasi_uniformity_c, hier.h[j] / hier.h[j - 1]);
  }
  return hier;
}

ValidationReport validate(const PolygonalMesh& m) {
  ValidationReport rep;
  auto add = [&](std::string what, int cell = -1) { rep.violations.push_back({std::move(what), cell}); };

  double total_area = 0.0;
  std::vector<Polygon> polys;
  polys.reserve(m.n_cells());
  bool polys_ok = true;
  for (int c = 0; c < m.n_cells(); ++c) {
    const auto& cell = m.cells[c];
    if (cell.size() < 3) {
      add("cell has fewer than 3 vertices", c);
      polys_ok = false;
      continue;
    }
    for (int v : cell)
      if (v < 0 || v >= m.n_vertices()) {
        add("cell references missing vertex", c);
        polys_ok = false;
      }
    if (!polys_ok) continue;
    std::vector<Vec2> pts;
    for (int v : cell) pts.push_back(m.vertices[v]);
    double a = polygon_signed_area(pts);
    if (a <= 0.0) {
      add("cell not counterclockwise (signed area <= 0)", c);
      polys_ok = false;
      continue;
    }
    total_area += a;
    double diam = polygon_diameter(pts);
    int n = static_cast<int>(pts.size());
    for (int i = 0; i < n; ++i)
      if ((pts[i] - pts[(i + 1) % n]).norm() <= 1e-12 * diam)
        add("repeated consecutive vertices", c);
    Vec2 cc = polygon_centroid(pts);
    for (int i = 0; i < n; ++i) {
      Vec2 e1 = pts[i] - cc, e2 = pts[(i + 1) % n] - cc;
      if (e1.x() * e2.y() - e1.y() * e2.x() < -1e-12 * diam * diam) {
        add("cell not star-shaped with respect to its centroid", c);
        break;
      }
    }
    polys.emplace_back(std::move(pts));
  }

  if (polys_ok && std::abs(total_area - 1.0) > 1e-10)
    add("cell areas do not sum to |Omega| (got " + std::to_string(total_area) + ")");

  // edge conformity
  std::unordered_map<long long, int> edge_count;
  auto ekey = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    return static_cast<long long>(a) * m.n_vertices() + b;
  };
  for (int c = 0; c < m.n_cells(); ++c) {
    const auto& cell = m.cells[c];
    int n = static_cast<int>(cell.size());
    for (int i = 0; i < n; ++i) edge_count[ekey(cell[i], cell[(i + 1) % n])]++;
  }
  for (const auto& [key, count] : edge_count) {
    int a = static_cast<int>(key / m.n_vertices());
    int b = static_cast<int>(key % m.n_vertices());
    if (count > 2) add("edge shared by more than two cells");
    if (count == 1) {
      const Vec2& pa = m.vertices[a];
      const Vec2& pb = m.vertices[b];
      bool on_side = false;
      for (int d = 0; d < 2 && !on_side; ++d)
        for (double side : {0.0, 1.0})
          if (std::abs(pa[d] - side) <= 1e-12 && std::abs(pb[d] - side) <= 1e-12) on_side = true;
      if (!on_side) add("interior edge used by only one cell (hanging node?)");
    }
  }

  // boundary flags consistent with geometry
  if (static_cast<int>(m.boundary_vertex.size()) != m.n_vertices()) {
    add("boundary flag array size mismatch");
  } else {
    for (int v = 0; v < m.n_vertices(); ++v) {
      const Vec2& p = m.vertices[v];
      double dist = std::min({std::abs(p.x()), std::abs(p.x() - 1.0), std::abs(p.y()),
                              std::abs(p.y() - 1.0)});
      if (m.boundary_vertex[v] && dist > 1e-12)
        add("flagged boundary vertex not on domain boundary");
      if (!m.boundary_vertex[v] && dist <= 1e-12) add("boundary vertex not flagged");
    }
  }

  // pairwise overlap spot check
  if (polys_ok && !polys.empty()) {
    std::mt19937_64 rng(9876);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int s = 0; s < 256; ++s) {
      Vec2 p{u(rng), u(rng)};
      int hits = 0;
      bool near_edge = false;
      for (const Polygon& poly : polys) {
        if (!poly.contains(p, 0.0)) continue;
        ++hits;
        const auto& v = poly.vertices();
        int n = poly.size();
        for (int i = 0; i < n && !near_edge; ++i) {
          Vec2 a = v[i], b = v[(i + 1) % n], d = b - a;
          double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
          if ((p - (a + t * d)).norm() <= 1e-9) near_edge = true;
        }
      }
      if (near_edge) continue;
      if (hits == 0) add("sample point covered by no cell");
      if (hits > 1) add("sample point covered by more than one cell (overlap)");
    }
  }

  return rep;
}

void save_mesh(const PolygonalMesh& m, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = 1;
  auto& jv = j["vertices"] = nlohmann::json::array();
  for (const Vec2& v : m.vertices) jv.push_back({v.x(), v.y()});
  j["cells"] = m.cells;
  auto& jb = j["boundary_vertices"] = nlohmann::json::array();
  for (int v = 0; v < m.n_vertices(); ++v)
    if (m.boundary_vertex[v]) jb.push_back(v);
  std::ofstream out(path);
  if (!out) throw MeshIoError("cannot open " + path + " for writing");
  out << j.dump(1) << "\n";
}

PolygonalMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshIoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw MeshIoError(std::string("malformed mesh file: ") + e.what());
  }
  if (!j.contains("format_version") || !j["format_version"].is_number_integer())
    throw MeshIoError("missing format_version");
  if (j["format_version"].get<int>() != 1)
    throw FormatVersionMismatch("unsupported mesh format version");
  PolygonalMesh m;
  try {
    for (const auto& v : j.at("vertices"))
      m.vertices.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
    m.cells = j.at("cells").get<std::vector<std::vector<int>>>();
    m.boundary_vertex.assign(m.vertices.size(), 0);
    for (const auto& v : j.at("boundary_vertices")) {
      int idx = v.get<int>();
      if (idx < 0 || idx >= m.n_vertices()) throw IndexOutOfRange("boundary vertex index out of range");
      m.boundary_vertex[idx] = 1;
    }
  } catch (const nlohmann::json::exception& e) {
    throw MeshIoError(std::string("malformed mesh file: ") + e.what());
  }
  for (const auto& cell : m.cells)
    for (int v : cell)
      if (v < 0 || v >= m.n_vertices()) throw IndexOutOfRange("cell references missing vertex");
  m.finalize();
  return m;
}

} // namespace vemmg
