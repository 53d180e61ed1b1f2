#include "vemmg/rbspace.hpp"

#include <cmath>
#include <fstream>
#include <mutex>
#include <random>

#include <json.hpp>

#include "vemmg/parallel.hpp"

namespace vemmg::rbspace {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using NaturalLLT = Eigen::SimplicialLLT<SpMat, Eigen::Lower, Eigen::NaturalOrdering<int>>;

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

} // namespace

std::shared_ptr<const SubTriTopology> SubTriTopology::get(int n_poly_vertices, int depth) {
  static std::map<std::pair<int, int>, std::shared_ptr<const SubTriTopology>> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto key = std::make_pair(n_poly_vertices, depth);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  if (n_poly_vertices < 3) throw std::invalid_argument("polygon class needs >= 3 vertices");
  if (depth < 1) throw std::invalid_argument("refinement depth must be >= 1");

  auto topo = std::make_shared<SubTriTopology>();
  int N = n_poly_vertices;
  int L = 1 << depth;
  topo->n_poly_vertices = N;
  topo->depth = depth;
  topo->lattice = L;

  // global layout: centroid, polygon vertices, spoke nodes, edge nodes,
  // then per-fan interior nodes
  const int vertex_base = 1;
  const int spoke_base = vertex_base + N;
  const int edge_base = spoke_base + N * (L - 1);
  const int interior_base = edge_base + N * (L - 1);
  const int interior_per_fan = (L - 1) * (L - 2) / 2;
  topo->n_nodes = interior_base + N * interior_per_fan;

  topo->node_refs.assign(topo->n_nodes, {0, 0, 0});
  topo->node_refs[0] = {0, 0, 0};
  for (int s = 0; s < N; ++s) {
    topo->node_refs[vertex_base + s] = {s, L, 0};
    for (int k = 1; k < L; ++k) {
      topo->node_refs[spoke_base + s * (L - 1) + (k - 1)] = {s, k, 0};
      topo->node_refs[edge_base + s * (L - 1) + (k - 1)] = {s, L - k, k};
    }
  }

  topo->fan_grid.assign(N, std::vector<int>((L + 1) * (L + 2) / 2, -1));
  std::vector<int> interior_next(N, 0);
  for (int t = 0; t < N; ++t) {
    for (int b = 0; b <= L; ++b) {
      for (int c = 0; c <= L - b; ++c) {
        int idx;
        if (b == 0 && c == 0) {
          idx = 0;
        } else if (b == L) {
          idx = vertex_base + t;
        } else if (c == L) {
          idx = vertex_base + (t + 1) % N;
        } else if (c == 0) {
          idx = spoke_base + t * (L - 1) + (b - 1);
        } else if (b == 0) {
          idx = spoke_base + ((t + 1) % N) * (L - 1) + (c - 1);
        } else if (b + c == L) {
          idx = edge_base + t * (L - 1) + (c - 1);
        } else {
          idx = interior_base + t * interior_per_fan + interior_next[t]++;
          topo->node_refs[idx] = {t, b, c};
        }
        topo->fan_grid[t][topo->grid_slot(b, c)] = idx;
      }
    }
  }

  for (int t = 0; t < N; ++t) {
    for (int b = 0; b < L; ++b) {
      for (int c = 0; c < L - b; ++c) {
        topo->triangles.push_back({topo->fan_grid[t][topo->grid_slot(b, c)],
                                   topo->fan_grid[t][topo->grid_slot(b + 1, c)],
                                   topo->fan_grid[t][topo->grid_slot(b, c + 1)]});
        if (b + c <= L - 2)
          topo->triangles.push_back({topo->fan_grid[t][topo->grid_slot(b + 1, c)],
                                     topo->fan_grid[t][topo->grid_slot(b + 1, c + 1)],
                                     topo->fan_grid[t][topo->grid_slot(b, c + 1)]});
      }
    }
  }

  topo->is_boundary.assign(topo->n_nodes, 0);
  for (int s = 0; s < N; ++s) {
    topo->is_boundary[vertex_base + s] = 1;
    for (int k = 1; k < L; ++k) topo->is_boundary[edge_base + s * (L - 1) + (k - 1)] = 1;
  }
  for (int s = 0; s < N; ++s) topo->boundary_nodes.push_back(vertex_base + s);
  for (int t = 0; t < N; ++t)
    for (int k = 1; k < L; ++k) topo->boundary_nodes.push_back(edge_base + t * (L - 1) + (k - 1));
  topo->boundary_pos.assign(topo->n_nodes, -1);
  topo->interior_pos.assign(topo->n_nodes, -1);
  for (size_t i = 0; i < topo->boundary_nodes.size(); ++i)
    topo->boundary_pos[topo->boundary_nodes[i]] = static_cast<int>(i);
  for (int v = 0; v < topo->n_nodes; ++v) {
    if (topo->is_boundary[v]) continue;
    topo->interior_pos[v] = static_cast<int>(topo->interior_nodes.size());
    topo->interior_nodes.push_back(v);
  }

  topo->boundary_hat = Eigen::MatrixXd::Zero(topo->n_boundary(), N);
  for (int s = 0; s < N; ++s) topo->boundary_hat(s, s) = 1.0;
  for (int t = 0; t < N; ++t) {
    for (int k = 1; k < L; ++k) {
      int row = N + t * (L - 1) + (k - 1);
      topo->boundary_hat(row, t) = double(L - k) / L;
      topo->boundary_hat(row, (t + 1) % N) = double(k) / L;
    }
  }

  cache[key] = topo;
  return topo;
}

Polygon normalized_polygon(const Polygon& K) {
  Vec2 c = K.centroid();
  double d = K.diameter();
  std::vector<Vec2> verts;
  verts.reserve(K.size());
  for (const Vec2& v : K.vertices()) verts.push_back((v - c) / d);
  return Polygon(std::move(verts));
}

SubTriangulation build_subtriangulation(const Polygon& K, int depth) {
  SubTriangulation st;
  st.topo = SubTriTopology::get(K.size(), depth);
  const auto& topo = *st.topo;
  int N = K.size();
  int L = topo.lattice;
  Vec2 C = K.centroid();

  st.nodes.resize(topo.n_nodes, 2);
  for (int v = 0; v < topo.n_nodes; ++v) {
    const auto& ref = topo.node_refs[v];
    int a = L - ref.b - ref.c;
    Vec2 p = (a * C + ref.b * K.vertex(ref.fan) + ref.c * K.vertex((ref.fan + 1) % N)) / double(L);
    st.nodes(v, 0) = p.x();
    st.nodes(v, 1) = p.y();
  }

  std::vector<Eigen::Triplet<double>> ks, ms;
  ks.reserve(topo.triangles.size() * 9);
  ms.reserve(topo.triangles.size() * 9);
  for (const auto& tri : topo.triangles) {
    Vec2 p[3];
    for (int q = 0; q < 3; ++q) p[q] = st.nodes.row(tri[q]);
    double a2 = cross2(p[1] - p[0], p[2] - p[0]); // twice the area
    if (a2 <= 0.0) throw SingularLocalSolve("degenerate sub-triangle");
    double bq[3], cq[3];
    for (int q = 0; q < 3; ++q) {
      const Vec2& pj = p[(q + 1) % 3];
      const Vec2& pk = p[(q + 2) % 3];
      bq[q] = pj.y() - pk.y();
      cq[q] = pk.x() - pj.x();
    }
    double area = 0.5 * a2;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        ks.emplace_back(tri[i], tri[j], (bq[i] * bq[j] + cq[i] * cq[j]) / (2.0 * a2));
        ms.emplace_back(tri[i], tri[j], area / 12.0 * (i == j ? 2.0 : 1.0));
      }
    }
  }
  st.stiffness.resize(topo.n_nodes, topo.n_nodes);
  st.stiffness.setFromTriplets(ks.begin(), ks.end());
  st.mass.resize(topo.n_nodes, topo.n_nodes);
  st.mass.setFromTriplets(ms.begin(), ms.end());

  std::vector<Eigen::Triplet<double>> ii, ib;
  for (int col = 0; col < st.stiffness.outerSize(); ++col) {
    for (SpMat::InnerIterator it(st.stiffness, col); it; ++it) {
      int r = static_cast<int>(it.row());
      int c = static_cast<int>(it.col());
      if (topo.interior_pos[r] < 0) continue;
      if (topo.interior_pos[c] >= 0)
        ii.emplace_back(topo.interior_pos[r], topo.interior_pos[c], it.value());
      else
        ib.emplace_back(topo.interior_pos[r], topo.boundary_pos[c], it.value());
    }
  }
  st.a_ii.resize(topo.n_interior(), topo.n_interior());
  st.a_ii.setFromTriplets(ii.begin(), ii.end());
  st.a_ib.resize(topo.n_interior(), topo.n_boundary());
  st.a_ib.setFromTriplets(ib.begin(), ib.end());
  return st;
}

Eigen::MatrixXd harmonic_extension_hifi(const SubTriangulation& st) {
  const auto& topo = *st.topo;
  Eigen::SimplicialLLT<SpMat> llt(st.a_ii);
  if (llt.info() != Eigen::Success) throw SingularLocalSolve("interior Laplace solve failed");
  Eigen::MatrixXd rhs = -(st.a_ib * topo.boundary_hat);
  Eigen::MatrixXd xi = llt.solve(rhs);
  Eigen::MatrixXd full(topo.n_nodes, topo.n_poly_vertices);
  for (int i = 0; i < topo.n_boundary(); ++i)
    full.row(topo.boundary_nodes[i]) = topo.boundary_hat.row(i);
  for (int i = 0; i < topo.n_interior(); ++i) full.row(topo.interior_nodes[i]) = xi.row(i);
  return full;
}

Eigen::MatrixXd harmonic_extension_hifi(const Polygon& K, int depth) {
  return harmonic_extension_hifi(build_subtriangulation(K, depth));
}

namespace {

// nodal values of the projected linears pi(hat_i), one column per hat
Eigen::MatrixXd projected_hat_nodal(const vem::ElementProjector& proj,
                                    const Eigen::MatrixX2d& nodes) {
  int n = static_cast<int>(nodes.rows());
  Eigen::MatrixXd mono(n, 3);
  for (int q = 0; q < n; ++q) {
    mono(q, 0) = 1.0;
    mono(q, 1) = (nodes(q, 0) - proj.center.x()) / proj.h;
    mono(q, 2) = (nodes(q, 1) - proj.center.y()) / proj.h;
  }
  return mono * proj.pi_star;
}

Polygon regular_polygon(int n) {
  std::vector<Vec2> v;
  for (int i = 0; i < n; ++i) {
    double th = 2.0 * M_PI * i / n;
    v.push_back({std::cos(th), std::sin(th)});
  }
  return Polygon(std::move(v));
}

} // namespace

Polygon snapshot_polygon(int n_poly_vertices, int index, std::uint64_t seed) {
  int n = n_poly_vertices;
  if (index == 0) return regular_polygon(n);
  std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(index));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  // vertices displaced uniformly in a disk of radius 0.25 x circumradius,
  // resampled until comfortably star-shaped
  for (int attempt = 0; attempt < 200; ++attempt) {
    std::vector<Vec2> v;
    for (int i = 0; i < n; ++i) {
      double th = 2.0 * M_PI * i / n;
      double rr = 0.25 * std::sqrt(u01(rng));
      double phi = 2.0 * M_PI * u01(rng);
      v.push_back({std::cos(th) + rr * std::cos(phi), std::sin(th) + rr * std::sin(phi)});
    }
    try {
      Polygon p(v);
      if (!p.star_shaped()) continue;
      Vec2 c = p.centroid();
      double min_fan = 1e300;
      for (int i = 0; i < n; ++i)
        min_fan = std::min(min_fan,
                           0.5 * cross2(p.vertex(i) - c, p.vertex((i + 1) % n) - c));
      if (min_fan < 1e-3 * p.area()) continue;
      return p;
    } catch (const DegenerateGeometry&) {
    }
  }
  throw GenerationFailure("could not sample a valid snapshot polygon");
}

RbCompressor train_compressor(int n_poly_vertices, int n_snapshots, int m, int depth,
                              std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("rb complexity must be >= 1");
  if (n_snapshots < m) throw InsufficientSnapshots("need at least m snapshot polygons");
  int N = n_poly_vertices;
  RbCompressor comp;
  comp.n_poly_vertices = N;
  comp.depth = depth;
  comp.n_snapshots = n_snapshots;
  comp.seed = seed;

  SubTriangulation ref = build_subtriangulation(normalized_polygon(regular_polygon(N)), depth);
  const auto& topo = *ref.topo;
  NaturalLLT ref_llt(ref.a_ii);
  if (ref_llt.info() != Eigen::Success)
    throw SingularLocalSolve("reference metric factorization failed");
  SpMat Lref = ref_llt.matrixL();

  Eigen::MatrixXd snapshots(topo.n_interior(), N * n_snapshots);
  for (int s = 0; s < n_snapshots; ++s) {
    Polygon poly = normalized_polygon(snapshot_polygon(N, s, seed));
    SubTriangulation st = build_subtriangulation(poly, depth);
    Eigen::MatrixXd hifi = harmonic_extension_hifi(st);
    Eigen::MatrixXd proj_nodal = projected_hat_nodal(vem::elliptic_projector(poly), st.nodes);
    Eigen::MatrixXd dev = hifi - proj_nodal;
    for (int i = 0; i < topo.n_interior(); ++i)
      snapshots.row(i).segment(s * N, N) = dev.row(topo.interior_nodes[i]);
  }

  Eigen::MatrixXd y = Lref.transpose() * snapshots;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(y, Eigen::ComputeThinU);
  comp.singular_values = svd.singularValues();
  int rank = 0;
  if (comp.singular_values.size() > 0 && comp.singular_values[0] > 0.0) {
    double cutoff = comp.singular_values[0] * 1e-12;
    while (rank < comp.singular_values.size() && comp.singular_values[rank] > cutoff) ++rank;
  }
  comp.rank_deficient = rank < m;
  int kept = std::min(m, rank);
  Eigen::MatrixXd modes = svd.matrixU().leftCols(kept);
  SpMat Lt = Lref.transpose();
  Lt.triangularView<Eigen::Upper>().solveInPlace(modes);
  comp.modes = modes;
  return comp;
}

void RbCompressor::save(const std::string& path) const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["n"] = n_poly_vertices;
  j["depth"] = depth;
  j["n_snapshots"] = n_snapshots;
  j["seed"] = seed;
  j["rank_deficient"] = rank_deficient;
  j["singular_values"] = std::vector<double>(singular_values.data(),
                                             singular_values.data() + singular_values.size());
  j["rows"] = modes.rows();
  auto& jm = j["modes"] = nlohmann::json::array();
  for (int c = 0; c < modes.cols(); ++c)
    jm.push_back(std::vector<double>(modes.col(c).data(), modes.col(c).data() + modes.rows()));
  std::ofstream out(path);
  if (!out) throw MeshIoError("cannot open " + path + " for writing");
  out << j.dump() << "\n";
}

RbCompressor RbCompressor::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshIoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("format_version").get<int>() != 1)
      throw FormatVersionMismatch("unsupported compressor format version");
    RbCompressor comp;
    comp.n_poly_vertices = j.at("n").get<int>();
    comp.depth = j.at("depth").get<int>();
    comp.n_snapshots = j.at("n_snapshots").get<int>();
    comp.seed = j.at("seed").get<std::uint64_t>();
    comp.rank_deficient = j.at("rank_deficient").get<bool>();
    auto sv = j.at("singular_values").get<std::vector<double>>();
    comp.singular_values = Eigen::Map<Eigen::VectorXd>(sv.data(), sv.size());
    int rows = j.at("rows").get<int>();
    const auto& jm = j.at("modes");
    comp.modes.resize(rows, jm.size());
    for (size_t c = 0; c < jm.size(); ++c) {
      auto col = jm[c].get<std::vector<double>>();
      if (static_cast<int>(col.size()) != rows) throw MeshIoError("mode length mismatch");
      comp.modes.col(c) = Eigen::Map<Eigen::VectorXd>(col.data(), rows);
    }
    return comp;
  } catch (const nlohmann::json::exception& e) {
    throw MeshIoError(std::string("malformed compressor file: ") + e.what());
  }
}

ElementRbBasis rb_basis_for_element(const Polygon& K, const RbCompressor* compressor, int m,
                                    int depth) {
  int N = K.size();
  if (N != 3) {
    if (m < 1) throw std::invalid_argument("rb complexity must be >= 1");
    if (compressor == nullptr) throw ShapeMismatch("compressor required for N > 3");
    if (compressor->n_poly_vertices != N)
      throw ShapeMismatch("compressor trained for a different vertex count");
    if (compressor->depth != depth)
      throw ShapeMismatch("compressor trained at a different depth");
  }

  SubTriangulation st = build_subtriangulation(K, depth);
  const auto& topo = *st.topo;
  vem::ElementProjector proj = vem::elliptic_projector(K);

  ElementRbBasis basis;
  basis.n = N;
  basis.topo = st.topo;
  basis.nodes = st.nodes;
  basis.fan_center = K.centroid();
  basis.poly_verts = K.vertices();
  basis.scale = K.diameter();
  basis.pi_star = proj.pi_star;
  basis.pi = proj.pi;
  basis.grad_gram = proj.area / (proj.h * proj.h);

  Eigen::MatrixXd proj_nodal = projected_hat_nodal(proj, st.nodes);
  Eigen::MatrixXd interior_part(topo.n_interior(), N);
  for (int i = 0; i < topo.n_interior(); ++i)
    interior_part.row(i) = proj_nodal.row(topo.interior_nodes[i]);

  int m_eff = (N == 3) ? 0 : std::min(m, compressor->kept());
  basis.m_used = m_eff;
  if (m_eff > 0) {
    const Eigen::MatrixXd phi = compressor->modes.leftCols(m_eff);
    Eigen::MatrixXd reduced = phi.transpose() * (st.a_ii * phi);
    Eigen::MatrixXd rhs = -phi.transpose() * (st.a_ib * topo.boundary_hat + st.a_ii * interior_part);
    Eigen::LLT<Eigen::MatrixXd> llt(reduced);
    if (llt.info() != Eigen::Success) throw SingularLocalSolve("reduced system not SPD");
    interior_part += phi * llt.solve(rhs);
  }

  basis.nodal.resize(topo.n_nodes, N);
  for (int i = 0; i < topo.n_boundary(); ++i)
    basis.nodal.row(topo.boundary_nodes[i]) = topo.boundary_hat.row(i);
  for (int i = 0; i < topo.n_interior(); ++i)
    basis.nodal.row(topo.interior_nodes[i]) = interior_part.row(i);

  basis.local_mass = basis.nodal.transpose() * (st.mass * basis.nodal);
  basis.integrals = basis.nodal.transpose() * (st.mass * Eigen::VectorXd::Ones(topo.n_nodes));
  return basis;
}

ElementRbBasis::Located ElementRbBasis::locate(const Vec2& x) const {
  int N = n;
  int L = topo->lattice;
  Vec2 rel = x - fan_center;
  double tol = 1e-10;
  double cross_tol = 1e-10 * scale * scale;

  int sector = -1;
  double beta = 0.0, gamma = 0.0;
  auto try_sector = [&](int t) {
    Vec2 e1 = poly_verts[t] - fan_center;
    Vec2 e2 = poly_verts[(t + 1) % N] - fan_center;
    double det = cross2(e1, e2);
    if (det <= 0.0) return false;
    double b = cross2(rel, e2) / det;
    double c = cross2(e1, rel) / det;
    if (b < -tol || c < -tol || b + c > 1.0 + tol) return false;
    sector = t;
    beta = b;
    gamma = c;
    return true;
  };
  if (rel.norm() <= 1e-14 * scale) {
    sector = 0; // centroid itself
  } else {
    for (int t = 0; t < N && sector < 0; ++t) {
      if (cross2(poly_verts[t] - fan_center, rel) < -cross_tol) continue;
      if (cross2(poly_verts[(t + 1) % N] - fan_center, rel) > cross_tol) continue;
      try_sector(t);
    }
    for (int t = 0; t < N && sector < 0; ++t) try_sector(t); // tolerance fallback
    if (sector < 0) throw PointOutsideElement("point not inside element");
  }

  double bb = std::clamp(beta, 0.0, 1.0) * L;
  double cc = std::clamp(gamma, 0.0, 1.0) * L;
  int ib = std::clamp(static_cast<int>(bb), 0, L - 1);
  int ic = std::clamp(static_cast<int>(cc), 0, L - 1);
  while (ib + ic > L - 1) {
    if (ib > 0 && (ic == 0 || bb - ib < cc - ic)) --ib;
    else --ic;
  }
  double fb = bb - ib, fc = cc - ic;

  // triangle index within the fan: cells are emitted in (b, c) order with the
  // down-triangle directly after its up-triangle
  int tris_per_fan = L * L;
  int cell_base = 0;
  for (int b = 0; b < ib; ++b) cell_base += 2 * (L - b) - 1;
  Located loc;
  if (fb + fc <= 1.0 + 1e-12 || ib + ic == L - 1) { // outer row has no down-triangle
    loc.tri = sector * tris_per_fan + cell_base + 2 * ic;
    loc.lambda = {1.0 - fb - fc, fb, fc};
  } else {
    loc.tri = sector * tris_per_fan + cell_base + 2 * ic + 1;
    loc.lambda = {1.0 - fc, fb + fc - 1.0, 1.0 - fb};
  }
  return loc;
}

Eigen::VectorXd ElementRbBasis::basis_values(const Located& loc) const {
  const auto& tri = topo->triangles[loc.tri];
  return loc.lambda[0] * nodal.row(tri[0]).transpose() +
         loc.lambda[1] * nodal.row(tri[1]).transpose() +
         loc.lambda[2] * nodal.row(tri[2]).transpose();
}

std::array<Vec2, 3> ElementRbBasis::physical_triangle(int tri) const {
  const auto& t = topo->triangles[tri];
  return {Vec2(nodes.row(t[0])), Vec2(nodes.row(t[1])), Vec2(nodes.row(t[2]))};
}

double ElementRbBasis::evaluate(const Eigen::VectorXd& dofs, const Vec2& x) const {
  if (dofs.size() != n) throw DimensionMismatch("dof count does not match vertex count");
  Eigen::Vector3d coeff = pi_star * dofs;
  Eigen::VectorXd c = dofs - pi * dofs;
  double poly = coeff[0] + coeff[1] * (x.x() - fan_center.x()) / scale +
                coeff[2] * (x.y() - fan_center.y()) / scale;
  Located loc = locate(x);
  const auto& tri = topo->triangles[loc.tri];
  double correction = 0.0;
  for (int q = 0; q < 3; ++q) {
    int node = tri[q];
    Eigen::RowVector3d mono(1.0, (nodes(node, 0) - fan_center.x()) / scale,
                            (nodes(node, 1) - fan_center.y()) / scale);
    Eigen::RowVectorXd etilde_row = nodal.row(node) - mono * pi_star;
    correction += loc.lambda[q] * etilde_row.dot(c);
  }
  return poly + correction;
}

Eigen::MatrixXd ElementRbBasis::etilde_nodal() const {
  int nn = static_cast<int>(nodes.rows());
  Eigen::MatrixXd mono(nn, 3);
  for (int q = 0; q < nn; ++q) {
    mono(q, 0) = 1.0;
    mono(q, 1) = (nodes(q, 0) - fan_center.x()) / scale;
    mono(q, 2) = (nodes(q, 1) - fan_center.y()) / scale;
  }
  return nodal - mono * pi_star;
}

Eigen::MatrixXd local_rb_form(const ElementRbBasis& basis) {
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  h(1, 1) = h(2, 2) = basis.grad_gram;
  Eigen::MatrixXd consistency = basis.pi_star.transpose() * h * basis.pi_star;
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(basis.n, basis.n) - basis.pi;
  return consistency + d.transpose() * d;
}

void CompressorSet::ensure(const std::set<int>& classes, int max_m,
                           const TrainingOptions& options) {
  for (int N : classes) {
    if (N == 3) continue;
    auto it = by_class_.find(N);
    if (it != by_class_.end() && (it->second.kept() >= max_m || it->second.rank_deficient))
      continue;
    std::string cache_path;
    if (!options.cache_dir.empty()) {
      cache_path = options.cache_dir + "/rb_N" + std::to_string(N) + "_S" +
                   std::to_string(options.n_snapshots) + "_r" + std::to_string(options.depth) +
                   "_seed" + std::to_string(options.seed) + ".json";
      std::ifstream probe(cache_path);
      if (probe.good()) {
        RbCompressor cached = RbCompressor::load(cache_path);
        if (cached.n_poly_vertices == N && cached.depth == options.depth &&
            cached.n_snapshots == options.n_snapshots && cached.seed == options.seed &&
            (cached.kept() >= max_m || cached.rank_deficient)) {
          by_class_[N] = std::move(cached);
          continue;
        }
      }
    }
    RbCompressor trained =
        train_compressor(N, options.n_snapshots, max_m, options.depth, options.seed);
    if (!cache_path.empty()) trained.save(cache_path);
    by_class_[N] = std::move(trained);
  }
}

const RbCompressor* CompressorSet::find(int n_poly_vertices) const {
  auto it = by_class_.find(n_poly_vertices);
  return it == by_class_.end() ? nullptr : &it->second;
}

std::vector<ElementRbBasis> build_level_bases(const PolygonalMesh& mesh,
                                              const CompressorSet& compressors, int m,
                                              int depth) {
  int nc = mesh.n_cells();
  std::vector<ElementRbBasis> bases(nc);
  std::vector<std::string> failures(nc);
  parallel_for(nc, [&](int c) {
    try {
      int N = static_cast<int>(mesh.cells[c].size());
      const RbCompressor* comp = N == 3 ? nullptr : compressors.find(N);
      if (N != 3 && comp == nullptr)
        throw ShapeMismatch("no compressor trained for class N=" + std::to_string(N));
      bases[c] = rb_basis_for_element(mesh.cell_polygon(c), comp, m, depth);
      bases[c].cell = c;
    } catch (const std::exception& e) {
      failures[c] = e.what();
    }
  });
  for (int c = 0; c < nc; ++c)
    if (!failures[c].empty())
      throw SingularLocalSolve("cell " + std::to_string(c) + ": " + failures[c]);
  return bases;
}

numerics::SparseSymMatrix level_mass_matrix(const PolygonalMesh& mesh,
                                            const std::vector<ElementRbBasis>& bases) {
  std::vector<numerics::Triplet> triplets;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto& cell = mesh.cells[c];
    const Eigen::MatrixXd& m = bases[c].local_mass;
    for (int i = 0; i < static_cast<int>(cell.size()); ++i)
      for (int j = 0; j <= i; ++j) triplets.push_back({cell[i], cell[j], m(i, j)});
  }
  return numerics::SparseSymMatrix::from_triplets(mesh.n_vertices(), std::move(triplets));
}

} // namespace vemmg::rbspace
