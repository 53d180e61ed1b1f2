#include "vemmg/transfer.hpp"

#include <algorithm>
#include <cmath>

#include "vemmg/parallel.hpp"

namespace vemmg::transfer {

namespace {

struct Box {
  double xlo = 1e300, ylo = 1e300, xhi = -1e300, yhi = -1e300;
  void grow(const Vec2& p) {
    xlo = std::min(xlo, p.x());
    ylo = std::min(ylo, p.y());
    xhi = std::max(xhi, p.x());
    yhi = std::max(yhi, p.y());
  }
  bool overlaps(const Box& o) const {
    return xlo <= o.xhi && o.xlo <= xhi && ylo <= o.yhi && o.ylo <= yhi;
  }
};

Box cell_box(const PolygonalMesh& m, int c) {
  Box b;
  for (int v : m.cells[c]) b.grow(m.vertices[v]);
  return b;
}

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// uniform bucket grid over the unit square holding coarse cells by bbox
class CellGrid {
 public:
  CellGrid(const PolygonalMesh& mesh, const std::vector<Box>& boxes) {
    g_ = std::max(1, static_cast<int>(std::floor(std::sqrt(double(mesh.n_cells())))));
    buckets_.assign(g_ * g_, {});
    for (int c = 0; c < mesh.n_cells(); ++c) {
      auto [x0, x1] = range(boxes[c].xlo, boxes[c].xhi);
      auto [y0, y1] = range(boxes[c].ylo, boxes[c].yhi);
      for (int x = x0; x <= x1; ++x)
        for (int y = y0; y <= y1; ++y) buckets_[x * g_ + y].push_back(c);
    }
  }

  // unique candidates overlapping the box, ascending
  std::vector<int> candidates(const Box& b) const {
    std::vector<int> out;
    auto [x0, x1] = range(b.xlo, b.xhi);
    auto [y0, y1] = range(b.ylo, b.yhi);
    for (int x = x0; x <= x1; ++x)
      for (int y = y0; y <= y1; ++y)
        out.insert(out.end(), buckets_[x * g_ + y].begin(), buckets_[x * g_ + y].end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  std::pair<int, int> range(double lo, double hi) const {
    int a = std::clamp(static_cast<int>(std::floor(lo * g_)), 0, g_ - 1);
    int b = std::clamp(static_cast<int>(std::floor(hi * g_)), 0, g_ - 1);
    return {a, b};
  }
  int g_ = 1;
  std::vector<std::vector<int>> buckets_;
};

// per-cell bucket grid over the sub-triangles of one basis
class SubTriGrid {
 public:
  SubTriGrid() = default;
  SubTriGrid(const rbspace::ElementRbBasis& basis, const Box& cell_box) : box_(cell_box) {
    int nt = static_cast<int>(basis.topo->triangles.size());
    boxes_.resize(nt);
    g_ = std::max(2, static_cast<int>(std::floor(std::sqrt(double(nt) / 2.0))));
    buckets_.assign(g_ * g_, {});
    for (int t = 0; t < nt; ++t) {
      auto tri = basis.physical_triangle(t);
      for (const Vec2& p : tri) boxes_[t].grow(p);
      auto [x0, x1] = xrange(boxes_[t].xlo, boxes_[t].xhi);
      auto [y0, y1] = yrange(boxes_[t].ylo, boxes_[t].yhi);
      for (int x = x0; x <= x1; ++x)
        for (int y = y0; y <= y1; ++y) buckets_[x * g_ + y].push_back(t);
    }
  }

  const Box& tri_box(int t) const { return boxes_[t]; }

  void candidates(const Box& b, std::vector<int>& out) const {
    out.clear();
    if (!b.overlaps(box_)) return;
    auto [x0, x1] = xrange(b.xlo, b.xhi);
    auto [y0, y1] = yrange(b.ylo, b.yhi);
    for (int x = x0; x <= x1; ++x)
      for (int y = y0; y <= y1; ++y)
        out.insert(out.end(), buckets_[x * g_ + y].begin(), buckets_[x * g_ + y].end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }

 private:
  std::pair<int, int> xrange(double lo, double hi) const {
    double w = std::max(box_.xhi - box_.xlo, 1e-300);
    int a = std::clamp(static_cast<int>((lo - box_.xlo) / w * g_), 0, g_ - 1);
    int b = std::clamp(static_cast<int>((hi - box_.xlo) / w * g_), 0, g_ - 1);
    return {a, b};
  }
  std::pair<int, int> yrange(double lo, double hi) const {
    double w = std::max(box_.yhi - box_.ylo, 1e-300);
    int a = std::clamp(static_cast<int>((lo - box_.ylo) / w * g_), 0, g_ - 1);
    int b = std::clamp(static_cast<int>((hi - box_.ylo) / w * g_), 0, g_ - 1);
    return {a, b};
  }
  Box box_;
  int g_ = 2;
  std::vector<Box> boxes_;
  std::vector<std::vector<int>> buckets_;
};

Eigen::Vector3d barycentric(const std::array<Vec2, 3>& tri, const Vec2& x) {
  Vec2 e1 = tri[1] - tri[0];
  Vec2 e2 = tri[2] - tri[0];
  double det = cross2(e1, e2);
  double l1 = cross2(x - tri[0], e2) / det;
  double l2 = cross2(e1, x - tri[0]) / det;
  return {1.0 - l1 - l2, l1, l2};
}

} // namespace

std::vector<std::pair<int, int>> broad_phase_pairs(const PolygonalMesh& coarse,
                                                   const PolygonalMesh& fine) {
  std::vector<Box> cboxes(coarse.n_cells());
  for (int c = 0; c < coarse.n_cells(); ++c) cboxes[c] = cell_box(coarse, c);
  CellGrid grid(coarse, cboxes);
  std::vector<std::pair<int, int>> pairs;
  for (int f = 0; f < fine.n_cells(); ++f) {
    Box fb = cell_box(fine, f);
    for (int c : grid.candidates(fb))
      if (fb.overlaps(cboxes[c])) pairs.emplace_back(c, f);
  }
  return pairs;
}

Eigen::SparseMatrix<double> cross_mass(const LevelContext& coarse, const LevelContext& fine) {
  const PolygonalMesh& cm = *coarse.mesh;
  const PolygonalMesh& fm = *fine.mesh;
  const auto& cbases = *coarse.bases;
  const auto& fbases = *fine.bases;

  std::vector<Box> cboxes(cm.n_cells());
  for (int c = 0; c < cm.n_cells(); ++c) cboxes[c] = cell_box(cm, c);
  CellGrid grid(cm, cboxes);

  std::vector<SubTriGrid> cgrids(cm.n_cells());
  parallel_for(cm.n_cells(), [&](int c) { cgrids[c] = SubTriGrid(cbases[c], cboxes[c]); });

  const TriangleQuadrature& rule = TriangleQuadrature::get(4);
  std::vector<std::vector<Eigen::Triplet<double>>> triplets(fm.n_cells());
  std::vector<double> covered(fm.n_cells(), 0.0);

  parallel_for(fm.n_cells(), [&](int f) {
    const rbspace::ElementRbBasis& fb = fbases[f];
    Box fbox = cell_box(fm, f);
    double eps = 1e-12 * std::max(fb.scale, 1e-12);
    int nft = static_cast<int>(fb.topo->triangles.size());
    std::vector<int> cand;
    for (int c : grid.candidates(fbox)) {
      if (!fbox.overlaps(cboxes[c])) continue;
      const rbspace::ElementRbBasis& cb = cbases[c];
      Eigen::MatrixXd local = Eigen::MatrixXd::Zero(fb.n, cb.n);
      double area_fc = 0.0;
      for (int tf = 0; tf < nft; ++tf) {
        auto ftri = fb.physical_triangle(tf);
        Box ftri_box;
        for (const Vec2& p : ftri) ftri_box.grow(p);
        cgrids[c].candidates(ftri_box, cand);
        for (int tc : cand) {
          if (!ftri_box.overlaps(cgrids[c].tri_box(tc))) continue;
          auto ctri = cb.physical_triangle(tc);
          std::vector<Vec2> frag = clip_convex({ftri[0], ftri[1], ftri[2]},
                                               {ctri[0], ctri[1], ctri[2]}, eps);
          if (frag.size() < 3) continue;
          double frag_area = polygon_signed_area(frag);
          if (frag_area <= eps * eps) continue;
          area_fc += frag_area;
          // fan quadrature over the (convex) fragment; the integrand is a
          // product of two linears here, so order 4 is exact
          for (size_t k = 2; k < frag.size(); ++k) {
            const Vec2& a = frag[0];
            const Vec2& b = frag[k - 1];
            const Vec2& cpt = frag[k];
            double ta = 0.5 * cross2(b - a, cpt - a);
            if (ta <= 0.0) continue;
            for (size_t q = 0; q < rule.weights.size(); ++q) {
              const Eigen::Vector3d& l = rule.barycentric[q];
              Vec2 x = l[0] * a + l[1] * b + l[2] * cpt;
              Eigen::VectorXd fv = fb.basis_values({tf, barycentric(ftri, x)});
              Eigen::VectorXd cv = cb.basis_values({tc, barycentric(ctri, x)});
              local.noalias() += (rule.weights[q] * ta) * (fv * cv.transpose());
            }
          }
        }
      }
      covered[f] += area_fc;
      if (area_fc <= 0.0) continue;
      const auto& fcell = fm.cells[f];
      const auto& ccell = cm.cells[c];
      for (int i = 0; i < fb.n; ++i) {
        int gi = (*fine.vertex_to_free)[fcell[i]];
        if (gi < 0) continue;
        for (int j = 0; j < cb.n; ++j) {
          int gj = (*coarse.vertex_to_free)[ccell[j]];
          if (gj < 0) continue;
          triplets[f].emplace_back(gi, gj, local(i, j));
        }
      }
    }
  });

  double total = 0.0;
  for (double a : covered) total += a;
  if (std::abs(total - 1.0) > 1e-8)
    throw CoverageGap("intersection fragments cover " + std::to_string(total) +
                      " instead of |Omega|");

  std::vector<Eigen::Triplet<double>> all;
  for (auto& part : triplets) all.insert(all.end(), part.begin(), part.end());
  Eigen::SparseMatrix<double> b(fine.n_free, coarse.n_free);
  b.setFromTriplets(all.begin(), all.end());
  return b;
}

MassSolver::MassSolver(numerics::SparseSymMatrix m) : m_(std::move(m)) {
  if (m_.size() <= 20000) factor_.emplace(m_);
}

Eigen::VectorXd MassSolver::solve(const Eigen::VectorXd& b) const {
  if (factor_) return factor_->solve(b);
  return numerics::cg_solve(m_, b, 1e-12, 10 * m_.size() + 100);
}

TransferOperator::TransferOperator(int coarse_level, int fine_level,
                                   Eigen::SparseMatrix<double> cross,
                                   std::shared_ptr<const MassSolver> fine_mass,
                                   std::shared_ptr<const MassSolver> coarse_mass,
                                   RestrictionMode mode)
    : coarse_level_(coarse_level),
      fine_level_(fine_level),
      cross_(std::move(cross)),
      fine_mass_(std::move(fine_mass)),
      coarse_mass_(std::move(coarse_mass)),
      mode_(mode) {
  if (!fine_mass_ || fine_mass_->size() != cross_.rows())
    throw DimensionMismatch("fine mass does not match cross matrix");
  if (mode_ == RestrictionMode::L2Projection &&
      (!coarse_mass_ || coarse_mass_->size() != cross_.cols()))
    throw DimensionMismatch("coarse mass does not match cross matrix");
}

Eigen::VectorXd TransferOperator::prolong(const Eigen::VectorXd& v_coarse) const {
  if (v_coarse.size() != cross_.cols()) throw DimensionMismatch("prolong dimension mismatch");
  return fine_mass_->solve(cross_ * v_coarse);
}

Eigen::VectorXd TransferOperator::restrict_residual(const Eigen::VectorXd& r_fine) const {
  if (r_fine.size() != cross_.rows()) throw DimensionMismatch("restrict dimension mismatch");
  Eigen::VectorXd riesz = fine_mass_->solve(r_fine);
  Eigen::VectorXd r = cross_.transpose() * riesz;
  if (mode_ == RestrictionMode::L2Projection) r = coarse_mass_->solve(r);
  return r;
}

} // namespace vemmg::transfer
