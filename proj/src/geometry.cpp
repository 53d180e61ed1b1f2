#include "vemmg/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>

namespace vemmg {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  Vec2 d = b - a;
  double l2 = d.squaredNorm();
  if (l2 == 0.0) return (p - a).norm();
  double t = std::clamp((p - a).dot(d) / l2, 0.0, 1.0);
  return (p - (a + t * d)).norm();
}

} // namespace

double polygon_signed_area(const std::vector<Vec2>& pts) {
  double s = 0.0;
  int n = static_cast<int>(pts.size());
  for (int i = 0; i < n; ++i) {
    const Vec2& a = pts[i];
    const Vec2& b = pts[(i + 1) % n];
    s += cross2(a, b);
  }
  return 0.5 * s;
}

double polygon_diameter(const std::vector<Vec2>& pts) {
  double d2 = 0.0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j)
      d2 = std::max(d2, (pts[i] - pts[j]).squaredNorm());
  return std::sqrt(d2);
}

Vec2 polygon_centroid(const std::vector<Vec2>& pts) {
  double a = polygon_signed_area(pts);
  Vec2 c = Vec2::Zero();
  int n = static_cast<int>(pts.size());
  for (int i = 0; i < n; ++i) {
    const Vec2& p = pts[i];
    const Vec2& q = pts[(i + 1) % n];
    c += (p + q) * cross2(p, q);
  }
  return c / (6.0 * a);
}

Polygon::Polygon(std::vector<Vec2> vertices) : verts_(std::move(vertices)) {
  if (verts_.size() < 3) throw DegenerateGeometry("polygon has fewer than 3 vertices");
  double a = polygon_signed_area(verts_);
  if (std::abs(a) < 1e-14) throw DegenerateGeometry("polygon area below 1e-14");
  if (a < 0.0) { // normalize to counterclockwise
    std::reverse(verts_.begin(), verts_.end());
    a = -a;
  }
  area_ = a;
  diameter_ = polygon_diameter(verts_);
  int n = size();
  for (int i = 0; i < n; ++i) {
    double d = (verts_[i] - verts_[(i + 1) % n]).norm();
    if (d <= 1e-12 * diameter_)
      throw DegenerateGeometry("repeated consecutive vertices");
  }
  centroid_ = polygon_centroid(verts_);
}

bool Polygon::is_convex() const {
  int n = size();
  double tol = 1e-12 * diameter_ * diameter_;
  for (int i = 0; i < n; ++i) {
    Vec2 e1 = verts_[(i + 1) % n] - verts_[i];
    Vec2 e2 = verts_[(i + 2) % n] - verts_[(i + 1) % n];
    if (cross2(e1, e2) < -tol) return false;
  }
  return true;
}

bool Polygon::star_shaped() const {
  int n = size();
  double tol = 1e-12 * diameter_ * diameter_;
  for (int i = 0; i < n; ++i) {
    Vec2 e1 = verts_[i] - centroid_;
    Vec2 e2 = verts_[(i + 1) % n] - centroid_;
    if (cross2(e1, e2) < -tol) return false;
  }
  return true;
}

bool Polygon::contains(const Vec2& p, double tol) const {
  int n = size();
  for (int i = 0; i < n; ++i)
    if (point_segment_distance(p, verts_[i], verts_[(i + 1) % n]) <= tol) return true;
  // crossing number
  bool inside = false;
  for (int i = 0; i < n; ++i) {
    const Vec2& a = verts_[i];
    const Vec2& b = verts_[(i + 1) % n];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      double xc = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
      if (p.x() < xc) inside = !inside;
    }
  }
  return inside;
}

double Triangle::area() const { return 0.5 * cross2(b - a, c - a); }

double area(const Polygon& p) { return p.area(); }
Vec2 centroid(const Polygon& p) { return p.centroid(); }
double diameter(const Polygon& p) { return p.diameter(); }

namespace {

bool point_strictly_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c,
                                double tol) {
  double d1 = cross2(b - a, p - a);
  double d2 = cross2(c - b, p - b);
  double d3 = cross2(a - c, p - c);
  return d1 > tol && d2 > tol && d3 > tol;
}

std::vector<Triangle> ear_clip(const Polygon& p) {
  std::vector<int> idx(p.size());
  for (int i = 0; i < p.size(); ++i) idx[i] = i;
  const auto& v = p.vertices();
  double tol = 1e-14 * p.diameter() * p.diameter();
  std::vector<Triangle> out;
  while (idx.size() > 3) {
    bool clipped = false;
    int m = static_cast<int>(idx.size());
    for (int k = 0; k < m; ++k) {
      const Vec2& a = v[idx[(k + m - 1) % m]];
      const Vec2& b = v[idx[k]];
      const Vec2& c = v[idx[(k + 1) % m]];
      if (cross2(b - a, c - b) <= tol) continue; // reflex or collinear corner
      bool empty = true;
      for (int j = 0; j < m && empty; ++j) {
        if (j == k || j == (k + m - 1) % m || j == (k + 1) % m) continue;
        if (point_strictly_in_triangle(v[idx[j]], a, b, c, -tol)) empty = false;
      }
      if (!empty) continue;
      out.push_back({a, b, c});
      idx.erase(idx.begin() + k);
      clipped = true;
      break;
    }
    if (!clipped) throw TriangulationFailure("ear clipping cannot progress");
  }
  out.push_back({v[idx[0]], v[idx[1]], v[idx[2]]});
  return out;
}

} // namespace

std::vector<Triangle> triangulate(const Polygon& p) {
  if (p.size() == 3) return {{p.vertex(0), p.vertex(1), p.vertex(2)}};
  if (p.star_shaped()) {
    std::vector<Triangle> out;
    out.reserve(p.size());
    Vec2 c = p.centroid();
    for (int i = 0; i < p.size(); ++i)
      out.push_back({c, p.vertex(i), p.vertex((i + 1) % p.size())});
    return out;
  }
  return ear_clip(p);
}

std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject,
                              const std::vector<Vec2>& clip, double eps) {
  std::vector<Vec2> poly = subject;
  std::vector<Vec2> next;
  int nc = static_cast<int>(clip.size());
  for (int e = 0; e < nc && !poly.empty(); ++e) {
    const Vec2& a = clip[e];
    const Vec2& b = clip[(e + 1) % nc];
    Vec2 dir = b - a;
    double len = dir.norm();
    if (len == 0.0) continue;
    next.clear();
    int m = static_cast<int>(poly.size());
    for (int i = 0; i < m; ++i) {
      const Vec2& prev = poly[(i + m - 1) % m];
      const Vec2& cur = poly[i];
      double dp = cross2(dir, prev - a) / len; // signed distance, inside >= 0
      double dc = cross2(dir, cur - a) / len;
      bool prev_in = dp >= -eps;
      bool cur_in = dc >= -eps;
      if (cur_in) {
        if (!prev_in) next.push_back(prev + (dp / (dp - dc)) * (cur - prev));
        next.push_back(cur);
      } else if (prev_in) {
        next.push_back(prev + (dp / (dp - dc)) * (cur - prev));
      }
    }
    poly.swap(next);
  }
  // drop duplicate consecutive points introduced by clipping
  if (!poly.empty()) {
    std::vector<Vec2> cleaned;
    cleaned.reserve(poly.size());
    for (const Vec2& q : poly) {
      if (cleaned.empty() || (q - cleaned.back()).norm() > eps) cleaned.push_back(q);
    }
    while (cleaned.size() > 1 && (cleaned.front() - cleaned.back()).norm() <= eps)
      cleaned.pop_back();
    poly.swap(cleaned);
  }
  if (poly.size() < 3) poly.clear();
  return poly;
}

std::vector<Polygon> intersect(const Polygon& p, const Polygon& q) {
  double area_floor = 1e-12 * std::min(p.area(), q.area());
  double eps = 1e-12 * std::max(p.diameter(), q.diameter());
  std::vector<Polygon> out;
  auto emit = [&](const std::vector<Vec2>& pts) {
    if (pts.size() < 3) return;
    if (polygon_signed_area(pts) <= area_floor) return;
    out.emplace_back(pts);
  };
  if (p.is_convex() && q.is_convex()) {
    emit(clip_convex(q.vertices(), p.vertices(), eps));
    return out;
  }
  auto tp = triangulate(p);
  auto tq = triangulate(q);
  for (const Triangle& tb : tq) {
    if (tb.area() <= 0.0) continue;
    std::vector<Vec2> sub = {tb.a, tb.b, tb.c};
    for (const Triangle& ta : tp) {
      if (ta.area() <= 0.0) continue;
      emit(clip_convex(sub, {ta.a, ta.b, ta.c}, eps));
    }
  }
  return out;
}

void gauss_legendre_01(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int k = 0; k < n; ++k) {
    double t = std::cos(M_PI * (k + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2 * j - 1) * t * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    x[k] = 0.5 * (1.0 + t);
    w[k] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
}

TriangleQuadrature TriangleQuadrature::gauss_duffy(int degree) {
  if (degree < 0) throw UnsupportedOrder("negative quadrature order");
  int n = (degree + 3) / 2; // u-direction carries degree+1 after the collapse
  std::vector<double> gx, gw;
  gauss_legendre_01(n, gx, gw);
  TriangleQuadrature rule;
  rule.order = degree;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double u = gx[i], v = gx[j];
      double x = u;
      double y = v * (1.0 - u);
      rule.barycentric.emplace_back(1.0 - x - y, x, y);
      rule.weights.push_back(2.0 * gw[i] * gw[j] * (1.0 - u)); // x2: normalize to sum 1
    }
  }
  return rule;
}

const TriangleQuadrature& TriangleQuadrature::get(int order) {
  if (order < 1 || order > 4) throw UnsupportedOrder("triangle quadrature order must be 1..4");
  static std::array<TriangleQuadrature, 4> cache;
  static std::once_flag once;
  std::call_once(once, [] {
    for (int k = 1; k <= 4; ++k) cache[k - 1] = gauss_duffy(k);
  });
  return cache[order - 1];
}

std::vector<QuadPoint> quadrature_on_polygon(const Polygon& p, int order) {
  const TriangleQuadrature& rule = TriangleQuadrature::get(order);
  std::vector<QuadPoint> pts;
  for (const Triangle& t : triangulate(p)) {
    double a = t.area();
    if (a <= 0.0) continue;
    for (size_t k = 0; k < rule.weights.size(); ++k) {
      const Eigen::Vector3d& l = rule.barycentric[k];
      pts.push_back({l[0] * t.a + l[1] * t.b + l[2] * t.c, rule.weights[k] * a});
    }
  }
  return pts;
}

} // namespace vemmg
