#include "forest/geometry/hull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace forest {

Hull2Result convex_hull_2d(std::span<const Point2> points) {
  Hull2Result result;
  std::vector<Point2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    if (a.x != b.x) return a.x < b.x;
    return a.y < b.y;
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Point2& a, const Point2& b) { return a.x == b.x && a.y == b.y; }),
            pts.end());
  const std::size_t n = pts.size();
  if (n < 3) {
    result.polygon = pts;
    return result;
  }

  std::vector<Point2> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {  // lower chain
    while (k >= 2 && (hull[k - 1] - hull[k - 2]).cross(pts[i] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = n - 1, lower = k + 1; i-- > 0;) {  // upper chain
    while (k >= lower && (hull[k - 1] - hull[k - 2]).cross(pts[i] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);

  double area2 = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point2& a = hull[i];
    const Point2& b = hull[(i + 1) % hull.size()];
    area2 += a.cross(b);
  }
  if (hull.size() < 3 || area2 == 0.0) {
    result.polygon = hull;
    result.area = 0.0;
    return result;
  }
  result.polygon = std::move(hull);
  result.area = 0.5 * area2;
  return result;
}

bool point_in_hull_2d(const Hull2Result& hull, const Point2& p, double eps) {
  const auto& poly = hull.polygon;
  if (poly.size() < 3 || hull.area <= 0.0) return false;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % poly.size()];
    if ((b - a).cross(p - a) < -eps) return false;
  }
  return true;
}

namespace {

struct Plane {
  Point3 normal;  // unit length
  double offset;  // dot(normal, x) = offset on the plane

  double dist(const Point3& p) const { return normal.dot(p) - offset; }
};

Point3 cross(const Point3& a, const Point3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

bool make_plane(const Point3& a, const Point3& b, const Point3& c, Plane& out) {
  Point3 n = cross(b - a, c - a);
  double len = n.norm();
  if (len == 0.0) return false;
  out.normal = n * (1.0 / len);
  out.offset = out.normal.dot(a);
  return true;
}

struct Face {
  std::array<std::uint32_t, 3> v;
  Plane plane;
  bool alive = true;
  std::vector<std::uint32_t> outside;
  std::uint32_t farthest = 0;
  double farthest_dist = 0.0;
};

struct EdgeKeyHash {
  std::size_t operator()(const std::pair<std::uint32_t, std::uint32_t>& e) const {
    return std::hash<std::uint64_t>()((static_cast<std::uint64_t>(e.first) << 32) | e.second);
  }
};

}  // namespace

Hull3Result convex_hull_3d(std::span<const Point3> points) {
  Hull3Result result;
  result.polyhedron.degenerate = true;
  const std::size_t n = points.size();
  if (n < 4) return result;

  Point3 lo{points[0]}, hi{points[0]};
  for (const Point3& p : points) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  const double diag = (hi - lo).norm();
  if (diag == 0.0) return result;
  const double eps = 1e-9 * diag;

  // initial simplex: farthest axis-extreme pair, then farthest from the line,
  // then farthest from the plane
  std::array<std::uint32_t, 6> extremes{};
  for (int a = 0; a < 3; ++a) {
    for (std::uint32_t i = 1; i < n; ++i) {
      auto coord = [&](std::uint32_t idx) {
        const Point3& p = points[idx];
        return a == 0 ? p.x : (a == 1 ? p.y : p.z);
      };
      if (coord(i) < coord(extremes[2 * a])) extremes[2 * a] = i;
      if (coord(i) > coord(extremes[2 * a + 1])) extremes[2 * a + 1] = i;
    }
  }
  std::uint32_t s0 = 0, s1 = 0;
  double best = -1.0;
  for (std::uint32_t a : extremes) {
    for (std::uint32_t b : extremes) {
      double d = distance(points[a], points[b]);
      if (d > best) {
        best = d;
        s0 = a;
        s1 = b;
      }
    }
  }
  if (best <= eps) return result;

  std::uint32_t s2 = 0;
  best = -1.0;
  Point3 dir = points[s1] - points[s0];
  double dir2 = dir.norm2();
  for (std::uint32_t i = 0; i < n; ++i) {
    Point3 rel = points[i] - points[s0];
    double t = rel.dot(dir) / dir2;
    double d = (rel - dir * t).norm();
    if (d > best) {
      best = d;
      s2 = i;
    }
  }
  if (best <= eps) return result;

  Plane base;
  make_plane(points[s0], points[s1], points[s2], base);
  std::uint32_t s3 = 0;
  best = -1.0;
  for (std::uint32_t i = 0; i < n; ++i) {
    double d = std::abs(base.dist(points[i]));
    if (d > best) {
      best = d;
      s3 = i;
    }
  }
  if (best <= eps) return result;
  result.polyhedron.degenerate = false;

  Point3 interior = (points[s0] + points[s1] + points[s2] + points[s3]) * 0.25;

  std::vector<Face> faces;
  auto add_face = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c) -> std::uint32_t {
    Face f;
    f.v = {a, b, c};
    make_plane(points[a], points[b], points[c], f.plane);
    if (f.plane.dist(interior) > 0.0) {  // flip to outward
      std::swap(f.v[1], f.v[2]);
      f.plane.normal = f.plane.normal * -1.0;
      f.plane.offset = -f.plane.offset;
    }
    faces.push_back(std::move(f));
    return static_cast<std::uint32_t>(faces.size() - 1);
  };
  add_face(s0, s1, s2);
  add_face(s0, s1, s3);
  add_face(s0, s2, s3);
  add_face(s1, s2, s3);

  auto assign_point = [&](std::uint32_t pi, std::span<const std::uint32_t> candidates) {
    for (std::uint32_t fi : candidates) {
      Face& f = faces[fi];
      if (!f.alive) continue;
      double d = f.plane.dist(points[pi]);
      if (d > eps) {
        f.outside.push_back(pi);
        if (d > f.farthest_dist) {
          f.farthest_dist = d;
          f.farthest = pi;
        }
        return;
      }
    }
  };
  {
    std::array<std::uint32_t, 4> initial{0, 1, 2, 3};
    for (std::uint32_t i = 0; i < n; ++i) {
      if (i == s0 || i == s1 || i == s2 || i == s3) continue;
      assign_point(i, initial);
    }
  }

  std::vector<std::uint32_t> pending;
  for (std::uint32_t fi = 0; fi < faces.size(); ++fi) {
    if (!faces[fi].outside.empty()) pending.push_back(fi);
  }

  using Edge = std::pair<std::uint32_t, std::uint32_t>;
  std::unordered_map<Edge, std::uint32_t, EdgeKeyHash> edge_face;
  auto register_face = [&](std::uint32_t fi) {
    const auto& v = faces[fi].v;
    edge_face[{v[0], v[1]}] = fi;
    edge_face[{v[1], v[2]}] = fi;
    edge_face[{v[2], v[0]}] = fi;
  };
  for (std::uint32_t fi = 0; fi < faces.size(); ++fi) register_face(fi);

  std::vector<std::uint32_t> visible, stack;
  std::vector<Edge> horizon;
  while (!pending.empty()) {
    std::uint32_t fi = pending.back();
    pending.pop_back();
    Face& f = faces[fi];
    if (!f.alive || f.outside.empty()) continue;
    std::uint32_t apex = f.farthest;

    // grow the visible region from f
    visible.clear();
    stack.assign(1, fi);
    f.alive = false;
    visible.push_back(fi);
    while (!stack.empty()) {
      std::uint32_t cur = stack.back();
      stack.pop_back();
      const auto& v = faces[cur].v;
      for (int e = 0; e < 3; ++e) {
        Edge twin{v[(e + 1) % 3], v[e]};
        auto it = edge_face.find(twin);
        if (it == edge_face.end()) continue;
        std::uint32_t nb = it->second;
        if (!faces[nb].alive) continue;
        if (faces[nb].plane.dist(points[apex]) > eps) {
          faces[nb].alive = false;
          visible.push_back(nb);
          stack.push_back(nb);
        }
      }
    }

    // horizon: directed edges of visible faces whose twin face stays alive
    horizon.clear();
    for (std::uint32_t vf : visible) {
      const auto& v = faces[vf].v;
      for (int e = 0; e < 3; ++e) {
        Edge edge{v[e], v[(e + 1) % 3]};
        auto it = edge_face.find({edge.second, edge.first});
        if (it == edge_face.end() || faces[it->second].alive) horizon.push_back(edge);
      }
    }

    // collect orphaned outside points, then stitch new faces apex-to-horizon
    std::vector<std::uint32_t> orphans;
    for (std::uint32_t vf : visible) {
      for (std::uint32_t pi : faces[vf].outside) {
        if (pi != apex) orphans.push_back(pi);
      }
      faces[vf].outside.clear();
      const auto& v = faces[vf].v;
      edge_face.erase({v[0], v[1]});
      edge_face.erase({v[1], v[2]});
      edge_face.erase({v[2], v[0]});
    }

    std::vector<std::uint32_t> created;
    for (const Edge& edge : horizon) {
      std::uint32_t nf = add_face(edge.first, edge.second, apex);
      register_face(nf);
      created.push_back(nf);
    }
    for (std::uint32_t pi : orphans) assign_point(pi, created);
    for (std::uint32_t nf : created) {
      if (!faces[nf].outside.empty()) pending.push_back(nf);
    }
  }

  // compact to the alive faces and used vertices
  std::vector<std::int32_t> vertex_map(n, -1);
  Polyhedron& poly = result.polyhedron;
  for (const Face& f : faces) {
    if (!f.alive) continue;
    std::array<std::uint32_t, 3> tri{};
    for (int e = 0; e < 3; ++e) {
      std::uint32_t vi = f.v[e];
      if (vertex_map[vi] < 0) {
        vertex_map[vi] = static_cast<std::int32_t>(poly.vertices.size());
        poly.vertices.push_back(points[vi]);
      }
      tri[e] = static_cast<std::uint32_t>(vertex_map[vi]);
    }
    poly.faces.push_back(tri);
  }

  Point3 centroid{0, 0, 0};
  for (const Point3& v : poly.vertices) centroid = centroid + v;
  centroid = centroid * (1.0 / static_cast<double>(poly.vertices.size()));
  double vol6 = 0.0;
  for (const auto& tri : poly.faces) {
    Point3 a = poly.vertices[tri[0]] - centroid;
    Point3 b = poly.vertices[tri[1]] - centroid;
    Point3 c = poly.vertices[tri[2]] - centroid;
    vol6 += a.dot(cross(b, c));
  }
  result.volume = vol6 / 6.0;
  return result;
}

double hull_plane_excess(const Polyhedron& poly, const Point3& p) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& tri : poly.faces) {
    Plane plane;
    if (!make_plane(poly.vertices[tri[0]], poly.vertices[tri[1]], poly.vertices[tri[2]], plane)) {
      continue;
    }
    worst = std::max(worst, plane.dist(p));
  }
  return worst;
}

}  // namespace forest
