#include "drlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace drlab {

namespace {

bool segments_properly_intersect(const Vec& a, const Vec& b, const Vec& c, const Vec& d) {
  auto cross = [](const Vec& u, const Vec& v) { return u[0] * v[1] - u[1] * v[0]; };
  double d1 = cross(b - a, c - a);
  double d2 = cross(b - a, d - a);
  double d3 = cross(d - c, a - c);
  double d4 = cross(d - c, b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

}  // namespace

double point_segment_distance(const Vec& p, const Vec& a, const Vec& b, Vec* closest) {
  Vec ab = b - a;
  double len2 = norm_sq(ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  Vec q = a + t * ab;
  if (closest) *closest = q;
  return norm(p - q);
}

Domain Domain::periodic_box(int dim, double side, Vec origin) {
  if (dim < 1 || dim > 3) fail(Errc::parameter, "box dimension must be 1, 2 or 3");
  if (!(side > 0.0) || !std::isfinite(side)) fail(Errc::parameter, "box side must be finite and positive");
  Domain d;
  d.kind_ = DomainKind::box;
  d.dim_ = dim;
  d.periodic_ = true;
  d.side_ = side;
  d.origin_ = origin;
  d.inradius_ = side / 2.0;
  return d;
}

Domain Domain::plain_box(int dim, double side, Vec origin) {
  Domain d = periodic_box(dim, side, origin);
  d.periodic_ = false;
  return d;
}

Domain Domain::polygon(std::vector<Vec> vertices) {
  const int n = static_cast<int>(vertices.size());
  if (n < 3) fail(Errc::parameter, "polygon needs at least 3 vertices");
  // signed area; require counterclockwise orientation
  double area2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec& a = vertices[static_cast<std::size_t>(i)];
    const Vec& b = vertices[static_cast<std::size_t>((i + 1) % n)];
    area2 += a[0] * b[1] - b[0] * a[1];
  }
  if (area2 <= 0.0) fail(Errc::parameter, "polygon vertices must be counterclockwise");
  // simplicity: no two non-adjacent edges may properly intersect
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_properly_intersect(vertices[static_cast<std::size_t>(i)],
                                      vertices[static_cast<std::size_t>((i + 1) % n)],
                                      vertices[static_cast<std::size_t>(j)],
                                      vertices[static_cast<std::size_t>((j + 1) % n)])) {
        fail(Errc::parameter, "polygon is not simple (edges intersect)");
      }
    }
  }
  Domain d;
  d.kind_ = DomainKind::polygon;
  d.dim_ = 2;
  d.periodic_ = false;
  d.vertices_ = std::move(vertices);

  // inscribed distance estimate on a coarse interior grid
  Vec lo = d.vertices_[0], hi = d.vertices_[0];
  for (const Vec& v : d.vertices_) {
    for (int k = 0; k < 2; ++k) {
      lo[k] = std::min(lo[k], v[k]);
      hi[k] = std::max(hi[k], v[k]);
    }
  }
  double best = 0.0;
  const int m = 64;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      Vec p(lo[0] + (i + 0.5) / m * (hi[0] - lo[0]), lo[1] + (j + 0.5) / m * (hi[1] - lo[1]));
      if (d.contains(p)) best = std::max(best, d.boundary_distance(p));
    }
  }
  d.inradius_ = best;
  return d;
}

Domain Domain::unit_square() {
  return polygon({Vec(0, 0), Vec(1, 0), Vec(1, 1), Vec(0, 1)});
}

Domain Domain::l_shape() {
  return polygon({Vec(0, 0), Vec(2, 0), Vec(2, 1), Vec(1, 1), Vec(1, 2), Vec(0, 2)});
}

double Domain::half_width() const {
  return kind_ == DomainKind::box ? side_ / 2.0 : inradius_;
}

double Domain::volume() const {
  if (kind_ == DomainKind::box) return std::pow(side_, dim_);
  double area2 = 0.0;
  const int n = edge_count();
  for (int i = 0; i < n; ++i) {
    Vec a = edge_start(i), b = edge_end(i);
    area2 += a[0] * b[1] - b[0] * a[1];
  }
  return 0.5 * area2;
}

Vec Domain::wrap(Vec x) const {
  if (kind_ != DomainKind::box || !periodic_) return x;
  for (int k = 0; k < dim_; ++k) {
    double t = (x[k] - origin_[k]) / side_;
    t -= std::floor(t);
    x[k] = origin_[k] + t * side_;
  }
  return x;
}

bool Domain::contains(const Vec& x) const {
  if (kind_ == DomainKind::box) {
    if (periodic_) return true;
    for (int k = 0; k < dim_; ++k)
      if (x[k] < origin_[k] || x[k] > origin_[k] + side_) return false;
    return true;
  }
  // crossing number
  const int n = edge_count();
  bool inside = false;
  for (int i = 0; i < n; ++i) {
    Vec a = edge_start(i), b = edge_end(i);
    if ((a[1] > x[1]) != (b[1] > x[1])) {
      double t = (x[1] - a[1]) / (b[1] - a[1]);
      double xi = a[0] + t * (b[0] - a[0]);
      if (x[0] < xi) inside = !inside;
    }
  }
  return inside;
}

Vec Domain::edge_start(int e) const { return vertices_[static_cast<std::size_t>(e)]; }
Vec Domain::edge_end(int e) const {
  return vertices_[static_cast<std::size_t>((e + 1) % edge_count())];
}
double Domain::edge_length(int e) const { return norm(edge_end(e) - edge_start(e)); }
Vec Domain::edge_tangent(int e) const {
  Vec t = edge_end(e) - edge_start(e);
  return (1.0 / norm(t)) * t;
}
Vec Domain::edge_inward_normal(int e) const {
  Vec t = edge_tangent(e);
  return Vec(-t[1], t[0]);
}
double Domain::perimeter() const {
  double p = 0.0;
  for (int e = 0; e < edge_count(); ++e) p += edge_length(e);
  return p;
}

bool Domain::vertex_reflex(int v) const {
  const int n = edge_count();
  Vec prev = edge_tangent((v + n - 1) % n);
  Vec next = edge_tangent(v);
  double cross = prev[0] * next[1] - prev[1] * next[0];
  return cross < 0.0;
}

double Domain::boundary_distance(const Vec& x) const {
  if (kind_ == DomainKind::box) {
    if (periodic_) return std::numeric_limits<double>::infinity();
    double d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < dim_; ++k) {
      d = std::min(d, x[k] - origin_[k]);
      d = std::min(d, origin_[k] + side_ - x[k]);
    }
    return d;
  }
  return nearest_boundary(x).distance;
}

NearestBoundary Domain::nearest_boundary(const Vec& x) const {
  NearestBoundary best;
  if (kind_ == DomainKind::box) {
    if (periodic_) return best;
    // faces of the plain box
    for (int k = 0; k < dim_; ++k) {
      for (int s = 0; s < 2; ++s) {
        Vec q = x;
        q[k] = s == 0 ? origin_[k] : origin_[k] + side_;
        for (int m = 0; m < dim_; ++m)
          if (m != k) q[m] = std::clamp(q[m], origin_[m], origin_[m] + side_);
        double d = norm(x - q);
        int face = 2 * k + s;
        if (d < best.distance - 1e-12) {
          best = {d, q, face, true, false};
        } else if (d < best.distance + 1e-12) {
          best.unique = false;
        }
      }
    }
    return best;
  }
  const int n = edge_count();
  for (int e = 0; e < n; ++e) {
    Vec q;
    double d = point_segment_distance(x, edge_start(e), edge_end(e), &q);
    if (d < best.distance - 1e-12) {
      best.distance = d;
      best.point = q;
      best.edge = e;
      best.unique = true;
    } else if (d < best.distance + 1e-12) {
      best.unique = false;  // tie; keep the lowest-index edge
    }
  }
  for (const Vec& v : vertices_) {
    if (norm(best.point - v) < 1e-12) best.at_vertex = true;
  }
  return best;
}

std::pair<Vec, bool> Domain::distance_gradient(const Vec& x) const {
  NearestBoundary nb = nearest_boundary(x);
  if (!std::isfinite(nb.distance)) fail(Errc::domain, "periodic box has no boundary");
  if (nb.distance <= 0.0 || norm(x - nb.point) == 0.0)
    fail(Errc::domain, "distance gradient undefined on the boundary");
  Vec g = (1.0 / nb.distance) * (x - nb.point);
  return {g, nb.unique};
}

double Domain::inradius() const { return inradius_; }

std::string Domain::describe() const {
  std::ostringstream os;
  if (kind_ == DomainKind::box) {
    os << (periodic_ ? "periodic_box" : "box") << "(d=" << dim_ << ", side=" << side_ << ")";
  } else {
    os << "polygon(" << edge_count() << " vertices)";
  }
  return os.str();
}

bool Region::contains(const Vec& x, int dim) const {
  if (round <= 0.0) {
    for (int k = 0; k < dim; ++k)
      if (x[k] < lo[k] || x[k] > hi[k]) return false;
    return true;
  }
  double d2 = 0.0;
  for (int k = 0; k < dim; ++k) {
    double e = std::max({lo[k] - x[k], 0.0, x[k] - hi[k]});
    d2 += e * e;
  }
  return d2 <= round * round;
}

double Region::core_volume(int dim) const {
  double v = 1.0;
  for (int k = 0; k < dim; ++k) v *= std::max(0.0, hi[k] - lo[k]);
  return v;
}

}  // namespace drlab
