#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "drlab/common.hpp"

namespace drlab {

enum class DomainKind { box, polygon };

struct NearestBoundary {
  double distance = std::numeric_limits<double>::infinity();
  Vec point;      // closest boundary point
  int edge = -1;  // owning edge (lowest index on ties)
  bool unique = true;
  bool at_vertex = false;
};

// Periodic (or plain) axis-aligned box, or a simple polygon in the plane.
// Polygon vertices are counterclockwise; the interior lies to the left of
// each directed edge, so the inward normal of an edge is the left normal.
class Domain {
 public:
  static Domain periodic_box(int dim, double side, Vec origin = Vec());
  static Domain plain_box(int dim, double side, Vec origin = Vec());
  static Domain polygon(std::vector<Vec> vertices);
  static Domain unit_square();
  // (0,0),(2,0),(2,1),(1,1),(1,2),(0,2)
  static Domain l_shape();

  DomainKind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool periodic() const { return periodic_; }
  bool has_boundary() const { return kind_ == DomainKind::polygon || !periodic_; }

  double side() const { return side_; }
  const Vec& origin() const { return origin_; }
  double half_width() const;
  double volume() const;

  // Periodic boxes wrap; other domains return x unchanged.
  Vec wrap(Vec x) const;
  bool contains(const Vec& x) const;

  // Polygon services
  const std::vector<Vec>& vertices() const { return vertices_; }
  int edge_count() const { return static_cast<int>(vertices_.size()); }
  Vec edge_start(int e) const;
  Vec edge_end(int e) const;
  double edge_length(int e) const;
  Vec edge_tangent(int e) const;
  Vec edge_inward_normal(int e) const;
  double perimeter() const;
  bool vertex_reflex(int v) const;  // interior angle > pi at vertex v

  // Distance to the boundary; +infinity for periodic boxes.
  double boundary_distance(const Vec& x) const;
  NearestBoundary nearest_boundary(const Vec& x) const;
  // (x - y)/|x - y| for the nearest boundary point y; errors on the boundary.
  std::pair<Vec, bool> distance_gradient(const Vec& x) const;

  // Largest inscribed distance, used for mollification limits.
  double inradius() const;

  std::string describe() const;

 private:
  DomainKind kind_ = DomainKind::box;
  int dim_ = 2;
  bool periodic_ = true;
  double side_ = 0.0;
  Vec origin_;
  std::vector<Vec> vertices_;
  double inradius_ = 0.0;
};

// Axis-aligned box region, optionally inflated by a ball of radius `round`
// (the tubular neighbourhood (A)_eps of the core box A).
struct Region {
  Vec lo, hi;
  double round = 0.0;

  Region() = default;
  Region(Vec l, Vec h) : lo(l), hi(h) {}

  Region inflated(double eps) const {
    Region r = *this;
    r.round += eps;
    return r;
  }
  bool contains(const Vec& x, int dim) const;
  double core_volume(int dim) const;
};

double point_segment_distance(const Vec& p, const Vec& a, const Vec& b, Vec* closest = nullptr);

}  // namespace drlab
