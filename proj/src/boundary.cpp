#include "drlab/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "drlab/kernels.hpp"

namespace drlab {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double CutoffFamily::value(const Vec& x) const {
  const double d = domain.boundary_distance(x);
  if (kind == CutoffKind::wedge) return std::min(1.0, d / eps);
  return std::clamp((d - eps) / eps, 0.0, 1.0);
}

Vec CutoffFamily::gradient(const Vec& x) const {
  const double d = domain.boundary_distance(x);
  const bool in_band = kind == CutoffKind::wedge ? d < eps : (d > eps && d < 2.0 * eps);
  if (!in_band || d <= 0.0) return Vec();
  return (1.0 / eps) * domain.distance_gradient(x).first;
}

double boundary_flux(const VelocityField& u, const Domain& domain, double eps,
                     CutoffKind kind, int min_points) {
  if (!domain.has_boundary()) fail(Errc::precondition, "domain has no boundary");
  if (domain.kind() != DomainKind::polygon)
    fail(Errc::precondition, "boundary flux implemented for polygon domains");
  const double band_lo = kind == CutoffKind::wedge ? 0.0 : eps;
  const double band_hi = kind == CutoffKind::wedge ? eps : 2.0 * eps;
  const double perimeter = domain.perimeter();
  const int n_t = 48;
  const int budget = std::max(min_points, 20000);

  std::vector<double> terms;
  for (int e = 0; e < domain.edge_count(); ++e) {
    const double len = domain.edge_length(e);
    const Vec start = domain.edge_start(e);
    const Vec tangent = domain.edge_tangent(e);
    const Vec normal = domain.edge_inward_normal(e);
    const int n_s = std::max(64, static_cast<int>(std::ceil(budget * (len / perimeter) / n_t)));
    const double hs = len / n_s;
    const double ht = (band_hi - band_lo) / n_t;
    for (int i = 0; i < n_s; ++i) {
      for (int j = 0; j < n_t; ++j) {
        const double s = (i + 0.5) * hs;
        const double t = band_lo + (j + 0.5) * ht;
        const Vec x = start + s * tangent + t * normal;
        if (!domain.contains(x)) continue;
        NearestBoundary nb = domain.nearest_boundary(x);
        if (nb.edge != e || nb.distance <= 0.0) continue;  // corner overlap: lowest edge wins
        const Vec grad_d = (1.0 / nb.distance) * (x - nb.point);
        terms.push_back(std::abs(dot(evaluate(u, x), grad_d)) / eps * hs * ht);
      }
    }
  }
  // polar fans at reflex vertices, where the nearest boundary point is the
  // vertex itself and the edge strips do not reach
  for (int v = 0; v < domain.edge_count(); ++v) {
    if (!domain.vertex_reflex(v)) continue;
    const Vec vert = domain.vertices()[static_cast<std::size_t>(v)];
    const int n_a = 128, n_r = n_t;
    const double hr = (band_hi - band_lo) / n_r;
    for (int i = 0; i < n_a; ++i) {
      const double alpha = 2.0 * kPi * (i + 0.5) / n_a;
      const Vec dir(std::cos(alpha), std::sin(alpha));
      for (int j = 0; j < n_r; ++j) {
        const double r = band_lo + (j + 0.5) * hr;
        if (r <= 0.0) continue;
        const Vec x = vert + r * dir;
        if (!domain.contains(x)) continue;
        NearestBoundary nb = domain.nearest_boundary(x);
        if (norm(nb.point - vert) > 1e-9 || nb.distance <= 0.0) continue;
        terms.push_back(std::abs(dot(evaluate(u, x), dir)) / eps * r * hr * (2.0 * kPi / n_a));
      }
    }
  }
  return pairwise_sum(terms);
}

TraceReport normal_trace(const VelocityField& u, const Domain& domain,
                         const std::vector<Vec>& points, std::vector<double> radii) {
  if (domain.kind() != DomainKind::polygon)
    fail(Errc::precondition, "normal traces implemented for polygon domains");
  if (radii.empty()) {
    for (int k = 2; k <= 8; ++k) radii.push_back(std::pow(2.0, -k));
  }
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] < radii[i - 1])) fail(Errc::precondition, "radii must be strictly decreasing");

  TraceReport rep;
  int id = 0;
  for (const Vec& x : points) {
    TracePoint tp;
    tp.id = id++;
    tp.x = x;
    for (const Vec& v : domain.vertices()) {
      if (norm(x - v) < 1e-9) tp.vertex_flagged = true;
    }
    if (tp.vertex_flagged) {
      rep.points.push_back(tp);
      continue;
    }
    for (double r : radii) {
      const int n = 96;
      const double h = 2.0 * r / n;
      double acc_abs = 0.0, acc_signed = 0.0;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const Vec y = x + Vec(-r + (i + 0.5) * h, -r + (j + 0.5) * h);
          if (norm_sq(y - x) >= r * r) continue;
          if (!domain.contains(y)) continue;
          NearestBoundary nb = domain.nearest_boundary(y);
          if (nb.distance <= 0.0) continue;
          const Vec grad_d = (1.0 / nb.distance) * (y - nb.point);
          const double val = dot(evaluate(u, y), grad_d);
          acc_abs += std::abs(val) * h * h;
          acc_signed += val * h * h;
        }
      }
      tp.radii.push_back(r);
      tp.avg_abs.push_back(acc_abs / (r * r));
      tp.avg_signed.push_back(acc_signed / (r * r));
    }
    const std::size_t tail = tp.avg_abs.size() > 4 ? tp.avg_abs.size() - 4 : 0;
    tp.liminf_abs = *std::min_element(tp.avg_abs.begin() + static_cast<std::ptrdiff_t>(tail),
                                      tp.avg_abs.end());
    rep.points.push_back(tp);
  }
  return rep;
}

double normal_gradient_deviation(const Domain& domain, const Vec& x, const Vec& inward_normal,
                                 double r) {
  const int n = 96;
  const double h = 2.0 * r / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Vec y = x + Vec(-r + (i + 0.5) * h, -r + (j + 0.5) * h);
      if (norm_sq(y - x) >= r * r) continue;
      if (!domain.contains(y)) continue;
      NearestBoundary nb = domain.nearest_boundary(y);
      if (nb.distance <= 0.0) continue;
      const Vec grad_d = (1.0 / nb.distance) * (y - nb.point);
      acc += norm(grad_d - inward_normal) * h * h;
    }
  }
  return acc / (r * r);
}

std::vector<BoundarySegment> full_perimeter(const Domain& domain) {
  std::vector<BoundarySegment> segs;
  for (int e = 0; e < domain.edge_count(); ++e) segs.push_back({e, 0.0, domain.edge_length(e)});
  return segs;
}

namespace {

struct AbsSegment {
  Vec a, b;
};

double segment_distance(const Vec& p, const AbsSegment& s) {
  return point_segment_distance(p, s.a, s.b);
}

}  // namespace

double minkowski_content(const Domain& domain, const std::vector<BoundarySegment>& segments,
                         double eps, MinkowskiVariant variant, MinkowskiMethod method,
                         std::uint64_t mc_samples, std::uint64_t seed) {
  if (domain.kind() != DomainKind::polygon)
    fail(Errc::precondition, "Minkowski content implemented for polygon domains");
  if (segments.empty()) fail(Errc::parameter, "empty boundary subset");
  std::vector<AbsSegment> abs;
  for (const auto& s : segments) {
    const Vec start = domain.edge_start(s.edge);
    const Vec t = domain.edge_tangent(s.edge);
    if (!(s.s1 > s.s0)) fail(Errc::parameter, "segment arclength range must be increasing");
    abs.push_back({start + s.s0 * t, start + s.s1 * t});
  }

  const bool interior = variant == MinkowskiVariant::interior;
  double area = 0.0;

  if (method == MinkowskiMethod::stratified) {
    // partition the tube by nearest segment (lowest index on ties); local
    // (s, t) patches per segment
    for (std::size_t i = 0; i < abs.size(); ++i) {
      const Vec dir = (1.0 / norm(abs[i].b - abs[i].a)) * (abs[i].b - abs[i].a);
      const Vec nrm(-dir[1], dir[0]);
      const double len = norm(abs[i].b - abs[i].a);
      const int n_s = std::max(256, static_cast<int>(std::ceil((len + 2 * eps) / (eps / 2.0))));
      const int n_t = 48;
      const double hs = (len + 2 * eps) / n_s;
      const double ht = 2 * eps / n_t;
      std::vector<double> terms;
      terms.reserve(static_cast<std::size_t>(n_s) * static_cast<std::size_t>(n_t));
      for (int si = 0; si < n_s; ++si) {
        const double s = -eps + (si + 0.5) * hs;
        for (int ti = 0; ti < n_t; ++ti) {
          const double t = -eps + (ti + 0.5) * ht;
          const Vec x = abs[i].a + s * dir + t * nrm;
          const double di = segment_distance(x, abs[i]);
          if (di >= eps) continue;
          bool mine = true;
          for (std::size_t j = 0; j < i; ++j) {
            if (segment_distance(x, abs[j]) < eps) {
              mine = false;  // counted by the lower-index patch
              break;
            }
          }
          if (!mine) continue;
          if (interior && !domain.contains(x)) continue;
          terms.push_back(hs * ht);
        }
      }
      area += pairwise_sum(terms);
    }
  } else {
    Vec lo = abs[0].a, hi = abs[0].a;
    for (const auto& s : abs) {
      for (const Vec* p : {&s.a, &s.b}) {
        for (int k = 0; k < 2; ++k) {
          lo[k] = std::min(lo[k], (*p)[k] - eps);
          hi[k] = std::max(hi[k], (*p)[k] + eps);
        }
      }
    }
    const double box_area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < mc_samples; ++i) {
      SplitMix64 g(stream_seed(seed, i));
      const Vec x(lo[0] + g.uniform() * (hi[0] - lo[0]), lo[1] + g.uniform() * (hi[1] - lo[1]));
      double d = std::numeric_limits<double>::infinity();
      for (const auto& s : abs) d = std::min(d, segment_distance(x, s));
      if (d >= eps) continue;
      if (interior && !domain.contains(x)) continue;
      ++hits;
    }
    area = box_area * static_cast<double>(hits) / static_cast<double>(mc_samples);
  }
  return interior ? area / eps : area / (2.0 * eps);
}

EnergyConservationReport energy_conservation_check(const VelocityField& u,
                                                   const std::vector<double>& eps_list,
                                                   const std::vector<double>& horizons,
                                                   const TestFunction* phi,
                                                   const Kernel* theta) {
  EnergyConservationReport rep;
  rep.field_id = u.id;
  rep.kinetic = kinetic_energy(u);

  // divergence-free preconditions are delegated to the interior certificate,
  // which reports the polar trace in its refusal

  // tangency: sample the normal component along each edge
  if (u.domain.kind() == DomainKind::polygon) {
    double worst = 0.0;
    for (int e = 0; e < u.domain.edge_count(); ++e) {
      const Vec start = u.domain.edge_start(e);
      const Vec tangent = u.domain.edge_tangent(e);
      const Vec nrm = u.domain.edge_inward_normal(e);
      const double len = u.domain.edge_length(e);
      for (int i = 0; i < 64; ++i) {
        const Vec x = start + ((i + 0.5) / 64.0 * len) * tangent + 1e-9 * nrm;
        worst = std::max(worst, std::abs(dot(evaluate(u, x), nrm)));
      }
    }
    if (worst > 1e-6 * (1.0 + u.max_abs)) {
      rep.refused = true;
      std::ostringstream os;
      os << "field is not tangent to the boundary (max |u.n| = " << worst << ")";
      rep.refusal_reason = os.str();
      fail(Errc::refusal, "energy conservation check refused: " + rep.refusal_reason);
    }
  }

  TestFunction phi_local;
  if (phi) {
    phi_local = *phi;
  } else if (u.domain.kind() == DomainKind::polygon) {
    phi_local = TestFunction::make(u.domain, Vec(0.5, 0.5), 0.35);
  } else {
    Vec c = u.domain.origin();
    for (int k = 0; k < u.dim; ++k) c[k] += u.domain.side() / 2.0;
    if (u.id == "shear_layer") c = Vec(0.0, 0.0);  // straddle the sheet
    phi_local = TestFunction::make(u.domain, c, u.domain.side() / 4.0);
  }
  Kernel theta_local = theta ? *theta : make_bump(BumpKind::standard_radial, u.dim);

  rep.interior = conservation_report(u, phi_local, theta_local, horizons, eps_list);
  rep.interior_checked = true;
  if (rep.interior.rows.size() >= 2 && rep.interior.rows.front().value > 0.0) {
    rep.interior_ratio = rep.interior.rows.back().value / rep.interior.rows.front().value;
  }

  if (u.domain.has_boundary()) {
    rep.boundary_checked = true;
    for (double e : eps_list) {
      rep.eps.push_back(e);
      rep.boundary_flux_values.push_back(boundary_flux(u, u.domain, e));
    }
    if (rep.boundary_flux_values.size() >= 2 && rep.boundary_flux_values.front() > 1e-14) {
      rep.boundary_ratio = rep.boundary_flux_values.back() / rep.boundary_flux_values.front();
    }
  }

  // interior: the certificate must track its own 2/T-type bound, so it can
  // be driven arbitrarily small by larger horizons
  bool interior_ok = !rep.interior.rows.empty();
  for (const auto& row : rep.interior.rows) {
    if (row.value > 1.2 * row.bound + 5.0 * row.objective_error + 1e-12) interior_ok = false;
  }
  const bool boundary_ok = !rep.boundary_checked || rep.boundary_ratio <= 0.5 ||
                           rep.boundary_flux_values.front() <= 1e-12;
  rep.verdict = interior_ok && boundary_ok ? "consistent with conservation" : "inconclusive";
  return rep;
}

}  // namespace drlab
