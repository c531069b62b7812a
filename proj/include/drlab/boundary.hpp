#pragma once

#include <optional>
#include <string>
#include <vector>

#include "drlab/fields.hpp"
#include "drlab/optimize.hpp"

namespace drlab {

enum class CutoffKind { wedge, annular };

// Distance-ramp cutoff family: wedge is 1 on {d > eps} and d/eps below;
// annular is 1 on {d > 2 eps}, 0 on {d < eps}, linear between.
struct CutoffFamily {
  Domain domain;
  double eps = 0.1;
  CutoffKind kind = CutoffKind::wedge;

  double value(const Vec& x) const;
  // eps^{-1} grad d on the transition band, zero elsewhere
  Vec gradient(const Vec& x) const;
};

// integral over the domain of |u . grad phi_eps| by band-adapted quadrature:
// per-edge strips in (arclength, depth) coordinates plus polar fans at
// reflex vertices; at least min_points nodes.
double boundary_flux(const VelocityField& u, const Domain& domain, double eps,
                     CutoffKind kind = CutoffKind::wedge, int min_points = 10000);

struct TracePoint {
  int id = 0;
  Vec x;
  bool vertex_flagged = false;  // traces are undefined at polygon vertices
  std::vector<double> radii;
  std::vector<double> avg_abs;     // r^{-d} int_{B_r cap Omega} |u . grad d|
  std::vector<double> avg_signed;  // same without the absolute value
  double liminf_abs = 0.0;         // min of avg_abs over the radii tail
};

struct TraceReport {
  std::vector<TracePoint> points;
};

// Ball averages of u . grad d at boundary points over a decreasing radius
// schedule (default dyadic 2^{-k}, k = 2..8).
TraceReport normal_trace(const VelocityField& u, const Domain& domain,
                         const std::vector<Vec>& points, std::vector<double> radii = {});

// Ball-average distance-gradient deviation r^{-d} int |grad d - n(x)| at a
// boundary point, for Lebesgue-point checks of the inward normal.
double normal_gradient_deviation(const Domain& domain, const Vec& x, const Vec& inward_normal,
                                 double r);

struct BoundarySegment {
  int edge = 0;
  double s0 = 0.0, s1 = 0.0;  // arclength range on the edge
};

enum class MinkowskiVariant { full, interior };
enum class MinkowskiMethod { stratified, monte_carlo };

// area((C)_eps)/(2 eps) (full) or area((C)_eps cap Omega)/eps (interior) for
// a union C of boundary sub-segments. The stratified method partitions the
// tube by nearest segment; monte_carlo samples a bounding box with a
// counter-based stream (seed fixed in deterministic runs).
double minkowski_content(const Domain& domain, const std::vector<BoundarySegment>& segments,
                         double eps, MinkowskiVariant variant = MinkowskiVariant::full,
                         MinkowskiMethod method = MinkowskiMethod::stratified,
                         std::uint64_t mc_samples = 1000000, std::uint64_t seed = 0x5eed);

std::vector<BoundarySegment> full_perimeter(const Domain& domain);

struct EnergyConservationReport {
  std::string field_id;
  bool refused = false;
  std::string refusal_reason;
  double kinetic = 0.0;
  bool interior_checked = false;
  CertificateReport interior;
  bool boundary_checked = false;  // skipped for periodic boxes
  std::vector<double> eps;
  std::vector<double> boundary_flux_values;
  double interior_ratio = 0.0;  // certificate(T_max)/certificate(T_min)
  double boundary_ratio = 0.0;  // flux(eps_min)/flux(eps_max)
  std::string verdict;
};

// Combines the interior flow-averaged certificate with the boundary-flux
// decay at one time slice. Refuses fields that are not divergence-free and
// tangent to the boundary.
EnergyConservationReport energy_conservation_check(const VelocityField& u,
                                                   const std::vector<double>& eps_list,
                                                   const std::vector<double>& horizons,
                                                   const TestFunction* phi = nullptr,
                                                   const Kernel* theta = nullptr);

}  // namespace drlab
