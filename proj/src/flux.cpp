#include "drlab/flux.hpp"

#include <algorithm>
#include <cmath>

#include "drlab/quadrature.hpp"

namespace drlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

// crossing thresholds of the sheets along their axis, in z units, for the
// inner z-integral at a fixed x
std::array<std::vector<double>, 3> z_splits_at(const VelocityField& u, double eps, const Vec& x) {
  std::array<std::vector<double>, 3> splits;
  if (!u.piecewise_constant) return splits;
  const bool periodic = u.domain.kind() == DomainKind::box && u.domain.periodic();
  const double L = u.domain.side();
  Vec w = periodic ? u.domain.wrap(x) : x;
  for (const JumpSheet& s : u.sheets) {
    for (int shift = -1; shift <= 1; ++shift) {
      if (shift != 0 && !periodic) continue;
      const double t = (s.position + shift * L - w[s.axis]) / eps;
      if (std::abs(t) < 1.0) splits[static_cast<std::size_t>(s.axis)].push_back(t);
    }
  }
  return splits;
}

// sheet positions inflated by eps, for spatial quadrature strata
std::array<std::vector<double>, 3> x_splits(const VelocityField& u, double eps, double zmax = 1.0) {
  std::array<std::vector<double>, 3> splits;
  if (!u.piecewise_constant) return splits;
  const bool periodic = u.domain.kind() == DomainKind::box && u.domain.periodic();
  const double L = u.domain.side();
  for (const JumpSheet& s : u.sheets) {
    for (int shift = -1; shift <= 1; ++shift) {
      if (shift != 0 && !periodic) continue;
      const double p = s.position + shift * L;
      auto& ax = splits[static_cast<std::size_t>(s.axis)];
      ax.push_back(p - eps * zmax);
      ax.push_back(p);
      ax.push_back(p + eps * zmax);
    }
  }
  return splits;
}

int default_x_points(int dim) { return dim == 1 ? 512 : (dim == 2 ? 128 : 32); }
int default_z_points(int dim) { return dim == 1 ? 192 : (dim == 2 ? 32 : 16); }

// Bounded domains restrict increments to 2|xi| < dist(x, boundary); sample
// points violating that are outside the evaluable region of D_eps.
bool x_admissible(const VelocityField& u, const Vec& x, double reach) {
  if (u.domain.kind() == DomainKind::box && u.domain.periodic()) return true;
  return u.domain.boundary_distance(x) > 2.0 * reach;
}

// increment without domain checks, for inner loops that established
// admissibility of the whole displacement ball up front
Vec increment_unchecked(const VelocityField& u, const Vec& x, const Vec& xi) {
  if (u.domain.kind() == DomainKind::box && u.domain.periodic()) {
    return u.eval_local(u.domain.wrap(x + xi)) - u.eval_local(u.domain.wrap(x));
  }
  return u.eval_local(x + xi) - u.eval_local(x);
}

double min_sheet_gap(const VelocityField& u) {
  if (!u.piecewise_constant || u.sheets.empty()) return std::numeric_limits<double>::infinity();
  const double L = u.domain.side();
  std::vector<double> pos;
  for (const JumpSheet& s : u.sheets) pos.push_back(s.position);
  std::sort(pos.begin(), pos.end());
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < pos.size(); ++i) gap = std::min(gap, pos[i + 1] - pos[i]);
  gap = std::min(gap, pos.front() + L - pos.back());
  return gap;
}

}  // namespace

TestFunction TestFunction::make(const Domain& domain, Vec center, double radius, int order) {
  if (!(radius > 0.0)) fail(Errc::parameter, "test function radius must be positive");
  if (order < 1) fail(Errc::parameter, "test function smoothness order must be >= 1");
  TestFunction phi;
  phi.center = center;
  phi.radius = radius;
  phi.order = order;
  phi.dim = domain.dim();
  if (domain.has_boundary()) {
    const double d = domain.boundary_distance(center);
    if (!(d > radius)) fail(Errc::parameter, "test function support must stay inside the domain");
    phi.boundary_clearance = d - radius;
  } else {
    if (!(radius < domain.half_width()))
      fail(Errc::parameter, "test function support must fit inside the periodic cell");
    phi.boundary_clearance = domain.half_width() - radius;
  }
  nlohmann::json cj = nlohmann::json::array();
  for (int k = 0; k < phi.dim; ++k) cj.push_back(center[k]);
  phi.descriptor = {{"center", cj}, {"radius", radius}, {"order", order}};
  return phi;
}

double d_eps_at(const VelocityField& u, const Kernel& rho, double eps, const Vec& x,
                int z_points_per_axis) {
  if (u.piecewise_constant && jump_distance(u, x) > eps * rho.support_radius) return 0.0;
  if (!x_admissible(u, x, eps * rho.support_radius)) return 0.0;
  const int n = z_points_per_axis > 0 ? z_points_per_axis : default_z_points(u.dim);
  std::array<int, 3> counts{n, n, n};
  auto splits = z_splits_at(u, eps, x);
  Vec lo, hi;
  for (int k = 0; k < u.dim; ++k) {
    lo[k] = -1.0;
    hi[k] = 1.0;
  }
  Mask ball = [](const Vec& z) { return norm_sq(z) < 1.0; };
  const double val = box_integrate_value(
      u.dim, lo, hi, counts,
      [&](const Vec& z) {
        const Vec du = increment_unchecked(u, x, eps * z);
        const double du2 = norm_sq(du);
        if (du2 == 0.0) return 0.0;
        return dot(rho.grad(z), du) * du2;
      },
      &ball, &splits);
  return val / (4.0 * eps);
}

SampledField d_eps_field(const VelocityField& u, const Kernel& rho, double eps,
                         const Region& region, int points_per_axis) {
  KernelReport rep = validate_kernel(rho);
  if (!rep.usable()) fail(Errc::parameter, "kernel fails admissibility checks");
  const int n = points_per_axis > 0 ? points_per_axis : 64;
  std::array<AxisGrid, 3> axes;
  std::array<std::size_t, 3> count{1, 1, 1};
  for (int k = 0; k < u.dim; ++k) {
    axes[static_cast<std::size_t>(k)] = midpoint_axis(region.lo[k], region.hi[k], n);
    count[static_cast<std::size_t>(k)] = axes[static_cast<std::size_t>(k)].centers.size();
  }
  SampledField out;
  const std::size_t total = count[0] * count[1] * count[2];
  out.points.resize(total);
  out.values.resize(total);
  parallel_for(total, [&](std::size_t idx) {
    std::size_t rest = idx;
    std::array<std::size_t, 3> ii{0, 0, 0};
    for (int k = u.dim - 1; k >= 0; --k) {
      ii[static_cast<std::size_t>(k)] = rest % count[static_cast<std::size_t>(k)];
      rest /= count[static_cast<std::size_t>(k)];
    }
    Vec x;
    for (int k = 0; k < u.dim; ++k) x[k] = axes[static_cast<std::size_t>(k)].centers[ii[static_cast<std::size_t>(k)]];
    out.points[idx] = x;
    out.values[idx] = d_eps_at(u, rho, eps, x);
  });
  return out;
}

namespace {

struct SpatialRule {
  std::array<AxisGrid, 3> axes;
  std::array<std::size_t, 3> count{1, 1, 1};
  std::size_t total = 1;
};

SpatialRule spatial_rule(const VelocityField& u, const Region& region, double eps, int n,
                         double support_radius) {
  SpatialRule r;
  auto splits = x_splits(u, eps, support_radius);
  for (int k = 0; k < u.dim; ++k) {
    r.axes[static_cast<std::size_t>(k)] =
        strata_axis(region.lo[k], region.hi[k], splits[static_cast<std::size_t>(k)], n, 24);
    r.count[static_cast<std::size_t>(k)] = r.axes[static_cast<std::size_t>(k)].centers.size();
  }
  for (int k = 0; k < u.dim; ++k) r.total *= r.count[static_cast<std::size_t>(k)];
  return r;
}

// one spatial pass; fills signed/absolute (and pairing when phi is given)
void flux_pass(const VelocityField& u, const Kernel& rho, double eps, const SpatialRule& rule,
               const TestFunction* phi, int z_points, double* signed_out, double* abs_out,
               double* pairing_out) {
  std::vector<double> ts(rule.total), ta(rule.total), tp(phi ? rule.total : 0);
  parallel_for(rule.total, [&](std::size_t idx) {
    std::size_t rest = idx;
    std::array<std::size_t, 3> ii{0, 0, 0};
    for (int k = u.dim - 1; k >= 0; --k) {
      ii[static_cast<std::size_t>(k)] = rest % rule.count[static_cast<std::size_t>(k)];
      rest /= rule.count[static_cast<std::size_t>(k)];
    }
    Vec x;
    double w = 1.0;
    for (int k = 0; k < u.dim; ++k) {
      x[k] = rule.axes[static_cast<std::size_t>(k)].centers[ii[static_cast<std::size_t>(k)]];
      w *= rule.axes[static_cast<std::size_t>(k)].weights[ii[static_cast<std::size_t>(k)]];
    }
    const double d = d_eps_at(u, rho, eps, x, z_points);
    ts[idx] = w * d;
    ta[idx] = w * std::abs(d);
    if (phi) tp[idx] = w * d * phi->eval(x);
  });
  if (signed_out) *signed_out = pairwise_sum(ts);
  if (abs_out) *abs_out = pairwise_sum(ta);
  if (pairing_out && phi) *pairing_out = pairwise_sum(tp);
}

}  // namespace

FluxResult total_flux(const VelocityField& u, const Kernel& rho, double eps,
                      const Region& region, int points_per_axis) {
  const int n = points_per_axis > 0 ? points_per_axis : default_x_points(u.dim);
  FluxResult res;
  SpatialRule fine = spatial_rule(u, region, eps, n, rho.support_radius);
  flux_pass(u, rho, eps, fine, nullptr, 0, &res.signed_total, &res.absolute_total, nullptr);
  SpatialRule coarse = spatial_rule(u, region, eps, std::max(8, n / 2), rho.support_radius);
  double cs = 0.0, ca = 0.0;
  flux_pass(u, rho, eps, coarse, nullptr, 0, &cs, &ca, nullptr);
  res.quad_error = std::max(std::abs(res.signed_total - cs), std::abs(res.absolute_total - ca));
  return res;
}

double d_eps_pairing(const VelocityField& u, const Kernel& rho, double eps,
                     const TestFunction& phi) {
  Region supp;
  for (int k = 0; k < u.dim; ++k) {
    supp.lo[k] = phi.center[k] - phi.radius;
    supp.hi[k] = phi.center[k] + phi.radius;
  }
  const int n = u.dim == 1 ? 1024 : (u.dim == 2 ? 128 : 32);
  SpatialRule rule = spatial_rule(u, supp, eps, n, rho.support_radius);
  double pairing = 0.0;
  flux_pass(u, rho, eps, rule, &phi, 0, nullptr, nullptr, &pairing);
  return pairing;
}

FluxReport flux_convergence(const VelocityField& u, const Kernel& rho,
                            const std::vector<double>& eps_list, const Region& region,
                            const TestFunction* phi) {
  if (eps_list.size() < 4) fail(Errc::precondition, "need at least 4 scales for convergence study");
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1]))
      fail(Errc::precondition, "the scale list must be strictly decreasing");

  FluxReport rep;
  rep.field_id = u.id;
  rep.kernel_id = rho.id;
  rep.eps = eps_list;
  for (double e : eps_list) {
    FluxResult r = total_flux(u, rho, e, region);
    rep.signed_total.push_back(r.signed_total);
    rep.absolute_total.push_back(r.absolute_total);
    if (phi) rep.pairing.push_back(d_eps_pairing(u, rho, e, *phi));
  }
  const auto& t = rep.signed_total;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) rep.cauchy_residual.push_back(t[i + 1] - t[i]);

  double scale = 0.0;
  for (double v : t) scale = std::max(scale, std::abs(v));
  const double atol = 1e-12 + 1e-9 * scale;
  const double noise_floor = 1e-12 + 1e-5 * scale;  // quadrature noise on flat sequences
  const std::size_t m = t.size();
  const double d1 = t[m - 2] - t[m - 3];
  const double d2 = t[m - 1] - t[m - 2];
  if (std::abs(d2) <= atol || std::abs(d2 - d1) <= atol) {
    rep.extrapolated = t[m - 1];
  } else {
    double aitken = t[m - 1] - d2 * d2 / (d2 - d1);
    rep.extrapolated = std::abs(aitken - t[m - 1]) <= 3.0 * std::abs(d2) ? aitken : t[m - 1];
  }
  rep.cauchy = !(std::abs(d2) > 1.5 * std::abs(d1) + noise_floor);

  const auto& ta = rep.absolute_total;
  const double a1 = ta[m - 2] - ta[m - 3];
  const double a2 = ta[m - 1] - ta[m - 2];
  if (std::abs(a2) <= atol || std::abs(a2 - a1) <= atol) {
    rep.extrapolated_abs = ta[m - 1];
  } else {
    double aitken = ta[m - 1] - a2 * a2 / (a2 - a1);
    rep.extrapolated_abs = std::abs(aitken - ta[m - 1]) <= 3.0 * std::abs(a2) ? aitken : ta[m - 1];
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Directional flux
// ---------------------------------------------------------------------------

namespace {

// integral of phi over the slab {a <= x[axis] < b} (times the other axes)
double slab_pairing(const TestFunction& phi, int axis, double a, double b, int across,
                    int along) {
  if (!(b > a)) return 0.0;
  const int dim = phi.dim;
  double total = 0.0;
  const double ha = (b - a) / across;
  if (dim == 1) {
    for (int i = 0; i < across; ++i) total += ha * phi.eval(Vec(a + (i + 0.5) * ha));
    return total;
  }
  const int other = axis == 0 ? 1 : 0;
  const double o_lo = phi.center[other] - phi.radius;
  const double o_hi = phi.center[other] + phi.radius;
  const double ho = (o_hi - o_lo) / along;
  for (int i = 0; i < across; ++i) {
    for (int j = 0; j < along; ++j) {
      Vec x;
      x[axis] = a + (i + 0.5) * ha;
      x[other] = o_lo + (j + 0.5) * ho;
      total += ha * ho * phi.eval(x);
    }
  }
  return total;
}

Vec directional_value_strips(const VelocityField& u, double eps, const TestFunction& phi,
                             const Vec& z, int across) {
  Vec v;
  const bool periodic = u.domain.kind() == DomainKind::box && u.domain.periodic();
  const double L = u.domain.side();
  for (const JumpSheet& s : u.sheets) {
    const double dz = z[s.axis];
    if (dz == 0.0) continue;
    const double jm2 = norm_sq(s.jump);
    for (int shift = -1; shift <= 1; ++shift) {
      if (shift != 0 && !periodic) continue;
      const double p = s.position + shift * L;
      // x straddles the sheet: x in [p - eps dz, p) for dz>0, [p, p - eps dz) for dz<0
      const double a = dz > 0.0 ? p - eps * dz : p;
      const double b = dz > 0.0 ? p : p - eps * dz;
      const double mass = slab_pairing(phi, s.axis, a, b, across, 256);
      if (mass == 0.0) continue;
      const double sign = dz > 0.0 ? 1.0 : -1.0;
      v = v + (sign * jm2 * mass / eps) * s.jump;
    }
  }
  return v;
}

Vec directional_value_grid(const VelocityField& u, double eps, const TestFunction& phi,
                           const Vec& z, int n) {
  std::array<AxisGrid, 3> axes;
  std::array<std::size_t, 3> count{1, 1, 1};
  for (int k = 0; k < u.dim; ++k) {
    axes[static_cast<std::size_t>(k)] =
        midpoint_axis(phi.center[k] - phi.radius, phi.center[k] + phi.radius, n);
    count[static_cast<std::size_t>(k)] = axes[static_cast<std::size_t>(k)].centers.size();
  }
  const std::size_t total = count[0] * count[1] * count[2];
  std::vector<double> tx(total), ty(total), tz(total);
  parallel_for(total, [&](std::size_t idx) {
    std::size_t rest = idx;
    std::array<std::size_t, 3> ii{0, 0, 0};
    for (int k = u.dim - 1; k >= 0; --k) {
      ii[static_cast<std::size_t>(k)] = rest % count[static_cast<std::size_t>(k)];
      rest /= count[static_cast<std::size_t>(k)];
    }
    Vec x;
    double w = 1.0;
    for (int k = 0; k < u.dim; ++k) {
      x[k] = axes[static_cast<std::size_t>(k)].centers[ii[static_cast<std::size_t>(k)]];
      w *= axes[static_cast<std::size_t>(k)].weights[ii[static_cast<std::size_t>(k)]];
    }
    const double pw = phi.eval(x);
    if (pw == 0.0 || !x_admissible(u, x, eps * norm(z))) {
      tx[idx] = ty[idx] = tz[idx] = 0.0;
      return;
    }
    const Vec du = increment_unchecked(u, x, eps * z);
    const Vec t = (norm_sq(du) / eps) * du;
    tx[idx] = w * pw * t[0];
    ty[idx] = w * pw * t[1];
    tz[idx] = w * pw * t[2];
  });
  return Vec(pairwise_sum(tx), pairwise_sum(ty), pairwise_sum(tz));
}

}  // namespace

DirectionalFluxTable directional_flux(const VelocityField& u, double eps,
                                      const TestFunction& phi, int n_radii, int n_angles) {
  if (!(eps > 0.0)) fail(Errc::parameter, "eps must be positive");
  if (u.dim > 2) fail(Errc::parameter, "directional flux tables support d = 1, 2");
  if (n_angles % 2 != 0) fail(Errc::parameter, "angle count must be even for a symmetric grid");

  DirectionalFluxTable tab;
  tab.dim = u.dim;
  tab.eps = eps;
  tab.field_id = u.id;
  tab.test_function = phi.descriptor.dump();
  tab.n_radii = n_radii;
  tab.n_angles = u.dim == 1 ? 2 : n_angles;

  // origin node: V(0) = 0 exactly (empty increment)
  tab.z_nodes.push_back(Vec());
  tab.values.push_back(Vec());
  tab.radius_index.push_back(0);
  tab.angle_index.push_back(0);

  const bool strips = u.piecewise_constant && min_sheet_gap(u) > 2.0 * eps;
  auto value_at = [&](const Vec& z) {
    return strips ? directional_value_strips(u, eps, phi, z, 64)
                  : directional_value_grid(u, eps, phi, z, 256);
  };

  for (int j = 1; j <= n_radii; ++j) {
    const double r = static_cast<double>(j) / n_radii;
    for (int i = 0; i < tab.n_angles; ++i) {
      Vec z;
      if (u.dim == 1) {
        z[0] = i == 0 ? r : -r;
      } else {
        const double th = 2.0 * kPi * i / tab.n_angles;
        z = Vec(r * std::cos(th), r * std::sin(th));
      }
      tab.z_nodes.push_back(z);
      tab.values.push_back(value_at(z));
      tab.radius_index.push_back(j);
      tab.angle_index.push_back(i);
    }
  }

  // odd residual: -z is the angle shifted by half a turn
  double odd = 0.0;
  for (std::size_t a = 0; a < tab.z_nodes.size(); ++a) {
    const Vec& z = tab.z_nodes[a];
    for (std::size_t b = a; b < tab.z_nodes.size(); ++b) {
      if (norm(tab.z_nodes[b] + z) < 1e-12) {
        odd = std::max(odd, norm(tab.values[a] + tab.values[b]));
      }
    }
  }
  tab.odd_residual = odd;

  // quadrature tolerance estimated by refining the pairing on a node sample
  double tol = 0.0, vmax = 0.0;
  for (const Vec& v : tab.values) vmax = std::max(vmax, norm(v));
  for (std::size_t probe = 1; probe < tab.z_nodes.size();
       probe += std::max<std::size_t>(1, tab.z_nodes.size() / 6)) {
    const Vec& z = tab.z_nodes[probe];
    Vec fine = strips ? directional_value_strips(u, eps, phi, z, 128)
                      : directional_value_grid(u, eps, phi, z, 384);
    tol = std::max(tol, norm(fine - tab.values[probe]));
  }
  tab.quad_tolerance = std::max(tol, 1e-14 * std::max(1.0, vmax));
  return tab;
}

Vec DirectionalFluxTable::interpolate(const Vec& z) const {
  const double r = norm(z);
  const double dr = 1.0 / n_radii;
  if (dim == 1) {
    // nodes are 0, +-dr, +-2dr, ...; piecewise linear in the signed coordinate
    const double s = z[0];
    const double a = std::abs(s) / dr;
    const int j0 = std::min(static_cast<int>(std::floor(a)), n_radii - 1);
    const double w = a - j0;
    auto node = [&](int j) -> Vec {
      if (j == 0) return Vec();
      const std::size_t base = 1 + static_cast<std::size_t>(j - 1) * 2;
      return s >= 0.0 ? values[base] : values[base + 1];
    };
    return (1.0 - w) * node(j0) + w * node(std::min(j0 + 1, n_radii));
  }
  if (r < 1e-15) return Vec();
  const double a = std::min(r / dr, static_cast<double>(n_radii));
  const int j0 = std::min(static_cast<int>(std::floor(a)), n_radii - 1);
  const double wr = a - j0;
  double th = std::atan2(z[1], z[0]);
  if (th < 0.0) th += 2.0 * kPi;
  const double dth = 2.0 * kPi / n_angles;
  const int i0 = std::min(static_cast<int>(std::floor(th / dth)), n_angles - 1);
  const double wth = th / dth - i0;
  auto node = [&](int j, int i) -> Vec {
    if (j == 0) return Vec();
    const int ii = ((i % n_angles) + n_angles) % n_angles;
    return values[1 + static_cast<std::size_t>(j - 1) * static_cast<std::size_t>(n_angles) +
                  static_cast<std::size_t>(ii)];
  };
  Vec low = (1.0 - wth) * node(j0, i0) + wth * node(j0, i0 + 1);
  Vec high = (1.0 - wth) * node(j0 + 1, i0) + wth * node(j0 + 1, i0 + 1);
  return (1.0 - wr) * low + wr * high;
}

double reconstruct_pairing(const DirectionalFluxTable& table, const Kernel& rho) {
  if (rho.dim != table.dim) fail(Errc::parameter, "kernel and table dimensions differ");
  QuadResult q = ball_integrate(table.dim, [&](const Vec& z) {
    return dot(rho.grad(z), table.interpolate(z));
  });
  return 0.25 * q.value;
}

double reconstruct_pairing_radial(const DirectionalFluxTable& table, const Kernel& rho) {
  if (!rho.radial) fail(Errc::precondition, "radial reconstruction needs a radial kernel");
  if (table.dim != 2) fail(Errc::precondition, "radial reconstruction implemented for d = 2");
  const int nr = 256, na = 256;
  double total = 0.0;
  for (int j = 0; j < nr; ++j) {
    const double r = (j + 0.5) / nr;
    double ring = 0.0;
    for (int i = 0; i < na; ++i) {
      const double th = 2.0 * kPi * (i + 0.5) / na;
      const Vec n_out(std::cos(th), std::sin(th));
      ring += dot(table.interpolate(r * n_out), n_out) * r * (2.0 * kPi / na);
    }
    total += rho.radial_derivative(r) * ring * (1.0 / nr);
  }
  return 0.25 * total;
}

// ---------------------------------------------------------------------------
// Hoelder modulus
// ---------------------------------------------------------------------------

namespace {

// antiderivative of the disk chord length 2 sqrt(R^2 - t^2)
double chord_antiderivative(double t, double R) {
  t = std::clamp(t, -R, R);
  return t * std::sqrt(std::max(0.0, R * R - t * t)) + R * R * std::asin(std::clamp(t / R, -1.0, 1.0));
}

double support_cross_measure(const TestFunction& phi, int axis, double a, double b) {
  if (!(b > a)) return 0.0;
  if (phi.dim == 1) {
    const double lo = std::max(a, phi.center[0] - phi.radius);
    const double hi = std::min(b, phi.center[0] + phi.radius);
    return std::max(0.0, hi - lo);
  }
  const double c = phi.center[axis];
  return chord_antiderivative(b - c, phi.radius) - chord_antiderivative(a - c, phi.radius);
}

// L1 distance over supp phi between T_{eps,z1} and T_{eps,z2} for fields
// constant along their (single-axis) sheets: stratify the jump coordinate
// and use exact chord measures per stratum.
double holder_distance_strips(const VelocityField& u, double eps, const TestFunction& phi,
                              const Vec& z1, const Vec& z2) {
  const int axis = u.sheets.front().axis;
  const bool periodic = u.domain.kind() == DomainKind::box && u.domain.periodic();
  const double L = u.domain.side();
  std::vector<double> cuts{phi.center[axis] - phi.radius, phi.center[axis] + phi.radius};
  for (const JumpSheet& s : u.sheets) {
    for (int shift = -1; shift <= 1; ++shift) {
      if (shift != 0 && !periodic) continue;
      const double p = s.position + shift * L;
      for (const Vec* z : {&z1, &z2}) {
        cuts.push_back(p);
        cuts.push_back(p - eps * (*z)[axis]);
      }
    }
  }
  const double lo = phi.center[axis] - phi.radius, hi = phi.center[axis] + phi.radius;
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = std::max(lo, cuts[i]), b = std::min(hi, cuts[i + 1]);
    if (!(b > a + 1e-15)) continue;
    Vec x = phi.center;
    x[axis] = 0.5 * (a + b);
    const Vec du1 = increment(u, x, eps * z1);
    const Vec du2 = increment(u, x, eps * z2);
    const Vec diff = (norm_sq(du1) / eps) * du1 - (norm_sq(du2) / eps) * du2;
    total += norm(diff) * support_cross_measure(phi, axis, a, b);
  }
  return total;
}

double holder_distance_grid(const VelocityField& u, double eps, const TestFunction& phi,
                            const Vec& z1, const Vec& z2, int n) {
  std::array<AxisGrid, 3> axes;
  std::array<std::size_t, 3> count{1, 1, 1};
  for (int k = 0; k < u.dim; ++k) {
    axes[static_cast<std::size_t>(k)] =
        midpoint_axis(phi.center[k] - phi.radius, phi.center[k] + phi.radius, n);
    count[static_cast<std::size_t>(k)] = axes[static_cast<std::size_t>(k)].centers.size();
  }
  const std::size_t total = count[0] * count[1] * count[2];
  std::vector<double> terms(total);
  parallel_for(total, [&](std::size_t idx) {
    std::size_t rest = idx;
    std::array<std::size_t, 3> ii{0, 0, 0};
    for (int k = u.dim - 1; k >= 0; --k) {
      ii[static_cast<std::size_t>(k)] = rest % count[static_cast<std::size_t>(k)];
      rest /= count[static_cast<std::size_t>(k)];
    }
    Vec x;
    double w = 1.0;
    for (int k = 0; k < u.dim; ++k) {
      x[k] = axes[static_cast<std::size_t>(k)].centers[ii[static_cast<std::size_t>(k)]];
      w *= axes[static_cast<std::size_t>(k)].weights[ii[static_cast<std::size_t>(k)]];
    }
    double r2 = 0.0;
    for (int k = 0; k < u.dim; ++k) {
      const double d = x[k] - phi.center[k];
      r2 += d * d;
    }
    if (r2 >= phi.radius * phi.radius ||
        !x_admissible(u, x, eps * std::max(norm(z1), norm(z2)))) {
      terms[idx] = 0.0;
      return;
    }
    const Vec du1 = increment_unchecked(u, x, eps * z1);
    const Vec du2 = increment_unchecked(u, x, eps * z2);
    const Vec diff = (norm_sq(du1) / eps) * du1 - (norm_sq(du2) / eps) * du2;
    terms[idx] = w * norm(diff);
  });
  return pairwise_sum(terms);
}

}  // namespace

HolderExponents holder_exponents(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) fail(Errc::parameter, "p must lie in (1, infinity)");
  HolderExponents e;
  e.p = p;
  e.p_conj = p / (p - 1.0);
  e.alpha = std::max(1.0 / p, 1.0 / (2.0 * e.p_conj));
  e.beta = std::min(1.0 / e.p_conj, (p + 1.0) / (2.0 * p));
  return e;
}

HolderReport holder_modulus(const VelocityField& u, double eps, const TestFunction& phi,
                            const std::vector<std::pair<Vec, Vec>>& pairs, HolderForm form,
                            double p) {
  HolderReport rep;
  rep.form = form;
  rep.p = p;
  HolderExponents ex = form == HolderForm::besov_p ? holder_exponents(p) : HolderExponents{};

  bool single_axis_strips = u.piecewise_constant;
  if (single_axis_strips) {
    for (const JumpSheet& s : u.sheets)
      if (s.axis != u.sheets.front().axis) single_axis_strips = false;
    if (min_sheet_gap(u) <= 2.0 * eps) single_axis_strips = false;
  }

  for (const auto& [z1, z2] : pairs) {
    HolderPairReport pr;
    pr.z1 = z1;
    pr.z2 = z2;
    pr.distance = single_axis_strips ? holder_distance_strips(u, eps, phi, z1, z2)
                                     : holder_distance_grid(u, eps, phi, z1, z2, 256);
    double modulus = 0.0;
    const double dz = norm(z1 - z2);
    switch (form) {
      case HolderForm::bv: modulus = dz; break;
      case HolderForm::b_half:
        modulus = std::sqrt(dz) * (std::sqrt(norm(z1)) + std::sqrt(norm(z2)));
        break;
      case HolderForm::besov_p:
        modulus = std::pow(dz, ex.alpha) *
                  (std::pow(norm(z1), ex.beta) + std::pow(norm(z2), ex.beta));
        break;
    }
    pr.ratio = modulus > 1e-14 ? pr.distance / modulus : 0.0;
    rep.max_ratio = std::max(rep.max_ratio, pr.ratio);
    rep.pairs.push_back(pr);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Reynolds-stress flux and kinetic energy
// ---------------------------------------------------------------------------

double reynolds_flux(const VelocityField& u, const Kernel& rho, double eps,
                     const TestFunction& phi, int points_per_axis) {
  if (rho.support_radius > 1.0 + 1e-12)
    fail(Errc::parameter, "reynolds flux needs a kernel supported in the unit ball");
  Region supp;
  for (int k = 0; k < u.dim; ++k) {
    supp.lo[k] = phi.center[k] - phi.radius;
    supp.hi[k] = phi.center[k] + phi.radius;
  }
  const int n = points_per_axis > 0 ? points_per_axis : (u.dim == 1 ? 1024 : 96);
  SpatialRule rule = spatial_rule(u, supp, eps, n, rho.support_radius);
  std::vector<double> terms(rule.total);
  parallel_for(rule.total, [&](std::size_t idx) {
    std::size_t rest = idx;
    std::array<std::size_t, 3> ii{0, 0, 0};
    for (int k = u.dim - 1; k >= 0; --k) {
      ii[static_cast<std::size_t>(k)] = rest % rule.count[static_cast<std::size_t>(k)];
      rest /= rule.count[static_cast<std::size_t>(k)];
    }
    Vec x;
    double w = 1.0;
    for (int k = 0; k < u.dim; ++k) {
      x[k] = rule.axes[static_cast<std::size_t>(k)].centers[ii[static_cast<std::size_t>(k)]];
      w *= rule.axes[static_cast<std::size_t>(k)].weights[ii[static_cast<std::size_t>(k)]];
    }
    const double pw = phi.eval(x);
    if (pw == 0.0 || !x_admissible(u, x, eps * rho.support_radius) ||
        (u.piecewise_constant && jump_distance(u, x) > eps * rho.support_radius)) {
      terms[idx] = 0.0;
      return;
    }
    // one z pass accumulates u_eps, (u tensor u)_eps and grad u_eps
    Vec ue;
    Mat uu_eps, grad_ue;
    const int nz = default_z_points(u.dim);
    std::array<int, 3> counts{nz, nz, nz};
    auto splits = z_splits_at(u, eps, x);
    Vec lo, hi;
    for (int k = 0; k < u.dim; ++k) {
      lo[k] = -1.0;
      hi[k] = 1.0;
    }
    std::array<AxisGrid, 3> axes;
    for (int k = 0; k < u.dim; ++k)
      axes[static_cast<std::size_t>(k)] =
          strata_axis(lo[k], hi[k], splits[static_cast<std::size_t>(k)], counts[static_cast<std::size_t>(k)]);
    std::array<std::size_t, 3> zc{1, 1, 1};
    for (int k = 0; k < u.dim; ++k) zc[static_cast<std::size_t>(k)] = axes[static_cast<std::size_t>(k)].centers.size();
    const std::size_t ztotal = zc[0] * zc[1] * zc[2];
    for (std::size_t zi = 0; zi < ztotal; ++zi) {
      std::size_t zr = zi;
      std::array<std::size_t, 3> zz{0, 0, 0};
      for (int k = u.dim - 1; k >= 0; --k) {
        zz[static_cast<std::size_t>(k)] = zr % zc[static_cast<std::size_t>(k)];
        zr /= zc[static_cast<std::size_t>(k)];
      }
      Vec z;
      double zw = 1.0;
      for (int k = 0; k < u.dim; ++k) {
        z[k] = axes[static_cast<std::size_t>(k)].centers[zz[static_cast<std::size_t>(k)]];
        zw *= axes[static_cast<std::size_t>(k)].weights[zz[static_cast<std::size_t>(k)]];
      }
      if (norm_sq(z) >= 1.0) continue;
      const double rv = rho.eval(z);
      const Vec rg = rho.grad(z);
      const Vec uv = u.domain.kind() == DomainKind::box && u.domain.periodic()
                         ? u.eval_local(u.domain.wrap(x + eps * z))
                         : u.eval_local(x + eps * z);
      for (int i = 0; i < u.dim; ++i) {
        ue[i] += zw * rv * uv[i];
        for (int j = 0; j < u.dim; ++j) {
          uu_eps(i, j) += zw * rv * uv[i] * uv[j];
          grad_ue(i, j) += -zw * rg[j] * uv[i] / eps;
        }
      }
    }
    double contracted = 0.0;
    for (int i = 0; i < u.dim; ++i)
      for (int j = 0; j < u.dim; ++j)
        contracted += (ue[i] * ue[j] - uu_eps(i, j)) * grad_ue(i, j);
    terms[idx] = w * pw * contracted;
  });
  return pairwise_sum(terms);
}

double kinetic_energy(const VelocityField& u, const Region* region, int points_per_axis) {
  Vec lo, hi;
  if (region) {
    lo = region->lo;
    hi = region->hi;
  } else if (u.domain.kind() == DomainKind::box) {
    lo = u.domain.origin();
    for (int k = 0; k < u.dim; ++k) hi[k] = lo[k] + u.domain.side();
  } else {
    lo = u.domain.vertices()[0];
    hi = lo;
    for (const Vec& v : u.domain.vertices())
      for (int k = 0; k < 2; ++k) {
        lo[k] = std::min(lo[k], v[k]);
        hi[k] = std::max(hi[k], v[k]);
      }
  }
  const int n = points_per_axis > 0 ? points_per_axis : (u.dim == 1 ? 4096 : (u.dim == 2 ? 256 : 64));
  std::array<int, 3> counts{n, n, n};
  const bool polygon = u.domain.kind() == DomainKind::polygon;
  Mask inside = [&](const Vec& x) { return u.domain.contains(x); };
  std::array<std::vector<double>, 3> splits = x_splits(u, 0.0);
  QuadResult q = box_integrate(u.dim, lo, hi, counts,
                               [&](const Vec& x) { return norm_sq(evaluate(u, x)); },
                               polygon ? &inside : nullptr,
                               u.piecewise_constant ? &splits : nullptr);
  return 0.5 * q.value;
}

}  // namespace drlab
