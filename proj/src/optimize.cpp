#include "drlab/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "drlab/quadrature.hpp"

namespace drlab {

namespace {

constexpr double kTraceTol = 1e-6;

Mat trace_free_unit(Mat m, int dim) {
  const double t = trace(m, dim) / dim;
  for (int i = 0; i < dim; ++i) m(i, i) -= t;
  const double f = frobenius(m);
  if (f > 0.0) m = (1.0 / f) * m;
  return m;
}

std::array<int, 3> counts_for(const Vec& box, double cell, int dim, int floor_n, int cap) {
  std::array<int, 3> n{2, 2, 2};
  for (int d = 0; d < dim; ++d)
    n[static_cast<std::size_t>(d)] =
        std::clamp(static_cast<int>(std::ceil(2.0 * box[d] / cell)), floor_n, cap);
  return n;
}

}  // namespace

// ---------------------------------------------------------------------------
// Polar decomposition
// ---------------------------------------------------------------------------

PolarField polar_decompose(const VelocityField& u, const Region& region) {
  if (u.declared_class != FieldClass::bv_linf && u.declared_class != FieldClass::smooth)
    fail(Errc::precondition, "polar decomposition needs a BV or smooth field");

  PolarField pf;
  if (u.piecewise_constant) {
    const bool periodic = u.domain.kind() == DomainKind::box && u.domain.periodic();
    const double L = u.domain.side();
    for (const JumpSheet& s : u.sheets) {
      const double jn = norm(s.jump);
      if (jn == 0.0) continue;
      Vec axis_dir;
      axis_dir[s.axis] = 1.0;
      Mat polar = (1.0 / jn) * Mat::outer(s.jump, axis_dir);  // |j x n|_F = |j|
      const double tr = s.jump[s.axis] / jn;
      double best_measure = 0.0, best_pos = s.position;
      for (int shift = -1; shift <= 1; ++shift) {
        if (shift != 0 && !periodic) continue;
        const double pos = s.position + shift * L;
        double m = 0.0;
        {
          Region r = region;
          double d_out = std::max({r.lo[s.axis] - pos, 0.0, pos - r.hi[s.axis]});
          if (d_out <= r.round) {
            if (u.dim == 1) {
              m = 1.0;
            } else {
              const int other = s.axis == 0 ? 1 : 0;
              m = (r.hi[other] - r.lo[other]) + 2.0 * r.round;
            }
          }
        }
        if (m > best_measure) {
          best_measure = m;
          best_pos = pos;
        }
      }
      if (best_measure <= 0.0) continue;
      const int pieces = u.dim == 1 ? 1 : 128;
      const int other = s.axis == 0 ? 1 : 0;
      for (int p = 0; p < pieces; ++p) {
        PolarAtom a;
        a.location[s.axis] = best_pos;
        if (u.dim > 1)
          a.location[other] = region.lo[other] - region.round +
                              (p + 0.5) / pieces * (region.hi[other] - region.lo[other] + 2.0 * region.round);
        a.weight = jn * best_measure / pieces;
        a.polar = polar;
        a.trace_value = tr;
        pf.atoms.push_back(a);
      }
    }
  } else {
    VariationMeasure vm = total_variation(u, region, VariationLabel::full_gradient);
    // re-walk the same sample layout recovering the matrices
    const GridData* g = u.grid.get();
    double wmax = 0.0;
    for (const auto& a : vm.atoms) wmax = std::max(wmax, a.weight);
    for (const auto& a : vm.atoms) {
      if (a.weight < 1e-12 * wmax) continue;
      Mat grad;
      if (g) {
        std::array<int, 3> idx{0, 0, 0};
        for (int k = 0; k < u.dim; ++k)
          idx[static_cast<std::size_t>(k)] =
              static_cast<int>(std::floor((a.location[k] - g->origin[k]) / g->spacing));
        grad = Mat();
        // centered differences at the cell
        for (int ax = 0; ax < g->dim; ++ax) {
          std::array<int, 3> ip = idx, im = idx;
          const int nk = g->n[static_cast<std::size_t>(ax)];
          ip[static_cast<std::size_t>(ax)] += 1;
          im[static_cast<std::size_t>(ax)] -= 1;
          if (g->periodic) {
            ip[static_cast<std::size_t>(ax)] = (ip[static_cast<std::size_t>(ax)] + nk) % nk;
            im[static_cast<std::size_t>(ax)] = (im[static_cast<std::size_t>(ax)] + nk) % nk;
          } else if (ip[static_cast<std::size_t>(ax)] >= nk || im[static_cast<std::size_t>(ax)] < 0) {
            continue;
          }
          for (int m = 0; m < g->dim; ++m)
            grad(m, ax) = (g->comp[static_cast<std::size_t>(m)][g->flat(ip)] -
                           g->comp[static_cast<std::size_t>(m)][g->flat(im)]) /
                          (2.0 * g->spacing);
        }
      } else if (u.has_analytic_grad) {
        grad = u.grad_analytic(a.location);
      } else {
        const double fd = 1e-6;
        for (int c = 0; c < u.dim; ++c) {
          Vec xp = a.location, xm = a.location;
          xp[c] += fd;
          xm[c] -= fd;
          Vec up = evaluate(u, xp), um = evaluate(u, xm);
          for (int m = 0; m < u.dim; ++m) grad(m, c) = (up[m] - um[m]) / (2.0 * fd);
        }
      }
      const double f = frobenius(grad);
      if (f < 1e-300) continue;
      PolarAtom atom;
      atom.location = a.location;
      atom.weight = a.weight;
      atom.polar = (1.0 / f) * grad;
      atom.trace_value = trace(atom.polar, u.dim);
      pf.atoms.push_back(atom);
    }
  }

  std::vector<double> w;
  w.reserve(pf.atoms.size());
  for (const auto& a : pf.atoms) {
    w.push_back(a.weight);
    pf.max_abs_trace = std::max(pf.max_abs_trace, std::abs(a.trace_value));
  }
  pf.total = pairwise_sum(w);
  pf.divergence_free = pf.max_abs_trace <= kTraceTol;
  return pf;
}

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

ObjectiveResult objective(const Kernel& rho, const FlowField& eta) {
  if (rho.dim != eta.dim) fail(Errc::parameter, "kernel and flow dimensions differ");
  const int dim = rho.dim;
  auto g = [&](const Vec& z) { return std::abs(dot(rho.grad(z), eta.eval(z))); };

  if (rho.flow_meta && rho.flow_meta->is_matrix) {
    const FlowAverageMeta& meta = *rho.flow_meta;
    // patch A around the base-kernel support
    Vec abox;
    for (int d = 0; d < dim; ++d) abox[d] = 1.3 * meta.base_box[d] + 0.05;
    const double cell = std::max(meta.base_feature / 4.0, 1e-3);
    std::array<int, 3> na = counts_for(abox, cell, dim, 32, 512);
    QuadResult qa = box_integrate(dim, -1.0 * abox, abox, na, g);

    // image of the patch under the time-T flow, by change of variables
    const Mat fwd = matrix_exponential(meta.horizon * eta.matrix, dim);
    const double jac = std::exp(meta.divergence * meta.horizon);
    auto in_a = [&](const Vec& z) {
      for (int d = 0; d < dim; ++d)
        if (std::abs(z[d]) > abox[d]) return false;
      return true;
    };
    // for diagonal flows the pullback of patch A is an axis-aligned box, so
    // the exclusion boundary can sit exactly on strata cuts
    bool diagonal = true;
    for (int r = 0; r < dim && diagonal; ++r)
      for (int c = 0; c < dim; ++c)
        if (r != c && std::abs(eta.matrix(r, c)) > 1e-14) diagonal = false;
    std::array<std::vector<double>, 3> bsplits;
    if (diagonal) {
      for (int d = 0; d < dim; ++d) {
        const double edge = abox[d] * std::exp(-meta.horizon * eta.matrix(d, d));
        bsplits[static_cast<std::size_t>(d)] = {-edge, edge};
      }
    }
    QuadResult qb = box_integrate(
        dim, -1.0 * abox, abox, na,
        [&](const Vec& w) {
          const Vec z = mul(fwd, w);
          if (in_a(z)) return 0.0;  // already covered by patch A
          return jac * g(z);
        },
        nullptr, diagonal ? &bsplits : nullptr);

    // coarse pass over the remaining support
    const Mat bwd = matrix_exponential((-meta.horizon) * eta.matrix, dim);
    std::array<int, 3> nc =
        counts_for(rho.support_box, std::max(0.05, meta.base_feature / 3.0), dim, 48, 512);
    QuadResult qc = box_integrate(dim, -1.0 * rho.support_box, rho.support_box, nc,
                                  [&](const Vec& z) {
                                    if (in_a(z) || in_a(mul(bwd, z))) return 0.0;
                                    return g(z);
                                  });
    return {qa.value + qb.value + qc.value,
            qa.error_estimate + qb.error_estimate + qc.error_estimate};
  }

  const double cell = std::max(rho.feature_scale / 6.0, 1e-4);
  std::array<int, 3> n = counts_for(rho.support_box, cell, dim, dim == 3 ? 48 : 96, 768);
  QuadResult q = box_integrate(dim, -1.0 * rho.support_box, rho.support_box, n, g);
  return {q.value, q.error_estimate};
}

RescaleInvarianceReport objective_rescale_invariance(const Kernel& rho, const FlowField& eta,
                                                     double R) {
  if (!eta.is_matrix)
    fail(Errc::precondition, "rescale invariance needs a 1-homogeneous (matrix) flow field");
  RescaleInvarianceReport rep;
  rep.original = objective(rho, eta).value;
  Kernel scaled = rescale_kernel(rho, R);
  rep.rescaled = objective(scaled, eta).value;
  const double denom = std::max({std::abs(rep.original), std::abs(rep.rescaled), 1e-300});
  rep.rel_difference = std::abs(rep.original - rep.rescaled) / denom;
  rep.pass = rep.rel_difference <= 1e-3;
  return rep;
}

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

CertificateValue certificate(const VelocityField& u, const Kernel& rho,
                             const TestFunction& phi) {
  Region supp;
  for (int k = 0; k < u.dim; ++k) {
    supp.lo[k] = phi.center[k] - phi.radius;
    supp.hi[k] = phi.center[k] + phi.radius;
  }
  PolarField pf = polar_decompose(u, supp);

  CertificateValue cv;
  cv.max_abs_trace = pf.max_abs_trace;
  cv.trace_flagged = !pf.divergence_free;

  // group atoms by matrix so the z-integral runs once per distinct polar
  std::vector<std::pair<Mat, double>> groups;
  for (const auto& a : pf.atoms) {
    if (phi.eval(a.location) <= 0.0) continue;
    bool found = false;
    for (auto& grp : groups) {
      Mat diff = grp.first + (-1.0 * a.polar);
      if (frobenius(diff) < 1e-12) {
        grp.second += a.weight;
        found = true;
        break;
      }
    }
    if (!found) groups.emplace_back(a.polar, a.weight);
  }
  const double constant = u.max_abs * u.max_abs / 4.0;  // ||phi||_inf = 1
  double total = 0.0;
  for (const auto& [polar, weight] : groups) {
    FlowField etam = FlowField::from_matrix(polar, u.dim);
    total += weight * objective(rho, etam).value;
  }
  cv.value = constant * total;
  return cv;
}

CertificateReport conservation_report(const VelocityField& u, const TestFunction& phi,
                                      const Kernel& theta, const std::vector<double>& horizons,
                                      const std::vector<double>& eps_list) {
  if (horizons.empty()) fail(Errc::precondition, "horizon schedule must be nonempty");
  for (std::size_t i = 1; i < horizons.size(); ++i)
    if (!(horizons[i] > horizons[i - 1]))
      fail(Errc::precondition, "horizon schedule must be increasing");
  if (theta.support_radius > 1.0 + 1e-12)
    fail(Errc::precondition, "base kernel must be supported in the unit ball");

  Region supp;
  for (int k = 0; k < u.dim; ++k) {
    supp.lo[k] = phi.center[k] - phi.radius;
    supp.hi[k] = phi.center[k] + phi.radius;
  }
  PolarField pf = polar_decompose(u, supp);
  if (!pf.divergence_free) {
    std::ostringstream os;
    os << "conservation certificate refused: polar matrix trace reaches " << pf.max_abs_trace
       << " (compressible jump structure); the flow-averaged bound applies only to "
          "divergence-free fields";
    fail(Errc::refusal, os.str());
  }
  if (!u.declared_divfree)
    fail(Errc::refusal, "conservation certificate refused: field is not declared divergence-free");

  CertificateReport rep;
  rep.field_id = u.id;
  rep.base_kernel = theta.id;
  rep.test_function = phi.descriptor;
  rep.constant = u.max_abs * u.max_abs / 4.0;

  // cluster polar matrices; widen the tolerance if the field produces more
  // clusters than the flow-averaging budget
  double tol = 1e-3;
  const int cap = 12;
  std::vector<PolarCluster> clusters;
  for (;;) {
    clusters.clear();
    for (const auto& a : pf.atoms) {
      if (phi.eval(a.location) <= 0.0) continue;
      bool placed = false;
      for (auto& c : clusters) {
        Mat diff = c.polar + (-1.0 * a.polar);
        if (frobenius(diff) <= tol) {
          c.weight += a.weight;
          c.atom_count += 1;
          placed = true;
          break;
        }
      }
      if (!placed) clusters.push_back({a.polar, a.weight, 1});
    }
    if (static_cast<int>(clusters.size()) <= cap) break;
    tol *= 2.0;
  }
  rep.cluster_tolerance = tol;
  for (auto& c : clusters) c.polar = trace_free_unit(c.polar, u.dim);
  rep.clusters = clusters;

  for (double T : horizons) {
    CertificateRow row;
    row.T = T;
    double mass_worst = 1.0;
    double rescale_worst = 0.0;
    nlohmann::json kernel_json;
    for (const auto& c : clusters) {
      FlowField etac = FlowField::from_matrix(c.polar, u.dim);
      Kernel rho_t = flow_averaged_kernel(theta, etac, T);
      if (std::abs(rho_t.mass - 1.0) > std::abs(mass_worst - 1.0)) mass_worst = rho_t.mass;
      Kernel usable = renormalized(rho_t);
      ObjectiveResult obj = objective(usable, etac);
      row.value += rep.constant * c.weight * obj.value;
      row.objective_error += rep.constant * c.weight * obj.error_estimate;
      row.bound += rep.constant * c.weight * (2.0 / T);
      // rescaled into the unit ball for flux use; the objective is invariant
      // under this rescaling for matrix flows (change of variables)
      Kernel in_ball = rescale_kernel(usable, usable.support_radius);
      rescale_worst = std::max(rescale_worst, usable.support_radius);
      kernel_json = in_ball.descriptor;
    }
    row.kernel_mass = mass_worst;
    row.rescale_factor = rescale_worst;
    rep.rows.push_back(row);
    if (T == horizons.back()) rep.winning_kernel = kernel_json;
  }

  // flux pairings at matching scales; the limit is kernel independent, so a
  // cheap polynomial kernel serves as the comparison column
  Kernel flux_kernel = make_bump(BumpKind::polynomial_radial, u.dim, 3.0);
  rep.flux_kernel = flux_kernel.id;
  std::vector<double> eps = eps_list;
  if (eps.empty()) eps = {0.2, 0.1, 0.05, 0.025};
  for (double e : eps) {
    rep.eps.push_back(e);
    rep.flux_pairing_abs.push_back(std::abs(d_eps_pairing(u, flux_kernel, e, phi)));
  }
  return rep;
}

}  // namespace drlab
