#pragma once

#include <optional>
#include <string>
#include <vector>

#include "drlab/fields.hpp"
#include "drlab/kernels.hpp"

namespace drlab {

// Nonnegative bump test function (1 - |x-c|^2/r^2)^order with sup = 1,
// compactly supported in the domain interior.
struct TestFunction {
  Vec center;
  double radius = 0.5;
  int order = 3;
  int dim = 2;
  double boundary_clearance = 0.0;  // dist(supp, boundary), recorded at construction
  nlohmann::json descriptor;

  double eval(const Vec& x) const {
    double q = 0.0;
    for (int k = 0; k < dim; ++k) {
      const double d = x[k] - center[k];
      q += d * d;
    }
    q /= radius * radius;
    if (q >= 1.0) return 0.0;
    return std::pow(1.0 - q, order);
  }

  static TestFunction make(const Domain& domain, Vec center, double radius, int order = 3);
};

struct SampledField {
  std::vector<Vec> points;
  std::vector<double> values;
};

struct FluxResult {
  double signed_total = 0.0;
  double absolute_total = 0.0;
  double quad_error = 0.0;
};

struct FluxReport {
  std::string field_id;
  std::string kernel_id;
  std::vector<double> eps;
  std::vector<double> signed_total;
  std::vector<double> absolute_total;
  std::vector<double> pairing;  // <D_eps, phi>, when a test function is given
  std::vector<double> cauchy_residual;
  double extrapolated = 0.0;
  double extrapolated_abs = 0.0;
  bool cauchy = true;
};

struct DirectionalFluxTable {
  int dim = 2;
  double eps = 0.0;
  std::string field_id;
  std::string test_function;
  std::vector<Vec> z_nodes;      // symmetric under z -> -z; includes the origin
  std::vector<Vec> values;       // V(z)
  std::vector<int> radius_index; // polar bookkeeping (d=2)
  std::vector<int> angle_index;
  int n_radii = 0, n_angles = 0;
  double odd_residual = 0.0;     // max_z |V(z) + V(-z)|
  double quad_tolerance = 0.0;   // pairing quadrature error scale

  Vec interpolate(const Vec& z) const;
};

struct HolderPairReport {
  Vec z1, z2;
  double distance = 0.0;   // ||T_{eps,z1} - T_{eps,z2}||_L1(supp phi)
  double ratio = 0.0;      // distance / modulus(z1,z2)
};

enum class HolderForm { bv, b_half, besov_p };

struct HolderReport {
  HolderForm form = HolderForm::bv;
  double p = 0.0;
  std::vector<HolderPairReport> pairs;
  double max_ratio = 0.0;  // empirical constant C
};

struct HolderExponents {
  double p = 0.0, p_conj = 0.0, alpha = 0.0, beta = 0.0;
};

// ---------------------------------------------------------------------------

// D_eps[u](x) = (1/4 eps) * integral over B_1 of
//   grad rho(z) . delta_{eps z} u(x) |delta_{eps z} u(x)|^2 dz.
double d_eps_at(const VelocityField& u, const Kernel& rho, double eps, const Vec& x,
                int z_points_per_axis = 0);

SampledField d_eps_field(const VelocityField& u, const Kernel& rho, double eps,
                         const Region& region, int points_per_axis = 0);

// signed and absolute spatial integrals of D_eps over the region
FluxResult total_flux(const VelocityField& u, const Kernel& rho, double eps,
                      const Region& region, int points_per_axis = 0);

// <D_eps, phi> over the support of phi
double d_eps_pairing(const VelocityField& u, const Kernel& rho, double eps,
                     const TestFunction& phi);

FluxReport flux_convergence(const VelocityField& u, const Kernel& rho,
                            const std::vector<double>& eps_list, const Region& region,
                            const TestFunction* phi = nullptr);

// V(z) = integral of T_{eps,z}(x) phi(x) dx with T = (1/eps) du (du . du).
DirectionalFluxTable directional_flux(const VelocityField& u, double eps,
                                      const TestFunction& phi, int n_radii = 17,
                                      int n_angles = 32);

// (1/4) * integral of grad rho(z) . V(z) dz via table interpolation; equals
// the direct pairing up to quadrature error.
double reconstruct_pairing(const DirectionalFluxTable& table, const Kernel& rho);

// radial-kernel form: -(1/4) int_0^1 rho'(r) (int_{S_r} V . n) dr
double reconstruct_pairing_radial(const DirectionalFluxTable& table, const Kernel& rho);

HolderReport holder_modulus(const VelocityField& u, double eps, const TestFunction& phi,
                            const std::vector<std::pair<Vec, Vec>>& pairs, HolderForm form,
                            double p = 3.0);

HolderExponents holder_exponents(double p);

// <(u_eps tensor u_eps - (u tensor u)_eps) : grad u_eps, phi>
double reynolds_flux(const VelocityField& u, const Kernel& rho, double eps,
                     const TestFunction& phi, int points_per_axis = 0);

// (1/2) int |u|^2 over the domain, or over the given sub-region.
double kinetic_energy(const VelocityField& u, const Region* region = nullptr,
                      int points_per_axis = 0);

}  // namespace drlab
