#pragma once

#include <functional>
#include <memory>
#include <string>

#include "drlab/common.hpp"
#include "drlab/flow.hpp"
#include "drlab/quadrature.hpp"

#include "json.hpp"

namespace drlab {

// Admissibility classes: smooth kernels supported in the unit ball (the flux
// class), their radial subclass, compactly supported Lipschitz kernels with
// arbitrary support radius, and rescaled kernels back inside the unit ball.
enum class KernelClass { unit_ball, radial, compact, rescaled_unit_ball };

std::string to_string(KernelClass c);

struct KernelReport {
  double even_residual = 0.0;
  double min_value = 0.0;
  double mass_error = 0.0;
  double mass_error_tolerance = 0.0;
  bool support_ok = true;
  bool usable() const;
};

// Construction metadata of a flow-averaged kernel, kept so downstream
// quadrature can adapt to the flow geometry.
struct FlowAverageMeta {
  bool is_matrix = false;
  Mat matrix;          // generator of the flow
  double horizon = 0.0;
  double divergence = 0.0;
  Vec base_box;        // support half-extents of the base kernel
  double base_feature = 1.0;
};

// Mollification kernel. Immutable after construction; evaluation and
// gradient are thread-safe.
struct Kernel {
  int dim = 2;
  KernelClass cls = KernelClass::unit_ball;
  double support_radius = 1.0;  // eval vanishes for |z| >= support_radius
  Vec support_box;              // per-axis half-extent bound (anisotropic kernels)
  std::function<double(const Vec&)> eval;
  std::function<Vec(const Vec&)> grad;
  bool radial = false;
  // profile and derivative in r, only for radial kernels
  std::function<double(double)> radial_profile;
  std::function<double(double)> radial_derivative;
  double mass = 1.0;  // measured at construction by the default ball rule
  double feature_scale = 1.0;  // smallest variation length scale
  std::shared_ptr<const FlowAverageMeta> flow_meta;
  std::string id;
  nlohmann::json descriptor;

  double operator()(const Vec& z) const { return eval(z); }
};

enum class BumpKind { standard_radial, polynomial_radial, tensor, indicator_smoothed };

// standard_radial: c exp(-1/(1-|z|^2));  polynomial_radial(k): c (1-|z|^2)^k;
// tensor: product of per-axis 1-d standard bumps with given half-widths
// (support rectangle must fit in the unit ball); indicator_smoothed(delta):
// c * smoothstep ramp from 1 to 0 over the shell 1-delta < |z| < 1.
Kernel make_bump(BumpKind kind, int dim, double param = 0.0, Vec tensor_widths = Vec());

KernelReport validate_kernel(const Kernel& k);

// rho_R(z) = R^d rho(R z); requires R >= support radius so the result is
// supported in the unit ball. Mass is preserved exactly by the change of
// variables.
Kernel rescale_kernel(const Kernel& k, double R);

// Time average of `theta` pulled back along the inverse flow of `eta`:
//   rho_T(z) = pref * integral_0^T theta(X_t^{-1}(z)) dt,
// pref = 1/T when div eta = 0 and a/(e^{aT}-1) when div eta = a != 0.
// Trapezoid rule in time with max(64, ceil(16 T)) intervals; the value is
// symmetrized in z. Matrix flows use the exact matrix exponential for the
// backward maps; nonlinear flows integrate one RK4 trajectory per query and
// memoize on a 1e-4 lattice.
Kernel flow_averaged_kernel(const Kernel& theta, const FlowField& eta, double T);

// Renormalize a kernel by its measured mass (used on optimizer outputs);
// reports the applied correction via the descriptor.
Kernel renormalized(const Kernel& k);

nlohmann::json kernel_to_json(const Kernel& k);
Kernel kernel_from_json(const nlohmann::json& j);

}  // namespace drlab
