#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "drlab/geometry.hpp"
#include "drlab/kernels.hpp"

#include "json.hpp"

namespace drlab {

enum class FieldClass { smooth, bv_linf, linf_b12, none };

std::string to_string(FieldClass c);
FieldClass field_class_from_string(const std::string& s);

// Codimension-one jump of a piecewise-constant field across the axis-aligned
// sheet {x[axis] == position}; `jump` is u(after) - u(before) crossing in the
// +e_axis direction. Periodic seams are listed at the box origin.
struct JumpSheet {
  int axis = 0;
  double position = 0.0;
  Vec jump;
};

// Uniform cell-centered sample grid. Flat index: first axis slowest
// (row-major); one block per component.
struct GridData {
  int dim = 2;
  std::array<int, 3> n{1, 1, 1};
  double spacing = 0.0;
  Vec origin;  // low corner of the sampled box
  bool periodic = true;
  std::vector<std::vector<double>> comp;
  std::vector<std::uint8_t> valid;  // optional cell validity mask (polygon restriction)

  std::size_t flat(const std::array<int, 3>& idx) const;
  double side(int axis) const { return n[static_cast<std::size_t>(axis)] * spacing; }
};

struct VelocityField {
  Domain domain;
  int dim = 2;
  FieldClass declared_class = FieldClass::none;
  bool declared_divfree = false;
  std::string id;
  nlohmann::json descriptor;

  // evaluation on wrapped/inside coordinates
  std::function<Vec(const Vec&)> eval_local;
  std::function<Mat(const Vec&)> grad_analytic;  // optional
  bool has_analytic_grad = false;

  bool piecewise_constant = false;
  std::vector<JumpSheet> sheets;

  std::shared_ptr<const GridData> grid;

  double max_abs = 0.0;  // sup |u| over the domain

  bool is_grid() const { return grid != nullptr; }
};

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

Vec evaluate(const VelocityField& u, Vec x);
// u(x + xi) - u(x); periodic wrap, or interior restriction 2|xi| < dist(x, boundary).
Vec increment(const VelocityField& u, const Vec& x, const Vec& xi);
// Distance from x to the nearest jump sheet (+infinity for fields without
// registered sheets). Used to skip flux quadrature away from jumps.
double jump_distance(const VelocityField& u, const Vec& x);

// ---------------------------------------------------------------------------
// Catalog and ingestion
// ---------------------------------------------------------------------------

// shear_layer, burgers_shock, poly_stream, taylor_green, linear (params:
// {"matrix": [[...]]}), constant (params: {"value": [...]}).
VelocityField catalog_field(const std::string& name, const nlohmann::json& params = {});
std::vector<std::string> catalog_field_names();

VelocityField field_from_grid_file(const std::string& path);
VelocityField field_from_grid(std::shared_ptr<const GridData> grid, FieldClass cls,
                              bool declared_divfree, const std::string& id);

// max over interior cells of the centered-difference divergence
double grid_divergence_residual(const GridData& g);

// ---------------------------------------------------------------------------
// Mollification
// ---------------------------------------------------------------------------

// u_eps(x) = integral over B_1 of rho(z) u(x + eps z) dz by the default ball
// rule; returns a grid field. Polygon outputs are restricted to points at
// distance > eps from the boundary.
VelocityField mollify(const VelocityField& u, const Kernel& rho, double eps,
                      int out_points_per_axis = 0);

// ---------------------------------------------------------------------------
// Variation measures and increment estimates
// ---------------------------------------------------------------------------

enum class VariationLabel { full_gradient, symmetric_gradient, directional };

struct VarAtom {
  Vec location;
  double weight = 0.0;
};

struct VariationMeasure {
  VariationLabel label = VariationLabel::full_gradient;
  Vec direction;  // for the directional label
  std::vector<VarAtom> atoms;
  double total = 0.0;
};

// Discrete approximation of |grad u|, |sym grad u| or |z . grad u| on the
// region. Piecewise-constant analytic fields integrate their jump geometry
// exactly; other fields sample gradients (analytic where available, centered
// differences on grids).
VariationMeasure total_variation(const VelocityField& u, const Region& region,
                                 VariationLabel label, const Vec& z = Vec(),
                                 int sample_points_per_axis = 0);

struct IncrementBoundReport {
  double lhs_bv = 0.0, rhs_bv = 0.0;
  double lhs_bd = 0.0, rhs_bd = 0.0;
  bool pass_bv = false, pass_bd = false;
  bool pass = false;
};

// integral over A of |u(x+eps z)-u(x)| against eps |z . grad u|((A)_eps), and
// the bounded-deformation variant with |z . delta u| against
// eps |z|^2 |sym grad u|((A)_eps).
IncrementBoundReport verify_increment_bound(const VelocityField& u, const Region& region,
                                            const Vec& z, double eps, double tol = 0.01);

}  // namespace drlab
