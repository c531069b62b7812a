#pragma once

#include <functional>
#include <string>

#include "drlab/common.hpp"

#include "json.hpp"

namespace drlab {

// Lipschitz vector field driving an ODE flow map. Fields must be odd with
// constant divergence; both properties are sampled at construction.
struct FlowField {
  int dim = 2;
  std::function<Vec(const Vec&)> eval;
  double lipschitz = 1.0;      // estimate used for the RK4 step size
  double divergence = 0.0;     // constant by assumption
  bool is_matrix = false;
  Mat matrix;                  // eta(z) = M z when is_matrix
  std::string id;
  nlohmann::json descriptor;

  static FlowField from_matrix(const Mat& m, int dim);
  // Catalog of nonlinear odd divergence-free fields. Currently: "swirl",
  // the bounded rotation eta(z) = (-z2, z1)/(1 + |z|^2) in the plane.
  static FlowField catalog(const std::string& name);
  static FlowField from_json(const nlohmann::json& j);

  double odd_residual() const;          // max |eta(-z) + eta(z)| over samples
  double divergence_residual() const;   // max deviation of sampled div from `divergence`
};

// Flow map X_t(z) by fixed-step RK4; negative t integrates backwards.
// Step size: 1e-2 * min(1, 1/Lip).
Vec flow_point(const FlowField& eta, double t, const Vec& z);

// det(grad X_t) = e^{a t} for constant divergence a.
double flow_jacobian(const FlowField& eta, double t);

// Finite-difference determinant of the numerical flow, for cross-checks.
double flow_jacobian_numeric(const FlowField& eta, double t, const Vec& z, double h = 1e-4);

}  // namespace drlab
