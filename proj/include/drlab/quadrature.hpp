#pragma once

#include <array>
#include <functional>
#include <vector>

#include "drlab/common.hpp"

namespace drlab {

struct QuadResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

using Integrand = std::function<double(const Vec&)>;
using Mask = std::function<bool(const Vec&)>;

// Midpoint nodes on one axis.
struct AxisGrid {
  std::vector<double> centers;
  std::vector<double> weights;
};

AxisGrid midpoint_axis(double lo, double hi, int n);

// Midpoint nodes split at the given coordinates, so integrands with jumps on
// axis-aligned sets are sampled stratum by stratum. Thin strata keep a
// minimum point count.
AxisGrid strata_axis(double lo, double hi, std::vector<double> splits, int base_n,
                     int min_per_stratum = 8);

int ball_default_axis_points(int dim);

// Tensor-product midpoint rule; terms are accumulated with a fixed pairwise
// reduction tree. The optional mask discards nodes (weight zero).
double integrate_tensor(int dim, const std::array<AxisGrid, 3>& axes, const Integrand& f,
                        const Mask* mask = nullptr);

// Integral over the unit ball: tensor midpoint on [-1,1]^dim masked to
// |z| < 1. Default points per axis: 128 (d=1), 96 (d=2), 48 (d=3). The error
// estimate compares against one grid coarsening (n/2 per axis).
QuadResult ball_integrate(int dim, const Integrand& f, int n_per_axis = 0);

// Same rule over an axis-aligned box with per-axis counts and optional mask
// and strata splits.
QuadResult box_integrate(int dim, const Vec& lo, const Vec& hi, const std::array<int, 3>& n,
                         const Integrand& f, const Mask* mask = nullptr,
                         const std::array<std::vector<double>, 3>* splits = nullptr);

// Single-pass variants (no error estimate) for inner loops that reuse the
// same node set; the value equals the `value` field of the two-pass rules.
double ball_integrate_value(int dim, const Integrand& f, int n_per_axis = 0);
double box_integrate_value(int dim, const Vec& lo, const Vec& hi, const std::array<int, 3>& n,
                           const Integrand& f, const Mask* mask = nullptr,
                           const std::array<std::vector<double>, 3>* splits = nullptr);

}  // namespace drlab
