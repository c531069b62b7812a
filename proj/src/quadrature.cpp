#include "drlab/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace drlab {

AxisGrid midpoint_axis(double lo, double hi, int n) {
  AxisGrid g;
  if (n < 1) n = 1;
  const double h = (hi - lo) / n;
  g.centers.resize(static_cast<std::size_t>(n));
  g.weights.assign(static_cast<std::size_t>(n), h);
  for (int i = 0; i < n; ++i) g.centers[static_cast<std::size_t>(i)] = lo + (i + 0.5) * h;
  return g;
}

AxisGrid strata_axis(double lo, double hi, std::vector<double> splits, int base_n,
                     int min_per_stratum) {
  std::vector<double> cuts{lo, hi};
  for (double s : splits)
    if (s > lo + 1e-14 && s < hi - 1e-14) cuts.push_back(s);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-13; }),
             cuts.end());
  const double total = hi - lo;
  AxisGrid g;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k], b = cuts[k + 1];
    const int n = std::max(min_per_stratum,
                           static_cast<int>(std::ceil(base_n * (b - a) / total)));
    AxisGrid part = midpoint_axis(a, b, n);
    g.centers.insert(g.centers.end(), part.centers.begin(), part.centers.end());
    g.weights.insert(g.weights.end(), part.weights.begin(), part.weights.end());
  }
  return g;
}

int ball_default_axis_points(int dim) {
  switch (dim) {
    case 1: return 128;
    case 2: return 96;
    default: return 48;
  }
}

double integrate_tensor(int dim, const std::array<AxisGrid, 3>& axes, const Integrand& f,
                        const Mask* mask) {
  std::array<std::size_t, 3> count{1, 1, 1};
  for (int k = 0; k < dim; ++k) count[static_cast<std::size_t>(k)] = axes[static_cast<std::size_t>(k)].centers.size();
  const std::size_t total = count[0] * count[1] * count[2];
  std::vector<double> terms(total);
  parallel_for(total, [&](std::size_t idx) {
    std::size_t rest = idx;
    std::array<std::size_t, 3> ii{0, 0, 0};
    for (int k = dim - 1; k >= 0; --k) {
      ii[static_cast<std::size_t>(k)] = rest % count[static_cast<std::size_t>(k)];
      rest /= count[static_cast<std::size_t>(k)];
    }
    Vec z;
    double w = 1.0;
    for (int k = 0; k < dim; ++k) {
      const auto& ax = axes[static_cast<std::size_t>(k)];
      z[k] = ax.centers[ii[static_cast<std::size_t>(k)]];
      w *= ax.weights[ii[static_cast<std::size_t>(k)]];
    }
    if (mask && !(*mask)(z)) {
      terms[idx] = 0.0;
      return;
    }
    terms[idx] = w * f(z);
  });
  return pairwise_sum(terms);
}

namespace {

double masked_ball_pass(int dim, const Integrand& f, int n) {
  std::array<AxisGrid, 3> axes;
  for (int k = 0; k < dim; ++k) axes[static_cast<std::size_t>(k)] = midpoint_axis(-1.0, 1.0, n);
  Mask inside = [](const Vec& z) { return norm_sq(z) < 1.0; };
  return integrate_tensor(dim, axes, f, &inside);
}

}  // namespace

QuadResult ball_integrate(int dim, const Integrand& f, int n_per_axis) {
  if (dim < 1 || dim > 3) fail(Errc::parameter, "ball_integrate supports dimensions 1..3");
  const int n = n_per_axis > 0 ? n_per_axis : ball_default_axis_points(dim);
  const double fine = masked_ball_pass(dim, f, n);
  const double coarse = masked_ball_pass(dim, f, std::max(2, n / 2));
  return {fine, std::abs(fine - coarse)};
}

namespace {

double box_pass(int dim, const Vec& lo, const Vec& hi, const std::array<int, 3>& n,
                const Integrand& f, const Mask* mask,
                const std::array<std::vector<double>, 3>* splits, int shrink) {
  std::array<AxisGrid, 3> axes;
  for (int k = 0; k < dim; ++k) {
    const int nk = std::max(2, n[static_cast<std::size_t>(k)] / shrink);
    if (splits) {
      axes[static_cast<std::size_t>(k)] =
          strata_axis(lo[k], hi[k], (*splits)[static_cast<std::size_t>(k)], nk);
    } else {
      axes[static_cast<std::size_t>(k)] = midpoint_axis(lo[k], hi[k], nk);
    }
  }
  return integrate_tensor(dim, axes, f, mask);
}

}  // namespace

QuadResult box_integrate(int dim, const Vec& lo, const Vec& hi, const std::array<int, 3>& n,
                         const Integrand& f, const Mask* mask,
                         const std::array<std::vector<double>, 3>* splits) {
  const double fine = box_pass(dim, lo, hi, n, f, mask, splits, 1);
  const double coarse = box_pass(dim, lo, hi, n, f, mask, splits, 2);
  return {fine, std::abs(fine - coarse)};
}

double ball_integrate_value(int dim, const Integrand& f, int n_per_axis) {
  const int n = n_per_axis > 0 ? n_per_axis : ball_default_axis_points(dim);
  return masked_ball_pass(dim, f, n);
}

double box_integrate_value(int dim, const Vec& lo, const Vec& hi, const std::array<int, 3>& n,
                           const Integrand& f, const Mask* mask,
                           const std::array<std::vector<double>, 3>* splits) {
  return box_pass(dim, lo, hi, n, f, mask, splits, 1);
}

}  // namespace drlab
