#include "drlab/flow.hpp"

#include <algorithm>
#include <cmath>

namespace drlab {

namespace {

// operator-norm estimate via a few power iterations on M^T M
double matrix_lipschitz(const Mat& m, int dim) {
  Vec v(1.0, 1.0, 1.0);
  for (int k = dim; k < 3; ++k) v[k] = 0.0;
  Mat mtm = mul(transpose(m), m);
  double lam = 0.0;
  for (int it = 0; it < 64; ++it) {
    Vec w = mul(mtm, v);
    double n = norm(w);
    if (n == 0.0) return 0.0;
    v = (1.0 / n) * w;
    lam = n;
  }
  return std::sqrt(lam);
}

std::vector<Vec> odd_sample_set(int dim) {
  std::vector<Vec> pts;
  SplitMix64 g(0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(dim));
  for (int i = 0; i < 128; ++i) {
    Vec z;
    for (int k = 0; k < dim; ++k) z[k] = 2.0 * g.uniform() - 1.0;
    pts.push_back(z);
  }
  return pts;
}

}  // namespace

FlowField FlowField::from_matrix(const Mat& m, int dim) {
  FlowField f;
  f.dim = dim;
  f.is_matrix = true;
  f.matrix = m;
  f.eval = [m](const Vec& z) { return mul(m, z); };
  f.lipschitz = std::max(1e-12, matrix_lipschitz(m, dim));
  f.divergence = trace(m, dim);
  f.id = "matrix";
  nlohmann::json mj = nlohmann::json::array();
  for (int i = 0; i < dim; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < dim; ++j) row.push_back(m(i, j));
    mj.push_back(row);
  }
  f.descriptor = {{"flow", "matrix"}, {"matrix", mj}, {"d", dim}};
  return f;
}

FlowField FlowField::catalog(const std::string& name) {
  if (name == "swirl") {
    FlowField f;
    f.dim = 2;
    f.eval = [](const Vec& z) {
      double s = 1.0 / (1.0 + norm_sq(z));
      return Vec(-z[1] * s, z[0] * s);
    };
    f.lipschitz = 1.0;
    f.divergence = 0.0;
    f.id = "swirl";
    f.descriptor = {{"flow", "catalog"}, {"name", "swirl"}, {"d", 2}};
    return f;
  }
  fail(Errc::parameter, "unknown flow field '" + name + "'");
}

FlowField FlowField::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("flow").get<std::string>();
  if (kind == "matrix") {
    const auto& rows = j.at("matrix");
    const int d = j.at("d").get<int>();
    Mat m;
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) m(i, k) = rows.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(k)).get<double>();
    return from_matrix(m, d);
  }
  if (kind == "catalog") return catalog(j.at("name").get<std::string>());
  fail(Errc::parse, "unknown flow descriptor kind '" + kind + "'");
}

double FlowField::odd_residual() const {
  double worst = 0.0;
  for (const Vec& z : odd_sample_set(dim)) {
    worst = std::max(worst, norm(eval(z) + eval(-z)));
  }
  return worst;
}

double FlowField::divergence_residual() const {
  double worst = 0.0;
  const double h = 1e-5;
  for (const Vec& z : odd_sample_set(dim)) {
    double div = 0.0;
    for (int k = 0; k < dim; ++k) {
      Vec zp = z, zm = z;
      zp[k] += h;
      zm[k] -= h;
      div += (eval(zp)[k] - eval(zm)[k]) / (2.0 * h);
    }
    worst = std::max(worst, std::abs(div - divergence));
  }
  return worst;
}

Vec flow_point(const FlowField& eta, double t, const Vec& z) {
  if (!(eta.lipschitz > 0.0)) fail(Errc::parameter, "flow field Lipschitz estimate must be positive");
  const double direction = t >= 0.0 ? 1.0 : -1.0;
  const double total = std::abs(t);
  const double h0 = 1e-2 * std::min(1.0, 1.0 / eta.lipschitz);
  const int steps = std::max(1, static_cast<int>(std::ceil(total / h0)));
  const double h = direction * total / steps;
  Vec x = z;
  for (int s = 0; s < steps; ++s) {
    Vec k1 = eta.eval(x);
    Vec k2 = eta.eval(x + (0.5 * h) * k1);
    Vec k3 = eta.eval(x + (0.5 * h) * k2);
    Vec k4 = eta.eval(x + h * k3);
    x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

double flow_jacobian(const FlowField& eta, double t) {
  return std::exp(eta.divergence * t);
}

double flow_jacobian_numeric(const FlowField& eta, double t, const Vec& z, double h) {
  Mat grad;
  for (int j = 0; j < eta.dim; ++j) {
    Vec zp = z, zm = z;
    zp[j] += h;
    zm[j] -= h;
    Vec fp = flow_point(eta, t, zp);
    Vec fm = flow_point(eta, t, zm);
    for (int i = 0; i < eta.dim; ++i) grad(i, j) = (fp[i] - fm[i]) / (2.0 * h);
  }
  if (eta.dim == 1) return grad(0, 0);
  if (eta.dim == 2) return grad(0, 0) * grad(1, 1) - grad(0, 1) * grad(1, 0);
  return grad(0, 0) * (grad(1, 1) * grad(2, 2) - grad(1, 2) * grad(2, 1)) -
         grad(0, 1) * (grad(1, 0) * grad(2, 2) - grad(1, 2) * grad(2, 0)) +
         grad(0, 2) * (grad(1, 0) * grad(2, 1) - grad(1, 1) * grad(2, 0));
}

}  // namespace drlab
