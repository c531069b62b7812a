#include "drlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>
#include <unordered_map>

namespace drlab {

namespace {

constexpr double kEvenTol = 1e-8;
constexpr double kNegTol = 1e-12;

double std_profile(double r) {
  if (r >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - r * r));
}
double std_profile_deriv(double r) {
  if (r >= 1.0) return 0.0;
  const double q = 1.0 - r * r;
  return std_profile(r) * (-2.0 * r / (q * q));
}

double poly_profile(double r, int k) {
  if (r >= 1.0) return 0.0;
  return std::pow(1.0 - r * r, k);
}
double poly_profile_deriv(double r, int k) {
  if (r >= 1.0) return 0.0;
  return -2.0 * k * r * std::pow(1.0 - r * r, k - 1);
}

// C^1 ramp from 1 at r = 1-delta to 0 at r = 1.
double ind_profile(double r, double delta) {
  if (r >= 1.0) return 0.0;
  if (r <= 1.0 - delta) return 1.0;
  const double t = (1.0 - r) / delta;
  return t * t * (3.0 - 2.0 * t);
}
double ind_profile_deriv(double r, double delta) {
  if (r >= 1.0 || r <= 1.0 - delta) return 0.0;
  const double t = (1.0 - r) / delta;
  return 6.0 * t * (1.0 - t) * (-1.0 / delta);
}

Kernel radial_kernel(int dim, std::function<double(double)> prof,
                     std::function<double(double)> dprof, const std::string& id,
                     nlohmann::json descriptor, double feature = 1.0) {
  Kernel k;
  k.dim = dim;
  k.cls = KernelClass::radial;
  k.support_radius = 1.0;
  k.feature_scale = feature;
  for (int i = 0; i < dim; ++i) k.support_box[i] = 1.0;
  const double c =
      1.0 / ball_integrate_value(dim, [&](const Vec& z) { return prof(norm(z)); });
  if (!std::isfinite(c) || c <= 0.0) fail(Errc::parameter, "kernel profile is not normalizable");
  auto p = [prof, c](double r) { return c * prof(r); };
  auto dp = [dprof, c](double r) { return c * dprof(r); };
  k.eval = [p](const Vec& z) { return p(norm(z)); };
  k.grad = [dp](const Vec& z) {
    const double r = norm(z);
    if (r < 1e-14 || r >= 1.0) return Vec();
    return (dp(r) / r) * z;
  };
  k.radial = true;
  k.radial_profile = p;
  k.radial_derivative = dp;
  k.mass = 1.0;
  k.id = id;
  descriptor["normalization"] = c;
  k.descriptor = std::move(descriptor);
  return k;
}

std::vector<Vec> symmetric_sample_set(const Kernel& k) {
  std::vector<Vec> pts;
  SplitMix64 g(0x51a7e5u + static_cast<std::uint64_t>(k.dim));
  for (int i = 0; i < 256; ++i) {
    Vec z;
    for (int d = 0; d < k.dim; ++d) z[d] = (2.0 * g.uniform() - 1.0) * k.support_box[d];
    pts.push_back(z);
    pts.push_back(-z);
  }
  return pts;
}

std::array<int, 3> support_axis_counts(const Kernel& k, double target_cell, int cap) {
  std::array<int, 3> n{2, 2, 2};
  for (int d = 0; d < k.dim; ++d) {
    n[static_cast<std::size_t>(d)] =
        std::clamp(static_cast<int>(std::ceil(2.0 * k.support_box[d] / target_cell)), 48, cap);
  }
  return n;
}

}  // namespace

std::string to_string(KernelClass c) {
  switch (c) {
    case KernelClass::unit_ball: return "K";
    case KernelClass::radial: return "K_rad";
    case KernelClass::compact: return "K_c";
    case KernelClass::rescaled_unit_ball: return "K_W";
  }
  return "?";
}

bool KernelReport::usable() const {
  return even_residual <= kEvenTol && min_value >= -kNegTol &&
         mass_error <= mass_error_tolerance && support_ok;
}

Kernel make_bump(BumpKind kind, int dim, double param, Vec tensor_widths) {
  if (dim < 1 || dim > 3) fail(Errc::parameter, "kernel dimension must be 1, 2 or 3");
  switch (kind) {
    case BumpKind::standard_radial: {
      std::ostringstream id;
      id << "standard_radial(d=" << dim << ")";
      return radial_kernel(dim, [](double r) { return std_profile(r); },
                           [](double r) { return std_profile_deriv(r); }, id.str(),
                           {{"kind", "standard_radial"}, {"d", dim}});
    }
    case BumpKind::polynomial_radial: {
      const int k = static_cast<int>(std::lround(param));
      if (k < 1 || k > 40) fail(Errc::parameter, "polynomial_radial exponent must be in [1, 40]");
      std::ostringstream id;
      id << "polynomial_radial(" << k << ", d=" << dim << ")";
      return radial_kernel(dim, [k](double r) { return poly_profile(r, k); },
                           [k](double r) { return poly_profile_deriv(r, k); }, id.str(),
                           {{"kind", "polynomial_radial"}, {"k", k}, {"d", dim}});
    }
    case BumpKind::indicator_smoothed: {
      const double delta = param;
      if (!(delta > 0.0 && delta < 1.0))
        fail(Errc::parameter, "indicator_smoothed ramp width must lie in (0,1)");
      std::ostringstream id;
      id << "indicator_smoothed(" << delta << ", d=" << dim << ")";
      return radial_kernel(dim, [delta](double r) { return ind_profile(r, delta); },
                           [delta](double r) { return ind_profile_deriv(r, delta); }, id.str(),
                           {{"kind", "indicator_smoothed"}, {"delta", delta}, {"d", dim}}, delta);
    }
    case BumpKind::tensor: {
      Vec w = tensor_widths;
      bool given = false;
      for (int d = 0; d < dim; ++d) given = given || w[d] != 0.0;
      if (!given)
        for (int d = 0; d < dim; ++d) w[d] = 0.99 / std::sqrt(static_cast<double>(dim));
      double diag = 0.0;
      for (int d = 0; d < dim; ++d) {
        if (!(w[d] > 0.0)) fail(Errc::parameter, "tensor widths must be positive");
        diag += w[d] * w[d];
      }
      if (diag > 1.0) fail(Errc::parameter, "tensor support rectangle must fit in the unit ball");
      Kernel k;
      k.dim = dim;
      k.cls = KernelClass::unit_ball;
      k.support_radius = std::sqrt(diag);
      k.support_box = w;
      double wmin = w[0];
      for (int d = 1; d < dim; ++d) wmin = std::min(wmin, w[d]);
      k.feature_scale = wmin;
      auto raw = [w, dim](const Vec& z) {
        double v = 1.0;
        for (int d = 0; d < dim; ++d) v *= std_profile(std::abs(z[d]) / w[d]);
        return v;
      };
      const double c = 1.0 / ball_integrate_value(dim, raw);
      k.eval = [raw, c](const Vec& z) { return c * raw(z); };
      k.grad = [w, c, dim](const Vec& z) {
        Vec g;
        for (int d = 0; d < dim; ++d) {
          const double t = std::abs(z[d]) / w[d];
          if (t >= 1.0) return Vec();
          double axis = std_profile_deriv(t) * (z[d] >= 0 ? 1.0 : -1.0) / w[d];
          double rest = 1.0;
          for (int e = 0; e < dim; ++e)
            if (e != d) rest *= std_profile(std::abs(z[e]) / w[e]);
          g[d] = c * axis * rest;
        }
        return g;
      };
      k.mass = 1.0;
      std::ostringstream id;
      id << "tensor(";
      for (int d = 0; d < dim; ++d) id << (d ? "," : "") << w[d];
      id << ", d=" << dim << ")";
      k.id = id.str();
      nlohmann::json widths = nlohmann::json::array();
      for (int d = 0; d < dim; ++d) widths.push_back(w[d]);
      k.descriptor = {{"kind", "tensor"}, {"widths", widths}, {"d", dim}, {"normalization", c}};
      return k;
    }
  }
  fail(Errc::parameter, "unknown bump kind");
}

KernelReport validate_kernel(const Kernel& k) {
  KernelReport rep;
  double max_val = 0.0;
  for (const Vec& z : symmetric_sample_set(k)) max_val = std::max(max_val, std::abs(k.eval(z)));
  if (max_val == 0.0) max_val = 1.0;
  for (const Vec& z : symmetric_sample_set(k)) {
    rep.even_residual =
        std::max(rep.even_residual, std::abs(k.eval(z) - k.eval(-z)) / max_val);
    rep.min_value = std::min(rep.min_value, k.eval(z));
  }

  QuadResult mass;
  if (k.support_radius <= 1.0 + 1e-12) {
    mass = ball_integrate(k.dim, [&](const Vec& z) { return k.eval(z); });
  } else {
    Vec lo = -1.0 * k.support_box, hi = k.support_box;
    mass = box_integrate(k.dim, lo, hi, support_axis_counts(k, 0.05, 2048),
                         [&](const Vec& z) { return k.eval(z); });
  }
  rep.mass_error = std::abs(mass.value - 1.0);
  rep.mass_error_tolerance = std::max(5.0 * mass.error_estimate, 1e-7);

  // values just outside the declared support must vanish
  rep.support_ok = true;
  SplitMix64 g(0xb0a7ULL);
  for (int i = 0; i < 64; ++i) {
    Vec dir;
    double n2 = 0.0;
    for (int d = 0; d < k.dim; ++d) {
      dir[d] = 2.0 * g.uniform() - 1.0;
      n2 += dir[d] * dir[d];
    }
    if (n2 < 1e-12) continue;
    Vec z = (k.support_radius * 1.02 / std::sqrt(n2)) * dir;
    if (std::abs(k.eval(z)) > 1e-12 * max_val) rep.support_ok = false;
  }
  if ((k.cls == KernelClass::unit_ball || k.cls == KernelClass::radial ||
       k.cls == KernelClass::rescaled_unit_ball) &&
      k.support_radius > 1.0 + 1e-12) {
    rep.support_ok = false;
  }
  return rep;
}

Kernel rescale_kernel(const Kernel& k, double R) {
  if (R < k.support_radius - 1e-12)
    fail(Errc::parameter, "rescale factor must be at least the support radius");
  Kernel out;
  out.dim = k.dim;
  out.cls = KernelClass::rescaled_unit_ball;
  out.support_radius = k.support_radius / R;
  out.support_box = (1.0 / R) * k.support_box;
  out.feature_scale = k.feature_scale / R;
  const double Rd = std::pow(R, k.dim);
  auto inner_eval = k.eval;
  auto inner_grad = k.grad;
  out.eval = [inner_eval, R, Rd](const Vec& z) { return Rd * inner_eval(R * z); };
  out.grad = [inner_grad, R, Rd](const Vec& z) { return (Rd * R) * inner_grad(R * z); };
  out.radial = k.radial;
  if (k.radial) {
    auto p = k.radial_profile;
    auto dp = k.radial_derivative;
    out.radial_profile = [p, R, Rd](double r) { return Rd * p(R * r); };
    out.radial_derivative = [dp, R, Rd](double r) { return Rd * R * dp(R * r); };
  }
  out.mass = k.mass;  // exact under the change of variables
  out.id = "rescaled(" + k.id + ", R=" + std::to_string(R) + ")";
  out.descriptor = {{"kind", "rescaled"}, {"R", R}, {"inner", k.descriptor}};
  return out;
}

namespace {

struct TrapezoidNodes {
  std::vector<double> t;
  std::vector<double> w;  // weights summing to T
};

TrapezoidNodes trapezoid_nodes(double T, int intervals) {
  TrapezoidNodes n;
  const double h = T / intervals;
  n.t.resize(static_cast<std::size_t>(intervals) + 1);
  n.w.assign(static_cast<std::size_t>(intervals) + 1, h);
  for (int i = 0; i <= intervals; ++i) n.t[static_cast<std::size_t>(i)] = i * h;
  n.w.front() *= 0.5;
  n.w.back() *= 0.5;
  return n;
}

// Number of trapezoid intervals. The 16-per-unit-time default resolves
// unit-width kernels; narrower base kernels need proportionally more nodes
// to resolve the passage of the support across a point (the passage lasts
// about feature/|flow| time units, so 8 per feature keeps ~16 nodes in it).
int time_intervals(double T, double min_feature) {
  const double per_unit = std::max(16.0, 8.0 / std::clamp(min_feature, 1.0 / 32.0, 1.0));
  return std::max(64, static_cast<int>(std::ceil(per_unit * T)));
}

std::uint64_t lattice_key(const Vec& z, int dim) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int d = 0; d < dim; ++d) {
    const auto q = static_cast<std::int64_t>(std::llround(z[d] * 1e4));
    h ^= static_cast<std::uint64_t>(q) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

struct MemoCache {
  std::mutex mu;
  std::unordered_map<std::uint64_t, double> map;
};

}  // namespace

Kernel flow_averaged_kernel(const Kernel& theta, const FlowField& eta, double T) {
  if (!(T > 0.0)) fail(Errc::parameter, "flow averaging horizon must be positive");
  if (theta.dim != eta.dim) fail(Errc::parameter, "kernel and flow dimensions differ");
  const int dim = theta.dim;
  const double a = eta.divergence;
  const double pref = std::abs(a) < 1e-14 ? 1.0 / T : a / (std::exp(a * T) - 1.0);

  double min_feature = 1.0;
  for (int d = 0; d < dim; ++d) min_feature = std::min(min_feature, theta.support_box[d]);
  const int intervals = time_intervals(T, min_feature);
  TrapezoidNodes nodes = trapezoid_nodes(T, intervals);

  Kernel k;
  k.dim = dim;
  k.cls = KernelClass::compact;
  k.id = "flow_averaged(" + theta.id + ", " + eta.id + ", T=" + std::to_string(T) + ")";
  k.descriptor = {{"kind", "flow_averaged"},
                  {"theta", theta.descriptor},
                  {"flow", eta.descriptor},
                  {"T", T},
                  {"time_intervals", intervals},
                  {"d", dim}};
  k.feature_scale = std::min(min_feature, theta.feature_scale);
  {
    auto meta = std::make_shared<FlowAverageMeta>();
    meta->is_matrix = eta.is_matrix;
    meta->matrix = eta.matrix;
    meta->horizon = T;
    meta->divergence = a;
    meta->base_box = theta.support_box;
    meta->base_feature = k.feature_scale;
    k.flow_meta = meta;
  }

  const double growth = std::exp(eta.lipschitz * T);
  bool radius_preserving = eta.id == "swirl";
  std::function<double(const Vec&)> grad_base;

  if (eta.is_matrix) {
    // exact backward maps at the trapezoid nodes
    auto backward = std::make_shared<std::vector<Mat>>();
    backward->reserve(nodes.t.size());
    Vec box;
    for (std::size_t i = 0; i < nodes.t.size(); ++i) {
      backward->push_back(matrix_exponential((-nodes.t[i]) * eta.matrix, dim));
      Mat fwd = matrix_exponential(nodes.t[i] * eta.matrix, dim);
      for (int r = 0; r < dim; ++r) {
        double ext = 0.0;
        for (int c = 0; c < dim; ++c) ext += std::abs(fwd(r, c)) * theta.support_box[c];
        box[r] = std::max(box[r], ext);
      }
    }
    k.support_box = box;
    k.support_radius = std::min(growth * theta.support_radius, norm(box));

    auto theta_eval = theta.eval;
    auto w = std::make_shared<std::vector<double>>(nodes.w);
    const Vec bbox = box;
    const int bd = dim;
    auto raw = [backward, w, theta_eval, pref, bbox, bd](const Vec& z) {
      for (int d = 0; d < bd; ++d)
        if (std::abs(z[d]) > bbox[d]) return 0.0;
      double acc = 0.0;
      for (std::size_t i = 0; i < w->size(); ++i)
        acc += (*w)[i] * theta_eval(mul((*backward)[i], z));
      return pref * acc;
    };
    k.eval = [raw](const Vec& z) { return 0.5 * (raw(z) + raw(-z)); };

    // semi-analytic mass: each time slice integrates to e^{a t} * mass(theta)
    double slices = 0.0;
    for (std::size_t i = 0; i < nodes.t.size(); ++i)
      slices += nodes.w[i] * std::exp(a * nodes.t[i]);
    k.mass = pref * slices * theta.mass;
  } else {
    k.support_radius = radius_preserving ? theta.support_radius : growth * theta.support_radius;
    for (int d = 0; d < dim; ++d) k.support_box[d] = k.support_radius;

    auto cache = std::make_shared<MemoCache>();
    auto theta_eval = theta.eval;
    const FlowField flow = eta;
    auto tnodes = std::make_shared<TrapezoidNodes>(nodes);
    const double support = k.support_radius;
    auto raw = [flow, theta_eval, tnodes, pref, support](const Vec& z) {
      if (norm(z) >= support) return 0.0;
      // one backward trajectory; theta sampled at the trapezoid nodes
      const double h_flow = 1e-2 * std::min(1.0, 1.0 / flow.lipschitz);
      double acc = tnodes->w[0] * theta_eval(z);
      Vec x = z;
      for (std::size_t i = 1; i < tnodes->t.size(); ++i) {
        const double span = tnodes->t[i] - tnodes->t[i - 1];
        const int sub = std::max(1, static_cast<int>(std::ceil(span / h_flow)));
        const double h = -span / sub;
        for (int s = 0; s < sub; ++s) {
          Vec k1 = flow.eval(x);
          Vec k2 = flow.eval(x + (0.5 * h) * k1);
          Vec k3 = flow.eval(x + (0.5 * h) * k2);
          Vec k4 = flow.eval(x + h * k3);
          x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        acc += tnodes->w[i] * theta_eval(x);
      }
      return pref * acc;
    };
    auto cached = [raw, cache, dim](const Vec& z) {
      const std::uint64_t key = lattice_key(z, dim);
      {
        std::lock_guard<std::mutex> lock(cache->mu);
        auto it = cache->map.find(key);
        if (it != cache->map.end()) return it->second;
      }
      const double v = raw(z);
      std::lock_guard<std::mutex> lock(cache->mu);
      cache->map.emplace(key, v);
      return v;
    };
    k.eval = [cached](const Vec& z) { return 0.5 * (cached(z) + cached(-z)); };
    // gradient probes sit below the cache lattice; difference the raw closure
    grad_base = [raw](const Vec& z) { return 0.5 * (raw(z) + raw(-z)); };

    Vec lo = -1.0 * k.support_box, hi = k.support_box;
    k.mass = box_integrate_value(dim, lo, hi, support_axis_counts(k, 0.02, 512),
                                 [&](const Vec& z) { return k.eval(z); });
  }

  auto eval = grad_base ? grad_base : k.eval;
  const double fd = 1e-5;
  const int kd = dim;
  k.grad = [eval, fd, kd](const Vec& z) {
    Vec g;
    for (int d = 0; d < kd; ++d) {
      Vec zp = z, zm = z;
      zp[d] += fd;
      zm[d] -= fd;
      g[d] = (eval(zp) - eval(zm)) / (2.0 * fd);
    }
    return g;
  };
  return k;
}

Kernel renormalized(const Kernel& k) {
  const double m = k.mass;
  if (!(m > 0.0) || !std::isfinite(m)) fail(Errc::parameter, "kernel mass must be positive");
  if (std::abs(m - 1.0) < 1e-12) return k;
  Kernel out = k;
  auto eval = k.eval;
  auto grad = k.grad;
  out.eval = [eval, m](const Vec& z) { return eval(z) / m; };
  out.grad = [grad, m](const Vec& z) { return (1.0 / m) * grad(z); };
  if (k.radial) {
    auto p = k.radial_profile;
    auto dp = k.radial_derivative;
    out.radial_profile = [p, m](double r) { return p(r) / m; };
    out.radial_derivative = [dp, m](double r) { return dp(r) / m; };
  }
  out.mass = 1.0;
  out.descriptor = k.descriptor;
  out.descriptor["mass_correction"] = 1.0 / m;
  out.id = k.id + "/renormalized";
  return out;
}

nlohmann::json kernel_to_json(const Kernel& k) { return k.descriptor; }

Kernel kernel_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const int dim = j.value("d", 2);
  if (kind == "standard_radial") return make_bump(BumpKind::standard_radial, dim);
  if (kind == "polynomial_radial")
    return make_bump(BumpKind::polynomial_radial, dim, j.at("k").get<double>());
  if (kind == "indicator_smoothed")
    return make_bump(BumpKind::indicator_smoothed, dim, j.at("delta").get<double>());
  if (kind == "tensor") {
    Vec w;
    if (j.contains("widths")) {
      const auto& arr = j.at("widths");
      for (std::size_t i = 0; i < arr.size() && i < 3; ++i) w[static_cast<int>(i)] = arr[i].get<double>();
    }
    return make_bump(BumpKind::tensor, dim, 0.0, w);
  }
  if (kind == "rescaled")
    return rescale_kernel(kernel_from_json(j.at("inner")), j.at("R").get<double>());
  if (kind == "flow_averaged") {
    Kernel theta = kernel_from_json(j.at("theta"));
    FlowField eta = FlowField::from_json(j.at("flow"));
    return flow_averaged_kernel(theta, eta, j.at("T").get<double>());
  }
  fail(Errc::parse, "unknown kernel kind '" + kind + "'");
}

}  // namespace drlab
