#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "drlab/kernels.hpp"
#include "drlab/quadrature.hpp"

using namespace drlab;

namespace {
constexpr double kPi = 3.14159265358979323846;

std::vector<Kernel> sample_kernels(int dim) {
  std::vector<Kernel> ks;
  ks.push_back(make_bump(BumpKind::standard_radial, dim));
  ks.push_back(make_bump(BumpKind::polynomial_radial, dim, 2));
  ks.push_back(make_bump(BumpKind::polynomial_radial, dim, 4));
  ks.push_back(make_bump(BumpKind::indicator_smoothed, dim, 0.3));
  if (dim >= 2) ks.push_back(make_bump(BumpKind::tensor, dim));
  return ks;
}

Vec random_interior_point(SplitMix64& rng, const Kernel& k) {
  for (;;) {
    Vec z;
    for (int d = 0; d < k.dim; ++d) z[d] = (2.0 * rng.uniform() - 1.0) * k.support_box[d] * 0.95;
    if (norm(z) < 0.95 * k.support_radius) return z;
  }
}

}  // namespace

TEST_CASE("standard radial bump has unit mass after normalization") {
  for (int dim : {1, 2, 3}) {
    Kernel k = make_bump(BumpKind::standard_radial, dim);
    const double mass = ball_integrate_value(dim, [&](const Vec& z) { return k.eval(z); });
    CHECK(std::abs(mass - 1.0) < 1e-8);
    KernelReport rep = validate_kernel(k);
    CHECK(rep.usable());
  }
}

TEST_CASE("polynomial bump normalization matches the polar closed form") {
  // integral over the disk of (1-r^2)^2 is pi/3, so c = 3/pi
  Kernel k = make_bump(BumpKind::polynomial_radial, 2, 2);
  const double c = k.descriptor.at("normalization").get<double>();
  CHECK(c == doctest::Approx(3.0 / kPi).epsilon(2e-3));
}

TEST_CASE("bumps are even at random points") {
  SplitMix64 rng(11);
  for (const Kernel& k : sample_kernels(2)) {
    for (int i = 0; i < 100; ++i) {
      Vec z = random_interior_point(rng, k);
      CHECK(k.eval(z) == doctest::Approx(k.eval(-z)).epsilon(1e-12));
    }
  }
}

TEST_CASE("validate flags an odd-perturbed kernel") {
  Kernel base = make_bump(BumpKind::standard_radial, 2);
  Kernel bad = base;
  auto inner = base.eval;
  bad.eval = [inner](const Vec& z) { return (1.0 + z[0]) * inner(z); };
  bad.grad = [inner, bad_eval = bad.eval](const Vec& z) {
    Vec g;
    const double h = 1e-6;
    for (int d = 0; d < 2; ++d) {
      Vec zp = z, zm = z;
      zp[d] += h;
      zm[d] -= h;
      g[d] = (bad_eval(zp) - bad_eval(zm)) / (2.0 * h);
    }
    return g;
  };
  KernelReport rep = validate_kernel(bad);
  CHECK(rep.even_residual > 1e-2);
  CHECK(!rep.usable());
}

TEST_CASE("analytic gradients match central differences at 100 interior points") {
  SplitMix64 rng(23);
  for (const Kernel& k : sample_kernels(2)) {
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      Vec z = random_interior_point(rng, k);
      Vec g = k.grad(z);
      const double h = 1e-6;
      for (int d = 0; d < 2; ++d) {
        Vec zp = z, zm = z;
        zp[d] += h;
        zm[d] -= h;
        const double fd = (k.eval(zp) - k.eval(zm)) / (2.0 * h);
        worst = std::max(worst, std::abs(g[d] - fd));
      }
    }
    CHECK(worst < 1e-5);  // second-order differences on smooth profiles
  }
}

TEST_CASE("radial gradient formula at a specific point") {
  // grad rho = c * 2(1-r^2) * (-2 z); at z=(0.5,0): (-4.5/pi, 0)
  Kernel k = make_bump(BumpKind::polynomial_radial, 2, 2);
  Vec g = k.grad(Vec(0.5, 0.0));
  CHECK(g[0] == doctest::Approx(-4.5 / kPi).epsilon(2e-3));
  CHECK(g[1] == doctest::Approx(0.0).epsilon(1e-12));
  // even functions have a critical point at the origin
  CHECK(norm(k.grad(Vec(0.0, 0.0))) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("gradient vanishes outside the support") {
  Kernel k = make_bump(BumpKind::standard_radial, 2);
  CHECK(norm(k.grad(Vec(1.2, 0.3))) == 0.0);
  CHECK(k.eval(Vec(0.9, 0.9)) == 0.0);
}

TEST_CASE("gradient integral identities") {
  for (const Kernel& k : sample_kernels(2)) {
    // compact support forces the gradient to integrate to zero
    for (int d = 0; d < 2; ++d) {
      QuadResult q = ball_integrate(2, [&](const Vec& z) { return k.grad(z)[d]; });
      CHECK(std::abs(q.value) < 1e-6);
    }
    // integration by parts: int grad rho . z = -d * mass
    QuadResult q = ball_integrate(2, [&](const Vec& z) { return dot(k.grad(z), z); });
    CHECK(q.value == doctest::Approx(-2.0).epsilon(5e-3));
  }
}

TEST_CASE("rescale identities") {
  Kernel k = make_bump(BumpKind::standard_radial, 2);
  SplitMix64 rng(5);

  Kernel same = rescale_kernel(k, 1.0);
  Kernel bigger = rescale_kernel(k, 3.0);
  CHECK(bigger.cls == KernelClass::rescaled_unit_ball);
  CHECK(bigger.support_radius == doctest::Approx(1.0 / 3.0));
  // mass preserved exactly by the change of variables; measure it
  KernelReport rep = validate_kernel(bigger);
  CHECK(rep.mass_error < 1e-2);

  Kernel twice = rescale_kernel(bigger, 1.0);
  for (int i = 0; i < 50; ++i) {
    Vec z = random_interior_point(rng, k);
    CHECK(same.eval(z) == doctest::Approx(k.eval(z)).epsilon(1e-14));
    CHECK(twice.eval(z) == doctest::Approx(bigger.eval(z)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(rescale_kernel(k, 0.5), Error);
}

TEST_CASE("kernel JSON descriptors round trip") {
  SplitMix64 rng(9);
  for (const Kernel& k : sample_kernels(2)) {
    Kernel back = kernel_from_json(kernel_to_json(k));
    for (int i = 0; i < 20; ++i) {
      Vec z = random_interior_point(rng, k);
      CHECK(back.eval(z) == doctest::Approx(k.eval(z)).epsilon(1e-12));
    }
  }
  Kernel resc = rescale_kernel(make_bump(BumpKind::polynomial_radial, 1, 3), 2.0);
  Kernel back = kernel_from_json(kernel_to_json(resc));
  CHECK(back.eval(Vec(0.3)) == doctest::Approx(resc.eval(Vec(0.3))).epsilon(1e-12));
}

TEST_CASE("parameter errors") {
  CHECK_THROWS_AS(make_bump(BumpKind::polynomial_radial, 2, 0), Error);
  CHECK_THROWS_AS(make_bump(BumpKind::indicator_smoothed, 2, 1.5), Error);
  CHECK_THROWS_AS(make_bump(BumpKind::tensor, 2, 0.0, Vec(0.9, 0.9)), Error);  // corner outside
  CHECK_THROWS_AS(kernel_from_json(nlohmann::json{{"kind", "mystery"}}), Error);
}

TEST_CASE("renormalized divides by the measured mass") {
  Kernel k = make_bump(BumpKind::standard_radial, 2);
  Kernel off = k;
  auto inner = k.eval;
  off.eval = [inner](const Vec& z) { return 2.0 * inner(z); };
  off.mass = 2.0;
  Kernel fixed = renormalized(off);
  CHECK(fixed.eval(Vec(0.2, 0.1)) == doctest::Approx(k.eval(Vec(0.2, 0.1))).epsilon(1e-14));
  CHECK(fixed.descriptor.at("mass_correction").get<double>() == doctest::Approx(0.5));
}
