#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "drlab/flow.hpp"
#include "drlab/kernels.hpp"
#include "drlab/quadrature.hpp"

using namespace drlab;

namespace {

Mat shear_matrix() {
  Mat m;
  m(0, 1) = 1.0;
  return m;
}

}  // namespace

TEST_CASE("zero field: the flow is the identity") {
  FlowField eta = FlowField::from_matrix(Mat(), 2);
  eta.lipschitz = 1.0;  // zero matrix gives a zero estimate; keep the step finite
  Vec z(0.3, -0.7);
  Vec x = flow_point(eta, 2.0, z);
  CHECK(norm(x - z) < 1e-14);
}

TEST_CASE("nilpotent shear flow is exact") {
  FlowField eta = FlowField::from_matrix(shear_matrix(), 2);
  Vec z(0.2, 0.5);
  Vec x = flow_point(eta, 3.0, z);
  CHECK(x[0] == doctest::Approx(0.2 + 3.0 * 0.5).epsilon(1e-12));
  CHECK(x[1] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(flow_jacobian(eta, 5.0) == doctest::Approx(1.0));
}

TEST_CASE("flow maps of odd fields are odd") {
  SplitMix64 rng(3);
  for (const char* which : {"matrix", "swirl"}) {
    FlowField eta = which == std::string("matrix")
                        ? FlowField::from_matrix(shear_matrix(), 2)
                        : FlowField::catalog("swirl");
    CHECK(eta.odd_residual() < 1e-10);
    for (int i = 0; i < 20; ++i) {
      Vec z(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
      const double t = 10.0 * rng.uniform();
      Vec a = flow_point(eta, t, z);
      Vec b = flow_point(eta, t, -z);
      CHECK(norm(a + b) < 1e-8);
    }
  }
}

TEST_CASE("jacobians from constant divergence") {
  Mat id2 = Mat::identity(2);
  FlowField expand = FlowField::from_matrix(id2, 2);
  CHECK(expand.divergence == doctest::Approx(2.0));
  CHECK(flow_jacobian(expand, 1.0) == doctest::Approx(std::exp(2.0)));
  CHECK(flow_jacobian_numeric(expand, 1.0, Vec(0.2, -0.1)) ==
        doctest::Approx(std::exp(2.0)).epsilon(1e-4));

  Mat hyper;
  hyper(0, 0) = 1.0;
  hyper(1, 1) = -1.0;
  FlowField stretch = FlowField::from_matrix(hyper, 2);
  CHECK(flow_jacobian(stretch, 2.0) == doctest::Approx(1.0));
  SplitMix64 rng(17);
  for (int i = 0; i < 10; ++i) {
    Vec z(rng.uniform() - 0.5, rng.uniform() - 0.5);
    CHECK(flow_jacobian_numeric(stretch, 1.0, z) == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("composition and round trip against the matrix exponential") {
  Mat hyper;
  hyper(0, 0) = 0.4;
  hyper(1, 0) = 0.3;
  hyper(1, 1) = -0.4;
  FlowField eta = FlowField::from_matrix(hyper, 2);
  SplitMix64 rng(29);
  for (int i = 0; i < 10; ++i) {
    Vec z(rng.uniform() - 0.5, rng.uniform() - 0.5);
    const double s = 5.0 * rng.uniform(), t = 5.0 * rng.uniform();
    Vec joined = flow_point(eta, s, flow_point(eta, t, z));
    Vec direct = mul(matrix_exponential((s + t) * hyper, 2), z);
    CHECK(norm(joined - direct) < 1e-6);
    Vec back = flow_point(eta, -t, flow_point(eta, t, z));
    CHECK(norm(back - z) < 1e-6);
  }
}

TEST_CASE("swirl preserves radius and has constant zero divergence") {
  FlowField swirl = FlowField::catalog("swirl");
  CHECK(swirl.divergence_residual() < 1e-6);
  Vec z(0.6, -0.2);
  Vec x = flow_point(swirl, 7.0, z);
  CHECK(norm(x) == doctest::Approx(norm(z)).epsilon(1e-9));
}

TEST_CASE("flow-averaged kernel with identity flow equals the base") {
  Kernel theta = make_bump(BumpKind::standard_radial, 2);
  FlowField zero = FlowField::from_matrix(Mat(), 2);
  zero.lipschitz = 1.0;
  Kernel rho = flow_averaged_kernel(theta, zero, 3.0);
  SplitMix64 rng(31);
  for (int i = 0; i < 40; ++i) {
    Vec z(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
    CHECK(rho.eval(z) == doctest::Approx(theta.eval(z)).epsilon(1e-12));
  }
}

TEST_CASE("measure preservation: flow-averaged mass stays 1 for T <= 10") {
  Kernel theta = make_bump(BumpKind::standard_radial, 2);
  FlowField eta = FlowField::from_matrix(shear_matrix(), 2);
  for (double T : {1.0, 5.0, 10.0}) {
    Kernel rho = flow_averaged_kernel(theta, eta, T);
    CHECK(std::abs(rho.mass - 1.0) < 1e-3);
    // measured mass over the support box
    Vec lo = -1.0 * rho.support_box, hi = rho.support_box;
    const int n1 = std::min(2048, static_cast<int>(std::ceil(2.0 * rho.support_box[0] / 0.02)));
    QuadResult m = box_integrate(2, lo, hi, {n1, 128, 1},
                                 [&](const Vec& z) { return rho.eval(z); });
    CHECK(m.value == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("divergence case: a/(e^aT - 1) normalization keeps unit mass") {
  Kernel theta = make_bump(BumpKind::standard_radial, 2);
  FlowField expand = FlowField::from_matrix(Mat::identity(2), 2);
  Kernel rho = flow_averaged_kernel(theta, expand, 2.0);
  CHECK(std::abs(rho.mass - 1.0) < 1e-3);
  Vec lo = -1.0 * rho.support_box, hi = rho.support_box;
  QuadResult m = box_integrate(2, lo, hi, {512, 512, 1},
                               [&](const Vec& z) { return rho.eval(z); });
  CHECK(m.value == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("flow-averaged gradient is consistent with its own evaluation") {
  Kernel theta = make_bump(BumpKind::standard_radial, 2);
  FlowField eta = FlowField::from_matrix(shear_matrix(), 2);
  Kernel rho = flow_averaged_kernel(theta, eta, 2.0);
  SplitMix64 rng(37);
  double worst = 0.0, scale = 0.0;
  for (int i = 0; i < 25; ++i) {
    Vec z(1.2 * (2.0 * rng.uniform() - 1.0), 0.9 * (2.0 * rng.uniform() - 1.0));
    Vec g = rho.grad(z);
    const double h = 1e-4;  // wider than the internal step
    for (int d = 0; d < 2; ++d) {
      Vec zp = z, zm = z;
      zp[d] += h;
      zm[d] -= h;
      const double fd = (rho.eval(zp) - rho.eval(zm)) / (2.0 * h);
      worst = std::max(worst, std::abs(g[d] - fd));
      scale = std::max(scale, std::abs(fd));
    }
  }
  CHECK(worst <= 1e-3 * std::max(scale, 1.0));
}

TEST_CASE("nonlinear flow averaging: swirl keeps evenness and mass") {
  Kernel theta = make_bump(BumpKind::standard_radial, 2);
  FlowField swirl = FlowField::catalog("swirl");
  Kernel rho = flow_averaged_kernel(theta, swirl, 2.0);
  CHECK(rho.support_radius == doctest::Approx(1.0));
  SplitMix64 rng(41);
  for (int i = 0; i < 10; ++i) {
    Vec z(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
    CHECK(rho.eval(z) == doctest::Approx(rho.eval(-z)).epsilon(1e-12));
  }
  CHECK(std::abs(rho.mass - 1.0) < 1e-3);
}

TEST_CASE("flow descriptor round trip") {
  FlowField eta = FlowField::from_matrix(shear_matrix(), 2);
  FlowField back = FlowField::from_json(eta.descriptor);
  CHECK(back.is_matrix);
  CHECK(back.matrix(0, 1) == doctest::Approx(1.0));
  FlowField swirl = FlowField::from_json(FlowField::catalog("swirl").descriptor);
  CHECK(swirl.id == "swirl");
  CHECK_THROWS_AS(FlowField::catalog("vortex_street"), Error);
}
