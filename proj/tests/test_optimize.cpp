#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "drlab/optimize.hpp"

using namespace drlab;

namespace {

Mat shear_matrix() {
  Mat m;
  m(0, 1) = 1.0;
  return m;
}

}  // namespace

TEST_CASE("polar decomposition of the shear layer") {
  VelocityField shear = catalog_field("shear_layer");
  Region supp(Vec(-0.5, -0.5), Vec(0.5, 0.5));
  PolarField pf = polar_decompose(shear, supp);
  REQUIRE(!pf.atoms.empty());
  for (const auto& a : pf.atoms) {
    CHECK(std::abs(frobenius(a.polar) - 1.0) < 1e-8);
    CHECK(std::abs(a.trace_value) < 1e-12);
    // M = e1 x e2 up to sign
    CHECK(std::abs(std::abs(a.polar(0, 1)) - 1.0) < 1e-12);
  }
  CHECK(pf.divergence_free);
  CHECK(pf.total == doctest::Approx(2.0 * 1.0).epsilon(1e-9));  // jump 2 x chord 1
}

TEST_CASE("polar decomposition of the Burgers shock is compressible") {
  VelocityField burgers = catalog_field("burgers_shock");
  Region supp(Vec(-0.5), Vec(0.5));
  PolarField pf = polar_decompose(burgers, supp);
  REQUIRE(!pf.atoms.empty());
  CHECK(pf.atoms.front().polar(0, 0) == doctest::Approx(-1.0));
  CHECK(pf.atoms.front().trace_value == doctest::Approx(-1.0));
  CHECK(!pf.divergence_free);
}

TEST_CASE("polar decomposition of smooth fields follows the gradient") {
  VelocityField lin = catalog_field("linear", {{"matrix", {{0.0, 1.0}, {1.0, 0.0}}}});
  Region supp(Vec(-0.5, -0.5), Vec(0.5, 0.5));
  PolarField pf = polar_decompose(lin, supp);
  REQUIRE(!pf.atoms.empty());
  for (const auto& a : pf.atoms) {
    CHECK(a.polar(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
    CHECK(a.polar(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  }
  CHECK(pf.divergence_free);
}

TEST_CASE("objective basics") {
  Kernel rho = make_bump(BumpKind::standard_radial, 2);
  FlowField zero = FlowField::from_matrix(Mat(), 2);
  zero.lipschitz = 1.0;
  CHECK(objective(rho, zero).value == doctest::Approx(0.0).epsilon(1e-12));

  // eta = z: radial monotone kernels achieve exactly |div eta| = 2
  FlowField expand = FlowField::from_matrix(Mat::identity(2), 2);
  for (const Kernel& k : {make_bump(BumpKind::standard_radial, 2),
                          make_bump(BumpKind::polynomial_radial, 2, 2),
                          make_bump(BumpKind::polynomial_radial, 2, 4),
                          make_bump(BumpKind::indicator_smoothed, 2, 0.3),
                          make_bump(BumpKind::tensor, 2)}) {
    ObjectiveResult obj = objective(k, expand);
    CHECK(obj.value >= 2.0 - 1e-3);  // lower bound |a| * mass
    if (k.radial) CHECK(obj.value == doctest::Approx(2.0).epsilon(2e-3));
  }
}

TEST_CASE("flow-averaged objective obeys the 2/T bound") {
  Kernel theta = make_bump(BumpKind::standard_radial, 2);
  FlowField eta = FlowField::from_matrix(shear_matrix(), 2);
  double prev = 1e300;
  for (double T : {1.0, 2.0, 5.0}) {
    Kernel rho_t = flow_averaged_kernel(theta, eta, T);
    ObjectiveResult obj = objective(rho_t, eta);
    CHECK(obj.value <= 2.0 / T + 5.0 * obj.error_estimate);
    CHECK(obj.value <= prev + 2.0 * obj.error_estimate);  // nonincreasing in T
    prev = obj.value;
  }
}

TEST_CASE("nonlinear flow averaging also drives the objective down") {
  Kernel theta = make_bump(BumpKind::standard_radial, 2);
  FlowField swirl = FlowField::catalog("swirl");
  Kernel rho_t = flow_averaged_kernel(theta, swirl, 3.0);
  ObjectiveResult obj = objective(renormalized(rho_t), swirl);
  CHECK(obj.value <= 2.0 / 3.0 + 5.0 * obj.error_estimate + 1e-3);
}

TEST_CASE("divergence case: the objective converges to |a| from above") {
  Kernel theta = make_bump(BumpKind::standard_radial, 2);
  FlowField expand = FlowField::from_matrix(Mat::identity(2), 2);
  const double a = 2.0;
  for (double T : {1.0, 2.0}) {
    Kernel rho_t = flow_averaged_kernel(theta, expand, T);
    ObjectiveResult obj = objective(rho_t, expand);
    const double upper = a * (1.0 + std::exp(a * T)) / std::abs(std::exp(a * T) - 1.0);
    CHECK(obj.value >= a - 1e-3 - 5.0 * obj.error_estimate);
    CHECK(obj.value <= upper + 5.0 * obj.error_estimate + 5e-3);
  }
}

TEST_CASE("rescale invariance of the objective for 1-homogeneous flows") {
  FlowField eta = FlowField::from_matrix(shear_matrix(), 2);
  Kernel rho = make_bump(BumpKind::standard_radial, 2);
  RescaleInvarianceReport r1 = objective_rescale_invariance(rho, eta, 1.0);
  CHECK(r1.rel_difference < 1e-12);

  RescaleInvarianceReport r2 = objective_rescale_invariance(rho, eta, 2.0);
  CHECK(r2.pass);

  // flow-averaged kernel rescaled by its own support radius lands in K_W
  Kernel rho_t = flow_averaged_kernel(rho, eta, 2.0);
  Kernel in_ball = rescale_kernel(rho_t, rho_t.support_radius);
  CHECK(in_ball.cls == KernelClass::rescaled_unit_ball);
  CHECK(in_ball.support_radius <= 1.0 + 1e-12);
  RescaleInvarianceReport r3 = objective_rescale_invariance(rho_t, eta, rho_t.support_radius);
  CHECK(r3.pass);

  FlowField swirl = FlowField::catalog("swirl");
  CHECK_THROWS_AS(objective_rescale_invariance(rho, swirl, 2.0), Error);
}

TEST_CASE("certificate values") {
  Kernel rho = make_bump(BumpKind::standard_radial, 2);

  VelocityField c = catalog_field("constant", {{"value", {1.0, 1.0}}});
  TestFunction phic = TestFunction::make(c.domain, Vec(0, 0), 0.5, 3);
  CHECK(certificate(c, rho, phic).value == doctest::Approx(0.0));

  VelocityField shear = catalog_field("shear_layer");
  TestFunction phi = TestFunction::make(shear.domain, Vec(0, 0), 0.5, 3);
  CertificateValue cv = certificate(shear, rho, phi);
  CHECK(cv.value > 0.0);  // a fixed kernel cannot certify conservation
  CHECK(!cv.trace_flagged);

  VelocityField burgers = catalog_field("burgers_shock");
  TestFunction phib = TestFunction::make(burgers.domain, Vec(0.0), 0.5, 3);
  Kernel rho1 = make_bump(BumpKind::standard_radial, 1);
  CertificateValue cvb = certificate(burgers, rho1, phib);
  CHECK(cvb.trace_flagged);
  CHECK(cvb.max_abs_trace == doctest::Approx(1.0));
  CHECK(cvb.value > 0.0);  // bound still computed
}

TEST_CASE("conservation report on the shear layer decays like 2/T") {
  VelocityField shear = catalog_field("shear_layer");
  TestFunction phi = TestFunction::make(shear.domain, Vec(0, 0), 0.5, 3);
  Kernel theta = make_bump(BumpKind::tensor, 2, 0.0, Vec(0.1, 0.99));
  CertificateReport rep = conservation_report(shear, phi, theta, {1.0, 2.0, 5.0}, {0.1, 0.05});
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.clusters.size() == 1);
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    CHECK(rep.rows[i].value <= rep.rows[i].bound + 5.0 * rep.rows[i].objective_error);
    CHECK(std::abs(rep.rows[i].kernel_mass - 1.0) < 1e-3);
    if (i > 0)
      CHECK(rep.rows[i].value <=
            rep.rows[i - 1].value + 2.0 * (rep.rows[i].objective_error +
                                           rep.rows[i - 1].objective_error));
  }
  // flux comparison column: the shear layer has vanishing pairing
  for (double f : rep.flux_pairing_abs) CHECK(f < 1e-10);
  CHECK(!rep.winning_kernel.empty());
}

TEST_CASE("conservation report refuses compressible fields") {
  VelocityField burgers = catalog_field("burgers_shock");
  TestFunction phi = TestFunction::make(burgers.domain, Vec(0.0), 0.5, 3);
  Kernel theta = make_bump(BumpKind::standard_radial, 1);
  try {
    conservation_report(burgers, phi, theta, {1.0, 2.0});
    FAIL("expected a refusal");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::refusal);
    CHECK(std::string(e.what()).find("trace") != std::string::npos);
  }
}

TEST_CASE("conservation report on a trace-free linear field") {
  VelocityField lin = catalog_field("linear", {{"matrix", {{0.0, 1.0}, {0.0, 0.0}}}});
  TestFunction phi = TestFunction::make(lin.domain, Vec(0, 0), 0.5, 3);
  Kernel theta = make_bump(BumpKind::tensor, 2, 0.0, Vec(0.1, 0.99));
  CertificateReport rep = conservation_report(lin, phi, theta, {1.0, 5.0});
  CHECK(rep.clusters.size() == 1);
  // measured certificate within 3x of the 2/T scale
  for (const auto& row : rep.rows) {
    CHECK(row.value <= row.bound * 1.05 + 5.0 * row.objective_error);
    CHECK(row.value >= row.bound / 3.0);
  }
}
