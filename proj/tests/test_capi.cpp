#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "drlab.h"

namespace {

std::string test_dir() {
  const std::string dir = std::filesystem::temp_directory_path() / "drlab_capi";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("version and catalog text") {
  CHECK(drlab_abi_version() == DRLAB_ABI_VERSION);
  CHECK(std::strlen(drlab_version()) > 0);
  const char* text = drlab_catalog_text();
  CHECK(std::string(text).find("shear_layer") != std::string::npos);
}

TEST_CASE("field handles: create, evaluate, free") {
  drlab_field* f = nullptr;
  REQUIRE(drlab_field_catalog("shear_layer", nullptr, &f) == DRLAB_OK);
  REQUIRE(f != nullptr);
  CHECK(drlab_field_dim(f) == 2);
  CHECK(drlab_field_divergence_free(f) == 1);
  CHECK(drlab_field_max_abs(f) == 1.0);

  double x[2] = {0.3, -0.2};
  double out[2] = {0, 0};
  CHECK(drlab_field_eval(f, x, out) == DRLAB_OK);
  CHECK(out[0] == -1.0);
  CHECK(out[1] == 0.0);

  double xi[2] = {0.0, 0.3};
  double x2[2] = {0.0, -0.1};
  CHECK(drlab_field_increment(f, x2, xi, out) == DRLAB_OK);
  CHECK(out[0] == 2.0);
  drlab_field_free(f);
}

TEST_CASE("field errors surface as status codes with messages") {
  drlab_field* f = nullptr;
  CHECK(drlab_field_catalog("vortex_street", nullptr, &f) == DRLAB_ERR_PARAM);
  CHECK(f == nullptr);
  CHECK(std::string(drlab_last_error()).find("vortex_street") != std::string::npos);

  CHECK(drlab_field_catalog(nullptr, nullptr, &f) == DRLAB_ERR_PARAM);

  REQUIRE(drlab_field_catalog("poly_stream", nullptr, &f) == DRLAB_OK);
  double x[2] = {1.5, 0.5};
  double out[2];
  CHECK(drlab_field_eval(f, x, out) == DRLAB_ERR_DOMAIN);
  drlab_field_free(f);

  CHECK(drlab_field_from_grid_file((test_dir() + "/missing.json").c_str(), &f) == DRLAB_ERR_IO);
}

TEST_CASE("catalog params JSON") {
  drlab_field* f = nullptr;
  REQUIRE(drlab_field_catalog("constant", "{\"value\": [2.0, 0.0]}", &f) == DRLAB_OK);
  double ke = 0.0;
  CHECK(drlab_field_kinetic_energy(f, &ke) == DRLAB_OK);
  CHECK(ke == doctest::Approx(2.0 * 16.0).epsilon(1e-9));  // |c|^2/2 * side^2
  drlab_field_free(f);

  CHECK(drlab_field_catalog("constant", "not json", &f) == DRLAB_ERR_PARSE);
}

TEST_CASE("kernel handles and validation") {
  drlab_kernel* k = nullptr;
  REQUIRE(drlab_kernel_from_json("{\"kind\": \"standard_radial\", \"d\": 1}", &k) == DRLAB_OK);
  drlab_kernel_report rep{};
  CHECK(drlab_kernel_validate(k, &rep) == DRLAB_OK);
  CHECK(rep.usable == 1);
  CHECK(rep.support_ok == 1);
  double z = 0.0, v = 0.0;
  CHECK(drlab_kernel_eval(k, &z, &v) == DRLAB_OK);
  CHECK(v > 0.0);
  drlab_kernel_free(k);

  CHECK(drlab_kernel_from_json("{\"kind\": \"mystery\"}", &k) == DRLAB_ERR_PARSE);
}

TEST_CASE("total flux through the C surface") {
  drlab_field* f = nullptr;
  drlab_kernel* k = nullptr;
  REQUIRE(drlab_field_catalog("burgers_shock", nullptr, &f) == DRLAB_OK);
  REQUIRE(drlab_kernel_from_json("{\"kind\": \"standard_radial\", \"d\": 1}", &k) == DRLAB_OK);
  double lo = -1.0, hi = 1.0, s = 0.0, a = 0.0;
  CHECK(drlab_total_flux(f, k, 0.05, &lo, &hi, &s, &a) == DRLAB_OK);
  CHECK(s == doctest::Approx(2.0).epsilon(1e-2));
  CHECK(a >= std::abs(s) - 1e-12);
  drlab_kernel_free(k);
  drlab_field_free(f);
}

TEST_CASE("scenario validation and runs over the C surface") {
  const std::string good = test_dir() + "/good.json";
  {
    std::ofstream out(good);
    out << "{\"id\": \"capi_flux\", \"pipeline\": \"flux\", "
           "\"field\": {\"catalog\": \"burgers_shock\"}, "
           "\"kernels\": [{\"kind\": \"standard_radial\", \"d\": 1}], "
           "\"eps\": [0.2, 0.1, 0.05, 0.025], \"out_dir\": \""
        << test_dir() << "/out\"}";
  }
  CHECK(drlab_scenario_validate(good.c_str()) == DRLAB_OK);

  const std::string bad = test_dir() + "/bad.json";
  {
    std::ofstream out(bad);
    out << "{\"pipeline\": \"flux\", \"eps\": [0.1, 0.2]}";
  }
  CHECK(drlab_scenario_validate(bad.c_str()) != DRLAB_OK);

  drlab_run_options opts{};
  opts.deterministic = 1;
  int code = -1;
  CHECK(drlab_scenario_run(good.c_str(), &opts, &code) == DRLAB_OK);
  CHECK(code == 0);
  CHECK(std::filesystem::exists(test_dir() + "/out/capi_flux/report.json"));

  const std::string refused = test_dir() + "/refused.json";
  {
    std::ofstream out(refused);
    out << "{\"id\": \"capi_refused\", \"pipeline\": \"conserve\", "
           "\"field\": {\"catalog\": \"burgers_shock\"}, \"eps\": [0.1, 0.05], "
           "\"T\": [1, 2], \"out_dir\": \""
        << test_dir() << "/out\"}";
  }
  CHECK(drlab_scenario_run(refused.c_str(), &opts, &code) == DRLAB_OK);
  CHECK(code == 2);
  CHECK(std::string(drlab_last_error()).find("trace") != std::string::npos);
}
