#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "drlab/common.hpp"
#include "drlab/reports.hpp"
#include "drlab/scenario.hpp"

using namespace drlab;

namespace {

std::string test_dir() {
  const std::string dir = std::filesystem::temp_directory_path() / "drlab_scenario";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string write_json(const std::string& name, const nlohmann::json& j) {
  const std::string path = test_dir() + "/" + name;
  std::ofstream out(path);
  out << j.dump(2);
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("minimal valid scenario parses") {
  Scenario s = scenario_from_json({{"field", {{"catalog", "shear_layer"}}},
                                   {"pipeline", "flux"},
                                   {"eps", {0.2, 0.1, 0.05, 0.025}}});
  CHECK(s.pipeline == "flux");
  CHECK(s.eps.size() == 4);
  CHECK(s.horizons.size() == 6);  // default schedule
}

TEST_CASE("scenario validation errors") {
  // increasing eps
  CHECK_THROWS_AS(scenario_from_json({{"field", {{"catalog", "shear_layer"}}},
                                      {"eps", {0.1, 0.2}}}),
                  Error);
  // unknown top-level key
  CHECK_THROWS_AS(scenario_from_json({{"field", {{"catalog", "shear_layer"}}},
                                      {"flavor", "mint"}}),
                  Error);
  // unknown pipeline
  CHECK_THROWS_AS(scenario_from_json({{"field", {{"catalog", "shear_layer"}}},
                                      {"pipeline", "teleport"}}),
                  Error);
  // missing field
  CHECK_THROWS_AS(scenario_from_json({{"pipeline", "flux"}}), Error);
  // missing grid file, named in the message
  try {
    scenario_from_json({{"field", {{"grid", "no_such_grid.json"}}}}, test_dir());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::io);
    CHECK(std::string(e.what()).find("no_such_grid.json") != std::string::npos);
  }
}

TEST_CASE("malformed scenario JSON reports a parse error") {
  const std::string path = test_dir() + "/broken.json";
  std::ofstream out(path);
  out << "{\"field\": ";
  out.close();
  try {
    parse_scenario(path);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::parse);
  }
}

TEST_CASE("flux pipeline writes its artifacts") {
  const std::string path = write_json(
      "burgers_flux.json",
      {{"id", "burgers_flux"},
       {"pipeline", "flux"},
       {"field", {{"catalog", "burgers_shock"}}},
       {"kernels", {{{"kind", "standard_radial"}, {"d", 1}}}},
       {"eps", {0.2, 0.1, 0.05, 0.025}},
       {"deterministic", true},
       {"out_dir", test_dir() + "/out"}});
  Scenario s = parse_scenario(path);
  std::string msg;
  CHECK(run_scenario(s, &msg) == 0);
  const std::string base = test_dir() + "/out/burgers_flux";
  CHECK(std::filesystem::exists(base + "/report.json"));
  CHECK(std::filesystem::exists(base + "/flux_convergence.csv"));

  nlohmann::json rep = nlohmann::json::parse(slurp(base + "/report.json"));
  CHECK(rep.at("schema_version").get<int>() == 1);
  CHECK(rep.at("pipeline").get<std::string>() == "flux");
  CHECK(rep.at("results").contains("flux"));
  const double extrap = rep["results"]["flux"][0]["extrapolated"].get<double>();
  CHECK(extrap == doctest::Approx(2.0).epsilon(1e-2));
}

TEST_CASE("conserve pipeline: certificate CSV carries the T schedule") {
  const std::string path = write_json(
      "shear_conserve.json",
      {{"id", "shear_conserve"},
       {"pipeline", "conserve"},
       {"field", {{"catalog", "shear_layer"}}},
       {"kernels", {{{"kind", "tensor"}, {"widths", {0.1, 0.99}}, {"d", 2}}}},
       {"eps", {0.1, 0.05}},
       {"T", {1.0, 2.0}},
       {"test_function", {{"center", {0.0, 0.0}}, {"radius", 0.5}, {"order", 3}}},
       {"deterministic", true},
       {"out_dir", test_dir() + "/out"}});
  std::string msg;
  CHECK(run_scenario(parse_scenario(path), &msg) == 0);
  CsvTable t = CsvTable::read(test_dir() + "/out/shear_conserve/certificate.csv");
  REQUIRE(t.rows.size() >= 2);
  CHECK(t.rows[0][0] == "1");
  CHECK(t.rows[1][0] == "2");
}

TEST_CASE("conserve pipeline refuses the Burgers shock with exit code 2") {
  const std::string path = write_json(
      "burgers_conserve.json",
      {{"id", "burgers_conserve"},
       {"pipeline", "conserve"},
       {"field", {{"catalog", "burgers_shock"}}},
       {"eps", {0.1, 0.05}},
       {"T", {1.0, 2.0}},
       {"out_dir", test_dir() + "/out"}});
  std::string msg;
  CHECK(run_scenario(parse_scenario(path), &msg) == 2);
  CHECK(msg.find("trace") != std::string::npos);
}

TEST_CASE("deterministic runs produce byte-identical CSVs") {
  auto scenario = nlohmann::json{
      {"id", "det"},
      {"pipeline", "directional"},
      {"field", {{"catalog", "shear_layer"}}},
      {"eps", {0.1, 0.05}},
      {"test_function", {{"center", {0.0, 0.0}}, {"radius", 0.5}, {"order", 3}}},
      {"deterministic", true}};
  scenario["out_dir"] = test_dir() + "/out_a";
  std::string msg;
  CHECK(run_scenario(scenario_from_json(scenario), &msg) == 0);
  scenario["out_dir"] = test_dir() + "/out_b";
  CHECK(run_scenario(scenario_from_json(scenario), &msg) == 0);
  CHECK(slurp(test_dir() + "/out_a/det/directional_flux.csv") ==
        slurp(test_dir() + "/out_b/det/directional_flux.csv"));
  CHECK(slurp(test_dir() + "/out_a/det/report.json") ==
        slurp(test_dir() + "/out_b/det/report.json"));
}

TEST_CASE("CSV tables round trip exactly") {
  CsvTable t;
  t.columns = {"a [1]", "b [u]"};
  t.add_row({1.0 / 3.0, -2.5e-17});
  t.add_row({6.02214076e23, 0.1});
  const std::string path = test_dir() + "/round.csv";
  t.write(path);
  CsvTable back = CsvTable::read(path);
  CHECK(back == t);
  // and the parsed doubles reproduce the bits
  CHECK(std::stod(back.rows[0][0]) == 1.0 / 3.0);
  CHECK(std::stod(back.rows[1][0]) == 6.02214076e23);
}

TEST_CASE("report schema holds for every pipeline") {
  // cheap field keeps the full 'all' run fast
  auto scenario = nlohmann::json{
      {"id", "schema_all"},
      {"pipeline", "all"},
      {"field", {{"catalog", "poly_stream"}}},
      {"kernels", {{{"kind", "polynomial_radial"}, {"k", 3}, {"d", 2}}}},
      {"eps", {0.1, 0.05, 0.025, 0.0125}},
      {"T", {1.0, 2.0}},
      {"deterministic", true},
      {"out_dir", test_dir() + "/out"}};
  std::string msg;
  REQUIRE(run_scenario(scenario_from_json(scenario), &msg) == 0);
  nlohmann::json rep =
      nlohmann::json::parse(slurp(test_dir() + "/out/schema_all/report.json"));
  for (const char* key : {"schema_version", "scenario", "pipeline", "deterministic", "field",
                          "field_class", "divergence_free", "max_abs", "kernels", "eps", "T",
                          "test_function", "results"}) {
    CHECK(rep.contains(key));
  }
  const auto& res = rep.at("results");
  for (const char* key : {"flux", "directional", "optimize", "boundary", "conserve"}) {
    CHECK(res.contains(key));
  }
  CHECK(res["conserve"].contains("verdict"));
  CHECK(res["boundary"].contains("minkowski_perimeter"));
  for (const char* file : {"flux_convergence.csv", "directional_flux.csv", "certificate.csv",
                           "boundary_flux.csv", "trace.csv", "report.json"}) {
    CHECK(std::filesystem::exists(test_dir() + "/out/schema_all/" + std::string(file)));
  }
}

TEST_CASE("catalog text lists fields and schema") {
  const std::string text = catalog_text();
  CHECK(text.find("shear_layer") != std::string::npos);
  CHECK(text.find("burgers_shock") != std::string::npos);
  for (const char* key : {"id", "pipeline", "field", "kernels", "eps", "T", "test_function",
                          "domain", "deterministic", "workers", "out_dir"}) {
    CHECK(text.find(key) != std::string::npos);
  }
}
