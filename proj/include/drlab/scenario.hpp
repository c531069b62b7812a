#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace drlab {

// Declarative experiment: a field, kernels, schedules and a pipeline.
struct Scenario {
  std::string id;
  std::string pipeline;  // flux | directional | optimize | boundary | conserve | all
  nlohmann::json field_spec;
  std::vector<nlohmann::json> kernel_specs;
  std::vector<double> eps;
  std::vector<double> horizons;
  nlohmann::json test_function_spec;  // {center, radius, order}, optional
  nlohmann::json domain_spec;         // optional boundary-domain override
  bool deterministic = false;
  int workers = 0;  // 0 = hardware default
  std::string out_dir = "out";
  std::string base_dir;  // directory of the scenario file, for relative paths
};

Scenario parse_scenario(const std::string& path);
Scenario scenario_from_json(const nlohmann::json& j, const std::string& base_dir = ".");

// Runs the pipelines and writes {out}/{id}/report.json plus one CSV per
// table. Returns 0 on success, 2 on a mathematically meaningful refusal,
// 1 on any other error.
int run_scenario(const Scenario& s, std::string* message = nullptr);

std::string catalog_text();

}  // namespace drlab
