#include "drlab/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "drlab/boundary.hpp"
#include "drlab/fields.hpp"
#include "drlab/flux.hpp"
#include "drlab/kernels.hpp"
#include "drlab/optimize.hpp"
#include "drlab/reports.hpp"

namespace drlab {

namespace {

const int kSchemaVersion = 1;

void check_known_keys(const nlohmann::json& j, const std::vector<std::string>& known,
                      const std::string& where) {
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end())
      fail(Errc::parse, "unknown key '" + item.key() + "' in " + where);
  }
}

VelocityField build_field(const Scenario& s) {
  const auto& f = s.field_spec;
  if (f.contains("catalog")) {
    return catalog_field(f.at("catalog").get<std::string>(), f.value("params", nlohmann::json::object()));
  }
  if (f.contains("grid")) {
    std::string path = f.at("grid").get<std::string>();
    if (!path.empty() && path[0] != '/') path = s.base_dir + "/" + path;
    return field_from_grid_file(path);
  }
  fail(Errc::parse, "field spec needs 'catalog' or 'grid'");
}

std::vector<Kernel> build_kernels(const Scenario& s, int dim) {
  std::vector<Kernel> ks;
  for (const auto& spec : s.kernel_specs) ks.push_back(kernel_from_json(spec));
  if (ks.empty()) ks.push_back(make_bump(BumpKind::standard_radial, dim));
  for (const auto& k : ks) {
    if (k.dim != dim) fail(Errc::parameter, "kernel dimension does not match the field");
  }
  return ks;
}

TestFunction build_phi(const Scenario& s, const VelocityField& u) {
  if (!s.test_function_spec.is_null() && !s.test_function_spec.empty()) {
    const auto& t = s.test_function_spec;
    check_known_keys(t, {"center", "radius", "order"}, "test_function");
    Vec c;
    const auto& cj = t.at("center");
    for (std::size_t k = 0; k < cj.size() && k < 3; ++k) c[static_cast<int>(k)] = cj[k].get<double>();
    return TestFunction::make(u.domain, c, t.at("radius").get<double>(), t.value("order", 3));
  }
  if (u.domain.kind() == DomainKind::polygon)
    return TestFunction::make(u.domain, Vec(0.5, 0.5), 0.35);
  Vec c = u.domain.origin();
  for (int k = 0; k < u.dim; ++k) c[k] += u.domain.side() / 2.0;
  if (u.piecewise_constant) c = Vec(0.0, 0.0, 0.0);  // straddle the catalog jump sets
  return TestFunction::make(u.domain, c, u.domain.side() / 4.0);
}

Region default_region(const VelocityField& u) {
  Region r;
  if (u.domain.kind() == DomainKind::box) {
    Vec c = u.domain.origin();
    for (int k = 0; k < u.dim; ++k) c[k] += u.domain.side() / 2.0;
    if (u.piecewise_constant) c = Vec(0.0, 0.0, 0.0);
    for (int k = 0; k < u.dim; ++k) {
      r.lo[k] = c[k] - u.domain.side() / 4.0;
      r.hi[k] = c[k] + u.domain.side() / 4.0;
    }
  } else {
    r.lo = Vec(0.3, 0.3);
    r.hi = Vec(0.7, 0.7);
  }
  return r;
}

Domain build_boundary_domain(const Scenario& s, const VelocityField& u) {
  if (!s.domain_spec.is_null() && !s.domain_spec.empty()) {
    const auto& d = s.domain_spec;
    check_known_keys(d, {"polygon", "unit_square", "l_shape"}, "domain");
    if (d.value("unit_square", false)) return Domain::unit_square();
    if (d.value("l_shape", false)) return Domain::l_shape();
    if (d.contains("polygon")) {
      std::vector<Vec> verts;
      for (const auto& v : d.at("polygon"))
        verts.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
      return Domain::polygon(std::move(verts));
    }
  }
  return u.domain;
}

}  // namespace

Scenario scenario_from_json(const nlohmann::json& j, const std::string& base_dir) {
  check_known_keys(j, {"id", "pipeline", "field", "kernels", "eps", "T", "test_function",
                       "domain", "deterministic", "workers", "out_dir"},
                   "scenario");
  Scenario s;
  s.base_dir = base_dir;
  s.id = j.value("id", "scenario");
  s.pipeline = j.value("pipeline", "flux");
  static const std::vector<std::string> pipes{"flux", "directional", "optimize",
                                              "boundary", "conserve", "all"};
  if (std::find(pipes.begin(), pipes.end(), s.pipeline) == pipes.end())
    fail(Errc::parse, "unknown pipeline '" + s.pipeline + "'");
  if (!j.contains("field")) fail(Errc::parse, "scenario needs a 'field'");
  s.field_spec = j.at("field");
  check_known_keys(s.field_spec, {"catalog", "params", "grid"}, "field");
  if (j.contains("kernels")) {
    for (const auto& k : j.at("kernels")) s.kernel_specs.push_back(k);
  }
  s.eps = j.value("eps", std::vector<double>{0.2, 0.1, 0.05, 0.025});
  if (s.eps.empty()) fail(Errc::parse, "eps schedule must be nonempty");
  for (std::size_t i = 1; i < s.eps.size(); ++i)
    if (!(s.eps[i] < s.eps[i - 1]))
      fail(Errc::parse, "eps schedule must be strictly decreasing");
  for (double e : s.eps)
    if (!(e > 0.0)) fail(Errc::parse, "eps values must be positive");
  s.horizons = j.value("T", std::vector<double>{1, 2, 5, 10, 20, 50});
  if (s.horizons.empty()) fail(Errc::parse, "T schedule must be nonempty");
  for (std::size_t i = 1; i < s.horizons.size(); ++i)
    if (!(s.horizons[i] > s.horizons[i - 1]))
      fail(Errc::parse, "T schedule must be strictly increasing");
  if (j.contains("test_function")) s.test_function_spec = j.at("test_function");
  if (j.contains("domain")) s.domain_spec = j.at("domain");
  s.deterministic = j.value("deterministic", false);
  s.workers = j.value("workers", 0);
  s.out_dir = j.value("out_dir", std::string("out"));

  // referenced files must exist at parse time
  if (s.field_spec.contains("grid")) {
    std::string path = s.field_spec.at("grid").get<std::string>();
    if (!path.empty() && path[0] != '/') path = base_dir + "/" + path;
    if (!std::filesystem::exists(path)) fail(Errc::io, "grid file not found: " + path);
  }
  return s;
}

Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open scenario file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(Errc::parse, std::string("scenario JSON malformed: ") + e.what());
  }
  std::string base = std::filesystem::path(path).parent_path().string();
  if (base.empty()) base = ".";
  return scenario_from_json(j, base);
}

namespace {

nlohmann::json run_flux_pipeline(const Scenario& s, const VelocityField& u,
                                 const std::vector<Kernel>& kernels, const TestFunction& phi,
                                 const std::string& dir) {
  nlohmann::json out = nlohmann::json::array();
  CsvTable t;
  t.columns = {"kernel",          "eps [1]",
               "signed_total [u^3 L^(d-1)]", "signed_total_norm [per max|u|^3]",
               "absolute_total [u^3 L^(d-1)]", "absolute_total_norm [per max|u|^3]",
               "pairing [u^3 L^(d-1)]",      "cauchy_residual [u^3 L^(d-1)]"};
  const double unorm = std::max(u.max_abs * u.max_abs * u.max_abs, 1e-300);
  Region region = default_region(u);
  for (const Kernel& k : kernels) {
    FluxReport rep = flux_convergence(u, k, s.eps, region, &phi);
    for (std::size_t i = 0; i < rep.eps.size(); ++i) {
      t.add_row_mixed({k.id, format_double(rep.eps[i]), format_double(rep.signed_total[i]),
                       format_double(rep.signed_total[i] / unorm),
                       format_double(rep.absolute_total[i]),
                       format_double(rep.absolute_total[i] / unorm),
                       format_double(rep.pairing[i]),
                       i + 1 < rep.eps.size() ? format_double(rep.cauchy_residual[i]) : "" });
    }
    out.push_back({{"kernel", k.id},
                   {"extrapolated", rep.extrapolated},
                   {"extrapolated_abs", rep.extrapolated_abs},
                   {"cauchy", rep.cauchy}});
  }
  t.write(dir + "/flux_convergence.csv");
  return out;
}

nlohmann::json run_directional_pipeline(const Scenario& s, const VelocityField& u,
                                        const std::vector<Kernel>& kernels,
                                        const TestFunction& phi, const std::string& dir) {
  const double eps = s.eps.back();
  DirectionalFluxTable tab = directional_flux(u, eps, phi);
  CsvTable t;
  t.columns = {"z1 [1]", "z2 [1]", "V1 [u^3 L^(d-1)]", "V2 [u^3 L^(d-1)]",
               "radius_index [1]", "angle_index [1]"};
  for (std::size_t i = 0; i < tab.z_nodes.size(); ++i) {
    t.add_row({tab.z_nodes[i][0], tab.z_nodes[i][1], tab.values[i][0], tab.values[i][1],
               static_cast<double>(tab.radius_index[i]), static_cast<double>(tab.angle_index[i])});
  }
  t.write(dir + "/directional_flux.csv");
  nlohmann::json out = {{"eps", eps},
                        {"odd_residual", tab.odd_residual},
                        {"quad_tolerance", tab.quad_tolerance}};
  nlohmann::json recon = nlohmann::json::array();
  for (const Kernel& k : kernels) {
    recon.push_back({{"kernel", k.id},
                     {"reconstructed", reconstruct_pairing(tab, k)},
                     {"direct", d_eps_pairing(u, k, eps, phi)}});
  }
  out["reconstruction"] = recon;
  return out;
}

nlohmann::json run_optimize_pipeline(const Scenario& s, const VelocityField& u,
                                     const std::vector<Kernel>& kernels,
                                     const TestFunction& phi, const std::string& dir) {
  CertificateReport rep = conservation_report(u, phi, kernels.front(), s.horizons, s.eps);
  CsvTable t;
  t.columns = {"T [1]", "certificate [u^3 L^(d-1)]", "bound_2_over_T [u^3 L^(d-1)]",
               "objective_error [u^3 L^(d-1)]", "kernel_mass [1]", "rescale_factor [1]",
               "flux_eps [1]", "flux_pairing_abs [u^3 L^(d-1)]"};
  const std::size_t rows = std::max(rep.rows.size(), rep.eps.size());
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<std::string> cells;
    if (i < rep.rows.size()) {
      const auto& r = rep.rows[i];
      cells = {format_double(r.T), format_double(r.value), format_double(r.bound),
               format_double(r.objective_error), format_double(r.kernel_mass),
               format_double(r.rescale_factor)};
    } else {
      cells = {"", "", "", "", "", ""};
    }
    if (i < rep.eps.size()) {
      cells.push_back(format_double(rep.eps[i]));
      cells.push_back(format_double(rep.flux_pairing_abs[i]));
    } else {
      cells.push_back("");
      cells.push_back("");
    }
    t.add_row_mixed(cells);
  }
  t.write(dir + "/certificate.csv");
  nlohmann::json out = {{"constant", rep.constant},
                        {"cluster_count", rep.clusters.size()},
                        {"cluster_tolerance", rep.cluster_tolerance},
                        {"winning_kernel", rep.winning_kernel}};
  if (!rep.rows.empty()) {
    out["certificate_first"] = rep.rows.front().value;
    out["certificate_last"] = rep.rows.back().value;
  }
  return out;
}

nlohmann::json run_boundary_pipeline(const Scenario& s, const VelocityField& u,
                                     const std::string& dir) {
  Domain domain = build_boundary_domain(s, u);
  if (!domain.has_boundary())
    fail(Errc::precondition, "boundary pipeline needs a domain with boundary");
  CsvTable bt;
  bt.columns = {"eps [1]", "flux_wedge [u L^(d-1)]", "flux_annular [u L^(d-1)]"};
  nlohmann::json fluxes = nlohmann::json::array();
  for (double e : s.eps) {
    const double fw = boundary_flux(u, domain, e, CutoffKind::wedge);
    const double fa = boundary_flux(u, domain, e, CutoffKind::annular);
    bt.add_row({e, fw, fa});
    fluxes.push_back({{"eps", e}, {"wedge", fw}, {"annular", fa}});
  }
  bt.write(dir + "/boundary_flux.csv");

  std::vector<Vec> midpoints;
  for (int e = 0; e < domain.edge_count(); ++e) {
    midpoints.push_back(0.5 * (domain.edge_start(e) + domain.edge_end(e)));
  }
  TraceReport tr = normal_trace(u, domain, midpoints);
  CsvTable tt;
  tt.columns = {"point_id [1]", "x [L]", "y [L]", "r [L]", "avg_abs [u]", "avg_signed [u]"};
  for (const auto& p : tr.points) {
    for (std::size_t i = 0; i < p.radii.size(); ++i) {
      tt.add_row({static_cast<double>(p.id), p.x[0], p.x[1], p.radii[i], p.avg_abs[i],
                  p.avg_signed[i]});
    }
  }
  tt.write(dir + "/trace.csv");

  const double mink = minkowski_content(domain, full_perimeter(domain), 1e-3);
  return {{"boundary_flux", fluxes},
          {"perimeter", domain.perimeter()},
          {"minkowski_perimeter", mink},
          {"trace_points", tr.points.size()}};
}

nlohmann::json run_conserve_pipeline(const Scenario& s, const VelocityField& u,
                                     const std::vector<Kernel>& kernels,
                                     const TestFunction& phi, const std::string& dir) {
  EnergyConservationReport rep =
      energy_conservation_check(u, s.eps, s.horizons, &phi, &kernels.front());
  CsvTable t;
  t.columns = {"T [1]", "certificate [u^3 L^(d-1)]", "bound_2_over_T [u^3 L^(d-1)]",
               "flux_eps [1]", "flux_pairing_abs [u^3 L^(d-1)]"};
  const std::size_t rows = std::max(rep.interior.rows.size(), rep.interior.eps.size());
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<std::string> cells;
    if (i < rep.interior.rows.size()) {
      cells = {format_double(rep.interior.rows[i].T), format_double(rep.interior.rows[i].value),
               format_double(rep.interior.rows[i].bound)};
    } else {
      cells = {"", "", ""};
    }
    if (i < rep.interior.eps.size()) {
      cells.push_back(format_double(rep.interior.eps[i]));
      cells.push_back(format_double(rep.interior.flux_pairing_abs[i]));
    } else {
      cells.push_back("");
      cells.push_back("");
    }
    t.add_row_mixed(cells);
  }
  t.write(dir + "/certificate.csv");

  if (rep.boundary_checked) {
    CsvTable bt;
    bt.columns = {"eps [1]", "flux_wedge [u L^(d-1)]"};
    for (std::size_t i = 0; i < rep.eps.size(); ++i)
      bt.add_row({rep.eps[i], rep.boundary_flux_values[i]});
    bt.write(dir + "/boundary_flux.csv");
  }

  return {{"kinetic_energy", rep.kinetic},
          {"interior_ratio", rep.interior_ratio},
          {"boundary_checked", rep.boundary_checked},
          {"boundary_ratio", rep.boundary_ratio},
          {"verdict", rep.verdict}};
}

}  // namespace

int run_scenario(const Scenario& s, std::string* message) {
  try {
    set_worker_count(s.deterministic && s.workers == 0 ? 1 : s.workers);
    const std::string dir = s.out_dir + "/" + s.id;
    ensure_directory(dir);

    VelocityField u = build_field(s);
    std::vector<Kernel> kernels = build_kernels(s, u.dim);
    TestFunction phi = build_phi(s, u);

    nlohmann::json report;
    report["schema_version"] = kSchemaVersion;
    report["scenario"] = s.id;
    report["pipeline"] = s.pipeline;
    report["deterministic"] = s.deterministic;
    report["field"] = u.descriptor;
    report["field_class"] = to_string(u.declared_class);
    report["divergence_free"] = u.declared_divfree;
    report["max_abs"] = u.max_abs;
    nlohmann::json kj = nlohmann::json::array();
    for (const auto& k : kernels) kj.push_back(k.descriptor);
    report["kernels"] = kj;
    report["eps"] = s.eps;
    report["T"] = s.horizons;
    report["test_function"] = phi.descriptor;
    nlohmann::json results;

    if (s.pipeline == "flux" || s.pipeline == "all")
      results["flux"] = run_flux_pipeline(s, u, kernels, phi, dir);
    if (s.pipeline == "directional" || s.pipeline == "all")
      results["directional"] = run_directional_pipeline(s, u, kernels, phi, dir);
    if (s.pipeline == "optimize" || s.pipeline == "all")
      results["optimize"] = run_optimize_pipeline(s, u, kernels, phi, dir);
    if (s.pipeline == "boundary" ||
        (s.pipeline == "all" && u.domain.kind() == DomainKind::polygon))
      results["boundary"] = run_boundary_pipeline(s, u, dir);
    if (s.pipeline == "conserve" || s.pipeline == "all")
      results["conserve"] = run_conserve_pipeline(s, u, kernels, phi, dir);

    report["results"] = results;
    std::ofstream out(dir + "/report.json");
    if (!out) fail(Errc::io, "cannot write report.json");
    out << report.dump(2) << "\n";
    if (message) *message = "ok";
    return 0;
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code() == Errc::refusal ? 2 : 1;
  } catch (const std::exception& e) {
    if (message) *message = e.what();
    return 1;
  }
}

std::string catalog_text() {
  std::ostringstream os;
  os << "catalog fields:\n";
  os << "  shear_layer    planar tangential jump u=(sign(y),0); divergence-free, BV\n";
  os << "  burgers_shock  1-d compressive jump u=-sign(x); BV, not divergence-free\n";
  os << "  poly_stream    polynomial stream function on the unit square; tangent, smooth\n";
  os << "  taylor_green   u=(sin x cos y, -cos x sin y) on the 2pi-periodic box\n";
  os << "  linear         u = M x (params: {\"matrix\": [[...]]})\n";
  os << "  constant       u = c (params: {\"value\": [...]})\n";
  os << "\nkernels (JSON descriptors):\n";
  os << "  {\"kind\": \"standard_radial\", \"d\": 2}\n";
  os << "  {\"kind\": \"polynomial_radial\", \"k\": 2, \"d\": 2}\n";
  os << "  {\"kind\": \"indicator_smoothed\", \"delta\": 0.3, \"d\": 2}\n";
  os << "  {\"kind\": \"tensor\", \"widths\": [0.1, 0.99], \"d\": 2}\n";
  os << "  {\"kind\": \"rescaled\", \"R\": 2.0, \"inner\": {...}}\n";
  os << "  {\"kind\": \"flow_averaged\", \"theta\": {...}, \"flow\": {\"flow\": \"matrix\", "
        "\"matrix\": [[0,1],[0,0]], \"d\": 2}, \"T\": 10}\n";
  os << "\nscenario schema (JSON object):\n";
  os << "  id            string  output folder name\n";
  os << "  pipeline      string  flux | directional | optimize | boundary | conserve | all\n";
  os << "  field         object  {\"catalog\": name, \"params\": {...}} or {\"grid\": path}\n";
  os << "  kernels       array   kernel descriptors (default: standard_radial)\n";
  os << "  eps           array   strictly decreasing mollification scales\n";
  os << "  T             array   strictly increasing flow-averaging horizons\n";
  os << "  test_function object  {\"center\": [...], \"radius\": r, \"order\": k}\n";
  os << "  domain        object  {\"unit_square\": true} | {\"l_shape\": true} | {\"polygon\": [...]}\n";
  os << "  deterministic bool    single-worker bit-stable reductions\n";
  os << "  workers       int     worker pool size (0 = hardware)\n";
  os << "  out_dir       string  output directory (default \"out\")\n";
  return os.str();
}

}  // namespace drlab
