#include "drlab/fields.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "drlab/quadrature.hpp"

namespace drlab {

namespace {

constexpr double kGridDivFactor = 1e-6;

// sign with sign(0) := +1, so jump sets have a deterministic pointwise value
double sign01(double t) { return t >= 0.0 ? 1.0 : -1.0; }

double field_sup_numeric(const Domain& dom, const std::function<Vec(const Vec&)>& f, int dim) {
  double best = 0.0;
  const int n = dim == 1 ? 4096 : (dim == 2 ? 384 : 48);
  Vec lo, hi;
  if (dom.kind() == DomainKind::box) {
    lo = dom.origin();
    for (int k = 0; k < dim; ++k) hi[k] = lo[k] + dom.side();
  } else {
    lo = dom.vertices()[0];
    hi = dom.vertices()[0];
    for (const Vec& v : dom.vertices())
      for (int k = 0; k < 2; ++k) {
        lo[k] = std::min(lo[k], v[k]);
        hi[k] = std::max(hi[k], v[k]);
      }
  }
  std::array<int, 3> count{1, 1, 1};
  for (int k = 0; k < dim; ++k) count[static_cast<std::size_t>(k)] = n;
  for (int i = 0; i < count[0]; ++i)
    for (int j = 0; j < count[1]; ++j)
      for (int l = 0; l < count[2]; ++l) {
        Vec x(lo[0] + (i + 0.5) / count[0] * (hi[0] - lo[0]),
              lo[1] + (j + 0.5) / count[1] * (hi[1] - lo[1]),
              lo[2] + (l + 0.5) / count[2] * (hi[2] - lo[2]));
        if (dom.kind() == DomainKind::polygon && !dom.contains(x)) continue;
        best = std::max(best, norm(f(x)));
      }
  return best;
}

}  // namespace

std::string to_string(FieldClass c) {
  switch (c) {
    case FieldClass::smooth: return "smooth";
    case FieldClass::bv_linf: return "BV+Linf";
    case FieldClass::linf_b12: return "Linf+B12";
    case FieldClass::none: return "none";
  }
  return "?";
}

FieldClass field_class_from_string(const std::string& s) {
  if (s == "smooth") return FieldClass::smooth;
  if (s == "BV+Linf" || s == "bv_linf") return FieldClass::bv_linf;
  if (s == "Linf+B12" || s == "linf_b12") return FieldClass::linf_b12;
  if (s == "none") return FieldClass::none;
  fail(Errc::parse, "unknown field class '" + s + "'");
}

std::size_t GridData::flat(const std::array<int, 3>& idx) const {
  std::size_t f = 0;
  for (int k = 0; k < dim; ++k)
    f = f * static_cast<std::size_t>(n[static_cast<std::size_t>(k)]) +
        static_cast<std::size_t>(idx[static_cast<std::size_t>(k)]);
  return f;
}

// ---------------------------------------------------------------------------
// Grid evaluation
// ---------------------------------------------------------------------------

namespace {

Vec grid_interpolate(const GridData& g, const Vec& x) {
  std::array<int, 3> base{0, 0, 0};
  std::array<double, 3> w{0.0, 0.0, 0.0};
  for (int k = 0; k < g.dim; ++k) {
    double t = (x[k] - g.origin[k]) / g.spacing - 0.5;
    double fl = std::floor(t);
    base[static_cast<std::size_t>(k)] = static_cast<int>(fl);
    w[static_cast<std::size_t>(k)] = t - fl;
  }
  const int corners = 1 << g.dim;
  Vec out;
  for (int c = 0; c < corners; ++c) {
    std::array<int, 3> idx{0, 0, 0};
    double weight = 1.0;
    for (int k = 0; k < g.dim; ++k) {
      const int bit = (c >> k) & 1;
      int i = base[static_cast<std::size_t>(k)] + bit;
      const int nk = g.n[static_cast<std::size_t>(k)];
      if (g.periodic) {
        i = ((i % nk) + nk) % nk;
      } else if (i < 0 || i >= nk) {
        fail(Errc::domain, "grid evaluation outside the sampled hull");
      }
      idx[static_cast<std::size_t>(k)] = i;
      weight *= bit ? w[static_cast<std::size_t>(k)] : 1.0 - w[static_cast<std::size_t>(k)];
    }
    const std::size_t f = g.flat(idx);
    if (!g.valid.empty() && !g.valid[f]) fail(Errc::domain, "grid evaluation in masked region");
    for (int m = 0; m < g.dim; ++m) out[m] += weight * g.comp[static_cast<std::size_t>(m)][f];
  }
  return out;
}

Mat grid_gradient_at_cell(const GridData& g, const std::array<int, 3>& idx) {
  Mat grad;
  for (int ax = 0; ax < g.dim; ++ax) {
    std::array<int, 3> ip = idx, im = idx;
    const int nk = g.n[static_cast<std::size_t>(ax)];
    ip[static_cast<std::size_t>(ax)] += 1;
    im[static_cast<std::size_t>(ax)] -= 1;
    if (g.periodic) {
      ip[static_cast<std::size_t>(ax)] = (ip[static_cast<std::size_t>(ax)] + nk) % nk;
      im[static_cast<std::size_t>(ax)] = (im[static_cast<std::size_t>(ax)] + nk) % nk;
    } else if (ip[static_cast<std::size_t>(ax)] >= nk || im[static_cast<std::size_t>(ax)] < 0) {
      return Mat();  // boundary cells carry no gradient sample
    }
    const std::size_t fp = g.flat(ip), fm = g.flat(im);
    if (!g.valid.empty() && (!g.valid[fp] || !g.valid[fm])) return Mat();
    for (int m = 0; m < g.dim; ++m) {
      grad(m, ax) = (g.comp[static_cast<std::size_t>(m)][fp] - g.comp[static_cast<std::size_t>(m)][fm]) /
                    (2.0 * g.spacing);
    }
  }
  return grad;
}

}  // namespace

double grid_divergence_residual(const GridData& g) {
  double worst = 0.0;
  std::array<int, 3> count{1, 1, 1};
  for (int k = 0; k < g.dim; ++k) count[static_cast<std::size_t>(k)] = g.n[static_cast<std::size_t>(k)];
  for (int i = 0; i < count[0]; ++i)
    for (int j = 0; j < count[1]; ++j)
      for (int l = 0; l < count[2]; ++l) {
        std::array<int, 3> idx{i, j, l};
        if (!g.valid.empty() && !g.valid[g.flat(idx)]) continue;
        bool interior = true;
        if (!g.periodic) {
          for (int k = 0; k < g.dim; ++k) {
            const int v = idx[static_cast<std::size_t>(k)];
            if (v == 0 || v == g.n[static_cast<std::size_t>(k)] - 1) interior = false;
          }
        }
        if (!interior) continue;
        Mat grad = grid_gradient_at_cell(g, idx);
        worst = std::max(worst, std::abs(trace(grad, g.dim)));
      }
  return worst;
}

// ---------------------------------------------------------------------------
// Evaluation / increments
// ---------------------------------------------------------------------------

Vec evaluate(const VelocityField& u, Vec x) {
  if (u.domain.kind() == DomainKind::box && u.domain.periodic()) {
    return u.eval_local(u.domain.wrap(x));
  }
  if (!u.domain.contains(x)) fail(Errc::domain, "point outside the field domain");
  return u.eval_local(x);
}

Vec increment(const VelocityField& u, const Vec& x, const Vec& xi) {
  if (!(u.domain.kind() == DomainKind::box && u.domain.periodic())) {
    const double d = u.domain.boundary_distance(x);
    if (!(2.0 * norm(xi) < d))
      fail(Errc::domain, "increment requires 2|xi| < dist(x, boundary)");
  }
  return evaluate(u, x + xi) - evaluate(u, x);
}

double jump_distance(const VelocityField& u, const Vec& x) {
  if (u.sheets.empty()) return std::numeric_limits<double>::infinity();
  const bool periodic = u.domain.kind() == DomainKind::box && u.domain.periodic();
  const double L = u.domain.side();
  double best = std::numeric_limits<double>::infinity();
  Vec w = periodic ? u.domain.wrap(x) : x;
  for (const JumpSheet& s : u.sheets) {
    double d = w[s.axis] - s.position;
    if (periodic) {
      d = std::remainder(d, L);
    }
    best = std::min(best, std::abs(d));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

namespace {

VelocityField make_shear_layer() {
  VelocityField u;
  u.domain = Domain::periodic_box(2, 4.0, Vec(-2.0, -2.0));
  u.dim = 2;
  u.declared_class = FieldClass::bv_linf;
  u.declared_divfree = true;
  u.id = "shear_layer";
  u.descriptor = {{"catalog", "shear_layer"}};
  u.eval_local = [](const Vec& x) { return Vec(sign01(x[1]), 0.0); };
  u.piecewise_constant = true;
  u.sheets.push_back({1, 0.0, Vec(2.0, 0.0)});
  u.sheets.push_back({1, -2.0, Vec(-2.0, 0.0)});  // periodic seam
  u.max_abs = 1.0;
  return u;
}

VelocityField make_burgers_shock() {
  VelocityField u;
  u.domain = Domain::periodic_box(1, 4.0, Vec(-2.0));
  u.dim = 1;
  u.declared_class = FieldClass::bv_linf;
  u.declared_divfree = false;  // d/dx u = -2 delta_0
  u.id = "burgers_shock";
  u.descriptor = {{"catalog", "burgers_shock"}};
  u.eval_local = [](const Vec& x) { return Vec(-sign01(x[0])); };
  u.piecewise_constant = true;
  u.sheets.push_back({0, 0.0, Vec(-2.0)});
  u.sheets.push_back({0, -2.0, Vec(2.0)});  // periodic seam
  u.max_abs = 1.0;
  return u;
}

// Stream function (x(1-x) y(1-y))^2 on the unit square: divergence-free,
// tangent to the boundary, with u.n vanishing quadratically at the edges.
VelocityField make_poly_stream() {
  VelocityField u;
  u.domain = Domain::unit_square();
  u.dim = 2;
  u.declared_class = FieldClass::smooth;
  u.declared_divfree = true;
  u.id = "poly_stream";
  u.descriptor = {{"catalog", "poly_stream"}};
  auto gx = [](double x) { return x * (1.0 - x); };
  auto dgx = [](double x) { return 1.0 - 2.0 * x; };
  u.eval_local = [gx, dgx](const Vec& p) {
    const double x = p[0], y = p[1];
    const double u1 = 2.0 * gx(x) * gx(x) * gx(y) * dgx(y);
    const double u2 = -2.0 * gx(x) * dgx(x) * gx(y) * gx(y);
    return Vec(u1, u2);
  };
  u.grad_analytic = [gx, dgx](const Vec& p) {
    const double x = p[0], y = p[1];
    Mat g;
    g(0, 0) = 2.0 * 2.0 * gx(x) * dgx(x) * gx(y) * dgx(y);
    g(0, 1) = 2.0 * gx(x) * gx(x) * (1.0 - 6.0 * y + 6.0 * y * y);
    g(1, 0) = -2.0 * (1.0 - 6.0 * x + 6.0 * x * x) * gx(y) * gx(y);
    g(1, 1) = -g(0, 0);
    return g;
  };
  u.has_analytic_grad = true;
  u.max_abs = field_sup_numeric(u.domain, u.eval_local, 2);
  return u;
}

VelocityField make_taylor_green() {
  VelocityField u;
  u.domain = Domain::periodic_box(2, 2.0 * std::acos(-1.0), Vec(0.0, 0.0));
  u.dim = 2;
  u.declared_class = FieldClass::smooth;
  u.declared_divfree = true;
  u.id = "taylor_green";
  u.descriptor = {{"catalog", "taylor_green"}};
  u.eval_local = [](const Vec& p) {
    return Vec(std::sin(p[0]) * std::cos(p[1]), -std::cos(p[0]) * std::sin(p[1]));
  };
  u.grad_analytic = [](const Vec& p) {
    Mat g;
    g(0, 0) = std::cos(p[0]) * std::cos(p[1]);
    g(0, 1) = -std::sin(p[0]) * std::sin(p[1]);
    g(1, 0) = std::sin(p[0]) * std::sin(p[1]);
    g(1, 1) = -std::cos(p[0]) * std::cos(p[1]);
    return g;
  };
  u.has_analytic_grad = true;
  u.max_abs = 1.0;
  return u;
}

VelocityField make_linear(const Mat& m, int dim) {
  VelocityField u;
  u.domain = Domain::plain_box(dim, 4.0, dim == 1 ? Vec(-2.0)
                                                  : (dim == 2 ? Vec(-2.0, -2.0) : Vec(-2.0, -2.0, -2.0)));
  u.dim = dim;
  u.declared_class = FieldClass::smooth;
  u.declared_divfree = std::abs(trace(m, dim)) < 1e-12;
  u.id = "linear";
  nlohmann::json mj = nlohmann::json::array();
  for (int i = 0; i < dim; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < dim; ++j) row.push_back(m(i, j));
    mj.push_back(row);
  }
  u.descriptor = {{"catalog", "linear"}, {"matrix", mj}};
  u.eval_local = [m](const Vec& x) { return mul(m, x); };
  u.grad_analytic = [m](const Vec&) { return m; };
  u.has_analytic_grad = true;
  double sup = 0.0;
  for (int c = 0; c < (1 << dim); ++c) {
    Vec corner;
    for (int k = 0; k < dim; ++k) corner[k] = ((c >> k) & 1) ? 2.0 : -2.0;
    sup = std::max(sup, norm(mul(m, corner)));
  }
  u.max_abs = sup;
  return u;
}

VelocityField make_constant(const Vec& c, int dim, const std::string& domain_name) {
  VelocityField u;
  if (domain_name == "unit_square") {
    if (dim != 2) fail(Errc::parameter, "unit_square domain needs 2 components");
    u.domain = Domain::unit_square();
  } else if (domain_name == "l_shape") {
    if (dim != 2) fail(Errc::parameter, "l_shape domain needs 2 components");
    u.domain = Domain::l_shape();
  } else if (domain_name.empty()) {
    u.domain = Domain::periodic_box(dim, 4.0, dim == 1 ? Vec(-2.0)
                                                       : (dim == 2 ? Vec(-2.0, -2.0) : Vec(-2.0, -2.0, -2.0)));
  } else {
    fail(Errc::parameter, "unknown domain '" + domain_name + "' for constant field");
  }
  u.dim = dim;
  u.declared_class = FieldClass::smooth;
  u.declared_divfree = true;
  u.id = "constant";
  nlohmann::json cj = nlohmann::json::array();
  for (int k = 0; k < dim; ++k) cj.push_back(c[k]);
  u.descriptor = {{"catalog", "constant"}, {"value", cj}};
  if (!domain_name.empty()) u.descriptor["domain"] = domain_name;
  u.eval_local = [c](const Vec&) { return c; };
  u.grad_analytic = [](const Vec&) { return Mat(); };
  u.has_analytic_grad = true;
  u.max_abs = norm(c);
  return u;
}

}  // namespace

VelocityField catalog_field(const std::string& name, const nlohmann::json& params) {
  if (name == "shear_layer") return make_shear_layer();
  if (name == "burgers_shock") return make_burgers_shock();
  if (name == "poly_stream") return make_poly_stream();
  if (name == "taylor_green") return make_taylor_green();
  if (name == "linear") {
    if (!params.contains("matrix")) fail(Errc::parameter, "linear field needs a 'matrix' parameter");
    const auto& rows = params.at("matrix");
    const int dim = static_cast<int>(rows.size());
    if (dim < 1 || dim > 3) fail(Errc::parameter, "linear field matrix must be 1x1 .. 3x3");
    Mat m;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        m(i, j) = rows.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(j)).get<double>();
    return make_linear(m, dim);
  }
  if (name == "constant") {
    if (!params.contains("value")) fail(Errc::parameter, "constant field needs a 'value' parameter");
    const auto& arr = params.at("value");
    const int dim = static_cast<int>(arr.size());
    if (dim < 1 || dim > 3) fail(Errc::parameter, "constant field value must have 1..3 components");
    Vec c;
    for (int k = 0; k < dim; ++k) c[k] = arr.at(static_cast<std::size_t>(k)).get<double>();
    return make_constant(c, dim, params.value("domain", std::string()));
  }
  fail(Errc::parameter, "unknown catalog field '" + name + "'");
}

std::vector<std::string> catalog_field_names() {
  return {"shear_layer", "burgers_shock", "poly_stream", "taylor_green", "linear", "constant"};
}

// ---------------------------------------------------------------------------
// Grid ingestion
// ---------------------------------------------------------------------------

VelocityField field_from_grid(std::shared_ptr<const GridData> grid, FieldClass cls,
                              bool declared_divfree, const std::string& id) {
  if (!grid) fail(Errc::parameter, "null grid");
  const GridData& g = *grid;
  if (g.dim < 1 || g.dim > 3) fail(Errc::parameter, "grid dimension must be 1..3");
  double sup = 0.0;
  for (const auto& c : g.comp)
    for (double v : c) {
      if (!std::isfinite(v)) fail(Errc::parameter, "grid contains non-finite samples");
      sup = std::max(sup, std::abs(v));
    }
  VelocityField u;
  if (g.periodic) {
    u.domain = Domain::periodic_box(g.dim, g.side(0), g.origin);
  } else {
    u.domain = Domain::plain_box(g.dim, g.side(0), g.origin);
  }
  u.dim = g.dim;
  u.declared_class = cls;
  u.declared_divfree = declared_divfree;
  u.id = id;
  u.descriptor = {{"grid", id},
                  {"dimension", g.dim},
                  {"spacing", g.spacing},
                  {"side", g.side(0)}};
  auto gp = grid;
  u.eval_local = [gp](const Vec& x) { return grid_interpolate(*gp, x); };
  u.grid = grid;
  double sup_vec = 0.0;
  const std::size_t cells = g.comp[0].size();
  for (std::size_t f = 0; f < cells; ++f) {
    double s = 0.0;
    for (int m = 0; m < g.dim; ++m) {
      const double v = g.comp[static_cast<std::size_t>(m)][f];
      s += v * v;
    }
    sup_vec = std::max(sup_vec, s);
  }
  u.max_abs = std::sqrt(sup_vec);
  (void)sup;
  if (declared_divfree) {
    const double res = grid_divergence_residual(g);
    const double tol = kGridDivFactor * std::max(sup, 1e-300) / g.spacing;
    if (res > tol) {
      std::ostringstream os;
      os << "grid declared divergence-free but max centered-difference divergence " << res
         << " exceeds " << tol;
      fail(Errc::parameter, os.str());
    }
  }
  return u;
}

namespace {

std::vector<double> read_binary_doubles(const std::string& path, std::size_t expect) {
  static_assert(std::endian::native == std::endian::little,
                "grid files are little-endian float64");
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open grid data file '" + path + "'");
  std::vector<double> data(expect);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(expect * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != expect * sizeof(double))
    fail(Errc::parse, "grid data file shorter than header promises: " + path);
  return data;
}

VelocityField ingest_csv_grid(const std::string& path);

}  // namespace

VelocityField field_from_grid_file(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") return ingest_csv_grid(path);

  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open grid file '" + path + "'");
  nlohmann::json header;
  try {
    in >> header;
  } catch (const std::exception& e) {
    fail(Errc::parse, std::string("grid header is not valid JSON: ") + e.what());
  }
  for (const auto& item : header.items()) {
    static const std::vector<std::string> known{"dimension", "side",   "spacing",
                                                "components", "origin", "data",
                                                "data_inline", "class", "divergence_free"};
    if (std::find(known.begin(), known.end(), item.key()) == known.end())
      fail(Errc::parse, "unknown grid header key '" + item.key() + "'");
  }
  auto g = std::make_shared<GridData>();
  g->dim = header.at("dimension").get<int>();
  const double side = header.at("side").get<double>();
  g->spacing = header.at("spacing").get<double>();
  if (!(g->spacing > 0.0)) fail(Errc::parse, "grid spacing must be positive");
  const int n = static_cast<int>(std::lround(side / g->spacing));
  if (std::abs(n * g->spacing - side) > 1e-9 * side)
    fail(Errc::parse, "grid spacing does not divide the side length");
  for (int k = 0; k < g->dim; ++k) g->n[static_cast<std::size_t>(k)] = n;
  const int comps = header.at("components").get<int>();
  if (comps != g->dim) fail(Errc::parse, "grid component count must equal the dimension");
  if (header.contains("origin")) {
    const auto& o = header.at("origin");
    for (int k = 0; k < g->dim; ++k) g->origin[k] = o.at(static_cast<std::size_t>(k)).get<double>();
  } else {
    for (int k = 0; k < g->dim; ++k) g->origin[k] = -side / 2.0;
  }
  std::size_t per_comp = 1;
  for (int k = 0; k < g->dim; ++k) per_comp *= static_cast<std::size_t>(n);

  std::vector<double> flat;
  if (header.contains("data_inline")) {
    flat = header.at("data_inline").get<std::vector<double>>();
    if (flat.size() != per_comp * static_cast<std::size_t>(comps))
      fail(Errc::parse, "data_inline length does not match the grid shape");
  } else if (header.contains("data")) {
    std::string data_path = header.at("data").get<std::string>();
    if (!data_path.empty() && data_path[0] != '/') {
      auto slash = path.find_last_of('/');
      if (slash != std::string::npos) data_path = path.substr(0, slash + 1) + data_path;
    }
    flat = read_binary_doubles(data_path, per_comp * static_cast<std::size_t>(comps));
  } else {
    fail(Errc::parse, "grid header needs 'data' or 'data_inline'");
  }
  g->comp.resize(static_cast<std::size_t>(comps));
  for (int m = 0; m < comps; ++m)
    g->comp[static_cast<std::size_t>(m)].assign(flat.begin() + static_cast<std::ptrdiff_t>(m * per_comp),
                                                flat.begin() + static_cast<std::ptrdiff_t>((m + 1) * per_comp));
  const FieldClass cls = field_class_from_string(header.value("class", "none"));
  const bool divfree = header.value("divergence_free", false);
  return field_from_grid(g, cls, divfree, path);
}

namespace {

VelocityField ingest_csv_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open grid file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        fail(Errc::parse, "non-numeric CSV cell in " + path + ": '" + cell + "'");
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(Errc::parse, "empty CSV grid file " + path);
  const std::size_t width = rows[0].size();
  if (width % 2 != 0 || width < 2 || width > 6)
    fail(Errc::parse, "CSV grid rows must be (x..., u...) with matching counts");
  const int dim = static_cast<int>(width / 2);
  for (const auto& r : rows)
    if (r.size() != width) fail(Errc::parse, "ragged CSV grid file " + path);

  // per-axis sorted unique coordinates
  std::array<std::vector<double>, 3> coords;
  for (int k = 0; k < dim; ++k) {
    std::vector<double> c;
    for (const auto& r : rows) c.push_back(r[static_cast<std::size_t>(k)]);
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end(),
                        [](double a, double b) { return std::abs(a - b) < 1e-12; }),
            c.end());
    coords[static_cast<std::size_t>(k)] = std::move(c);
  }
  const std::size_t n = coords[0].size();
  double spacing = n > 1 ? coords[0][1] - coords[0][0] : 1.0;
  for (int k = 0; k < dim; ++k) {
    const auto& c = coords[static_cast<std::size_t>(k)];
    if (c.size() != n) fail(Errc::parse, "CSV grid is not a complete tensor grid");
    for (std::size_t i = 1; i < c.size(); ++i)
      if (std::abs(c[i] - c[i - 1] - spacing) > 1e-9 * spacing)
        fail(Errc::parse, "CSV grid spacing is not uniform");
  }
  auto g = std::make_shared<GridData>();
  g->dim = dim;
  g->spacing = spacing;
  for (int k = 0; k < dim; ++k) {
    g->n[static_cast<std::size_t>(k)] = static_cast<int>(n);
    g->origin[k] = coords[static_cast<std::size_t>(k)].front() - spacing / 2.0;
  }
  std::size_t per_comp = 1;
  for (int k = 0; k < dim; ++k) per_comp *= n;
  if (rows.size() != per_comp) fail(Errc::parse, "CSV grid is missing sample rows");
  g->comp.assign(static_cast<std::size_t>(dim), std::vector<double>(per_comp, 0.0));
  for (const auto& r : rows) {
    std::array<int, 3> idx{0, 0, 0};
    for (int k = 0; k < dim; ++k) {
      const auto& c = coords[static_cast<std::size_t>(k)];
      auto it = std::lower_bound(c.begin(), c.end(), r[static_cast<std::size_t>(k)] - 1e-12);
      idx[static_cast<std::size_t>(k)] = static_cast<int>(it - c.begin());
    }
    const std::size_t f = g->flat(idx);
    for (int m = 0; m < dim; ++m) g->comp[static_cast<std::size_t>(m)][f] = r[static_cast<std::size_t>(dim + m)];
  }
  return field_from_grid(g, FieldClass::none, false, path);
}

}  // namespace

// ---------------------------------------------------------------------------
// Mollification
// ---------------------------------------------------------------------------

VelocityField mollify(const VelocityField& u, const Kernel& rho, double eps,
                      int out_points_per_axis) {
  if (!(eps > 0.0)) fail(Errc::parameter, "mollification scale must be positive");
  if (rho.dim != u.dim) fail(Errc::parameter, "kernel dimension does not match the field");
  if (rho.support_radius > 1.0 + 1e-12)
    fail(Errc::parameter, "mollification kernel must be supported in the unit ball");
  if (eps >= u.domain.half_width())
    fail(Errc::parameter, "mollification scale reaches the domain half-width");

  Vec lo, hi;
  const bool polygon = u.domain.kind() == DomainKind::polygon;
  if (u.domain.kind() == DomainKind::box) {
    lo = u.domain.origin();
    for (int k = 0; k < u.dim; ++k) hi[k] = lo[k] + u.domain.side();
  } else {
    lo = u.domain.vertices()[0];
    hi = lo;
    for (const Vec& v : u.domain.vertices())
      for (int k = 0; k < 2; ++k) {
        lo[k] = std::min(lo[k], v[k]);
        hi[k] = std::max(hi[k], v[k]);
      }
  }
  const double span = hi[0] - lo[0];
  const int n = out_points_per_axis > 0
                    ? out_points_per_axis
                    : std::clamp(static_cast<int>(std::ceil(span / (eps / 6.0))),
                                 48, u.dim == 1 ? 2048 : 384);

  auto g = std::make_shared<GridData>();
  g->dim = u.dim;
  g->spacing = span / n;
  g->origin = lo;
  g->periodic = u.domain.kind() == DomainKind::box && u.domain.periodic();
  for (int k = 0; k < u.dim; ++k) g->n[static_cast<std::size_t>(k)] = n;
  std::size_t total = 1;
  for (int k = 0; k < u.dim; ++k) total *= static_cast<std::size_t>(n);
  g->comp.assign(static_cast<std::size_t>(u.dim), std::vector<double>(total, 0.0));
  const bool restricted = polygon || !g->periodic;
  if (restricted) g->valid.assign(total, 0);

  std::array<int, 3> counts{1, 1, 1};
  for (int k = 0; k < u.dim; ++k) counts[static_cast<std::size_t>(k)] = n;
  parallel_for(total, [&](std::size_t f) {
    std::size_t rest = f;
    std::array<int, 3> idx{0, 0, 0};
    for (int k = u.dim - 1; k >= 0; --k) {
      idx[static_cast<std::size_t>(k)] = static_cast<int>(rest % static_cast<std::size_t>(counts[static_cast<std::size_t>(k)]));
      rest /= static_cast<std::size_t>(counts[static_cast<std::size_t>(k)]);
    }
    Vec x;
    for (int k = 0; k < u.dim; ++k) x[k] = g->origin[k] + (idx[static_cast<std::size_t>(k)] + 0.5) * g->spacing;
    if (restricted) {
      const double margin = eps + 0.75 * g->spacing;
      if (u.domain.boundary_distance(x) <= margin || !u.domain.contains(x)) return;
      g->valid[f] = 1;
    }
    for (int m = 0; m < u.dim; ++m) {
      g->comp[static_cast<std::size_t>(m)][f] = ball_integrate_value(
          u.dim, [&](const Vec& z) { return rho.eval(z) * evaluate(u, x + eps * z)[m]; });
    }
  });

  VelocityField out = field_from_grid(g, FieldClass::smooth, false, u.id + "/mollified");
  out.domain = u.domain;
  out.declared_divfree = u.declared_divfree;
  out.descriptor = {{"mollified", u.descriptor}, {"eps", eps}, {"kernel", rho.descriptor}};
  return out;
}

// ---------------------------------------------------------------------------
// Variation measures
// ---------------------------------------------------------------------------

namespace {

double sheet_density(const JumpSheet& s, VariationLabel label, const Vec& z) {
  switch (label) {
    case VariationLabel::full_gradient:
      return norm(s.jump);
    case VariationLabel::symmetric_gradient: {
      const double j2 = norm_sq(s.jump);
      const double jn = s.jump[s.axis];
      return std::sqrt(0.5 * (j2 + jn * jn));
    }
    case VariationLabel::directional:
      return std::abs(z[s.axis]) * norm(s.jump);
  }
  return 0.0;
}

// length (d=2) / count (d=1) of the sheet slice inside the rounded region
double sheet_cross_measure(const Region& region, int dim, int axis, double position) {
  const double r = region.round;
  double d_out = std::max({region.lo[axis] - position, 0.0, position - region.hi[axis]});
  if (d_out > r) return 0.0;
  if (dim == 1) return 1.0;
  const double widen = std::sqrt(std::max(0.0, r * r - d_out * d_out));
  const int other = axis == 0 ? 1 : 0;
  double len = (region.hi[other] - region.lo[other]);
  if (d_out > 0.0) {
    len += 2.0 * widen;
  } else {
    len += 2.0 * r;
  }
  return std::max(0.0, len);
}

double matrix_density(const Mat& grad, int dim, VariationLabel label, const Vec& z) {
  switch (label) {
    case VariationLabel::full_gradient:
      return frobenius(grad);
    case VariationLabel::symmetric_gradient:
      return frobenius(sym_part(grad));
    case VariationLabel::directional:
      return norm(mul(grad, z));
  }
  (void)dim;
  return 0.0;
}

}  // namespace

VariationMeasure total_variation(const VelocityField& u, const Region& region,
                                 VariationLabel label, const Vec& z,
                                 int sample_points_per_axis) {
  VariationMeasure vm;
  vm.label = label;
  vm.direction = z;

  if (u.piecewise_constant) {
    const bool periodic = u.domain.kind() == DomainKind::box && u.domain.periodic();
    const double L = u.domain.side();
    for (const JumpSheet& s : u.sheets) {
      const double density = sheet_density(s, label, z);
      if (density == 0.0) continue;
      // each sheet is one cut of the torus; count its best periodic image once
      double best_measure = 0.0, best_pos = s.position;
      for (int shift = -1; shift <= 1; ++shift) {
        if (shift != 0 && !periodic) continue;
        const double pos = s.position + shift * L;
        const double measure = sheet_cross_measure(region, u.dim, s.axis, pos);
        if (measure > best_measure) {
          best_measure = measure;
          best_pos = pos;
        }
      }
      if (best_measure <= 0.0) continue;
      // subdivide the in-region extent into atoms for locality
      const int pieces = u.dim == 1 ? 1 : 64;
      const int other = s.axis == 0 ? 1 : 0;
      const double o_lo = region.lo[other] - region.round;
      const double o_hi = region.hi[other] + region.round;
      for (int p = 0; p < pieces; ++p) {
        Vec loc;
        loc[s.axis] = best_pos;
        if (u.dim > 1) loc[other] = o_lo + (p + 0.5) / pieces * (o_hi - o_lo);
        vm.atoms.push_back({loc, density * best_measure / pieces});
      }
    }
  } else if (u.is_grid()) {
    const GridData& g = *u.grid;
    std::array<int, 3> count{1, 1, 1};
    for (int k = 0; k < g.dim; ++k) count[static_cast<std::size_t>(k)] = g.n[static_cast<std::size_t>(k)];
    const double cellvol = std::pow(g.spacing, g.dim);
    for (int i = 0; i < count[0]; ++i)
      for (int j = 0; j < count[1]; ++j)
        for (int l = 0; l < count[2]; ++l) {
          std::array<int, 3> idx{i, j, l};
          Vec x;
          for (int k = 0; k < g.dim; ++k)
            x[k] = g.origin[k] + (idx[static_cast<std::size_t>(k)] + 0.5) * g.spacing;
          if (!region.contains(x, g.dim)) continue;
          if (!g.valid.empty() && !g.valid[g.flat(idx)]) continue;
          Mat grad = grid_gradient_at_cell(g, idx);
          const double density = matrix_density(grad, g.dim, label, z);
          if (density > 0.0) vm.atoms.push_back({x, density * cellvol});
        }
  } else {
    // analytic smooth field: sample the (rounded) region
    const int n = sample_points_per_axis > 0 ? sample_points_per_axis
                                             : (u.dim == 1 ? 1024 : (u.dim == 2 ? 192 : 48));
    std::array<AxisGrid, 3> axes;
    for (int k = 0; k < u.dim; ++k)
      axes[static_cast<std::size_t>(k)] =
          midpoint_axis(region.lo[k] - region.round, region.hi[k] + region.round, n);
    const double fd = 1e-6;
    std::array<std::size_t, 3> count{1, 1, 1};
    for (int k = 0; k < u.dim; ++k) count[static_cast<std::size_t>(k)] = axes[static_cast<std::size_t>(k)].centers.size();
    for (std::size_t i0 = 0; i0 < count[0]; ++i0)
      for (std::size_t i1 = 0; i1 < count[1]; ++i1)
        for (std::size_t i2 = 0; i2 < count[2]; ++i2) {
          Vec x;
          double w = 1.0;
          const std::array<std::size_t, 3> ii{i0, i1, i2};
          for (int k = 0; k < u.dim; ++k) {
            x[k] = axes[static_cast<std::size_t>(k)].centers[ii[static_cast<std::size_t>(k)]];
            w *= axes[static_cast<std::size_t>(k)].weights[ii[static_cast<std::size_t>(k)]];
          }
          if (!region.contains(x, u.dim)) continue;
          if (u.domain.kind() == DomainKind::polygon && !u.domain.contains(x)) continue;
          Mat grad;
          if (u.has_analytic_grad) {
            grad = u.grad_analytic(x);
          } else {
            for (int c = 0; c < u.dim; ++c) {
              Vec xp = x, xm = x;
              xp[c] += fd;
              xm[c] -= fd;
              Vec up = evaluate(u, xp), um = evaluate(u, xm);
              for (int m = 0; m < u.dim; ++m) grad(m, c) = (up[m] - um[m]) / (2.0 * fd);
            }
          }
          const double density = matrix_density(grad, u.dim, label, z);
          if (density > 0.0) vm.atoms.push_back({x, density * w});
        }
  }

  std::vector<double> weights;
  weights.reserve(vm.atoms.size());
  for (const auto& a : vm.atoms) weights.push_back(a.weight);
  vm.total = pairwise_sum(weights);
  return vm;
}

IncrementBoundReport verify_increment_bound(const VelocityField& u, const Region& region,
                                            const Vec& z, double eps, double tol) {
  if (norm(z) > 1.0 + 1e-12) fail(Errc::precondition, "direction must satisfy |z| <= 1");
  const Vec xi = eps * z;

  std::array<std::vector<double>, 3> splits;
  if (u.piecewise_constant) {
    const bool periodic = u.domain.kind() == DomainKind::box && u.domain.periodic();
    const double L = u.domain.side();
    for (const JumpSheet& s : u.sheets) {
      for (int shift = -1; shift <= 1; ++shift) {
        if (shift != 0 && !periodic) continue;
        const double pos = s.position + shift * L;
        splits[static_cast<std::size_t>(s.axis)].push_back(pos);
        splits[static_cast<std::size_t>(s.axis)].push_back(pos - xi[s.axis]);
      }
    }
  }
  const int base_n = u.dim == 1 ? 512 : (u.dim == 2 ? 128 : 32);
  std::array<int, 3> counts{base_n, base_n, base_n};

  IncrementBoundReport rep;
  QuadResult lhs_bv = box_integrate(u.dim, region.lo, region.hi, counts,
                                    [&](const Vec& x) { return norm(increment(u, x, xi)); },
                                    nullptr, &splits);
  QuadResult lhs_bd = box_integrate(u.dim, region.lo, region.hi, counts,
                                    [&](const Vec& x) { return std::abs(dot(z, increment(u, x, xi))); },
                                    nullptr, &splits);
  rep.lhs_bv = lhs_bv.value;
  rep.lhs_bd = lhs_bd.value;
  rep.rhs_bv = eps * total_variation(u, region.inflated(eps), VariationLabel::directional, z).total;
  rep.rhs_bd = eps * norm_sq(z) *
               total_variation(u, region.inflated(eps), VariationLabel::symmetric_gradient).total;
  rep.pass_bv = rep.lhs_bv <= rep.rhs_bv * (1.0 + tol) + 1e-12;
  rep.pass_bd = rep.lhs_bd <= rep.rhs_bd * (1.0 + tol) + 1e-12;
  rep.pass = rep.pass_bv && rep.pass_bd;
  return rep;
}

}  // namespace drlab
