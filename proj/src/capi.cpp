#include "drlab.h"

#include <cstring>
#include <string>

#include "drlab/fields.hpp"
#include "drlab/flux.hpp"
#include "drlab/kernels.hpp"
#include "drlab/scenario.hpp"

struct drlab_field {
  drlab::VelocityField u;
};
struct drlab_kernel {
  drlab::Kernel k;
};

namespace {

thread_local std::string g_last_error = "no error";
thread_local std::string g_catalog_text;

drlab_status map_code(drlab::Errc c) {
  using drlab::Errc;
  switch (c) {
    case Errc::parameter: return DRLAB_ERR_PARAM;
    case Errc::domain: return DRLAB_ERR_DOMAIN;
    case Errc::precondition: return DRLAB_ERR_PRECOND;
    case Errc::refusal: return DRLAB_ERR_REFUSED;
    case Errc::parse: return DRLAB_ERR_PARSE;
    case Errc::io: return DRLAB_ERR_IO;
    case Errc::internal: return DRLAB_ERR_INTERNAL;
  }
  return DRLAB_ERR_INTERNAL;
}

template <typename Fn>
drlab_status guarded(Fn&& fn) {
  try {
    fn();
    return DRLAB_OK;
  } catch (const drlab::Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DRLAB_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return DRLAB_ERR_INTERNAL;
  }
}

drlab_status require(bool ok, const char* msg) {
  if (!ok) {
    g_last_error = msg;
    return DRLAB_ERR_PARAM;
  }
  return DRLAB_OK;
}

}  // namespace

extern "C" {

const char* drlab_version(void) { return "0.1.0"; }
int drlab_abi_version(void) { return DRLAB_ABI_VERSION; }
const char* drlab_last_error(void) { return g_last_error.c_str(); }

drlab_status drlab_field_catalog(const char* name, const char* params_json, drlab_field** out) {
  if (drlab_status s = require(name && out, "name and out must be non-null")) return s;
  return guarded([&] {
    nlohmann::json params = nlohmann::json::object();
    if (params_json && std::strlen(params_json) > 0) {
      params = nlohmann::json::parse(params_json, nullptr, false);
      if (params.is_discarded()) drlab::fail(drlab::Errc::parse, "params_json is not valid JSON");
    }
    *out = new drlab_field{drlab::catalog_field(name, params)};
  });
}

drlab_status drlab_field_from_grid_file(const char* path, drlab_field** out) {
  if (drlab_status s = require(path && out, "path and out must be non-null")) return s;
  return guarded([&] { *out = new drlab_field{drlab::field_from_grid_file(path)}; });
}

void drlab_field_free(drlab_field* f) { delete f; }

int drlab_field_dim(const drlab_field* f) { return f ? f->u.dim : 0; }
double drlab_field_max_abs(const drlab_field* f) { return f ? f->u.max_abs : 0.0; }
int drlab_field_divergence_free(const drlab_field* f) {
  return f && f->u.declared_divfree ? 1 : 0;
}

drlab_status drlab_field_eval(const drlab_field* f, const double* x, double* out) {
  if (drlab_status s = require(f && x && out, "field, x and out must be non-null")) return s;
  return guarded([&] {
    drlab::Vec p;
    for (int k = 0; k < f->u.dim; ++k) p[k] = x[k];
    drlab::Vec v = drlab::evaluate(f->u, p);
    for (int k = 0; k < f->u.dim; ++k) out[k] = v[k];
  });
}

drlab_status drlab_field_increment(const drlab_field* f, const double* x, const double* xi,
                                   double* out) {
  if (drlab_status s = require(f && x && xi && out, "field, x, xi and out must be non-null"))
    return s;
  return guarded([&] {
    drlab::Vec p, d;
    for (int k = 0; k < f->u.dim; ++k) {
      p[k] = x[k];
      d[k] = xi[k];
    }
    drlab::Vec v = drlab::increment(f->u, p, d);
    for (int k = 0; k < f->u.dim; ++k) out[k] = v[k];
  });
}

drlab_status drlab_field_kinetic_energy(const drlab_field* f, double* out) {
  if (drlab_status s = require(f && out, "field and out must be non-null")) return s;
  return guarded([&] { *out = drlab::kinetic_energy(f->u); });
}

drlab_status drlab_kernel_from_json(const char* spec_json, drlab_kernel** out) {
  if (drlab_status s = require(spec_json && out, "spec_json and out must be non-null")) return s;
  return guarded([&] {
    nlohmann::json spec = nlohmann::json::parse(spec_json, nullptr, false);
    if (spec.is_discarded()) drlab::fail(drlab::Errc::parse, "spec_json is not valid JSON");
    *out = new drlab_kernel{drlab::kernel_from_json(spec)};
  });
}

void drlab_kernel_free(drlab_kernel* k) { delete k; }

drlab_status drlab_kernel_validate(const drlab_kernel* k, drlab_kernel_report* out) {
  if (drlab_status s = require(k && out, "kernel and out must be non-null")) return s;
  return guarded([&] {
    drlab::KernelReport r = drlab::validate_kernel(k->k);
    out->even_residual = r.even_residual;
    out->min_value = r.min_value;
    out->mass_error = r.mass_error;
    out->mass_error_tolerance = r.mass_error_tolerance;
    out->support_ok = r.support_ok ? 1 : 0;
    out->usable = r.usable() ? 1 : 0;
  });
}

drlab_status drlab_kernel_eval(const drlab_kernel* k, const double* z, double* out) {
  if (drlab_status s = require(k && z && out, "kernel, z and out must be non-null")) return s;
  return guarded([&] {
    drlab::Vec p;
    for (int d = 0; d < k->k.dim; ++d) p[d] = z[d];
    *out = k->k.eval(p);
  });
}

drlab_status drlab_total_flux(const drlab_field* f, const drlab_kernel* k, double eps,
                              const double* lo, const double* hi, double* signed_out,
                              double* absolute_out) {
  if (drlab_status s = require(f && k && lo && hi, "field, kernel, lo and hi must be non-null"))
    return s;
  return guarded([&] {
    drlab::Region region;
    for (int d = 0; d < f->u.dim; ++d) {
      region.lo[d] = lo[d];
      region.hi[d] = hi[d];
    }
    drlab::FluxResult r = drlab::total_flux(f->u, k->k, eps, region);
    if (signed_out) *signed_out = r.signed_total;
    if (absolute_out) *absolute_out = r.absolute_total;
  });
}

drlab_status drlab_scenario_validate(const char* path) {
  if (drlab_status s = require(path != nullptr, "path must be non-null")) return s;
  return guarded([&] { drlab::parse_scenario(path); });
}

drlab_status drlab_scenario_run(const char* path, const drlab_run_options* options,
                                int* exit_code) {
  if (drlab_status s = require(path && exit_code, "path and exit_code must be non-null"))
    return s;
  return guarded([&] {
    drlab::Scenario s = drlab::parse_scenario(path);
    if (options) {
      if (options->deterministic) s.deterministic = true;
      if (options->workers > 0) s.workers = options->workers;
      if (options->out_dir) s.out_dir = options->out_dir;
    }
    std::string message;
    *exit_code = drlab::run_scenario(s, &message);
    if (*exit_code != 0) g_last_error = message;
  });
}

const char* drlab_catalog_text(void) {
  g_catalog_text = drlab::catalog_text();
  return g_catalog_text.c_str();
}

}  // extern "C"
