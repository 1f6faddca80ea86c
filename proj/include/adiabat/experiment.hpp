#pragma once

// Experiment runner: a JSON spec names a task, a model, numeric settings,
// and task parameters. Running one produces CSV tables plus a manifest that
// echoes the spec with every default filled in and hashes each output file.
// Unknown keys anywhere in the spec are rejected rather than ignored.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <limits>
#include <initializer_list>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "adiabat/analysis.hpp"
#include "adiabat/common.hpp"
#include "adiabat/dynamics.hpp"
#include "adiabat/fields.hpp"
#include "adiabat/geometry.hpp"
#include "adiabat/grid.hpp"
#include "adiabat/io.hpp"
#include "adiabat/models.hpp"
#include "adiabat/version.hpp"

namespace adiabat::experiment {

using json = nlohmann::json;

namespace detail {

inline void check_keys(const json& obj, const std::string& what,
                       std::initializer_list<const char*> allowed) {
  require(obj.is_object(), what + ": expected an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      std::string keys;
      for (const char* key : allowed) {
        if (!keys.empty()) keys += ", ";
        keys += key;
      }
      throw ValidationError(what + ": unknown key '" + item.key() + "' (allowed: " + keys + ")");
    }
  }
}

inline const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return (it == obj.end() || it->is_null()) ? nullptr : &*it;
}

inline double require_number(const json& obj, const std::string& what, const char* key) {
  const json* v = find(obj, key);
  if (!v) throw ValidationError(what + "." + key + ": required");
  if (!v->is_number()) throw ValidationError(what + "." + key + ": expected a number");
  return v->get<double>();
}

inline double get_number(const json& obj, const std::string& what, const char* key,
                         double fallback) {
  return find(obj, key) ? require_number(obj, what, key) : fallback;
}

inline long long require_int(const json& obj, const std::string& what, const char* key) {
  const json* v = find(obj, key);
  if (!v) throw ValidationError(what + "." + key + ": required");
  if (!v->is_number_integer()) throw ValidationError(what + "." + key + ": expected an integer");
  return v->get<long long>();
}

inline long long get_int(const json& obj, const std::string& what, const char* key,
                         long long fallback) {
  return find(obj, key) ? require_int(obj, what, key) : fallback;
}

inline std::string require_string(const json& obj, const std::string& what, const char* key) {
  const json* v = find(obj, key);
  if (!v) throw ValidationError(what + "." + key + ": required");
  if (!v->is_string()) throw ValidationError(what + "." + key + ": expected a string");
  return v->get<std::string>();
}

inline std::string get_string(const json& obj, const std::string& what, const char* key,
                              const std::string& fallback) {
  return find(obj, key) ? require_string(obj, what, key) : fallback;
}

inline bool get_bool(const json& obj, const std::string& what, const char* key, bool fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) throw ValidationError(what + "." + key + ": expected a boolean");
  return v->get<bool>();
}

inline std::vector<double> require_numbers(const json& obj, const std::string& what,
                                           const char* key) {
  const json* v = find(obj, key);
  if (!v) throw ValidationError(what + "." + key + ": required");
  if (!v->is_array() || v->empty())
    throw ValidationError(what + "." + key + ": expected a non-empty array of numbers");
  std::vector<double> out;
  for (const auto& e : *v) {
    if (!e.is_number()) throw ValidationError(what + "." + key + ": expected numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline std::vector<double> get_numbers(const json& obj, const std::string& what, const char* key,
                                       std::vector<double> fallback) {
  return find(obj, key) ? require_numbers(obj, what, key) : fallback;
}

inline ParameterPoint to_point(const std::vector<double>& v) {
  ParameterPoint p(static_cast<Eigen::Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) p[static_cast<Eigen::Index>(i)] = v[i];
  return p;
}

inline json point_json(const ParameterPoint& p) {
  json out = json::array();
  for (Eigen::Index i = 0; i < p.size(); ++i) out.push_back(p[i]);
  return out;
}

inline std::string timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Numeric settings.
// ---------------------------------------------------------------------------

inline NumericConfig parse_numerics(const json& spec) {
  NumericConfig cfg;
  const json* j = detail::find(spec, "numerics");
  if (!j) return cfg;
  detail::check_keys(*j, "numerics",
                     {"hbar", "hermiticity_tol", "gap_tol_rel", "fd_step", "pivot_tie_rel",
                      "gauge_imag_tol", "transport_overlap_min", "antisym_tol", "inertia_sym_tol",
                      "inverse_residual_tol", "dt_range_max", "norm_drift_tol", "expm_dim_cap",
                      "transient_fraction"});
  const std::string w = "numerics";
  cfg.hbar = detail::get_number(*j, w, "hbar", cfg.hbar);
  cfg.hermiticity_tol = detail::get_number(*j, w, "hermiticity_tol", cfg.hermiticity_tol);
  cfg.gap_tol_rel = detail::get_number(*j, w, "gap_tol_rel", cfg.gap_tol_rel);
  cfg.fd_step = detail::get_number(*j, w, "fd_step", cfg.fd_step);
  cfg.pivot_tie_rel = detail::get_number(*j, w, "pivot_tie_rel", cfg.pivot_tie_rel);
  cfg.gauge_imag_tol = detail::get_number(*j, w, "gauge_imag_tol", cfg.gauge_imag_tol);
  cfg.transport_overlap_min =
      detail::get_number(*j, w, "transport_overlap_min", cfg.transport_overlap_min);
  cfg.antisym_tol = detail::get_number(*j, w, "antisym_tol", cfg.antisym_tol);
  cfg.inertia_sym_tol = detail::get_number(*j, w, "inertia_sym_tol", cfg.inertia_sym_tol);
  cfg.inverse_residual_tol =
      detail::get_number(*j, w, "inverse_residual_tol", cfg.inverse_residual_tol);
  cfg.dt_range_max = detail::get_number(*j, w, "dt_range_max", cfg.dt_range_max);
  cfg.norm_drift_tol = detail::get_number(*j, w, "norm_drift_tol", cfg.norm_drift_tol);
  cfg.expm_dim_cap = static_cast<int>(detail::get_int(*j, w, "expm_dim_cap", cfg.expm_dim_cap));
  cfg.transient_fraction =
      detail::get_number(*j, w, "transient_fraction", cfg.transient_fraction);
  require(cfg.hbar > 0.0, "numerics.hbar: must be positive");
  require(cfg.fd_step > 0.0, "numerics.fd_step: must be positive");
  require(cfg.transient_fraction > 0.0 && cfg.transient_fraction < 1.0,
          "numerics.transient_fraction: must lie in (0, 1)");
  return cfg;
}

inline json numerics_json(const NumericConfig& cfg) {
  return json{{"hbar", cfg.hbar},
              {"hermiticity_tol", cfg.hermiticity_tol},
              {"gap_tol_rel", cfg.gap_tol_rel},
              {"fd_step", cfg.fd_step},
              {"pivot_tie_rel", cfg.pivot_tie_rel},
              {"gauge_imag_tol", cfg.gauge_imag_tol},
              {"transport_overlap_min", cfg.transport_overlap_min},
              {"antisym_tol", cfg.antisym_tol},
              {"inertia_sym_tol", cfg.inertia_sym_tol},
              {"inverse_residual_tol", cfg.inverse_residual_tol},
              {"dt_range_max", cfg.dt_range_max},
              {"norm_drift_tol", cfg.norm_drift_tol},
              {"expm_dim_cap", cfg.expm_dim_cap},
              {"transient_fraction", cfg.transient_fraction}};
}

// ---------------------------------------------------------------------------
// Model factory.
// ---------------------------------------------------------------------------

struct ModelBundle {
  std::unique_ptr<FastModel> model;
  json normalized;
};

inline ModelBundle make_model(const json& m, const NumericConfig& cfg,
                              std::uint64_t seed_override = 0) {
  require(m.is_object(), "model: expected an object");
  const std::string kind = detail::require_string(m, "model", "kind");
  ModelBundle out;

  if (kind == "spin") {
    detail::check_keys(m, "model",
                       {"kind", "profile", "twice_spin", "g_b", "kappa0", "ripple_amp",
                        "ripple_q", "tilt_c"});
    const std::string profile = detail::get_string(m, "model", "profile", "planar");
    models::SpinProfile p;
    if (profile == "planar") p = models::SpinProfile::planar;
    else if (profile == "ripple") p = models::SpinProfile::ripple;
    else if (profile == "sphere") p = models::SpinProfile::sphere;
    else if (profile == "tilt") p = models::SpinProfile::tilt;
    else throw ValidationError("model.profile: unknown profile '" + profile + "'");
    models::SpinFieldParams sp;
    sp.twice_spin = static_cast<int>(detail::get_int(m, "model", "twice_spin", 1));
    sp.g_b = detail::get_number(m, "model", "g_b", 1.0);
    sp.kappa0 = detail::get_number(m, "model", "kappa0", 1.0);
    sp.ripple_amp = detail::get_number(m, "model", "ripple_amp", 0.0);
    sp.ripple_q = detail::get_number(m, "model", "ripple_q", 1.0);
    sp.tilt_c = detail::get_number(m, "model", "tilt_c", 0.5);
    sp.hbar = cfg.hbar;
    out.normalized = json{{"kind", kind},          {"profile", profile},
                          {"twice_spin", sp.twice_spin}, {"g_b", sp.g_b},
                          {"kappa0", sp.kappa0},   {"ripple_amp", sp.ripple_amp},
                          {"ripple_q", sp.ripple_q}, {"tilt_c", sp.tilt_c}};
    out.model = std::make_unique<models::SpinFieldModel>(p, sp);
    return out;
  }

  if (kind == "two-level") {
    detail::check_keys(m, "model", {"kind", "form", "delta", "slope"});
    const std::string form = detail::require_string(m, "model", "form");
    if (form == "linear-sweep") {
      const double delta = detail::require_number(m, "model", "delta");
      const double slope = detail::require_number(m, "model", "slope");
      out.normalized = json{{"kind", kind}, {"form", form}, {"delta", delta}, {"slope", slope}};
      out.model = std::make_unique<models::TwoLevelCrossingModel>(
          models::TwoLevelCrossingModel::linear_sweep(delta, slope, cfg.hbar));
      return out;
    }
    if (form == "radial-plane") {
      require(!detail::find(m, "delta") && !detail::find(m, "slope"),
              "model: radial-plane takes no delta or slope");
      out.normalized = json{{"kind", kind}, {"form", form}};
      out.model = std::make_unique<models::TwoLevelCrossingModel>(
          models::TwoLevelCrossingModel::radial_plane(cfg.hbar));
      return out;
    }
    throw ValidationError("model.form: unknown form '" + form + "'");
  }

  if (kind == "moving-well") {
    detail::check_keys(m, "model",
                       {"kind", "points", "spacing", "mass", "shape", "depth", "width", "omega",
                        "stencil"});
    models::MovingWellParams wp;
    wp.points = static_cast<int>(detail::get_int(m, "model", "points", wp.points));
    wp.spacing = detail::get_number(m, "model", "spacing", wp.spacing);
    wp.mass = detail::get_number(m, "model", "mass", wp.mass);
    const std::string shape = detail::get_string(m, "model", "shape", "gaussian");
    if (shape == "gaussian") wp.shape = models::WellShape::gaussian;
    else if (shape == "harmonic") wp.shape = models::WellShape::harmonic;
    else throw ValidationError("model.shape: unknown shape '" + shape + "'");
    wp.depth = detail::get_number(m, "model", "depth", wp.depth);
    wp.width = detail::get_number(m, "model", "width", wp.width);
    wp.omega = detail::get_number(m, "model", "omega", wp.omega);
    wp.stencil = static_cast<int>(detail::get_int(m, "model", "stencil", wp.stencil));
    wp.hbar = cfg.hbar;
    out.normalized = json{{"kind", kind},     {"points", wp.points}, {"spacing", wp.spacing},
                          {"mass", wp.mass},  {"shape", shape},      {"depth", wp.depth},
                          {"width", wp.width}, {"omega", wp.omega},  {"stencil", wp.stencil}};
    out.model = std::make_unique<models::MovingWellModel>(wp);
    return out;
  }

  if (kind == "cranked-oscillator") {
    detail::check_keys(m, "model",
                       {"kind", "omega_x", "omega_z", "n_max_x", "n_max_z", "mass"});
    models::CrankedOscillatorParams cp;
    cp.omega_x = detail::get_number(m, "model", "omega_x", cp.omega_x);
    cp.omega_z = detail::get_number(m, "model", "omega_z", cp.omega_z);
    cp.n_max_x = static_cast<int>(detail::get_int(m, "model", "n_max_x", cp.n_max_x));
    cp.n_max_z = static_cast<int>(detail::get_int(m, "model", "n_max_z", cp.n_max_z));
    cp.mass = detail::get_number(m, "model", "mass", cp.mass);
    cp.hbar = cfg.hbar;
    out.normalized = json{{"kind", kind},         {"omega_x", cp.omega_x},
                          {"omega_z", cp.omega_z}, {"n_max_x", cp.n_max_x},
                          {"n_max_z", cp.n_max_z}, {"mass", cp.mass}};
    out.model = std::make_unique<models::CrankedOscillatorModel>(cp);
    return out;
  }

  if (kind == "random-hermitian") {
    detail::check_keys(m, "model",
                       {"kind", "dim", "parameter_dim", "seed", "scale", "slope_scale"});
    models::RandomHermitianParams rp;
    rp.dim = static_cast<int>(detail::get_int(m, "model", "dim", rp.dim));
    rp.parameter_dim =
        static_cast<int>(detail::get_int(m, "model", "parameter_dim", rp.parameter_dim));
    rp.seed = static_cast<std::uint64_t>(detail::get_int(m, "model", "seed", 1));
    if (seed_override != 0) rp.seed = seed_override;
    rp.scale = detail::get_number(m, "model", "scale", rp.scale);
    rp.slope_scale = detail::get_number(m, "model", "slope_scale", rp.slope_scale);
    rp.hbar = cfg.hbar;
    out.normalized = json{{"kind", kind},
                          {"dim", rp.dim},
                          {"parameter_dim", rp.parameter_dim},
                          {"seed", rp.seed},
                          {"scale", rp.scale},
                          {"slope_scale", rp.slope_scale}};
    out.model = std::make_unique<models::RandomHermitianModel>(rp);
    return out;
  }

  throw ValidationError("model.kind: unknown kind '" + kind + "'");
}

struct ModelInfo {
  std::string kind;
  std::string summary;
  std::string keys;
};

inline std::vector<ModelInfo> model_catalog() {
  return {
      {"spin",
       "spin in a unit field whose direction varies with the parameters; profiles: planar, "
       "ripple, sphere, tilt",
       "profile, twice_spin, g_b, kappa0, ripple_amp, ripple_q, tilt_c"},
      {"two-level",
       "two levels around an avoided crossing; forms: linear-sweep (gap delta, slope), "
       "radial-plane (conical intersection)",
       "form, delta, slope"},
      {"moving-well",
       "one particle on a grid in a well that rides on the slow coordinate; shapes: gaussian, "
       "harmonic",
       "points, spacing, mass, shape, depth, width, omega, stencil"},
      {"cranked-oscillator",
       "anisotropic oscillator whose principal axes rotate with the angle parameter",
       "omega_x, omega_z, n_max_x, n_max_z, mass"},
      {"random-hermitian", "seeded dense random Hermitian pencil, linear in the parameters",
       "dim, parameter_dim, seed, scale, slope_scale"},
  };
}

// ---------------------------------------------------------------------------
// Run options and results.
// ---------------------------------------------------------------------------

inline std::filesystem::path default_out_root() {
  if (const char* env = std::getenv("ADIABAT_OUT_ROOT")) return env;
  return "runs";
}

struct RunOptions {
  std::filesystem::path out_root = default_out_root();
  int threads = 1;
  std::uint64_t seed = 0;  // nonzero overrides a random model's seed
  bool quiet = false;
};

struct RunResult {
  std::filesystem::path directory;
  json manifest;
};

// ---------------------------------------------------------------------------
// The experiment itself.
// ---------------------------------------------------------------------------

class Experiment {
 public:
  Experiment(const json& raw, RunOptions options = {}) : opt_(std::move(options)) {
    detail::check_keys(raw, "spec", {"task", "name", "numerics", "model", "parameters"});
    task_ = detail::require_string(raw, "spec", "task");
    name_ = detail::get_string(raw, "spec", "name", task_);
    for (char c : name_) {
      require(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_',
              "spec.name: use letters, digits, '-' and '_' only");
    }
    cfg_ = parse_numerics(raw);

    const json* params = detail::find(raw, "parameters");
    const json empty = json::object();
    const json& p = params ? *params : empty;

    const bool model_free = (task_ == "leakage-scan" || task_ == "inglis");
    if (model_free) {
      require(!detail::find(raw, "model"), "spec: task '" + task_ + "' builds its own models");
    } else {
      const json* m = detail::find(raw, "model");
      if (!m) throw ValidationError("spec.model: required for task '" + task_ + "'");
      auto bundle = make_model(*m, cfg_, opt_.seed);
      model_ = std::move(bundle.model);
      model_echo_ = std::move(bundle.normalized);
    }

    if (task_ == "geometry-grid") parse_geometry_grid(p);
    else if (task_ == "crossing-scan") parse_crossing_scan(p);
    else if (task_ == "velocity-sweep") parse_velocity_sweep(p);
    else if (task_ == "leakage-scan") parse_leakage_scan(p);
    else if (task_ == "trajectory") parse_trajectory(p);
    else if (task_ == "trk") parse_trk(p);
    else if (task_ == "inglis") parse_inglis(p);
    else if (task_ == "order-audit") parse_order_audit(p);
    else throw ValidationError("spec.task: unknown task '" + task_ + "'");
  }

  const std::string& name() const { return name_; }
  const std::string& task() const { return task_; }

  json normalized() const {
    json out{{"task", task_}, {"name", name_}, {"numerics", numerics_json(cfg_)},
             {"parameters", params_}};
    if (!model_echo_.is_null()) out["model"] = model_echo_;
    return out;
  }

  RunResult run() const {
    std::vector<std::pair<std::string, io::CsvTable>> tables;
    json summary;
    if (task_ == "geometry-grid") run_geometry_grid(tables, summary);
    else if (task_ == "crossing-scan") run_crossing_scan(tables, summary);
    else if (task_ == "velocity-sweep") run_velocity_sweep(tables, summary);
    else if (task_ == "leakage-scan") run_leakage_scan(tables, summary);
    else if (task_ == "trajectory") run_trajectory(tables, summary);
    else if (task_ == "trk") run_trk(tables, summary);
    else if (task_ == "inglis") run_inglis(tables, summary);
    else run_order_audit(tables, summary);

    RunResult result;
    result.directory = opt_.out_root / name_;
    io::ensure_directory(result.directory);

    json outputs = json::array();
    for (const auto& [file, table] : tables) {
      const std::string text = io::csv_string(table);
      io::write_text_atomic(result.directory / file, text);
      outputs.push_back(json{{"file", file},
                             {"rows", table.rows.size()},
                             {"fnv1a64", io::fnv1a64_hex(text)}});
    }

    result.manifest = json{{"name", name_},
                           {"task", task_},
                           {"created_utc", detail::timestamp_utc()},
                           {"library_version", ADIABAT_VERSION_STRING},
                           {"threads", opt_.threads},
                           {"seed", opt_.seed},
                           {"spec", normalized()},
                           {"outputs", outputs},
                           {"summary", summary},
                           {"status", "ok"}};
    io::write_json(result.directory / "manifest.json", result.manifest);
    return result;
  }

 private:
  // --- geometry-grid -------------------------------------------------------

  void parse_geometry_grid(const json& p) {
    detail::check_keys(p, "parameters", {"axes", "level", "mass"});
    const json* axes = detail::find(p, "axes");
    if (!axes || !axes->is_array() || axes->empty())
      throw ValidationError("parameters.axes: expected a non-empty array");
    require(static_cast<int>(axes->size()) == model_->parameter_dim(),
            "parameters.axes: need one axis per model parameter (" +
                std::to_string(model_->parameter_dim()) + ")");
    json norm_axes = json::array();
    for (size_t i = 0; i < axes->size(); ++i) {
      const json& a = (*axes)[i];
      const std::string what = "parameters.axes[" + std::to_string(i) + "]";
      detail::check_keys(a, what, {"name", "lo", "hi", "count"});
      const std::string fallback = model_->parameter_names()[i];
      const std::string name = detail::get_string(a, what, "name", fallback);
      const double lo = detail::require_number(a, what, "lo");
      const double hi = detail::get_number(a, what, "hi", lo);
      const int count = static_cast<int>(detail::get_int(a, what, "count", 1));
      require(count >= 1, what + ".count: must be at least 1");
      require(count == 1 ? true : hi > lo, what + ": hi must exceed lo when count > 1");
      norm_axes.push_back(json{{"name", name}, {"lo", lo}, {"hi", hi}, {"count", count}});
    }
    const int level = static_cast<int>(detail::get_int(p, "parameters", "level", 0));
    require(level >= 0 && level < model_->dim(), "parameters.level: out of range");
    params_ = json{{"axes", norm_axes}, {"level", level}};
    if (detail::find(p, "mass")) {
      const double mass = detail::require_number(p, "parameters", "mass");
      require(mass > 0.0, "parameters.mass: must be positive");
      params_["mass"] = mass;
    } else {
      params_["mass"] = nullptr;
    }
  }

  std::vector<grid::AxisSpec> axes_from_params() const {
    std::vector<grid::AxisSpec> axes;
    for (const auto& a : params_.at("axes")) {
      axes.push_back(grid::AxisSpec{a.at("name").get<std::string>(), a.at("lo").get<double>(),
                                    a.at("hi").get<double>(), a.at("count").get<int>()});
    }
    return axes;
  }

  void run_geometry_grid(std::vector<std::pair<std::string, io::CsvTable>>& tables,
                         json& summary) const {
    const auto axes = axes_from_params();
    const int level = params_.at("level").get<int>();
    const bool with_mass = !params_.at("mass").is_null();
    const double mass = with_mass ? params_.at("mass").get<double>() : 0.0;
    const int d = model_->parameter_dim();

    const auto points = grid::grid_points(axes);
    const auto result = geometry::geometry_grid(*model_, points, level, cfg_, opt_.threads);

    io::CsvTable table;
    for (const auto& a : axes) table.header.push_back(a.name);
    table.header.insert(table.header.end(), {"energy", "min_gap", "gauge_residual"});
    for (int i = 0; i < d; ++i) table.header.push_back("A_" + std::to_string(i));
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j)
        table.header.push_back("g_" + std::to_string(i) + std::to_string(j));
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        table.header.push_back("F_" + std::to_string(i) + std::to_string(j));
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j)
        table.header.push_back("I_" + std::to_string(i) + std::to_string(j));
    if (with_mass) {
      table.header.push_back("phi");
      table.header.push_back("phi_primitive");
    }

    for (size_t k = 0; k < points.size(); ++k) {
      if (!result.tensors[k]) continue;
      const auto& t = *result.tensors[k];
      std::vector<double> row;
      for (int i = 0; i < d; ++i) row.push_back(points[k][i]);
      row.insert(row.end(), {t.energy, t.min_gap, t.gauge_residual});
      for (int i = 0; i < d; ++i) row.push_back(t.connection[i]);
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) row.push_back(t.metric(i, j));
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) row.push_back(t.curvature(i, j));
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) row.push_back(t.induced_inertia(i, j));
      if (with_mass) {
        const MatrixR total = geometry::scalar_inertia(mass, d) + t.induced_inertia;
        const MatrixR mobility = geometry::checked_inverse(total, cfg_, "geometry-grid: inertia");
        const double h2 = cfg_.hbar * cfg_.hbar;
        row.push_back(0.5 * h2 * (mobility * t.metric).trace());
        row.push_back(0.5 * h2 / mass * t.metric.trace());
      }
      table.add_row(std::move(row));
    }

    json failures = json::array();
    for (const auto& f : result.failures) {
      if (failures.size() >= 20) break;
      failures.push_back(json{{"index", f.index},
                              {"point", detail::point_json(f.point)},
                              {"message", f.message}});
    }
    summary = json{{"points", points.size()},
                   {"written", table.rows.size()},
                   {"failed", result.failures.size()},
                   {"failures", failures}};
    tables.emplace_back("results.csv", std::move(table));
  }

  // --- crossing-scan -------------------------------------------------------

  void parse_crossing_scan(const json& p) {
    detail::check_keys(p, "parameters", {"x0", "direction", "lo", "hi", "count", "levels",
                                         "transport"});
    const auto x0 = detail::require_numbers(p, "parameters", "x0");
    const auto dir = detail::require_numbers(p, "parameters", "direction");
    require(static_cast<int>(x0.size()) == model_->parameter_dim(),
            "parameters.x0: wrong dimension");
    require(dir.size() == x0.size(), "parameters.direction: wrong dimension");
    require(detail::to_point(dir).norm() > 0.0, "parameters.direction: must be nonzero");
    const double lo = detail::require_number(p, "parameters", "lo");
    const double hi = detail::require_number(p, "parameters", "hi");
    require(hi > lo, "parameters: hi must exceed lo");
    const int count = static_cast<int>(detail::get_int(p, "parameters", "count", 101));
    require(count >= 2, "parameters.count: must be at least 2");
    const int levels =
        static_cast<int>(detail::get_int(p, "parameters", "levels", std::min(model_->dim(), 8)));
    require(levels >= 1 && levels <= model_->dim(), "parameters.levels: out of range");
    params_ = json{{"x0", x0},
                   {"direction", dir},
                   {"lo", lo},
                   {"hi", hi},
                   {"count", count},
                   {"levels", levels},
                   {"transport", detail::get_bool(p, "parameters", "transport", true)}};
  }

  void run_crossing_scan(std::vector<std::pair<std::string, io::CsvTable>>& tables,
                         json& summary) const {
    const auto x0 = detail::to_point(params_.at("x0").get<std::vector<double>>());
    const auto dir = detail::to_point(params_.at("direction").get<std::vector<double>>());
    const double lo = params_.at("lo").get<double>();
    const double hi = params_.at("hi").get<double>();
    const int count = params_.at("count").get<int>();
    const int levels = params_.at("levels").get<int>();

    std::vector<spectral::SpectralData> ray;
    std::vector<double> offsets;
    for (int k = 0; k < count; ++k) {
      const double s = lo + (hi - lo) * k / (count - 1);
      offsets.push_back(s);
      ray.push_back(spectral::eigensystem(*model_, x0 + s * dir, cfg_));
    }
    if (params_.at("transport").get<bool>())
      ray = spectral::parallel_transport_gauge(std::move(ray), cfg_);

    io::CsvTable table;
    table.header.push_back("s");
    for (int l = 0; l < levels; ++l) table.header.push_back("E_" + std::to_string(l));
    table.header.push_back("min_gap");

    double global_min_gap = std::numeric_limits<double>::infinity();
    for (int k = 0; k < count; ++k) {
      std::vector<double> row{offsets[k]};
      double min_gap = std::numeric_limits<double>::infinity();
      for (int l = 0; l < levels; ++l) {
        row.push_back(ray[k].energies[l]);
        if (l > 0) min_gap = std::min(min_gap, ray[k].energies[l] - ray[k].energies[l - 1]);
      }
      if (levels == 1 && ray[k].dim() > 1)
        min_gap = ray[k].energies[1] - ray[k].energies[0];
      row.push_back(min_gap);
      global_min_gap = std::min(global_min_gap, min_gap);
      table.add_row(std::move(row));
    }
    summary = json{{"min_gap", global_min_gap}};
    tables.emplace_back("results.csv", std::move(table));
  }

  // --- velocity-sweep ------------------------------------------------------

  void parse_velocity_sweep(const json& p) {
    detail::check_keys(p, "parameters", {"level", "x0", "direction", "speeds", "t_final", "dt"});
    const int level = static_cast<int>(detail::get_int(p, "parameters", "level", 0));
    require(level >= 0 && level < model_->dim(), "parameters.level: out of range");
    const auto x0 = detail::require_numbers(p, "parameters", "x0");
    require(static_cast<int>(x0.size()) == model_->parameter_dim(),
            "parameters.x0: wrong dimension");
    auto dir = detail::require_numbers(p, "parameters", "direction");
    require(dir.size() == x0.size(), "parameters.direction: wrong dimension");
    const double dn = detail::to_point(dir).norm();
    require(dn > 0.0, "parameters.direction: must be nonzero");
    for (auto& v : dir) v /= dn;
    const auto speeds = detail::require_numbers(p, "parameters", "speeds");
    for (double s : speeds) require(s > 0.0, "parameters.speeds: must be positive");
    const double t_final = detail::require_number(p, "parameters", "t_final");
    const double dt = detail::require_number(p, "parameters", "dt");
    require(t_final > 0.0 && dt > 0.0, "parameters: t_final and dt must be positive");
    params_ = json{{"level", level}, {"x0", x0},           {"direction", dir},
                   {"speeds", speeds}, {"t_final", t_final}, {"dt", dt}};
  }

  void run_velocity_sweep(std::vector<std::pair<std::string, io::CsvTable>>& tables,
                          json& summary) const {
    const auto result = dynamics::velocity_sweep(
        *model_, params_.at("level").get<int>(),
        detail::to_point(params_.at("x0").get<std::vector<double>>()),
        detail::to_point(params_.at("direction").get<std::vector<double>>()),
        params_.at("speeds").get<std::vector<double>>(), params_.at("t_final").get<double>(),
        params_.at("dt").get<double>(), cfg_);

    io::CsvTable table;
    table.header = {"speed", "mean_shift", "inertia_estimate"};
    std::vector<double> speeds, shifts;
    int censored = 0;
    for (const auto& row : result.rows) {
      table.add_row({row.speed, row.mean_shift, row.inertia_estimate});
      if (row.mean_shift >= 1e-14) {
        speeds.push_back(row.speed);
        shifts.push_back(row.mean_shift);
      } else {
        ++censored;
      }
    }
    summary = json{{"reference_inertia", result.reference_inertia}, {"censored", censored}};
    try {
      const auto fit = analysis::fit_power_law(speeds, shifts);
      summary["shift_fit"] = json{{"exponent", fit.exponent},
                                  {"log_prefactor", fit.log_prefactor},
                                  {"max_log_residual", fit.max_log_residual}};
    } catch (const ValidationError& e) {
      summary["shift_fit"] = nullptr;
      summary["shift_fit_skipped"] = e.what();
    }
    tables.emplace_back("results.csv", std::move(table));
  }

  // --- leakage-scan --------------------------------------------------------

  void parse_leakage_scan(const json& p) {
    detail::check_keys(p, "parameters", {"slope", "deltas", "speeds", "x_max", "dt"});
    const double slope = detail::get_number(p, "parameters", "slope", 1.0);
    require(slope > 0.0, "parameters.slope: must be positive");
    const auto deltas = detail::require_numbers(p, "parameters", "deltas");
    for (double d : deltas) require(d > 0.0, "parameters.deltas: must be positive");
    const auto speeds = detail::require_numbers(p, "parameters", "speeds");
    for (double s : speeds) require(s > 0.0, "parameters.speeds: must be positive");
    const double x_max = detail::require_number(p, "parameters", "x_max");
    const double dt = detail::require_number(p, "parameters", "dt");
    require(x_max > 0.0 && dt > 0.0, "parameters: x_max and dt must be positive");
    params_ = json{{"slope", slope}, {"deltas", deltas}, {"speeds", speeds},
                   {"x_max", x_max}, {"dt", dt}};
  }

  void run_leakage_scan(std::vector<std::pair<std::string, io::CsvTable>>& tables,
                        json& summary) const {
    const double slope = params_.at("slope").get<double>();
    const auto deltas = params_.at("deltas").get<std::vector<double>>();
    const auto speeds = params_.at("speeds").get<std::vector<double>>();
    const double x_max = params_.at("x_max").get<double>();
    const double dt = params_.at("dt").get<double>();

    io::CsvTable table;
    table.header = {"delta", "speed", "max_leakage", "final_leakage", "predicted"};

    json fits = json::array();
    for (double speed : speeds) {
      std::vector<double> d2, logp;
      for (double delta : deltas) {
        const auto model = models::TwoLevelCrossingModel::linear_sweep(delta, slope, cfg_.hbar);
        ParameterPoint start(1);
        start << -x_max;
        VectorR velocity(1);
        velocity << speed;
        const auto leak = dynamics::leakage_run(model, dynamics::linear_path(start, velocity), 0,
                                                2.0 * x_max / speed, dt, cfg_);
        const double predicted =
            std::exp(-M_PI * delta * delta / (cfg_.hbar * slope * speed));
        table.add_row({delta, speed, leak.max_leakage, leak.final_leakage, predicted});
        if (leak.final_leakage >= 1e-14) {
          d2.push_back(delta * delta);
          logp.push_back(std::log(leak.final_leakage));
        }
      }
      json fit;
      fit["speed"] = speed;
      fit["censored"] = deltas.size() - d2.size();
      if (d2.size() >= 2) {
        // Least squares for ln P = a + b delta^2; b should be the gap law.
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (size_t i = 0; i < d2.size(); ++i) {
          sx += d2[i];
          sy += logp[i];
          sxx += d2[i] * d2[i];
          sxy += d2[i] * logp[i];
        }
        const double n = static_cast<double>(d2.size());
        const double b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        fit["log_slope"] = b;
        fit["expected_log_slope"] = -M_PI / (cfg_.hbar * slope * speed);
      } else {
        fit["log_slope"] = nullptr;
      }
      fits.push_back(fit);
    }
    summary = json{{"gap_law_fits", fits}};
    tables.emplace_back("results.csv", std::move(table));
  }

  // --- trajectory ----------------------------------------------------------

  void parse_trajectory(const json& p) {
    detail::check_keys(p, "parameters",
                       {"level", "mass", "x0", "v0", "t_final", "dt", "store_every", "provider",
                        "grid_axes", "external_gradient", "compare_coupled"});
    const int level = static_cast<int>(detail::get_int(p, "parameters", "level", 0));
    require(level >= 0 && level < model_->dim(), "parameters.level: out of range");
    const double mass = detail::require_number(p, "parameters", "mass");
    require(mass > 0.0, "parameters.mass: must be positive");
    const auto x0 = detail::require_numbers(p, "parameters", "x0");
    require(static_cast<int>(x0.size()) == model_->parameter_dim(),
            "parameters.x0: wrong dimension");
    const auto v0 = detail::require_numbers(p, "parameters", "v0");
    require(v0.size() == x0.size(), "parameters.v0: wrong dimension");
    const double t_final = detail::require_number(p, "parameters", "t_final");
    const double dt = detail::require_number(p, "parameters", "dt");
    require(t_final > 0.0 && dt > 0.0, "parameters: t_final and dt must be positive");
    const int store_every =
        static_cast<int>(detail::get_int(p, "parameters", "store_every", 1));
    require(store_every >= 1, "parameters.store_every: must be at least 1");

    const std::string provider = detail::get_string(p, "parameters", "provider", "exact");
    require(provider == "exact" || provider == "grid",
            "parameters.provider: expected 'exact' or 'grid'");
    json norm_axes = nullptr;
    if (provider == "grid") {
      const json* axes = detail::find(p, "grid_axes");
      if (!axes || !axes->is_array() ||
          static_cast<int>(axes->size()) != model_->parameter_dim())
        throw ValidationError("parameters.grid_axes: need one axis per model parameter");
      norm_axes = json::array();
      for (size_t i = 0; i < axes->size(); ++i) {
        const json& a = (*axes)[i];
        const std::string what = "parameters.grid_axes[" + std::to_string(i) + "]";
        detail::check_keys(a, what, {"name", "lo", "hi", "count"});
        const std::string name =
            detail::get_string(a, what, "name", model_->parameter_names()[i]);
        const double lo = detail::require_number(a, what, "lo");
        const double hi = detail::require_number(a, what, "hi");
        const int count = static_cast<int>(detail::get_int(a, what, "count", 2));
        require(hi > lo && count >= 2, what + ": need hi > lo and count >= 2");
        norm_axes.push_back(json{{"name", name}, {"lo", lo}, {"hi", hi}, {"count", count}});
      }
    } else {
      require(!detail::find(p, "grid_axes"),
              "parameters.grid_axes: only meaningful with provider 'grid'");
    }

    json external = nullptr;
    if (detail::find(p, "external_gradient")) {
      const auto g = detail::require_numbers(p, "parameters", "external_gradient");
      require(g.size() == x0.size(), "parameters.external_gradient: wrong dimension");
      external = g;
    }
    const bool compare = detail::get_bool(p, "parameters", "compare_coupled", false);
    require(!(compare && !external.is_null()),
            "parameters: the coupled reference carries no external potential; drop one");

    params_ = json{{"level", level},   {"mass", mass},
                   {"x0", x0},         {"v0", v0},
                   {"t_final", t_final}, {"dt", dt},
                   {"store_every", store_every}, {"provider", provider},
                   {"grid_axes", norm_axes}, {"external_gradient", external},
                   {"compare_coupled", compare}};
  }

  void run_trajectory(std::vector<std::pair<std::string, io::CsvTable>>& tables,
                      json& summary) const {
    const int level = params_.at("level").get<int>();
    const double mass = params_.at("mass").get<double>();
    const auto x0 = detail::to_point(params_.at("x0").get<std::vector<double>>());
    const auto v0 = detail::to_point(params_.at("v0").get<std::vector<double>>());
    const double t_final = params_.at("t_final").get<double>();
    const double dt = params_.at("dt").get<double>();
    const int store_every = params_.at("store_every").get<int>();
    const int d = model_->parameter_dim();
    const MatrixR primitive = geometry::scalar_inertia(mass, d);

    fields::ExternalPotential external;
    if (!params_.at("external_gradient").is_null()) {
      const auto g = detail::to_point(params_.at("external_gradient").get<std::vector<double>>());
      external.value = [g](const ParameterPoint& x) { return g.dot(x); };
      external.gradient = [g](const ParameterPoint&) { return g; };
    }
    const fields::ExactFieldProvider exact(*model_, level, primitive, cfg_, external);

    std::unique_ptr<fields::GridFieldProvider> gridded;
    if (params_.at("provider").get<std::string>() == "grid") {
      std::vector<grid::AxisSpec> axes;
      for (const auto& a : params_.at("grid_axes")) {
        axes.push_back(grid::AxisSpec{a.at("name").get<std::string>(),
                                      a.at("lo").get<double>(), a.at("hi").get<double>(),
                                      a.at("count").get<int>()});
      }
      gridded = std::make_unique<fields::GridFieldProvider>(
          axes, [&](const ParameterPoint& x) { return exact.sample(x); }, opt_.threads);
      // Audit the interpolation against the exact fields at low-discrepancy
      // probes inside the box.
      std::vector<ParameterPoint> probes;
      for (int k = 1; k <= 5; ++k) {
        ParameterPoint probe(d);
        for (int i = 0; i < d; ++i) {
          const double u = std::fmod(0.5 + k * 0.6180339887498949 * (i + 1), 1.0);
          probe[i] = axes[i].lo + u * (axes[i].hi - axes[i].lo);
        }
        probes.push_back(probe);
      }
      const auto dev = fields::provider_deviation(*gridded, exact, probes);
      summary["grid_deviation"] = json{{"potential", dev.potential},
                                       {"scalar_potential", dev.scalar_potential},
                                       {"connection", dev.connection},
                                       {"mobility", dev.mobility}};
    }
    const fields::EffectiveFieldProvider& provider =
        gridded ? static_cast<const fields::EffectiveFieldProvider&>(*gridded) : exact;

    const auto p0 = dynamics::momentum_for_velocity(provider, x0, v0);
    const auto record =
        dynamics::effective_trajectory(provider, x0, p0, t_final, dt, store_every, cfg_);

    io::CsvTable table;
    table.header = {"t"};
    for (int i = 0; i < d; ++i) table.header.push_back("x_" + std::to_string(i));
    for (int i = 0; i < d; ++i) table.header.push_back("p_" + std::to_string(i));
    for (int i = 0; i < d; ++i) table.header.push_back("v_" + std::to_string(i));
    table.header.push_back("energy");
    for (const auto& s : record.samples) {
      std::vector<double> row{s.t};
      for (int i = 0; i < d; ++i) row.push_back(s.position[i]);
      for (int i = 0; i < d; ++i) row.push_back(s.momentum[i]);
      for (int i = 0; i < d; ++i) row.push_back(s.velocity[i]);
      row.push_back(s.energy);
      table.add_row(std::move(row));
    }

    double drift = 0.0;
    for (const auto& s : record.samples)
      drift = std::max(drift, std::abs(s.energy - record.samples.front().energy));
    summary["energy_drift"] = drift;
    summary["steps"] = record.samples.empty() ? 0 : static_cast<int>(record.samples.size()) - 1;

    if (params_.at("compare_coupled").get<bool>()) {
      const auto psi0 = dynamics::dressed_state(*model_, x0, v0, level, cfg_);
      const auto coupled = dynamics::coupled_reference(*model_, primitive, x0, v0, psi0, t_final,
                                                       dt, level, store_every, cfg_);
      io::CsvTable ct;
      ct.header = {"t"};
      for (int i = 0; i < d; ++i) ct.header.push_back("x_" + std::to_string(i));
      for (int i = 0; i < d; ++i) ct.header.push_back("v_" + std::to_string(i));
      ct.header.insert(ct.header.end(), {"quantum_energy", "total_energy", "population"});
      double max_dev = 0.0, min_pop = 1.0;
      for (size_t k = 0; k < coupled.samples.size(); ++k) {
        const auto& s = coupled.samples[k];
        std::vector<double> row{s.t};
        for (int i = 0; i < d; ++i) row.push_back(s.position[i]);
        for (int i = 0; i < d; ++i) row.push_back(s.velocity[i]);
        row.insert(row.end(), {s.quantum_energy, s.total_energy, s.population});
        ct.add_row(std::move(row));
        if (k < record.samples.size()) {
          max_dev = std::max(max_dev,
                             (record.samples[k].position - s.position).cwiseAbs().maxCoeff());
        }
        min_pop = std::min(min_pop, s.population);
      }
      summary["coupled"] = json{{"max_position_deviation", max_dev},
                                {"min_population", min_pop},
                                {"norm_drift", coupled.norm_drift}};
      tables.emplace_back("coupled.csv", std::move(ct));
    }
    tables.emplace_back("results.csv", std::move(table));
  }

  // --- trk -----------------------------------------------------------------

  void parse_trk(const json& p) {
    require(model_echo_.at("kind") == "moving-well", "spec: task 'trk' needs a moving-well model");
    detail::check_keys(p, "parameters", {"box", "points", "level"});
    const double box = detail::require_number(p, "parameters", "box");
    require(box > 0.0, "parameters.box: must be positive");
    const json* pts = detail::find(p, "points");
    if (!pts || !pts->is_array() || pts->size() < 2)
      throw ValidationError("parameters.points: expected an array of at least two node counts");
    std::vector<int> counts;
    for (const auto& e : *pts) {
      if (!e.is_number_integer()) throw ValidationError("parameters.points: expected integers");
      const int c = e.get<int>();
      require(c >= 9, "parameters.points: counts must be at least 9");
      counts.push_back(c);
    }
    const int level = static_cast<int>(detail::get_int(p, "parameters", "level", 0));
    require(level >= 0, "parameters.level: must be non-negative");
    params_ = json{{"box", box}, {"points", counts}, {"level", level}};
  }

  void run_trk(std::vector<std::pair<std::string, io::CsvTable>>& tables, json& summary) const {
    const double box = params_.at("box").get<double>();
    const auto counts = params_.at("points").get<std::vector<int>>();
    const int level = params_.at("level").get<int>();

    io::CsvTable table;
    table.header = {"points", "spacing", "trk_sum", "abs_error"};
    std::vector<double> errors;
    for (int count : counts) {
      models::MovingWellParams wp;
      wp.points = count;
      wp.spacing = box / (count - 1);
      wp.mass = model_echo_.at("mass").get<double>();
      wp.shape = model_echo_.at("shape") == "harmonic" ? models::WellShape::harmonic
                                                       : models::WellShape::gaussian;
      wp.depth = model_echo_.at("depth").get<double>();
      wp.width = model_echo_.at("width").get<double>();
      wp.omega = model_echo_.at("omega").get<double>();
      wp.stencil = model_echo_.at("stencil").get<int>();
      wp.hbar = cfg_.hbar;
      const models::MovingWellModel well(wp);
      ParameterPoint origin(1);
      origin << 0.0;
      const auto data = spectral::eigensystem(well, origin, cfg_);
      const double sum =
          analysis::trk_sum(data, well.position_operator(), wp.mass, level, cfg_.hbar);
      table.add_row({static_cast<double>(count), wp.spacing, sum, std::abs(sum - 1.0)});
      errors.push_back(std::abs(sum - 1.0));
    }
    json ratios = json::array();
    for (size_t i = 1; i < errors.size(); ++i) {
      if (errors[i] > 0.0) ratios.push_back(errors[i - 1] / errors[i]);
      else ratios.push_back(nullptr);
    }
    summary = json{{"error_ratios", ratios}};
    tables.emplace_back("results.csv", std::move(table));
  }

  // --- inglis --------------------------------------------------------------

  void parse_inglis(const json& p) {
    detail::check_keys(p, "parameters",
                       {"omega0", "fillings", "ratio_guess", "max_iterations", "tol", "n_max"});
    const double omega0 = detail::require_number(p, "parameters", "omega0");
    require(omega0 > 0.0, "parameters.omega0: must be positive");
    const json* fills = detail::find(p, "fillings");
    if (!fills || !fills->is_array() || fills->empty())
      throw ValidationError("parameters.fillings: expected a non-empty array of integers");
    std::vector<int> fillings;
    for (const auto& e : *fills) {
      if (!e.is_number_integer())
        throw ValidationError("parameters.fillings: expected integers");
      const int n = e.get<int>();
      require(n >= 1, "parameters.fillings: must be at least 1");
      fillings.push_back(n);
    }
    json guess = nullptr;
    if (detail::find(p, "ratio_guess")) {
      guess = detail::require_number(p, "parameters", "ratio_guess");
      require(guess.get<double>() > 0.0, "parameters.ratio_guess: must be positive");
    }
    const int max_iterations =
        static_cast<int>(detail::get_int(p, "parameters", "max_iterations", 200));
    const double tol = detail::get_number(p, "parameters", "tol", 1e-12);
    const int n_max = static_cast<int>(detail::get_int(p, "parameters", "n_max", 8));
    require(n_max >= 2, "parameters.n_max: must be at least 2");
    params_ = json{{"omega0", omega0},   {"fillings", fillings},
                   {"ratio_guess", guess}, {"max_iterations", max_iterations},
                   {"tol", tol},          {"n_max", n_max}};
  }

  void run_inglis(std::vector<std::pair<std::string, io::CsvTable>>& tables,
                  json& summary) const {
    const double omega0 = params_.at("omega0").get<double>();
    const auto fillings = params_.at("fillings").get<std::vector<int>>();
    const int max_iterations = params_.at("max_iterations").get<int>();
    const double tol = params_.at("tol").get<double>();
    const int n_max = params_.at("n_max").get<int>();

    io::CsvTable table;
    table.header = {"n_fill", "omega_x", "omega_z", "s_x",  "s_z",
                    "iterations", "inertia",  "rigid",   "ratio"};
    json failures = json::array();
    for (int n_fill : fillings) {
      // Deformed fillings sit near axis ratio n_fill - 0.5; starting there
      // keeps the iteration away from the spurious spherical fixed point.
      const double guess = params_.at("ratio_guess").is_null()
                               ? std::max(1.0, n_fill - 0.5)
                               : params_.at("ratio_guess").get<double>();
      try {
        const auto shape = models::self_consistent_frequencies(omega0, n_fill, cfg_.hbar, guess,
                                                               max_iterations, tol);
        models::CrankedOscillatorParams cp;
        cp.omega_x = shape.omega_x;
        cp.omega_z = shape.omega_z;
        cp.n_max_x = n_max;
        cp.n_max_z = n_max;
        cp.hbar = cfg_.hbar;
        const models::CrankedOscillatorModel model(cp);
        const double inertia = models::inglis_inertia(model, shape.occupied, 0.0, cfg_);
        const double rigid = models::rigid_body_inertia(shape, cfg_.hbar);
        table.add_row({static_cast<double>(n_fill), shape.omega_x, shape.omega_z, shape.s_x,
                       shape.s_z, static_cast<double>(shape.iterations), inertia, rigid,
                       inertia / rigid});
      } catch (const Error& e) {
        failures.push_back(json{{"n_fill", n_fill}, {"message", e.what()}});
      }
    }
    summary = json{{"failures", failures}};
    tables.emplace_back("results.csv", std::move(table));
  }

  // --- order-audit ---------------------------------------------------------

  void parse_order_audit(const json& p) {
    detail::check_keys(p, "parameters",
                       {"level", "mass", "center", "speeds", "periods", "segments", "axis_a",
                        "axis_b"});
    require(model_->parameter_dim() >= 2, "spec: task 'order-audit' needs >= 2 parameters");
    const int level = static_cast<int>(detail::get_int(p, "parameters", "level", 0));
    require(level >= 0 && level < model_->dim(), "parameters.level: out of range");
    const double mass = detail::require_number(p, "parameters", "mass");
    require(mass > 0.0, "parameters.mass: must be positive");
    const auto center = detail::require_numbers(p, "parameters", "center");
    require(static_cast<int>(center.size()) == model_->parameter_dim(),
            "parameters.center: wrong dimension");
    const auto speeds = detail::require_numbers(p, "parameters", "speeds");
    const auto periods = detail::require_numbers(p, "parameters", "periods");
    for (double v : speeds) require(v > 0.0, "parameters.speeds: must be positive");
    for (double v : periods) require(v > 0.0, "parameters.periods: must be positive");
    const int segments = static_cast<int>(detail::get_int(p, "parameters", "segments", 128));
    require(segments >= 8, "parameters.segments: must be at least 8");
    const int axis_a = static_cast<int>(detail::get_int(p, "parameters", "axis_a", 0));
    const int axis_b = static_cast<int>(detail::get_int(p, "parameters", "axis_b", 1));
    require(axis_a >= 0 && axis_b >= 0 && axis_a < model_->parameter_dim() &&
                axis_b < model_->parameter_dim() && axis_a != axis_b,
            "parameters: axis_a and axis_b must be distinct parameter axes");
    params_ = json{{"level", level},     {"mass", mass},       {"center", center},
                   {"speeds", speeds},   {"periods", periods}, {"segments", segments},
                   {"axis_a", axis_a},   {"axis_b", axis_b}};
  }

  void run_order_audit(std::vector<std::pair<std::string, io::CsvTable>>& tables,
                       json& summary) const {
    const int level = params_.at("level").get<int>();
    const double mass = params_.at("mass").get<double>();
    const auto center = detail::to_point(params_.at("center").get<std::vector<double>>());
    const auto speeds = params_.at("speeds").get<std::vector<double>>();
    const auto periods = params_.at("periods").get<std::vector<double>>();
    const int segments = params_.at("segments").get<int>();
    const int axis_a = params_.at("axis_a").get<int>();
    const int axis_b = params_.at("axis_b").get<int>();
    const int d = model_->parameter_dim();

    const fields::ExactFieldProvider provider(*model_, level,
                                              geometry::scalar_inertia(mass, d), cfg_);

    io::CsvTable table;
    table.header = {"speed", "period", "radius", "scalar_action", "berry_action",
                    "inertial_action"};
    std::vector<double> vs, ts, scalar, berry, inertial;
    for (double period : periods) {
      for (double speed : speeds) {
        const auto actions =
            dynamics::loop_actions(provider, center, speed, period, segments, axis_a, axis_b);
        const double radius = speed * period / (2.0 * M_PI);
        table.add_row({speed, period, radius, actions.scalar_action, actions.berry_action,
                       actions.inertial_action});
        vs.push_back(speed);
        ts.push_back(period);
        scalar.push_back(actions.scalar_action);
        berry.push_back(actions.berry_action);
        inertial.push_back(actions.inertial_action);
      }
    }

    const auto fit_block = [&](const std::vector<double>& values) -> json {
      std::vector<double> fa, fb, fy;
      for (size_t i = 0; i < values.size(); ++i) {
        if (std::abs(values[i]) >= 1e-14) {
          fa.push_back(vs[i]);
          fb.push_back(ts[i]);
          fy.push_back(std::abs(values[i]));
        }
      }
      try {
        const auto fit = analysis::fit_two_powers(fa, fb, fy);
        return json{{"speed_exponent", fit.exponent_a},
                    {"period_exponent", fit.exponent_b},
                    {"log_prefactor", fit.log_prefactor},
                    {"max_log_residual", fit.max_log_residual},
                    {"censored", values.size() - fy.size()}};
      } catch (const ValidationError& e) {
        return json{{"skipped", e.what()}};
      }
    };
    summary = json{{"scalar_fit", fit_block(scalar)},
                   {"berry_fit", fit_block(berry)},
                   {"inertial_fit", fit_block(inertial)},
                   {"expected", json{{"scalar", json::array({0.0, 1.0})},
                                     {"berry", json::array({2.0, 2.0})},
                                     {"inertial", json::array({2.0, 1.0})}}}};
    tables.emplace_back("results.csv", std::move(table));
  }

  RunOptions opt_;
  std::string task_;
  std::string name_;
  NumericConfig cfg_;
  std::unique_ptr<FastModel> model_;
  json model_echo_;
  json params_;
};

// Validates without running; returns the spec with every default filled in.
inline json validate_spec(const json& raw) { return Experiment(raw).normalized(); }

inline RunResult run_spec(const json& raw, const RunOptions& options) {
  return Experiment(raw, options).run();
}

}  // namespace adiabat::experiment
