#include "riccilab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "riccilab/entropy.hpp"
#include "riccilab/fokker_planck.hpp"
#include "riccilab/geometry.hpp"
#include "riccilab/otto.hpp"
#include "riccilab/transport.hpp"

namespace riccilab {
namespace {

constexpr const char* kVersion = "riccilab 0.3.0";
constexpr double kPi = std::numbers::pi;
constexpr unsigned long long kFnvOffset = 1469598103934665603ULL;
constexpr unsigned long long kFnvPrime = 1099511628211ULL;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

unsigned long long fnv1a(unsigned long long h, const std::string& bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::string hex64(unsigned long long h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", h);
  return std::string(buf);
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

/// Reject unknown keys so typos surface as structured errors.
void check_keys(const Json& j, const std::string& context,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw std::invalid_argument(context + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw std::invalid_argument(context + ": unknown field '" + it.key() + "'");
  }
}

/// Accumulates artifacts into one directory and folds their bytes into the
/// manifest's output digest in write order.
struct Sink {
  std::filesystem::path dir;
  RunManifest* man = nullptr;
  unsigned long long hash = kFnvOffset;

  void write_text(const std::string& rel, const std::string& text) {
    const std::filesystem::path path = dir / rel;
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
    man->artifacts.push_back(rel);
    hash = fnv1a(hash, rel);
    hash = fnv1a(hash, text);
  }
  void write_json(const std::string& rel, const Json& j) { write_text(rel, j.dump(2) + "\n"); }
};

std::string csv_table(const std::vector<std::string>& cols,
                      const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (size_t c = 0; c < cols.size(); ++c) {
    out += cols[c];
    out += (c + 1 < cols.size()) ? ',' : '\n';
  }
  for (const auto& row : rows)
    for (size_t c = 0; c < row.size(); ++c) {
      out += num(row[c]);
      out += (c + 1 < row.size()) ? ',' : '\n';
    }
  return out;
}

/// Gnuplot script plotting every column against the first one.  No terminal
/// line: callers pick their device (`gnuplot -e "set term png; ..." file.gp`).
std::string plot_script(const std::string& csv_rel, const std::vector<std::string>& cols,
                        const std::string& title) {
  std::string s;
  s += "# gnuplot script: " + title + "\n";
  s += "set datafile separator \",\"\n";
  s += "set datafile missing \"nan\"\n";
  s += "set key outside\n";
  s += "set grid\n";
  s += "set xlabel \"" + cols[0] + "\"\n";
  s += "set title \"" + title + "\"\n";
  s += "plot ";
  for (size_t c = 1; c < cols.size(); ++c) {
    if (c > 1) s += ", \\\n     ";
    s += "\"" + csv_rel + "\" using 1:" + std::to_string(c + 1) + " with lines title \"" +
         cols[c] + "\"";
  }
  s += "\n";
  return s;
}

void add_check(RunManifest& man, const std::string& name, double value, double threshold,
               bool upper) {
  CheckResult r;
  r.name = name;
  r.value = value;
  r.threshold = threshold;
  r.relation = upper ? "<=" : ">=";
  r.passed = std::isfinite(value) && (upper ? value <= threshold : value >= threshold);
  man.checks.push_back(r);
}

/// Align an interior-time residual series onto the run's full time grid,
/// padding undefined endpoints with NaN (rendered as "nan" in CSV).
std::vector<double> pad_series(const std::vector<double>& full_t,
                               const std::vector<double>& series_t,
                               const std::vector<double>& series_v) {
  std::vector<double> out(full_t.size(), kNan);
  size_t k = 0;
  for (size_t i = 0; i < full_t.size() && k < series_t.size(); ++i) {
    const double scale = 1.0 + std::abs(full_t[i]);
    if (std::abs(full_t[i] - series_t[k]) <= 1e-9 * scale) out[i] = series_v[k++];
  }
  return out;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

BackwardConfig to_backward_config(const BackwardSpec& spec) {
  BackwardConfig c;
  c.tau0 = spec.tau0;
  c.cfl_limit = spec.cfl_limit;
  c.renormalize_mass = spec.renormalize_mass;
  return c;
}

unsigned long long density_seed(const ScenarioConfig& cfg, const BackwardSpec& spec, size_t k) {
  if (spec.w0_seed != 0) return spec.w0_seed;
  return cfg.seed * 1000003ULL + 17ULL * (k + 1);
}

/// Differencing-limited residual threshold: the balance laws are verified by
/// centered differences over the snapshot spacing on an O(h^2) space grid, so
/// their residuals scale like dt^2 + h^2 times the magnitude of the series.
double differencing_tol(const ScenarioConfig& cfg, const MetricState& state, double scale) {
  const double dt = cfg.flow.dt;
  const double h = state.mesh.h();
  return cfg.tol_factor * (dt * dt + h * h) * (1.0 + scale);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config parsing and serialization.
// ---------------------------------------------------------------------------

ScenarioConfig scenario_from_json(const Json& j) {
  check_keys(j, "scenario",
             {"name", "seed", "backend", "berger", "length", "psi0", "perturb", "mesh", "flow",
              "backward", "reports", "hj_eps", "transport", "tol_factor", "out_dir"});
  ScenarioConfig cfg;
  cfg.name = get_string_or(j, "name", cfg.name, "scenario");
  cfg.seed = static_cast<unsigned long long>(
      get_int_or(j, "seed", static_cast<long long>(cfg.seed), "scenario"));
  cfg.backend = get_string_or(j, "backend", cfg.backend, "scenario");
  if (cfg.backend != "berger" && cfg.backend != "cylinder" && cfg.backend != "round-sphere" &&
      cfg.backend != "warped-sphere" && cfg.backend != "warped-circle")
    throw std::invalid_argument("scenario.backend: unknown backend '" + cfg.backend + "'");
  if (j.contains("berger")) {
    const Json& b = j.at("berger");
    check_keys(b, "scenario.berger", {"a", "b", "c"});
    cfg.berger_a = get_double_or(b, "a", cfg.berger_a, "scenario.berger");
    cfg.berger_b = get_double_or(b, "b", cfg.berger_b, "scenario.berger");
    cfg.berger_c = get_double_or(b, "c", cfg.berger_c, "scenario.berger");
  }
  cfg.length = get_double_or(j, "length", cfg.length, "scenario");
  if (!(cfg.length > 0.0)) throw std::invalid_argument("scenario.length: must be positive");
  cfg.psi0 = get_double_or(j, "psi0", cfg.psi0, "scenario");
  if (!(cfg.psi0 > 0.0)) throw std::invalid_argument("scenario.psi0: must be positive");
  if (j.contains("perturb")) {
    const Json& p = j.at("perturb");
    check_keys(p, "scenario.perturb", {"amplitude", "max_mode"});
    cfg.perturb_amplitude =
        get_double_or(p, "amplitude", cfg.perturb_amplitude, "scenario.perturb");
    cfg.perturb_max_mode = get_int_or(p, "max_mode", cfg.perturb_max_mode, "scenario.perturb");
  }
  if (j.contains("mesh")) {
    const Json& m = j.at("mesh");
    check_keys(m, "scenario.mesh", {"n"});
    cfg.mesh_n = get_int_or(m, "n", cfg.mesh_n, "scenario.mesh");
  }
  if (cfg.mesh_n < 8 || cfg.mesh_n > 4096)
    throw std::invalid_argument("scenario.mesh.n: out of supported range [8, 4096]");
  if (j.contains("flow")) {
    check_keys(j.at("flow"), "scenario.flow",
               {"dt", "t_final", "scheme", "normalized", "renormalize", "cfl_limit",
                "singularity_factor", "pole_projection"});
    cfg.flow = flow_config_from_json(j.at("flow"));
  }
  if (j.contains("backward")) {
    const Json& arr = j.at("backward");
    if (!arr.is_array())
      throw std::invalid_argument("scenario.backward: must be an array");
    for (size_t k = 0; k < arr.size(); ++k) {
      const std::string ctx = "scenario.backward[" + std::to_string(k) + "]";
      const Json& b = arr[k];
      check_keys(b, ctx, {"kind", "tau0", "w0", "cfl_limit", "renormalize_mass"});
      BackwardSpec spec;
      spec.kind = backward_kind_from_name(get_string_or(b, "kind", "conjugate-heat", ctx));
      spec.tau0 = get_double_or(b, "tau0", spec.tau0, ctx);
      if (!(spec.tau0 > 0.0)) throw std::invalid_argument(ctx + ".tau0: must be positive");
      if (b.contains("w0")) {
        const Json& w0 = b.at("w0");
        check_keys(w0, ctx + ".w0", {"amplitude", "max_mode", "seed"});
        spec.w0_amplitude = get_double_or(w0, "amplitude", spec.w0_amplitude, ctx + ".w0");
        spec.w0_max_mode = get_int_or(w0, "max_mode", spec.w0_max_mode, ctx + ".w0");
        spec.w0_seed = static_cast<unsigned long long>(
            get_int_or(w0, "seed", 0, ctx + ".w0"));
      }
      spec.cfl_limit = get_double_or(b, "cfl_limit", spec.cfl_limit, ctx);
      spec.renormalize_mass = get_bool_or(b, "renormalize_mass", spec.renormalize_mass, ctx);
      cfg.backward.push_back(spec);
    }
  }
  if (j.contains("reports")) {
    const Json& r = j.at("reports");
    check_keys(r, "scenario.reports",
               {"functionals", "w_monotonicity", "curvature_entropy", "phi_energy", "comparison",
                "fisher", "convergence", "hopf_cole"});
    cfg.reports.functionals = get_bool_or(r, "functionals", true, "scenario.reports");
    cfg.reports.w_monotonicity = get_bool_or(r, "w_monotonicity", true, "scenario.reports");
    cfg.reports.curvature_entropy = get_bool_or(r, "curvature_entropy", true, "scenario.reports");
    cfg.reports.phi_energy = get_bool_or(r, "phi_energy", true, "scenario.reports");
    cfg.reports.comparison = get_bool_or(r, "comparison", false, "scenario.reports");
    cfg.reports.fisher = get_bool_or(r, "fisher", true, "scenario.reports");
    cfg.reports.convergence = get_bool_or(r, "convergence", true, "scenario.reports");
    cfg.reports.hopf_cole = get_bool_or(r, "hopf_cole", false, "scenario.reports");
  }
  cfg.hj_eps = get_double_or(j, "hj_eps", cfg.hj_eps, "scenario");
  if (j.contains("transport")) {
    const Json& t = j.at("transport");
    check_keys(t, "scenario.transport", {"enabled", "times", "chain_segments"});
    cfg.transport.enabled = get_bool_or(t, "enabled", true, "scenario.transport");
    if (t.contains("times")) {
      const Json& arr = t.at("times");
      if (!arr.is_array())
        throw std::invalid_argument("scenario.transport.times: must be an array");
      for (const auto& v : arr) {
        if (!v.is_number())
          throw std::invalid_argument("scenario.transport.times: entries must be numbers");
        cfg.transport.times.push_back(v.get<double>());
      }
    }
    cfg.transport.chain_segments =
        get_int_or(t, "chain_segments", cfg.transport.chain_segments, "scenario.transport");
    if (cfg.transport.chain_segments < 2)
      throw std::invalid_argument("scenario.transport.chain_segments: must be at least 2");
  }
  cfg.tol_factor = get_double_or(j, "tol_factor", cfg.tol_factor, "scenario");
  if (!(cfg.tol_factor > 0.0))
    throw std::invalid_argument("scenario.tol_factor: must be positive");
  cfg.out_dir = get_string_or(j, "out_dir", cfg.out_dir, "scenario");
  return cfg;
}

Json json_of(const ScenarioConfig& cfg) {
  Json backward = Json::array();
  for (const auto& b : cfg.backward)
    backward.push_back(Json{{"kind", backward_kind_name(b.kind)},
                            {"tau0", b.tau0},
                            {"w0",
                             Json{{"amplitude", b.w0_amplitude},
                                  {"max_mode", b.w0_max_mode},
                                  {"seed", static_cast<long long>(b.w0_seed)}}},
                            {"cfl_limit", b.cfl_limit},
                            {"renormalize_mass", b.renormalize_mass}});
  return Json{
      {"name", cfg.name},
      {"seed", static_cast<long long>(cfg.seed)},
      {"backend", cfg.backend},
      {"berger", Json{{"a", cfg.berger_a}, {"b", cfg.berger_b}, {"c", cfg.berger_c}}},
      {"length", cfg.length},
      {"psi0", cfg.psi0},
      {"perturb", Json{{"amplitude", cfg.perturb_amplitude}, {"max_mode", cfg.perturb_max_mode}}},
      {"mesh", Json{{"n", cfg.mesh_n}}},
      {"flow", json_of(cfg.flow)},
      {"backward", std::move(backward)},
      {"reports",
       Json{{"functionals", cfg.reports.functionals},
            {"w_monotonicity", cfg.reports.w_monotonicity},
            {"curvature_entropy", cfg.reports.curvature_entropy},
            {"phi_energy", cfg.reports.phi_energy},
            {"comparison", cfg.reports.comparison},
            {"fisher", cfg.reports.fisher},
            {"convergence", cfg.reports.convergence},
            {"hopf_cole", cfg.reports.hopf_cole}}},
      {"hj_eps", cfg.hj_eps},
      {"transport",
       Json{{"enabled", cfg.transport.enabled},
            {"times", cfg.transport.times},
            {"chain_segments", cfg.transport.chain_segments}}},
      {"tol_factor", cfg.tol_factor},
      {"out_dir", cfg.out_dir}};
}

MetricState initial_state(const ScenarioConfig& cfg) {
  if (cfg.backend == "berger") return make_berger(cfg.berger_a, cfg.berger_b, cfg.berger_c);
  if (cfg.backend == "cylinder") return make_cylinder(cfg.mesh_n, cfg.length, 1.0, cfg.psi0);
  if (cfg.backend == "round-sphere") return make_round_sphere(cfg.mesh_n);
  PerturbParams prm;
  prm.amplitude = cfg.perturb_amplitude;
  prm.max_mode = cfg.perturb_max_mode;
  prm.seed = cfg.seed;
  if (cfg.backend == "warped-sphere")
    return make_random_warped_sphere(cfg.mesh_n, cfg.length, prm);
  if (cfg.backend == "warped-circle")
    return make_random_warped_circle(cfg.mesh_n, cfg.length, cfg.psi0, prm);
  throw std::invalid_argument("scenario.backend: unknown backend '" + cfg.backend + "'");
}

std::vector<std::vector<double>> translating_bump_family(const MetricState& state, int segments,
                                                         double shift_frac) {
  if (segments < 1) throw std::invalid_argument("translating bump: segments must be positive");
  const auto arc = arclength(state);
  const size_t n = arc.size();
  const double h = state.mesh.h();
  const double total = state.mesh.topology == Topology::Circle
                           ? arc.back() + 0.5 * h * (state.phi.back() + state.phi.front())
                           : arc.back() + 0.5 * h * state.phi.back();
  const auto m = measure(state);
  const bool circle = state.mesh.topology == Topology::Circle;
  std::vector<std::vector<double>> family;
  family.reserve(static_cast<size_t>(segments) + 1);
  for (int k = 0; k <= segments; ++k) {
    const double frac = static_cast<double>(k) / segments;
    std::vector<double> w(n, 0.0);
    if (circle) {
      const double center = shift_frac * total * frac;
      for (size_t i = 0; i < n; ++i)
        w[i] = std::exp(std::cos(2.0 * kPi * (arc[i] - center) / total));
    } else {
      // Gaussian bump gliding between 35% and (35 + 100*shift_frac)% of the
      // chart, kept away from the poles, over a positive floor.
      const double center = (0.35 + shift_frac * frac) * total;
      const double sigma = 0.12 * total;
      for (size_t i = 0; i < n; ++i) {
        const double d = (arc[i] - center) / sigma;
        w[i] = 0.05 + std::exp(-d * d);
      }
    }
    double z = 0.0;
    for (size_t i = 0; i < n; ++i) z += w[i] * m.weights[i];
    for (auto& v : w) v *= m.volume / z;
    family.push_back(std::move(w));
  }
  return family;
}

// ---------------------------------------------------------------------------
// Manifest.
// ---------------------------------------------------------------------------

bool RunManifest::all_passed() const {
  if (!errors.empty()) return false;
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

Json json_of(const RunManifest& m) {
  Json checks = Json::array();
  for (const auto& c : m.checks)
    checks.push_back(Json{{"name", c.name},
                          {"passed", c.passed},
                          {"value", c.value},
                          {"threshold", c.threshold},
                          {"relation", c.relation}});
  Json errors = Json::array();
  for (const auto& e : m.errors)
    errors.push_back(Json{{"context", e.context}, {"message", e.message}});
  return Json{{"name", m.name},
              {"command", m.command},
              {"config_digest", m.config_digest},
              {"code_version", m.code_version},
              {"output_digest", m.output_digest},
              {"artifacts", m.artifacts},
              {"checks", std::move(checks)},
              {"errors", std::move(errors)},
              {"all_passed", m.all_passed()}};
}

std::string digest_hex(const std::string& bytes) { return hex64(fnv1a(kFnvOffset, bytes)); }

std::string digest_of(const Json& j) { return digest_hex(j.dump()); }

std::string code_version() { return kVersion; }

// ---------------------------------------------------------------------------
// Pipeline.
// ---------------------------------------------------------------------------

namespace {

/// Shared state of one command invocation.  Stages record module errors under
/// their own context and leave earlier artifacts in place.
struct Pipeline {
  const ScenarioConfig& cfg;
  RunManifest man;
  Sink sink;
  Trajectory traj;
  bool have_traj = false;
  std::vector<BackwardRun> conjugate_runs;
  std::vector<FPRun> drift_runs;

  explicit Pipeline(const ScenarioConfig& c, const std::string& command) : cfg(c) {
    man.name = cfg.name;
    man.command = command;
    // The digest identifies the scenario, not where its results land: the
    // same config written to two directories must hash identically.
    Json canonical = json_of(cfg);
    canonical.erase("out_dir");
    man.config_digest = digest_of(canonical);
    man.code_version = code_version();
    sink.dir = cfg.out_dir;
    sink.man = &man;
  }

  bool guard(const std::string& context, const std::function<void()>& body) {
    try {
      body();
      return true;
    } catch (const std::exception& e) {
      man.errors.push_back({context, e.what()});
      return false;
    }
  }

  void finish() {
    man.output_digest = hex64(sink.hash);
    const std::filesystem::path path = std::filesystem::path(cfg.out_dir) / "manifest.json";
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << json_of(man).dump(2) << "\n";
  }

  // ---- forward flow -------------------------------------------------------

  void stage_flow() {
    have_traj = guard("flow", [&] {
      const MetricState st0 = initial_state(cfg);
      traj = run_flow(st0, cfg.flow);
      std::vector<std::string> cols{"t",     "volume",        "mean_R",
                                    "min_R", "max_R",         "max_traceless",
                                    "ricci_lower_bound"};
      std::vector<std::vector<double>> rows;
      for (size_t i = 0; i < traj.times.size(); ++i) {
        const auto& s = traj.summaries[i];
        rows.push_back({traj.times[i], s.volume, s.mean_R, s.min_R, s.max_R, s.max_traceless,
                        s.ricci_lower_bound});
      }
      sink.write_json("flow.json", json_of(traj));
      sink.write_text("flow.csv", csv_table(cols, rows));
      sink.write_text("flow.gp", plot_script("flow.csv", cols, "forward flow summary"));
      flow_checks();
    });
  }

  void flow_checks() {
    add_check(man, "flow.completed", traj.singular ? 1.0 : 0.0, 0.0, true);
    if (cfg.flow.normalized && cfg.flow.renormalize && !traj.summaries.empty()) {
      double drift = 0.0;
      for (const auto& s : traj.summaries)
        drift = std::max(drift, std::abs(s.volume - traj.volume0) / traj.volume0);
      add_check(man, "flow.volume_drift", drift, 1e-10, true);
    }
    const double t_final = traj.times.empty() ? 0.0 : traj.times.back();
    if (cfg.backend == "berger" && cfg.berger_a == cfg.berger_b &&
        cfg.berger_b == cfg.berger_c && cfg.flow.normalized) {
      double dev = 0.0;
      for (const auto& s : traj.states)
        dev = std::max({dev, std::abs(s.a - cfg.berger_a), std::abs(s.b - cfg.berger_b),
                        std::abs(s.c - cfg.berger_c)});
      add_check(man, "flow.round_invariance", dev, 1e-10 * (1.0 + t_final), true);
    }
    if (cfg.backend == "cylinder" && cfg.flow.normalized && t_final < 1.4) {
      // Homogeneous product shrinks the sphere factor as sqrt(1 - 2 beta / 3)
      // while the circle stretches by the inverse square.
      double dev = 0.0;
      for (size_t i = 0; i < traj.times.size(); ++i) {
        const double f = std::sqrt(std::max(1.0 - 2.0 * traj.times[i] / 3.0, 1e-12));
        for (size_t k = 0; k < traj.states[i].psi.size(); ++k) {
          dev = std::max(dev, std::abs(traj.states[i].psi[k] - cfg.psi0 * f));
          dev = std::max(dev, std::abs(traj.states[i].phi[k] - 1.0 / (f * f)));
        }
      }
      const double tol = cfg.flow.scheme == Scheme::ExplicitRK4
                             ? std::max(1e-7, 100.0 * std::pow(cfg.flow.dt, 4))
                             : std::max(1e-7, 10.0 * cfg.flow.dt);
      add_check(man, "flow.cylinder_closed_form", dev, tol, true);
    }
    if (cfg.backend == "round-sphere" && cfg.flow.normalized && !traj.summaries.empty()) {
      double drift = 0.0;
      for (const auto& s : traj.summaries)
        drift = std::max(drift, std::abs(s.mean_R - traj.summaries.front().mean_R));
      add_check(man, "flow.round_sphere_mean_R_drift", drift, 1e-6 * (1.0 + t_final), true);
    }
  }

  // ---- backward runs ------------------------------------------------------

  std::vector<BackwardSpec> specs_of_kind(BackwardKind kind) const {
    std::vector<BackwardSpec> out;
    for (const auto& s : cfg.backward)
      if (s.kind == kind) out.push_back(s);
    if (out.empty()) {
      BackwardSpec def;
      def.kind = kind;
      out.push_back(def);
    }
    return out;
  }

  void stage_conjugate() {
    if (!have_traj) return;
    const auto specs = specs_of_kind(BackwardKind::ConjugateHeat);
    for (size_t k = 0; k < specs.size(); ++k) {
      const auto& spec = specs[k];
      guard("backward[" + std::to_string(k) + "]", [&] {
        const auto w0 = make_random_density(traj.states.back(), spec.w0_amplitude,
                                            spec.w0_max_mode, density_seed(cfg, spec, k));
        BackwardRun run =
            run_backward(traj, w0, BackwardKind::ConjugateHeat, to_backward_config(spec));
        conjugate_runs.push_back(std::move(run));
        emit_backward(conjugate_runs.back(), k);
      });
    }
  }

  void emit_backward(const BackwardRun& run, size_t k) {
    const std::string tag = std::to_string(k);
    sink.write_json("backward_" + tag + ".json", json_of(run));
    // Midpoint substeps lose O(dt^2) mass per snapshot before renormalization.
    const double dt = cfg.flow.dt;
    add_check(man, "backward[" + tag + "].mass_drift", max_abs(run.mass_drift),
              1e-8 * (1.0 + 1e6 * dt * dt), true);
    add_check(man, "backward[" + tag + "].coupling", max_abs(run.coupling), 1e-8, true);
    add_check(man, "backward[" + tag + "].positivity_clamps",
              static_cast<double>(run.positivity_clamps), 0.0, true);
    // tau integrated along the run vs the exact linear-ODE solution.
    const auto cf = tau_closed_form(run.t, run.mean_R, run.config.tau0);
    double tau_dev = 0.0;
    for (size_t i = 0; i < cf.size(); ++i)
      tau_dev = std::max(tau_dev, std::abs(cf[i] - run.tau[i]));
    add_check(man, "backward[" + tag + "].tau_closed_form", tau_dev, 1e-8, true);
  }

  // ---- functional reports -------------------------------------------------

  void stage_functionals() {
    for (size_t k = 0; k < conjugate_runs.size(); ++k) {
      const auto& run = conjugate_runs[k];
      guard("functionals[" + std::to_string(k) + "]", [&] { emit_functional_panel(run, k); });
    }
  }

  void emit_functional_panel(const BackwardRun& run, size_t k) {
    const std::string tag = std::to_string(k);
    std::vector<FunctionalReport> frs;
    frs.reserve(run.t.size());
    for (size_t i = 0; i < run.t.size(); ++i)
      frs.push_back(functionals(run.states[i], run.w[i], run.tau[i], run.tau_hat[i], run.t[i]));

    const SeriesResidual balance = entropy_balance(run);
    WMonotonicityReport wmono;
    CurvatureEntropyReport centro;
    if (cfg.reports.w_monotonicity) wmono = w_monotonicity(run);
    if (cfg.reports.curvature_entropy) centro = curvature_entropy(run);

    // CSV panel: one row per snapshot; interior-only residual series are
    // NaN-padded at the endpoints.
    const std::vector<std::string> cols{"t",       "S",
                                        "I",       "W",
                                        "tau",     "tau_hat",
                                        "tauhatR", "residual_coupling",
                                        "residual_entropy", "residual_w",
                                        "residual_curvature"};
    const auto res_entropy = pad_series(run.t, balance.t, balance.residual);
    const auto res_w = pad_series(run.t, wmono.residual.t, wmono.residual.residual);
    const auto res_curv = pad_series(run.t, centro.residual.t, centro.residual.residual);
    std::vector<std::vector<double>> rows;
    for (size_t i = 0; i < frs.size(); ++i)
      rows.push_back({frs[i].t, frs[i].S, frs[i].I, frs[i].W, frs[i].tau, frs[i].tau_hat,
                      frs[i].tau_hat * frs[i].mean_R_w, frs[i].coupling, res_entropy[i],
                      res_w[i], res_curv[i]});
    sink.write_text("functionals_" + tag + ".csv", csv_table(cols, rows));
    sink.write_text("functionals_" + tag + ".gp",
                    plot_script("functionals_" + tag + ".csv", cols, "entropy functionals"));

    Json panel;
    Json items = Json::array();
    for (const auto& fr : frs) items.push_back(json_of(fr));
    panel["reports"] = std::move(items);
    panel["entropy_balance"] = json_of(balance);
    if (cfg.reports.w_monotonicity) panel["w_monotonicity"] = json_of(wmono);
    if (cfg.reports.curvature_entropy) panel["curvature_entropy"] = json_of(centro);
    if (cfg.reports.functionals) panel["wflow_balance"] = json_of(wflow_balance(run));
    sink.write_json("functionals_" + tag + ".json", panel);

    // Exact-rewrite identities: machine-precision quadrature equalities.
    double w_forms = 0.0;
    double f_forms = 0.0;
    double wscale = 0.0;
    for (const auto& fr : frs) {
      wscale = std::max(wscale, std::abs(fr.W));
      w_forms = std::max({w_forms, std::abs(fr.W_decomposed - fr.W),
                          std::abs(fr.W_lsi_form - fr.W)});
      f_forms = std::max(f_forms, std::abs(fr.F_scaled - (fr.I + fr.mean_R_w)));
    }
    add_check(man, "functionals[" + tag + "].w_rewrites", w_forms, 1e-9 * (1.0 + wscale), true);
    add_check(man, "functionals[" + tag + "].f_scaled_identity", f_forms,
              1e-10 * (1.0 + wscale), true);

    double iscale = 0.0;
    for (const auto& fr : frs) iscale = std::max(iscale, std::abs(fr.I) + std::abs(fr.mean_R_w));
    add_check(man, "functionals[" + tag + "].entropy_balance", balance.max_abs,
              differencing_tol(cfg, run.states.front(), iscale), true);
    if (cfg.reports.w_monotonicity) {
      // Monotone up to ten times the observed differencing error of the
      // derivative identity itself.
      add_check(man, "functionals[" + tag + "].w_monotone", wmono.min_dW_dbeta,
                -(10.0 * wmono.residual.max_abs + 1e-12), false);
      add_check(man, "functionals[" + tag + "].w_derivative_identity", wmono.residual.max_abs,
                differencing_tol(cfg, run.states.front(), max_abs(wmono.integrand)), true);
    }
    if (cfg.reports.curvature_entropy) {
      const double cscale = max_abs(centro.series);
      add_check(man, "functionals[" + tag + "].tauhatR_nonincreasing", centro.max_increase,
                1e-10 * (1.0 + cscale), true);
      if (centro.sharpening_applicable)
        add_check(man, "functionals[" + tag + "].sharpening_slack",
                  centro.min_sharpening_slack, -1e-8, false);
    }
  }

  // ---- fluctuation-potential identities -----------------------------------

  void stage_phi_energy() {
    if (!have_traj || !cfg.reports.phi_energy) return;
    guard("phi_energy", [&] {
      Json items = Json::array();
      double worst = 0.0;
      double scale = 0.0;
      const size_t stride = std::max<size_t>(1, traj.states.size() / 8);
      for (size_t i = 0; i < traj.states.size(); i += stride) {
        const PhiEnergyReport rep = phi_energy_identity(traj.states[i]);
        Json item = json_of(rep);
        item["t"] = traj.times[i];
        items.push_back(std::move(item));
        worst = std::max(worst, std::abs(rep.residual));
        scale = std::max(scale, std::abs(rep.hess_term) + std::abs(rep.ricci_term));
      }
      sink.write_json("phi_energy.json", items);
      const double h = traj.states.front().mesh.h();
      add_check(man, "phi_energy.residual", worst,
                cfg.tol_factor * h * h * (1.0 + scale), true);
    });
  }

  // ---- drift-diffusion runs -----------------------------------------------

  void stage_drift() {
    if (!have_traj) return;
    const auto specs = specs_of_kind(BackwardKind::FokkerPlanck);
    for (size_t k = 0; k < specs.size(); ++k) {
      const auto& spec = specs[k];
      guard("fokker_planck[" + std::to_string(k) + "]", [&] {
        const auto w0 = make_random_density(traj.states.back(), spec.w0_amplitude,
                                            spec.w0_max_mode, density_seed(cfg, spec, k));
        FPRun run = run_backward_fp(traj, w0, to_backward_config(spec));
        emit_drift(run, k);
        drift_runs.push_back(std::move(run));
      });
    }
  }

  void emit_drift(FPRun& run, size_t k) {
    const std::string tag = std::to_string(k);
    const GradientIdentityReport grad = gradient_identity(run);
    FisherReport fisher;
    if (cfg.reports.fisher) fisher = fisher_decay(run);
    ConvergenceReport conv;
    if (cfg.reports.convergence) conv = convergence_report(run);
    HJResidualReport hj;
    double eps = 0.0;
    if (cfg.reports.hopf_cole) {
      eps = cfg.hj_eps > 0.0 ? cfg.hj_eps : default_epsilon(run);
      hopf_cole(run, eps);
      hj = hj_residual(run, eps);
    }

    const auto& bt = run.backward.t;
    const std::vector<std::string> cols{"t", "S", "I", "K", "residual_gradient",
                                        "residual_fisher"};
    const auto res_grad = pad_series(bt, grad.t, grad.residual);
    const auto res_fisher = pad_series(bt, fisher.t, fisher.identity_residual);
    std::vector<std::vector<double>> rows;
    for (size_t i = 0; i < bt.size(); ++i)
      rows.push_back({bt[i], run.S[i], run.I[i], run.K[i], res_grad[i], res_fisher[i]});
    sink.write_text("fp_" + tag + ".csv", csv_table(cols, rows));
    sink.write_text("fp_" + tag + ".gp",
                    plot_script("fp_" + tag + ".csv", cols, "drift-diffusion panel"));

    Json panel{{"run", json_of(run)}, {"gradient_identity", json_of(grad)}};
    if (cfg.reports.fisher) panel["fisher"] = json_of(fisher);
    if (cfg.reports.convergence) panel["convergence"] = json_of(conv);
    if (cfg.reports.hopf_cole) {
      panel["hj_residual"] = json_of(hj);
      panel["hj_eps"] = eps;
    }
    sink.write_json("fp_" + tag + ".json", panel);

    const double fdt = cfg.flow.dt;
    add_check(man, "fp[" + tag + "].mass_drift", max_abs(run.backward.mass_drift),
              1e-8 * (1.0 + 1e6 * fdt * fdt), true);
    const double iscale = max_abs(run.I);
    add_check(man, "fp[" + tag + "].gradient_identity", grad.max_residual,
              differencing_tol(cfg, run.backward.states.front(), iscale), true);
    if (cfg.reports.fisher) {
      const double dscale = max_abs(fisher.didt);
      add_check(man, "fp[" + tag + "].fisher_identity", fisher.max_identity_residual,
                differencing_tol(cfg, run.backward.states.front(), dscale), true);
      add_check(man, "fp[" + tag + "].fisher_inequality", fisher.min_inequality_slack,
                -differencing_tol(cfg, run.backward.states.front(), dscale), false);
      add_check(man, "fp[" + tag + "].fisher_pairwise", fisher.min_pairwise_slack,
                -1e-8 * (1.0 + iscale), false);
    }
    if (cfg.reports.convergence && conv.applicable) {
      add_check(man, "fp[" + tag + "].fitted_rate", conv.fitted_rate,
                conv.bound_rate * 0.95, false);
      add_check(man, "fp[" + tag + "].talagrand_slack", conv.min_talagrand_slack, -1e-12,
                false);
      const double sscale = run.S.empty() ? 0.0 : run.S.front();
      add_check(man, "fp[" + tag + "].exp_bound_slack", conv.min_exp_slack,
                -1e-8 * (1.0 + sscale), false);
      add_check(man, "fp[" + tag + "].convexity_slack", conv.min_convexity_slack,
                -differencing_tol(cfg, run.backward.states.front(), sscale), false);
      add_check(man, "fp[" + tag + "].d2_nonincreasing", conv.max_d2_increase,
                1e-10 * (1.0 + sscale), true);
    }
    if (cfg.reports.hopf_cole)
      add_check(man, "fp[" + tag + "].hj_residual_finite",
                std::isfinite(hj.max_residual) ? 0.0 : 1.0, 0.0, true);
  }

  // ---- comparison identities ----------------------------------------------

  void stage_comparison() {
    if (!have_traj || !cfg.reports.comparison) return;
    guard("comparison", [&] {
      const BackwardRun* run = nullptr;
      if (!conjugate_runs.empty()) {
        run = &conjugate_runs.front();
      } else {
        const auto specs = specs_of_kind(BackwardKind::ConjugateHeat);
        const auto w0 = make_random_density(traj.states.back(), specs[0].w0_amplitude,
                                            specs[0].w0_max_mode,
                                            density_seed(cfg, specs[0], 0));
        conjugate_runs.push_back(
            run_backward(traj, w0, BackwardKind::ConjugateHeat, to_backward_config(specs[0])));
        run = &conjugate_runs.back();
      }
      const ComparisonReport rep = perelman_comparison(*run);
      sink.write_json("comparison.json", json_of(rep));
      const std::vector<std::string> cols{"t", "res_a", "res_c"};
      std::vector<std::vector<double>> rows;
      for (size_t i = 0; i < rep.t.size(); ++i)
        rows.push_back({rep.t[i], rep.res_a[i], rep.res_c[i]});
      sink.write_text("comparison.csv", csv_table(cols, rows));
      sink.write_text("comparison.gp",
                      plot_script("comparison.csv", cols, "conjugate-diffusion comparison"));
      const double scale = 1.0 + max_abs(run->mean_R);
      add_check(man, "comparison.res_a", rep.max_res_a,
                differencing_tol(cfg, run->states.front(), scale), true);
      add_check(man, "comparison.res_b", rep.max_res_b,
                differencing_tol(cfg, run->states.front(), scale), true);
      add_check(man, "comparison.res_c", rep.max_res_c,
                differencing_tol(cfg, run->states.front(), scale), true);
    });
  }

  // ---- transport panel ----------------------------------------------------

  void stage_transport() {
    if (!cfg.transport.enabled) return;
    guard("transport", [&] {
      if (have_traj && traj.times.size() >= 2 && !conjugate_runs.empty()) {
        transport_on_run(conjugate_runs.front());
      } else if (have_traj) {
        transport_frozen(traj.states.empty() ? initial_state(cfg) : traj.states.front());
      } else {
        transport_frozen(initial_state(cfg));
      }
    });
  }

  void transport_on_run(const BackwardRun& run) {
    double lambda_inf = std::numeric_limits<double>::infinity();
    for (const auto& s : run.states) lambda_inf = std::min(lambda_inf, combined_tensor_bound(s));
    lambda_inf *= 3.0;
    std::vector<double> times = cfg.transport.times;
    if (times.empty())
      times = {run.t.front(), 0.5 * (run.t.front() + run.t.back()), run.t.back()};
    Json items = Json::array();
    std::vector<std::vector<double>> rows;
    double min_slack = std::numeric_limits<double>::infinity();
    double max_kr = 0.0;
    for (double tw : times) {
      size_t best = 0;
      for (size_t i = 1; i < run.t.size(); ++i)
        if (std::abs(run.t[i] - tw) < std::abs(run.t[best] - tw)) best = i;
      const InequalityReport rep =
          transport_inequalities(run.states[best], run.w[best], lambda_inf);
      Json item = json_of(rep);
      item["t"] = run.t[best];
      items.push_back(std::move(item));
      rows.push_back({run.t[best], rep.S, rep.variation, rep.d1, rep.d2, rep.pinsker_slack,
                      rep.kr_gap, rep.talagrand_slack, rep.power_slack_s1, rep.power_slack_s2,
                      rep.quartic_slack});
      min_slack = std::min({min_slack, rep.pinsker_slack, rep.power_slack_s1,
                            rep.power_slack_s2, rep.quartic_slack});
      if (lambda_inf > 0.0) min_slack = std::min(min_slack, rep.talagrand_slack);
      max_kr = std::max(max_kr, rep.kr_gap);
    }
    Json panel{{"lambda_inf", lambda_inf}, {"samples", std::move(items)}};
    const std::vector<std::string> cols{
        "t",  "S",           "variation",       "d1",
        "d2", "pinsker_slack", "kr_gap",        "talagrand_slack",
        "power_slack_s1", "power_slack_s2", "quartic_slack"};
    sink.write_text("transport.csv", csv_table(cols, rows));
    sink.write_text("transport.gp",
                    plot_script("transport.csv", cols, "entropy-transport panel"));
    // Curve comparison over the run itself (geometry evolves, so the two
    // lengths only agree when snapshots are dense; this is a sanity rail).
    if (run.t.size() >= 3) {
      const double dl = run.t[1] - run.t[0];
      const CurveLengthReport curve = curve_length(run.states, run.w, std::abs(dl));
      panel["curve"] = json_of(curve);
      add_check(man, "transport.curve_lengths_finite",
                (std::isfinite(curve.otto_length) && std::isfinite(curve.chain_length)) ? 0.0
                                                                                        : 1.0,
                0.0, true);
    }
    sink.write_json("transport.json", panel);
    add_check(man, "transport.min_inequality_slack", min_slack, -1e-12, false);
    add_check(man, "transport.kr_gap", max_kr, 1e-6, true);
  }

  void transport_frozen(const MetricState& state) {
    const auto family =
        translating_bump_family(state, cfg.transport.chain_segments, 0.25);
    const std::vector<MetricState> states(family.size(), state);
    const double dl = 1.0 / cfg.transport.chain_segments;
    const CurveLengthReport curve = curve_length(states, family, dl);
    const double lambda_inf = 3.0 * combined_tensor_bound(state);
    Json items = Json::array();
    std::vector<std::vector<double>> rows;
    double min_slack = std::numeric_limits<double>::infinity();
    double max_kr = 0.0;
    const size_t stride = std::max<size_t>(1, family.size() / 4);
    for (size_t i = 0; i < family.size(); i += stride) {
      const InequalityReport rep = transport_inequalities(state, family[i], lambda_inf);
      Json item = json_of(rep);
      item["lambda"] = static_cast<double>(i) * dl;
      items.push_back(std::move(item));
      rows.push_back({static_cast<double>(i) * dl, rep.S, rep.variation, rep.d1, rep.d2,
                      rep.pinsker_slack, rep.kr_gap, rep.talagrand_slack, rep.power_slack_s1,
                      rep.power_slack_s2, rep.quartic_slack});
      min_slack = std::min({min_slack, rep.pinsker_slack, rep.power_slack_s1,
                            rep.power_slack_s2, rep.quartic_slack});
      if (lambda_inf > 0.0) min_slack = std::min(min_slack, rep.talagrand_slack);
      max_kr = std::max(max_kr, rep.kr_gap);
    }
    Json panel{{"lambda_inf", lambda_inf}, {"curve", json_of(curve)},
               {"samples", std::move(items)}};
    sink.write_json("transport.json", panel);
    const std::vector<std::string> cols{
        "lambda", "S",           "variation",       "d1",
        "d2",     "pinsker_slack", "kr_gap",        "talagrand_slack",
        "power_slack_s1", "power_slack_s2", "quartic_slack"};
    sink.write_text("transport.csv", csv_table(cols, rows));
    sink.write_text("transport.gp",
                    plot_script("transport.csv", cols, "entropy-transport panel"));
    add_check(man, "transport.min_inequality_slack", min_slack, -1e-12, false);
    add_check(man, "transport.kr_gap", max_kr, 1e-6, true);
    add_check(man, "transport.curve_gap", curve.rel_gap, 0.05, true);
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Commands.
// ---------------------------------------------------------------------------

RunManifest command_flow(const ScenarioConfig& cfg) {
  Pipeline p(cfg, "flow");
  p.stage_flow();
  p.finish();
  return p.man;
}

RunManifest command_perelman(const ScenarioConfig& cfg) {
  Pipeline p(cfg, "perelman");
  p.stage_flow();
  p.stage_conjugate();
  p.stage_functionals();
  p.finish();
  return p.man;
}

RunManifest command_fokker_planck(const ScenarioConfig& cfg) {
  Pipeline p(cfg, "fokker-planck");
  p.stage_flow();
  p.stage_drift();
  p.finish();
  return p.man;
}

RunManifest command_compare(const ScenarioConfig& cfg) {
  ScenarioConfig with_comparison = cfg;
  with_comparison.reports.comparison = true;
  Pipeline p(with_comparison, "compare-perelman");
  p.stage_flow();
  p.stage_comparison();
  p.finish();
  return p.man;
}

RunManifest command_transport(const ScenarioConfig& cfg) {
  Pipeline p(cfg, "transport");
  p.stage_flow();
  if (p.have_traj && p.traj.times.size() >= 2) p.stage_conjugate();
  p.stage_transport();
  p.finish();
  return p.man;
}

RunManifest command_entropy_report(const ScenarioConfig& cfg) {
  Pipeline p(cfg, "entropy-report");
  p.stage_flow();
  p.stage_conjugate();
  p.stage_functionals();
  p.stage_phi_energy();
  p.finish();
  return p.man;
}

RunManifest run_scenario(const ScenarioConfig& cfg) {
  Pipeline p(cfg, "run");
  p.stage_flow();
  p.stage_conjugate();
  p.stage_functionals();
  p.stage_phi_energy();
  p.stage_drift();
  p.stage_comparison();
  p.stage_transport();
  p.finish();
  return p.man;
}

RunManifest command_export(const ScenarioConfig& cfg, const std::string& format) {
  if (format != "csv" && format != "json" && format != "plot" && format != "all")
    throw std::invalid_argument("export: unknown format '" + format + "'");
  Pipeline p(cfg, "export");
  const std::filesystem::path dir(cfg.out_dir);
  bool found = false;
  for (size_t k = 0;; ++k) {
    const std::filesystem::path src = dir / ("backward_" + std::to_string(k) + ".json");
    if (!std::filesystem::exists(src)) break;
    found = true;
    p.guard("export[" + std::to_string(k) + "]", [&] {
      const BackwardRun run = backward_run_from_json(read_json_file(src.string()));
      const std::string tag = std::to_string(k);
      std::vector<FunctionalReport> frs;
      for (size_t i = 0; i < run.t.size(); ++i)
        frs.push_back(
            functionals(run.states[i], run.w[i], run.tau[i], run.tau_hat[i], run.t[i]));
      const SeriesResidual balance = entropy_balance(run);
      const WMonotonicityReport wmono = w_monotonicity(run);
      const CurvatureEntropyReport centro = curvature_entropy(run);
      const std::vector<std::string> cols{"t",       "S",
                                          "I",       "W",
                                          "tau",     "tau_hat",
                                          "tauhatR", "residual_coupling",
                                          "residual_entropy", "residual_w",
                                          "residual_curvature"};
      const auto res_entropy = pad_series(run.t, balance.t, balance.residual);
      const auto res_w = pad_series(run.t, wmono.residual.t, wmono.residual.residual);
      const auto res_curv = pad_series(run.t, centro.residual.t, centro.residual.residual);
      std::vector<std::vector<double>> rows;
      for (size_t i = 0; i < frs.size(); ++i)
        rows.push_back({frs[i].t, frs[i].S, frs[i].I, frs[i].W, frs[i].tau, frs[i].tau_hat,
                        frs[i].tau_hat * frs[i].mean_R_w, frs[i].coupling, res_entropy[i],
                        res_w[i], res_curv[i]});
      if (format == "csv" || format == "all")
        p.sink.write_text("export_" + tag + ".csv", csv_table(cols, rows));
      if (format == "json" || format == "all") {
        Json panel;
        Json items = Json::array();
        for (const auto& fr : frs) items.push_back(json_of(fr));
        panel["reports"] = std::move(items);
        panel["entropy_balance"] = json_of(balance);
        panel["w_monotonicity"] = json_of(wmono);
        panel["curvature_entropy"] = json_of(centro);
        p.sink.write_json("export_" + tag + ".json", panel);
      }
      if (format == "plot" || format == "all")
        p.sink.write_text("export_" + tag + ".gp",
                          plot_script("export_" + tag + ".csv", cols, "exported functionals"));
      add_check(p.man, "export[" + tag + "].rows", static_cast<double>(rows.size()), 1.0,
                false);
    });
  }
  if (!found)
    p.man.errors.push_back(
        {"export", "no completed run found in '" + cfg.out_dir +
                       "' (expected backward_0.json); run a scenario command first"});
  p.finish();
  return p.man;
}

}  // namespace riccilab
