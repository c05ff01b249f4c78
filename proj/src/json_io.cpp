#include "riccilab/json_io.hpp"

#include <fstream>
#include <stdexcept>

namespace riccilab {

// ---------------------------------------------------------------------------
// Enum names.
// ---------------------------------------------------------------------------

std::string backend_name(Backend b) {
  switch (b) {
    case Backend::Berger: return "berger";
    case Backend::WarpedCircle: return "warped-circle";
    case Backend::WarpedSphere: return "warped-sphere";
  }
  return "berger";
}

Backend backend_from_name(const std::string& name) {
  if (name == "berger") return Backend::Berger;
  if (name == "warped-circle") return Backend::WarpedCircle;
  if (name == "warped-sphere") return Backend::WarpedSphere;
  throw std::invalid_argument("backend: unknown name '" + name +
                              "' (expected berger | warped-circle | warped-sphere)");
}

std::string topology_name(Topology t) {
  return t == Topology::Circle ? "circle" : "interval-poles";
}

Topology topology_from_name(const std::string& name) {
  if (name == "circle") return Topology::Circle;
  if (name == "interval-poles") return Topology::IntervalPoles;
  throw std::invalid_argument("topology: unknown name '" + name +
                              "' (expected circle | interval-poles)");
}

std::string scheme_name(Scheme s) {
  return s == Scheme::ExplicitRK4 ? "rk4" : "semi-implicit";
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "rk4") return Scheme::ExplicitRK4;
  if (name == "semi-implicit") return Scheme::SemiImplicit;
  throw std::invalid_argument("scheme: unknown name '" + name +
                              "' (expected rk4 | semi-implicit)");
}

std::string backward_kind_name(BackwardKind k) {
  return k == BackwardKind::ConjugateHeat ? "conjugate-heat" : "fokker-planck";
}

BackwardKind backward_kind_from_name(const std::string& name) {
  if (name == "conjugate-heat") return BackwardKind::ConjugateHeat;
  if (name == "fokker-planck") return BackwardKind::FokkerPlanck;
  throw std::invalid_argument("backward kind: unknown name '" + name +
                              "' (expected conjugate-heat | fokker-planck)");
}

// ---------------------------------------------------------------------------
// Structured field access.
// ---------------------------------------------------------------------------

const Json& require_field(const Json& j, const std::string& field, const std::string& context) {
  if (!j.is_object())
    throw std::invalid_argument(context + ": expected an object with field '" + field + "'");
  auto it = j.find(field);
  if (it == j.end())
    throw std::invalid_argument(context + ": missing field '" + field + "'");
  return *it;
}

double get_double(const Json& j, const std::string& field, const std::string& context) {
  const Json& v = require_field(j, field, context);
  if (!v.is_number())
    throw std::invalid_argument(context + ": field '" + field + "' must be a number");
  return v.get<double>();
}

double get_double_or(const Json& j, const std::string& field, double fallback,
                     const std::string& context) {
  if (!j.is_object() || !j.contains(field)) return fallback;
  return get_double(j, field, context);
}

int get_int(const Json& j, const std::string& field, const std::string& context) {
  const Json& v = require_field(j, field, context);
  if (!v.is_number_integer())
    throw std::invalid_argument(context + ": field '" + field + "' must be an integer");
  return v.get<int>();
}

int get_int_or(const Json& j, const std::string& field, int fallback,
               const std::string& context) {
  if (!j.is_object() || !j.contains(field)) return fallback;
  return get_int(j, field, context);
}

bool get_bool_or(const Json& j, const std::string& field, bool fallback,
                 const std::string& context) {
  if (!j.is_object() || !j.contains(field)) return fallback;
  const Json& v = j.at(field);
  if (!v.is_boolean())
    throw std::invalid_argument(context + ": field '" + field + "' must be a boolean");
  return v.get<bool>();
}

std::string get_string(const Json& j, const std::string& field, const std::string& context) {
  const Json& v = require_field(j, field, context);
  if (!v.is_string())
    throw std::invalid_argument(context + ": field '" + field + "' must be a string");
  return v.get<std::string>();
}

std::string get_string_or(const Json& j, const std::string& field, const std::string& fallback,
                          const std::string& context) {
  if (!j.is_object() || !j.contains(field)) return fallback;
  return get_string(j, field, context);
}

// ---------------------------------------------------------------------------
// Serializers.
// ---------------------------------------------------------------------------

Json json_of(const Mesh1D& mesh) {
  return Json{{"topology", topology_name(mesh.topology)},
              {"n", mesh.n},
              {"extent", mesh.extent}};
}

Json json_of(const MetricState& state) {
  Json j{{"backend", backend_name(state.backend)},
         {"mesh", json_of(state.mesh)},
         {"beta", state.beta}};
  if (state.backend == Backend::Berger) {
    j["a"] = state.a;
    j["b"] = state.b;
    j["c"] = state.c;
  } else {
    j["phi"] = state.phi;
    j["psi"] = state.psi;
  }
  return j;
}

Json json_of(const FlowConfig& config) {
  return Json{{"dt", config.dt},
              {"t_final", config.t_final},
              {"scheme", scheme_name(config.scheme)},
              {"normalized", config.normalized},
              {"renormalize", config.renormalize},
              {"cfl_limit", config.cfl_limit},
              {"singularity_factor", config.singularity_factor},
              {"pole_projection", config.pole_projection}};
}

Json json_of(const CurvatureSummary& summary) {
  return Json{{"mean_R", summary.mean_R},
              {"min_R", summary.min_R},
              {"max_R", summary.max_R},
              {"ricci_lower_bound", summary.ricci_lower_bound},
              {"max_traceless", summary.max_traceless},
              {"volume", summary.volume}};
}

Json json_of(const Trajectory& traj) {
  Json states = Json::array();
  for (const auto& s : traj.states) states.push_back(json_of(s));
  Json summaries = Json::array();
  for (const auto& s : traj.summaries) summaries.push_back(json_of(s));
  return Json{{"config", json_of(traj.config)},
              {"times", traj.times},
              {"states", std::move(states)},
              {"summaries", std::move(summaries)},
              {"volume", traj.volume0},
              {"singular", traj.singular},
              {"singular_time", traj.singular_time}};
}

Json json_of(const BackwardConfig& config) {
  return Json{{"tau0", config.tau0},
              {"cfl_limit", config.cfl_limit},
              {"min_substeps", config.min_substeps},
              {"renormalize_mass", config.renormalize_mass}};
}

Json json_of(const BackwardRun& run) {
  Json states = Json::array();
  for (const auto& s : run.states) states.push_back(json_of(s));
  return Json{{"kind", backward_kind_name(run.kind)},
              {"config", json_of(run.config)},
              {"t", run.t},
              {"states", std::move(states)},
              {"w", run.w},
              {"mean_R", run.mean_R},
              {"tau", run.tau},
              {"tau_hat", run.tau_hat},
              {"mass_drift", run.mass_drift},
              {"coupling", run.coupling},
              {"positivity_clamps", run.positivity_clamps}};
}

Json json_of(const FPRun& run) {
  Json j{{"backward", json_of(run.backward)},
         {"potentials", run.potentials},
         {"S", run.S},
         {"I", run.I},
         {"K", run.K},
         {"lambda_inf", run.lambda_inf},
         {"fitted_rate", run.fitted_rate},
         {"sample_indices", run.sample_indices},
         {"sample_d2", run.sample_d2},
         {"hj_eps", run.hj_eps}};
  if (!run.hj_u.empty()) j["hj_u"] = run.hj_u;
  return j;
}

Json json_of(const FunctionalReport& report) {
  return Json{{"t", report.t},
              {"tau", report.tau},
              {"tau_hat", report.tau_hat},
              {"S", report.S},
              {"I", report.I},
              {"variation", report.variation},
              {"mean_R_w", report.mean_R_w},
              {"F", report.F},
              {"F_scaled", report.F_scaled},
              {"W", report.W},
              {"W_decomposed", report.W_decomposed},
              {"W_lsi_form", report.W_lsi_form},
              {"coupling", report.coupling}};
}

Json json_of(const SeriesResidual& series) {
  return Json{{"t", series.t}, {"residual", series.residual}, {"max_abs", series.max_abs}};
}

Json json_of(const WflowReport& report) {
  return Json{{"raw", json_of(report.raw)},
              {"scaled", json_of(report.scaled)},
              {"consistency", report.consistency}};
}

Json json_of(const WMonotonicityReport& report) {
  return Json{{"residual", json_of(report.residual)},
              {"t", report.t},
              {"dW_dbeta", report.dW_dbeta},
              {"integrand", report.integrand},
              {"min_integrand", report.min_integrand},
              {"min_dW_dbeta", report.min_dW_dbeta}};
}

Json json_of(const CurvatureEntropyReport& report) {
  return Json{{"residual", json_of(report.residual)},
              {"t", report.t},
              {"series", report.series},
              {"max_increase", report.max_increase},
              {"sharpening_slack", report.sharpening_slack},
              {"min_sharpening_slack", report.min_sharpening_slack},
              {"sharpening_applicable", report.sharpening_applicable}};
}

Json json_of(const ScalarEvolutionResidual& report) {
  return Json{{"times", report.times},
              {"l2", report.l2},
              {"sup", report.sup},
              {"mean_balance", report.mean_balance},
              {"max_l2", report.max_l2},
              {"max_sup", report.max_sup},
              {"max_mean_balance", report.max_mean_balance}};
}

Json json_of(const GradientIdentityReport& report) {
  return Json{{"t", report.t},
              {"residual", report.residual},
              {"max_residual", report.max_residual}};
}

Json json_of(const FisherReport& report) {
  return Json{{"t", report.t},
              {"didt", report.didt},
              {"term_defect", report.term_defect},
              {"term_flow", report.term_flow},
              {"term_drift", report.term_drift},
              {"term_hess", report.term_hess},
              {"identity_residual", report.identity_residual},
              {"max_identity_residual", report.max_identity_residual},
              {"min_inequality_slack", report.min_inequality_slack},
              {"min_pairwise_slack", report.min_pairwise_slack}};
}

Json json_of(const ConvergenceReport& report) {
  return Json{{"applicable", report.applicable},
              {"lambda_inf", report.lambda_inf},
              {"bound_rate", report.bound_rate},
              {"fitted_rate", report.fitted_rate},
              {"min_exp_slack", report.min_exp_slack},
              {"min_talagrand_slack", report.min_talagrand_slack},
              {"min_convexity_slack", report.min_convexity_slack},
              {"max_d2_increase", report.max_d2_increase},
              {"sample_t", report.sample_t},
              {"sample_S", report.sample_S},
              {"sample_d2", report.sample_d2}};
}

Json json_of(const HJResidualReport& report) {
  return Json{{"t", report.t},
              {"residual", report.residual},
              {"max_residual", report.max_residual}};
}

Json json_of(const HopfColeSweep& sweep) {
  return Json{{"eps", sweep.eps}, {"gap", sweep.gap}, {"monotone", sweep.monotone}};
}

Json json_of(const ComparisonReport& report) {
  return Json{{"t", report.t},
              {"res_a", report.res_a},
              {"res_b", report.res_b},
              {"res_c", report.res_c},
              {"max_res_a", report.max_res_a},
              {"max_res_b", report.max_res_b},
              {"max_res_c", report.max_res_c},
              {"initial_slope", report.initial_slope},
              {"initial_slope_expected", report.initial_slope_expected}};
}

Json json_of(const PhiEnergyReport& report) {
  return Json{{"hess_term", report.hess_term},
              {"ricci_term", report.ricci_term},
              {"var_R", report.var_R},
              {"residual", report.residual},
              {"dirichlet", report.dirichlet},
              {"spectral_bound", report.spectral_bound},
              {"slack", report.slack}};
}

Json json_of(const InequalityReport& report) {
  return Json{{"S", report.S},
              {"variation", report.variation},
              {"diam", report.diam},
              {"d1", report.d1},
              {"d2", report.d2},
              {"pinsker_slack", report.pinsker_slack},
              {"kr_gap", report.kr_gap},
              {"power_slack_s1", report.power_slack_s1},
              {"power_slack_s2", report.power_slack_s2},
              {"talagrand_slack", report.talagrand_slack},
              {"quartic_slack", report.quartic_slack}};
}

Json json_of(const CurveLengthReport& report) {
  return Json{{"lambda", report.lambda},
              {"otto_speed", report.otto_speed},
              {"otto_length", report.otto_length},
              {"chain_length", report.chain_length},
              {"rel_gap", report.rel_gap},
              {"max_hj_residual", report.max_hj_residual},
              {"frozen_geometry", report.frozen_geometry}};
}

// ---------------------------------------------------------------------------
// Parsers.
// ---------------------------------------------------------------------------

namespace {

std::vector<double> get_double_vector(const Json& j, const std::string& field,
                                      const std::string& context) {
  const Json& v = require_field(j, field, context);
  if (!v.is_array())
    throw std::invalid_argument(context + ": field '" + field + "' must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number())
      throw std::invalid_argument(context + ": field '" + field +
                                  "' must contain only numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace

Mesh1D mesh_from_json(const Json& j) {
  Mesh1D mesh;
  mesh.topology = topology_from_name(get_string(j, "topology", "mesh"));
  mesh.n = get_int(j, "n", "mesh");
  mesh.extent = get_double(j, "extent", "mesh");
  validate(mesh);
  return mesh;
}

MetricState state_from_json(const Json& j) {
  MetricState s;
  s.backend = backend_from_name(get_string(j, "backend", "state"));
  s.mesh = mesh_from_json(require_field(j, "mesh", "state"));
  s.beta = get_double_or(j, "beta", 0.0, "state");
  if (s.backend == Backend::Berger) {
    s.a = get_double(j, "a", "state");
    s.b = get_double(j, "b", "state");
    s.c = get_double(j, "c", "state");
  } else {
    s.phi = get_double_vector(j, "phi", "state");
    s.psi = get_double_vector(j, "psi", "state");
  }
  validate(s);
  return s;
}

FlowConfig flow_config_from_json(const Json& j) {
  FlowConfig c;
  c.dt = get_double_or(j, "dt", c.dt, "flow config");
  c.t_final = get_double_or(j, "t_final", c.t_final, "flow config");
  c.scheme = scheme_from_name(get_string_or(j, "scheme", scheme_name(c.scheme), "flow config"));
  c.normalized = get_bool_or(j, "normalized", c.normalized, "flow config");
  c.renormalize = get_bool_or(j, "renormalize", c.renormalize, "flow config");
  c.cfl_limit = get_double_or(j, "cfl_limit", c.cfl_limit, "flow config");
  c.singularity_factor =
      get_double_or(j, "singularity_factor", c.singularity_factor, "flow config");
  c.pole_projection = get_bool_or(j, "pole_projection", c.pole_projection, "flow config");
  return c;
}

BackwardConfig backward_config_from_json(const Json& j) {
  BackwardConfig c;
  c.tau0 = get_double_or(j, "tau0", c.tau0, "backward config");
  c.cfl_limit = get_double_or(j, "cfl_limit", c.cfl_limit, "backward config");
  c.min_substeps = get_int_or(j, "min_substeps", c.min_substeps, "backward config");
  c.renormalize_mass =
      get_bool_or(j, "renormalize_mass", c.renormalize_mass, "backward config");
  return c;
}

Trajectory trajectory_from_json(const Json& j) {
  Trajectory traj;
  traj.config = flow_config_from_json(require_field(j, "config", "trajectory"));
  traj.times = get_double_vector(j, "times", "trajectory");
  const Json& states = require_field(j, "states", "trajectory");
  if (!states.is_array())
    throw std::invalid_argument("trajectory: field 'states' must be an array");
  for (const auto& e : states) traj.states.push_back(state_from_json(e));
  const Json& summaries = require_field(j, "summaries", "trajectory");
  if (!summaries.is_array())
    throw std::invalid_argument("trajectory: field 'summaries' must be an array");
  for (const auto& e : summaries) {
    CurvatureSummary s;
    s.mean_R = get_double(e, "mean_R", "curvature summary");
    s.min_R = get_double(e, "min_R", "curvature summary");
    s.max_R = get_double(e, "max_R", "curvature summary");
    s.ricci_lower_bound = get_double(e, "ricci_lower_bound", "curvature summary");
    s.max_traceless = get_double(e, "max_traceless", "curvature summary");
    s.volume = get_double(e, "volume", "curvature summary");
    traj.summaries.push_back(s);
  }
  traj.volume0 = get_double(j, "volume", "trajectory");
  traj.singular = get_bool_or(j, "singular", false, "trajectory");
  traj.singular_time = get_double_or(j, "singular_time", 0.0, "trajectory");
  if (traj.times.size() != traj.states.size() || traj.times.size() != traj.summaries.size())
    throw std::invalid_argument("trajectory: times/states/summaries lengths disagree");
  return traj;
}

BackwardRun backward_run_from_json(const Json& j) {
  BackwardRun run;
  run.kind = backward_kind_from_name(get_string(j, "kind", "backward run"));
  run.config = backward_config_from_json(require_field(j, "config", "backward run"));
  run.t = get_double_vector(j, "t", "backward run");
  const Json& states = require_field(j, "states", "backward run");
  if (!states.is_array())
    throw std::invalid_argument("backward run: field 'states' must be an array");
  for (const auto& e : states) run.states.push_back(state_from_json(e));
  const Json& w = require_field(j, "w", "backward run");
  if (!w.is_array())
    throw std::invalid_argument("backward run: field 'w' must be an array");
  for (size_t k = 0; k < w.size(); ++k) {
    const Json& row = w[k];
    if (!row.is_array())
      throw std::invalid_argument("backward run: field 'w' must be an array of arrays");
    std::vector<double> values;
    values.reserve(row.size());
    for (const auto& v : row) {
      if (!v.is_number())
        throw std::invalid_argument("backward run: field 'w' has a non-numeric entry");
      values.push_back(v.get<double>());
    }
    run.w.push_back(std::move(values));
  }
  run.mean_R = get_double_vector(j, "mean_R", "backward run");
  run.tau = get_double_vector(j, "tau", "backward run");
  run.tau_hat = get_double_vector(j, "tau_hat", "backward run");
  run.mass_drift = get_double_vector(j, "mass_drift", "backward run");
  run.coupling = get_double_vector(j, "coupling", "backward run");
  run.positivity_clamps = get_int_or(j, "positivity_clamps", 0, "backward run");
  const size_t m = run.t.size();
  if (run.states.size() != m || run.w.size() != m || run.mean_R.size() != m ||
      run.tau.size() != m || run.tau_hat.size() != m)
    throw std::invalid_argument("backward run: series lengths disagree");
  return run;
}

// ---------------------------------------------------------------------------
// Files.
// ---------------------------------------------------------------------------

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

}  // namespace riccilab
