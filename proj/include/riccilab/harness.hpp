#pragma once

/// @file harness.hpp
/// @brief Scenario configuration, pipeline orchestration, artifact emission
///        (JSON / CSV / gnuplot scripts), and the reproducible run manifest.
///
/// A scenario is described by a single JSON document (see README for the
/// schema).  Each subcommand runs a slice of the pipeline
///   forward flow -> backward runs -> functional reports -> transport panel
/// and writes its artifacts into one output directory together with
/// `manifest.json`, which lists every artifact, a pass/fail summary of the
/// enabled checks, a digest of the configuration, and a digest of the
/// emitted bytes (reproducible for a fixed config + seed).

#include <string>
#include <vector>

#include "riccilab/flow.hpp"
#include "riccilab/json_io.hpp"
#include "riccilab/metric.hpp"
#include "riccilab/perelman.hpp"

namespace riccilab {

/// One backward diffusion requested by a scenario.
struct BackwardSpec {
  BackwardKind kind = BackwardKind::ConjugateHeat;
  double tau0 = 0.5;
  double w0_amplitude = 0.3;            ///< log-amplitude of the sampled density
  int w0_max_mode = 2;
  unsigned long long w0_seed = 0;       ///< 0 = derive from scenario seed + index
  double cfl_limit = 0.2;
  bool renormalize_mass = true;
};

/// Transport diagnostics panel.
struct TransportSpec {
  bool enabled = true;
  std::vector<double> times;  ///< sampling times (empty = endpoints + middle)
  int chain_segments = 16;    ///< segments for the action-vs-distance check
};

/// Which reports a scenario emits.
struct ReportToggles {
  bool functionals = true;        ///< per-snapshot entropy/information panel
  bool w_monotonicity = true;     ///< shrinker-entropy derivative identity
  bool curvature_entropy = true;  ///< weighted curvature-average decay
  bool phi_energy = true;         ///< fluctuation-potential energy identity
  bool comparison = false;        ///< drift-diffusion vs conjugate diffusion
  bool fisher = true;             ///< Fisher dissipation (drift runs only)
  bool convergence = true;        ///< exponential convergence (drift runs only)
  bool hopf_cole = false;         ///< log-transform residuals (drift runs only)
};

/// Full description of one scenario.
struct ScenarioConfig {
  std::string name = "scenario";
  unsigned long long seed = 1;

  /// berger | cylinder | round-sphere | warped-sphere | warped-circle
  std::string backend = "round-sphere";
  double berger_a = 0.25, berger_b = 0.25, berger_c = 0.25;
  double length = 6.283185307179586;  ///< circumference or polar chart length
  double psi0 = 1.0;                  ///< fiber radius for circle backends
  double perturb_amplitude = 0.05;    ///< random backends only
  int perturb_max_mode = 3;
  int mesh_n = 128;

  FlowConfig flow;
  std::vector<BackwardSpec> backward;
  ReportToggles reports;
  double hj_eps = 0.0;  ///< 0 = automatic scale
  TransportSpec transport;
  double tol_factor = 10.0;  ///< multiplier on differencing-limited thresholds
  std::string out_dir = "out";
};

/// Parse/serialize a scenario; parse errors name the offending field.
ScenarioConfig scenario_from_json(const Json& j);
Json json_of(const ScenarioConfig& cfg);

/// Construct the initial metric for a scenario (seeded for random backends).
MetricState initial_state(const ScenarioConfig& cfg);

/// Densities w_0..w_segments translating a smooth bump along the reduced
/// coordinate of a frozen state, each positive and dPi-normalized; the bump
/// center glides by shift_frac of the total arclength.
std::vector<std::vector<double>> translating_bump_family(const MetricState& state, int segments,
                                                         double shift_frac);

/// One pass/fail entry of a manifest.
struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  ///< "<=" or ">=": value <relation> threshold
};

/// A recorded failure with the pipeline stage it came from.
struct ManifestError {
  std::string context;
  std::string message;
};

/// Summary of one command invocation.
struct RunManifest {
  std::string name;
  std::string command;
  std::string config_digest;  ///< digest of the canonical config JSON + seed
  std::string code_version;
  std::string output_digest;  ///< digest over artifact bytes, in listed order
  std::vector<std::string> artifacts;  ///< paths relative to the out dir
  std::vector<CheckResult> checks;
  std::vector<ManifestError> errors;
  bool all_passed() const;
};
Json json_of(const RunManifest& m);

/// FNV-1a 64-bit digest as fixed-width hex.
std::string digest_hex(const std::string& bytes);
/// Digest of a JSON document's canonical dump.
std::string digest_of(const Json& j);

/// Library version string recorded in manifests.
std::string code_version();

/// Subcommand pipelines.  Every runner writes artifacts plus `manifest.json`
/// under cfg.out_dir; module errors are recorded in the manifest (with the
/// stage as context) and partial outputs are kept.
RunManifest run_scenario(const ScenarioConfig& cfg);        ///< full pipeline
RunManifest command_flow(const ScenarioConfig& cfg);        ///< forward flow only
RunManifest command_perelman(const ScenarioConfig& cfg);    ///< conjugate-heat panel
RunManifest command_fokker_planck(const ScenarioConfig& cfg);  ///< drift-diffusion panel
RunManifest command_compare(const ScenarioConfig& cfg);     ///< comparison identities
RunManifest command_transport(const ScenarioConfig& cfg);   ///< transport panel
RunManifest command_entropy_report(const ScenarioConfig& cfg);  ///< functionals table
/// Re-emit CSV/JSON/plot artifacts from a completed run directory.
/// format: "csv" | "json" | "plot" | "all".  Unknown format -> invalid_argument.
RunManifest command_export(const ScenarioConfig& cfg, const std::string& format);

}  // namespace riccilab
