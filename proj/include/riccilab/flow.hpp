#pragma once

/// @file flow.hpp
/// @brief Volume-normalized intrinsic curvature flow on the reduced states:
///        time steppers, trajectory storage, the scalar-curvature evolution
///        residual, and the homothetic conversion from the unnormalized flow.

#include <vector>

#include "riccilab/geometry.hpp"
#include "riccilab/metric.hpp"

namespace riccilab {

enum class Scheme { ExplicitRK4, SemiImplicit };

struct FlowConfig {
  double dt = 1e-3;        ///< snapshot spacing in flow time
  double t_final = 0.1;    ///< total flow time
  Scheme scheme = Scheme::ExplicitRK4;
  bool normalized = true;  ///< volume-normalized flow (else the raw -2 Ric flow)
  bool renormalize = true; ///< pin the volume by exact homothety each substep
  double cfl_limit = 0.2;  ///< explicit diffusive step bound dt <= cfl*h^2*min(phi^2)
  double singularity_factor = 1e4;  ///< stop when max|R| exceeds factor*(1+max|R_0|)
  bool pole_projection = true;      ///< re-impose the smooth-cap condition psi_s(pole)=1
                                    ///< after each substep on the closed warped backend
};

/// Time-derivative of the metric coefficients under the (normalized) flow.
struct FlowRhs {
  double da = 0.0, db = 0.0, dc = 0.0;
  std::vector<double> dphi, dpsi;
  double mean_R = 0.0;
};
FlowRhs flow_rhs(const MetricState& state, bool normalized);

struct CurvatureSummary {
  double mean_R = 0.0, min_R = 0.0, max_R = 0.0;
  double ricci_lower_bound = 0.0, max_traceless = 0.0;
  double volume = 0.0;
};
CurvatureSummary summarize_curvature(const MetricState& state);

struct Trajectory {
  FlowConfig config;
  std::vector<double> times;          ///< flow time at each snapshot
  std::vector<MetricState> states;
  std::vector<CurvatureSummary> summaries;
  double volume0 = 0.0;               ///< initial (and pinned) volume
  bool singular = false;              ///< stopped early by the curvature cap
  double singular_time = 0.0;
};

/// One snapshot step of length dt (internally divided into CFL-safe
/// substeps for the explicit scheme on warped backends).
MetricState flow_step(const MetricState& state, double dt, const FlowConfig& config);

Trajectory run_flow(const MetricState& initial, const FlowConfig& config);

/// Pointwise residual of the scalar-curvature evolution law along a stored
/// trajectory, via centered differencing in time at the interior snapshots,
/// together with the integrated mean-curvature balance.
struct ScalarEvolutionResidual {
  std::vector<double> times;
  std::vector<double> l2;            ///< residual L2(dPi) norm per interior time
  std::vector<double> sup;           ///< residual sup norm per interior time
  std::vector<double> mean_balance;  ///< d<R>/dbeta - (2<|tracefree Ric|^2> - Var R / 3)
  double max_l2 = 0.0, max_sup = 0.0, max_mean_balance = 0.0;
};
ScalarEvolutionResidual scalar_evolution_residual(const Trajectory& traj);

/// Converts an unnormalized flow trajectory g~(eta) into normalized time:
/// g(beta(eta)) = (V0/V(eta))^(2/3) g~(eta), beta(eta) = int_0^eta
/// (V0/V)^(2/3) ds (cumulative trapezoid on the eta grid).
Trajectory homothetic_convert(const Trajectory& unnormalized);

}  // namespace riccilab
