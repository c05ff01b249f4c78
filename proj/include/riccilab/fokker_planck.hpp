#pragma once

/// @file fokker_planck.hpp
/// @brief Drift-diffusion of a probability density along the backward flow,
///        with the curvature-fluctuation potential as drift: entropy
///        gradient-flow identity, Fisher-information dissipation, exponential
///        convergence diagnostics, the logarithmic (viscous Hamilton-Jacobi)
///        transform, and the comparison identities against the
///        mass-conserving conjugate diffusion.

#include <cstddef>
#include <vector>

#include "riccilab/flow.hpp"
#include "riccilab/metric.hpp"
#include "riccilab/perelman.hpp"

namespace riccilab {

/// Drift-diffusion run with per-snapshot diagnostics.
struct FPRun {
  BackwardRun backward;                         ///< times, states, densities
  std::vector<std::vector<double>> potentials;  ///< drift potential per time
  std::vector<double> S;                        ///< relative entropy
  std::vector<double> I;                        ///< Fisher information
  std::vector<double> K;                        ///< combined tensor lower bound
  double lambda_inf = 0.0;                      ///< 3 * inf_t K(t)
  double fitted_rate = 0.0;                     ///< least-squares decay rate of S
  std::vector<size_t> sample_indices;           ///< transport sampling times
  std::vector<double> sample_d2;                ///< quadratic distance to dPi
  std::vector<std::vector<double>> hj_u;        ///< optional log-transform series
  double hj_eps = 0.0;
};

/// One explicit midpoint step of dw/dt = Lap w - grad Phi . grad w on a frozen
/// state.  Throws when dt violates the parabolic stability bound; clamps
/// near-zero values and renormalizes mass.
std::vector<double> fp_step(const MetricState& state, const std::vector<double>& w,
                            const std::vector<double>& phi_pot, double dt,
                            double cfl_limit = 0.2);

/// Full drift-diffusion run backward along a forward trajectory, with the
/// potential recomputed from the instantaneous metric at every snapshot and
/// all diagnostics populated (including quadratic-transport distances to the
/// fiducial measure at up to eight evenly spaced times).
FPRun run_backward_fp(const Trajectory& forward, const std::vector<double>& w0,
                      const BackwardConfig& config = {});

/// Least-squares exponential decay rate of a positive series (fit of ln S
/// over the window where S > 1e-8); 0 when the window is degenerate.
double fit_decay_rate(const std::vector<double>& t, const std::vector<double>& S);

// ---------------------------------------------------------------------------
// Identity and inequality reports.
// ---------------------------------------------------------------------------

/// Entropy gradient-flow identity dS/dt = -I, as a residual per interior time.
struct GradientIdentityReport {
  std::vector<double> t;
  std::vector<double> residual;
  double max_residual = 0.0;
};
GradientIdentityReport gradient_identity(const FPRun& run);

/// Term-by-term Fisher-information dissipation identity
///   dI/dt = T_defect + T_flow + T_drift + T_hess
/// where T_defect couples to the residual of the numerical density solution,
/// T_flow is the metric-evolution quadratic form, T_drift the combined
/// curvature/potential quadratic form, and T_hess = -2 int |Hess ln w|^2 dw.
/// Also evaluates the dissipation inequality dI/dt <= -2 K I and the
/// integrated two-time form I(s) <= I(t) e^{-2 int K}.
struct FisherReport {
  std::vector<double> t;  ///< interior times
  std::vector<double> didt;
  std::vector<double> term_defect, term_flow, term_drift, term_hess;
  std::vector<double> identity_residual;
  double max_identity_residual = 0.0;
  double min_inequality_slack = 0.0;  ///< min_t [ -2 K I - dI/dt ]
  double min_pairwise_slack = 0.0;    ///< min_{s>t} [ I(t) e^{-2 int K} - I(s) ]
};
FisherReport fisher_decay(const FPRun& run);

/// Exponential-convergence diagnostics on a positive-curvature run:
/// fitted decay rate vs (2/3) lambda_inf, the pointwise exponential bound,
/// the quadratic-transport (Talagrand) bound, entropy convexity in time, and
/// monotonicity of the transport distance to equilibrium.
struct ConvergenceReport {
  bool applicable = false;  ///< lambda_inf > 0
  double lambda_inf = 0.0;
  double bound_rate = 0.0;  ///< (2/3) lambda_inf
  double fitted_rate = 0.0;
  double min_exp_slack = 0.0;        ///< min_t [ S(0) e^{-bound_rate t} - S(t) ]
  double min_talagrand_slack = 0.0;  ///< min_k [ S - (lambda_inf/6) d2^2 ]
  double min_convexity_slack = 0.0;  ///< min_t [ d2S/dt2 - bound_rate^2 S ]
  double max_d2_increase = 0.0;      ///< over consecutive sampled times
  std::vector<double> sample_t, sample_S, sample_d2;
};
ConvergenceReport convergence_report(const FPRun& run);

// ---------------------------------------------------------------------------
// Logarithmic transform and the viscous Hamilton-Jacobi correspondence.
// ---------------------------------------------------------------------------

/// Stores u = -2 eps ln w on the run (guarding near-zero densities).
void hopf_cole(FPRun& run, double eps);

/// Default transform scale (lambda_inf/3) (4 pi mu0)^{2/3} with mu0 the second
/// moment of the initial density about its median; falls back to 0.05 when
/// the curvature bound is not positive or the backend is homogeneous.
double default_epsilon(const FPRun& run);

/// Residual of eps du/dt + |grad u|^2/2 - eps (Lap u - grad Phi . grad u)
/// for the log transform of the run's density, sup norm per interior time.
struct HJResidualReport {
  std::vector<double> t;
  std::vector<double> residual;
  double max_residual = 0.0;
};
HJResidualReport hj_residual(const FPRun& run, double eps);

/// inf_y [ U(y) + d(x,y)^2 / (2 t) ] by exhaustive minimization over mesh
/// nodes of a frozen state.
std::vector<double> hopf_lax(const MetricState& state, const std::vector<double>& U,
                             double t);

/// Plain heat evolution on a frozen metric WITHOUT mass renormalization (the
/// carrier of the vanishing-viscosity comparison, where the constant matters).
std::vector<double> heat_evolve_frozen(const MetricState& state, std::vector<double> w,
                                       double t_final, double cfl_limit = 0.2);

/// For each eps (strictly decreasing): evolve w0 = e^{-U/(2 eps)} by heat flow
/// to time eps*t, transform back, and compare with the exhaustive inf-
/// convolution at time t.  monotone reports whether the sup gap decreases
/// along the sweep.
struct HopfColeSweep {
  std::vector<double> eps;
  std::vector<double> gap;  ///< sup |u_eps - inf-convolution|
  bool monotone = false;
};
HopfColeSweep hopf_cole_sweep(const MetricState& state, const std::vector<double>& U,
                              double t, const std::vector<double>& eps_list);

// ---------------------------------------------------------------------------
// Comparison with the mass-conserving conjugate diffusion.
// ---------------------------------------------------------------------------

/// Residual series along a conjugate-heat run, with P = int grad Phi . grad w
/// dPi the drift-density pairing:
///   (a) dS/dt + I + P = 0
///   (b) P = int (R - <R>) w dPi
///   (c) dP/dt = -2 [ int |Ric^o|^2 w dPi - <|Ric^o|^2> ]
///               - (2/3) int R (R - <R>) w dPi - (1/3) Var R
///   (d) at w == 1 the initial slope of P equals -Var R.
struct ComparisonReport {
  std::vector<double> t;  ///< interior times
  std::vector<double> res_a, res_c;
  std::vector<double> res_b;  ///< all times
  double max_res_a = 0.0, max_res_b = 0.0, max_res_c = 0.0;
  double initial_slope = 0.0;           ///< one-sided dP/dt at t = 0
  double initial_slope_expected = 0.0;  ///< -Var R at the start state
};
ComparisonReport perelman_comparison(const BackwardRun& run);

}  // namespace riccilab
