#pragma once

/// @file otto.hpp
/// @brief Formal Riemannian calculus on the space of probability measures
///        over a reduced state: weighted Poisson solves for tangent
///        potentials, the curvature potential, inner products, Bochner-type
///        energy identities, Hessian lower-bound checks, and measure
///        rearrangement (monotone transport) maps.

#include <vector>

#include "riccilab/geometry.hpp"

namespace riccilab {

// ---------------------------------------------------------------------------
// Weighted Poisson solves (direct flux integration).
// ---------------------------------------------------------------------------

/// Solves op.apply(u) = rhs for the mean-zero u (against the cell measure),
/// after projecting rhs onto the discrete compatibility space (zero V-sum).
/// The solve inverts the discrete operator exactly: the residual is rounding
/// noise, not a discretization error.
std::vector<double> solve_flux_poisson(const FluxOperator& op, const std::vector<double>& rhs);

/// max_i |op.apply(u) - rhs_projected| -- the exactness diagnostic.
double flux_poisson_residual(const FluxOperator& op, const std::vector<double>& u,
                             const std::vector<double>& rhs);

/// Mean-zero solution of div(N grad u) = rhs * dPi-density on the state,
/// i.e. the N-weighted Laplacian applied to u equals the projected rhs.
std::vector<double> solve_weighted_poisson(const MetricState& state,
                                           const std::vector<double>& N,
                                           const std::vector<double>& rhs);

// ---------------------------------------------------------------------------
// Tangent potentials.
// ---------------------------------------------------------------------------

/// Curvature potential: Delta Phi = -(R - <R>), mean zero against dPi.
std::vector<double> phi_potential(const MetricState& state);
std::vector<double> phi_potential(const MetricState& state, const CurvatureData& curv);

/// Half-trace rate of a metric curve, (1/2) tr(g^{-1} dg/dlambda), from two
/// bracketing states (centered logarithmic difference).
std::vector<double> half_trace_rate(const MetricState& before, const MetricState& after,
                                    double dlambda);

/// Tangent potential of the fiducial-measure curve lambda -> dPi_lambda:
/// solves Delta Theta = -(trh - <trh>) with trh the half-trace rate.
std::vector<double> theta_potential(const MetricState& state, const std::vector<double>& trh);

/// Tangent potential of a weighted-measure curve lambda -> w_lambda dPi_lambda:
/// solves div(w grad Psi) = -(dw/dlambda + w (trh - <trh>)) as densities
/// against dPi.  trh may be empty for a frozen metric.
std::vector<double> psi_potential(const MetricState& state, const std::vector<double>& w,
                                  const std::vector<double>& dw_dlambda,
                                  const std::vector<double>& trh);

/// Otto inner product <u,v>_N = int g(grad u, grad v) N dPi.
double otto_inner(const MetricState& state, const std::vector<double>& N,
                  const std::vector<double>& u, const std::vector<double>& v);

// ---------------------------------------------------------------------------
// Identities and bounds for the curvature potential.
// ---------------------------------------------------------------------------

/// int |Hess Phi|^2 dPi + int Ric(grad Phi, grad Phi) dPi = Var R.
struct PhiEnergyReport {
  double hess_term = 0.0;
  double ricci_term = 0.0;
  double var_R = 0.0;
  double residual = 0.0;      ///< lhs - rhs
  double dirichlet = 0.0;     ///< int |grad Phi|^2 dPi
  double spectral_bound = 0.0;///< (2/3) Var R / K when K > 0, else +inf
  double slack = 0.0;         ///< spectral_bound - dirichlet
};
PhiEnergyReport phi_energy_identity(const MetricState& state);

/// Pointwise lower bound of the combined tensor 2 Ric - (<R>/3) g + Hess Phi,
/// scanned over nodes and eigendirections.  This is the stiffness constant
/// driving the Fisher-information decay.
double combined_tensor_bound(const MetricState& state);

// ---------------------------------------------------------------------------
// Monotone rearrangement (Moser) maps between states on a shared chart.
// ---------------------------------------------------------------------------

/// Monotone map intertwining the fiducial measures of two states on the same
/// mesh: x(y) matches the cumulative functions, so carrying dPi_target
/// through x(.) reproduces dPi_source.  jacobian stores the density ratio
/// that factorizes the pull-back.
struct MoserMap {
  std::vector<double> to_x;      ///< source-chart coordinate for each target node
  std::vector<double> jacobian;  ///< dPi_target / (dPi_source o map) density ratio
  double pullback_residual = 0.0;///< max cumulative-mass mismatch of the map
};
MoserMap moser_map(const MetricState& source, const MetricState& target);

/// Density (against dPi_target) of the measure obtained by carrying
/// w dPi_source through the monotone rearrangement onto target.  The result
/// is renormalized to unit mass on the target state.
std::vector<double> transfer_density(const MetricState& source, const MetricState& target,
                                     const std::vector<double>& w);

/// Exact decomposition of relative entropy under a change of fiducial state:
/// S[w dPi_0 || dPi_1] = S[w dPi_0 || dPi_0] - int ln(dPi_1/dPi_0) w dPi_0.
/// Returns both sides (they agree to rounding by construction).
struct EntropySplit {
  double direct = 0.0;      ///< entropy of the transported density against dPi_1
  double decomposed = 0.0;  ///< S_0 minus the log-ratio correction
};
EntropySplit entropy_split(const MetricState& state0, const MetricState& state1,
                           const std::vector<double>& w);

}  // namespace riccilab
