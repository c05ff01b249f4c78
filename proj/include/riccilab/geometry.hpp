#pragma once

/// @file geometry.hpp
/// @brief Differential-geometric operators on symmetry-reduced states:
///        curvature data, covariant derivatives of invariant scalars, a
///        conservative Laplace-Beltrami operator, Hessian quadratic forms,
///        and measure-weighted integrals.

#include <array>
#include <vector>

#include "riccilab/metric.hpp"

namespace riccilab {

/// Profile derivatives of a warped state.  On the pole-capped interval these
/// use O(h^4) stencils: the curvature ratios psi_ss/psi and (1-psi_s^2)/psi^2
/// are indeterminate at the poles and lose one order of h to the division, so
/// fourth-order inputs keep the pointwise relative error at O(h^2) uniformly.
struct WarpedDerivs {
  std::vector<double> phi_x, psi_x, psi_xx;
  std::vector<double> psi_s, psi_ss;  ///< arclength derivatives
};
WarpedDerivs warped_derivs(const MetricState& state);

struct CurvatureData {
  std::vector<double> R;                          ///< scalar curvature
  std::array<std::vector<double>, 3> ric_eigen;   ///< Ricci eigenvalue fields
  std::vector<double> ric_norm_sq;                ///< |Ric|^2 pointwise
  std::vector<double> traceless_norm_sq;          ///< |Ric - (R/3) g|^2
  double mean_R = 0.0;                            ///< volume average of R
  double ricci_lower_bound = 0.0;                 ///< largest K with Ric >= K g
};
CurvatureData curvature(const MetricState& state);

/// Arclength derivative (1/phi) d/dx of an invariant scalar (O(h^2)).
std::vector<double> s_deriv(const MetricState& state, const std::vector<double>& u,
                            Parity p = Parity::Even);

/// |grad u|^2 = (du/ds)^2.
std::vector<double> grad_norm_sq(const MetricState& state, const std::vector<double>& u,
                                 Parity p = Parity::Even);

/// Hessian eigen-components of an invariant scalar: radial u_ss and the
/// doubly degenerate sphere component (psi_s/psi) u_s.
struct HessianData {
  std::vector<double> rad, sph;
};
HessianData hessian(const MetricState& state, const std::vector<double>& u,
                    Parity p = Parity::Even);

/// |Hess u|^2 = rad^2 + 2 sph^2 pointwise.
std::vector<double> hess_norm_sq(const MetricState& state, const std::vector<double>& u,
                                 Parity p = Parity::Even);

/// Ric(grad u, grad u) pointwise (radial Ricci eigenvalue times u_s^2).
std::vector<double> ric_grad_form(const MetricState& state, const CurvatureData& curv,
                                  const std::vector<double>& u, Parity p = Parity::Even);

// ---------------------------------------------------------------------------
// Conservative Laplace-Beltrami operator (flux form).
// ---------------------------------------------------------------------------

/// Discrete flux operator: cell weights V_i (the measure) and face
/// conductances W_k = 4 pi psi_f^2 / phi_f, with exactly vanishing flux
/// through interval poles.  apply() discretizes the Laplace-Beltrami operator
/// as (1/V_i)(F_{i+1} - F_i); the result sums to zero against V exactly and
/// the associated bilinear form is symmetric.
struct FluxOperator {
  Topology topology = Topology::Circle;
  int n = 0;
  double h = 0.0;
  std::vector<double> W;  ///< face conductances (n on circle, n+1 on interval)
  std::vector<double> V;  ///< cell measure weights
  double volume = 0.0;

  std::vector<double> apply(const std::vector<double>& u) const;
  /// Same operator with a per-cell density N folded into the conductances
  /// (arithmetic face average): discretizes div(N grad u) / V-weighting.
  FluxOperator weighted(const std::vector<double>& N) const;
};

FluxOperator flux_operator(const MetricState& state);

/// Conservative Laplace-Beltrami of an invariant scalar (zeros on the
/// homogeneous backend).
std::vector<double> laplacian(const MetricState& state, const std::vector<double>& u);

// ---------------------------------------------------------------------------
// Integrals.
// ---------------------------------------------------------------------------

double integrate_mu(const MetricState& state, const std::vector<double>& f);
/// Normalized average against d Pi = d mu / Vol.
double mean_sigma(const MetricState& state, const std::vector<double>& f);
/// Integral of f against w d Pi (expectation under the density w).
double integrate_wPi(const MetricState& state, const std::vector<double>& w,
                     const std::vector<double>& f);

}  // namespace riccilab
