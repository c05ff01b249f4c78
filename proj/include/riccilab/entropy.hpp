#pragma once

/// @file entropy.hpp
/// @brief Entropy-type functionals of a density against the fiducial measure
///        and the balance laws they satisfy along backward runs: the
///        entropy/Fisher/mean-curvature balance, the shrinker-entropy
///        decomposition and its monotonicity, the rescaled-entropy flow
///        identities, the weighted curvature-entropy decay with its integrated
///        sharpening, and the variational characterization of the entropy.

#include <vector>

#include "riccilab/perelman.hpp"

namespace riccilab {

double relative_entropy(const MetricState& state, const std::vector<double>& w);
double fisher_information(const MetricState& state, const std::vector<double>& w);
/// int |w - 1| dPi.
double variation_distance(const MetricState& state, const std::vector<double>& w);
/// Log-Sobolev expression (1/(2 rho)) (I + B) - S.
double lsi_value(double rho, double B, double S, double I);

/// All per-snapshot functionals at (state, w, tau).
struct FunctionalReport {
  double t = 0.0, tau = 0.0, tau_hat = 0.0;
  double S = 0.0;            ///< int w ln w dPi
  double I = 0.0;            ///< int |grad ln w|^2 w dPi
  double variation = 0.0;    ///< int |w - 1| dPi
  double mean_R_w = 0.0;     ///< int R w dPi
  double F = 0.0;            ///< int (R + |grad f|^2) e^{-f} dmu
  double F_scaled = 0.0;     ///< (4 pi tau)^{-3/2} F  (= I + mean_R_w exactly)
  double W = 0.0;            ///< shrinker entropy, direct quadrature
  double W_decomposed = 0.0; ///< tau (I + mean_R_w) - S + ln(Vol (4 pi tau)^{-3/2}) - 3
  double W_lsi_form = 0.0;   ///< LSI((2 tau)^{-1}; mean_R_w) + ln(Vol/(4 pi tau)^{3/2}) - 3
  double coupling = 0.0;
};
FunctionalReport functionals(const MetricState& state, const std::vector<double>& w,
                             double tau, double tau_hat, double t);

/// Residual series of a balance law at interior snapshot times.
struct SeriesResidual {
  std::vector<double> t;
  std::vector<double> residual;
  double max_abs = 0.0;
};

/// dS/dt = -I - <R>_w + <R>_Sigma along a backward run.
SeriesResidual entropy_balance(const BackwardRun& run);

/// Rescaled-entropy flow: with G = S + ln((4 pi tau)^{3/2}/Vol) + 3/2,
///   raw:    d/dt [S + ln((4 pi tau)^{3/2}/Vol)] + (4 pi tau)^{-3/2} F - (3/2)/tau = 0
///   scaled: d/dt [tau G] + W + (2/3) <R>_Sigma tau G = 0
/// and the exact algebra scaled = tau * raw once d(tau G)/dt is expanded with
/// the tau evolution law; `consistency` reports the worst gap of that algebra.
struct WflowReport {
  SeriesResidual raw;
  SeriesResidual scaled;
  double consistency = 0.0;
};
WflowReport wflow_balance(const BackwardRun& run);

/// Shrinker-entropy monotonicity: dW/dbeta = 2 tau int |Ric + Hess f -
/// g/(2 tau)|^2 w dPi along the coupled backward run (beta = -t direction).
struct WMonotonicityReport {
  SeriesResidual residual;        ///< dW/dbeta - integrand at interior times
  std::vector<double> t;
  std::vector<double> dW_dbeta;
  std::vector<double> integrand;  ///< 2 tau int |...|^2 dpi >= 0
  double min_integrand = 0.0;
  double min_dW_dbeta = 0.0;
};
WMonotonicityReport w_monotonicity(const BackwardRun& run);

/// Weighted curvature entropy y(t) = tau_hat <R>_w:
///   residual of dy/dt = -2 tau_hat int |Ric|^2 w dPi,
///   monotonicity of the series, and the integrated sharpening
///   <R>_w(t) <= e^{A(t)} <R>_w(0) / (1 + (2/3) <R>_w(0) int_0^t e^{A}).
struct CurvatureEntropyReport {
  SeriesResidual residual;
  std::vector<double> t;
  std::vector<double> series;          ///< tau_hat <R>_w
  double max_increase = 0.0;           ///< worst forward difference (<= 0 ideal)
  std::vector<double> sharpening_slack;///< bound - value (when <R>_w(0) > 0)
  double min_sharpening_slack = 0.0;
  bool sharpening_applicable = false;  ///< requires <R>_w(0) > 0
};
CurvatureEntropyReport curvature_entropy(const BackwardRun& run);

/// Variational check: S = sup_phi { int phi w dPi - ln int e^phi dPi }.
/// Returns max over random candidate fields of (value(phi) - S); the
/// candidate phi = ln w attains 0 exactly and is always included.
double variational_entropy_gap(const MetricState& state, const std::vector<double>& w,
                               int candidates, unsigned long long seed);

}  // namespace riccilab
