#pragma once

/// @file perelman.hpp
/// @brief Backward-time coupling along a stored flow trajectory: the scale
///        parameter tau (ODE and closed-form routes), the unscaled companion
///        tau_hat, the conjugate mass-preserving diffusion and the drifted
///        (Fokker-Planck) diffusion, and the potential/density dictionary.

#include <vector>

#include "riccilab/flow.hpp"
#include "riccilab/geometry.hpp"

namespace riccilab {

// ---------------------------------------------------------------------------
// Scale parameter routes.  Both consume the same piecewise-linear mean-
// curvature interpolant on the backward grid t (increasing from 0).
// ---------------------------------------------------------------------------

/// d tau/dt = 1 - (2/3) <R>(t) tau, integrated by dense RK4 substeps.
std::vector<double> tau_ode(const std::vector<double>& t, const std::vector<double>& mean_R,
                            double tau0);

/// tau(t) = e^{-A(t)} [tau0 + int_0^t e^{A}], A(t) = (2/3) int_0^t <R>;
/// the inner integrals are exact trapezoids (piecewise-linear <R>) plus
/// per-segment Gauss quadrature of e^{A}.
std::vector<double> tau_closed_form(const std::vector<double>& t,
                                    const std::vector<double>& mean_R, double tau0);

/// Unscaled internal form tau_hat(t) = tau0 e^{-A(t)}.
std::vector<double> tau_hat_series(const std::vector<double>& t,
                                   const std::vector<double>& mean_R, double tau0);

// ---------------------------------------------------------------------------
// Potential/density dictionary at fixed (state, tau):
//   w = (4 pi tau)^{-3/2} Vol e^{-f},   int w dPi = 1  <=>  coupling residual 0.
// ---------------------------------------------------------------------------

std::vector<double> f_from_w(const MetricState& state, const std::vector<double>& w,
                             double tau);
std::vector<double> w_from_f(const MetricState& state, const std::vector<double>& f,
                             double tau);
/// |(4 pi tau)^{-3/2} int e^{-f} dmu - 1|.
double coupling_residual(const MetricState& state, const std::vector<double>& f, double tau);

// ---------------------------------------------------------------------------
// Backward runs.
// ---------------------------------------------------------------------------

enum class BackwardKind {
  ConjugateHeat,  ///< dw/dt = Lap w - w (R - <R>)
  FokkerPlanck    ///< dw/dt = Lap w - grad Phi . grad w
};

struct BackwardConfig {
  double tau0 = 0.5;
  double cfl_limit = 0.2;      ///< substep bound dt <= cfl * h^2 * min(phi^2)
  int min_substeps = 1;
  bool renormalize_mass = true;
};

/// Backward evolution record.  t = beta_final - beta increases from 0; the
/// geometry snapshots are the forward trajectory reversed, and densities are
/// stored at every snapshot.
struct BackwardRun {
  BackwardKind kind = BackwardKind::ConjugateHeat;
  BackwardConfig config;
  std::vector<double> t;
  std::vector<MetricState> states;
  std::vector<std::vector<double>> w;
  std::vector<double> mean_R;      ///< <R>_Sigma at each snapshot
  std::vector<double> tau, tau_hat;
  std::vector<double> mass_drift;  ///< per-snapshot mass renormalization minus one
  std::vector<double> coupling;    ///< coupling residual of f(w, tau) per snapshot
  int positivity_clamps = 0;       ///< count of clamped near-zero density nodes
};

/// Runs the requested diffusion backward along a forward trajectory, starting
/// from density w0 (normalized against the final-time fiducial measure).
/// Geometry inside snapshot intervals is interpolated linearly; each interval
/// is divided into CFL-safe midpoint (RK2) substeps; mass is renormalized
/// against the current fiducial measure after every substep.
BackwardRun run_backward(const Trajectory& forward, const std::vector<double>& w0,
                         BackwardKind kind, const BackwardConfig& config);

}  // namespace riccilab
