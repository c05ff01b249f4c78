#include "riccilab/perelman.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "riccilab/otto.hpp"

namespace riccilab {

namespace {

constexpr double kPi = std::numbers::pi;

void check_grid(const std::vector<double>& t, const std::vector<double>& mean_R) {
  if (t.size() != mean_R.size() || t.size() < 2)
    throw std::invalid_argument("tau route: need matching grids with at least two points");
  for (size_t j = 1; j < t.size(); ++j)
    if (!(t[j] > t[j - 1])) throw std::invalid_argument("tau route: t must increase");
}

// Piecewise-linear interpolant of <R> on [t_j, t_{j+1}].
struct Segment {
  double t0, t1, r0, r1;
  double at(double t) const { return r0 + (r1 - r0) * (t - t0) / (t1 - t0); }
};

constexpr std::array<double, 8> kGaussX = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGaussW = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

}  // namespace

std::vector<double> tau_ode(const std::vector<double>& t, const std::vector<double>& mean_R,
                            double tau0) {
  check_grid(t, mean_R);
  std::vector<double> tau(t.size());
  tau[0] = tau0;
  double y = tau0;
  for (size_t j = 0; j + 1 < t.size(); ++j) {
    const Segment seg{t[j], t[j + 1], mean_R[j], mean_R[j + 1]};
    const int sub = 8;
    const double dt = (seg.t1 - seg.t0) / sub;
    auto rhs = [&](double tt, double yy) { return 1.0 - (2.0 / 3.0) * seg.at(tt) * yy; };
    double tt = seg.t0;
    for (int m = 0; m < sub; ++m) {
      const double k1 = rhs(tt, y);
      const double k2 = rhs(tt + 0.5 * dt, y + 0.5 * dt * k1);
      const double k3 = rhs(tt + 0.5 * dt, y + 0.5 * dt * k2);
      const double k4 = rhs(tt + dt, y + dt * k3);
      y += dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
      tt += dt;
    }
    tau[j + 1] = y;
  }
  return tau;
}

std::vector<double> tau_closed_form(const std::vector<double>& t,
                                    const std::vector<double>& mean_R, double tau0) {
  check_grid(t, mean_R);
  const size_t J = t.size();
  // A(t_j) by exact trapezoid (the interpolant is piecewise linear).
  std::vector<double> A(J, 0.0);
  for (size_t j = 1; j < J; ++j)
    A[j] = A[j - 1] + (2.0 / 3.0) * 0.5 * (mean_R[j - 1] + mean_R[j]) * (t[j] - t[j - 1]);
  // B(t_j) = int_0^{t_j} e^{A}; per-segment Gauss on the quadratic exponent.
  std::vector<double> B(J, 0.0);
  for (size_t j = 1; j < J; ++j) {
    const Segment seg{t[j - 1], t[j], mean_R[j - 1], mean_R[j]};
    const double half = 0.5 * (seg.t1 - seg.t0);
    const double mid = 0.5 * (seg.t0 + seg.t1);
    double acc = 0.0;
    for (int q = 0; q < 8; ++q) {
      const double tt = mid + half * kGaussX[q];
      // A(tt) inside the segment: A(t0) + (2/3) int_{t0}^{tt} <R>.
      const double dt = tt - seg.t0;
      const double a =
          A[j - 1] + (2.0 / 3.0) * (seg.r0 * dt + 0.5 * (seg.r1 - seg.r0) * dt * dt / (seg.t1 - seg.t0));
      acc += kGaussW[q] * std::exp(a);
    }
    B[j] = B[j - 1] + half * acc;
  }
  std::vector<double> tau(J);
  for (size_t j = 0; j < J; ++j) tau[j] = std::exp(-A[j]) * (tau0 + B[j]);
  return tau;
}

std::vector<double> tau_hat_series(const std::vector<double>& t,
                                   const std::vector<double>& mean_R, double tau0) {
  check_grid(t, mean_R);
  std::vector<double> out(t.size());
  double A = 0.0;
  out[0] = tau0;
  for (size_t j = 1; j < t.size(); ++j) {
    A += (2.0 / 3.0) * 0.5 * (mean_R[j - 1] + mean_R[j]) * (t[j] - t[j - 1]);
    out[j] = tau0 * std::exp(-A);
  }
  return out;
}

std::vector<double> f_from_w(const MetricState& state, const std::vector<double>& w,
                             double tau) {
  const double vol = volume(state);
  const double logC = std::log(vol) - 1.5 * std::log(4.0 * kPi * tau);
  std::vector<double> f(w.size());
  for (size_t i = 0; i < w.size(); ++i) {
    if (!(w[i] > 0.0)) throw std::invalid_argument("f_from_w: density must be positive");
    f[i] = logC - std::log(w[i]);
  }
  return f;
}

std::vector<double> w_from_f(const MetricState& state, const std::vector<double>& f,
                             double tau) {
  const double vol = volume(state);
  const double logC = std::log(vol) - 1.5 * std::log(4.0 * kPi * tau);
  std::vector<double> w(f.size());
  for (size_t i = 0; i < f.size(); ++i) w[i] = std::exp(logC - f[i]);
  return w;
}

double coupling_residual(const MetricState& state, const std::vector<double>& f, double tau) {
  std::vector<double> e(f.size());
  for (size_t i = 0; i < f.size(); ++i) e[i] = std::exp(-f[i]);
  const double integral = integrate_mu(state, e);
  return std::abs(std::pow(4.0 * kPi * tau, -1.5) * integral - 1.0);
}

// ---------------------------------------------------------------------------
// Backward stepping.
// ---------------------------------------------------------------------------

namespace {

double min_phi_sq(const MetricState& s) {
  double m = s.phi.empty() ? 1.0 : s.phi[0] * s.phi[0];
  for (double v : s.phi) m = std::min(m, v * v);
  return m;
}

// Backward-time density derivative at the interpolated state.
std::vector<double> density_rhs(const MetricState& state, const std::vector<double>& w,
                                BackwardKind kind) {
  if (!state.warped()) {
    // Homogeneous backend: fields are constant, Lap w = 0 and R = <R>, so the
    // density stays identically one; both diffusions are trivial.
    return std::vector<double>(w.size(), 0.0);
  }
  const auto curv = curvature(state);
  auto out = laplacian(state, w);
  if (kind == BackwardKind::ConjugateHeat) {
    for (size_t i = 0; i < out.size(); ++i) out[i] -= w[i] * (curv.R[i] - curv.mean_R);
  } else {
    const auto phi = phi_potential(state, curv);
    const auto phis = s_deriv(state, phi);
    const auto ws = s_deriv(state, w);
    for (size_t i = 0; i < out.size(); ++i) out[i] -= phis[i] * ws[i];
  }
  return out;
}

double renormalize_density(const MetricState& state, std::vector<double>& w) {
  const auto m = measure(state);
  double z = 0.0;
  for (size_t i = 0; i < w.size(); ++i) z += w[i] * m.weights[i];
  const double scale = m.volume / z;
  for (auto& v : w) v *= scale;
  return scale;
}

}  // namespace

BackwardRun run_backward(const Trajectory& forward, const std::vector<double>& w0,
                         BackwardKind kind, const BackwardConfig& config) {
  if (forward.states.size() < 2) throw std::invalid_argument("run_backward: need a trajectory");
  BackwardRun run;
  run.kind = kind;
  run.config = config;
  const size_t J = forward.states.size();
  const double beta_final = forward.times.back();
  for (size_t j = 0; j < J; ++j) {
    const size_t r = J - 1 - j;
    run.t.push_back(beta_final - forward.times[r]);
    run.states.push_back(forward.states[r]);
  }
  const int n = std::max(run.states[0].mesh.n, 1);
  if (static_cast<int>(w0.size()) != n)
    throw std::invalid_argument("run_backward: density size does not match mesh");

  std::vector<double> w = w0;
  double drift = renormalize_density(run.states[0], w) - 1.0;
  run.w.push_back(w);
  run.mass_drift.push_back(drift);
  run.mean_R.push_back(curvature(run.states[0]).mean_R);

  for (size_t j = 0; j + 1 < J; ++j) {
    const auto& sa = run.states[j];
    const auto& sb = run.states[j + 1];
    const double dt = run.t[j + 1] - run.t[j];
    int sub = config.min_substeps;
    if (sa.warped()) {
      const double h = sa.mesh.h();
      const double limit =
          config.cfl_limit * h * h * std::min(min_phi_sq(sa), min_phi_sq(sb));
      sub = std::max(sub, static_cast<int>(std::ceil(dt / limit)));
    }
    const double ds = dt / sub;
    double applied = 1.0;
    for (int m = 0; m < sub; ++m) {
      const double th0 = static_cast<double>(m) / sub;
      const double thm = (m + 0.5) / sub;
      const auto s_mid = lerp_states(sa, sb, thm);
      const auto k1 = density_rhs(lerp_states(sa, sb, th0), w, kind);
      std::vector<double> wm(w.size());
      for (size_t i = 0; i < w.size(); ++i) wm[i] = w[i] + 0.5 * ds * k1[i];
      const auto k2 = density_rhs(s_mid, wm, kind);
      for (size_t i = 0; i < w.size(); ++i) w[i] += ds * k2[i];
      // Positivity guard: clamp vanishing-or-negative nodes (recorded).
      double wmax = 0.0;
      for (double v : w) wmax = std::max(wmax, v);
      const double floor_val = 1e-14 * wmax;
      for (auto& v : w) {
        if (v < floor_val) {
          v = floor_val;
          ++run.positivity_clamps;
        }
      }
      if (config.renormalize_mass) {
        const double th1 = static_cast<double>(m + 1) / sub;
        applied *= renormalize_density(lerp_states(sa, sb, th1), w);
      }
    }
    run.w.push_back(w);
    run.mass_drift.push_back(applied - 1.0);
    run.mean_R.push_back(curvature(sb).mean_R);
  }

  run.tau = tau_ode(run.t, run.mean_R, config.tau0);
  run.tau_hat = tau_hat_series(run.t, run.mean_R, config.tau0);
  run.coupling.resize(J);
  for (size_t j = 0; j < J; ++j) {
    const auto f = f_from_w(run.states[j], run.w[j], run.tau[j]);
    run.coupling[j] = coupling_residual(run.states[j], f, run.tau[j]);
  }
  return run;
}

}  // namespace riccilab
