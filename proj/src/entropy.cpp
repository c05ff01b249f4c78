#include "riccilab/entropy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace riccilab {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> log_field(const std::vector<double>& w, const char* what) {
  std::vector<double> out(w.size());
  for (size_t i = 0; i < w.size(); ++i) {
    if (!(w[i] > 0.0)) throw std::invalid_argument(std::string(what) + ": density must be positive");
    out[i] = std::log(w[i]);
  }
  return out;
}

constexpr std::array<double, 8> kGaussX = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGaussW = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

}  // namespace

double relative_entropy(const MetricState& state, const std::vector<double>& w) {
  const auto lw = log_field(w, "relative_entropy");
  std::vector<double> integrand(w.size());
  for (size_t i = 0; i < w.size(); ++i) integrand[i] = w[i] * lw[i];
  return mean_sigma(state, integrand);
}

double fisher_information(const MetricState& state, const std::vector<double>& w) {
  if (!state.warped()) return 0.0;
  const auto lw = log_field(w, "fisher_information");
  auto g = grad_norm_sq(state, lw);
  for (size_t i = 0; i < g.size(); ++i) g[i] *= w[i];
  return mean_sigma(state, g);
}

double variation_distance(const MetricState& state, const std::vector<double>& w) {
  std::vector<double> integrand(w.size());
  for (size_t i = 0; i < w.size(); ++i) integrand[i] = std::abs(w[i] - 1.0);
  return mean_sigma(state, integrand);
}

double lsi_value(double rho, double B, double S, double I) {
  return (I + B) / (2.0 * rho) - S;
}

FunctionalReport functionals(const MetricState& state, const std::vector<double>& w,
                             double tau, double tau_hat, double t) {
  FunctionalReport rep;
  rep.t = t;
  rep.tau = tau;
  rep.tau_hat = tau_hat;
  rep.S = relative_entropy(state, w);
  rep.I = fisher_information(state, w);
  rep.variation = variation_distance(state, w);
  const auto curv = curvature(state);
  rep.mean_R_w = integrate_wPi(state, w, curv.R);
  const auto f = f_from_w(state, w, tau);
  rep.coupling = coupling_residual(state, f, tau);
  const double vol = volume(state);
  const double scale = std::pow(4.0 * kPi * tau, -1.5);
  // F and W by direct quadrature against (4 pi tau)^{-3/2} e^{-f} dmu.
  const auto gsq = state.warped() ? grad_norm_sq(state, f) : std::vector<double>(f.size(), 0.0);
  std::vector<double> Fint(f.size()), Wint(f.size());
  for (size_t i = 0; i < f.size(); ++i) {
    const double e = std::exp(-f[i]);
    Fint[i] = (curv.R[i] + gsq[i]) * e;
    Wint[i] = (tau * (gsq[i] + curv.R[i]) + f[i] - 3.0) * scale * e;
  }
  rep.F = integrate_mu(state, Fint);
  rep.F_scaled = scale * rep.F;
  rep.W = integrate_mu(state, Wint);
  const double logC = std::log(vol) - 1.5 * std::log(4.0 * kPi * tau);
  rep.W_decomposed = tau * (rep.I + rep.mean_R_w) - rep.S + logC - 3.0;
  rep.W_lsi_form = lsi_value(0.5 / tau, rep.mean_R_w, rep.S, rep.I) + logC - 3.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Balance laws along backward runs.
// ---------------------------------------------------------------------------

namespace {

struct RunSeries {
  std::vector<double> S, I, meanRw, W, vol;
};

RunSeries run_series(const BackwardRun& run) {
  RunSeries s;
  const size_t J = run.t.size();
  s.S.resize(J);
  s.I.resize(J);
  s.meanRw.resize(J);
  s.W.resize(J);
  s.vol.resize(J);
  for (size_t j = 0; j < J; ++j) {
    const auto rep = functionals(run.states[j], run.w[j], run.tau[j], run.tau_hat[j], run.t[j]);
    s.S[j] = rep.S;
    s.I[j] = rep.I;
    s.meanRw[j] = rep.mean_R_w;
    s.W[j] = rep.W;
    s.vol[j] = volume(run.states[j]);
  }
  return s;
}

}  // namespace

SeriesResidual entropy_balance(const BackwardRun& run) {
  SeriesResidual out;
  const auto s = run_series(run);
  const size_t J = run.t.size();
  for (size_t j = 1; j + 1 < J; ++j) {
    const double dt = run.t[j + 1] - run.t[j - 1];
    const double dS = (s.S[j + 1] - s.S[j - 1]) / dt;
    const double rhs = -s.I[j] - s.meanRw[j] + run.mean_R[j];
    out.t.push_back(run.t[j]);
    out.residual.push_back(dS - rhs);
    out.max_abs = std::max(out.max_abs, std::abs(dS - rhs));
  }
  return out;
}

WflowReport wflow_balance(const BackwardRun& run) {
  WflowReport rep;
  const auto s = run_series(run);
  const size_t J = run.t.size();
  std::vector<double> u(J), G(J);
  for (size_t j = 0; j < J; ++j) {
    u[j] = s.S[j] + 1.5 * std::log(4.0 * kPi * run.tau[j]) - std::log(s.vol[j]);
    G[j] = u[j] + 1.5;
  }
  for (size_t j = 1; j + 1 < J; ++j) {
    const double dt = run.t[j + 1] - run.t[j - 1];
    const double du = (u[j + 1] - u[j - 1]) / dt;
    const double Fs = s.I[j] + s.meanRw[j];  // (4 pi tau)^{-3/2} F, exact algebra
    const double raw = du + Fs - 1.5 / run.tau[j];
    // Expanded d(tau G)/dt with the tau evolution law.
    const double dG = (G[j + 1] - G[j - 1]) / dt;
    const double tau_dot = 1.0 - (2.0 / 3.0) * run.mean_R[j] * run.tau[j];
    const double scaled = tau_dot * G[j] + run.tau[j] * dG + s.W[j] +
                          (2.0 / 3.0) * run.mean_R[j] * run.tau[j] * G[j];
    rep.raw.t.push_back(run.t[j]);
    rep.raw.residual.push_back(raw);
    rep.raw.max_abs = std::max(rep.raw.max_abs, std::abs(raw));
    rep.scaled.t.push_back(run.t[j]);
    rep.scaled.residual.push_back(scaled);
    rep.scaled.max_abs = std::max(rep.scaled.max_abs, std::abs(scaled));
    rep.consistency = std::max(rep.consistency, std::abs(scaled - run.tau[j] * raw));
  }
  return rep;
}

WMonotonicityReport w_monotonicity(const BackwardRun& run) {
  WMonotonicityReport rep;
  const auto s = run_series(run);
  const size_t J = run.t.size();
  rep.min_integrand = std::numeric_limits<double>::infinity();
  rep.min_dW_dbeta = std::numeric_limits<double>::infinity();
  for (size_t j = 1; j + 1 < J; ++j) {
    const double dt = run.t[j + 1] - run.t[j - 1];
    const double dW_dbeta = -(s.W[j + 1] - s.W[j - 1]) / dt;
    const auto& state = run.states[j];
    const auto curv = curvature(state);
    const double tau = run.tau[j];
    const auto f = f_from_w(state, run.w[j], tau);
    std::vector<double> dens(f.size());
    if (state.warped()) {
      const auto hess = hessian(state, f);
      for (size_t i = 0; i < f.size(); ++i) {
        const double rad = curv.ric_eigen[0][i] + hess.rad[i] - 0.5 / tau;
        const double sph = curv.ric_eigen[1][i] + hess.sph[i] - 0.5 / tau;
        dens[i] = (rad * rad + 2.0 * sph * sph) * run.w[j][i];
      }
    } else {
      for (size_t i = 0; i < f.size(); ++i) {
        double acc = 0.0;
        for (int e = 0; e < 3; ++e) {
          const double v = curv.ric_eigen[static_cast<size_t>(e)][i] - 0.5 / tau;
          acc += v * v;
        }
        dens[i] = acc * run.w[j][i];
      }
    }
    const double integrand = 2.0 * tau * mean_sigma(state, dens);
    rep.t.push_back(run.t[j]);
    rep.dW_dbeta.push_back(dW_dbeta);
    rep.integrand.push_back(integrand);
    rep.residual.t.push_back(run.t[j]);
    rep.residual.residual.push_back(dW_dbeta - integrand);
    rep.residual.max_abs = std::max(rep.residual.max_abs, std::abs(dW_dbeta - integrand));
    rep.min_integrand = std::min(rep.min_integrand, integrand);
    rep.min_dW_dbeta = std::min(rep.min_dW_dbeta, dW_dbeta);
  }
  return rep;
}

CurvatureEntropyReport curvature_entropy(const BackwardRun& run) {
  CurvatureEntropyReport rep;
  const size_t J = run.t.size();
  std::vector<double> y(J), ric2w(J);
  for (size_t j = 0; j < J; ++j) {
    const auto& state = run.states[j];
    const auto curv = curvature(state);
    y[j] = run.tau_hat[j] * integrate_wPi(state, run.w[j], curv.R);
    ric2w[j] = integrate_wPi(state, run.w[j], curv.ric_norm_sq);
    rep.t.push_back(run.t[j]);
    rep.series.push_back(y[j]);
  }
  for (size_t j = 1; j + 1 < J; ++j) {
    const double dt = run.t[j + 1] - run.t[j - 1];
    const double dy = (y[j + 1] - y[j - 1]) / dt;
    const double r = dy + 2.0 * run.tau_hat[j] * ric2w[j];
    rep.residual.t.push_back(run.t[j]);
    rep.residual.residual.push_back(r);
    rep.residual.max_abs = std::max(rep.residual.max_abs, std::abs(r));
  }
  for (size_t j = 1; j < J; ++j) rep.max_increase = std::max(rep.max_increase, y[j] - y[j - 1]);
  // Integrated sharpening bound.
  const double rho0 = y[0] / run.tau_hat[0];
  rep.sharpening_applicable = rho0 > 0.0;
  if (rep.sharpening_applicable) {
    std::vector<double> A(J, 0.0), E(J, 0.0);
    for (size_t j = 1; j < J; ++j) {
      const double dt = run.t[j] - run.t[j - 1];
      A[j] = A[j - 1] + (2.0 / 3.0) * 0.5 * (run.mean_R[j - 1] + run.mean_R[j]) * dt;
      const double half = 0.5 * dt;
      const double r0 = run.mean_R[j - 1], r1 = run.mean_R[j];
      double acc = 0.0;
      for (int q = 0; q < 8; ++q) {
        const double zeta = half * (1.0 + kGaussX[q]);
        const double a = A[j - 1] + (2.0 / 3.0) * (r0 * zeta + 0.5 * (r1 - r0) * zeta * zeta / dt);
        acc += kGaussW[q] * std::exp(a);
      }
      E[j] = E[j - 1] + half * acc;
    }
    rep.min_sharpening_slack = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < J; ++j) {
      const double value = y[j] / run.tau_hat[j];
      const double bound = rho0 * std::exp(A[j]) / (1.0 + (2.0 / 3.0) * rho0 * E[j]);
      rep.sharpening_slack.push_back(bound - value);
      rep.min_sharpening_slack = std::min(rep.min_sharpening_slack, bound - value);
    }
  }
  return rep;
}

double variational_entropy_gap(const MetricState& state, const std::vector<double>& w,
                               int candidates, unsigned long long seed) {
  const double S = relative_entropy(state, w);
  const auto m = measure(state);
  auto value = [&](const std::vector<double>& phi) {
    double pairing = 0.0, logZ = 0.0;
    for (size_t i = 0; i < phi.size(); ++i) {
      pairing += phi[i] * w[i] * m.weights[i];
      logZ += std::exp(phi[i]) * m.weights[i];
    }
    return pairing / m.volume - std::log(logZ / m.volume);
  };
  double gap = value(log_field(w, "variational_entropy_gap")) - S;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.5, 2.0);
  for (int c = 0; c < candidates; ++c) {
    auto d = make_random_density(state, 0.4, 3, rng());
    auto phi = log_field(d, "variational_entropy_gap");
    const double scale = unif(rng);
    for (auto& v : phi) v *= scale;
    gap = std::max(gap, value(phi) - S);
  }
  return gap;
}

}  // namespace riccilab
