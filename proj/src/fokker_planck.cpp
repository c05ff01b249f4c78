#include "riccilab/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "riccilab/entropy.hpp"
#include "riccilab/geometry.hpp"
#include "riccilab/otto.hpp"
#include "riccilab/transport.hpp"

namespace riccilab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDensityFloorScale = 1e-14;

double min_phi_sq(const MetricState& state) {
  double mn = std::numeric_limits<double>::infinity();
  for (double v : state.phi) mn = std::min(mn, v * v);
  return mn;
}

std::vector<double> drift_rhs(const MetricState& state, const FluxOperator& op,
                              const std::vector<double>& phi_pot,
                              const std::vector<double>& w) {
  auto rhs = op.apply(w);
  if (state.warped()) {
    const auto ws = s_deriv(state, w);
    const auto ps = s_deriv(state, phi_pot);
    for (size_t i = 0; i < rhs.size(); ++i) rhs[i] -= ps[i] * ws[i];
  }
  return rhs;
}

void clamp_and_renormalize(const MetricState& state, std::vector<double>& w) {
  double mx = 0.0;
  for (double v : w) mx = std::max(mx, v);
  const double floor = kDensityFloorScale * mx;
  for (auto& v : w)
    if (v < floor) v = floor;
  const auto m = measure(state);
  double mass = 0.0;
  for (size_t i = 0; i < w.size(); ++i) mass += w[i] * m.weights[i];
  mass /= m.volume;
  for (auto& v : w) v /= mass;
}

double central_diff(const std::vector<double>& t, const std::vector<double>& y, size_t j) {
  return (y[j + 1] - y[j - 1]) / (t[j + 1] - t[j - 1]);
}

std::vector<double> log_density(const std::vector<double>& w) {
  std::vector<double> out(w.size());
  double mx = 0.0;
  for (double v : w) mx = std::max(mx, v);
  const double floor = std::max(1e-300, kDensityFloorScale * mx);
  for (size_t i = 0; i < w.size(); ++i) out[i] = std::log(std::max(w[i], floor));
  return out;
}

}  // namespace

std::vector<double> fp_step(const MetricState& state, const std::vector<double>& w,
                            const std::vector<double>& phi_pot, double dt,
                            double cfl_limit) {
  validate(state);
  if (w.size() != static_cast<size_t>(state.mesh.n))
    throw std::invalid_argument("fp_step: density size mismatch");
  if (state.warped()) {
    const double h = state.mesh.h();
    const double dt_max = cfl_limit * h * h * min_phi_sq(state);
    if (dt > dt_max * (1.0 + 1e-12))
      throw std::invalid_argument("fp_step: dt violates the parabolic stability bound");
  }
  const auto op = flux_operator(state);
  const auto k1 = drift_rhs(state, op, phi_pot, w);
  std::vector<double> wm(w.size());
  for (size_t i = 0; i < w.size(); ++i) wm[i] = w[i] + 0.5 * dt * k1[i];
  const auto k2 = drift_rhs(state, op, phi_pot, wm);
  std::vector<double> out(w.size());
  for (size_t i = 0; i < w.size(); ++i) out[i] = w[i] + dt * k2[i];
  for (double v : out)
    if (!(v > -1e-9))
      throw std::runtime_error("fp_step: density went negative beyond the clamp guard");
  clamp_and_renormalize(state, out);
  return out;
}

double fit_decay_rate(const std::vector<double>& t, const std::vector<double>& S) {
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  size_t n = 0;
  for (size_t j = 0; j < t.size(); ++j) {
    if (!(S[j] > 1e-8)) continue;
    const double y = std::log(S[j]);
    st += t[j];
    sy += y;
    stt += t[j] * t[j];
    sty += t[j] * y;
    ++n;
  }
  if (n < 2) return 0.0;
  const double denom = n * stt - st * st;
  if (std::abs(denom) < 1e-300) return 0.0;
  return -(n * sty - st * sy) / denom;
}

FPRun run_backward_fp(const Trajectory& forward, const std::vector<double>& w0,
                      const BackwardConfig& config) {
  FPRun run;
  run.backward = run_backward(forward, w0, BackwardKind::FokkerPlanck, config);
  const size_t J = run.backward.t.size();
  run.potentials.resize(J);
  run.S.resize(J);
  run.I.resize(J);
  run.K.resize(J);
  double kmin = std::numeric_limits<double>::infinity();
  for (size_t j = 0; j < J; ++j) {
    const auto& st = run.backward.states[j];
    const auto& w = run.backward.w[j];
    run.potentials[j] = phi_potential(st);
    run.S[j] = relative_entropy(st, w);
    run.I[j] = fisher_information(st, w);
    run.K[j] = combined_tensor_bound(st);
    kmin = std::min(kmin, run.K[j]);
  }
  run.lambda_inf = 3.0 * kmin;
  run.fitted_rate = fit_decay_rate(run.backward.t, run.S);
  // Transport distances to the fiducial measure at up to eight sampled times.
  const size_t samples = std::min<size_t>(8, J);
  const std::vector<double> ones(w0.size(), 1.0);
  for (size_t k = 0; k < samples; ++k) {
    const size_t idx = samples == 1 ? 0 : k * (J - 1) / (samples - 1);
    if (!run.sample_indices.empty() && run.sample_indices.back() == idx) continue;
    run.sample_indices.push_back(idx);
    run.sample_d2.push_back(
        wasserstein_reduced(run.backward.states[idx], run.backward.w[idx], ones, 2));
  }
  return run;
}

GradientIdentityReport gradient_identity(const FPRun& run) {
  const auto& t = run.backward.t;
  if (t.size() < 3) throw std::invalid_argument("gradient_identity: need at least 3 times");
  GradientIdentityReport rep;
  for (size_t j = 1; j + 1 < t.size(); ++j) {
    const double res = central_diff(t, run.S, j) + run.I[j];
    rep.t.push_back(t[j]);
    rep.residual.push_back(res);
    rep.max_residual = std::max(rep.max_residual, std::abs(res));
  }
  return rep;
}

FisherReport fisher_decay(const FPRun& run) {
  const auto& t = run.backward.t;
  if (t.size() < 3) throw std::invalid_argument("fisher_decay: need at least 3 times");
  FisherReport rep;
  rep.min_inequality_slack = std::numeric_limits<double>::infinity();
  for (size_t j = 1; j + 1 < t.size(); ++j) {
    const auto& st = run.backward.states[j];
    const auto& w = run.backward.w[j];
    const double didt = central_diff(t, run.I, j);
    double t_defect = 0.0, t_flow = 0.0, t_drift = 0.0, t_hess = 0.0;
    if (st.warped()) {
      const size_t n = w.size();
      const auto L = log_density(w);
      const auto Lnext = log_density(run.backward.w[j + 1]);
      const auto Lprev = log_density(run.backward.w[j - 1]);
      std::vector<double> Ldot(n);
      for (size_t i = 0; i < n; ++i) Ldot[i] = (Lnext[i] - Lprev[i]) / (t[j + 1] - t[j - 1]);
      const auto lapL = laplacian(st, L);
      const auto gsq = grad_norm_sq(st, L);
      const auto Ls = s_deriv(st, L);
      const auto Ps = s_deriv(st, run.potentials[j]);
      std::vector<double> defect(n);
      for (size_t i = 0; i < n; ++i)
        defect[i] = Ldot[i] - lapL[i] - gsq[i] + Ps[i] * Ls[i];
      const auto defect_s = s_deriv(st, defect);
      const auto curv = curvature(st);
      const auto ric_form = ric_grad_form(st, curv, L);
      const auto hessP = hessian(st, run.potentials[j]);
      const auto hsq = hess_norm_sq(st, L);
      std::vector<double> f_defect(n), f_flow(n), f_drift(n);
      for (size_t i = 0; i < n; ++i) {
        f_defect[i] = gsq[i] * defect[i] + 2.0 * Ls[i] * defect_s[i];
        f_flow[i] = -2.0 * ric_form[i] + (2.0 / 3.0) * curv.mean_R * gsq[i];
        f_drift[i] = -2.0 * (ric_form[i] + hessP.rad[i] * Ls[i] * Ls[i]);
      }
      t_defect = integrate_wPi(st, w, f_defect);
      t_flow = integrate_wPi(st, w, f_flow);
      t_drift = integrate_wPi(st, w, f_drift);
      t_hess = -2.0 * integrate_wPi(st, w, hsq);
    }
    const double res = didt - (t_defect + t_flow + t_drift + t_hess);
    rep.t.push_back(t[j]);
    rep.didt.push_back(didt);
    rep.term_defect.push_back(t_defect);
    rep.term_flow.push_back(t_flow);
    rep.term_drift.push_back(t_drift);
    rep.term_hess.push_back(t_hess);
    rep.identity_residual.push_back(res);
    rep.max_identity_residual = std::max(rep.max_identity_residual, std::abs(res));
    rep.min_inequality_slack =
        std::min(rep.min_inequality_slack, -2.0 * run.K[j] * run.I[j] - didt);
  }
  // Integrated two-time bound I(s) <= I(t) e^{-2 int_t^s K}.
  std::vector<double> CK(t.size(), 0.0);
  for (size_t j = 1; j < t.size(); ++j)
    CK[j] = CK[j - 1] + 0.5 * (run.K[j] + run.K[j - 1]) * (t[j] - t[j - 1]);
  rep.min_pairwise_slack = std::numeric_limits<double>::infinity();
  for (size_t a = 0; a < t.size(); ++a)
    for (size_t b = a + 1; b < t.size(); ++b) {
      const double slack = run.I[a] * std::exp(-2.0 * (CK[b] - CK[a])) - run.I[b];
      rep.min_pairwise_slack = std::min(rep.min_pairwise_slack, slack);
    }
  return rep;
}

ConvergenceReport convergence_report(const FPRun& run) {
  const auto& t = run.backward.t;
  ConvergenceReport rep;
  rep.lambda_inf = run.lambda_inf;
  rep.applicable = run.lambda_inf > 0.0;
  rep.bound_rate = (2.0 / 3.0) * run.lambda_inf;
  rep.fitted_rate = run.fitted_rate;
  rep.min_exp_slack = std::numeric_limits<double>::infinity();
  const double S0 = run.S.empty() ? 0.0 : run.S.front();
  for (size_t j = 0; j < t.size(); ++j)
    rep.min_exp_slack =
        std::min(rep.min_exp_slack, S0 * std::exp(-rep.bound_rate * t[j]) - run.S[j]);
  rep.min_convexity_slack = std::numeric_limits<double>::infinity();
  for (size_t j = 1; j + 1 < t.size(); ++j) {
    const double dt = 0.5 * (t[j + 1] - t[j - 1]);
    const double d2S = (run.S[j + 1] - 2.0 * run.S[j] + run.S[j - 1]) / (dt * dt);
    rep.min_convexity_slack =
        std::min(rep.min_convexity_slack, d2S - rep.bound_rate * rep.bound_rate * run.S[j]);
  }
  rep.min_talagrand_slack = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < run.sample_indices.size(); ++k) {
    const size_t idx = run.sample_indices[k];
    rep.sample_t.push_back(t[idx]);
    rep.sample_S.push_back(run.S[idx]);
    rep.sample_d2.push_back(run.sample_d2[k]);
    rep.min_talagrand_slack =
        std::min(rep.min_talagrand_slack,
                 run.S[idx] - (run.lambda_inf / 6.0) * run.sample_d2[k] * run.sample_d2[k]);
    if (k > 0)
      rep.max_d2_increase =
          std::max(rep.max_d2_increase, run.sample_d2[k] - run.sample_d2[k - 1]);
  }
  return rep;
}

void hopf_cole(FPRun& run, double eps) {
  run.hj_eps = eps;
  run.hj_u.clear();
  for (const auto& w : run.backward.w) {
    const auto L = log_density(w);
    std::vector<double> u(L.size());
    for (size_t i = 0; i < L.size(); ++i) u[i] = -2.0 * eps * L[i];
    run.hj_u.push_back(std::move(u));
  }
}

double default_epsilon(const FPRun& run) {
  const auto& st = run.backward.states.front();
  if (!(run.lambda_inf > 0.0) || !st.warped()) return 0.05;
  const auto m = measure_from_density(st, run.backward.w.front());
  double circumference = 0.0;
  if (st.mesh.topology == Topology::Circle) {
    const double h = st.mesh.h();
    for (double v : st.phi) circumference += h * v;
  }
  double acc = 0.0;
  double median = m.pos.back();
  for (size_t i = 0; i < m.pos.size(); ++i) {
    acc += m.mass[i];
    if (acc >= 0.5) {
      median = m.pos[i];
      break;
    }
  }
  double mu0 = 0.0;
  for (size_t i = 0; i < m.pos.size(); ++i) {
    double d = std::abs(m.pos[i] - median);
    if (st.mesh.topology == Topology::Circle) d = std::min(d, circumference - d);
    mu0 += m.mass[i] * d * d;
  }
  return (run.lambda_inf / 3.0) * std::pow(4.0 * kPi * mu0, 2.0 / 3.0);
}

HJResidualReport hj_residual(const FPRun& run, double eps) {
  const auto& t = run.backward.t;
  if (t.size() < 3) throw std::invalid_argument("hj_residual: need at least 3 times");
  HJResidualReport rep;
  for (size_t j = 1; j + 1 < t.size(); ++j) {
    const auto& st = run.backward.states[j];
    double worst = 0.0;
    if (st.warped()) {
      const auto L = log_density(run.backward.w[j]);
      const auto Lnext = log_density(run.backward.w[j + 1]);
      const auto Lprev = log_density(run.backward.w[j - 1]);
      const size_t n = L.size();
      std::vector<double> u(n), dudt(n);
      for (size_t i = 0; i < n; ++i) {
        u[i] = -2.0 * eps * L[i];
        dudt[i] = -2.0 * eps * (Lnext[i] - Lprev[i]) / (t[j + 1] - t[j - 1]);
      }
      const auto lapu = laplacian(st, u);
      const auto gsq = grad_norm_sq(st, u);
      const auto us = s_deriv(st, u);
      const auto Ps = s_deriv(st, run.potentials[j]);
      for (size_t i = 0; i < n; ++i) {
        const double res =
            eps * dudt[i] + 0.5 * gsq[i] - eps * (lapu[i] - Ps[i] * us[i]);
        worst = std::max(worst, std::abs(res));
      }
    }
    rep.t.push_back(t[j]);
    rep.residual.push_back(worst);
    rep.max_residual = std::max(rep.max_residual, worst);
  }
  return rep;
}

std::vector<double> hopf_lax(const MetricState& state, const std::vector<double>& U,
                             double t) {
  validate(state);
  if (!state.warped()) throw std::logic_error("hopf_lax: homogeneous backend");
  if (!(t > 0.0)) throw std::invalid_argument("hopf_lax: time must be positive");
  const int n = state.mesh.n;
  if (U.size() != static_cast<size_t>(n))
    throw std::invalid_argument("hopf_lax: field size mismatch");
  std::vector<double> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      const double d = node_distance(state, i, j);
      best = std::min(best, U[static_cast<size_t>(j)] + d * d / (2.0 * t));
    }
    out[static_cast<size_t>(i)] = best;
  }
  return out;
}

std::vector<double> heat_evolve_frozen(const MetricState& state, std::vector<double> w,
                                       double t_final, double cfl_limit) {
  validate(state);
  if (!state.warped()) return w;
  const auto op = flux_operator(state);
  const double h = state.mesh.h();
  const double dt_max = cfl_limit * h * h * min_phi_sq(state);
  const int steps = std::max(1, static_cast<int>(std::ceil(t_final / dt_max)));
  const double dt = t_final / steps;
  const size_t n = w.size();
  std::vector<double> wm(n), k1(n), k2(n);
  for (int s = 0; s < steps; ++s) {
    k1 = op.apply(w);
    for (size_t i = 0; i < n; ++i) wm[i] = w[i] + 0.5 * dt * k1[i];
    k2 = op.apply(wm);
    for (size_t i = 0; i < n; ++i) w[i] = std::max(w[i] + dt * k2[i], 1e-300);
  }
  return w;
}

HopfColeSweep hopf_cole_sweep(const MetricState& state, const std::vector<double>& U,
                              double t, const std::vector<double>& eps_list) {
  if (eps_list.size() < 2)
    throw std::invalid_argument("hopf_cole_sweep: need at least two scales");
  for (size_t k = 1; k < eps_list.size(); ++k)
    if (!(eps_list[k] < eps_list[k - 1]))
      throw std::invalid_argument("hopf_cole_sweep: scales must strictly decrease");
  const auto reference = hopf_lax(state, U, t);
  HopfColeSweep sweep;
  sweep.eps = eps_list;
  for (double eps : eps_list) {
    std::vector<double> w(U.size());
    for (size_t i = 0; i < U.size(); ++i) w[i] = std::exp(-U[i] / (2.0 * eps));
    w = heat_evolve_frozen(state, std::move(w), eps * t);
    double gap = 0.0;
    for (size_t i = 0; i < U.size(); ++i) {
      const double u = -2.0 * eps * std::log(w[i]);
      gap = std::max(gap, std::abs(u - reference[i]));
    }
    sweep.gap.push_back(gap);
  }
  sweep.monotone = true;
  for (size_t k = 1; k < sweep.gap.size(); ++k)
    if (!(sweep.gap[k] < sweep.gap[k - 1])) sweep.monotone = false;
  return sweep;
}

ComparisonReport perelman_comparison(const BackwardRun& run) {
  if (run.kind != BackwardKind::ConjugateHeat)
    throw std::invalid_argument("perelman_comparison: requires a conjugate-heat run");
  const auto& t = run.t;
  if (t.size() < 3) throw std::invalid_argument("perelman_comparison: need at least 3 times");
  const size_t J = t.size();
  std::vector<double> S(J), I(J), P(J), rhs_c(J);
  std::vector<double> var_R(J);
  ComparisonReport rep;
  for (size_t j = 0; j < J; ++j) {
    const auto& st = run.states[j];
    const auto& w = run.w[j];
    S[j] = relative_entropy(st, w);
    I[j] = fisher_information(st, w);
    const auto curv = curvature(st);
    std::vector<double> Rdev(w.size()), R2(w.size());
    for (size_t i = 0; i < w.size(); ++i) {
      Rdev[i] = curv.R[i] - curv.mean_R;
      R2[i] = curv.R[i] * curv.R[i];
    }
    var_R[j] = mean_sigma(st, R2) - curv.mean_R * curv.mean_R;
    if (st.warped()) {
      const auto phi = phi_potential(st, curv);
      const std::vector<double> ones(w.size(), 1.0);
      P[j] = otto_inner(st, ones, phi, w);
      const double res_b = P[j] - integrate_wPi(st, w, Rdev);
      rep.res_b.push_back(res_b);
      std::vector<double> RRdev(w.size());
      for (size_t i = 0; i < w.size(); ++i) RRdev[i] = curv.R[i] * Rdev[i];
      rhs_c[j] = -2.0 * (integrate_wPi(st, w, curv.traceless_norm_sq) -
                         mean_sigma(st, curv.traceless_norm_sq)) -
                 (2.0 / 3.0) * integrate_wPi(st, w, RRdev) - (1.0 / 3.0) * var_R[j];
    } else {
      P[j] = 0.0;
      rep.res_b.push_back(0.0);
      rhs_c[j] = 0.0;
    }
    rep.max_res_b = std::max(rep.max_res_b, std::abs(rep.res_b.back()));
  }
  for (size_t j = 1; j + 1 < J; ++j) {
    const double res_a = central_diff(t, S, j) + I[j] + P[j];
    const double res_c = central_diff(t, P, j) - rhs_c[j];
    rep.t.push_back(t[j]);
    rep.res_a.push_back(res_a);
    rep.res_c.push_back(res_c);
    rep.max_res_a = std::max(rep.max_res_a, std::abs(res_a));
    rep.max_res_c = std::max(rep.max_res_c, std::abs(res_c));
  }
  rep.initial_slope = (P[1] - P[0]) / (t[1] - t[0]);
  rep.initial_slope_expected = -var_R[0];
  return rep;
}

}  // namespace riccilab
