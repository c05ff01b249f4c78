#include "riccilab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace riccilab {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> zeros(const MetricState& state) {
  return std::vector<double>(static_cast<size_t>(std::max(state.mesh.n, 1)), 0.0);
}

}  // namespace

WarpedDerivs warped_derivs(const MetricState& state) {
  validate(state);
  if (!state.warped()) throw std::logic_error("warped_derivs: homogeneous backend");
  const bool hi = state.backend == Backend::WarpedSphere;
  WarpedDerivs d;
  d.phi_x = hi ? diff1_hi(state.mesh, state.phi, phi_parity)
               : diff1(state.mesh, state.phi, phi_parity);
  d.psi_x = hi ? diff1_hi(state.mesh, state.psi, psi_parity)
               : diff1(state.mesh, state.psi, psi_parity);
  d.psi_xx = hi ? diff2_hi(state.mesh, state.psi, psi_parity)
                : diff2(state.mesh, state.psi, psi_parity);
  const size_t n = state.phi.size();
  d.psi_s.resize(n);
  d.psi_ss.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const double f = state.phi[i];
    d.psi_s[i] = d.psi_x[i] / f;
    d.psi_ss[i] = d.psi_xx[i] / (f * f) - d.psi_x[i] * d.phi_x[i] / (f * f * f);
  }
  return d;
}

CurvatureData curvature(const MetricState& state) {
  validate(state);
  CurvatureData c;
  const int n = std::max(state.mesh.n, 1);
  if (state.backend == Backend::Berger) {
    const double a = state.a, b = state.b, cc = state.c;
    const double denom = 2.0 * a * b * cc;
    const double r1 = (a * a - (b - cc) * (b - cc)) / denom;
    const double r2 = (b * b - (cc - a) * (cc - a)) / denom;
    const double r3 = (cc * cc - (a - b) * (a - b)) / denom;
    const double R = r1 + r2 + r3;
    c.R.assign(static_cast<size_t>(n), R);
    c.ric_eigen[0].assign(static_cast<size_t>(n), r1);
    c.ric_eigen[1].assign(static_cast<size_t>(n), r2);
    c.ric_eigen[2].assign(static_cast<size_t>(n), r3);
    const double nsq = r1 * r1 + r2 * r2 + r3 * r3;
    c.ric_norm_sq.assign(static_cast<size_t>(n), nsq);
    c.traceless_norm_sq.assign(static_cast<size_t>(n), std::max(0.0, nsq - R * R / 3.0));
    c.mean_R = R;
    c.ricci_lower_bound = std::min({r1, r2, r3});
    return c;
  }
  const auto d = warped_derivs(state);
  c.R.resize(static_cast<size_t>(n));
  for (auto& e : c.ric_eigen) e.resize(static_cast<size_t>(n));
  c.ric_norm_sq.resize(static_cast<size_t>(n));
  c.traceless_norm_sq.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const size_t k = static_cast<size_t>(i);
    const double psi = state.psi[k];
    const double curv_rad = d.psi_ss[k] / psi;
    const double curv_sph = (1.0 - d.psi_s[k] * d.psi_s[k]) / (psi * psi);
    const double e_rad = -2.0 * curv_rad;
    const double e_sph = -curv_rad + curv_sph;
    c.ric_eigen[0][k] = e_rad;
    c.ric_eigen[1][k] = e_sph;
    c.ric_eigen[2][k] = e_sph;
    c.R[k] = e_rad + 2.0 * e_sph;
    c.ric_norm_sq[k] = e_rad * e_rad + 2.0 * e_sph * e_sph;
    c.traceless_norm_sq[k] = std::max(0.0, c.ric_norm_sq[k] - c.R[k] * c.R[k] / 3.0);
  }
  c.mean_R = mean_sigma(state, c.R);
  double lb = c.ric_eigen[0][0];
  for (int i = 0; i < n; ++i) {
    lb = std::min(lb, c.ric_eigen[0][static_cast<size_t>(i)]);
    lb = std::min(lb, c.ric_eigen[1][static_cast<size_t>(i)]);
  }
  c.ricci_lower_bound = lb;
  return c;
}

std::vector<double> s_deriv(const MetricState& state, const std::vector<double>& u, Parity p) {
  validate(state);
  if (!state.warped()) return zeros(state);
  auto ux = diff1(state.mesh, u, p);
  for (size_t i = 0; i < ux.size(); ++i) ux[i] /= state.phi[i];
  return ux;
}

std::vector<double> grad_norm_sq(const MetricState& state, const std::vector<double>& u,
                                 Parity p) {
  auto us = s_deriv(state, u, p);
  for (auto& v : us) v *= v;
  return us;
}

HessianData hessian(const MetricState& state, const std::vector<double>& u, Parity p) {
  validate(state);
  HessianData h;
  if (!state.warped()) {
    h.rad = zeros(state);
    h.sph = zeros(state);
    return h;
  }
  const auto d = warped_derivs(state);
  const auto ux = diff1(state.mesh, u, p);
  const auto uxx = diff2(state.mesh, u, p);
  const size_t n = u.size();
  h.rad.resize(n);
  h.sph.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const double f = state.phi[i];
    const double us = ux[i] / f;
    h.rad[i] = uxx[i] / (f * f) - ux[i] * d.phi_x[i] / (f * f * f);
    h.sph[i] = (d.psi_s[i] / state.psi[i]) * us;
  }
  return h;
}

std::vector<double> hess_norm_sq(const MetricState& state, const std::vector<double>& u,
                                 Parity p) {
  const auto h = hessian(state, u, p);
  std::vector<double> out(h.rad.size());
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = h.rad[i] * h.rad[i] + 2.0 * h.sph[i] * h.sph[i];
  return out;
}

std::vector<double> ric_grad_form(const MetricState& state, const CurvatureData& curv,
                                  const std::vector<double>& u, Parity p) {
  auto gsq = grad_norm_sq(state, u, p);
  for (size_t i = 0; i < gsq.size(); ++i) gsq[i] *= curv.ric_eigen[0][i];
  return gsq;
}

// ---------------------------------------------------------------------------
// Flux operator.
// ---------------------------------------------------------------------------

std::vector<double> FluxOperator::apply(const std::vector<double>& u) const {
  if (static_cast<int>(u.size()) != n)
    throw std::invalid_argument("flux apply: field size does not match operator");
  std::vector<double> out(static_cast<size_t>(n));
  if (topology == Topology::Circle) {
    for (int i = 0; i < n; ++i) {
      const int kl = i;                    // face between i-1 and i
      const int kr = (i + 1) % n;          // face between i and i+1
      const double ul = u[static_cast<size_t>((i - 1 + n) % n)];
      const double ur = u[static_cast<size_t>((i + 1) % n)];
      const double Fl = W[static_cast<size_t>(kl)] * (u[static_cast<size_t>(i)] - ul) / h;
      const double Fr = W[static_cast<size_t>(kr)] * (ur - u[static_cast<size_t>(i)]) / h;
      out[static_cast<size_t>(i)] = (Fr - Fl) / V[static_cast<size_t>(i)];
    }
  } else {
    for (int i = 0; i < n; ++i) {
      const double Fl = i == 0 ? 0.0
                               : W[static_cast<size_t>(i)] *
                                     (u[static_cast<size_t>(i)] - u[static_cast<size_t>(i - 1)]) / h;
      const double Fr = i == n - 1 ? 0.0
                                   : W[static_cast<size_t>(i + 1)] *
                                         (u[static_cast<size_t>(i + 1)] - u[static_cast<size_t>(i)]) / h;
      out[static_cast<size_t>(i)] = (Fr - Fl) / V[static_cast<size_t>(i)];
    }
  }
  return out;
}

FluxOperator FluxOperator::weighted(const std::vector<double>& N) const {
  if (static_cast<int>(N.size()) != n)
    throw std::invalid_argument("flux weighted: density size does not match operator");
  FluxOperator out = *this;
  const int nfaces = static_cast<int>(W.size());
  for (int k = 0; k < nfaces; ++k) {
    double avg;
    if (topology == Topology::Circle) {
      avg = 0.5 * (N[static_cast<size_t>((k - 1 + n) % n)] + N[static_cast<size_t>(k % n)]);
    } else {
      if (k == 0 || k == n) {
        avg = N[static_cast<size_t>(k == 0 ? 0 : n - 1)];  // pole faces carry W = 0 anyway
      } else {
        avg = 0.5 * (N[static_cast<size_t>(k - 1)] + N[static_cast<size_t>(k)]);
      }
    }
    out.W[static_cast<size_t>(k)] *= avg;
  }
  return out;
}

FluxOperator flux_operator(const MetricState& state) {
  validate(state);
  if (!state.warped())
    throw std::logic_error("flux_operator: homogeneous backend has trivial operator");
  FluxOperator op;
  op.topology = state.mesh.topology;
  op.n = state.mesh.n;
  op.h = state.mesh.h();
  const auto m = measure(state);
  op.V = m.weights;
  op.volume = m.volume;
  const auto phi_f = face_values(state.mesh, state.phi, phi_parity);
  const auto psi_f = face_values(state.mesh, state.psi, psi_parity);
  op.W.resize(phi_f.size());
  for (size_t k = 0; k < op.W.size(); ++k)
    op.W[k] = 4.0 * kPi * psi_f[k] * psi_f[k] / phi_f[k];
  if (op.topology == Topology::IntervalPoles) {
    op.W.front() = 0.0;
    op.W.back() = 0.0;
  }
  return op;
}

std::vector<double> laplacian(const MetricState& state, const std::vector<double>& u) {
  validate(state);
  if (!state.warped()) return zeros(state);
  return flux_operator(state).apply(u);
}

// ---------------------------------------------------------------------------
// Integrals.
// ---------------------------------------------------------------------------

double integrate_mu(const MetricState& state, const std::vector<double>& f) {
  const auto m = measure(state);
  if (f.size() != m.weights.size())
    throw std::invalid_argument("integrate_mu: field size does not match measure");
  double acc = 0.0;
  for (size_t i = 0; i < f.size(); ++i) acc += f[i] * m.weights[i];
  return acc;
}

double mean_sigma(const MetricState& state, const std::vector<double>& f) {
  const auto m = measure(state);
  if (f.size() != m.weights.size())
    throw std::invalid_argument("mean_sigma: field size does not match measure");
  double acc = 0.0;
  for (size_t i = 0; i < f.size(); ++i) acc += f[i] * m.weights[i];
  return acc / m.volume;
}

double integrate_wPi(const MetricState& state, const std::vector<double>& w,
                     const std::vector<double>& f) {
  const auto m = measure(state);
  if (f.size() != m.weights.size() || w.size() != m.weights.size())
    throw std::invalid_argument("integrate_wPi: field size does not match measure");
  double acc = 0.0;
  for (size_t i = 0; i < f.size(); ++i) acc += w[i] * f[i] * m.weights[i];
  return acc / m.volume;
}

}  // namespace riccilab
