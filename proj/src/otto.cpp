#include "riccilab/otto.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace riccilab {

namespace {

void check_sizes(const FluxOperator& op, const std::vector<double>& f, const char* what) {
  if (static_cast<int>(f.size()) != op.n)
    throw std::invalid_argument(std::string(what) + ": field size does not match operator");
}

// Projects f onto zero V-weighted sum (discrete compatibility).
std::vector<double> project_compatible(const FluxOperator& op, std::vector<double> f) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < op.n; ++i) {
    num += f[static_cast<size_t>(i)] * op.V[static_cast<size_t>(i)];
    den += op.V[static_cast<size_t>(i)];
  }
  const double mean = num / den;
  for (auto& v : f) v -= mean;
  return f;
}

void subtract_pi_mean(const FluxOperator& op, std::vector<double>& u) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < op.n; ++i) {
    num += u[static_cast<size_t>(i)] * op.V[static_cast<size_t>(i)];
    den += op.V[static_cast<size_t>(i)];
  }
  const double mean = num / den;
  for (auto& v : u) v -= mean;
}

}  // namespace

std::vector<double> solve_flux_poisson(const FluxOperator& op, const std::vector<double>& rhs) {
  check_sizes(op, rhs, "solve_flux_poisson");
  const auto f = project_compatible(op, rhs);
  const int n = op.n;
  const double h = op.h;
  // b_i = V_i f_i; face fluxes satisfy F_{i+1} - F_i = b_i.
  std::vector<double> b(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) b[static_cast<size_t>(i)] = op.V[static_cast<size_t>(i)] * f[static_cast<size_t>(i)];
  std::vector<double> u(static_cast<size_t>(n), 0.0);
  if (op.topology == Topology::IntervalPoles) {
    // F_0 = 0 at the pole; cumulative flux, then cumulative increments.
    double F = 0.0;
    for (int i = 1; i < n; ++i) {
      F += b[static_cast<size_t>(i - 1)];
      const double W = op.W[static_cast<size_t>(i)];
      if (!(std::abs(W) > 0.0))
        throw std::runtime_error("solve_flux_poisson: vanishing interior conductance");
      u[static_cast<size_t>(i)] = u[static_cast<size_t>(i - 1)] + h * F / W;
    }
  } else {
    // Circle: F_k = F_0 + P_k with P_k = sum_{i<k} b_i; periodic closure
    // sum_k h (F_0 + P_k)/W_k = 0 fixes F_0.
    std::vector<double> P(static_cast<size_t>(n), 0.0);
    for (int k = 1; k < n; ++k)
      P[static_cast<size_t>(k)] = P[static_cast<size_t>(k - 1)] + b[static_cast<size_t>(k - 1)];
    double sumPW = 0.0, sumW = 0.0;
    for (int k = 0; k < n; ++k) {
      const double W = op.W[static_cast<size_t>(k)];
      if (!(std::abs(W) > 0.0))
        throw std::runtime_error("solve_flux_poisson: vanishing conductance");
      sumPW += P[static_cast<size_t>(k)] / W;
      sumW += 1.0 / W;
    }
    const double F0 = -sumPW / sumW;
    for (int i = 1; i < n; ++i)
      u[static_cast<size_t>(i)] =
          u[static_cast<size_t>(i - 1)] + h * (F0 + P[static_cast<size_t>(i)]) / op.W[static_cast<size_t>(i)];
  }
  subtract_pi_mean(op, u);
  return u;
}

double flux_poisson_residual(const FluxOperator& op, const std::vector<double>& u,
                             const std::vector<double>& rhs) {
  const auto f = project_compatible(op, rhs);
  const auto Lu = op.apply(u);
  double worst = 0.0;
  for (size_t i = 0; i < f.size(); ++i) worst = std::max(worst, std::abs(Lu[i] - f[i]));
  return worst;
}

std::vector<double> solve_weighted_poisson(const MetricState& state,
                                           const std::vector<double>& N,
                                           const std::vector<double>& rhs) {
  return solve_flux_poisson(flux_operator(state).weighted(N), rhs);
}

std::vector<double> phi_potential(const MetricState& state) {
  return phi_potential(state, curvature(state));
}

std::vector<double> phi_potential(const MetricState& state, const CurvatureData& curv) {
  if (!state.warped())
    return std::vector<double>(static_cast<size_t>(std::max(state.mesh.n, 1)), 0.0);
  std::vector<double> src(curv.R.size());
  for (size_t i = 0; i < src.size(); ++i) src[i] = -(curv.R[i] - curv.mean_R);
  return solve_flux_poisson(flux_operator(state), src);
}

std::vector<double> half_trace_rate(const MetricState& before, const MetricState& after,
                                    double dlambda) {
  if (before.backend != after.backend)
    throw std::invalid_argument("half_trace_rate: incompatible states");
  const int n = std::max(before.mesh.n, 1);
  std::vector<double> trh(static_cast<size_t>(n));
  const double inv = 1.0 / (2.0 * dlambda);
  if (before.backend == Backend::Berger) {
    const double v = 0.5 *
                     (std::log(after.a / before.a) + std::log(after.b / before.b) +
                      std::log(after.c / before.c)) *
                     inv;
    std::fill(trh.begin(), trh.end(), v);
    return trh;
  }
  for (int i = 0; i < n; ++i) {
    const size_t k = static_cast<size_t>(i);
    trh[k] = (std::log(after.phi[k] / before.phi[k]) +
              2.0 * std::log(after.psi[k] / before.psi[k])) *
             inv;
  }
  return trh;
}

std::vector<double> theta_potential(const MetricState& state, const std::vector<double>& trh) {
  if (!state.warped())
    return std::vector<double>(static_cast<size_t>(std::max(state.mesh.n, 1)), 0.0);
  const double mean = mean_sigma(state, trh);
  std::vector<double> src(trh.size());
  for (size_t i = 0; i < src.size(); ++i) src[i] = -(trh[i] - mean);
  return solve_flux_poisson(flux_operator(state), src);
}

std::vector<double> psi_potential(const MetricState& state, const std::vector<double>& w,
                                  const std::vector<double>& dw_dlambda,
                                  const std::vector<double>& trh) {
  if (!state.warped())
    return std::vector<double>(static_cast<size_t>(std::max(state.mesh.n, 1)), 0.0);
  std::vector<double> src(w.size());
  if (trh.empty()) {
    for (size_t i = 0; i < src.size(); ++i) src[i] = -dw_dlambda[i];
  } else {
    const double mean = mean_sigma(state, trh);
    for (size_t i = 0; i < src.size(); ++i)
      src[i] = -(dw_dlambda[i] + w[i] * (trh[i] - mean));
  }
  return solve_flux_poisson(flux_operator(state).weighted(w), src);
}

double otto_inner(const MetricState& state, const std::vector<double>& N,
                  const std::vector<double>& u, const std::vector<double>& v) {
  if (!state.warped()) return 0.0;
  const auto us = s_deriv(state, u);
  const auto vs = s_deriv(state, v);
  std::vector<double> integrand(us.size());
  for (size_t i = 0; i < us.size(); ++i) integrand[i] = us[i] * vs[i] * N[i];
  return mean_sigma(state, integrand);
}

PhiEnergyReport phi_energy_identity(const MetricState& state) {
  PhiEnergyReport rep;
  const auto curv = curvature(state);
  std::vector<double> Rsq(curv.R.size());
  for (size_t i = 0; i < Rsq.size(); ++i) Rsq[i] = curv.R[i] * curv.R[i];
  rep.var_R = mean_sigma(state, Rsq) - curv.mean_R * curv.mean_R;
  if (!state.warped()) {
    // Homogeneous geometry: Phi = 0 and Var R = 0; everything vanishes.
    rep.spectral_bound = std::numeric_limits<double>::infinity();
    rep.slack = rep.spectral_bound;
    return rep;
  }
  const auto phi = phi_potential(state, curv);
  rep.hess_term = mean_sigma(state, hess_norm_sq(state, phi));
  rep.ricci_term = mean_sigma(state, ric_grad_form(state, curv, phi));
  rep.residual = rep.hess_term + rep.ricci_term - rep.var_R;
  rep.dirichlet = otto_inner(state, std::vector<double>(phi.size(), 1.0), phi, phi);
  const double K = curv.ricci_lower_bound;
  rep.spectral_bound =
      K > 0.0 ? (2.0 / 3.0) * rep.var_R / K : std::numeric_limits<double>::infinity();
  rep.slack = rep.spectral_bound - rep.dirichlet;
  return rep;
}

double combined_tensor_bound(const MetricState& state) {
  const auto curv = curvature(state);
  if (!state.warped()) {
    double best = std::numeric_limits<double>::infinity();
    for (int e = 0; e < 3; ++e)
      best = std::min(best, 2.0 * curv.ric_eigen[static_cast<size_t>(e)][0] - curv.mean_R / 3.0);
    return best;
  }
  const auto phi = phi_potential(state, curv);
  const auto hess = hessian(state, phi);
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < hess.rad.size(); ++i) {
    const double rad = 2.0 * curv.ric_eigen[0][i] - curv.mean_R / 3.0 + hess.rad[i];
    const double sph = 2.0 * curv.ric_eigen[1][i] - curv.mean_R / 3.0 + hess.sph[i];
    best = std::min({best, rad, sph});
  }
  return best;
}

// ---------------------------------------------------------------------------
// Monotone rearrangement.
// ---------------------------------------------------------------------------

namespace {

// Cumulative fiducial mass at cell faces, normalized to [0, 1].  Cells are
// node-centered; on the circle the chart starts at the face x = -h/2.
struct Cumulative {
  std::vector<double> face_x;  // face coordinates, size n+1
  std::vector<double> F;       // cumulative mass at faces, F[0]=0, F[n]=1
  double h = 0.0;

  // x at cumulative mass q (piecewise-linear inverse).
  double inverse(double q) const {
    const size_t n = F.size() - 1;
    const auto it = std::upper_bound(F.begin(), F.end(), q);
    size_t k = static_cast<size_t>(std::max<long>(1, it - F.begin())) - 1;
    if (k >= n) k = n - 1;
    const double span = F[k + 1] - F[k];
    const double frac = span > 0.0 ? (q - F[k]) / span : 0.5;
    return face_x[k] + frac * (face_x[k + 1] - face_x[k]);
  }
  // cumulative mass at coordinate x.
  double at(double x) const {
    const size_t n = F.size() - 1;
    double xl = std::min(std::max(x, face_x.front()), face_x.back());
    const auto it = std::upper_bound(face_x.begin(), face_x.end(), xl);
    size_t k = static_cast<size_t>(std::max<long>(1, it - face_x.begin())) - 1;
    if (k >= n) k = n - 1;
    const double frac = (xl - face_x[k]) / (face_x[k + 1] - face_x[k]);
    return F[k] + frac * (F[k + 1] - F[k]);
  }
};

Cumulative cumulative_mass(const MetricState& state, const std::vector<double>* w) {
  validate(state);
  if (!state.warped()) throw std::logic_error("cumulative_mass: homogeneous backend");
  const auto m = measure(state);
  const int n = state.mesh.n;
  const double h = state.mesh.h();
  Cumulative c;
  c.h = h;
  c.face_x.resize(static_cast<size_t>(n) + 1);
  c.F.resize(static_cast<size_t>(n) + 1);
  const double x0 = state.mesh.topology == Topology::Circle ? -0.5 * h : 0.0;
  for (int k = 0; k <= n; ++k) c.face_x[static_cast<size_t>(k)] = x0 + k * h;
  c.F[0] = 0.0;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double cell = m.weights[static_cast<size_t>(i)] * (w ? (*w)[static_cast<size_t>(i)] : 1.0);
    total += cell;
    c.F[static_cast<size_t>(i) + 1] = total;
  }
  for (auto& v : c.F) v /= total;
  c.F.back() = 1.0;
  return c;
}

}  // namespace

MoserMap moser_map(const MetricState& source, const MetricState& target) {
  if (!(source.mesh == target.mesh))
    throw std::invalid_argument("moser_map: states must share a mesh");
  const auto Fs = cumulative_mass(source, nullptr);
  const auto Ft = cumulative_mass(target, nullptr);
  const auto ms = measure(source);
  const auto mt = measure(target);
  const int n = source.mesh.n;
  const double h = source.mesh.h();
  MoserMap map;
  map.to_x.resize(static_cast<size_t>(n));
  map.jacobian.resize(static_cast<size_t>(n));
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const double y = target.mesh.node(i);
    const double q = Ft.at(y);
    const double x = Fs.inverse(q);
    map.to_x[static_cast<size_t>(i)] = x;
    worst = std::max(worst, std::abs(Fs.at(x) - q));
    // Density ratio: (dPi_target/dy)(y) / (dPi_source/dx)(x(y)).
    const double rho_t = mt.weights[static_cast<size_t>(i)] / (h * mt.volume);
    // piecewise-constant source density at x:
    const auto it = std::upper_bound(Fs.face_x.begin(), Fs.face_x.end(), x);
    size_t k = static_cast<size_t>(std::max<long>(1, it - Fs.face_x.begin())) - 1;
    if (k >= static_cast<size_t>(n)) k = static_cast<size_t>(n) - 1;
    const double rho_s = ms.weights[k] / (h * ms.volume);
    map.jacobian[static_cast<size_t>(i)] = rho_t / rho_s;
  }
  map.pullback_residual = worst;
  return map;
}

std::vector<double> transfer_density(const MetricState& source, const MetricState& target,
                                     const std::vector<double>& w) {
  if (!(source.mesh == target.mesh))
    throw std::invalid_argument("transfer_density: states must share a mesh");
  const auto map = moser_map(source, target);
  const auto& mesh = source.mesh;
  const int n = mesh.n;
  std::vector<double> out(static_cast<size_t>(n));
  const double h = mesh.h();
  for (int i = 0; i < n; ++i) {
    // Linear interpolation of w at the source coordinate.
    const double x = map.to_x[static_cast<size_t>(i)];
    const double t = mesh.topology == Topology::Circle ? x / h : x / h - 0.5;
    const int j = static_cast<int>(std::floor(t));
    const double frac = t - j;
    const double wl = sample(mesh, w, j, Parity::Even);
    const double wr = sample(mesh, w, j + 1, Parity::Even);
    out[static_cast<size_t>(i)] = (1.0 - frac) * wl + frac * wr;
  }
  // Renormalize to unit mass against the target fiducial measure.
  const auto mt = measure(target);
  double z = 0.0;
  for (size_t i = 0; i < out.size(); ++i) z += out[i] * mt.weights[i];
  const double scale = mt.volume / z;
  for (auto& v : out) v *= scale;
  return out;
}

EntropySplit entropy_split(const MetricState& state0, const MetricState& state1,
                           const std::vector<double>& w) {
  if (!(state0.mesh == state1.mesh))
    throw std::invalid_argument("entropy_split: states must share a mesh");
  const auto m0 = measure(state0);
  const auto m1 = measure(state1);
  EntropySplit out;
  double S0 = 0.0, correction = 0.0, direct = 0.0;
  for (size_t i = 0; i < w.size(); ++i) {
    const double dPi0 = m0.weights[i] / m0.volume;
    const double dPi1 = m1.weights[i] / m1.volume;
    const double wmass = w[i] * dPi0;
    if (w[i] > 0.0) S0 += wmass * std::log(w[i]);
    const double ratio = dPi1 / dPi0;
    correction += wmass * std::log(ratio);
    const double wtilde = w[i] / ratio;
    if (wtilde > 0.0) direct += wtilde * std::log(wtilde) * dPi1;
  }
  out.direct = direct;
  out.decomposed = S0 - correction;
  return out;
}

}  // namespace riccilab
