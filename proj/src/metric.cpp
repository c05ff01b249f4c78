#include "riccilab/metric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace riccilab {

namespace {

constexpr double kPi = std::numbers::pi;

// 8-point Gauss-Legendre rule on [-1, 1].
constexpr std::array<double, 8> kGaussX = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGaussW = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

template <typename F>
double gauss_integrate(F f, double a, double b, int panels) {
  double total = 0.0;
  const double dx = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * dx;
    double acc = 0.0;
    for (int q = 0; q < 8; ++q) acc += kGaussW[q] * f(mid + 0.5 * dx * kGaussX[q]);
    total += 0.5 * dx * acc;
  }
  return total;
}

std::vector<double> node_density(const MetricState& state) {
  // Pointwise 1D measure density 4*pi*phi*psi^2 at nodes.
  std::vector<double> J(state.phi.size());
  for (size_t i = 0; i < J.size(); ++i)
    J[i] = 4.0 * kPi * state.phi[i] * state.psi[i] * state.psi[i];
  return J;
}

}  // namespace

void validate(const MetricState& state) {
  if (state.backend == Backend::Berger) {
    if (!(state.a > 0.0 && state.b > 0.0 && state.c > 0.0))
      throw std::invalid_argument("metric: Berger coefficients must be positive");
    return;
  }
  validate(state.mesh);
  const auto expected = state.backend == Backend::WarpedCircle ? Topology::Circle
                                                               : Topology::IntervalPoles;
  if (state.mesh.topology != expected)
    throw std::invalid_argument("metric: mesh topology does not match backend");
  if (static_cast<int>(state.phi.size()) != state.mesh.n ||
      static_cast<int>(state.psi.size()) != state.mesh.n)
    throw std::invalid_argument("metric: profile size does not match mesh");
  for (int i = 0; i < state.mesh.n; ++i) {
    if (!(state.phi[static_cast<size_t>(i)] > 0.0) ||
        !(state.psi[static_cast<size_t>(i)] > 0.0))
      throw std::invalid_argument("metric: profiles must be positive on nodes");
  }
}

Measure measure(const MetricState& state) {
  validate(state);
  Measure m;
  if (state.backend == Backend::Berger) {
    const double vol = 16.0 * kPi * kPi * std::sqrt(state.a * state.b * state.c);
    const int n = std::max(state.mesh.n, 1);
    m.weights.assign(static_cast<size_t>(n), vol / n);
    m.volume = vol;
    return m;
  }
  // Cell-integrated weights: V_i = h * (J_i + (J_{i+1} - 2 J_i + J_{i-1})/24)
  // matches the exact cell integral to O(h^4) and, crucially, is exact for
  // the quadratic vanishing of J ~ s^2 at interval poles.
  const auto J = node_density(state);
  const double h = state.mesh.h();
  m.weights.resize(J.size());
  m.volume = 0.0;
  for (int i = 0; i < state.mesh.n; ++i) {
    const double jm = sample(state.mesh, J, i - 1, Parity::Even);
    const double jp = sample(state.mesh, J, i + 1, Parity::Even);
    const double w = h * (J[static_cast<size_t>(i)] +
                          (jp - 2.0 * J[static_cast<size_t>(i)] + jm) / 24.0);
    m.weights[static_cast<size_t>(i)] = w;
    m.volume += w;
  }
  return m;
}

double volume(const MetricState& state) { return measure(state).volume; }

void rescale_metric(MetricState& state, double factor) {
  if (!(factor > 0.0)) throw std::invalid_argument("rescale_metric: factor must be positive");
  if (state.backend == Backend::Berger) {
    state.a *= factor;
    state.b *= factor;
    state.c *= factor;
    return;
  }
  const double root = std::sqrt(factor);
  for (auto& v : state.phi) v *= root;
  for (auto& v : state.psi) v *= root;
}

void renormalize_volume(MetricState& state, double target) {
  const double vol = volume(state);
  if (!(vol > 0.0) || !(target > 0.0))
    throw std::invalid_argument("renormalize_volume: volumes must be positive");
  rescale_metric(state, std::pow(target / vol, 2.0 / 3.0));
}

std::vector<double> arclength(const MetricState& state) {
  validate(state);
  if (!state.warped()) throw std::logic_error("arclength: homogeneous backend has no chart");
  const int n = state.mesh.n;
  const double h = state.mesh.h();
  std::vector<double> s(static_cast<size_t>(n));
  if (state.mesh.topology == Topology::Circle) {
    // Trapezoid cumulative sum; s_0 = 0.
    double acc = 0.0;
    s[0] = 0.0;
    for (int i = 1; i < n; ++i) {
      acc += 0.5 * h * (state.phi[static_cast<size_t>(i - 1)] + state.phi[static_cast<size_t>(i)]);
      s[static_cast<size_t>(i)] = acc;
    }
  } else {
    // Midpoint rule over whole cells plus the trailing half cell.
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      s[static_cast<size_t>(i)] = acc + 0.5 * h * state.phi[static_cast<size_t>(i)];
      acc += h * state.phi[static_cast<size_t>(i)];
    }
  }
  return s;
}

double node_distance(const MetricState& state, int i, int j) {
  const auto s = arclength(state);
  double d = std::abs(s[static_cast<size_t>(i)] - s[static_cast<size_t>(j)]);
  if (state.mesh.topology == Topology::Circle) {
    double circumference = 0.0;
    const double h = state.mesh.h();
    for (double v : state.phi) circumference += h * v;
    d = std::min(d, circumference - d);
  }
  return d;
}

double diameter_bound(const MetricState& state) {
  if (state.backend == Backend::Berger)
    return 2.0 * kPi * std::sqrt(std::max({state.a, state.b, state.c}));
  if (state.backend == Backend::WarpedSphere) {
    double len = 0.0;
    const double h = state.mesh.h();
    for (double v : state.phi) len += h * v;
    return len;
  }
  double circumference = 0.0;
  const double h = state.mesh.h();
  for (double v : state.phi) circumference += h * v;
  const double psimax = *std::max_element(state.psi.begin(), state.psi.end());
  return 0.5 * circumference + kPi * psimax;
}

MetricState lerp_states(const MetricState& s0, const MetricState& s1, double theta) {
  if (s0.backend != s1.backend || !(s0.mesh == s1.mesh))
    throw std::invalid_argument("lerp_states: incompatible states");
  MetricState out = s0;
  out.beta = (1.0 - theta) * s0.beta + theta * s1.beta;
  if (s0.backend == Backend::Berger) {
    out.a += theta * (s1.a - s0.a);
    out.b += theta * (s1.b - s0.b);
    out.c += theta * (s1.c - s0.c);
    return out;
  }
  for (size_t i = 0; i < out.phi.size(); ++i) {
    out.phi[i] += theta * (s1.phi[i] - s0.phi[i]);
    out.psi[i] += theta * (s1.psi[i] - s0.psi[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Initial data.
// ---------------------------------------------------------------------------

MetricState make_berger(double a, double b, double c) {
  MetricState s;
  s.backend = Backend::Berger;
  s.mesh = Mesh1D{Topology::Circle, 8, 2.0 * kPi};
  s.a = a;
  s.b = b;
  s.c = c;
  validate(s);
  return s;
}

MetricState make_cylinder(int n, double circumference, double phi0, double psi0) {
  MetricState s;
  s.backend = Backend::WarpedCircle;
  s.mesh = Mesh1D{Topology::Circle, n, circumference};
  s.phi.assign(static_cast<size_t>(n), phi0);
  s.psi.assign(static_cast<size_t>(n), psi0);
  validate(s);
  return s;
}

MetricState make_round_sphere(int n) {
  MetricState s;
  s.backend = Backend::WarpedSphere;
  s.mesh = Mesh1D{Topology::IntervalPoles, n, kPi};
  s.phi.assign(static_cast<size_t>(n), 1.0);
  s.psi.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) s.psi[static_cast<size_t>(i)] = std::sin(s.mesh.node(i));
  validate(s);
  return s;
}

double WarpedRecipe::phi(double x) const {
  double e = 0.0;
  for (size_t k = 0; k < phi_cos.size(); ++k) {
    const double mode = kind == Kind::Circle
                            ? 2.0 * kPi * static_cast<double>(k + 1) * x / length
                            : kPi * static_cast<double>(k + 1) * x / length;
    e += phi_cos[k] * std::cos(mode);
    if (kind == Kind::Circle && k < phi_sin.size()) e += phi_sin[k] * std::sin(mode);
  }
  return std::exp(e);
}

double WarpedRecipe::arc(double x) const {
  if (x == 0.0) return 0.0;
  const int panels = std::max(1, static_cast<int>(std::ceil(64.0 * std::abs(x) / length)));
  return gauss_integrate([this](double t) { return phi(t); }, 0.0, x, panels);
}

double WarpedRecipe::psi(double x) const {
  if (kind == Kind::Circle) {
    double e = 0.0;
    for (size_t k = 0; k < psi_cos.size(); ++k) {
      const double mode = 2.0 * kPi * static_cast<double>(k + 1) * x / length;
      e += psi_cos[k] * std::cos(mode);
      if (k < psi_sin.size()) e += psi_sin[k] * std::sin(mode);
    }
    return psi0 * std::exp(e);
  }
  const double S = arc(length);
  const double s = arc(x);
  double u = 0.0;
  for (size_t m = 0; m < psi_cos.size(); ++m)
    u += psi_cos[m] * (std::cos(2.0 * kPi * static_cast<double>(m + 1) * s / S) - 1.0);
  return (S / kPi) * std::sin(kPi * s / S) * std::exp(u);
}

MetricState WarpedRecipe::realize(int n) const {
  MetricState s;
  s.backend = kind == Kind::Circle ? Backend::WarpedCircle : Backend::WarpedSphere;
  s.mesh = Mesh1D{kind == Kind::Circle ? Topology::Circle : Topology::IntervalPoles, n, length};
  s.phi.resize(static_cast<size_t>(n));
  s.psi.resize(static_cast<size_t>(n));
  if (kind == Kind::Circle) {
    for (int i = 0; i < n; ++i) {
      const double x = s.mesh.node(i);
      s.phi[static_cast<size_t>(i)] = phi(x);
      s.psi[static_cast<size_t>(i)] = psi(x);
    }
  } else {
    // Cumulative arclength at nodes, then the closed-form profile in s.
    const double S = arc(length);
    double prev_x = 0.0, acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = s.mesh.node(i);
      acc += gauss_integrate([this](double t) { return phi(t); }, prev_x, x, 4);
      prev_x = x;
      s.phi[static_cast<size_t>(i)] = phi(x);
      double u = 0.0;
      for (size_t m = 0; m < psi_cos.size(); ++m)
        u += psi_cos[m] * (std::cos(2.0 * kPi * static_cast<double>(m + 1) * acc / S) - 1.0);
      s.psi[static_cast<size_t>(i)] = (S / kPi) * std::sin(kPi * acc / S) * std::exp(u);
    }
  }
  validate(s);
  return s;
}

namespace {

std::vector<double> draw_coeffs(std::mt19937_64& rng, int max_mode, double amplitude) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> out(static_cast<size_t>(max_mode));
  for (int k = 0; k < max_mode; ++k)
    out[static_cast<size_t>(k)] = amplitude * unif(rng) / ((k + 1.0) * (k + 1.0));
  return out;
}

}  // namespace

WarpedRecipe random_circle_recipe(double circumference, double psi0,
                                  const PerturbParams& params) {
  std::mt19937_64 rng(params.seed);
  WarpedRecipe r;
  r.kind = WarpedRecipe::Kind::Circle;
  r.length = circumference;
  r.psi0 = psi0;
  r.phi_cos = draw_coeffs(rng, params.max_mode, params.amplitude);
  r.phi_sin = draw_coeffs(rng, params.max_mode, params.amplitude);
  r.psi_cos = draw_coeffs(rng, params.max_mode, params.amplitude);
  r.psi_sin = draw_coeffs(rng, params.max_mode, params.amplitude);
  return r;
}

WarpedRecipe random_sphere_recipe(double length, const PerturbParams& params) {
  std::mt19937_64 rng(params.seed ^ 0x9e3779b97f4a7c15ULL);
  WarpedRecipe r;
  r.kind = WarpedRecipe::Kind::Sphere;
  r.length = length;
  r.phi_cos = draw_coeffs(rng, params.max_mode, params.amplitude);
  r.psi_cos = draw_coeffs(rng, params.max_mode, params.amplitude);
  return r;
}

MetricState make_random_warped_circle(int n, double circumference, double psi0,
                                      const PerturbParams& params) {
  return random_circle_recipe(circumference, psi0, params).realize(n);
}

MetricState make_random_warped_sphere(int n, double length, const PerturbParams& params) {
  return random_sphere_recipe(length, params).realize(n);
}

std::vector<double> make_random_density(const MetricState& state, double amplitude,
                                        int max_mode, unsigned long long seed) {
  validate(state);
  std::mt19937_64 rng(seed ^ 0xa5a5a5a5deadbeefULL);
  const int n = state.mesh.n > 0 ? state.mesh.n : 8;
  std::vector<double> w(static_cast<size_t>(n), 1.0);
  if (state.backend != Backend::Berger) {
    const auto cosc = draw_coeffs(rng, max_mode, amplitude);
    const auto sinc = draw_coeffs(rng, max_mode, amplitude);
    const bool circle = state.mesh.topology == Topology::Circle;
    for (int i = 0; i < n; ++i) {
      const double x = state.mesh.node(i);
      double e = 0.0;
      for (int k = 0; k < max_mode; ++k) {
        const double mode = circle ? 2.0 * kPi * (k + 1.0) * x / state.mesh.extent
                                   : kPi * (k + 1.0) * x / state.mesh.extent;
        e += cosc[static_cast<size_t>(k)] * std::cos(mode);
        if (circle) e += sinc[static_cast<size_t>(k)] * std::sin(mode);
      }
      w[static_cast<size_t>(i)] = std::exp(e);
    }
  }
  const auto m = measure(state);
  double z = 0.0;
  for (size_t i = 0; i < w.size(); ++i) z += w[i] * m.weights[i];
  for (auto& v : w) v *= m.volume / z;
  return w;
}

}  // namespace riccilab
