#include "riccilab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "riccilab/entropy.hpp"
#include "riccilab/geometry.hpp"
#include "riccilab/otto.hpp"

namespace riccilab {

namespace {

void check_measure(const DiscreteMeasure& m, const char* what) {
  if (m.pos.size() != m.mass.size() || m.pos.empty())
    throw std::invalid_argument(std::string(what) + ": malformed measure");
  double total = 0.0;
  for (size_t i = 0; i < m.pos.size(); ++i) {
    if (i > 0 && m.pos[i] < m.pos[i - 1])
      throw std::invalid_argument(std::string(what) + ": positions must ascend");
    if (!(m.mass[i] >= 0.0))
      throw std::invalid_argument(std::string(what) + ": masses must be nonnegative");
    total += m.mass[i];
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument(std::string(what) + ": masses must sum to one");
}

std::vector<double> cumulative(const DiscreteMeasure& m) {
  std::vector<double> F(m.mass.size());
  double acc = 0.0;
  for (size_t i = 0; i < m.mass.size(); ++i) {
    acc += m.mass[i];
    F[i] = acc;
  }
  F.back() = 1.0;
  return F;
}

// Quantile x(u): first atom with cumulative mass > u.
double quantile(const DiscreteMeasure& m, const std::vector<double>& F, double u) {
  const auto it = std::upper_bound(F.begin(), F.end(), u);
  size_t k = static_cast<size_t>(it - F.begin());
  if (k >= m.pos.size()) k = m.pos.size() - 1;
  return m.pos[k];
}

// Extended circular quantile: F^{-1}(u + k) = F^{-1}(u) + k C.
double quantile_ext(const DiscreteMeasure& m, const std::vector<double>& F, double u,
                    double C) {
  const double k = std::floor(u);
  return quantile(m, F, u - k) + k * C;
}

// Shifted-quantile transport cost on the unrolled circle for exponent s.
double shifted_cost(const DiscreteMeasure& a, const std::vector<double>& Fa,
                    const DiscreteMeasure& b, const std::vector<double>& Fb, double C,
                    double theta, int s) {
  // Merged breakpoints of u -> (F_a^{-1}(u), F_b^{-1}(u - theta)) on [0,1).
  std::vector<double> cuts;
  cuts.reserve(Fa.size() + Fb.size() + 2);
  cuts.push_back(0.0);
  cuts.push_back(1.0);
  for (double f : Fa)
    if (f > 0.0 && f < 1.0) cuts.push_back(f);
  for (double f : Fb) {
    // Levels of the shifted quantile: u = theta + f + k for integers k.
    double u = theta + f;
    u -= std::floor(u);
    if (u > 0.0 && u < 1.0) cuts.push_back(u);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double cost = 0.0;
  for (size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double du = cuts[k + 1] - cuts[k];
    if (du <= 0.0) continue;
    const double um = 0.5 * (cuts[k] + cuts[k + 1]);
    const double x = quantile(a, Fa, um);
    const double y = quantile_ext(b, Fb, um - theta, C);
    const double d = std::abs(x - y);
    cost += du * (s == 1 ? d : d * d);
  }
  return cost;
}

}  // namespace

DiscreteMeasure measure_from_density(const MetricState& state, const std::vector<double>& w) {
  validate(state);
  if (!state.warped()) throw std::logic_error("measure_from_density: homogeneous backend");
  const auto s = arclength(state);
  const auto m = measure(state);
  DiscreteMeasure out;
  out.pos = s;
  out.mass.resize(w.size());
  double total = 0.0;
  for (size_t i = 0; i < w.size(); ++i) {
    out.mass[i] = w[i] * m.weights[i];
    total += out.mass[i];
  }
  for (auto& v : out.mass) v /= total;
  return out;
}

double wasserstein_interval(const DiscreteMeasure& a, const DiscreteMeasure& b, int s) {
  check_measure(a, "wasserstein_interval");
  check_measure(b, "wasserstein_interval");
  if (s != 1 && s != 2) throw std::invalid_argument("wasserstein_interval: order must be 1 or 2");
  size_t i = 0, j = 0;
  double u = 0.0, Fa = a.mass[0], Fb = b.mass[0], cost = 0.0;
  while (u < 1.0 - 1e-15) {
    const double next = std::min({Fa, Fb, 1.0});
    const double d = std::abs(a.pos[i] - b.pos[j]);
    cost += (next - u) * (s == 1 ? d : d * d);
    u = next;
    if (Fa <= next + 1e-15 && i + 1 < a.mass.size()) Fa += a.mass[++i];
    else if (Fa <= next + 1e-15) Fa = 2.0;
    if (Fb <= next + 1e-15 && j + 1 < b.mass.size()) Fb += b.mass[++j];
    else if (Fb <= next + 1e-15) Fb = 2.0;
  }
  return s == 1 ? cost : std::sqrt(cost);
}

double wasserstein_circle(const DiscreteMeasure& a, const DiscreteMeasure& b,
                          double circumference, int s) {
  check_measure(a, "wasserstein_circle");
  check_measure(b, "wasserstein_circle");
  if (!(circumference > 0.0))
    throw std::invalid_argument("wasserstein_circle: circumference must be positive");
  if (s == 1) {
    // Exact form: min_c int |F_a(x) - F_b(x) - c| dx over the chart, the
    // minimizer being the length-weighted median of the cumulative gap.
    std::vector<double> cuts;
    cuts.reserve(a.pos.size() + b.pos.size());
    for (double x : a.pos) cuts.push_back(x);
    for (double x : b.pos) cuts.push_back(x);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    const auto Fa = cumulative(a);
    const auto Fb = cumulative(b);
    auto cdf_at = [](const DiscreteMeasure& m, const std::vector<double>& F, double x) {
      // Right-continuous CDF on the chart.
      const auto it = std::upper_bound(m.pos.begin(), m.pos.end(), x);
      return it == m.pos.begin() ? 0.0 : F[static_cast<size_t>(it - m.pos.begin()) - 1];
    };
    std::vector<std::pair<double, double>> seg;  // (gap value, length)
    for (size_t k = 0; k < cuts.size(); ++k) {
      const double x0 = cuts[k];
      const double x1 = k + 1 < cuts.size() ? cuts[k + 1] : cuts[0] + circumference;
      const double len = x1 - x0;
      if (len <= 0.0) continue;
      const double gap = cdf_at(a, Fa, x0) - cdf_at(b, Fb, x0);
      seg.emplace_back(gap, len);
    }
    std::sort(seg.begin(), seg.end());
    double total = 0.0;
    for (const auto& p : seg) total += p.second;
    double acc = 0.0, median = seg.back().first;
    for (const auto& p : seg) {
      acc += p.second;
      if (acc >= 0.5 * total) {
        median = p.first;
        break;
      }
    }
    double cost = 0.0;
    for (const auto& p : seg) cost += std::abs(p.first - median) * p.second;
    return cost;
  }
  if (s != 2) throw std::invalid_argument("wasserstein_circle: order must be 1 or 2");
  const auto Fa = cumulative(a);
  const auto Fb = cumulative(b);
  auto G = [&](double theta) { return shifted_cost(a, Fa, b, Fb, circumference, theta, 2); };
  // Coarse scan seeds the bracket; golden section refines the convex cost.
  double best_theta = 0.0, best = std::numeric_limits<double>::infinity();
  const int scan = 64;
  for (int k = -scan; k <= scan; ++k) {
    const double theta = static_cast<double>(k) / scan;
    const double v = G(theta);
    if (v < best) {
      best = v;
      best_theta = theta;
    }
  }
  double lo = best_theta - 2.0 / scan, hi = best_theta + 2.0 / scan;
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
  double fc = G(c), fd = G(d);
  for (int it = 0; it < 120 && hi - lo > 1e-13; ++it) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - gr * (hi - lo);
      fc = G(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + gr * (hi - lo);
      fd = G(d);
    }
  }
  return std::sqrt(std::min(fc, fd));
}

namespace {

/// Sub-cell refinement of the cell atomization: each mesh cell contributes
/// `split` equal-mass atoms spread over its linearized arclength extent.
/// Node-level atoms quantize every displacement to whole cells, so quantile
/// costs carry O(1) relative error once the true displacement field drops
/// below a cell width; splitting restores sub-cell resolution.
DiscreteMeasure split_atoms(const MetricState& state, const std::vector<double>& w,
                            int split) {
  const DiscreteMeasure base = measure_from_density(state, w);
  if (split <= 1) return base;
  const double h = state.mesh.h();
  DiscreteMeasure out;
  out.pos.reserve(base.pos.size() * static_cast<size_t>(split));
  out.mass.reserve(base.pos.size() * static_cast<size_t>(split));
  DiscreteMeasure tail;  // circle atoms of cell 0 that wrap below position 0
  double circumference = 0.0;
  if (state.mesh.topology == Topology::Circle)
    for (double v : state.phi) circumference += h * v;
  for (size_t i = 0; i < base.pos.size(); ++i) {
    const double width = h * state.phi[i];
    for (int j = 0; j < split; ++j) {
      const double p = base.pos[i] + width * ((j + 0.5) / split - 0.5);
      const double m = base.mass[i] / split;
      if (state.mesh.topology == Topology::Circle && p < 0.0) {
        tail.pos.push_back(p + circumference);
        tail.mass.push_back(m);
      } else {
        out.pos.push_back(p);
        out.mass.push_back(m);
      }
    }
  }
  out.pos.insert(out.pos.end(), tail.pos.begin(), tail.pos.end());
  out.mass.insert(out.mass.end(), tail.mass.begin(), tail.mass.end());
  return out;
}

constexpr int kReducedSplit = 8;

}  // namespace

double wasserstein_reduced(const MetricState& state, const std::vector<double>& w1,
                           const std::vector<double>& w2, int s) {
  if (!state.warped()) return 0.0;
  const auto a = split_atoms(state, w1, kReducedSplit);
  const auto b = split_atoms(state, w2, kReducedSplit);
  if (state.mesh.topology == Topology::IntervalPoles) return wasserstein_interval(a, b, s);
  double circumference = 0.0;
  const double h = state.mesh.h();
  for (double v : state.phi) circumference += h * v;
  return wasserstein_circle(a, b, circumference, s);
}

// ---------------------------------------------------------------------------
// Dense min-cost transport.
// ---------------------------------------------------------------------------

double lp_transport_cost(const std::vector<double>& cost, int n, int m,
                         const std::vector<double>& p, const std::vector<double>& q) {
  if (static_cast<int>(cost.size()) != n * m || static_cast<int>(p.size()) != n ||
      static_cast<int>(q.size()) != m)
    throw std::invalid_argument("lp_transport_cost: shape mismatch");
  double sp = std::accumulate(p.begin(), p.end(), 0.0);
  double sq = std::accumulate(q.begin(), q.end(), 0.0);
  if (std::abs(sp - sq) > 1e-9 * std::max(1.0, sp))
    throw std::invalid_argument("lp_transport_cost: unbalanced masses");

  std::vector<double> supply = p, demand = q;
  std::vector<double> flow(static_cast<size_t>(n) * m, 0.0);
  std::vector<double> pot(static_cast<size_t>(n) + m, 0.0);  // node potentials
  const int V = n + m;
  const double mass_eps = 1e-15 * std::max(1.0, sp);

  auto remaining_supply = [&]() {
    double acc = 0.0;
    for (double v : supply) acc += v;
    return acc;
  };

  while (remaining_supply() > mass_eps) {
    // Dijkstra over the residual graph with reduced costs.
    std::vector<double> dist(static_cast<size_t>(V), std::numeric_limits<double>::infinity());
    std::vector<int> prev(static_cast<size_t>(V), -1);
    std::vector<bool> done(static_cast<size_t>(V), false);
    for (int i = 0; i < n; ++i)
      if (supply[static_cast<size_t>(i)] > mass_eps) dist[static_cast<size_t>(i)] = 0.0;
    for (int iter = 0; iter < V; ++iter) {
      int u = -1;
      double bestd = std::numeric_limits<double>::infinity();
      for (int v = 0; v < V; ++v)
        if (!done[static_cast<size_t>(v)] && dist[static_cast<size_t>(v)] < bestd) {
          bestd = dist[static_cast<size_t>(v)];
          u = v;
        }
      if (u < 0) break;
      done[static_cast<size_t>(u)] = true;
      if (u < n) {
        for (int j = 0; j < m; ++j) {
          const int v = n + j;
          if (done[static_cast<size_t>(v)]) continue;
          double rc = cost[static_cast<size_t>(u) * m + j] - pot[static_cast<size_t>(u)] +
                      pot[static_cast<size_t>(v)];
          rc = std::max(rc, 0.0);
          if (dist[static_cast<size_t>(u)] + rc < dist[static_cast<size_t>(v)]) {
            dist[static_cast<size_t>(v)] = dist[static_cast<size_t>(u)] + rc;
            prev[static_cast<size_t>(v)] = u;
          }
        }
      } else {
        const int j = u - n;
        for (int i = 0; i < n; ++i) {
          if (done[static_cast<size_t>(i)]) continue;
          if (flow[static_cast<size_t>(i) * m + j] <= mass_eps) continue;
          double rc = -cost[static_cast<size_t>(i) * m + j] - pot[static_cast<size_t>(u)] +
                      pot[static_cast<size_t>(i)];
          rc = std::max(rc, 0.0);
          if (dist[static_cast<size_t>(u)] + rc < dist[static_cast<size_t>(i)]) {
            dist[static_cast<size_t>(i)] = dist[static_cast<size_t>(u)] + rc;
            prev[static_cast<size_t>(i)] = u;
          }
        }
      }
    }
    // Closest sink with remaining demand.
    int target = -1;
    double bestd = std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j)
      if (demand[static_cast<size_t>(j)] > mass_eps &&
          dist[static_cast<size_t>(n + j)] < bestd) {
        bestd = dist[static_cast<size_t>(n + j)];
        target = n + j;
      }
    if (target < 0) throw std::runtime_error("lp_transport_cost: no augmenting path");
    // Bottleneck along the path.
    double amount = demand[static_cast<size_t>(target - n)];
    for (int v = target; prev[static_cast<size_t>(v)] >= 0; v = prev[static_cast<size_t>(v)]) {
      const int u = prev[static_cast<size_t>(v)];
      if (u >= n) amount = std::min(amount, flow[static_cast<size_t>(v) * m + (u - n)]);
    }
    {
      int v = target;
      while (prev[static_cast<size_t>(v)] >= 0) v = prev[static_cast<size_t>(v)];
      amount = std::min(amount, supply[static_cast<size_t>(v)]);
    }
    // Apply the augmentation.
    for (int v = target; prev[static_cast<size_t>(v)] >= 0; v = prev[static_cast<size_t>(v)]) {
      const int u = prev[static_cast<size_t>(v)];
      if (u < n)
        flow[static_cast<size_t>(u) * m + (v - n)] += amount;  // forward arc
      else
        flow[static_cast<size_t>(v) * m + (u - n)] -= amount;  // backward arc
    }
    {
      int v = target;
      while (prev[static_cast<size_t>(v)] >= 0) v = prev[static_cast<size_t>(v)];
      supply[static_cast<size_t>(v)] -= amount;
    }
    demand[static_cast<size_t>(target - n)] -= amount;
    // Potential update keeps reduced costs nonnegative.
    for (int v = 0; v < V; ++v)
      if (std::isfinite(dist[static_cast<size_t>(v)])) pot[static_cast<size_t>(v)] -= dist[static_cast<size_t>(v)];
  }

  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      total += flow[static_cast<size_t>(i) * m + j] * cost[static_cast<size_t>(i) * m + j];
  return total;
}

double sinkhorn_cost(const std::vector<double>& cost, int n, int m,
                     const std::vector<double>& p, const std::vector<double>& q,
                     double eps_reg, int max_iter, double marginal_tol) {
  if (static_cast<int>(cost.size()) != n * m || static_cast<int>(p.size()) != n ||
      static_cast<int>(q.size()) != m)
    throw std::invalid_argument("sinkhorn_cost: shape mismatch");
  std::vector<double> f(static_cast<size_t>(n), 0.0), g(static_cast<size_t>(m), 0.0);
  std::vector<double> logp(static_cast<size_t>(n)), logq(static_cast<size_t>(m));
  for (int i = 0; i < n; ++i) logp[static_cast<size_t>(i)] = std::log(std::max(p[static_cast<size_t>(i)], 1e-300));
  for (int j = 0; j < m; ++j) logq[static_cast<size_t>(j)] = std::log(std::max(q[static_cast<size_t>(j)], 1e-300));
  auto lse_col = [&](int j) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      mx = std::max(mx, (f[static_cast<size_t>(i)] - cost[static_cast<size_t>(i) * m + j]) / eps_reg +
                            logp[static_cast<size_t>(i)]);
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      acc += std::exp((f[static_cast<size_t>(i)] - cost[static_cast<size_t>(i) * m + j]) / eps_reg +
                      logp[static_cast<size_t>(i)] - mx);
    return mx + std::log(acc);
  };
  auto lse_row = [&](int i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j)
      mx = std::max(mx, (g[static_cast<size_t>(j)] - cost[static_cast<size_t>(i) * m + j]) / eps_reg +
                            logq[static_cast<size_t>(j)]);
    double acc = 0.0;
    for (int j = 0; j < m; ++j)
      acc += std::exp((g[static_cast<size_t>(j)] - cost[static_cast<size_t>(i) * m + j]) / eps_reg +
                      logq[static_cast<size_t>(j)] - mx);
    return mx + std::log(acc);
  };
  for (int it = 0; it < max_iter; ++it) {
    for (int j = 0; j < m; ++j) g[static_cast<size_t>(j)] = -eps_reg * lse_col(j);
    for (int i = 0; i < n; ++i) f[static_cast<size_t>(i)] = -eps_reg * lse_row(i);
    // Column-marginal residual.
    double worst = 0.0;
    for (int j = 0; j < m; ++j) {
      double col = 0.0;
      for (int i = 0; i < n; ++i)
        col += std::exp((f[static_cast<size_t>(i)] + g[static_cast<size_t>(j)] -
                         cost[static_cast<size_t>(i) * m + j]) /
                        eps_reg) *
               p[static_cast<size_t>(i)] * q[static_cast<size_t>(j)];
      worst = std::max(worst, std::abs(col - q[static_cast<size_t>(j)]));
    }
    if (worst < marginal_tol) break;
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      total += std::exp((f[static_cast<size_t>(i)] + g[static_cast<size_t>(j)] -
                         cost[static_cast<size_t>(i) * m + j]) /
                        eps_reg) *
               p[static_cast<size_t>(i)] * q[static_cast<size_t>(j)] *
               cost[static_cast<size_t>(i) * m + j];
  return total;
}

std::vector<double> pairwise_cost_sq(const MetricState& state) {
  validate(state);
  if (!state.warped()) throw std::logic_error("pairwise_cost_sq: homogeneous backend");
  const auto s = arclength(state);
  const int n = state.mesh.n;
  double circumference = 0.0;
  if (state.mesh.topology == Topology::Circle) {
    const double h = state.mesh.h();
    for (double v : state.phi) circumference += h * v;
  }
  std::vector<double> c(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double d = std::abs(s[static_cast<size_t>(i)] - s[static_cast<size_t>(j)]);
      if (state.mesh.topology == Topology::Circle) d = std::min(d, circumference - d);
      c[static_cast<size_t>(i) * n + j] = d * d;
    }
  return c;
}

// ---------------------------------------------------------------------------
// Curve lengths.
// ---------------------------------------------------------------------------

CurveLengthReport curve_length(const std::vector<MetricState>& states,
                               const std::vector<std::vector<double>>& w, double dlambda) {
  if (states.size() != w.size() || states.size() < 3)
    throw std::invalid_argument("curve_length: need at least three snapshots");
  const size_t J = states.size();
  CurveLengthReport rep;
  rep.frozen_geometry = true;
  for (size_t j = 1; j < J; ++j) {
    const auto& s0 = states[0];
    const auto& sj = states[j];
    if (sj.backend != s0.backend || !(sj.mesh == s0.mesh))
      throw std::invalid_argument("curve_length: incompatible snapshots");
    if (sj.phi != s0.phi || sj.psi != s0.psi || sj.a != s0.a || sj.b != s0.b || sj.c != s0.c)
      rep.frozen_geometry = false;
  }
  const size_t n = w[0].size();
  std::vector<std::vector<double>> psis(J);
  std::vector<double> speeds(J, 0.0);
  for (size_t j = 0; j < J; ++j) {
    std::vector<double> dw(n);
    std::vector<double> trh;
    if (j == 0) {
      for (size_t i = 0; i < n; ++i) dw[i] = (w[1][i] - w[0][i]) / dlambda;
      trh = half_trace_rate(states[0], states[1], 0.5 * dlambda);
    } else if (j + 1 == J) {
      for (size_t i = 0; i < n; ++i) dw[i] = (w[J - 1][i] - w[J - 2][i]) / dlambda;
      trh = half_trace_rate(states[J - 2], states[J - 1], 0.5 * dlambda);
    } else {
      for (size_t i = 0; i < n; ++i) dw[i] = (w[j + 1][i] - w[j - 1][i]) / (2.0 * dlambda);
      trh = half_trace_rate(states[j - 1], states[j + 1], dlambda);
    }
    psis[j] = psi_potential(states[j], w[j], dw, trh);
    speeds[j] = std::sqrt(std::max(0.0, otto_inner(states[j], w[j], psis[j], psis[j])));
    rep.lambda.push_back(static_cast<double>(j) * dlambda);
    rep.otto_speed.push_back(speeds[j]);
  }
  for (size_t j = 0; j + 1 < J; ++j)
    rep.otto_length += 0.5 * dlambda * (speeds[j] + speeds[j + 1]);
  // Chained transport length.
  for (size_t j = 1; j < J; ++j) {
    const auto carried = transfer_density(states[j], states[j - 1], w[j]);
    rep.chain_length += wasserstein_reduced(states[j - 1], w[j - 1], carried, 2);
  }
  rep.rel_gap = std::abs(rep.otto_length - rep.chain_length) /
                std::max(rep.chain_length, 1e-300);
  // Hamilton-Jacobi diagnostic along the potential curve.
  for (size_t j = 1; j + 1 < J; ++j) {
    const auto gsq = grad_norm_sq(states[j], psis[j]);
    double worst = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double dpsi = (psis[j + 1][i] - psis[j - 1][i]) / (2.0 * dlambda);
      worst = std::max(worst, std::abs(dpsi + 0.5 * gsq[i]));
    }
    rep.max_hj_residual = std::max(rep.max_hj_residual, worst);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Inequalities.
// ---------------------------------------------------------------------------

InequalityReport transport_inequalities(const MetricState& state, const std::vector<double>& w,
                                        double lambda_inf) {
  InequalityReport rep;
  rep.S = relative_entropy(state, w);
  rep.variation = variation_distance(state, w);
  rep.diam = diameter_bound(state);
  const std::vector<double> ones(w.size(), 1.0);
  rep.d1 = wasserstein_reduced(state, w, ones, 1);
  rep.d2 = wasserstein_reduced(state, w, ones, 2);
  rep.pinsker_slack = rep.S - 0.5 * rep.variation * rep.variation;
  rep.power_slack_s1 = std::sqrt(2.0) * rep.diam * std::sqrt(rep.S) - rep.d1;
  rep.power_slack_s2 = std::pow(2.0, 0.25) * rep.diam * std::pow(rep.S, 0.25) - rep.d2;
  rep.talagrand_slack = rep.S - (lambda_inf / 6.0) * rep.d2 * rep.d2;
  const double ratio = rep.d2 / rep.diam;
  rep.quartic_slack = rep.S - 0.5 * ratio * ratio * ratio * ratio;
  if (state.warped()) {
    // Total-variation transport under the two-valued cost 2*1_{x != y}: the
    // optimal plan keeps the overlap in place, so the cost equals the
    // variation distance exactly (checked through the LP oracle).
    const auto a = measure_from_density(state, w);
    const auto b = measure_from_density(state, ones);
    const int n = static_cast<int>(a.mass.size());
    std::vector<double> cost(static_cast<size_t>(n) * n, 2.0);
    for (int i = 0; i < n; ++i) cost[static_cast<size_t>(i) * n + i] = 0.0;
    const double lp = lp_transport_cost(cost, n, n, a.mass, b.mass);
    rep.kr_gap = std::abs(lp - rep.variation);
  }
  return rep;
}

}  // namespace riccilab
