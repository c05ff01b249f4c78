#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "riccilab/fokker_planck.hpp"
#include "riccilab/otto.hpp"
#include "riccilab/transport.hpp"

using namespace riccilab;

namespace {
constexpr double kPi = std::numbers::pi;

Trajectory short_circle(unsigned long long seed, int n = 64, double t_final = 0.1) {
  PerturbParams prm{0.06, 3, seed};
  FlowConfig fc;
  fc.dt = 1e-3;
  fc.t_final = t_final;
  return run_flow(make_random_warped_circle(n, 2.0 * kPi, 1.0, prm), fc);
}

DiscreteMeasure atoms(std::vector<double> pos, std::vector<double> mass) {
  DiscreteMeasure m;
  m.pos = std::move(pos);
  m.mass = std::move(mass);
  return m;
}
}  // namespace

TEST_CASE("line transport closed forms") {
  // Translated atom: distance is the shift.
  const auto a = atoms({0.0, 1.0}, {0.5, 0.5});
  const auto b = atoms({0.25, 1.25}, {0.5, 0.5});
  CHECK(std::abs(wasserstein_interval(a, b, 2) - 0.25) < 1e-14);
  CHECK(std::abs(wasserstein_interval(a, b, 1) - 0.25) < 1e-14);
  // Splitting one atom across two targets.
  const auto c = atoms({0.0}, {1.0});
  const auto d = atoms({-1.0, 1.0}, {0.5, 0.5});
  CHECK(std::abs(wasserstein_interval(c, d, 2) - 1.0) < 1e-14);
  CHECK(std::abs(wasserstein_interval(c, d, 1) - 1.0) < 1e-14);
}

TEST_CASE("circle transport wraps the short way") {
  // Two antipodal atoms rotated by a quarter turn on circumference 4: each
  // atom moves arc length 1.
  const auto a = atoms({0.0, 2.0}, {0.5, 0.5});
  const auto b = atoms({1.0, 3.0}, {0.5, 0.5});
  CHECK(std::abs(wasserstein_circle(a, b, 4.0, 2) - 1.0) < 1e-12);
  // Mass near the seam: moving 0.1 across the wrap, not 3.9 around.
  const auto c = atoms({0.05}, {1.0});
  const auto d = atoms({3.95}, {1.0});
  CHECK(std::abs(wasserstein_circle(c, d, 4.0, 2) - 0.1) < 1e-12);
  CHECK(std::abs(wasserstein_circle(c, d, 4.0, 1) - 0.1) < 1e-12);
}

TEST_CASE("quantile transport equals the min-cost oracle on random cases") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size_dist(2, 16);
  std::uniform_real_distribution<double> pos(0.0, 3.0), mass(0.05, 1.0);
  for (int rep = 0; rep < 25; ++rep) {
    const int n = size_dist(rng), m = size_dist(rng);
    DiscreteMeasure a, b;
    for (int i = 0; i < n; ++i) a.pos.push_back(pos(rng)), a.mass.push_back(mass(rng));
    for (int i = 0; i < m; ++i) b.pos.push_back(pos(rng)), b.mass.push_back(mass(rng));
    std::sort(a.pos.begin(), a.pos.end());
    std::sort(b.pos.begin(), b.pos.end());
    double za = 0, zb = 0;
    for (double v : a.mass) za += v;
    for (double v : b.mass) zb += v;
    for (auto& v : a.mass) v /= za;
    for (auto& v : b.mass) v /= zb;
    std::vector<double> cost(static_cast<size_t>(n) * m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        const double d = a.pos[i] - b.pos[j];
        cost[static_cast<size_t>(i) * m + j] = d * d;
      }
    const double lp = std::sqrt(lp_transport_cost(cost, n, m, a.mass, b.mass));
    CHECK(std::abs(wasserstein_interval(a, b, 2) - lp) < 1e-10);
  }
}

TEST_CASE("entropic regularization upper-bounds and approaches the exact cost") {
  const auto a = atoms({0.0, 1.0, 2.0}, {0.3, 0.4, 0.3});
  const auto b = atoms({0.5, 1.5, 2.5}, {0.25, 0.5, 0.25});
  std::vector<double> cost(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double d = a.pos[i] - b.pos[j];
      cost[static_cast<size_t>(i) * 3 + j] = d * d;
    }
  const double exact = lp_transport_cost(cost, 3, 3, a.mass, b.mass);
  double prev = 1e300;
  for (double eps : {0.5, 0.1, 0.02}) {
    const double reg = sinkhorn_cost(cost, 3, 3, a.mass, b.mass, eps, 20000, 1e-10);
    CHECK(reg > exact - 1e-6);
    CHECK(reg < prev + 1e-12);
    prev = reg;
  }
  CHECK(prev - exact < 5e-2);
}

TEST_CASE("reduced transport distance vanishes only at equal densities") {
  const Trajectory traj = short_circle(31, 64, 0.02);
  const auto& st = traj.states.front();
  const auto w = make_random_density(st, 0.4, 2, 41);
  const std::vector<double> ones(w.size(), 1.0);
  CHECK(wasserstein_reduced(st, w, w, 2) < 1e-12);
  const double d = wasserstein_reduced(st, w, ones, 2);
  CHECK(d > 1e-3);
  // Symmetry.
  CHECK(std::abs(wasserstein_reduced(st, ones, w, 2) - d) < 1e-10);
}

TEST_CASE("entropy-transport inequality panel holds with slack") {
  const Trajectory traj = short_circle(32, 64, 0.02);
  const auto& st = traj.states.front();
  const auto w = make_random_density(st, 0.5, 2, 42);
  const InequalityReport rep = transport_inequalities(st, w, 0.0);
  CHECK(rep.pinsker_slack >= 0.0);
  CHECK(rep.power_slack_s1 >= 0.0);
  CHECK(rep.power_slack_s2 >= 0.0);
  CHECK(rep.quartic_slack >= 0.0);
  CHECK(rep.kr_gap < 1e-8);
  CHECK(rep.d1 <= rep.d2 * (1.0 + 1e-9) + 1e-12);  // Jensen on the same plan family
}

TEST_CASE("curvature potential solves its equation exactly") {
  const Trajectory traj = short_circle(33, 96, 0.02);
  const auto& st = traj.states.front();
  const CurvatureData cv = curvature(st);
  const auto phi = phi_potential(st, cv);
  const auto lap = laplacian(st, phi);
  for (size_t i = 0; i < lap.size(); ++i)
    CHECK(std::abs(lap[i] + cv.R[i] - cv.mean_R) < 1e-10);
  // Mean-zero normalization against the fiducial measure.
  CHECK(std::abs(mean_sigma(st, phi)) < 1e-12);
}

TEST_CASE("weighted Poisson solve inverts its operator to rounding") {
  const Trajectory traj = short_circle(34, 64, 0.02);
  const auto& st = traj.states.front();
  const auto w = make_random_density(st, 0.4, 2, 43);
  const auto rhs = make_random_density(st, 0.7, 3, 44);
  const auto psi = psi_potential(st, w, rhs, {});
  CHECK(psi.size() == w.size());
  const FluxOperator op = flux_operator(st).weighted(w);
  CHECK(flux_poisson_residual(op, psi, [&] {
          // psi solves div(w grad psi) = -rhs (as densities against dPi).
          std::vector<double> neg(rhs.size());
          for (size_t i = 0; i < rhs.size(); ++i) neg[i] = -rhs[i];
          return neg;
        }()) < 1e-11);
}

TEST_CASE("drift-diffusion step conserves mass and rejects unstable steps") {
  const Trajectory traj = short_circle(35, 64, 0.02);
  const auto& st = traj.states.front();
  const auto w = make_random_density(st, 0.4, 2, 45);
  const auto pot = phi_potential(st);
  const auto w1 = fp_step(st, w, pot, 1e-5);
  CHECK(std::abs(mean_sigma(st, w1) - mean_sigma(st, w)) < 1e-13);
  CHECK_THROWS_AS(fp_step(st, w, pot, 1.0), std::invalid_argument);
}

TEST_CASE("drift-diffusion run decays entropy and Fisher information") {
  const Trajectory traj = short_circle(36, 64, 0.3);
  const auto w0 = make_random_density(traj.states.back(), 0.35, 2, 46);
  const FPRun run = run_backward_fp(traj, w0, {});
  REQUIRE(run.S.size() == run.backward.t.size());
  CHECK(run.S.front() > run.S.back());  // backward-time decay toward uniform
  const GradientIdentityReport grad = gradient_identity(run);
  CHECK(grad.max_residual < 2e-2 * (1.0 + run.I.front()));
  const FisherReport fis = fisher_decay(run);
  CHECK(fis.max_identity_residual < 0.1 * (1.0 + run.I.front()));
  CHECK(fis.min_inequality_slack > -10.0 * fis.max_identity_residual - 1e-10);
}

TEST_CASE("log transform satisfies the viscous front equation") {
  const Trajectory traj = short_circle(37, 64, 0.1);
  const auto w0 = make_random_density(traj.states.back(), 0.3, 2, 47);
  FPRun run = run_backward_fp(traj, w0, {});
  const double eps = 0.05;
  hopf_cole(run, eps);
  REQUIRE(run.hj_u.size() == run.backward.t.size());
  const HJResidualReport rep = hj_residual(run, eps);
  CHECK(rep.max_residual < 5e-2);
  CHECK(default_epsilon(run) > 0.0);
}

TEST_CASE("vanishing viscosity approaches the inf-convolution") {
  const MetricState flat = make_cylinder(96, 2.0 * kPi, 1.0, 1.0);
  std::vector<double> U(static_cast<size_t>(flat.mesh.n));
  for (int i = 0; i < flat.mesh.n; ++i)
    U[static_cast<size_t>(i)] = 1.0 - std::cos(flat.mesh.node(i));
  const HopfColeSweep sweep = hopf_cole_sweep(flat, U, 0.1, {0.2, 0.1, 0.05});
  REQUIRE(sweep.gap.size() == 3);
  CHECK(sweep.monotone);
  CHECK(sweep.gap.back() < sweep.gap.front());
}

TEST_CASE("rearrangement maps intertwine fiducial measures") {
  const Trajectory traj = short_circle(38, 64, 0.1);
  const MetricState& s0 = traj.states.front();
  const MetricState& s1 = traj.states.back();
  const MoserMap map = moser_map(s0, s1);
  CHECK(map.pullback_residual < 1e-10);
  const auto w = make_random_density(s0, 0.4, 2, 48);
  const auto carried = transfer_density(s0, s1, w);
  const std::vector<double> ones(carried.size(), 1.0);
  CHECK(std::abs(integrate_wPi(s1, carried, ones) - 1.0) < 1e-12);
  const EntropySplit split = entropy_split(s0, s1, w);
  CHECK(std::abs(split.direct - split.decomposed) < 1e-9);
}

TEST_CASE("curve length: the two measurements agree on a frozen family") {
  const MetricState flat = make_cylinder(96, 2.0 * kPi, 1.0, 1.0);
  // Mass sloshing between two smooth profiles (no translation): both the
  // formal-metric speed and the chained distances measure the same curve.
  const int segments = 24;
  std::vector<std::vector<double>> family;
  for (int k = 0; k <= segments; ++k) {
    const double amp = 0.3 * std::sin(kPi * k / segments);
    std::vector<double> w(static_cast<size_t>(flat.mesh.n));
    for (int i = 0; i < flat.mesh.n; ++i)
      w[static_cast<size_t>(i)] = std::exp(amp * std::cos(flat.mesh.node(i)));
    const double mass = mean_sigma(flat, w);
    for (auto& v : w) v /= mass;
    family.push_back(std::move(w));
  }
  const std::vector<MetricState> states(family.size(), flat);
  const CurveLengthReport rep = curve_length(states, family, 1.0 / segments);
  CHECK(rep.frozen_geometry);
  CHECK(rep.rel_gap < 0.05);
}
