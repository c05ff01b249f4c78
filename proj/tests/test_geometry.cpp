#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "riccilab/geometry.hpp"
#include "riccilab/metric.hpp"
#include "riccilab/oracles.hpp"

using namespace riccilab;

namespace {
constexpr double kPi = std::numbers::pi;

double max_abs_dev(const std::vector<double>& v, double ref) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x - ref));
  return m;
}
}  // namespace

TEST_CASE("homogeneous curvature closed forms") {
  // Round: R = 6 with coefficient 1/4 (unit three-sphere), isotropic Ricci.
  const CurvatureData round = curvature(make_berger(0.25, 0.25, 0.25));
  CHECK(std::abs(round.R[0] - 6.0) < 1e-12);
  CHECK(round.traceless_norm_sq[0] < 1e-12);
  CHECK(std::abs(round.ricci_lower_bound - 2.0) < 1e-12);

  // Squashed coefficients against the bracket-coefficient frame computation.
  for (const auto& [a, b, c] : {std::array<double, 3>{0.3, 0.25, 0.2},
                                std::array<double, 3>{0.5, 0.12, 0.21},
                                std::array<double, 3>{0.07, 0.33, 0.41}}) {
    const CurvatureData cv = curvature(make_berger(a, b, c));
    const FrameCurvature oracle = frame_curvature(a, b, c);
    CHECK(std::abs(cv.R[0] - oracle.R) < 1e-10 * (1.0 + std::abs(oracle.R)));
    for (int e = 0; e < 3; ++e)
      CHECK(std::abs(cv.ric_eigen[e][0] - oracle.ric_eigen[e]) < 1e-10);
  }
}

TEST_CASE("warped curvature closed forms") {
  // Homogeneous cylinder: R = 2/psi0^2, radial Ricci eigenvalue zero.
  const CurvatureData cyl = curvature(make_cylinder(64, 2.0 * kPi, 1.0, 1.0));
  CHECK(max_abs_dev(cyl.R, 2.0) < 1e-12);
  CHECK(max_abs_dev(cyl.ric_eigen[0], 0.0) < 1e-12);
  CHECK(max_abs_dev(cyl.ric_eigen[1], 1.0) < 1e-12);

  // Round sphere sampled on the capped interval: R = 6 up to O(h^2).
  const CurvatureData sph = curvature(make_round_sphere(128));
  CHECK(max_abs_dev(sph.R, 6.0) < 2e-3);
  CHECK(max_abs_dev(sph.ric_eigen[0], 2.0) < 2e-3);
}

TEST_CASE("coordinate finite-difference oracle reproduces the round sphere") {
  // The exact round recipe: the oracle must deliver Ric = 2 g, R = 6 at
  // arbitrary chart points away from the poles.
  WarpedRecipe rec;
  rec.kind = WarpedRecipe::Kind::Sphere;
  rec.length = kPi;
  const auto probe = [&](double x) {
    const CoordinateCurvature oc = coordinate_curvature(rec, x, 0.8, 1e-3);
    CHECK(std::abs(oc.R - 6.0) < 1e-7);
    for (int e = 0; e < 3; ++e) CHECK(std::abs(oc.ric_eigen[e] - 2.0) < 1e-7);
  };
  probe(0.3 * kPi);
  probe(0.5 * kPi);
  probe(0.82 * kPi);
}

TEST_CASE("oracle agrees with reduced formulas on a random circle state") {
  PerturbParams prm{0.08, 3, 4242};
  const WarpedRecipe rec = random_circle_recipe(2.0 * kPi, 1.0, prm);
  const MetricState st = rec.realize(128);
  const CurvatureData cv = curvature(st);
  double scale = 0.0;
  for (double r : cv.R) scale = std::max(scale, std::abs(r));
  for (int i = 0; i < st.mesh.n; i += 8) {
    const CoordinateCurvature oc = coordinate_curvature(rec, st.mesh.node(i), 0.9, 5e-3);
    CHECK(std::abs(oc.R - cv.R[i]) / scale < 5e-4);
  }
}

TEST_CASE("conservative operator: eigenfunction, exactness, symmetry") {
  const MetricState flat = make_cylinder(128, 2.0 * kPi, 1.0, 1.0);
  std::vector<double> u(static_cast<size_t>(flat.mesh.n));
  for (int i = 0; i < flat.mesh.n; ++i) u[static_cast<size_t>(i)] = std::cos(flat.mesh.node(i));
  const auto lap = laplacian(flat, u);
  for (int i = 0; i < flat.mesh.n; ++i)
    CHECK(std::abs(lap[static_cast<size_t>(i)] + u[static_cast<size_t>(i)]) < 3e-4);

  // The flux form integrates to zero against the cell measure.
  PerturbParams prm{0.1, 3, 7};
  const MetricState st = make_random_warped_sphere(96, kPi, prm);
  const auto w = make_random_density(st, 0.4, 3, 11);
  const auto lw = laplacian(st, w);
  CHECK(std::abs(integrate_mu(st, lw)) < 1e-12 * volume(st));
}

TEST_CASE("measure, arclength, and integral normalizations") {
  const MetricState sph = make_round_sphere(256);
  CHECK(std::abs(volume(sph) - 2.0 * kPi * kPi) < 1e-4);  // unit round volume
  const auto arc = arclength(sph);
  CHECK(arc.front() > 0.0);
  CHECK(arc.back() < kPi);
  const std::vector<double> ones(static_cast<size_t>(sph.mesh.n), 1.0);
  CHECK(std::abs(mean_sigma(sph, ones) - 1.0) < 1e-14);
  const auto w = make_random_density(sph, 0.5, 2, 3);
  CHECK(std::abs(integrate_wPi(sph, w, ones) - 1.0) < 1e-12);
}

TEST_CASE("state validation rejects malformed inputs") {
  MetricState st = make_cylinder(64, 2.0 * kPi, 1.0, 1.0);
  st.psi[10] = -1.0;
  CHECK_THROWS_AS(validate(st), std::invalid_argument);
  CHECK_THROWS_AS(make_berger(0.25, 0.0, 0.25), std::invalid_argument);
  MetricState squashed = make_berger(0.25, 0.25, 0.25);
  squashed.b = -0.1;
  CHECK_THROWS_AS(validate(squashed), std::invalid_argument);
}

TEST_CASE("volume rescaling is exact") {
  PerturbParams prm{0.07, 3, 99};
  MetricState st = make_random_warped_circle(64, 2.0 * kPi, 1.0, prm);
  renormalize_volume(st, 5.0);
  CHECK(std::abs(volume(st) - 5.0) < 1e-12 * 5.0);
}
