#pragma once

/// @file metric.hpp
/// @brief Symmetry-reduced metric states on the three supported backends and
///        the measure/quadrature helpers derived from them.
///
/// Backends:
///  - Berger: left-invariant metric diag(a,b,c) on SU(2) in a frame with
///    cyclic brackets [e1,e2]=e3 of structure constant 1; all fields are
///    spatially constant, the mesh is a trivial carrier.
///  - WarpedCircle: g = phi(x)^2 dx^2 + psi(x)^2 g_{S^2} over a circle.
///  - WarpedSphere: the same ansatz over a pole-capped interval; psi vanishes
///    to odd order at the poles with |d psi/ds| = 1 there, phi extends evenly.

#include <array>
#include <vector>

#include "riccilab/mesh.hpp"

namespace riccilab {

enum class Backend { Berger, WarpedCircle, WarpedSphere };

struct MetricState {
  Backend backend = Backend::Berger;
  Mesh1D mesh;
  // Berger coefficients (used only for Backend::Berger).
  double a = 0.0, b = 0.0, c = 0.0;
  // Warped-product profiles (used only for the warped backends).
  std::vector<double> phi, psi;
  double beta = 0.0;  ///< flow time the state sits at

  bool warped() const { return backend != Backend::Berger; }
};

/// Throws std::invalid_argument if the state is malformed (sizes, positivity,
/// topology/backend mismatch).
void validate(const MetricState& state);

/// Parity of the warped profiles across interval poles.
inline constexpr Parity phi_parity = Parity::Even;
inline constexpr Parity psi_parity = Parity::Odd;

/// Cell-integrated Riemannian measure.  weights[i] approximates the measure
/// of cell i (integrals are sums of f_i * weights[i]); volume = sum.
/// The weights carry the full 4*pi (warped) or homogeneous normalization, so
/// they integrate honest 3-manifold volumes.
struct Measure {
  std::vector<double> weights;
  double volume = 0.0;
};

Measure measure(const MetricState& state);
double volume(const MetricState& state);

/// Homothety g -> factor * g (factor > 0).
void rescale_metric(MetricState& state, double factor);

/// Rescales the state so volume(state) == target exactly.
void renormalize_volume(MetricState& state, double target);

/// Arclength of node i from the chart origin x = 0 (warped backends).
std::vector<double> arclength(const MetricState& state);

/// Geodesic distance between nodes i and j inside the reduced chart
/// (warped backends; on the circle the shorter way around).
double node_distance(const MetricState& state, int i, int j);

/// Upper-bound diameter convention per backend:
///  - WarpedSphere: pole-to-pole arclength.
///  - WarpedCircle: half the circle circumference plus pi * max(psi).
///  - Berger: 2*pi*sqrt(max(a,b,c)).
double diameter_bound(const MetricState& state);

/// Interpolates two compatible states: coefficients blended linearly with
/// weight theta in [0,1] (geometry interpolation for substepping).
MetricState lerp_states(const MetricState& s0, const MetricState& s1, double theta);

// ---------------------------------------------------------------------------
// Canonical and randomized initial data.
// ---------------------------------------------------------------------------

/// Round Berger sphere a = b = c = coef; coef = 1/4 is the unit round S^3.
MetricState make_berger(double a, double b, double c);

/// Homogeneous cylinder S^1 x S^2 with phi, psi constant.
MetricState make_cylinder(int n, double circumference, double phi0, double psi0);

/// Round S^3 as a warped sphere: phi = 1, psi = sin(x) on [0, pi].
MetricState make_round_sphere(int n);

struct PerturbParams {
  double amplitude = 0.05;  ///< log-scale amplitude of the profile modes
  int max_mode = 3;         ///< highest Fourier mode used
  unsigned long long seed = 1;
};

/// Analytic warped-profile recipe.  Generators draw random coefficients into
/// one of these; realize() samples it onto a mesh.  Keeping the closed form
/// around lets tests evaluate phi/psi at arbitrary points (finite-difference
/// curvature oracles) with no interpolation error.
struct WarpedRecipe {
  enum class Kind { Circle, Sphere };
  Kind kind = Kind::Circle;
  double length = 0.0;  ///< chart extent
  double psi0 = 1.0;    ///< circle: base sphere radius
  // Circle: phi = exp(sum_k pc_k cos(2 pi k x/L) + ps_k sin(...)), psi likewise
  // around psi0.  Sphere: phi = exp(sum_k pc_k cos(k pi x/L)); psi is built
  // from the arclength s(x) as (S/pi) sin(pi s/S) exp(sum_m qc_m (cos(2 m pi
  // s/S) - 1)) so the pole expansion is exactly odd with |psi_s| = 1.
  std::vector<double> phi_cos, phi_sin, psi_cos, psi_sin;

  double phi(double x) const;
  double arc(double x) const;  ///< integral of phi from 0 to x (high-order quadrature)
  double psi(double x) const;
  MetricState realize(int n) const;
};

WarpedRecipe random_circle_recipe(double circumference, double psi0,
                                  const PerturbParams& params);
WarpedRecipe random_sphere_recipe(double length, const PerturbParams& params);

/// Random smooth warped-circle state: phi = exp(p), psi = psi0 * exp(q) with
/// p, q random trigonometric polynomials.
MetricState make_random_warped_circle(int n, double circumference, double psi0,
                                      const PerturbParams& params);

/// Random smooth warped-sphere state with exact odd-parity pole behaviour:
/// phi = exp(sum a_k cos(k pi x / L)); psi built from the arclength so that
/// |d psi/ds| = 1 at both poles.
MetricState make_random_warped_sphere(int n, double length, const PerturbParams& params);

/// Random positive density (mean one against d Pi) on the state's mesh.
std::vector<double> make_random_density(const MetricState& state, double amplitude,
                                        int max_mode, unsigned long long seed);

}  // namespace riccilab
