#pragma once

/// @file oracles.hpp
/// @brief Independent curvature computations used to cross-check the reduced
///        formulas: a coordinate finite-difference Riemann/Ricci evaluation on
///        analytic warped profiles, and an algebraic frame computation for the
///        homogeneous backend from its bracket coefficients alone.

#include <array>

#include "riccilab/metric.hpp"

namespace riccilab {

/// Diagonal Ricci entries (as eigenvalues with respect to the metric, in the
/// order radial, fiber, fiber) and scalar curvature at chart point (x, theta),
/// computed from the coordinate metric diag(phi^2, psi^2, psi^2 sin^2 theta)
/// by nested fourth-order finite differences of the analytic profile closures
/// (Christoffel symbols, then their derivatives).  Entirely independent of the
/// reduced curvature formulas and of any mesh.
struct CoordinateCurvature {
  std::array<double, 3> ric_eigen{};  ///< Ric(e_i, e_i) for unit e_i
  double R = 0.0;
};
CoordinateCurvature coordinate_curvature(const WarpedRecipe& recipe, double x, double theta,
                                         double delta);

/// Ricci eigenvalues and scalar curvature of the left-invariant metric
/// diag(a, b, c) computed in an orthonormal frame from the bracket
/// coefficients alone (Koszul formula plus the constant-frame curvature
/// composition), independent of the closed-form expressions.
struct FrameCurvature {
  std::array<double, 3> ric_eigen{};
  double R = 0.0;
};
FrameCurvature frame_curvature(double a, double b, double c);

}  // namespace riccilab
