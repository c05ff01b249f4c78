#pragma once

/// @file mesh.hpp
/// @brief Uniform 1D meshes for the symmetry-reduced geometries: periodic
///        circles and pole-capped intervals with a staggered (half-cell) node
///        layout, plus parity-aware finite-difference stencils.

#include <stdexcept>
#include <string>
#include <vector>

namespace riccilab {

/// Reduced-coordinate topology.  Circle: nodes x_i = i*h on [0, extent).
/// IntervalPoles: staggered nodes x_i = (i + 1/2)*h on (0, extent); the
/// endpoints x = 0, extent are rotation poles carrying no node.
enum class Topology { Circle, IntervalPoles };

/// Reflection symmetry of a field across the interval poles.  Smooth metrics
/// extend with psi odd and phi even; smooth scalar functions extend even.
enum class Parity { Even, Odd };

struct Mesh1D {
  Topology topology = Topology::Circle;
  int n = 0;            ///< number of nodes (>= 8)
  double extent = 0.0;  ///< coordinate length of the chart

  double h() const { return extent / n; }
  double node(int i) const {
    return topology == Topology::Circle ? i * h() : (i + 0.5) * h();
  }
  bool operator==(const Mesh1D& o) const {
    return topology == o.topology && n == o.n && extent == o.extent;
  }
};

/// Throws std::invalid_argument unless the mesh is usable (n >= 8, extent > 0).
void validate(const Mesh1D& mesh);

/// Field value at logical index i (possibly outside [0, n)), wrapping around
/// the circle or reflecting across a pole with the requested parity.
double sample(const Mesh1D& mesh, const std::vector<double>& f, int i, Parity p);

/// Centered O(h^2) first and second x-derivatives.
std::vector<double> diff1(const Mesh1D& mesh, const std::vector<double>& f, Parity p);
std::vector<double> diff2(const Mesh1D& mesh, const std::vector<double>& f, Parity p);

/// Centered O(h^4) variants.  Used for the metric profile derivatives on the
/// pole-capped interval, where the indeterminate curvature ratios demand more
/// accuracy than the generic second-order stencils deliver near the poles.
std::vector<double> diff1_hi(const Mesh1D& mesh, const std::vector<double>& f, Parity p);
std::vector<double> diff2_hi(const Mesh1D& mesh, const std::vector<double>& f, Parity p);

/// O(h^4) midpoint interpolation onto cell faces.  Face k sits at x = k*h.
/// Circle: k = 0..n-1 (face k between nodes k-1 and k, periodic).
/// IntervalPoles: k = 0..n, faces 0 and n are the poles themselves.
std::vector<double> face_values(const Mesh1D& mesh, const std::vector<double>& f, Parity p);

}  // namespace riccilab
