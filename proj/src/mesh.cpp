#include "riccilab/mesh.hpp"

namespace riccilab {

void validate(const Mesh1D& mesh) {
  if (mesh.n < 8)
    throw std::invalid_argument("mesh: need at least 8 nodes, got " + std::to_string(mesh.n));
  if (!(mesh.extent > 0.0))
    throw std::invalid_argument("mesh: extent must be positive");
}

double sample(const Mesh1D& mesh, const std::vector<double>& f, int i, Parity p) {
  const int n = mesh.n;
  if (mesh.topology == Topology::Circle) {
    int k = i % n;
    if (k < 0) k += n;
    return f[static_cast<size_t>(k)];
  }
  // Pole-capped interval: reflect across x = 0 (i -> -1-i) and x = extent
  // (i -> 2n-1-i).  The staggered layout keeps reflected indices integral.
  double sign = 1.0;
  int k = i;
  while (k < 0 || k >= n) {
    if (k < 0)
      k = -1 - k;
    else
      k = 2 * n - 1 - k;
    if (p == Parity::Odd) sign = -sign;
  }
  return sign * f[static_cast<size_t>(k)];
}

namespace {

template <typename Stencil>
std::vector<double> apply(const Mesh1D& mesh, const std::vector<double>& f, Parity p,
                          Stencil stencil) {
  validate(mesh);
  if (static_cast<int>(f.size()) != mesh.n)
    throw std::invalid_argument("stencil: field size does not match mesh");
  std::vector<double> out(f.size());
  for (int i = 0; i < mesh.n; ++i) {
    auto at = [&](int off) { return sample(mesh, f, i + off, p); };
    out[static_cast<size_t>(i)] = stencil(at);
  }
  return out;
}

}  // namespace

std::vector<double> diff1(const Mesh1D& mesh, const std::vector<double>& f, Parity p) {
  const double inv = 1.0 / (2.0 * mesh.h());
  return apply(mesh, f, p, [&](auto at) { return (at(1) - at(-1)) * inv; });
}

std::vector<double> diff2(const Mesh1D& mesh, const std::vector<double>& f, Parity p) {
  const double inv = 1.0 / (mesh.h() * mesh.h());
  return apply(mesh, f, p,
               [&](auto at) { return (at(1) - 2.0 * at(0) + at(-1)) * inv; });
}

std::vector<double> diff1_hi(const Mesh1D& mesh, const std::vector<double>& f, Parity p) {
  const double inv = 1.0 / (12.0 * mesh.h());
  return apply(mesh, f, p, [&](auto at) {
    return (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) * inv;
  });
}

std::vector<double> diff2_hi(const Mesh1D& mesh, const std::vector<double>& f, Parity p) {
  const double inv = 1.0 / (12.0 * mesh.h() * mesh.h());
  return apply(mesh, f, p, [&](auto at) {
    return (-at(2) + 16.0 * at(1) - 30.0 * at(0) + 16.0 * at(-1) - at(-2)) * inv;
  });
}

std::vector<double> face_values(const Mesh1D& mesh, const std::vector<double>& f, Parity p) {
  validate(mesh);
  if (static_cast<int>(f.size()) != mesh.n)
    throw std::invalid_argument("face_values: field size does not match mesh");
  const bool circle = mesh.topology == Topology::Circle;
  const int nfaces = circle ? mesh.n : mesh.n + 1;
  std::vector<double> out(static_cast<size_t>(nfaces));
  for (int k = 0; k < nfaces; ++k) {
    if (circle) {
      // Face k lies between nodes k-1 and k.
      auto at = [&](int off) { return sample(mesh, f, k + off, p); };
      out[static_cast<size_t>(k)] =
          (9.0 * (at(-1) + at(0)) - (at(-2) + at(1))) / 16.0;
    } else {
      // Faces at x = k*h; nodes at (i+1/2)h, so face k is the midpoint of
      // nodes k-1 and k.  Pole faces get the exact symmetry value.
      if (k == 0 || k == mesh.n) {
        out[static_cast<size_t>(k)] =
            p == Parity::Odd ? 0.0
                             : (9.0 * sample(mesh, f, k == 0 ? 0 : mesh.n - 1, p) -
                                sample(mesh, f, k == 0 ? 1 : mesh.n - 2, p)) /
                                   8.0;
      } else {
        auto at = [&](int off) { return sample(mesh, f, k + off, p); };
        out[static_cast<size_t>(k)] =
            (9.0 * (at(-1) + at(0)) - (at(-2) + at(1))) / 16.0;
      }
    }
  }
  return out;
}

}  // namespace riccilab
