#include "riccilab/oracles.hpp"

#include <cmath>
#include <functional>

namespace riccilab {

namespace {

// Fourth-order central difference of a scalar closure.
double fd4(const std::function<double(double)>& f, double x, double delta) {
  return (-f(x + 2.0 * delta) + 8.0 * f(x + delta) - 8.0 * f(x - delta) + f(x - 2.0 * delta)) /
         (12.0 * delta);
}

// Coordinate metric diag entries at (x, theta).
struct DiagMetric {
  const WarpedRecipe* recipe;
  double at(int i, double x, double theta) const {
    const double p = recipe->phi(x);
    const double s = recipe->psi(x);
    switch (i) {
      case 0: return p * p;
      case 1: return s * s;
      default: {
        const double st = std::sin(theta);
        return s * s * st * st;
      }
    }
  }
};

// Christoffel symbols Gamma^a_{bc} of the diagonal metric at (x, theta) by
// fourth-order differencing of the metric closures.  Coordinates: 0 = x,
// 1 = theta, 2 = azimuth (the metric is azimuth-independent).
struct Christoffel {
  double g[3];       // diagonal metric
  double G[3][3][3]; // G[a][b][c] = Gamma^a_{bc}
};

Christoffel christoffel_at(const DiagMetric& m, double x, double theta, double delta) {
  Christoffel out{};
  double dg[3][3] = {};  // dg[i][mu] = d g_ii / d coordinate mu (mu in {0,1})
  for (int i = 0; i < 3; ++i) {
    out.g[i] = m.at(i, x, theta);
    dg[i][0] = fd4([&](double xx) { return m.at(i, xx, theta); }, x, delta);
    dg[i][1] = fd4([&](double tt) { return m.at(i, x, tt); }, theta, delta);
    dg[i][2] = 0.0;
  }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) {
        // Diagonal metric: Gamma^a_{bc} = (1/2) g^{aa} (delta_{ab} d_c g_aa
        // + delta_{ac} d_b g_aa - delta_{bc} d_a g_bb).
        double v = 0.0;
        if (a == b) v += dg[a][c];
        if (a == c) v += dg[a][b];
        if (b == c) v -= dg[b][a];
        out.G[a][b][c] = 0.5 * v / out.g[a];
      }
  return out;
}

}  // namespace

CoordinateCurvature coordinate_curvature(const WarpedRecipe& recipe, double x, double theta,
                                         double delta) {
  const DiagMetric m{&recipe};
  // Ric_{bc} = d_a Gamma^a_{bc} - d_b Gamma^a_{ac}
  //          + Gamma^a_{ae} Gamma^e_{bc} - Gamma^a_{be} Gamma^e_{ac}.
  // Derivatives of the Christoffels are taken by a second (outer) layer of
  // fourth-order differencing in x and theta.
  const auto christ = [&](double xx, double tt) { return christoffel_at(m, xx, tt, delta); };
  const Christoffel c0 = christ(x, theta);

  double dG[3][3][3][2];  // dG[a][b][c][mu] = d Gamma^a_{bc} / d mu
  for (int mu = 0; mu < 2; ++mu) {
    Christoffel plus2, plus1, minus1, minus2;
    if (mu == 0) {
      plus2 = christ(x + 2.0 * delta, theta);
      plus1 = christ(x + delta, theta);
      minus1 = christ(x - delta, theta);
      minus2 = christ(x - 2.0 * delta, theta);
    } else {
      plus2 = christ(x, theta + 2.0 * delta);
      plus1 = christ(x, theta + delta);
      minus1 = christ(x, theta - delta);
      minus2 = christ(x, theta - 2.0 * delta);
    }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c)
          dG[a][b][c][mu] = (-plus2.G[a][b][c] + 8.0 * plus1.G[a][b][c] -
                             8.0 * minus1.G[a][b][c] + minus2.G[a][b][c]) /
                            (12.0 * delta);
  }

  double ric[3][3] = {};
  for (int b = 0; b < 3; ++b)
    for (int c = 0; c < 3; ++c) {
      double v = 0.0;
      // d_a Gamma^a_{bc}: only a in {x, theta} differentiates (azimuth-free).
      for (int a = 0; a < 2; ++a) v += dG[a][b][c][a];
      // d_b Gamma^a_{ac}: only b in {x, theta} contributes a derivative.
      if (b < 2) {
        double tr = 0.0;
        for (int a = 0; a < 3; ++a) tr += dG[a][a][c][b];
        v -= tr;
      }
      for (int a = 0; a < 3; ++a)
        for (int e = 0; e < 3; ++e)
          v += c0.G[a][a][e] * c0.G[e][b][c] - c0.G[a][b][e] * c0.G[e][a][c];
      ric[b][c] = v;
    }

  CoordinateCurvature out;
  double R = 0.0;
  for (int i = 0; i < 3; ++i) {
    out.ric_eigen[static_cast<size_t>(i)] = ric[i][i] / c0.g[i];
    R += ric[i][i] / c0.g[i];
  }
  out.R = R;
  return out;
}

FrameCurvature frame_curvature(double a, double b, double c) {
  // Orthonormal frame e_i = X_i / sqrt(g_ii) for the bracket [X_1, X_2] = X_3
  // (cyclic).  gamma[k][i][j] = <[e_i, e_j], e_k>.
  const double g[3] = {a, b, c};
  double gamma[3][3][3] = {};
  const int cyc[3][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}};
  for (const auto& t : cyc) {
    const int i = t[0], j = t[1], k = t[2];
    const double coef = std::sqrt(g[k] / (g[i] * g[j]));
    gamma[k][i][j] = coef;
    gamma[k][j][i] = -coef;
  }
  // Koszul in a constant orthonormal frame:
  // <nabla_{e_i} e_j, e_k> = (gamma[k][i][j] - gamma[i][j][k] + gamma[j][k][i]) / 2.
  double G[3][3][3];  // G[k][i][j] = <nabla_{e_i} e_j, e_k>
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        G[k][i][j] = 0.5 * (gamma[k][i][j] - gamma[i][j][k] + gamma[j][k][i]);
  // R(e_i, e_j) e_k = nabla_i nabla_j e_k - nabla_j nabla_i e_k -
  // nabla_{[e_i, e_j]} e_k, all coefficients constant.
  const auto riem = [&](int m, int i, int j, int k) {
    double v = 0.0;
    for (int l = 0; l < 3; ++l)
      v += G[l][j][k] * G[m][i][l] - G[l][i][k] * G[m][j][l] - gamma[l][i][j] * G[m][l][k];
    return v;  // <R(e_i, e_j) e_k, e_m>
  };
  FrameCurvature out;
  double R = 0.0;
  for (int j = 0; j < 3; ++j) {
    double v = 0.0;
    for (int i = 0; i < 3; ++i) v += riem(i, i, j, j);
    out.ric_eigen[static_cast<size_t>(j)] = v;
    R += v;
  }
  out.R = R;
  return out;
}

}  // namespace riccilab
