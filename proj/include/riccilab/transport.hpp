#pragma once

/// @file transport.hpp
/// @brief Wasserstein-type distances between densities on a reduced state:
///        exact quantile transport on intervals, exact circular transport
///        (convex shift minimization for quadratic cost, CDF-median form for
///        linear cost), a dense min-cost-flow oracle, entropic regularization,
///        curve lengths (formal-metric speed vs chained transport distances),
///        and the inequality suite tying entropy to transport distances.

#include <vector>

#include "riccilab/metric.hpp"
#include "riccilab/otto.hpp"

namespace riccilab {

/// Probability measure of finitely many atoms on a line or circle chart,
/// positions ascending, masses summing to one.
struct DiscreteMeasure {
  std::vector<double> pos;
  std::vector<double> mass;
};

/// Atoms at arclength positions with masses proportional to w against the
/// fiducial cell measure.
DiscreteMeasure measure_from_density(const MetricState& state, const std::vector<double>& w);

/// Order-s Wasserstein distance on the line via exact quantile pairing.
double wasserstein_interval(const DiscreteMeasure& a, const DiscreteMeasure& b, int s);

/// Order-s Wasserstein distance on a circle of given circumference:
/// s = 2 minimizes the convex shifted-quantile cost over the mass offset
/// (coarse scan + golden section on the convex objective); s = 1 uses the
/// exact cumulative-difference median formula.
double wasserstein_circle(const DiscreteMeasure& a, const DiscreteMeasure& b,
                          double circumference, int s);

/// Distance between the measures w1 dPi and w2 dPi on the state's manifold
/// (reduced to its arclength chart).  Zero on the homogeneous backend.
double wasserstein_reduced(const MetricState& state, const std::vector<double>& w1,
                           const std::vector<double>& w2, int s);

/// Dense min-cost transport (successive shortest augmenting paths with
/// node potentials).  cost is row-major n x m; p, q are nonnegative masses
/// with equal sums.  Returns the optimal total cost.
double lp_transport_cost(const std::vector<double>& cost, int n, int m,
                         const std::vector<double>& p, const std::vector<double>& q);

/// Entropy-regularized transport cost (log-domain alternating projections).
double sinkhorn_cost(const std::vector<double>& cost, int n, int m,
                     const std::vector<double>& p, const std::vector<double>& q,
                     double eps_reg, int max_iter, double marginal_tol);

/// Squared pairwise geodesic distances of the state's nodes (row-major n x n).
std::vector<double> pairwise_cost_sq(const MetricState& state);

// ---------------------------------------------------------------------------
// Curve lengths.
// ---------------------------------------------------------------------------

/// Length of a curve of measures lambda -> w_lambda dPi_lambda, measured two
/// ways: integrating the formal-metric speed sqrt(int |grad Psi|^2 dpi), and
/// chaining quadratic transport distances between consecutive snapshots
/// (re-expressed on the earlier state by monotone rearrangement).
struct CurveLengthReport {
  std::vector<double> lambda;
  std::vector<double> otto_speed;
  double otto_length = 0.0;
  double chain_length = 0.0;
  double rel_gap = 0.0;           ///< |otto - chain| / max(chain, tiny)
  double max_hj_residual = 0.0;   ///< sup |d Psi/d lambda + |grad Psi|^2 / 2|
  bool frozen_geometry = true;
};
CurveLengthReport curve_length(const std::vector<MetricState>& states,
                               const std::vector<std::vector<double>>& w, double dlambda);

// ---------------------------------------------------------------------------
// Entropy--transport inequalities for w against the fiducial measure.
// ---------------------------------------------------------------------------

struct InequalityReport {
  double S = 0.0, variation = 0.0, diam = 0.0;
  double d1 = 0.0, d2 = 0.0;
  double pinsker_slack = 0.0;     ///< S - variation^2 / 2
  double kr_gap = 0.0;            ///< |LP cost under 2*1_{x!=y} - variation|
  double power_slack_s1 = 0.0;    ///< 2^{1/2} diam S^{1/2} - D_1
  double power_slack_s2 = 0.0;    ///< 2^{1/4} diam S^{1/4} - D_2
  double talagrand_slack = 0.0;   ///< S - (lambda/6) D_2^2
  double quartic_slack = 0.0;     ///< S - (1/2) (D_2/diam)^4
};
InequalityReport transport_inequalities(const MetricState& state, const std::vector<double>& w,
                                        double lambda_inf);

}  // namespace riccilab
