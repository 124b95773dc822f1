#pragma once

// Independent brute-force oracles used by the test suites. Everything here
// re-derives results from first principles (enumeration, KKT checks, grid
// search, quadrature) without touching the library's algorithmic paths.

#include <cstddef>
#include <span>
#include <vector>

#include "slope/types.hpp"

namespace oracle {

/// Exact sorted-l1 prox by enumerating all tie-group structures: every
/// ordered partition of every support set, every sign pattern. Solves each
/// structure's quadratic in closed form and keeps the feasible candidate with
/// the smallest true objective. p <= 7 or so.
std::vector<double> prox_enumeration(std::span<const double> y, std::span<const double> theta);

/// Objective of the prox problem, evaluated from the definition.
double prox_objective(std::span<const double> y, std::span<const double> b,
                      std::span<const double> theta);

/// Euclidean projection onto non-increasing non-negative vectors by
/// enumerating active constraint sets of the QP and checking the KKT system.
std::vector<double> project_monotone_qp(std::span<const double> gamma);

/// Segmentation blocks of gamma from the direct block-length definition;
/// returns the start index of each block (0-based) plus a final sentinel p.
std::vector<std::size_t> segmentation_blocks(std::span<const double> gamma);

/// Coordinate-descent Lasso (constant penalty), an algorithm family
/// independent of the proximal-gradient solver.
std::vector<double> cd_lasso(const slope::Matrix& X, std::span<const double> y, double lam,
                             std::size_t sweeps = 2000, double tol = 1e-12);

/// Small-p SLOPE solve by dense grid + coordinate polish on the objective.
std::vector<double> slope_grid_polish(const slope::Matrix& X, std::span<const double> y,
                                      std::span<const double> lambda, double box, int grid_points,
                                      int polish_sweeps = 60);

/// Logistic + sorted-l1 objective value (for the grid oracle).
double logistic_objective(const slope::Matrix& X, std::span<const double> y,
                          std::span<const double> b, std::span<const double> lambda);

/// p=2 logistic SLOPE solve by dense grid + coordinate polish.
std::vector<double> logistic_grid_polish(const slope::Matrix& X, std::span<const double> y,
                                         std::span<const double> lambda, double box,
                                         int grid_points, int polish_sweeps = 80);

/// Standard normal quantile by bisection on erfc (independent of AS241).
double normal_quantile_bisect(double p);

}  // namespace oracle
