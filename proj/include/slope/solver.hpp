#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "slope/types.hpp"

namespace slope {

struct StepRule {
    enum class Kind { fixed, backtracking };
    Kind kind = Kind::backtracking;
    double initial = 0.0;  // 0 => 1/||X||_op^2 from power iteration
    double shrink = 0.5;
};

struct SolverConfig {
    std::size_t max_iters = 20000;
    double rel_tolerance = 1e-10;     // relative objective change
    double fixed_point_tol = 1e-8;    // ||beta - prox(beta - s grad, s lambda)||_2
    StepRule step;
    enum class Acceleration { none, fista };
    Acceleration acceleration = Acceleration::fista;
    bool intercept = false;  // logistic: fit an unpenalized intercept
};

struct FitResult {
    std::vector<double> beta;
    double intercept = 0.0;
    double objective = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    bool separable_warning = false;
    std::vector<double> objective_trajectory;
};

double slope_objective(const Dataset& data, std::span<const double> b, const PenaltySequence& lambda);

/// Proximal-gradient (ISTA/FISTA) solve of the sorted-l1 penalized least
/// squares problem. Non-convergence is reported through the flag, with the
/// last iterate returned.
FitResult fit_slope(const Dataset& data, const PenaltySequence& lambda, const SolverConfig& cfg = {},
                    const std::vector<double>* warm_start = nullptr);

/// Same scheme on the logistic negative log-likelihood; y must be {0,1}.
FitResult fit_slope_logistic(const Dataset& data, const PenaltySequence& lambda,
                             const SolverConfig& cfg = {},
                             const std::vector<double>* warm_start = nullptr);

std::vector<double> predict(const Dataset& data, std::span<const double> beta, double intercept = 0.0);
std::vector<double> predict_labels(const Dataset& data, std::span<const double> beta,
                                   double intercept = 0.0);
double classification_accuracy(std::span<const double> y, std::span<const double> y_hat);

/// Squared operator norm estimate of X (power iteration, 50 steps).
double operator_norm_squared(const Matrix& X);

}  // namespace slope
