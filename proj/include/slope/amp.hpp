#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "slope/types.hpp"

namespace slope {

/// Signal distribution for the scalar channel beta + tau Z.
class Prior {
  public:
    enum class Kind { bernoulli, gauss_bernoulli, gaussian_binomial };

    /// P(beta = value) = eps, else 0.
    static Prior bernoulli(double eps, double value);
    /// P(beta != 0) = nonzero_prob; nonzero draws are N(0, sigma_b^2).
    static Prior gauss_bernoulli(double nonzero_prob, double sigma_b);
    /// beta = B * Z with B ~ Binomial(trials, prob), Z standard normal.
    static Prior gaussian_binomial(int trials, double prob);

    Kind kind() const { return kind_; }
    double second_moment() const;
    void sample(std::mt19937_64& rng, std::span<double> out) const;

    double eps() const { return a_; }            // bernoulli
    double value() const { return b_; }          // bernoulli
    double nonzero_prob() const { return a_; }   // gauss_bernoulli
    double sigma_b() const { return b_; }        // gauss_bernoulli
    int trials() const { return trials_; }       // gaussian_binomial
    double prob() const { return a_; }           // gaussian_binomial

  private:
    Prior(Kind k, double a, double b, int trials) : kind_(k), a_(a), b_(b), trials_(trials) {}
    Kind kind_;
    double a_ = 0.0;
    double b_ = 0.0;
    int trials_ = 0;
};

struct AmpConfig {
    double delta = 0.3;     // aspect ratio n/p
    double sigma_w = 0.0;
    std::size_t p = 1000;
    std::size_t mc_samples = 64;
    double tol = 1e-10;
    std::size_t max_iters = 400;
    std::uint64_t seed = 1;

    double n() const { return delta * static_cast<double>(p); }
    void check() const;
};

/// Frozen Monte Carlo draws (one row per replicate). Regenerating from the
/// same (prior, cfg) gives identical rows, so passing the same workspace to
/// several evaluations yields common random numbers.
struct McSamples {
    Matrix beta;  // mc_samples x p
    Matrix z;     // mc_samples x p
    static McSamples draw(const Prior& prior, const AmpConfig& cfg);
};

struct StateEvolutionResult {
    double tau = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::size_t mc_samples = 0;
    std::uint64_t seed = 0;
    std::vector<double> iterates;  // tau_0, tau_1, ...
};

/// Fixed point of tau^2 = sigma_w^2 + E||prox(beta + tau Z; alpha tau) - beta||^2 / (delta p),
/// iterated from tau_0^2 = sigma_w^2 + E[Pi^2]/delta (or tau_init when > 0).
StateEvolutionResult state_evolution_tau(const PenaltySequence& alpha, const Prior& prior,
                                         const AmpConfig& cfg, const McSamples* samples = nullptr,
                                         double tau_init = 0.0);

/// c(alpha) = tau (1 - E||prox||_0* / n); lambda = alpha * c. Throws
/// CalibrationDomainError when the factor is non-positive.
double calibration_scale(const PenaltySequence& alpha, double tau, const Prior& prior,
                         const AmpConfig& cfg, const McSamples* samples = nullptr);
PenaltySequence calibrate_alpha_to_lambda(const PenaltySequence& alpha, double tau,
                                          const Prior& prior, const AmpConfig& cfg,
                                          const McSamples* samples = nullptr);
/// Inverse map via scalar root-finding on the parallel scale c; c_hint and
/// tau_hint warm start the bracket and the inner state-evolution solves.
PenaltySequence calibrate_lambda_to_alpha(const PenaltySequence& lambda, const Prior& prior,
                                          const AmpConfig& cfg, const McSamples* samples = nullptr,
                                          double c_hint = 0.0, double tau_hint = 0.0);

enum class TauTracking { empirical, state_evolution };

struct AmpOptions {
    std::size_t iters = 50;
    TauTracking tau_tracking = TauTracking::empirical;
    double divergence_factor = 1e6;
};

struct AmpIterate {
    std::size_t t = 0;
    double tau = 0.0;
    double mse = -1.0;  // MSE(beta_true, beta_t); -1 when no ground truth
};

struct AmpTrajectory {
    std::vector<AmpIterate> iterates;
    std::vector<double> beta;
    double tau_final = 0.0;
    bool diverged = false;
};

/// SLOPE AMP: beta_{t+1} = prox(X^T z_t + beta_t; alpha tau_t), Onsager term
/// z_t ||beta_{t+1}||_0* / n. The prior is only needed in state-evolution
/// tracking mode.
AmpTrajectory run_slope_amp(const Dataset& data, const PenaltySequence& alpha,
                            const AmpOptions& opts, const AmpConfig& cfg,
                            const Prior* prior = nullptr);

/// Conditional-mean denoiser for the Bernoulli-Gaussian prior.
double mmse_denoiser_scalar(double s, double tau, const Prior& prior);
double mmse_denoiser_derivative(double s, double tau, const Prior& prior);
std::vector<double> mmse_denoiser(std::span<const double> s, double tau, const Prior& prior);

/// One step of the scalar-channel MMSE state evolution
/// tau'^2 = sigma_w^2 + E[(eta(beta + tau z) - beta)^2] / delta (quadrature).
double mmse_se_step(double tau, const Prior& prior, const AmpConfig& cfg);
StateEvolutionResult mmse_se_fixed_point(const Prior& prior, const AmpConfig& cfg);

AmpTrajectory run_mmse_amp(const Dataset& data, const Prior& prior, const AmpOptions& opts,
                           const AmpConfig& cfg);

/// delta (tau^2 - sigma_w^2): the predicted estimation MSE per coordinate.
double asymptotic_mse(double tau, const AmpConfig& cfg);

namespace detail {

/// Mechanical extensions over arbitrary alpha vectors; agree with the public
/// functions on valid penalty sequences. The projected-gradient pipeline must
/// push raw (pre-projection) iterates through the calibration map, which is
/// what these serve.
StateEvolutionResult state_evolution_tau_any(std::span<const double> alpha, const Prior& prior,
                                             const AmpConfig& cfg, const McSamples* samples,
                                             double tau_init);

/// Number of Monte Carlo expectation passes performed so far (profiling aid
/// for the design loops; monotone counter).
std::uint64_t expectation_passes();

/// Same fixed point found by safeguarded secant steps on T(tau) - tau; used
/// on hot inner paths (design loops, calibration inversion) where only tau is
/// needed, not the recursion's iterate record.
StateEvolutionResult se_fixed_point_fast(std::span<const double> alpha, const Prior& prior,
                                         const AmpConfig& cfg, const McSamples* samples,
                                         double tau_init);
/// tau (1 - E||prox||_0*/n); may be <= 0 (out of the calibration domain).
double calibration_scale_any(std::span<const double> alpha, double tau, const AmpConfig& cfg,
                             const McSamples& samples);

}  // namespace detail

}  // namespace slope
