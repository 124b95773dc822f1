#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slope/amp.hpp"
#include "slope/solver.hpp"
#include "slope/types.hpp"

namespace slope {

// ---------------------------------------------------------------------------
// k-level penalties

/// Compressed penalty (lambda_1..lambda_k; S_1..S_{k-1}): k magnitudes plus
/// k-1 one-based splitting indices; entries S_{i-1}+1..S_i take magnitude i.
struct KLevelPenalty {
    std::vector<double> magnitudes;   // non-increasing, >= 0
    std::vector<std::size_t> splits;  // 1 <= S_1 < ... < S_{k-1} < p
    std::size_t p = 0;

    std::size_t levels() const { return magnitudes.size(); }
    static KLevelPenalty validated(std::vector<double> magnitudes, std::vector<std::size_t> splits,
                                   std::size_t p);
};

PenaltySequence expand_k_level(const KLevelPenalty& kp);
/// Canonical compression (adjacent equal values merged); inverse of expand on
/// canonical k-level vectors.
KLevelPenalty compress_to_k_level(const PenaltySequence& seq);
/// k -> k+1 levels with an identical expansion (widest level split in half);
/// the natural warm start for a deeper coordinate-descent run.
KLevelPenalty split_widest_level(const KLevelPenalty& kp);

// ---------------------------------------------------------------------------
// Projection onto non-negative non-increasing vectors

/// Euclidean projection onto S = { v : v_1 >= ... >= v_p >= 0 }: adjacent
/// averaging, then elementwise truncation at zero.
std::vector<double> project_on_S(std::span<const double> gamma);

// ---------------------------------------------------------------------------
// Gradient of tau with respect to alpha

enum class DMode { exact, unit };

/// d tau / d alpha_i from the tie structure of the prox output, averaged over
/// the replicates. In unit mode the denominator D is replaced by -1, which
/// rescales (not redirects) the descent step.
std::vector<double> gradient_tau_alpha(const PenaltySequence& alpha, double tau, const Prior& prior,
                                       const AmpConfig& cfg, DMode mode = DMode::exact,
                                       const McSamples* samples = nullptr);

/// The negative scalar D(alpha, tau) in the gradient denominator.
double compute_D(const PenaltySequence& alpha, double tau, const Prior& prior, const AmpConfig& cfg,
                 const McSamples* samples = nullptr);

// ---------------------------------------------------------------------------
// Projected gradient descent on alpha

enum class Momentum { none, heavy_ball, nesterov };
enum class StepMode { constant, scaled_by_abs_d };

struct PgdConfig {
    double step = 0.4;
    StepMode step_mode = StepMode::constant;
    Momentum momentum = Momentum::none;
    double momentum_coef = 0.9;
    DMode d_mode = DMode::unit;
    std::size_t max_iters = 300;
    double tol = 1e-7;          // stop when best tau stops improving by this
    std::size_t patience = 50;  // over this many consecutive iterations
    std::optional<std::vector<double>> init_alpha;  // default: tuned-Lasso constant
    std::size_t lasso_scan_points = 40;
    double lasso_scan_lo = 0.05;
    double lasso_scan_hi = 50.0;
};

struct PgdResult {
    PenaltySequence alpha;   // best-so-far iterate
    PenaltySequence lambda;  // its calibration
    double tau = 0.0;
    std::vector<double> tau_trajectory;  // tau at each accepted iterate
    std::size_t iterations = 0;
    /// no iterate was ever accepted (20 halvings failed from the start)
    bool aborted = false;
    /// "patience", "max-iters", "gradient-flat" or "calibration-boundary"
    /// (the tau-minimizing design can sit on the boundary where the
    /// calibration factor 1 - E count/n reaches zero)
    std::string stop_reason;
    double lasso_alpha = 0.0;  // tuned-Lasso initialization constant
    double lasso_tau = 0.0;
};

/// 1-D geometric scan of constant alpha minimizing tau. Returns the best
/// constant; tau_out gets its state-evolution tau.
double tuned_lasso_alpha(const Prior& prior, const AmpConfig& cfg, std::size_t points, double lo,
                         double hi, double* tau_out = nullptr, const McSamples* samples = nullptr);

PgdResult pgd_design(const Prior& prior, const AmpConfig& cfg, const PgdConfig& pgd);

// ---------------------------------------------------------------------------
// Coordinate descent over k-level penalties

struct SearchConfig {
    std::size_t golden_evals = 30;
    std::size_t split_stride_divisor = 32;
    bool exhaustive_splits = false;
    std::size_t max_sweeps = 60;
    bool magnitudes_first = true;  // Algorithm order: all magnitudes, then all splits
    double magnitude_cap_factor = 2.0;
};

struct CdEvaluation {
    std::size_t index = 0;
    double objective = 0.0;
};

struct CdResult {
    KLevelPenalty penalty;
    double objective = 0.0;
    std::vector<double> accepted_trajectory;  // objective after each accepted update
    std::vector<CdEvaluation> evaluations;    // every (attempted) evaluation
    std::size_t sweeps = 0;
    bool any_eval_failed = false;
};

/// Objective to minimize; throws to signal a non-evaluable point (the
/// coordinate is then skipped and flagged).
class ObjectiveFn {
  public:
    virtual double operator()(const KLevelPenalty& kp) = 0;
    /// Upper search bound for the top magnitude (data-driven cap).
    virtual double magnitude_cap() const = 0;
    virtual ~ObjectiveFn() = default;
};

CdResult cd_design(ObjectiveFn& objective, const KLevelPenalty& init, const SearchConfig& search);

/// Ready-made objectives.
class EstimationMseObjective final : public ObjectiveFn {
  public:
    EstimationMseObjective(const Dataset& data, SolverConfig solver);
    double operator()(const KLevelPenalty& kp) override;
    double magnitude_cap() const override { return cap_; }

  private:
    const Dataset& data_;
    SolverConfig solver_;
    double cap_;
    std::vector<double> warm_;
};

class CvObjective final : public ObjectiveFn {
  public:
    enum class Metric { prediction_mse, accuracy };
    CvObjective(const Dataset& data, std::size_t folds, Metric metric, SolverConfig solver,
                std::uint64_t seed);
    /// Returns mean CV prediction MSE, or (1 - mean CV accuracy) for the
    /// accuracy metric, so smaller is always better.
    double operator()(const KLevelPenalty& kp) override;
    double magnitude_cap() const override { return cap_; }
    double last_metric_mean() const { return last_metric_; }

  private:
    const Dataset& data_;
    std::size_t folds_;
    Metric metric_;
    SolverConfig solver_;
    double cap_;
    std::vector<Dataset> train_;
    std::vector<Dataset> test_;
    std::vector<std::vector<double>> warm_;
    double last_metric_ = 0.0;
};

/// tau(alpha) over k-level alpha; the calibration is a positive scalar
/// multiple, so the k-level alpha space and k-level lambda space coincide.
class SeTauObjective final : public ObjectiveFn {
  public:
    SeTauObjective(const Prior& prior, const AmpConfig& cfg, double alpha_cap = 20.0);
    double operator()(const KLevelPenalty& kp) override;
    double magnitude_cap() const override { return cap_; }
    const McSamples& samples() const { return samples_; }

  private:
    Prior prior_;
    AmpConfig cfg_;
    double cap_;
    McSamples samples_;
    double warm_tau_ = 0.0;
};

struct SeTauCdResult {
    CdResult cd;              // trajectory/objective in tau units, penalty in alpha units
    KLevelPenalty alpha_levels;
    PenaltySequence alpha;
    PenaltySequence lambda;   // calibrated from the best alpha
    double tau = 0.0;
};

/// CD on k-level alpha under the state-evolution objective, then one
/// calibration pass to report the lambda-space penalty.
SeTauCdResult cd_design_se_tau(const Prior& prior, const AmpConfig& cfg, std::size_t k,
                               const SearchConfig& search,
                               std::optional<KLevelPenalty> init = std::nullopt);

// ---------------------------------------------------------------------------
// Baselines

/// lambda_i = scale * PhiInv(1 - i q / (2p)), truncated at zero.
PenaltySequence bh_sequence(std::size_t p, double q, double scale);

/// Standard normal quantile (Wichura's AS241 rational approximation).
double normal_quantile(double prob);

}  // namespace slope
