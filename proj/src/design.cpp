#include "slope/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "slope/data.hpp"
#include "slope/kernels.hpp"
#include "slope/parallel.hpp"
#include "slope/sorted_l1.hpp"

namespace slope {

// ---------------------------------------------------------------------------
// k-level penalties

KLevelPenalty KLevelPenalty::validated(std::vector<double> magnitudes,
                                       std::vector<std::size_t> splits, std::size_t p) {
    const std::size_t k = magnitudes.size();
    if (k == 0) throw std::invalid_argument("k-level penalty: needs at least one level");
    if (splits.size() != k - 1) throw std::invalid_argument("k-level penalty: needs k-1 splits");
    if (p < k) throw std::invalid_argument("k-level penalty: p < k");
    for (std::size_t i = 0; i < k; ++i) {
        if (!std::isfinite(magnitudes[i]) || magnitudes[i] < 0.0)
            throw std::invalid_argument("k-level penalty: magnitudes must be finite and >= 0");
        if (i > 0 && magnitudes[i] > magnitudes[i - 1] + 1e-12 * std::max(1.0, magnitudes[i - 1]))
            throw std::invalid_argument("k-level penalty: magnitudes must be non-increasing");
        if (i > 0 && magnitudes[i] > magnitudes[i - 1]) magnitudes[i] = magnitudes[i - 1];
    }
    for (std::size_t i = 0; i < splits.size(); ++i) {
        const std::size_t lo = i == 0 ? 0 : splits[i - 1];
        if (splits[i] <= lo || splits[i] >= p)
            throw std::invalid_argument("k-level penalty: splits must satisfy 0 < S_1 < ... < p");
    }
    KLevelPenalty kp;
    kp.magnitudes = std::move(magnitudes);
    kp.splits = std::move(splits);
    kp.p = p;
    return kp;
}

PenaltySequence expand_k_level(const KLevelPenalty& kp) {
    KLevelPenalty::validated(kp.magnitudes, kp.splits, kp.p);  // re-check invariants
    std::vector<double> values(kp.p);
    std::size_t start = 0;
    for (std::size_t level = 0; level < kp.levels(); ++level) {
        const std::size_t end = level + 1 < kp.levels() ? kp.splits[level] : kp.p;
        for (std::size_t i = start; i < end; ++i) values[i] = kp.magnitudes[level];
        start = end;
    }
    return PenaltySequence::validated(std::move(values));
}

KLevelPenalty compress_to_k_level(const PenaltySequence& seq) {
    const auto& v = seq.values();
    if (v.empty()) throw std::invalid_argument("compress: empty sequence");
    KLevelPenalty kp;
    kp.p = v.size();
    kp.magnitudes.push_back(v[0]);
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] != kp.magnitudes.back()) {
            kp.splits.push_back(i);
            kp.magnitudes.push_back(v[i]);
        }
    }
    return kp;
}

KLevelPenalty split_widest_level(const KLevelPenalty& kp) {
    const std::size_t k = kp.levels();
    std::size_t best = k, best_len = 1;
    std::size_t start = 0;
    for (std::size_t level = 0; level < k; ++level) {
        const std::size_t end = level + 1 < k ? kp.splits[level] : kp.p;
        if (end - start > best_len) {
            best_len = end - start;
            best = level;
        }
        start = end;
    }
    if (best == k) return kp;  // every level has a single entry, nothing to split
    KLevelPenalty out = kp;
    std::size_t lo = 0;
    for (std::size_t level = 0; level < best; ++level) lo = kp.splits[level];
    out.magnitudes.insert(out.magnitudes.begin() + static_cast<std::ptrdiff_t>(best),
                          kp.magnitudes[best]);
    out.splits.insert(out.splits.begin() + static_cast<std::ptrdiff_t>(best), lo + best_len / 2);
    return KLevelPenalty::validated(out.magnitudes, out.splits, out.p);
}

// ---------------------------------------------------------------------------
// Projection

std::vector<double> project_on_S(std::span<const double> gamma) {
    std::vector<double> v(gamma.begin(), gamma.end());
    pava_nonincreasing(v);
    for (double& x : v) x = x > 0.0 ? x : 0.0;
    return v;
}

// ---------------------------------------------------------------------------
// Gradient of tau w.r.t. alpha

namespace {

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Per-replicate tie-block pass. Accumulates into grad_num (rank-indexed
// numerator sums) and returns this replicate's D sum term.
double gradient_replicate(std::span<const double> alpha, double tau, const McSamples& samples,
                          std::size_t r, std::size_t p, std::vector<double>& grad_num) {
    std::vector<double> s(p);
    kernels::combine(1.0, samples.beta.row(r), tau, samples.z.row(r), s.data(), p);
    const auto theta = [&] {
        std::vector<double> t(p);
        for (std::size_t i = 0; i < p; ++i) t[i] = alpha[i] * tau;
        return t;
    }();
    const auto eta = prox_sorted_l1_any(s, theta);
    const auto ts = tie_structure(eta);
    const double* beta = samples.beta.row(r);
    const double* z = samples.z.row(r);

    // per block: T_B = sum_j (eta_j - beta_j) sgn(eta_j)
    //            S_B = sum_k (sgn(eta_k) Z_k - alpha_{rank(k)})
    std::vector<double> block_T(ts.blocks.size(), 0.0);
    double d_sum = 0.0;
    for (std::size_t b = 0; b < ts.blocks.size(); ++b) {
        double T = 0.0, S = 0.0;
        for (const std::size_t j : ts.blocks[b]) {
            const double sj = sgn(eta[j]);
            T += (eta[j] - beta[j]) * sj;
            S += sj * z[j] - alpha[ts.rank_of[j]];
        }
        block_T[b] = T;
        d_sum += T * S / static_cast<double>(ts.blocks[b].size());
    }
    for (std::size_t i = 0; i < p; ++i) {
        const std::size_t b = ts.block_of[ts.sigma[i]];
        grad_num[i] += tau * block_T[b] / static_cast<double>(ts.blocks[b].size());
    }
    return d_sum;
}

struct GradientParts {
    std::vector<double> numerator;  // E[(tau/|I|) sum (eta-beta) sgn(eta)] per rank
    double d = 0.0;                 // -n tau + E[sum_j T_j S_j / |I_j|]
};

GradientParts gradient_parts(std::span<const double> alpha, double tau, const AmpConfig& cfg,
                             const McSamples& samples) {
    const std::size_t p = cfg.p;
    const std::size_t mc = cfg.mc_samples;
    std::vector<std::vector<double>> per_grad(mc);
    std::vector<double> per_d(mc);
    parallel_for(mc, [&](std::size_t r) {
        per_grad[r].assign(p, 0.0);
        per_d[r] = gradient_replicate(alpha, tau, samples, r, p, per_grad[r]);
    });
    GradientParts out;
    out.numerator.assign(p, 0.0);
    for (std::size_t r = 0; r < mc; ++r) {
        kernels::axpy(1.0, per_grad[r].data(), out.numerator.data(), p);
        out.d += per_d[r];
    }
    const double inv_mc = 1.0 / static_cast<double>(mc);
    for (double& g : out.numerator) g *= inv_mc;
    out.d = -cfg.n() * tau + out.d * inv_mc;
    return out;
}

}  // namespace

double compute_D(const PenaltySequence& alpha, double tau, const Prior& prior, const AmpConfig& cfg,
                 const McSamples* samples) {
    cfg.check();
    if (alpha.size() != cfg.p) throw std::invalid_argument("compute_D: alpha length != p");
    if (tau <= 0.0) throw DegenerateTauError("compute_D: tau must be > 0");
    const McSamples local = samples == nullptr ? McSamples::draw(prior, cfg) : McSamples{};
    const McSamples& mc = samples == nullptr ? local : *samples;
    return gradient_parts(alpha.values(), tau, cfg, mc).d;
}

std::vector<double> gradient_tau_alpha(const PenaltySequence& alpha, double tau, const Prior& prior,
                                       const AmpConfig& cfg, DMode mode, const McSamples* samples) {
    cfg.check();
    if (alpha.size() != cfg.p) throw std::invalid_argument("gradient: alpha length != p");
    if (tau <= 0.0) throw DegenerateTauError("gradient: tau must be > 0");
    const McSamples local = samples == nullptr ? McSamples::draw(prior, cfg) : McSamples{};
    const McSamples& mc = samples == nullptr ? local : *samples;
    auto parts = gradient_parts(alpha.values(), tau, cfg, mc);
    const double d = mode == DMode::exact ? parts.d : -1.0;
    for (double& g : parts.numerator) g /= d;
    return std::move(parts.numerator);
}

// ---------------------------------------------------------------------------
// Projected gradient descent

double tuned_lasso_alpha(const Prior& prior, const AmpConfig& cfg, std::size_t points, double lo,
                         double hi, double* tau_out, const McSamples* samples) {
    cfg.check();
    if (points < 2 || lo <= 0.0 || hi <= lo)
        throw std::invalid_argument("tuned_lasso_alpha: bad scan parameters");
    const McSamples local = samples == nullptr ? McSamples::draw(prior, cfg) : McSamples{};
    const McSamples& mc = samples == nullptr ? local : *samples;

    const double ratio = std::pow(hi / lo, 1.0 / static_cast<double>(points - 1));
    double best_alpha = 0.0;
    double best_tau = std::numeric_limits<double>::infinity();
    double warm = 0.0;
    double a = lo;
    for (std::size_t i = 0; i < points; ++i, a *= ratio) {
        const auto alpha = PenaltySequence::constant(cfg.p, a);
        const auto se = detail::se_fixed_point_fast(alpha.values(), prior, cfg, &mc, warm);
        if (se.converged && se.tau < best_tau) {
            best_tau = se.tau;
            best_alpha = a;
        }
        warm = se.converged ? se.tau : 0.0;
    }
    if (!std::isfinite(best_tau)) {
        throw DegenerateTauError("tuned_lasso_alpha: no scan point converged");
    }
    if (tau_out != nullptr) *tau_out = best_tau;
    return best_alpha;
}

PgdResult pgd_design(const Prior& prior, const AmpConfig& cfg, const PgdConfig& pgd) {
    cfg.check();
    const std::size_t p = cfg.p;
    const McSamples samples = McSamples::draw(prior, cfg);

    PgdResult res;
    std::vector<double> alpha;
    double tau = 0.0;
    if (pgd.init_alpha) {
        if (pgd.init_alpha->size() != p)
            throw std::invalid_argument("pgd_design: init alpha length != p");
        alpha = *pgd.init_alpha;
        tau = detail::se_fixed_point_fast(alpha, prior, cfg, &samples, 0.0).tau;
        res.lasso_alpha = 0.0;
        res.lasso_tau = 0.0;
    } else {
        double lasso_tau = 0.0;
        const double lasso = tuned_lasso_alpha(prior, cfg, pgd.lasso_scan_points, pgd.lasso_scan_lo,
                                               pgd.lasso_scan_hi, &lasso_tau, &samples);
        alpha.assign(p, lasso);
        tau = lasso_tau;
        res.lasso_alpha = lasso;
        res.lasso_tau = lasso_tau;
    }

    std::vector<double> best_alpha = alpha;
    double best_tau = tau;
    res.tau_trajectory.push_back(tau);

    std::vector<double> alpha_prev = alpha;  // momentum memory
    std::size_t no_improve = 0;

    for (std::size_t t = 0; t < pgd.max_iters; ++t) {
        res.iterations = t + 1;

        // gradient point (Nesterov looks ahead)
        std::vector<double> at_point = alpha;
        double tau_point = tau;
        if (pgd.momentum == Momentum::nesterov && t > 0) {
            for (std::size_t i = 0; i < p; ++i)
                at_point[i] = alpha[i] + pgd.momentum_coef * (alpha[i] - alpha_prev[i]);
            tau_point = detail::se_fixed_point_fast(at_point, prior, cfg, &samples, tau).tau;
        }
        auto parts = gradient_parts(at_point, tau_point, cfg, samples);
        double gnorm = 0.0;
        for (double g : parts.numerator) gnorm = std::max(gnorm, std::fabs(g));
        if (gnorm == 0.0) {
            res.stop_reason = "gradient-flat";  // keep the initialization
            break;
        }

        const double d = pgd.d_mode == DMode::exact ? parts.d : -1.0;
        double step = pgd.step;
        if (pgd.step_mode == StepMode::scaled_by_abs_d) step *= std::fabs(parts.d);

        // The candidate is projected in the alpha regime before entering the
        // calibration: Pi_S is positively homogeneous and the calibration is
        // a positive scalar multiple, so for in-S iterates this equals
        // Lambda^-1(Pi_S(Lambda(cand))) exactly, and it keeps the map inside
        // the domain where Lambda is defined. Halvings shrink the whole
        // displacement (momentum included) so the candidate contracts to the
        // current iterate.
        std::vector<double> displacement(p);
        for (std::size_t i = 0; i < p; ++i) {
            displacement[i] = at_point[i] - alpha[i] - step * parts.numerator[i] / d;
            if (pgd.momentum == Momentum::heavy_ball && t > 0)
                displacement[i] += pgd.momentum_coef * (alpha[i] - alpha_prev[i]);
        }
        bool accepted = false;
        std::vector<double> alpha_next;
        double tau_next = 0.0;
        double shrink = 1.0;
        for (int halving = 0; halving <= 20 && !accepted; ++halving, shrink *= 0.5) {
            std::vector<double> cand(p);
            for (std::size_t i = 0; i < p; ++i) cand[i] = alpha[i] + shrink * displacement[i];
            alpha_next = project_on_S(cand);
            const auto se_next = detail::se_fixed_point_fast(alpha_next, prior, cfg, &samples, tau);
            tau_next = se_next.tau;
            const double c = detail::calibration_scale_any(alpha_next, tau_next, cfg, samples);
            if (c > 0.0 && se_next.converged) {
                accepted = true;  // iterate stays inside the calibration domain
            }
        }
        if (!accepted) {
            res.stop_reason = "calibration-boundary";
            res.aborted = t == 0;  // never produced a feasible iterate
            break;
        }

        alpha_prev = alpha;
        alpha = std::move(alpha_next);
        tau = tau_next;
        res.tau_trajectory.push_back(tau);

        if (tau < best_tau - pgd.tol) {
            no_improve = 0;
        } else {
            ++no_improve;
        }
        if (tau < best_tau) {
            best_tau = tau;
            best_alpha = alpha;
        }
        if (no_improve >= pgd.patience) {
            res.stop_reason = "patience";
            break;
        }
    }
    if (res.stop_reason.empty()) res.stop_reason = "max-iters";

    res.alpha = PenaltySequence::validated(best_alpha);
    res.tau = best_tau;
    res.lambda = calibrate_alpha_to_lambda(res.alpha, best_tau, prior, cfg, &samples);
    return res;
}

// ---------------------------------------------------------------------------
// Coordinate descent

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct EvalCounter {
    ObjectiveFn& fn;
    CdResult& result;
    double operator()(const KLevelPenalty& kp) {
        const std::size_t idx = result.evaluations.size();
        double v = kInf;
        try {
            v = fn(kp);
        } catch (const std::exception&) {
            result.any_eval_failed = true;
        }
        result.evaluations.push_back({idx, v});
        return v;
    }
};

// Golden-section minimize over [lo, hi] with a fixed evaluation budget;
// returns the best evaluated point.
std::pair<double, double> golden_minimize(const std::function<double(double)>& f, double lo,
                                          double hi, std::size_t evals) {
    const double gr = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - gr * (b - a);
    double x2 = a + gr * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    double best_x = f1 <= f2 ? x1 : x2;
    double best_f = std::min(f1, f2);
    for (std::size_t e = 2; e < evals; ++e) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
        }
        const double fx = std::min(f1, f2);
        if (fx < best_f) {
            best_f = fx;
            best_x = f1 <= f2 ? x1 : x2;
        }
    }
    return {best_x, best_f};
}

}  // namespace

CdResult cd_design(ObjectiveFn& objective, const KLevelPenalty& init, const SearchConfig& search) {
    CdResult res;
    res.penalty = KLevelPenalty::validated(init.magnitudes, init.splits, init.p);
    EvalCounter eval{objective, res};

    const std::size_t k = res.penalty.levels();
    double f_cur = eval(res.penalty);
    if (!std::isfinite(f_cur)) throw std::runtime_error("cd_design: initial penalty not evaluable");
    res.accepted_trajectory.push_back(f_cur);

    auto try_magnitude = [&](std::size_t i) -> bool {
        auto& m = res.penalty.magnitudes;
        const double lo = i + 1 < k ? m[i + 1] : 0.0;
        double hi;
        if (i > 0) {
            hi = m[i - 1];
        } else {
            hi = std::max(search.magnitude_cap_factor * m[0], objective.magnitude_cap());
        }
        if (!(hi > lo)) return false;
        KLevelPenalty cand = res.penalty;
        auto f1d = [&](double x) {
            cand.magnitudes[i] = x;
            return eval(cand);
        };
        const auto [x_best, f_best] = golden_minimize(f1d, lo, hi, search.golden_evals);
        if (f_best < f_cur) {
            m[i] = x_best;
            f_cur = f_best;
            res.accepted_trajectory.push_back(f_cur);
            return true;
        }
        return false;
    };

    auto try_split = [&](std::size_t i) -> bool {
        auto& s = res.penalty.splits;
        const std::size_t lo = i == 0 ? 0 : s[i - 1];
        const std::size_t hi = i + 1 < s.size() ? s[i + 1] : res.penalty.p;
        if (hi <= lo + 1) return false;  // empty open interval: keep current
        KLevelPenalty cand = res.penalty;
        auto f1d = [&](std::size_t x) {
            if (x == s[i]) return f_cur;
            cand.splits[i] = x;
            return eval(cand);
        };
        std::size_t stride =
            search.exhaustive_splits
                ? 1
                : std::max<std::size_t>(1, (hi - lo) / search.split_stride_divisor);
        std::size_t x_best = s[i];
        double f_best = f_cur;
        for (std::size_t x = lo + 1; x <= hi - 1; x += stride) {
            const double fx = f1d(x);
            if (fx < f_best) {
                f_best = fx;
                x_best = x;
            }
        }
        if (stride > 1) {  // refine to stride 1 near the best point
            const std::size_t rl = x_best > lo + stride ? x_best - stride : lo + 1;
            const std::size_t rh = x_best + stride < hi ? x_best + stride : hi - 1;
            for (std::size_t x = rl; x <= rh; ++x) {
                const double fx = f1d(x);
                if (fx < f_best) {
                    f_best = fx;
                    x_best = x;
                }
            }
        }
        if (f_best < f_cur && x_best != s[i]) {
            s[i] = x_best;
            f_cur = f_best;
            res.accepted_trajectory.push_back(f_cur);
            return true;
        }
        return false;
    };

    for (std::size_t sweep = 0; sweep < search.max_sweeps; ++sweep) {
        res.sweeps = sweep + 1;
        bool improved = false;
        if (search.magnitudes_first) {
            for (std::size_t i = 0; i < k; ++i) improved |= try_magnitude(i);
            for (std::size_t i = 0; i + 1 < k; ++i) improved |= try_split(i);
        } else {
            for (std::size_t i = 0; i < k; ++i) {
                improved |= try_magnitude(i);
                if (i + 1 < k) improved |= try_split(i);
            }
        }
        if (!improved) break;
    }
    res.objective = f_cur;
    return res;
}

// ---------------------------------------------------------------------------
// Objectives

EstimationMseObjective::EstimationMseObjective(const Dataset& data, SolverConfig solver)
    : data_(data), solver_(solver) {
    data_.check();
    if (!data_.beta_true)
        throw std::invalid_argument("estimation objective: dataset has no ground truth");
    const auto xty = matvec_t(data_.X, data_.y);
    cap_ = 0.0;
    for (double v : xty) cap_ = std::max(cap_, std::fabs(v));
    if (cap_ <= 0.0) cap_ = 1.0;
}

double EstimationMseObjective::operator()(const KLevelPenalty& kp) {
    const auto lambda = expand_k_level(kp);
    const auto fit = fit_slope(data_, lambda, solver_, warm_.empty() ? nullptr : &warm_);
    warm_ = fit.beta;
    return estimation_mse(*data_.beta_true, fit.beta);
}

CvObjective::CvObjective(const Dataset& data, std::size_t folds, Metric metric, SolverConfig solver,
                         std::uint64_t seed)
    : data_(data), folds_(folds), metric_(metric), solver_(solver) {
    data_.check();
    if (folds < 2) throw std::invalid_argument("cv objective: folds must be >= 2");
    if (folds > data.n()) throw std::invalid_argument("cv objective: folds > n");
    const auto fold_of = fold_assignment(data.n(), folds, seed);
    for (std::size_t f = 0; f < folds; ++f) {
        auto [train, test] = split_fold(data, fold_of, f);
        if (train.n() == 0 || test.n() == 0)
            throw std::invalid_argument("cv objective: degenerate (empty) fold split");
        train_.push_back(std::move(train));
        test_.push_back(std::move(test));
    }
    warm_.resize(folds);
    const auto xty = matvec_t(data_.X, data_.y);
    cap_ = 0.0;
    for (double v : xty) cap_ = std::max(cap_, std::fabs(v));
    if (cap_ <= 0.0) cap_ = 1.0;
}

double CvObjective::operator()(const KLevelPenalty& kp) {
    const auto lambda = expand_k_level(kp);
    std::vector<double> vals(folds_);
    parallel_for(folds_, [&](std::size_t f) {
        const auto fit = metric_ == Metric::accuracy
                             ? fit_slope_logistic(train_[f], lambda, solver_,
                                                  warm_[f].empty() ? nullptr : &warm_[f])
                             : fit_slope(train_[f], lambda, solver_,
                                         warm_[f].empty() ? nullptr : &warm_[f]);
        warm_[f] = fit.beta;
        if (metric_ == Metric::accuracy) {
            const auto labels = predict_labels(test_[f], fit.beta, fit.intercept);
            vals[f] = classification_accuracy(test_[f].y, labels);
        } else {
            const auto yhat = predict(test_[f], fit.beta);
            vals[f] = prediction_mse(test_[f].y, yhat);
        }
    });
    const double m = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(folds_);
    last_metric_ = m;
    return metric_ == Metric::accuracy ? 1.0 - m : m;
}

SeTauObjective::SeTauObjective(const Prior& prior, const AmpConfig& cfg, double alpha_cap)
    : prior_(prior), cfg_(cfg), cap_(alpha_cap), samples_(McSamples::draw(prior, cfg)) {}

double SeTauObjective::operator()(const KLevelPenalty& kp) {
    const auto alpha = expand_k_level(kp);
    const auto se = detail::se_fixed_point_fast(alpha.values(), prior_, cfg_, &samples_, warm_tau_);
    const double tau_max =
        std::sqrt(cfg_.sigma_w * cfg_.sigma_w + prior_.second_moment() / cfg_.delta);
    if (!std::isfinite(se.tau) || se.tau > 1e6 * tau_max) {
        return std::numeric_limits<double>::infinity();  // diverging recursion
    }
    // alphas outside the calibration domain correspond to no lambda at all;
    // the search must stay where the designed penalty exists
    const double c = detail::calibration_scale_any(alpha.values(), se.tau, cfg_, samples_);
    if (c <= 0.0) return std::numeric_limits<double>::infinity();
    warm_tau_ = std::min(se.tau, tau_max);
    return se.tau;
}

SeTauCdResult cd_design_se_tau(const Prior& prior, const AmpConfig& cfg, std::size_t k,
                               const SearchConfig& search, std::optional<KLevelPenalty> init) {
    if (k < 1) throw std::invalid_argument("cd_design_se_tau: k must be >= 1");
    SeTauObjective objective(prior, cfg);

    KLevelPenalty start;
    if (init) {
        start = *init;
    } else {
        double lasso_tau = 0.0;
        const double lasso =
            tuned_lasso_alpha(prior, cfg, 40, 0.05, 50.0, &lasso_tau, &objective.samples());
        start.p = cfg.p;
        start.magnitudes.assign(k, lasso);
        for (std::size_t i = 1; i < k; ++i) start.splits.push_back(i * cfg.p / k);
    }

    SeTauCdResult out;
    out.cd = cd_design(objective, start, search);
    out.alpha_levels = out.cd.penalty;
    out.alpha = expand_k_level(out.cd.penalty);
    out.tau = out.cd.objective;
    out.lambda =
        calibrate_alpha_to_lambda(out.alpha, out.tau, prior, cfg, &objective.samples());
    return out;
}

// ---------------------------------------------------------------------------
// Baselines

double normal_quantile(double prob) {
    if (!(prob > 0.0 && prob < 1.0)) throw std::domain_error("normal_quantile: p not in (0,1)");
    // Wichura (1988), algorithm AS241 / PPND16
    const double q = prob - 0.5;
    double r, num, den;
    if (std::fabs(q) <= 0.425) {
        r = 0.180625 - q * q;
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                    6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                  1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                1.3314166789178437745e2) * r + 3.3871328727963666080e0);
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                    3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                  5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                4.2313330701600911252e1) * r + 1.0);
        return q * num / den;
    }
    r = q < 0.0 ? prob : 1.0 - prob;
    r = std::sqrt(-std::log(r));
    if (r <= 5.0) {
        r -= 1.6;
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r + 1.42343711074968357734e0);
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r + 6.65790464350110377720e0);
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    const double v = num / den;
    return q < 0.0 ? -v : v;
}

PenaltySequence bh_sequence(std::size_t p, double q, double scale) {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("bh_sequence: q must be in (0,1)");
    if (scale < 0.0) throw std::invalid_argument("bh_sequence: scale must be >= 0");
    std::vector<double> v(p);
    for (std::size_t i = 0; i < p; ++i) {
        const double prob = 1.0 - static_cast<double>(i + 1) * q / (2.0 * static_cast<double>(p));
        v[i] = prob <= 0.5 ? 0.0 : scale * normal_quantile(prob);
    }
    return PenaltySequence::validated(std::move(v));
}

}  // namespace slope
