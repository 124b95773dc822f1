#include "slope/amp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "slope/kernels.hpp"
#include "slope/parallel.hpp"
#include "slope/rng.hpp"
#include "slope/sorted_l1.hpp"

#include <atomic>

namespace slope {
namespace {

std::atomic<std::uint64_t> g_expectation_passes{0};

constexpr double kTauBlowup = 1e12;

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// Prior

Prior Prior::bernoulli(double eps, double value) {
    if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("bernoulli prior: eps not in [0,1]");
    return Prior(Kind::bernoulli, eps, value, 0);
}

Prior Prior::gauss_bernoulli(double nonzero_prob, double sigma_b) {
    if (nonzero_prob < 0.0 || nonzero_prob > 1.0)
        throw std::invalid_argument("gauss_bernoulli prior: nonzero_prob not in [0,1]");
    if (sigma_b <= 0.0) throw std::invalid_argument("gauss_bernoulli prior: sigma_b must be > 0");
    return Prior(Kind::gauss_bernoulli, nonzero_prob, sigma_b, 0);
}

Prior Prior::gaussian_binomial(int trials, double prob) {
    if (trials < 1) throw std::invalid_argument("gaussian_binomial prior: trials must be >= 1");
    if (prob < 0.0 || prob > 1.0)
        throw std::invalid_argument("gaussian_binomial prior: prob not in [0,1]");
    return Prior(Kind::gaussian_binomial, prob, 0.0, trials);
}

double Prior::second_moment() const {
    switch (kind_) {
        case Kind::bernoulli:
            return a_ * b_ * b_;
        case Kind::gauss_bernoulli:
            return a_ * b_ * b_;
        case Kind::gaussian_binomial: {
            const double m = trials_ * a_;
            const double var = trials_ * a_ * (1.0 - a_);
            return var + m * m;  // E[B^2] * E[Z^2]
        }
    }
    return 0.0;
}

void Prior::sample(std::mt19937_64& rng, std::span<double> out) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    switch (kind_) {
        case Kind::bernoulli:
            for (double& x : out) x = unif(rng) < a_ ? b_ : 0.0;
            break;
        case Kind::gauss_bernoulli:
            for (double& x : out) {
                const double u = unif(rng);
                const double g = gauss(rng);  // always drawn, keeps streams aligned
                x = u < a_ ? b_ * g : 0.0;
            }
            break;
        case Kind::gaussian_binomial: {
            std::binomial_distribution<int> binom(trials_, a_);
            for (double& x : out) {
                const int b = binom(rng);
                x = static_cast<double>(b) * gauss(rng);
            }
            break;
        }
    }
}

// ---------------------------------------------------------------------------
// Config / samples

void AmpConfig::check() const {
    if (delta <= 0.0) throw std::invalid_argument("amp config: delta must be > 0");
    if (sigma_w < 0.0) throw std::invalid_argument("amp config: sigma_w must be >= 0");
    if (p < 1) throw std::invalid_argument("amp config: p must be >= 1");
    if (mc_samples < 1) throw std::invalid_argument("amp config: mc_samples must be >= 1");
    if (tol <= 0.0) throw std::invalid_argument("amp config: tol must be > 0");
    if (max_iters < 1) throw std::invalid_argument("amp config: max_iters must be >= 1");
}

McSamples McSamples::draw(const Prior& prior, const AmpConfig& cfg) {
    cfg.check();
    McSamples s;
    s.beta = Matrix(cfg.mc_samples, cfg.p);
    s.z = Matrix(cfg.mc_samples, cfg.p);
    parallel_for(cfg.mc_samples, [&](std::size_t r) {
        auto rng = substream(cfg.seed, r);
        prior.sample(rng, {s.beta.row(r), cfg.p});
        std::normal_distribution<double> gauss(0.0, 1.0);
        double* z = s.z.row(r);
        for (std::size_t j = 0; j < cfg.p; ++j) z[j] = gauss(rng);
    });
    return s;
}

// ---------------------------------------------------------------------------
// State evolution

namespace {

std::vector<double> scaled_theta(std::span<const double> alpha, double tau) {
    std::vector<double> theta(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) theta[i] = alpha[i] * tau;
    return theta;
}

// E ||prox(beta + tau Z; alpha tau) - beta||^2 / p over the frozen replicates
double se_expectation(std::span<const double> alpha, double tau, const AmpConfig& cfg,
                      const McSamples& samples) {
    g_expectation_passes.fetch_add(1, std::memory_order_relaxed);
    const auto theta = scaled_theta(alpha, tau);
    std::vector<double> per(cfg.mc_samples);
    parallel_for(cfg.mc_samples, [&](std::size_t r) {
        std::vector<double> s(cfg.p);
        kernels::combine(1.0, samples.beta.row(r), tau, samples.z.row(r), s.data(), cfg.p);
        const auto eta = prox_sorted_l1_any(s, theta);
        per[r] = kernels::squared_distance(eta.data(), samples.beta.row(r), cfg.p);
    });
    return mean(per) / static_cast<double>(cfg.p);
}

// E ||prox(beta + tau Z; alpha tau)||_0* over the frozen replicates
double count_expectation(std::span<const double> alpha, double tau, const AmpConfig& cfg,
                         const McSamples& samples) {
    g_expectation_passes.fetch_add(1, std::memory_order_relaxed);
    const auto theta = scaled_theta(alpha, tau);
    std::vector<double> per(cfg.mc_samples);
    parallel_for(cfg.mc_samples, [&](std::size_t r) {
        std::vector<double> s(cfg.p);
        kernels::combine(1.0, samples.beta.row(r), tau, samples.z.row(r), s.data(), cfg.p);
        const auto eta = prox_sorted_l1_any(s, theta);
        per[r] = static_cast<double>(modified_l0(eta));
    });
    return mean(per);
}

}  // namespace

StateEvolutionResult detail::state_evolution_tau_any(std::span<const double> alpha,
                                                     const Prior& prior, const AmpConfig& cfg,
                                                     const McSamples* samples, double tau_init) {
    cfg.check();
    if (alpha.size() != cfg.p) throw std::invalid_argument("state evolution: alpha length != p");
    const McSamples local = samples == nullptr ? McSamples::draw(prior, cfg) : McSamples{};
    const McSamples& mc = samples == nullptr ? local : *samples;

    const double sw2 = cfg.sigma_w * cfg.sigma_w;
    const double pi2 = prior.second_moment();
    double tau = tau_init > 0.0 ? tau_init : std::sqrt(sw2 + pi2 / cfg.delta);
    if (tau <= 0.0) {
        throw DegenerateTauError("state evolution: sigma_w = 0 and E[Pi^2] = 0 give tau = 0");
    }

    StateEvolutionResult res;
    res.mc_samples = cfg.mc_samples;
    res.seed = cfg.seed;
    res.iterates.push_back(tau);
    for (std::size_t t = 0; t < cfg.max_iters; ++t) {
        const double e = se_expectation(alpha, tau, cfg, mc);
        const double tau_next = std::sqrt(sw2 + e / cfg.delta);
        res.iterates.push_back(tau_next);
        res.iterations = t + 1;
        if (tau_next <= 0.0) {
            throw DegenerateTauError("state evolution: iteration collapsed to tau = 0");
        }
        const bool done = std::fabs(tau_next - tau) < cfg.tol;
        tau = tau_next;
        if (done) {
            res.converged = true;
            break;
        }
        if (tau > kTauBlowup) break;  // diverging (delta < 1 with weak thresholding)
    }
    res.tau = tau;
    return res;
}

StateEvolutionResult state_evolution_tau(const PenaltySequence& alpha, const Prior& prior,
                                         const AmpConfig& cfg, const McSamples* samples,
                                         double tau_init) {
    return detail::state_evolution_tau_any(alpha.values(), prior, cfg, samples, tau_init);
}

std::uint64_t detail::expectation_passes() {
    return g_expectation_passes.load(std::memory_order_relaxed);
}

StateEvolutionResult detail::se_fixed_point_fast(std::span<const double> alpha, const Prior& prior,
                                                 const AmpConfig& cfg, const McSamples* samples,
                                                 double tau_init) {
    cfg.check();
    if (alpha.size() != cfg.p) throw std::invalid_argument("state evolution: alpha length != p");
    const McSamples local = samples == nullptr ? McSamples::draw(prior, cfg) : McSamples{};
    const McSamples& mc = samples == nullptr ? local : *samples;

    const double sw2 = cfg.sigma_w * cfg.sigma_w;
    const double tau_max = std::sqrt(sw2 + prior.second_moment() / cfg.delta);
    double tau = tau_init > 0.0 ? tau_init : tau_max;
    if (tau <= 0.0) throw DegenerateTauError("state evolution: tau_0 = 0");

    StateEvolutionResult res;
    res.mc_samples = cfg.mc_samples;
    res.seed = cfg.seed;
    auto map = [&](double t) { return std::sqrt(sw2 + se_expectation(alpha, t, cfg, mc) / cfg.delta); };

    // Plain recursion steps with Aitken extrapolation attempted only while
    // the iteration is contracting, accepted only when it shrinks the
    // residual. The sigma_w = 0 map has a spurious root at tau = 0 in the
    // divergent regime, so a non-contracting sequence is never extrapolated.
    std::size_t evals = 0;
    auto step = [&](double t) {
        ++evals;
        return map(t);
    };
    res.iterates.push_back(tau);
    res.tau = tau;
    while (evals < cfg.max_iters) {
        const double t0 = tau;
        const double t1 = step(t0);
        const double g0 = t1 - t0;
        res.iterates.push_back(t1);
        res.tau = tau = t1;
        if (std::fabs(g0) < cfg.tol) {
            res.converged = true;
            break;
        }
        if (t1 > kTauBlowup || evals >= cfg.max_iters) break;

        const double t2 = step(t1);
        const double g1 = t2 - t1;
        res.iterates.push_back(t2);
        res.tau = tau = t2;
        if (std::fabs(g1) < cfg.tol) {
            res.converged = true;
            break;
        }
        if (t2 > kTauBlowup || evals >= cfg.max_iters) break;

        if (std::fabs(g1) < std::fabs(g0)) {
            const double denom = g1 - g0;
            const double cand = denom != 0.0 ? t0 - g0 * g0 / denom : t2;
            if (cand > 0.0 && std::isfinite(cand) && cand < kTauBlowup) {
                const double tc = step(cand);
                if (std::fabs(tc - cand) <= std::fabs(g1)) {
                    res.iterates.push_back(tc);
                    res.tau = tau = tc;
                    if (std::fabs(tc - cand) < cfg.tol) {
                        res.converged = true;
                        break;
                    }
                }
            }
        }
    }
    res.iterations = evals;
    return res;
}

// ---------------------------------------------------------------------------
// Calibration

double detail::calibration_scale_any(std::span<const double> alpha, double tau,
                                     const AmpConfig& cfg, const McSamples& samples) {
    const double count = count_expectation(alpha, tau, cfg, samples);
    return tau * (1.0 - count / cfg.n());
}

double calibration_scale(const PenaltySequence& alpha, double tau, const Prior& prior,
                         const AmpConfig& cfg, const McSamples* samples) {
    cfg.check();
    if (alpha.size() != cfg.p) throw std::invalid_argument("calibration: alpha length != p");
    const McSamples local = samples == nullptr ? McSamples::draw(prior, cfg) : McSamples{};
    const McSamples& mc = samples == nullptr ? local : *samples;
    const double c = detail::calibration_scale_any(alpha.values(), tau, cfg, mc);
    if (c <= 0.0) {
        throw CalibrationDomainError(
            "calibration: 1 - E||prox||_0*/n <= 0 (lambda would be a non-positive scaling)");
    }
    return c;
}

PenaltySequence calibrate_alpha_to_lambda(const PenaltySequence& alpha, double tau,
                                          const Prior& prior, const AmpConfig& cfg,
                                          const McSamples* samples) {
    if (alpha.is_zero()) return PenaltySequence::zeros(alpha.size());
    const double c = calibration_scale(alpha, tau, prior, cfg, samples);
    return alpha.scaled(c);
}

PenaltySequence calibrate_lambda_to_alpha(const PenaltySequence& lambda, const Prior& prior,
                                          const AmpConfig& cfg, const McSamples* samples,
                                          double c_hint, double tau_hint) {
    cfg.check();
    if (lambda.size() != cfg.p) throw std::invalid_argument("calibration: lambda length != p");
    if (lambda.is_zero()) return PenaltySequence::zeros(lambda.size());
    const McSamples local = samples == nullptr ? McSamples::draw(prior, cfg) : McSamples{};
    const McSamples& mc = samples == nullptr ? local : *samples;

    const double sw2 = cfg.sigma_w * cfg.sigma_w;
    const double tau_max = std::sqrt(sw2 + prior.second_moment() / cfg.delta);
    if (tau_max <= 0.0) throw DegenerateTauError("calibration: tau_max = 0");

    double last_tau = tau_hint;  // warm start for the inner state-evolution solves
    auto g = [&](double c) {
        const auto alpha_c = lambda.scaled(1.0 / c);
        const auto se = detail::se_fixed_point_fast(alpha_c.values(), prior, cfg, &mc, last_tau);
        last_tau = std::min(se.tau, 10.0 * tau_max);
        return detail::calibration_scale_any(alpha_c.values(), se.tau, cfg, mc) - c;
    };

    double lo = 1e-8 * std::max(1.0, tau_max);
    double hi = 10.0 * tau_max;
    if (c_hint > 0.0) {
        // try a tight bracket around the hint before the global one
        double hlo = c_hint / 1.3, hhi = std::min(c_hint * 1.3, hi);
        if (g(hlo) > 0.0 && g(hhi) < 0.0) {
            lo = hlo;
            hi = hhi;
        }
    }
    double glo = g(lo);
    double ghi = g(hi);
    for (int k = 0; k < 12 && glo <= 0.0; ++k) {
        lo /= 16.0;
        glo = g(lo);
    }
    for (int k = 0; k < 12 && ghi >= 0.0; ++k) {
        hi *= 4.0;
        ghi = g(hi);
    }
    if (glo <= 0.0 || ghi >= 0.0) {
        throw CalibrationDomainError("calibration inverse: bracket expansion found no sign change");
    }
    // Illinois regula falsi on the bracket
    double c = 0.5 * (lo + hi);
    for (int it = 0; it < 80; ++it) {
        c = (lo * ghi - hi * glo) / (ghi - glo);
        if (!(c > lo && c < hi)) c = 0.5 * (lo + hi);
        const double gc = g(c);
        // the count expectation is a staircase in alpha (integer counts over
        // mc replicates); resolving c below its quantization is meaningless
        if (std::fabs(gc) <= 2e-5 * std::max(1.0, c) || (hi - lo) <= 1e-8 * std::max(1.0, c)) break;
        if (gc > 0.0) {
            if (glo > 0.0) ghi *= 0.5;
            lo = c;
            glo = gc;
        } else {
            if (ghi < 0.0) glo *= 0.5;
            hi = c;
            ghi = gc;
        }
    }
    return lambda.scaled(1.0 / c);
}

// ---------------------------------------------------------------------------
// AMP recursions

namespace {

struct AmpState {
    std::vector<double> beta;
    std::vector<double> z;
    double tau = 0.0;
};

void record(AmpTrajectory& traj, const Dataset& data, std::size_t t, const AmpState& st) {
    AmpIterate it;
    it.t = t;
    it.tau = st.tau;
    if (data.beta_true) {
        it.mse = kernels::squared_distance(st.beta.data(), data.beta_true->data(), st.beta.size()) /
                 static_cast<double>(st.beta.size());
    }
    traj.iterates.push_back(it);
}

}  // namespace

AmpTrajectory run_slope_amp(const Dataset& data, const PenaltySequence& alpha,
                            const AmpOptions& opts, const AmpConfig& cfg, const Prior* prior) {
    data.check();
    const std::size_t n = data.n();
    const std::size_t p = data.p();
    if (alpha.size() != p) throw std::invalid_argument("run_slope_amp: alpha length != p");
    if (opts.tau_tracking == TauTracking::state_evolution && prior == nullptr)
        throw std::invalid_argument("run_slope_amp: state-evolution tracking needs a prior");

    AmpConfig se_cfg = cfg;  // align the scalar channel with the actual matrix
    se_cfg.p = p;
    se_cfg.delta = static_cast<double>(n) / static_cast<double>(p);

    McSamples mc;
    if (opts.tau_tracking == TauTracking::state_evolution) mc = McSamples::draw(*prior, se_cfg);

    AmpState st;
    st.beta.assign(p, 0.0);
    st.z = data.y;
    const double tau0 = std::sqrt(kernels::sum_squares(st.z.data(), n) / static_cast<double>(n));
    st.tau = tau0;
    if (opts.tau_tracking == TauTracking::state_evolution) {
        const double sw2 = se_cfg.sigma_w * se_cfg.sigma_w;
        st.tau = std::sqrt(sw2 + prior->second_moment() / se_cfg.delta);
    }
    if (st.tau <= 0.0) throw DegenerateTauError("run_slope_amp: tau_0 = 0");

    AmpTrajectory traj;
    record(traj, data, 0, st);

    std::vector<double> s(p);
    for (std::size_t t = 1; t <= opts.iters; ++t) {
        kernels::gemv_t(data.X.data().data(), n, p, st.z.data(), s.data());
        kernels::axpy(1.0, st.beta.data(), s.data(), p);
        const auto theta = alpha.scaled(st.tau);
        auto beta_next = prox_sorted_l1(s, theta);
        const double onsager = static_cast<double>(modified_l0(beta_next)) / static_cast<double>(n);
        auto xb = matvec(data.X, beta_next);
        for (std::size_t i = 0; i < n; ++i) st.z[i] = data.y[i] - xb[i] + st.z[i] * onsager;
        st.beta = std::move(beta_next);

        if (opts.tau_tracking == TauTracking::empirical) {
            st.tau = std::sqrt(kernels::sum_squares(st.z.data(), n) / static_cast<double>(n));
        } else {
            const double e = se_expectation(alpha.values(), st.tau, se_cfg, mc);
            st.tau = std::sqrt(se_cfg.sigma_w * se_cfg.sigma_w + e / se_cfg.delta);
        }
        record(traj, data, t, st);
        if (st.tau > opts.divergence_factor * tau0 || !std::isfinite(st.tau)) {
            traj.diverged = true;
            break;
        }
    }
    traj.beta = st.beta;
    traj.tau_final = st.tau;
    return traj;
}

// ---------------------------------------------------------------------------
// MMSE denoiser and its AMP

namespace {

void check_gauss_bernoulli(const Prior& prior) {
    if (prior.kind() != Prior::Kind::gauss_bernoulli)
        throw std::invalid_argument("mmse denoiser: prior must be gauss_bernoulli");
}

// log( e * phi_{tau^2}(s) / ((1-e) * phi_{tau^2+sb^2}(s)) )
double log_zero_odds(double s, double tau, double nonzero_prob, double sigma_b) {
    const double e = 1.0 - nonzero_prob;
    const double v0 = tau * tau;
    const double v1 = v0 + sigma_b * sigma_b;
    return std::log(e / (1.0 - e)) + 0.5 * std::log(v1 / v0) -
           s * s * sigma_b * sigma_b / (2.0 * v0 * v1);
}

}  // namespace

double mmse_denoiser_scalar(double s, double tau, const Prior& prior) {
    check_gauss_bernoulli(prior);
    if (tau <= 0.0) throw std::invalid_argument("mmse denoiser: tau must be > 0");
    const double nz = prior.nonzero_prob();
    const double sb = prior.sigma_b();
    if (nz <= 0.0) return 0.0;
    const double shrink = sb * sb / (sb * sb + tau * tau);
    if (nz >= 1.0) return shrink * s;
    const double lr = log_zero_odds(s, tau, nz, sb);
    const double post_nonzero = 1.0 / (1.0 + std::exp(lr));
    return post_nonzero * shrink * s;
}

double mmse_denoiser_derivative(double s, double tau, const Prior& prior) {
    check_gauss_bernoulli(prior);
    if (tau <= 0.0) throw std::invalid_argument("mmse denoiser: tau must be > 0");
    const double nz = prior.nonzero_prob();
    const double sb = prior.sigma_b();
    if (nz <= 0.0) return 0.0;
    const double v0 = tau * tau;
    const double v1 = v0 + sb * sb;
    const double shrink = sb * sb / v1;
    if (nz >= 1.0) return shrink;
    const double lr = log_zero_odds(s, tau, nz, sb);
    const double post = 1.0 / (1.0 + std::exp(lr));
    const double dlog = s * sb * sb / (v0 * v1);  // d/ds of -log odds
    return shrink * (post + post * (1.0 - post) * dlog * s);
}

std::vector<double> mmse_denoiser(std::span<const double> s, double tau, const Prior& prior) {
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = mmse_denoiser_scalar(s[i], tau, prior);
    return out;
}

namespace {

// Adaptive Simpson on [a, b].
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, m, fa, fm, fb, whole, tol, 48);
}

double gauss_density(double s, double var) {
    return std::exp(-s * s / (2.0 * var)) / std::sqrt(2.0 * M_PI * var);
}

// E[eta(s)^2] with s ~ (1-e) N(0, sb^2 + tau^2) + e N(0, tau^2)
double mmse_posterior_second_moment(double tau, const Prior& prior) {
    const double nz = prior.nonzero_prob();
    const double sb = prior.sigma_b();
    if (nz <= 0.0) return 0.0;
    const double v0 = tau * tau;
    const double v1 = v0 + sb * sb;
    auto component = [&](double var) {
        const double half = 10.0 * std::sqrt(var);
        auto f = [&](double s) {
            const double eta = mmse_denoiser_scalar(s, tau, prior);
            return eta * eta * gauss_density(s, var);
        };
        return 2.0 * integrate(f, 0.0, half, 1e-13 * std::max(1.0, sb * sb));  // even integrand
    };
    double out = nz * component(v1);
    if (nz < 1.0) out += (1.0 - nz) * component(v0);
    return out;
}

}  // namespace

double mmse_se_step(double tau, const Prior& prior, const AmpConfig& cfg) {
    check_gauss_bernoulli(prior);
    const double sw2 = cfg.sigma_w * cfg.sigma_w;
    // E[(eta - beta)^2] = E[beta^2] - E[eta^2] for the exact posterior mean
    const double mse = prior.second_moment() - mmse_posterior_second_moment(tau, prior);
    return std::sqrt(sw2 + std::max(mse, 0.0) / cfg.delta);
}

StateEvolutionResult mmse_se_fixed_point(const Prior& prior, const AmpConfig& cfg) {
    cfg.check();
    check_gauss_bernoulli(prior);
    const double sw2 = cfg.sigma_w * cfg.sigma_w;
    double tau = std::sqrt(sw2 + prior.second_moment() / cfg.delta);
    StateEvolutionResult res;
    res.mc_samples = 0;
    res.seed = cfg.seed;
    res.iterates.push_back(tau);
    if (tau <= 0.0) {  // zero signal, zero noise: already at the fixed point
        res.converged = true;
        return res;
    }
    for (std::size_t t = 0; t < cfg.max_iters; ++t) {
        const double tau_next = mmse_se_step(tau, prior, cfg);
        res.iterates.push_back(tau_next);
        res.iterations = t + 1;
        const bool done = std::fabs(tau_next - tau) < cfg.tol;
        tau = tau_next;
        if (tau <= 0.0) break;
        if (done) {
            res.converged = true;
            break;
        }
    }
    res.tau = tau;
    return res;
}

AmpTrajectory run_mmse_amp(const Dataset& data, const Prior& prior, const AmpOptions& opts,
                           const AmpConfig& cfg) {
    data.check();
    check_gauss_bernoulli(prior);
    const std::size_t n = data.n();
    const std::size_t p = data.p();

    AmpConfig se_cfg = cfg;
    se_cfg.p = p;
    se_cfg.delta = static_cast<double>(n) / static_cast<double>(p);

    AmpState st;
    st.beta.assign(p, 0.0);
    st.z = data.y;
    const double tau0_emp =
        std::sqrt(kernels::sum_squares(st.z.data(), n) / static_cast<double>(n));
    st.tau = opts.tau_tracking == TauTracking::empirical
                 ? tau0_emp
                 : std::sqrt(se_cfg.sigma_w * se_cfg.sigma_w + prior.second_moment() / se_cfg.delta);
    const double tau0 = st.tau;

    AmpTrajectory traj;
    record(traj, data, 0, st);
    if (tau0 <= 0.0) {  // zero prior and zero noise: nothing to iterate
        traj.beta = st.beta;
        traj.tau_final = st.tau;
        return traj;
    }

    std::vector<double> s(p);
    for (std::size_t t = 1; t <= opts.iters; ++t) {
        kernels::gemv_t(data.X.data().data(), n, p, st.z.data(), s.data());
        kernels::axpy(1.0, st.beta.data(), s.data(), p);
        auto beta_next = mmse_denoiser(s, st.tau, prior);
        double div = 0.0;
        for (std::size_t j = 0; j < p; ++j) div += mmse_denoiser_derivative(s[j], st.tau, prior);
        const double onsager = div / static_cast<double>(n);
        auto xb = matvec(data.X, beta_next);
        for (std::size_t i = 0; i < n; ++i) st.z[i] = data.y[i] - xb[i] + st.z[i] * onsager;
        st.beta = std::move(beta_next);

        if (opts.tau_tracking == TauTracking::empirical) {
            st.tau = std::sqrt(kernels::sum_squares(st.z.data(), n) / static_cast<double>(n));
        } else {
            st.tau = mmse_se_step(st.tau, prior, se_cfg);
        }
        record(traj, data, t, st);
        if (st.tau > opts.divergence_factor * tau0 || !std::isfinite(st.tau)) {
            traj.diverged = true;
            break;
        }
        if (st.tau <= 0.0) break;
    }
    traj.beta = st.beta;
    traj.tau_final = st.tau;
    return traj;
}

double asymptotic_mse(double tau, const AmpConfig& cfg) {
    if (tau < cfg.sigma_w * (1.0 - 1e-12)) {
        throw std::domain_error("asymptotic_mse: tau < sigma_w");
    }
    const double v = cfg.delta * (tau * tau - cfg.sigma_w * cfg.sigma_w);
    return v > 0.0 ? v : 0.0;
}

}  // namespace slope
