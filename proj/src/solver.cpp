#include "slope/solver.hpp"

#include <algorithm>
#include <cmath>

#include "slope/kernels.hpp"
#include "slope/rng.hpp"
#include "slope/sorted_l1.hpp"

namespace slope {
namespace {

// |x_i' b| beyond this leaves every logistic probability saturated (under a
// zero penalty nothing stops further growth: the data are separable).
constexpr double kSeparationScore = 15.0;

struct SmoothProblem {
    // value and gradient of the smooth part at b (gradient sized p, or p+1
    // with the intercept slot last when fitting one)
    virtual double value(std::span<const double> b, double b0) const = 0;
    virtual void gradient(std::span<const double> b, double b0, std::vector<double>& g,
                          double& g0) const = 0;
    virtual double separation_score(std::span<const double> b, double b0) const {
        (void)b;
        (void)b0;
        return 0.0;
    }
    virtual ~SmoothProblem() = default;
};

struct LeastSquares final : SmoothProblem {
    const Dataset& data;
    explicit LeastSquares(const Dataset& d) : data(d) {}

    double value(std::span<const double> b, double) const override {
        auto r = matvec(data.X, b);
        kernels::axpy(-1.0, data.y.data(), r.data(), r.size());
        return 0.5 * kernels::sum_squares(r.data(), r.size());
    }
    void gradient(std::span<const double> b, double, std::vector<double>& g, double& g0) const override {
        auto r = matvec(data.X, b);
        kernels::axpy(-1.0, data.y.data(), r.data(), r.size());
        g = matvec_t(data.X, r);
        g0 = 0.0;
    }
};

struct Logistic final : SmoothProblem {
    const Dataset& data;
    bool intercept;
    Logistic(const Dataset& d, bool icept) : data(d), intercept(icept) {}

    double value(std::span<const double> b, double b0) const override {
        auto z = matvec(data.X, b);
        double acc = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double zi = z[i] + b0;
            // log(1 + e^z) - y z, stably
            acc += std::max(zi, 0.0) + std::log1p(std::exp(-std::fabs(zi))) - data.y[i] * zi;
        }
        return acc;
    }
    void gradient(std::span<const double> b, double b0, std::vector<double>& g, double& g0) const override {
        auto z = matvec(data.X, b);
        std::vector<double> r(z.size());
        double s0 = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double zi = z[i] + b0;
            const double sig = 1.0 / (1.0 + std::exp(-zi));
            r[i] = sig - data.y[i];
            s0 += r[i];
        }
        g = matvec_t(data.X, r);
        g0 = intercept ? s0 : 0.0;
    }
    double separation_score(std::span<const double> b, double b0) const override {
        const auto z = matvec(data.X, b);
        double mx = 0.0;
        for (const double zi : z) mx = std::max(mx, std::fabs(zi + b0));
        return mx;
    }
};

double penalized_objective(const SmoothProblem& prob, std::span<const double> b, double b0,
                           const PenaltySequence& lambda) {
    return prob.value(b, b0) + sorted_l1_norm(b, lambda);
}

FitResult proximal_gradient(const SmoothProblem& prob, std::size_t p, const PenaltySequence& lambda,
                            const SolverConfig& cfg, double lipschitz_bound,
                            const std::vector<double>* warm_start, bool watch_separable) {
    FitResult res;
    res.beta.assign(p, 0.0);
    if (warm_start != nullptr && warm_start->size() == p) res.beta = *warm_start;

    double s = cfg.step.initial > 0.0 ? cfg.step.initial : 1.0 / std::max(lipschitz_bound, 1e-300);
    const bool backtrack = cfg.step.kind == StepRule::Kind::backtracking;
    const bool fista = cfg.acceleration == SolverConfig::Acceleration::fista;

    std::vector<double> x = res.beta;       // accepted iterate
    double x0 = 0.0;
    std::vector<double> v = x;              // extrapolated point
    double v0 = x0;
    double t_momentum = 1.0;

    std::vector<double> grad(p);
    double grad0 = 0.0;
    std::vector<double> step_point(p);
    double obj = penalized_objective(prob, x, x0, lambda);
    res.objective_trajectory.push_back(obj);

    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        res.iterations = it + 1;
        const double fv = prob.value(v, v0);
        prob.gradient(v, v0, grad, grad0);

        std::vector<double> next;
        double next0 = v0;
        double f_next = 0.0;
        for (;;) {
            kernels::combine(1.0, v.data(), -s, grad.data(), step_point.data(), p);
            next = prox_sorted_l1(step_point, lambda.scaled(s));
            if (cfg.intercept) next0 = v0 - s * grad0;
            f_next = prob.value(next, next0);
            if (!backtrack) break;
            // sufficient-decrease model for the smooth part
            double quad = fv;
            double dot_gd = 0.0, dist = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                const double d = next[j] - v[j];
                dot_gd += grad[j] * d;
                dist += d * d;
            }
            const double d0 = next0 - v0;
            dot_gd += grad0 * d0;
            dist += d0 * d0;
            quad += dot_gd + dist / (2.0 * s);
            if (f_next <= quad + 1e-12 * std::fabs(quad)) break;
            s *= cfg.step.shrink;
            if (s < 1e-300) break;
        }

        const double obj_next = f_next + sorted_l1_norm(next, lambda);

        if (fista) {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
            const double w = (t_momentum - 1.0) / t_next;
            for (std::size_t j = 0; j < p; ++j) v[j] = next[j] + w * (next[j] - x[j]);
            v0 = next0 + w * (next0 - x0);
            t_momentum = t_next;
        }

        const double obj_prev = obj;
        x = next;
        x0 = next0;
        obj = obj_next;
        res.objective_trajectory.push_back(obj);

        const double rel_change = std::fabs(obj_prev - obj) / std::max(1.0, std::fabs(obj_prev));
        const bool check_now = rel_change < cfg.rel_tolerance || it % 10 == 9;
        if (watch_separable && check_now && prob.separation_score(x, x0) > kSeparationScore) {
            res.separable_warning = true;
            break;
        }
        if (!fista) v = x, v0 = x0;

        // The fixed-point residual is the authoritative criterion (an
        // objective plateau alone can hide iterate error on ill-conditioned
        // designs); the relative-change test decides when to pay for the
        // extra gradient it needs.
        if (check_now) {
            prob.gradient(x, x0, grad, grad0);
            kernels::combine(1.0, x.data(), -s, grad.data(), step_point.data(), p);
            auto fp = prox_sorted_l1(step_point, lambda.scaled(s));
            if (kernels::squared_distance(fp.data(), x.data(), p) <
                cfg.fixed_point_tol * cfg.fixed_point_tol) {
                res.converged = true;
                break;
            }
        }
    }

    res.beta = std::move(x);
    res.intercept = x0;
    res.objective = obj;
    return res;
}

}  // namespace

double slope_objective(const Dataset& data, std::span<const double> b, const PenaltySequence& lambda) {
    data.check();
    if (b.size() != data.p() || lambda.size() != data.p())
        throw std::invalid_argument("slope_objective: dimension mismatch");
    LeastSquares ls(data);
    return ls.value(b, 0.0) + sorted_l1_norm(b, lambda);
}

double operator_norm_squared(const Matrix& X) {
    const std::size_t p = X.cols();
    if (p == 0 || X.rows() == 0) return 0.0;
    auto rng = substream(0xa11ce, 0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> v(p);
    for (double& x : v) x = gauss(rng);
    double norm2 = 0.0;
    for (int it = 0; it < 50; ++it) {
        auto xv = matvec(X, v);
        norm2 = kernels::sum_squares(xv.data(), xv.size());
        v = matvec_t(X, xv);
        const double vn = std::sqrt(kernels::sum_squares(v.data(), p));
        if (vn == 0.0) return 0.0;
        for (double& x : v) x /= vn;
    }
    return norm2;
}

FitResult fit_slope(const Dataset& data, const PenaltySequence& lambda, const SolverConfig& cfg,
                    const std::vector<double>* warm_start) {
    data.check();
    if (lambda.size() != data.p()) throw std::invalid_argument("fit_slope: penalty length mismatch");
    LeastSquares prob(data);
    return proximal_gradient(prob, data.p(), lambda, cfg, operator_norm_squared(data.X), warm_start,
                             false);
}

FitResult fit_slope_logistic(const Dataset& data, const PenaltySequence& lambda,
                             const SolverConfig& cfg, const std::vector<double>* warm_start) {
    data.check();
    if (lambda.size() != data.p())
        throw std::invalid_argument("fit_slope_logistic: penalty length mismatch");
    for (double yi : data.y) {
        if (yi != 0.0 && yi != 1.0)
            throw std::invalid_argument("fit_slope_logistic: labels must be in {0,1}");
    }
    Logistic prob(data, cfg.intercept);
    return proximal_gradient(prob, data.p(), lambda, cfg, operator_norm_squared(data.X) / 4.0,
                             warm_start, lambda.is_zero());
}

std::vector<double> predict(const Dataset& data, std::span<const double> beta, double intercept) {
    auto out = matvec(data.X, beta);
    if (intercept != 0.0) {
        for (double& v : out) v += intercept;
    }
    return out;
}

std::vector<double> predict_labels(const Dataset& data, std::span<const double> beta,
                                   double intercept) {
    auto scores = predict(data, beta, intercept);
    for (double& v : scores) v = v > 0.0 ? 1.0 : 0.0;
    return scores;
}

double classification_accuracy(std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size())
        throw std::invalid_argument("classification_accuracy: length mismatch");
    if (y.empty()) return 0.0;
    std::size_t agree = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if ((y[i] > 0.5) == (y_hat[i] > 0.5)) ++agree;
    }
    return static_cast<double>(agree) / static_cast<double>(y.size());
}

}  // namespace slope
