#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "slope/data.hpp"
#include "slope/design.hpp"
#include "slope/rng.hpp"

using namespace slope;

namespace {

// central finite differences of the frozen-draw state evolution (common
// random numbers: the same samples serve every perturbed evaluation)
std::vector<double> fd_gradient(const PenaltySequence& alpha, const Prior& prior,
                                const AmpConfig& cfg, const McSamples& samples, double h) {
    std::vector<double> g(cfg.p);
    const double tau0 = detail::state_evolution_tau_any(alpha.values(), prior, cfg, &samples, 0.0).tau;
    for (std::size_t i = 0; i < cfg.p; ++i) {
        auto up = alpha.values();
        auto dn = alpha.values();
        up[i] += h;
        dn[i] -= h;
        const double tu = detail::state_evolution_tau_any(up, prior, cfg, &samples, tau0).tau;
        const double td = detail::state_evolution_tau_any(dn, prior, cfg, &samples, tau0).tau;
        g[i] = (tu - td) / (2.0 * h);
    }
    return g;
}

double rel_l2_error(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num / std::max(den, 1e-300));
}

PenaltySequence mid_range_alpha(std::size_t p, std::uint64_t seed) {
    // distinct, gently decreasing entries around 1.5
    std::vector<double> a(p);
    auto rng = substream(seed, 5);
    std::uniform_real_distribution<double> unif(0.0, 0.5);
    double cur = 2.0 + unif(rng);
    for (std::size_t i = 0; i < p; ++i) {
        a[i] = cur;
        cur -= (1.2 / double(p)) * (0.5 + unif(rng));
    }
    return PenaltySequence::validated(std::move(a));
}

}  // namespace

TEST_SUITE("design") {

TEST_CASE("k-level expansion matches the worked example") {
    const auto kp = KLevelPenalty::validated({7.0, 5.0, 1.0}, {2, 3}, 5);
    const auto seq = expand_k_level(kp);
    CHECK(seq.values() == std::vector<double>{7.0, 7.0, 5.0, 1.0, 1.0});

    const auto lasso = expand_k_level(KLevelPenalty::validated({2.5}, {}, 4));
    CHECK(lasso.values() == std::vector<double>{2.5, 2.5, 2.5, 2.5});

    const auto full = KLevelPenalty::validated({4.0, 3.0, 2.0}, {1, 2}, 3);
    CHECK(expand_k_level(full).values() == std::vector<double>{4.0, 3.0, 2.0});
}

TEST_CASE("k-level validation rejects bad shapes") {
    CHECK_THROWS_AS(KLevelPenalty::validated({1.0, 2.0}, {2}, 5), std::invalid_argument);
    CHECK_THROWS_AS(KLevelPenalty::validated({2.0, 1.0}, {}, 5), std::invalid_argument);
    CHECK_THROWS_AS(KLevelPenalty::validated({2.0, 1.0}, {5}, 5), std::invalid_argument);
    CHECK_THROWS_AS(KLevelPenalty::validated({2.0, 1.0, 0.5}, {3, 2}, 5), std::invalid_argument);
    CHECK_THROWS_AS(KLevelPenalty::validated({-1.0}, {}, 3), std::invalid_argument);
}

TEST_CASE("compress is the inverse of expand on canonical vectors") {
    const auto kp = KLevelPenalty::validated({3.0, 1.5, 0.0}, {2, 6}, 9);
    const auto back = compress_to_k_level(expand_k_level(kp));
    CHECK(back.magnitudes == kp.magnitudes);
    CHECK(back.splits == kp.splits);
    CHECK(back.p == kp.p);
}

TEST_CASE("split_widest_level preserves the expansion") {
    const auto kp = KLevelPenalty::validated({3.0, 1.0}, {2}, 10);
    const auto refined = split_widest_level(kp);
    CHECK(refined.levels() == 3);
    CHECK(expand_k_level(refined).values() == expand_k_level(kp).values());
}

TEST_CASE("gradient is zero when the prox output is identically zero") {
    AmpConfig cfg;
    cfg.delta = 0.3;
    cfg.sigma_w = 0.5;
    cfg.p = 60;
    cfg.mc_samples = 16;
    cfg.seed = 31;
    const auto prior = Prior::bernoulli(0.0, 1.0);  // point mass at zero
    const auto alpha = PenaltySequence::constant(cfg.p, 1e6);
    const auto se = state_evolution_tau(alpha, prior, cfg);
    const auto g = gradient_tau_alpha(alpha, se.tau, prior, cfg);
    for (double v : g) CHECK(v == 0.0);
    // and D degenerates to -n tau
    const double d = compute_D(alpha, se.tau, prior, cfg);
    CHECK(d == doctest::Approx(-cfg.n() * se.tau).epsilon(1e-12));
}

TEST_CASE("exact gradient matches central finite differences (common random numbers)") {
    for (const double sigma_w : {0.0, 0.5}) {
        for (const std::size_t p : {std::size_t{10}, std::size_t{50}}) {
            AmpConfig cfg;
            cfg.delta = 0.3;
            cfg.sigma_w = sigma_w;
            cfg.p = p;
            cfg.mc_samples = p == 10 ? 1200 : 420;  // >= 1e4 scalar samples
            cfg.tol = 1e-12;
            cfg.max_iters = 2000;
            cfg.seed = 100 + p + static_cast<std::size_t>(10 * sigma_w);
            const auto prior = Prior::bernoulli(0.5, 1.0);
            const auto alpha = mid_range_alpha(p, cfg.seed);
            const auto samples = McSamples::draw(prior, cfg);
            const auto se = state_evolution_tau(alpha, prior, cfg, &samples);
            REQUIRE(se.converged);
            const auto grad =
                gradient_tau_alpha(alpha, se.tau, prior, cfg, DMode::exact, &samples);
            const auto fd = fd_gradient(alpha, prior, cfg, samples, 1e-4);
            CHECK(rel_l2_error(grad, fd) <= 0.05);
        }
    }
}

TEST_CASE("unit mode rescales the exact gradient by |D|") {
    AmpConfig cfg;
    cfg.delta = 0.3;
    cfg.sigma_w = 0.0;
    cfg.p = 40;
    cfg.mc_samples = 64;
    cfg.seed = 33;
    const auto prior = Prior::bernoulli(0.5, 1.0);
    const auto alpha = mid_range_alpha(cfg.p, 3);
    const auto samples = McSamples::draw(prior, cfg);
    const auto se = state_evolution_tau(alpha, prior, cfg, &samples);
    const auto exact = gradient_tau_alpha(alpha, se.tau, prior, cfg, DMode::exact, &samples);
    const auto unit = gradient_tau_alpha(alpha, se.tau, prior, cfg, DMode::unit, &samples);
    const double d = compute_D(alpha, se.tau, prior, cfg, &samples);
    CHECK(d < 0.0);
    for (std::size_t i = 0; i < cfg.p; ++i) {
        CHECK(unit[i] == doctest::Approx(-exact[i] * d).epsilon(1e-10));
    }
}

TEST_CASE("D is negative across 100 random instances") {
    const auto prior = Prior::bernoulli(0.5, 1.0);
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        AmpConfig cfg;
        cfg.delta = 0.3;
        cfg.sigma_w = seed % 2 == 0 ? 0.0 : 0.5;
        cfg.p = 50;
        cfg.mc_samples = 24;
        cfg.seed = seed;
        auto rng = substream(seed, 9);
        std::uniform_real_distribution<double> unif(0.8, 2.5);
        const auto alpha = PenaltySequence::constant(cfg.p, unif(rng));
        const auto samples = McSamples::draw(prior, cfg);
        const auto se = state_evolution_tau(alpha, prior, cfg, &samples);
        CHECK(compute_D(alpha, se.tau, prior, cfg, &samples) < 0.0);
    }
}

TEST_CASE("gradient estimates agree across independent seeds") {
    AmpConfig cfg;
    cfg.delta = 0.3;
    cfg.sigma_w = 0.0;
    cfg.p = 50;
    cfg.mc_samples = 400;
    cfg.seed = 41;
    const auto prior = Prior::bernoulli(0.5, 1.0);
    const auto alpha = PenaltySequence::constant(cfg.p, 1.5);
    const auto se = state_evolution_tau(alpha, prior, cfg);
    const auto g1 = gradient_tau_alpha(alpha, se.tau, prior, cfg);
    AmpConfig cfg2 = cfg;
    cfg2.seed = 4242;
    const auto se2 = state_evolution_tau(alpha, prior, cfg2);
    const auto g2 = gradient_tau_alpha(alpha, se2.tau, prior, cfg2);
    CHECK(rel_l2_error(g1, g2) <= 0.25);
}

TEST_CASE("tuned lasso scan finds an interior minimum") {
    AmpConfig cfg;
    cfg.delta = 0.3;
    cfg.sigma_w = 0.0;
    cfg.p = 300;
    cfg.mc_samples = 32;
    cfg.seed = 51;
    const auto prior = Prior::bernoulli(0.5, 1.0);
    double tau = 0.0;
    const double a = tuned_lasso_alpha(prior, cfg, 40, 0.05, 50.0, &tau);
    CHECK(a > 0.05);
    CHECK(a < 50.0);
    CHECK(tau > cfg.sigma_w);
    // the scan minimizer beats its grid neighbours
    const auto samples = McSamples::draw(prior, cfg);
    const auto t_lo =
        state_evolution_tau(PenaltySequence::constant(cfg.p, a / 1.5), prior, cfg, &samples);
    const auto t_hi =
        state_evolution_tau(PenaltySequence::constant(cfg.p, a * 1.5), prior, cfg, &samples);
    CHECK(tau <= t_lo.tau + 1e-9);
    CHECK(tau <= t_hi.tau + 1e-9);
}

TEST_CASE("pgd in a flat region returns the initialization unchanged") {
    AmpConfig cfg;
    cfg.delta = 0.3;
    cfg.sigma_w = 0.5;
    cfg.p = 80;
    cfg.mc_samples = 16;
    cfg.seed = 52;
    PgdConfig pgd;
    pgd.max_iters = 10;
    pgd.init_alpha = std::vector<double>(cfg.p, 1e7);
    const auto res = pgd_design(Prior::bernoulli(0.0, 1.0), cfg, pgd);
    CHECK(res.alpha.values() == std::vector<double>(cfg.p, 1e7));
    CHECK_FALSE(res.aborted);
}

TEST_CASE("pgd improves on the tuned lasso and reports a consistent best") {
    AmpConfig cfg;
    cfg.delta = 0.3;
    cfg.sigma_w = 0.0;
    cfg.p = 300;
    cfg.mc_samples = 48;
    cfg.seed = 53;
    PgdConfig pgd;
    pgd.max_iters = 40;
    const auto prior = Prior::bernoulli(0.5, 1.0);
    const auto res = pgd_design(prior, cfg, pgd);
    CHECK_FALSE(res.aborted);
    CHECK(res.tau < res.lasso_tau);
    for (double t : res.tau_trajectory) CHECK(res.tau <= t + 1e-12);
    // reported lambda is the calibration of the reported alpha (parallel map)
    const double ratio = res.lambda[0] / res.alpha[0];
    for (std::size_t i = 0; i < cfg.p; ++i) {
        CHECK(res.lambda[i] == doctest::Approx(ratio * res.alpha[i]).epsilon(1e-10));
    }
}

TEST_CASE("pgd momentum variants land near plain pgd") {
    AmpConfig cfg;
    cfg.delta = 0.3;
    cfg.sigma_w = 0.0;
    cfg.p = 250;
    cfg.mc_samples = 32;
    cfg.seed = 54;
    const auto prior = Prior::bernoulli(0.5, 1.0);
    PgdConfig plain;
    plain.max_iters = 160;
    const auto base = pgd_design(prior, cfg, plain);
    for (const auto mom : {Momentum::heavy_ball, Momentum::nesterov}) {
        PgdConfig m = plain;
        m.momentum = mom;
        const auto res = pgd_design(prior, cfg, m);
        CHECK_FALSE(res.aborted);
        CHECK(std::fabs(res.tau - base.tau) / base.tau <= 0.02);
    }
}

TEST_CASE("bh sequence properties and quantile oracle") {
    for (double q : {0.05, 0.2, 0.8}) {
        const auto seq = bh_sequence(12, q, 1.0);
        for (std::size_t i = 0; i + 1 < seq.size(); ++i) CHECK(seq[i] >= seq[i + 1]);
        CHECK(seq[seq.size() - 1] >= 0.0);
    }
    const auto tail = bh_sequence(6, 0.9999, 1.0);
    CHECK(tail[5] <= 2e-4);  // PhiInv(1/2) = 0
    const auto seq = bh_sequence(4, 0.2, 1.0);
    for (std::size_t i = 0; i < 4; ++i) {
        const double ref = oracle::normal_quantile_bisect(1.0 - 0.025 * double(i + 1));
        CHECK(seq[i] == doctest::Approx(ref).epsilon(1e-9));
    }
    CHECK_THROWS_AS(bh_sequence(4, 1.5, 1.0), std::invalid_argument);
    for (double pr : {1e-9, 1e-4, 0.023, 0.4, 0.5, 0.77, 0.991, 1.0 - 1e-9}) {
        CHECK(normal_quantile(pr) == doctest::Approx(oracle::normal_quantile_bisect(pr)).epsilon(1e-9));
    }
}

TEST_CASE("cd on a data objective: k=1 matches a lasso grid and deeper k never ends worse") {
    ExperimentSpec spec;
    spec.design = ExperimentSpec::Design::arma11;
    spec.n = 30;
    spec.p = 20;
    spec.prior = Prior::gaussian_binomial(5, 0.3);
    spec.sigma_w = 1.0;
    const auto data = make_dataset(spec, 60);

    SolverConfig solver;
    solver.max_iters = 4000;
    solver.fixed_point_tol = 1e-6;
    CvObjective obj(data, 5, CvObjective::Metric::prediction_mse, solver, 7);

    // 40-point lasso grid as the 1-level reference
    double grid_best = 1e300, grid_best_lam = 0.0;
    const double cap = obj.magnitude_cap();
    for (int g = 0; g < 40; ++g) {
        const double lam = cap * std::pow(1e-4, double(g) / 39.0);
        const double v = obj(KLevelPenalty::validated({lam}, {}, spec.p));
        if (v < grid_best) {
            grid_best = v;
            grid_best_lam = lam;
        }
    }

    SearchConfig search;
    const auto k1 = cd_design(obj, KLevelPenalty::validated({cap / 2}, {}, spec.p), search);
    CHECK(k1.objective <= grid_best * (1.0 + 1e-6));
    for (std::size_t t = 1; t < k1.accepted_trajectory.size(); ++t) {
        CHECK(k1.accepted_trajectory[t] <= k1.accepted_trajectory[t - 1]);
    }

    // chain upward: k=2 initialized from the k=1 solution never ends worse
    const auto k2_init = split_widest_level(k1.penalty);
    const auto k2 = cd_design(obj, k2_init, search);
    CHECK(k2.objective <= k1.objective * (1.0 + 1e-12));
    const auto k3 = cd_design(obj, split_widest_level(k2.penalty), search);
    CHECK(k3.objective <= k2.objective * (1.0 + 1e-12));
    (void)grid_best_lam;
}

TEST_CASE("cd with the state-evolution objective beats the tuned lasso") {
    AmpConfig cfg;
    cfg.delta = 0.3;
    cfg.sigma_w = 0.0;
    cfg.p = 200;
    cfg.mc_samples = 32;
    cfg.seed = 61;
    const auto prior = Prior::gauss_bernoulli(0.5, 1.0);
    SearchConfig search;
    search.golden_evals = 18;
    const auto res = cd_design_se_tau(prior, cfg, 2, search);
    double lasso_tau = 0.0;
    tuned_lasso_alpha(prior, cfg, 40, 0.05, 50.0, &lasso_tau);
    CHECK(res.tau <= lasso_tau * (1.0 + 1e-9));
    CHECK(res.cd.penalty.levels() == 2);
    for (std::size_t t = 1; t < res.cd.accepted_trajectory.size(); ++t) {
        CHECK(res.cd.accepted_trajectory[t] <= res.cd.accepted_trajectory[t - 1]);
    }
    // lambda reported in the lambda regime, parallel to alpha
    CHECK(res.lambda.size() == cfg.p);
    CHECK(res.lambda[0] > res.lambda[cfg.p - 1]);
}

TEST_CASE("cd keeps the current split when the interval is empty") {
    ExperimentSpec spec;
    spec.n = 15;
    spec.p = 4;
    spec.prior = Prior::gaussian_binomial(5, 0.3);
    spec.sigma_w = 0.5;
    const auto data = make_dataset(spec, 62);
    SolverConfig solver;
    solver.fixed_point_tol = 1e-6;
    EstimationMseObjective obj(data, solver);
    // k = p: every split interval is empty, only magnitudes move
    const auto init = KLevelPenalty::validated({2.0, 1.5, 1.0, 0.5}, {1, 2, 3}, 4);
    const auto res = cd_design(obj, init, SearchConfig{});
    CHECK(res.penalty.splits == std::vector<std::size_t>{1, 2, 3});
    CHECK(res.objective <= obj(init) * (1.0 + 1e-12));
}

}  // TEST_SUITE
