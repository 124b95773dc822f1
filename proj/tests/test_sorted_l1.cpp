#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "slope/rng.hpp"
#include "slope/sorted_l1.hpp"

using namespace slope;

namespace {

PenaltySequence random_theta(std::mt19937_64& rng, std::size_t p, double scale = 1.0) {
    std::exponential_distribution<double> expo(1.0 / scale);
    std::vector<double> v(p);
    double acc = 0.0;
    for (std::size_t i = p; i-- > 0;) {
        acc += expo(rng);
        v[i] = acc - 1.0;  // can dip below zero...
    }
    for (double& x : v) x = std::max(x, 0.0);  // ...then clamp: many exact-zero tails
    return PenaltySequence::validated(std::move(v));
}

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
    std::normal_distribution<double> gauss(0.0, scale);
    std::vector<double> v(n);
    for (double& x : v) x = gauss(rng);
    return v;
}

}  // namespace

TEST_SUITE("sorted_l1") {

TEST_CASE("norm evaluates the definition") {
    const std::vector<double> b{-2.0, -4.0, 3.0, 1.0};
    CHECK(sorted_l1_norm(b, PenaltySequence::validated({4, 3, 2, 1})) == doctest::Approx(30.0));
    CHECK(sorted_l1_norm(b, PenaltySequence::zeros(4)) == 0.0);
    CHECK(sorted_l1_norm(std::vector<double>{1.0, 1.0}, PenaltySequence::validated({2, 1})) ==
          doctest::Approx(3.0));
    CHECK_THROWS_AS(sorted_l1_norm(std::vector<double>{1.0}, PenaltySequence::zeros(2)),
                    std::invalid_argument);
}

TEST_CASE("prox trivial cases") {
    auto rng = substream(7, 0);
    const auto y = random_vec(rng, 6);
    const auto out = prox_sorted_l1(y, PenaltySequence::zeros(6));
    for (std::size_t i = 0; i < 6; ++i) CHECK(out[i] == doctest::Approx(y[i]));

    // constant theta reduces to soft thresholding, exactly
    const std::vector<double> y2{3.0, 1.0, -2.0};
    const auto st = prox_sorted_l1(y2, PenaltySequence::constant(3, 1.0));
    CHECK(st[0] == doctest::Approx(2.0));
    CHECK(st[1] == 0.0);
    CHECK(st[2] == doctest::Approx(-1.0));
}

TEST_CASE("prox tie case frozen from the enumeration oracle") {
    const std::vector<double> y{4.0, 3.0};
    const std::vector<double> th{3.0, 1.0};
    const auto o = oracle::prox_enumeration(y, th);
    CHECK(o[0] == doctest::Approx(1.5));  // oracle agrees with the hand value
    CHECK(o[1] == doctest::Approx(1.5));
    const auto out = prox_sorted_l1(y, PenaltySequence::validated({3.0, 1.0}));
    CHECK(out[0] == doctest::Approx(1.5));
    CHECK(out[1] == doctest::Approx(1.5));
}

TEST_CASE("prox matches the enumeration oracle on random small instances") {
    auto rng = substream(8, 0);
    std::uniform_int_distribution<std::size_t> psize(1, 6);
    for (int rep = 0; rep < 60; ++rep) {
        const std::size_t p = psize(rng);
        const auto y = random_vec(rng, p, 2.0);
        const auto theta = random_theta(rng, p);
        const auto mine = prox_sorted_l1(y, theta);
        const auto ref = oracle::prox_enumeration(y, theta.values());
        for (std::size_t i = 0; i < p; ++i) CHECK(mine[i] == doctest::Approx(ref[i]).epsilon(1e-9));
    }
}

TEST_CASE("prox optimality against random perturbations") {
    auto rng = substream(9, 0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int rep = 0; rep < 5; ++rep) {
        const std::size_t p = 40;
        const auto y = random_vec(rng, p, 2.0);
        const auto theta = random_theta(rng, p);
        const auto b = prox_sorted_l1(y, theta);
        const double f0 = oracle::prox_objective(y, b, theta.values());
        for (int k = 0; k < 200; ++k) {
            for (const double eps : {1e-3, 1e-2}) {
                auto bp = b;
                for (double& x : bp) x += eps * gauss(rng);
                CHECK(oracle::prox_objective(y, bp, theta.values()) >= f0 - 1e-12);
            }
        }
    }
}

TEST_CASE("prox preserves magnitude order and is nonexpansive") {
    auto rng = substream(10, 0);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t p = 25;
        const auto y = random_vec(rng, p, 1.5);
        const auto y2 = random_vec(rng, p, 1.5);
        const auto theta = random_theta(rng, p);
        const auto b = prox_sorted_l1(y, theta);
        const auto b2 = prox_sorted_l1(y2, theta);
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = 0; j < p; ++j) {
                if (std::fabs(y[i]) >= std::fabs(y[j])) {
                    CHECK(std::fabs(b[i]) >= std::fabs(b[j]) - 1e-12);
                }
            }
        }
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            num += (b[i] - b2[i]) * (b[i] - b2[i]);
            den += (y[i] - y2[i]) * (y[i] - y2[i]);
        }
        CHECK(num <= den * (1.0 + 1e-12));
    }
}

TEST_CASE("modified l0 counts unique nonzero magnitudes") {
    CHECK(modified_l0(std::vector<double>{0.0, 0.0, 0.0}) == 0);
    CHECK(modified_l0(std::vector<double>{1.0, -1.0, 2.0}) == 2);
    CHECK(modified_l0(std::vector<double>{1.5, 1.5, 0.0, -3.0}) == 2);
    CHECK(modified_l0(std::vector<double>{}) == 0);
    // tolerance: 1e-9-relative ties collapse
    CHECK(modified_l0(std::vector<double>{1.0, 1.0 + 1e-12}) == 1);
    CHECK(modified_l0(std::vector<double>{1.0, 1.0 + 1e-6}) == 2);
}

TEST_CASE("tie structure on the ranking example") {
    const std::vector<double> eta{-2.0, -4.0, 3.0, 1.0};
    const auto ts = tie_structure(eta);
    // sigma(1)=2, sigma(2)=3, sigma(3)=1, sigma(4)=4 in 1-based indexing
    CHECK(ts.sigma == std::vector<std::size_t>{1, 2, 0, 3});
    CHECK(ts.blocks.size() == 4);

    const auto single = tie_structure(std::vector<double>{5.0});
    CHECK(single.sigma == std::vector<std::size_t>{0});
    CHECK(single.tie_set(0) == std::vector<std::size_t>{0});

    const auto tied = tie_structure(std::vector<double>{2.0, -2.0, 1.0});
    CHECK(tied.tie_set(0) == std::vector<std::size_t>{0, 1});
    CHECK(tied.tie_set(1) == std::vector<std::size_t>{0, 1});
    CHECK(tied.tie_set(2) == std::vector<std::size_t>{2});
}

TEST_CASE("tie structure ranks break ties by original index") {
    const std::vector<double> eta{1.0, -1.0, 1.0};
    const auto ts = tie_structure(eta);
    CHECK(ts.sigma == std::vector<std::size_t>{0, 1, 2});
    CHECK(ts.blocks.size() == 1);
    CHECK(ts.tie_set(1).size() == 3);
}

TEST_CASE("penalty sequence validation") {
    CHECK_THROWS_AS(PenaltySequence::validated({1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(PenaltySequence::validated({1.0, -0.5}), std::invalid_argument);
    const auto ok = PenaltySequence::validated({2.0, 1.0, 0.0});
    CHECK(ok.size() == 3);
    CHECK(ok.scaled(2.0)[0] == 4.0);
}

}  // TEST_SUITE
