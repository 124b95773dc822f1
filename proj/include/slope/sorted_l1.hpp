#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "slope/types.hpp"

namespace slope {

/// Relative tolerance under which two magnitudes count as tied.
inline constexpr double kTieTolerance = 1e-9;

inline bool magnitudes_tie(double a, double b) {
    const double d = a > b ? a - b : b - a;
    double scale = 1.0;
    if (a > scale) scale = a;
    if (b > scale) scale = b;
    return d <= kTieTolerance * scale;
}

/// Ranking permutation and tie sets of a vector's magnitudes.
/// sigma[i] is the original index holding the i-th largest |eta| (ties broken
/// by smallest original index). Tie blocks are maximal runs of tied
/// magnitudes in rank order; tie_set(j) is the block containing index j.
struct TieStructure {
    std::vector<std::size_t> sigma;                 // rank -> index
    std::vector<std::size_t> rank_of;               // index -> rank (sigma^-1)
    std::vector<std::size_t> block_of;              // index -> block id
    std::vector<std::vector<std::size_t>> blocks;   // block id -> indices, ascending
    double tolerance = kTieTolerance;

    const std::vector<std::size_t>& tie_set(std::size_t j) const { return blocks[block_of[j]]; }
};

double sorted_l1_norm(std::span<const double> b, const PenaltySequence& theta);

/// argmin_b 1/2 ||y - b||^2 + J_theta(b). Sorts |y| descending, subtracts
/// theta, restores monotonicity with pool-adjacent-violators, clamps at zero
/// and scatters back with the original signs and positions.
std::vector<double> prox_sorted_l1(std::span<const double> y, const PenaltySequence& theta);

/// Mechanical variant accepting an arbitrary theta vector; identical to the
/// prox when theta is a valid penalty sequence. Gradient-descent iterates in
/// the alpha regime can leave S before projection, and still have to pass
/// through the calibration map, which is built on this operator.
std::vector<double> prox_sorted_l1_any(std::span<const double> y, std::span<const double> theta);

/// Count of distinct nonzero magnitudes (distinct up to the tie tolerance).
/// Equals the divergence of prox_sorted_l1 when applied to its output.
int modified_l0(std::span<const double> v);

TieStructure tie_structure(std::span<const double> eta);

/// In-place non-increasing isotonic regression (adjacent averaging).
void pava_nonincreasing(std::span<double> v);

}  // namespace slope
