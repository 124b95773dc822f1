#include "slope/sorted_l1.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "slope/kernels.hpp"

namespace slope {
namespace {

// Stable argsort of |v| in descending order, ties by original index. Packing
// (magnitude, index) pairs and value-sorting beats an indirect stable_sort on
// the hot Monte Carlo paths.
std::vector<std::size_t> magnitude_order(std::span<const double> v) {
    struct Entry {
        double mag;
        std::uint32_t idx;
    };
    std::vector<Entry> entries(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        entries[i] = {std::fabs(v[i]), static_cast<std::uint32_t>(i)};
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return a.mag > b.mag || (a.mag == b.mag && a.idx < b.idx);
    });
    std::vector<std::size_t> order(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) order[i] = entries[i].idx;
    return order;
}

}  // namespace

double sorted_l1_norm(std::span<const double> b, const PenaltySequence& theta) {
    if (b.size() != theta.size()) throw std::invalid_argument("sorted_l1_norm: length mismatch");
    std::vector<double> mags(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) mags[i] = std::fabs(b[i]);
    std::sort(mags.begin(), mags.end(), std::greater<double>());
    return kernels::dot(mags.data(), theta.values().data(), mags.size());
}

void pava_nonincreasing(std::span<double> v) {
    const std::size_t n = v.size();
    if (n == 0) return;
    // Blocks kept on a stack as (start index, sum, count); merge while the
    // running mean rises above its left neighbor.
    std::vector<std::size_t> start(n);
    std::vector<double> sum(n);
    std::vector<std::size_t> count(n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        start[k] = i;
        sum[k] = v[i];
        count[k] = 1;
        while (k > 0 && sum[k - 1] * static_cast<double>(count[k]) <=
                            sum[k] * static_cast<double>(count[k - 1])) {
            sum[k - 1] += sum[k];
            count[k - 1] += count[k];
            --k;
        }
        ++k;
    }
    for (std::size_t b = 0; b < k; ++b) {
        const double mean = sum[b] / static_cast<double>(count[b]);
        for (std::size_t i = start[b]; i < start[b] + count[b]; ++i) v[i] = mean;
    }
}

std::vector<double> prox_sorted_l1_any(std::span<const double> y, std::span<const double> theta) {
    if (y.size() != theta.size()) throw std::invalid_argument("prox_sorted_l1: length mismatch");
    const std::size_t p = y.size();
    const auto order = magnitude_order(y);
    std::vector<double> d(p);
    for (std::size_t i = 0; i < p; ++i) d[i] = std::fabs(y[order[i]]) - theta[i];
    pava_nonincreasing(d);
    std::vector<double> out(p);
    for (std::size_t i = 0; i < p; ++i) {
        const double m = d[i] > 0.0 ? d[i] : 0.0;
        out[order[i]] = std::copysign(m, y[order[i]]);
    }
    return out;
}

std::vector<double> prox_sorted_l1(std::span<const double> y, const PenaltySequence& theta) {
    return prox_sorted_l1_any(y, theta.values());
}

int modified_l0(std::span<const double> v) {
    std::vector<double> mags(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) mags[i] = std::fabs(v[i]);
    std::sort(mags.begin(), mags.end(), std::greater<double>());
    int count = 0;
    for (std::size_t i = 0; i < mags.size(); ++i) {
        if (magnitudes_tie(mags[i], 0.0)) break;               // sorted: the rest are zeros
        if (i == 0 || !magnitudes_tie(mags[i], mags[i - 1])) ++count;
    }
    return count;
}

TieStructure tie_structure(std::span<const double> eta) {
    const std::size_t p = eta.size();
    TieStructure ts;
    ts.sigma = magnitude_order(eta);
    ts.rank_of.assign(p, 0);
    ts.block_of.assign(p, 0);
    for (std::size_t r = 0; r < p; ++r) ts.rank_of[ts.sigma[r]] = r;
    std::size_t block = 0;
    for (std::size_t r = 0; r < p; ++r) {
        const double mag = std::fabs(eta[ts.sigma[r]]);
        if (r > 0 && !magnitudes_tie(mag, std::fabs(eta[ts.sigma[r - 1]]))) ++block;
        if (ts.blocks.size() <= block) ts.blocks.emplace_back();
        ts.blocks[block].push_back(ts.sigma[r]);
        ts.block_of[ts.sigma[r]] = block;
    }
    for (auto& b : ts.blocks) std::sort(b.begin(), b.end());
    return ts;
}

}  // namespace slope
