#include "slope/types.hpp"

#include <algorithm>
#include <cmath>

namespace slope {

PenaltySequence PenaltySequence::validated(std::vector<double> v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) throw std::invalid_argument("penalty sequence: non-finite entry");
    }
    if (!v.empty() && v.back() < 0.0) {
        if (v.back() < -1e-12) throw std::invalid_argument("penalty sequence: negative entry");
        v.back() = 0.0;
    }
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        if (v[i + 1] > v[i]) {
            const double slack = 1e-12 * std::max({1.0, std::fabs(v[i]), std::fabs(v[i + 1])});
            if (v[i + 1] - v[i] > slack)
                throw std::invalid_argument("penalty sequence: not non-increasing");
            v[i + 1] = v[i];
        }
    }
    if (!v.empty() && v.back() < 0.0) v.back() = 0.0;
    for (std::size_t i = v.size(); i-- > 0;) {
        if (v[i] < 0.0) v[i] = 0.0;  // only sub-1e-12 noise survives to here
    }
    return PenaltySequence(std::move(v));
}

PenaltySequence PenaltySequence::constant(std::size_t p, double c) {
    if (c < 0.0) throw std::invalid_argument("penalty sequence: negative constant");
    return PenaltySequence(std::vector<double>(p, c));
}

PenaltySequence PenaltySequence::scaled(double s) const {
    if (s < 0.0) throw std::invalid_argument("penalty sequence: negative scale");
    std::vector<double> v(values_);
    for (double& x : v) x *= s;
    return PenaltySequence(std::move(v));
}

bool PenaltySequence::is_zero() const {
    return std::all_of(values_.begin(), values_.end(), [](double x) { return x == 0.0; });
}

}  // namespace slope
