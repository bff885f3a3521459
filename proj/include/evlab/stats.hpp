#pragma once

#include <cmath>
#include <span>

namespace evlab::stats {

/// Compensated (Kahan) sum; keeps aggregation order-insensitive to ~1e-16.
inline double kahan_sum(std::span<const double> xs) {
    double sum = 0.0, c = 0.0;
    for (double x : xs) {
        double y = x - c;
        double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    return sum;
}

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};

inline MeanSd mean_sd(std::span<const double> xs) {
    MeanSd r;
    if (xs.empty()) return r;
    r.mean = kahan_sum(xs) / static_cast<double>(xs.size());
    if (xs.size() < 2) return r;
    double ss = 0.0, c = 0.0;
    for (double x : xs) {
        double d = (x - r.mean) * (x - r.mean) - c;
        double t = ss + d;
        c = (t - ss) - d;
        ss = t;
    }
    r.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return r;
}

}  // namespace evlab::stats
