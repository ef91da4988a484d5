#pragma once

// Brute-force reference computations. Written from the defining formulas and
// kept free of any dependency on the library so the tests compare two
// independent derivations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

struct Counts {
    int q = 0, r = 0, s = 0, t = 0;
};

inline Counts count_bits(unsigned x, unsigned y, int bits) {
    Counts c;
    for (int b = 0; b < bits; ++b) {
        const bool xi = (x >> b) & 1u, yi = (y >> b) & 1u;
        if (xi && yi) ++c.q;
        else if (xi && !yi) ++c.r;
        else if (!xi && yi) ++c.s;
        else ++c.t;
    }
    return c;
}

// Written in terms of the bit strings: mismatches, positions where both are 1, etc.
inline double simple_matching(unsigned x, unsigned y, int bits) {
    int mismatch = 0;
    for (int b = 0; b < bits; ++b) mismatch += ((x >> b) & 1u) != ((y >> b) & 1u);
    return static_cast<double>(mismatch) / bits;
}

inline double hamming(unsigned x, unsigned y, int bits) {
    // p - q - t is the number of disagreeing positions.
    int mismatch = 0;
    for (int b = 0; b < bits; ++b) mismatch += ((x >> b) & 1u) != ((y >> b) & 1u);
    return mismatch;
}

/// Disagreements over positions where at least one vector has a 1; undefined when there are none.
inline std::optional<double> jaccard(unsigned x, unsigned y, int bits) {
    int any = 0, mismatch = 0;
    for (int b = 0; b < bits; ++b) {
        const bool xi = (x >> b) & 1u, yi = (y >> b) & 1u;
        if (xi || yi) ++any;
        if (xi != yi) ++mismatch;
    }
    if (any == 0) return std::nullopt;
    return static_cast<double>(mismatch) / any;
}

/// p minus the dot product of the two bit vectors.
inline double scalar_product(unsigned x, unsigned y, int bits) {
    int dot = 0;
    for (int b = 0; b < bits; ++b) dot += static_cast<int>((x >> b) & (y >> b) & 1u);
    return bits - dot;
}

inline double minkowski(const std::vector<double>& x, const std::vector<double>& y, double order) {
    long double sum = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sum += std::pow(std::fabs(static_cast<long double>(x[i]) - y[i]), order);
    return static_cast<double>(std::pow(sum, 1.0L / order));
}

inline double euclid(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
    return std::sqrt(s);
}

/// RMS over every ordered pair (j, k) with j != k.
template <class Dist>
double diameter(std::size_t n, const Dist& d) {
    if (n < 2) return 0.0;
    double s = 0;
    std::size_t pairs = 0;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
            if (j == k) continue;
            s += d(j, k) * d(j, k);
            ++pairs;
        }
    return std::sqrt(s / static_cast<double>(pairs));
}

inline double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double population_sd(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

/// Smallest j >= 0 with max |v| / 10^j < 1, found by counting up.
inline int decimal_exponent(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::fabs(x));
    int j = 0;
    while (m / std::pow(10.0, j) >= 1.0) ++j;
    return j;
}

/// Axis-aligned half-open rectangle membership [x0, x1) x [y0, y1).
inline bool in_rect(double x, double y, double x0, double y0, double x1, double y1) {
    return x >= x0 && x < x1 && y >= y0 && y < y1;
}

inline std::vector<std::vector<double>> random_points(std::mt19937_64& rng, std::size_t n, std::size_t dim,
                                                      double lo = -100, double hi = 100) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<std::vector<double>> out(n, std::vector<double>(dim));
    for (auto& p : out)
        for (auto& c : p) c = u(rng);
    return out;
}

}  // namespace oracle
