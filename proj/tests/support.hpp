#pragma once

// Small oracles shared by the unit tests. Nothing here calls into the
// library's differentiation or quadrature code.

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace testing_support {

inline std::vector<std::vector<double>> random_points(std::size_t count, std::size_t dim, std::uint64_t seed,
                                                      double lo = -2.0, double hi = 2.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<std::vector<double>> out(count, std::vector<double>(dim));
    for (auto& p : out)
        for (auto& v : p) v = u(rng);
    return out;
}

// Central difference of fn along axis i.
template <class Fn>
auto central_difference(Fn&& fn, std::vector<double> x, std::size_t i, double h = 1e-5) {
    const double xi = x[i];
    x[i] = xi + h;
    auto fp = fn(x);
    x[i] = xi - h;
    auto fm = fn(x);
    return (fp - fm) / (2.0 * h);
}

// Gauss-Legendre 5-point rule on [a, b], composed over `panels`.
inline double gauss_legendre(const std::function<double(double)>& f, double a, double b, int panels = 64) {
    static const double x[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640, 0.9061798459386640};
    static const double w[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
                                0.2369268850561891};
    double total = 0.0;
    const double h = (b - a) / panels;
    for (int k = 0; k < panels; ++k) {
        const double m = a + (k + 0.5) * h;
        for (int i = 0; i < 5; ++i) total += w[i] * f(m + 0.5 * h * x[i]) * 0.5 * h;
    }
    return total;
}

} // namespace testing_support
