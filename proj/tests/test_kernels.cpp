#include <doctest.h>

#include <cmath>

#include <omp.h>

#include "prequant/errors.hpp"
#include "prequant/kernels.hpp"

using namespace pq;

TEST_CASE("Simpson weights integrate cubics exactly") {
    const auto w = kernels::simpson_weights(-1.0, 2.0, 7);
    double sum = 0, cubic = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double x = -1.0 + 3.0 * static_cast<double>(i) / 6.0;
        sum += w[i];
        cubic += w[i] * (x * x * x - 2 * x + 1);
    }
    CHECK(sum == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(cubic == doctest::Approx((16.0 - 1.0) / 4.0 - (4.0 - 1.0) + 3.0).epsilon(1e-14));
}

TEST_CASE("tensor Simpson converges at fourth order") {
    const Box box{{0, 0}, {1, 2}};
    auto fn = [](std::span<const double> x) { return std::complex<double>(std::exp(x[0] + x[1]), std::sin(x[0] * x[1])); };
    const double exact = (std::exp(1.0) - 1.0) * (std::exp(2.0) - 1.0);
    const double e1 = std::abs(kernels::simpson(QuadratureGrid(box, {11, 11}), fn).real() - exact);
    const double e2 = std::abs(kernels::simpson(QuadratureGrid(box, {21, 21}), fn).real() - exact);
    CHECK(e2 < 1e-5);
    CHECK(e1 / e2 > 12.0);
}

TEST_CASE("parallel kernels match the serial reference and ignore the thread count") {
    const QuadratureGrid grid(Box{{-1, -1}, {1, 1}}, {101, 101});
    auto fn = [](std::span<const double> x) { return std::complex<double>(std::cos(3 * x[0]) * x[1], x[0] * x[0]); };
    const auto s = kernels::simpson(grid, fn, Exec::serial);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const auto p1 = kernels::simpson(grid, fn, Exec::parallel);
    omp_set_num_threads(4);
    const auto p4 = kernels::simpson(grid, fn, Exec::parallel);
    omp_set_num_threads(saved);
    // Different summation orders: agreement to rounding only.
    CHECK(std::abs(s - p1) < 1e-13);
    CHECK(p1.real() == p4.real());
    CHECK(p1.imag() == p4.imag());

    const PointCloud pts = sample_box(Box{{-2, -2, -2}, {2, 2, 2}}, 1000, 42);
    auto g = [](std::span<const double> x) { return std::sin(x[0]) * x[1] - x[2]; };
    CHECK(kernels::max_abs(pts, g, Exec::serial) == kernels::max_abs(pts, g, Exec::parallel));
}

TEST_CASE("pairwise summation") {
    std::vector<std::complex<double>> v;
    for (int i = 1; i <= 1000; ++i) v.emplace_back(1.0 / i, -i);
    const auto s = kernels::pairwise_sum(v);
    double h = 0;
    for (int i = 1; i <= 1000; ++i) h += 1.0 / i;
    CHECK(s.real() == doctest::Approx(h).epsilon(1e-15));
    CHECK(s.imag() == -500500.0);
}

TEST_CASE("sampling is deterministic and stays in the box") {
    const Box box{{0, -1}, {1, 1}};
    const auto a = sample_box(box, 200, 9);
    const auto b = sample_box(box, 200, 9);
    const auto c = sample_box(box, 200, 10);
    CHECK(a.coordinates() == b.coordinates());
    CHECK(a.coordinates() != c.coordinates());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(box.contains(a[i]));
    const auto half = sample_box(box, 50, 9, [](std::span<const double> x) { return x[1] > 0; });
    CHECK(half.size() == 50);
    for (std::size_t i = 0; i < half.size(); ++i) CHECK(half[i][1] > 0);
}

TEST_CASE("quadrature grids") {
    const QuadratureGrid g(Box{{0}, {1}}, {5});
    CHECK(g.refined().nodes[0] == 9);
    CHECK(g.total_nodes() == 5);
    CHECK_THROWS_AS(QuadratureGrid(Box{{0}, {1}}, {4}), ValidationError);
}
