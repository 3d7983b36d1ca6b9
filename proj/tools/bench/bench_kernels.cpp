// Serial reference vs OpenMP kernels: tensor Simpson and residual sweeps.
//   bench_kernels [nodes-per-axis] [points] [repeats]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "prequant/kernels.hpp"

using namespace pq;

namespace {

template <class Fn>
double best_of(int repeats, Fn&& fn) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

void report(const char* name, double serial, double parallel, double diff) {
    std::printf("%-24s serial %9.4f s  parallel %9.4f s  speedup %5.2fx  |diff| %.2e\n", name, serial, parallel,
                serial / parallel, diff);
}

} // namespace

int main(int argc, char** argv) {
    const std::size_t nodes = argc > 1 ? std::stoul(argv[1]) | 1u : 801;
    const std::size_t points = argc > 2 ? std::stoul(argv[2]) : 200000;
    const int repeats = argc > 3 ? std::stoi(argv[3]) : 3;
    std::printf("threads %d, grid %zu^2, %zu points, best of %d\n", kernels::thread_count(), nodes, points, repeats);

    const QuadratureGrid grid(Box{{-2, -2}, {2, 2}}, {nodes, nodes});
    auto integrand = [](std::span<const double> x) {
        return std::complex<double>(std::exp(-x[0] * x[0] - x[1] * x[1]) * std::cos(3 * x[0] * x[1]), std::sin(x[0] + x[1]));
    };
    std::complex<double> s, p;
    const double ts = best_of(repeats, [&] { s = kernels::simpson(grid, integrand, Exec::serial); });
    const double tp = best_of(repeats, [&] { p = kernels::simpson(grid, integrand, Exec::parallel); });
    report("simpson", ts, tp, std::abs(s - p));

    const PointCloud cloud = sample_box(Box{{-2, -2, -2, -2}, {2, 2, 2, 2}}, points, 1);
    auto residual = [](std::span<const double> x) { return std::sin(x[0] * x[1]) - std::cos(x[2]) * x[3]; };
    double ms = 0, mp = 0;
    const double rs = best_of(repeats, [&] { ms = kernels::max_abs(cloud, residual, Exec::serial); });
    const double rp = best_of(repeats, [&] { mp = kernels::max_abs(cloud, residual, Exec::parallel); });
    report("max_abs", rs, rp, std::abs(ms - mp));
    return 0;
}
