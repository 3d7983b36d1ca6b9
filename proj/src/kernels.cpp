#include "prequant/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "prequant/errors.hpp"

namespace pq {

void PointCloud::push_back(std::span<const double> p) {
    if (p.size() != dim_) throw ValidationError("point dimension mismatch");
    coords_.insert(coords_.end(), p.begin(), p.end());
}

bool Box::contains(std::span<const double> x) const {
    if (x.size() != dim()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
}

bool Box::contains(const Box& inner) const {
    if (inner.dim() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i)
        if (inner.lo[i] < lo[i] || inner.hi[i] > hi[i]) return false;
    return true;
}

QuadratureGrid::QuadratureGrid(Box b, std::vector<std::size_t> n) : box(std::move(b)), nodes(std::move(n)) {
    if (box.lo.size() != box.hi.size() || nodes.size() != box.dim())
        throw ValidationError("quadrature grid: box and node counts disagree in dimension");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i] < 3 || nodes[i] % 2 == 0)
            throw ValidationError("quadrature grid: node counts must be odd and >= 3");
        if (!(box.hi[i] > box.lo[i])) throw ValidationError("quadrature grid: empty box");
    }
}

std::size_t QuadratureGrid::total_nodes() const {
    std::size_t t = 1;
    for (auto n : nodes) t *= n;
    return t;
}

QuadratureGrid QuadratureGrid::refined() const {
    std::vector<std::size_t> n(nodes);
    for (auto& k : n) k = 2 * k - 1;
    return QuadratureGrid(box, n);
}

namespace kernels {

namespace {

// Collects the first exception thrown inside a parallel region.
class ExceptionSlot {
public:
    template <class F>
    void run(F&& f) noexcept {
        try {
            f();
        } catch (...) {
            std::lock_guard<std::mutex> lock(mutex_);
            if (!error_) error_ = std::current_exception();
        }
    }
    void rethrow() const {
        if (error_) std::rethrow_exception(error_);
    }

private:
    std::mutex mutex_;
    std::exception_ptr error_;
};

} // namespace

int thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

double max_abs(const PointCloud& points, const RealKernel& fn, Exec exec) {
    const auto n = static_cast<std::ptrdiff_t>(points.size());
    if (exec == Exec::serial) {
        double m = 0.0;
        for (std::ptrdiff_t i = 0; i < n; ++i) m = std::max(m, std::abs(fn(points[static_cast<std::size_t>(i)])));
        return m;
    }
    std::vector<double> local(static_cast<std::size_t>(n), 0.0);
    ExceptionSlot slot;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        slot.run([&] { local[static_cast<std::size_t>(i)] = std::abs(fn(points[static_cast<std::size_t>(i)])); });
    slot.rethrow();
    double m = 0.0;
    for (double v : local) m = std::max(m, v);
    return m;
}

std::vector<double> simpson_weights(double lo, double hi, std::size_t nodes) {
    if (nodes < 3 || nodes % 2 == 0) throw ValidationError("Simpson rule needs an odd node count >= 3");
    const double h = (hi - lo) / static_cast<double>(nodes - 1);
    std::vector<double> w(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
        double c = (i == 0 || i + 1 == nodes) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        w[i] = c * h / 3.0;
    }
    return w;
}

std::complex<double> pairwise_sum(std::span<const std::complex<double>> values) {
    if (values.empty()) return {0.0, 0.0};
    if (values.size() <= 8) {
        std::complex<double> s{0.0, 0.0};
        for (const auto& v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

namespace {

struct GridTables {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> abscissae;
};

GridTables tables(const QuadratureGrid& grid) {
    GridTables t;
    for (std::size_t a = 0; a < grid.nodes.size(); ++a) {
        t.weights.push_back(simpson_weights(grid.box.lo[a], grid.box.hi[a], grid.nodes[a]));
        std::vector<double> x(grid.nodes[a]);
        const double h = (grid.box.hi[a] - grid.box.lo[a]) / static_cast<double>(grid.nodes[a] - 1);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = grid.box.lo[a] + h * static_cast<double>(i);
        x.back() = grid.box.hi[a];
        t.abscissae.push_back(std::move(x));
    }
    return t;
}

// Sum over all nodes whose first-axis index is `i0`, in lexicographic order
// of the remaining axes.
std::complex<double> slice_sum(const GridTables& t, const QuadratureGrid& grid, std::size_t i0,
                               const ComplexKernel& fn) {
    const std::size_t dim = grid.nodes.size();
    std::vector<std::size_t> idx(dim, 0);
    idx[0] = i0;
    std::vector<double> x(dim);
    std::vector<std::complex<double>> row;
    const std::size_t inner = dim > 1 ? grid.nodes[dim - 1] : 1;
    row.reserve(inner);
    std::vector<std::complex<double>> rows;
    for (;;) {
        // innermost axis as one row, summed pairwise
        row.clear();
        double wouter = t.weights[0][i0];
        for (std::size_t a = 1; a + 1 < dim; ++a) wouter *= t.weights[a][idx[a]];
        for (std::size_t a = 0; a + 1 < dim; ++a) x[a] = t.abscissae[a][idx[a]];
        if (dim == 1) {
            x[0] = t.abscissae[0][i0];
            row.push_back(wouter * fn(x));
        } else {
            for (std::size_t j = 0; j < inner; ++j) {
                x[dim - 1] = t.abscissae[dim - 1][j];
                row.push_back(wouter * t.weights[dim - 1][j] * fn(x));
            }
        }
        rows.push_back(pairwise_sum(row));
        // advance axes 1 .. dim-2
        std::size_t a = dim >= 2 ? dim - 2 : 0;
        while (a >= 1) {
            if (++idx[a] < grid.nodes[a]) break;
            idx[a] = 0;
            --a;
        }
        if (a == 0) break;
    }
    return pairwise_sum(rows);
}

} // namespace

std::complex<double> simpson(const QuadratureGrid& grid, const ComplexKernel& fn, Exec exec) {
    const GridTables t = tables(grid);
    const std::size_t dim = grid.nodes.size();
    if (exec == Exec::serial) {
        // Reference path: one running sum in lexicographic node order.
        std::vector<std::size_t> idx(dim, 0);
        std::vector<double> x(dim);
        std::complex<double> sum{0.0, 0.0};
        for (;;) {
            double w = 1.0;
            for (std::size_t a = 0; a < dim; ++a) {
                w *= t.weights[a][idx[a]];
                x[a] = t.abscissae[a][idx[a]];
            }
            sum += w * fn(x);
            std::size_t a = dim;
            while (a > 0) {
                --a;
                if (++idx[a] < grid.nodes[a]) break;
                idx[a] = 0;
                if (a == 0) return sum;
            }
        }
    }
    const auto n0 = static_cast<std::ptrdiff_t>(grid.nodes[0]);
    std::vector<std::complex<double>> slices(grid.nodes[0]);
    ExceptionSlot slot;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n0; ++i)
        slot.run([&] { slices[static_cast<std::size_t>(i)] = slice_sum(t, grid, static_cast<std::size_t>(i), fn); });
    slot.rethrow();
    return pairwise_sum(slices);
}

} // namespace kernels

PointCloud sample_box(const Box& box, std::size_t count, std::uint64_t seed,
                      const std::function<bool(std::span<const double>)>& accept) {
    PointCloud out(box.dim());
    std::mt19937_64 rng(seed);
    std::vector<std::uniform_real_distribution<double>> dists;
    for (std::size_t a = 0; a < box.dim(); ++a) dists.emplace_back(box.lo[a], box.hi[a]);
    std::vector<double> x(box.dim());
    std::size_t attempts = 0;
    while (out.size() < count) {
        if (++attempts > 1000 * (count + 1)) throw ValidationError("sampling: acceptance region too small");
        for (std::size_t a = 0; a < box.dim(); ++a) x[a] = dists[a](rng);
        if (!accept || accept(x)) out.push_back(x);
    }
    return out;
}

} // namespace pq
