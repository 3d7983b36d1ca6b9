#pragma once

// Data-parallel kernels shared by the residual checks and the quadratures.
// Every kernel has a serial reference path and an OpenMP path; the parallel
// path is deterministic (fixed slice decomposition, pairwise reduction in a
// fixed order) so results do not depend on the thread count.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace pq {

enum class Exec { serial, parallel };

// A flat list of points of a fixed dimension.
class PointCloud {
public:
    PointCloud() = default;
    explicit PointCloud(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
    bool empty() const noexcept { return size() == 0; }

    std::span<const double> operator[](std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
    void push_back(std::span<const double> p);
    const std::vector<double>& coordinates() const noexcept { return coords_; }

private:
    std::size_t dim_ = 0;
    std::vector<double> coords_;
};

// Axis-aligned box [lo, hi].
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    std::size_t dim() const noexcept { return lo.size(); }
    bool contains(std::span<const double> x) const;
    bool contains(const Box& inner) const;
};

// Tensor-product composite Simpson grid. Node counts are odd and >= 3.
struct QuadratureGrid {
    Box box;
    std::vector<std::size_t> nodes;

    QuadratureGrid() = default;
    QuadratureGrid(Box b, std::vector<std::size_t> n);
    std::size_t total_nodes() const;
    QuadratureGrid refined() const; // halves the spacing on every axis
};

using RealKernel = std::function<double(std::span<const double>)>;
using ComplexKernel = std::function<std::complex<double>(std::span<const double>)>;

namespace kernels {

// max_i |fn(points[i])|.
double max_abs(const PointCloud& points, const RealKernel& fn, Exec exec = Exec::parallel);

// Composite Simpson weights for `nodes` equally spaced nodes on [lo, hi].
std::vector<double> simpson_weights(double lo, double hi, std::size_t nodes);

std::complex<double> simpson(const QuadratureGrid& grid, const ComplexKernel& fn, Exec exec = Exec::parallel);

// Pairwise (tree) summation in index order.
std::complex<double> pairwise_sum(std::span<const std::complex<double>> values);

int thread_count();

} // namespace kernels

// Deterministic uniform samples from `box`, rejecting points for which
// `accept` is false. Seeds are recorded by the callers.
PointCloud sample_box(const Box& box, std::size_t count, std::uint64_t seed,
                      const std::function<bool(std::span<const double>)>& accept = {});

} // namespace pq
