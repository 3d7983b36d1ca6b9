#pragma once

// α-densities on vectors spaces and 1-density integration on manifolds
// described by a finite atlas with a partition of unity.

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "prequant/complex_field.hpp"
#include "prequant/kernels.hpp"

namespace pq {

// τ on frames of an n-dimensional space, stored by its value on the
// reference frame: τ(F) = τ(reference)·|det F|^α, where the columns of F
// are the frame vectors in reference coordinates.
class VectorDensity {
public:
    VectorDensity(std::size_t dimension, cplx order, cplx reference_value);

    std::size_t dimension() const noexcept { return n_; }
    cplx order() const noexcept { return order_; }
    cplx reference_value() const noexcept { return value_; }

    // Throws SingularFormError when |det frame| <= 1e-12.
    cplx evaluate(const Eigen::MatrixXd& frame) const;

private:
    std::size_t n_;
    cplx order_;
    cplx value_;
};

// |d|^α for d ≠ 0 and complex α.
cplx abs_det_power(double det, cplx order);

VectorDensity density_product(const VectorDensity& a, const VectorDensity& b);
VectorDensity conjugate_density(const VectorDensity& a);
// (T*τ)(w) = τ(T w).
VectorDensity pullback_density(const Eigen::MatrixXd& T, const VectorDensity& tau);

// A function given by expressions on boxes (first match wins) and a constant
// elsewhere.
class Piecewise {
public:
    struct Piece {
        Box domain;
        Expression value;
    };

    Piecewise(VariableList variables, std::vector<Piece> pieces, double otherwise = 0.0);
    static Piecewise constant(VariableList variables, double value);

    const VariableList& variables() const noexcept { return variables_; }
    const std::vector<Piece>& pieces() const noexcept { return pieces_; }
    double otherwise() const noexcept { return otherwise_; }

    double evaluate(std::span<const double> x) const;
    double operator()(std::span<const double> x) const { return evaluate(x); }

    // Piece edges along axis i.
    std::vector<double> breakpoints(std::size_t axis) const;

private:
    VariableList variables_;
    std::vector<Piece> pieces_;
    double otherwise_;
};

// Quintic smootherstep 6t⁵ - 15t⁴ + 10t³. Unclamped: callers place it on
// Piecewise pieces where 0 <= t <= 1, and it joins 0 and 1 there to C².
Expression smootherstep(const Expression& t);

struct AtlasChart {
    std::string name;
    VariableList coordinates;
    Box domain;                     // closure of the chart domain
    std::vector<bool> open_lo, open_hi; // which domain edges are excluded
};

// Change of coordinates from one chart to another, piecewise on boxes of
// the source chart. Points outside every piece are outside the overlap.
struct Transition {
    std::size_t from = 0;
    std::size_t to = 0;
    struct Piece {
        Box domain;
        std::vector<Expression> map;
        std::vector<std::vector<Expression>> jacobian; // ∂map_i/∂x_j
    };
    std::vector<Piece> pieces;

    Transition(std::size_t from, std::size_t to, std::vector<std::pair<Box, std::vector<Expression>>> maps);
};

class Atlas {
public:
    // Validates the partition of unity: every function is nonnegative, has
    // its support box inside the chart domain, and the functions sum to 1
    // within 1e-10 at `samples` points drawn from each support box.
    Atlas(std::string name, std::vector<AtlasChart> charts, std::vector<Transition> transitions,
          std::vector<Piecewise> partition, std::vector<Box> partition_support, std::size_t samples = 200,
          std::uint64_t seed = 0xa71a5);

    const std::string& name() const noexcept { return name_; }
    std::size_t size() const noexcept { return charts_.size(); }
    std::size_t dimension() const noexcept { return charts_.front().coordinates->size(); }
    const AtlasChart& chart(std::size_t i) const { return charts_.at(i); }
    const Piecewise& partition(std::size_t i) const { return partition_.at(i); }
    const Box& partition_support(std::size_t i) const { return support_.at(i); }
    double partition_residual() const noexcept { return partition_residual_; }

    bool in_domain(std::size_t chart, std::span<const double> x) const;

    // Coordinates of x (chart `from`) in chart `to`, if x lies in the overlap.
    std::optional<std::vector<double>> map(std::size_t from, std::size_t to, std::span<const double> x) const;
    std::optional<Eigen::MatrixXd> jacobian(std::size_t from, std::size_t to, std::span<const double> x) const;

private:
    const Transition::Piece* find(std::size_t from, std::size_t to, std::span<const double> x) const;

    std::string name_;
    std::vector<AtlasChart> charts_;
    std::vector<Transition> transitions_;
    std::vector<Piecewise> partition_;
    std::vector<Box> support_;
    double partition_residual_ = 0.0;
};

// Circle charts θ_A ∈ (0, 2π) and θ_B ∈ (-π, π). The chart-A partition
// function rises from 0 to 1 across [a, b] and falls back across
// [2π - b, 2π - a]; 0 < a < b < π.
std::shared_ptr<const Atlas> circle_angle_atlas(double a = 0.5, double b = 2.5);
// Half-angle charts x = tan(φ/2) on the circle minus φ = π and y = -1/x on
// the circle minus φ = 0. The x-chart function is 1 for |x| <= inner and 0
// for |x| >= outer.
std::shared_ptr<const Atlas> circle_tangent_atlas(double inner = 0.5, double outer = 2.0);
// Annulus r0 < r < r1 covered by the polar charts (r, θ_A) and (r, θ_B)
// with the angular partition of circle_angle_atlas.
std::shared_ptr<const Atlas> annulus_atlas(double r0, double r1, double a = 0.5, double b = 2.5);
// A single closed box; partition function 1.
std::shared_ptr<const Atlas> box_atlas(std::vector<std::string> coordinates, Box box);

// c_i(x)|dx|^α on each chart i.
class ManifoldDensity {
public:
    ManifoldDensity(std::shared_ptr<const Atlas> atlas, cplx order, std::vector<ComplexField> coefficients);
    // One (re, im) expression pair per chart.
    static ManifoldDensity parse(std::shared_ptr<const Atlas> atlas, cplx order,
                                 const std::vector<std::pair<std::string, std::string>>& coefficients);

    const std::shared_ptr<const Atlas>& atlas() const noexcept { return atlas_; }
    cplx order() const noexcept { return order_; }
    const ComplexField& coefficient(std::size_t chart) const { return coefficients_.at(chart); }

    // max over sampled overlap points of |c_i(x) - c_j(F(x))·|det dF_x|^α|.
    double overlap_residual(std::size_t samples = 200, std::uint64_t seed = 0xb1) const;

private:
    std::shared_ptr<const Atlas> atlas_;
    cplx order_;
    std::vector<ComplexField> coefficients_;
};

ManifoldDensity density_product(const ManifoldDensity& a, const ManifoldDensity& b);
ManifoldDensity conjugate_density(const ManifoldDensity& a);

struct IntegrationReport {
    std::vector<cplx> per_chart;
    cplx total{0.0, 0.0};
    std::size_t max_nodes = 0; // per axis, finest grid used
    bool converged = true;
    std::vector<std::string> warnings;
};

// Σ_i ∫ ρ_i c_i over each support box, by tensor Simpson on the cells cut
// out by the partition breakpoints, doubling nodes until two successive
// results agree to `tolerance` (cap 2^14 + 1 nodes per axis).
IntegrationReport integrate_one_density(const ManifoldDensity& tau, double tolerance = 1e-8,
                                        Exec exec = Exec::parallel);

// τ = τ₊ - τ₋ with τ± = max(±c, 0) chart by chart. Requires real
// coefficients (|Im c| <= 1e-12 at sampled points).
std::pair<ManifoldDensity, ManifoldDensity> split_signed_density(const ManifoldDensity& tau);

} // namespace pq
