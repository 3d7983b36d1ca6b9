#pragma once

// Coordinate charts, vector fields, 1- and 2-forms and certified symplectic
// structures.
//
// Conventions, used everywhere in the library:
//   * a 2-form is stored as its coefficient matrix Ω with Ω_ij = ω(∂_i, ∂_j),
//     so ω(X, Y) = Xᵀ Ω Y and ω = Σ_{i<j} Ω_ij dx_i ∧ dx_j;
//   * cotangent charts order coordinates (q_1..q_n, p_1..p_n), and the
//     canonical form Σ dp_i ∧ dq_i has ω(∂q_i, ∂p_j) = -δ_ij.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "prequant/expr.hpp"
#include "prequant/kernels.hpp"

namespace pq {

struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool lo_open = false;
    bool hi_open = false;

    bool contains(double x) const;
};

class Chart {
public:
    Chart(std::string name, std::vector<std::string> coordinates, std::vector<Interval> bounds = {},
          std::vector<std::vector<double>> punctures = {});

    const std::string& name() const noexcept { return name_; }
    std::size_t dimension() const noexcept { return variables_->size(); }
    const VariableList& variables() const noexcept { return variables_; }
    const std::vector<std::string>& coordinates() const noexcept { return *variables_; }
    const std::vector<Interval>& bounds() const noexcept { return bounds_; }
    const std::vector<std::vector<double>>& punctures() const noexcept { return punctures_; }

    bool contains(std::span<const double> x) const;

    // Region used for randomized checks: the bounds clipped to [-2, 2]^n
    // (open ends pulled in by 0.25), unless overridden.
    Box sample_box() const;
    Chart with_sample_box(Box box) const;

    // Random points of sample_box() at distance >= 1e-3 from every puncture.
    PointCloud sample(std::size_t count, std::uint64_t seed) const;

    Expression parse(std::string_view source) const { return Expression::parse(source, variables_); }
    Expression constant(double v) const { return Expression::constant(v, variables_); }
    Expression coordinate(std::size_t i) const { return Expression::variable(i, variables_); }

    bool operator==(const Chart& other) const;

private:
    std::string name_;
    VariableList variables_;
    std::vector<Interval> bounds_;
    std::vector<std::vector<double>> punctures_;
    std::optional<Box> sample_box_;
};

void require_same_chart(const Chart& a, const Chart& b, std::string_view what);

class VectorField {
public:
    VectorField(Chart chart, std::vector<Expression> components);

    const Chart& chart() const noexcept { return chart_; }
    const std::vector<Expression>& components() const noexcept { return components_; }
    const Expression& operator[](std::size_t i) const { return components_[i]; }
    std::size_t dimension() const noexcept { return components_.size(); }

    Eigen::VectorXd evaluate(std::span<const double> x) const;

    // X(f) = Σ X^i ∂_i f.
    Expression apply(const Expression& f) const;

    // Scalar multiple f·X and sums, used for the connection axioms.
    VectorField scaled(const Expression& f) const;
    VectorField operator+(const VectorField& other) const;

    static VectorField zero(const Chart& chart);
    static VectorField coordinate(const Chart& chart, std::size_t i); // ∂_i

    // Evaluation refuses points where the guard (det Ω for Hamiltonian fields
    // of nonconstant forms) is at or below 1e-12 in magnitude.
    VectorField with_singular_guard(Expression guard) const;
    const std::optional<Expression>& singular_guard() const noexcept { return guard_; }

private:
    Chart chart_;
    std::vector<Expression> components_;
    std::optional<Expression> guard_;
};

class OneForm {
public:
    OneForm(Chart chart, std::vector<Expression> coefficients);

    const Chart& chart() const noexcept { return chart_; }
    const std::vector<Expression>& coefficients() const noexcept { return coefficients_; }
    const Expression& operator[](std::size_t i) const { return coefficients_[i]; }

    Eigen::VectorXd evaluate(std::span<const double> x) const;
    double pair(std::span<const double> x, std::span<const double> v) const;
    // α(X) as a function.
    Expression pair(const VectorField& X) const;

    static OneForm differential(const Chart& chart, const Expression& f); // df

private:
    Chart chart_;
    std::vector<Expression> coefficients_;
};

class TwoForm {
public:
    // Full coefficient matrix; antisymmetry is checked at sampled points to
    // 1e-12.
    TwoForm(Chart chart, std::vector<std::vector<Expression>> matrix, std::uint64_t seed = 0x2f0f);

    // Builds the antisymmetric matrix from the entries above the diagonal,
    // given as (i, j, Ω_ij) with i < j; missing entries are zero.
    struct Entry {
        std::size_t i;
        std::size_t j;
        Expression value;
    };
    static TwoForm from_upper(const Chart& chart, const std::vector<Entry>& entries);
    static TwoForm zero(const Chart& chart);

    const Chart& chart() const noexcept { return chart_; }
    std::size_t dimension() const noexcept { return matrix_.size(); }
    const Expression& operator()(std::size_t i, std::size_t j) const { return matrix_[i][j]; }

    Eigen::MatrixXd evaluate(std::span<const double> x) const;
    double apply(std::span<const double> x, std::span<const double> u, std::span<const double> v) const;
    // ω(X, Y) as a function.
    Expression apply(const VectorField& X, const VectorField& Y) const;

    // ι(X)ω: the 1-form ω(X, ·).
    OneForm contract(const VectorField& X) const;

    bool is_constant() const;

    // Max over points and i<j<k of |(dω)_ijk|, (dω)_ijk = ∂_iΩ_jk + ∂_jΩ_ki + ∂_kΩ_ij.
    double closedness_residual(const PointCloud& points) const;
    // Max over points of |Ω + Ωᵀ|.
    double antisymmetry_residual(const PointCloud& points) const;

    TwoForm operator+(const TwoForm& other) const;
    TwoForm operator-(const TwoForm& other) const;

private:
    TwoForm(Chart chart, std::vector<std::vector<Expression>> matrix, bool trusted);

    Chart chart_;
    std::vector<std::vector<Expression>> matrix_;
};

struct SymplecticCertificate {
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    double closedness_residual = 0.0;
    double min_abs_determinant = 0.0;
};

class SymplecticStructure {
public:
    // Certifies closedness (residual < 1e-9), nondegeneracy (|det Ω| > 1e-12)
    // and even dimension at `samples` random points of the chart.
    static SymplecticStructure certify(TwoForm form, std::size_t samples = 200, std::uint64_t seed = 0x5eed);

    const TwoForm& form() const noexcept { return form_; }
    const Chart& chart() const noexcept { return form_.chart(); }
    std::size_t dimension() const noexcept { return form_.dimension(); }
    const SymplecticCertificate& certificate() const noexcept { return certificate_; }

    // Ω constant and equal to the canonical matrix of Σ dp_i ∧ dq_i.
    bool is_canonical() const noexcept { return canonical_; }

    // Π = Ω⁻¹ as expressions, so that Ξ_f = Π ∇f under ω(Ξ_f, ·) = -df.
    const std::vector<std::vector<Expression>>& inverse() const noexcept { return inverse_; }
    // det Ω when Ω is not constant.
    const std::optional<Expression>& determinant() const noexcept { return determinant_; }

private:
    SymplecticStructure(TwoForm form, SymplecticCertificate cert);

    TwoForm form_;
    SymplecticCertificate certificate_;
    bool canonical_ = false;
    std::vector<std::vector<Expression>> inverse_;
    std::optional<Expression> determinant_;
};

// Chart T*R^n with coordinates (q, p) for n = 1 and (q1..qn, p1..pn)
// otherwise.
Chart cotangent_chart(std::size_t n);

SymplecticStructure canonical_symplectic(std::size_t n);

// α = Σ p_i dq_i.
OneForm tautological_one_form(std::size_t n);
// The same form evaluated intrinsically: α_(q,p)(v) = p(dπ(v)).
double tautological_intrinsic(std::size_t n, std::span<const double> point, std::span<const double> v);

// (dα)_ij = ∂_i α_j - ∂_j α_i.
TwoForm exterior_derivative(const OneForm& alpha);

// ω = π*τ + Σ dp_i ∧ dq_i for a closed 2-form τ on the base chart, whose
// coordinates must be named like the q's of cotangent_chart(n).
SymplecticStructure twisted_cotangent(std::size_t n, const TwoForm& tau);

// ρ with ω^m = ρ dx_1 ∧ … ∧ dx_2m, computed as m!·Pf(Ω).
Expression wedge_top_power(const SymplecticStructure& omega);

// Symbolic Pfaffian and determinant of a square expression matrix.
Expression pfaffian(const std::vector<std::vector<Expression>>& m);
Expression determinant(const std::vector<std::vector<Expression>>& m);

// Polynomial of total degree <= `degree` in the chart coordinates with
// coefficients drawn uniformly from [-1, 1]; each monomial is kept with
// probability 0.7. Deterministic in `seed`.
Expression random_polynomial(const Chart& chart, int degree, std::uint64_t seed);

// Polar chart (r, θ) on the punctured plane, r > 0; its sample box is
// r ∈ [0.25, 2], θ ∈ [-2, 2].
Chart polar_chart();

} // namespace pq
