#pragma once

// Trivialized Hermitian line bundles with connection ∇_X s = X(s) + κ i θ(X) s,
// prequantum operators Q_f = ∇_{Ξ_f} - κ i f and the quadrature checks of
// the L² pairing.

#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <string_view>

#include "prequant/complex_field.hpp"
#include "prequant/geometry.hpp"
#include "prequant/hamilton.hpp"
#include "prequant/kernels.hpp"

namespace pq {

class Section {
public:
    Section(Chart chart, ComplexField field, std::optional<Box> support = std::nullopt);
    // re + i·im parsed over the chart coordinates.
    static Section parse(const Chart& chart, std::string_view re, std::string_view im = "0",
                         std::optional<Box> support = std::nullopt);

    const Chart& chart() const noexcept { return chart_; }
    const ComplexField& field() const noexcept { return field_; }
    const std::optional<Box>& support() const noexcept { return support_; }
    bool symbolic() const noexcept { return field_.symbolic(); }

    // Zero outside the support box. Throws SingularFormError where the
    // guard (det Ω of a nonconstant form) is singular.
    cplx evaluate(std::span<const double> x) const;
    cplx operator()(std::span<const double> x) const { return evaluate(x); }

    Section with_guard(std::optional<Expression> guard) const;
    const std::optional<Expression>& guard() const noexcept { return guard_; }

    Section operator+(const Section& other) const;
    Section operator-(const Section& other) const;
    // Multiplication by the complex function a + i·b.
    Section times(const Expression& a, const Expression& b) const;
    Section times(const Expression& a) const;
    Section times(cplx c) const;

private:
    Chart chart_;
    ComplexField field_;
    std::optional<Box> support_;
    std::optional<Expression> guard_;
};

// X(s) as a section (symbolic when s is).
Section apply(const VectorField& X, const Section& s);

// Product of factors (1 - ((x_i - c_i)/w_i)²)^k over the support box, with
// c and w the box centre and half-widths, times the given modulation.
Section bump_section(const Chart& chart, const Box& support, int exponent, std::string_view modulation_re = "1",
                     std::string_view modulation_im = "0");

struct BundleCertificate {
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    double curvature_residual = 0.0; // max |dθ - ω| over sampled points
};

class PrequantumBundle {
public:
    static constexpr double two_pi = 2.0 * std::numbers::pi;

    // Requires dθ = ω to 1e-9 at sampled points.
    static PrequantumBundle certify(SymplecticStructure omega, OneForm theta, double kappa = two_pi,
                                    std::size_t samples = 200, std::uint64_t seed = 0xb0b);

    const Chart& chart() const noexcept { return omega_.chart(); }
    const SymplecticStructure& symplectic() const noexcept { return omega_; }
    const OneForm& potential() const noexcept { return theta_; }
    double kappa() const noexcept { return kappa_; }
    const BundleCertificate& certificate() const noexcept { return certificate_; }

private:
    PrequantumBundle(SymplecticStructure omega, OneForm theta, double kappa, BundleCertificate cert);

    SymplecticStructure omega_;
    OneForm theta_;
    double kappa_;
    BundleCertificate certificate_;
};

// (T*R^n, Σ dp∧dq) with θ = Σ p dq.
PrequantumBundle cotangent_bundle(std::size_t n, double kappa = PrequantumBundle::two_pi);

// Punctured plane in polar coordinates with α = r² dθ and κ = 1; its
// symplectic form is dα = 2r dr∧dθ.
PrequantumBundle punctured_plane_bundle();

Section covariant_derivative(const PrequantumBundle& bundle, const Section& s, const VectorField& X);

// R(X,Y)s = ∇_X∇_Y s - ∇_Y∇_X s - ∇_{[X,Y]} s.
Section curvature(const PrequantumBundle& bundle, const VectorField& X, const VectorField& Y, const Section& s);
// max over points of |R(X,Y)s - κ i ω(X,Y) s|.
double curvature_residual(const PrequantumBundle& bundle, const VectorField& X, const VectorField& Y,
                          const Section& s, const PointCloud& points);

Section prequantum_operator(const PrequantumBundle& bundle, const Expression& f, const Section& s);

struct CommutatorCheck {
    double residual = 0.0;            // max |[Q_f,Q_g]s - Q_{f,g}s|
    double connection_residual = 0.0; // max |[∇_Ξf,∇_Ξg]s - ∇_Ξ{f,g} s - κ i {f,g} s|
};
CommutatorCheck commutator_check(const PrequantumBundle& bundle, const Expression& f, const Expression& g,
                                 const Section& s, const PointCloud& points);

// ∫ conj(s)·s'·|ρ| by tensor Simpson, ρ the coefficient of ωᵐ. Both
// sections must carry a support box inside the grid box.
cplx l2_inner_product(const PrequantumBundle& bundle, const Section& s, const Section& s2,
                      const QuadratureGrid& grid, Exec exec = Exec::parallel);

// |⟨⟨Q_f s, s'⟩⟩ + ⟨⟨s, Q_f s'⟩⟩|.
double skew_hermiticity_check(const PrequantumBundle& bundle, const Expression& f, const Section& s,
                              const Section& s2, const QuadratureGrid& grid, Exec exec = Exec::parallel);

// max over points of |a(x) - b(x)|.
double max_difference(const Section& a, const Section& b, const PointCloud& points);

} // namespace pq
