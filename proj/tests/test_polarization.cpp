#include <doctest.h>

#include <cmath>
#include <numbers>

#include "prequant/errors.hpp"
#include "prequant/polarization.hpp"
#include "support.hpp"

using namespace pq;
namespace ts = testing_support;

namespace {
const double pi = std::numbers::pi;
const cplx I(0.0, 1.0);

// Densities are paired only on one shared atlas object.
const std::shared_ptr<const Atlas>& line() {
    static const auto atlas = box_atlas({"q"}, Box{{-4.0}, {4.0}});
    return atlas;
}

ManifoldDensity half_density(const char* re, const char* im = "0") {
    return ManifoldDensity::parse(line(), 0.5, {{re, im}});
}
} // namespace

TEST_CASE("vertical polarization") {
    const Polarization F = vertical_polarization(1);
    const std::vector<double> x{0.3, -0.8};
    CHECK(F.frame().size() == 1);
    CHECK(F.frame()[0].evaluate(x)(0) == 0.0);
    CHECK(F.frame()[0].evaluate(x)(1) == 1.0);
    CHECK(F.certificate().isotropy_residual == 0.0);
    CHECK(F.span_residual(x, Eigen::Vector2d(0.0, 3.0)) < 1e-14);
    CHECK(F.span_residual(x, Eigen::Vector2d(1.0, 3.0)) == doctest::Approx(1.0));
    CHECK(vertical_polarization(2).frame().size() == 2);
}

TEST_CASE("certification rejects non-Lagrangian frames") {
    const auto w = canonical_symplectic(2);
    const Chart& c = w.chart();
    // ∂q1 and ∂p1 span a symplectic plane.
    CHECK_THROWS_AS(Polarization::certify(w, {VectorField::coordinate(c, 0), VectorField::coordinate(c, 2)}), CertificationError);
    CHECK_THROWS_AS(Polarization::certify(w, {VectorField::coordinate(c, 2), VectorField::coordinate(c, 2)}), CertificationError);
    CHECK_THROWS_AS(Polarization::certify(w, {VectorField::coordinate(c, 2)}), Error);
}

TEST_CASE("polarized sections") {
    const auto B = cotangent_bundle(1);
    const Polarization F = vertical_polarization(1);
    const PointCloud pts = B.chart().sample(100, 1);
    CHECK(polarized_residual(B, Section::parse(B.chart(), "exp(-q^2)*cos(q)", "q^3"), F, pts) < 1e-12);
    // ∇_∂p s = ∂p s, so p-dependence is the obstruction.
    CHECK(polarized_residual(B, Section::parse(B.chart(), "p*exp(-q^2)"), F, pts) > 0.1);

    const auto P = punctured_plane_bundle();
    const Polarization C = circle_polarization();
    const PointCloud ppts = P.chart().sample(100, 2);
    // ∇_∂θ s = ∂θ s + i r² s vanishes for s = e^{-i r² θ} on the angular chart.
    CHECK(polarized_residual(P, Section::parse(P.chart(), "cos(r^2*theta)", "-sin(r^2*theta)"), C, ppts) < 1e-10);
    // Functions of r alone are not polarized here.
    CHECK(polarized_residual(P, Section::parse(P.chart(), "r"), C, ppts) > 1e-3);
}

TEST_CASE("holonomy around the circles r = const") {
    const auto one = punctured_plane_holonomy(1.0);
    CHECK(std::abs(one.numeric - 1.0) < 1e-8);
    CHECK(one.polarized_exists);
    const auto half = punctured_plane_holonomy(std::sqrt(0.5));
    CHECK(std::abs(half.numeric + 1.0) < 1e-8);
    CHECK_FALSE(half.polarized_exists);
    const auto quarter = punctured_plane_holonomy(0.5);
    CHECK(std::abs(quarter.numeric + I) < 1e-8);
    CHECK_FALSE(quarter.polarized_exists);
    for (double r2 : {2.0, 3.0, 0.3, 1.7}) {
        const auto h = punctured_plane_holonomy(std::sqrt(r2));
        CHECK(std::abs(h.numeric - std::exp(-2.0 * pi * I * r2)) < 1e-8);
        CHECK(std::abs(h.closed_form - std::exp(-2.0 * pi * I * r2)) < 1e-14);
        CHECK(h.polarized_exists == (std::abs(r2 - std::round(r2)) < 1e-12));
    }
}

TEST_CASE("polarization-preserving functions are affine in p") {
    const Polarization F = vertical_polarization(1);
    const Chart& c = F.chart();
    const PointCloud pts = c.sample(100, 3);
    for (const char* f : {"q^2*p + q", "sin(q)*p + cos(q)", "p", "exp(q/2)*p - q^4"})
        CHECK(is_polarization_preserving(c.parse(f), F, pts) < 1e-9);
    // [Ξ_{p²}, ∂p] = -2∂q, distance 2 from the vertical.
    CHECK(is_polarization_preserving(c.parse("p^2"), F, pts) == doctest::Approx(2.0));
    CHECK(is_polarization_preserving(c.parse("q*p^2"), F, pts) >= 0.5);

    CHECK(bracket_closure_check(c.parse("q^2*p + q"), c.parse("sin(q)*p"), F, pts) < 1e-7);
    const auto B = cotangent_bundle(1);
    const Section s = Section::parse(c, "exp(-q^2)", "q*exp(-q^2)");
    CHECK(qf_preserves_polarized_check(B, c.parse("q^2*p + q"), s, F, pts) < 1e-7);
    CHECK(qf_preserves_polarized_check(B, c.parse("p^2"), s, F, pts) > 1e-2);
}

TEST_CASE("Q_f on polarized sections by hand") {
    // Q_{a(q)p} ψ = a ψ' for ψ(q): ∇_Ξ with Ξ = a∂q - a'p∂p, θ(Ξ) = a p.
    const auto B = cotangent_bundle(1);
    const Chart& c = B.chart();
    const Section psi = Section::parse(c, "exp(-q^2)", "sin(q)");
    const Section out = prequantum_operator(B, c.parse("q^2*p"), psi);
    for (const auto& x : ts::random_points(20, 2, 4)) {
        const cplx dpsi = cplx(-2 * x[0] * std::exp(-x[0] * x[0]), std::cos(x[0]));
        CHECK(std::abs(out(x) - x[0] * x[0] * dpsi) < 1e-10);
    }
}

TEST_CASE("half-density pairing on the leaf space") {
    const auto B = cotangent_bundle(1);
    const Polarization F = vertical_polarization(1);
    const Chart& c = B.chart();
    const Section s1 = Section::parse(c, "exp(-q^2)");
    const Section s2 = Section::parse(c, "cos(q)*exp(-q^2)", "sin(q)*exp(-q^2)");
    const ManifoldDensity m1 = half_density("1");
    const ManifoldDensity m2 = half_density("1", "q/3");

    const cplx v = half_density_pairing(B, F, s1, m1, s2, m2);
    // conj(s1) s2 conj(μ1) μ2 = e^{-2q²} e^{iq} (1 + iq/3).
    auto integrand = [](double q) { return std::exp(-2 * q * q) * std::exp(cplx(0, q)) * cplx(1, q / 3); };
    const double re = ts::gauss_legendre([&](double q) { return integrand(q).real(); }, -4, 4);
    const double im = ts::gauss_legendre([&](double q) { return integrand(q).imag(); }, -4, 4);
    CHECK(std::abs(v - cplx(re, im)) < 1e-7);

    CHECK(std::abs(half_density_pairing(B, F, s2, m2, s1, m1) - std::conj(v)) < 1e-9);
    CHECK(std::abs(half_density_pairing(B, F, s1, half_density("2"), s2, m2) - 2.0 * v) < 1e-9);
    CHECK(std::abs(half_density_pairing(B, F, s1, m1, s2.times(I), m2) - I * v) < 1e-9);
    // ∫|ψ|² > 0.
    const cplx norm = half_density_pairing(B, F, s1, m1, s1, m1);
    CHECK(norm.real() == doctest::Approx(std::sqrt(pi / 2)).epsilon(1e-7));
    CHECK(std::abs(norm.imag()) < 1e-12);
}

TEST_CASE("the pairing refuses bad input") {
    const auto B = cotangent_bundle(1);
    const Polarization F = vertical_polarization(1);
    const Chart& c = B.chart();
    const Section bad = Section::parse(c, "p*exp(-q^2)");
    const Section good = Section::parse(c, "exp(-q^2)");
    const ManifoldDensity m = half_density("1");
    CHECK_THROWS_AS(half_density_pairing(B, F, bad, m, good, m), ValidationError);
    PairingOptions loose;
    loose.polarized_tolerance = 1e6;
    try {
        half_density_pairing(B, F, Section::parse(c, "p"), m, good, m, loose);
        FAIL("expected a leaf-constancy failure");
    } catch (const NotLeafConstantError& e) {
        CHECK(e.variation() > 1e-3);
    }
}
