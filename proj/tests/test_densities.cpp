#include <doctest.h>

#include <cmath>
#include <numbers>

#include "prequant/densities.hpp"
#include "prequant/errors.hpp"
#include "support.hpp"

using namespace pq;
namespace ts = testing_support;

namespace {
const double pi = std::numbers::pi;
} // namespace

TEST_CASE("vector densities scale by |det|^α") {
    const VectorDensity half(2, 0.5, 1.0);
    CHECK(half.evaluate(2.0 * Eigen::Matrix2d::Identity()) == cplx(2.0, 0.0));
    Eigen::Matrix2d rot;
    rot << std::cos(0.3), -std::sin(0.3), std::sin(0.3), std::cos(0.3);
    CHECK(std::abs(half.evaluate(rot) - 1.0) < 1e-15);
    Eigen::Matrix2d swap;
    swap << 0, 1, 1, 0;
    CHECK(std::abs(VectorDensity(2, 1.0, 3.0).evaluate(swap) - 3.0) < 1e-15);
    CHECK_THROWS_AS(half.evaluate(Eigen::Matrix2d::Zero()), SingularFormError);

    const cplx order(0.5, 1.0);
    // 4^{1/2 + i} = 2 e^{i ln 4}.
    CHECK(std::abs(abs_det_power(-4.0, order) - 2.0 * std::exp(cplx(0, std::log(4.0)))) < 1e-14);
}

TEST_CASE("products, conjugates and pullbacks") {
    const VectorDensity a(2, cplx(0.5, 0.25), cplx(1.0, 2.0)), b(2, cplx(0.5, -0.25), cplx(3.0, -1.0));
    const VectorDensity ab = density_product(a, b);
    CHECK(ab.order() == cplx(1.0, 0.0));
    Eigen::Matrix2d F;
    F << 1.5, 0.2, -0.7, 2.0;
    CHECK(std::abs(ab.evaluate(F) - a.evaluate(F) * b.evaluate(F)) < 1e-13);
    CHECK(std::abs(conjugate_density(a).evaluate(F) - std::conj(a.evaluate(F))) < 1e-14);
    CHECK_THROWS_AS(density_product(a, VectorDensity(3, 1.0, 1.0)), ValidationError);

    Eigen::Matrix2d T = Eigen::Vector2d(2, 3).asDiagonal();
    CHECK(std::abs(pullback_density(T, VectorDensity(2, 1.0, 1.0)).evaluate(Eigen::Matrix2d::Identity()) - 6.0) < 1e-14);
    // (AB)* = B* A*.
    Eigen::Matrix2d A, B;
    A << 1, 2, 0, 1;
    B << 0.5, 0, 1, 3;
    const auto lhs = pullback_density(A * B, a).evaluate(F);
    const auto rhs = pullback_density(B, pullback_density(A, a)).evaluate(F);
    CHECK(std::abs(lhs - rhs) < 1e-13);
}

TEST_CASE("smootherstep") {
    const Expression s = smootherstep(Expression::parse("t", {"t"}));
    auto at = [&](double t) { return s.evaluate(std::vector<double>{t}); };
    CHECK(at(0.0) == 0.0);
    CHECK(at(1.0) == 1.0);
    CHECK(at(0.5) == doctest::Approx(0.5));
    CHECK(at(0.25) + at(0.75) == doctest::Approx(1.0));
    const Expression d = s.differentiate(0);
    CHECK(d.evaluate(std::vector<double>{0.0}) == 0.0);
    CHECK(d.evaluate(std::vector<double>{1.0}) == 0.0);
    CHECK(d.differentiate(0).evaluate(std::vector<double>{1.0}) == 0.0);
    CHECK(d.evaluate(std::vector<double>{0.5}) == doctest::Approx(15.0 / 8.0));
}

TEST_CASE("circle length through two different atlases") {
    const auto angle = circle_angle_atlas();
    const auto tangent = circle_tangent_atlas();
    CHECK(angle->partition_residual() < 1e-10);
    CHECK(tangent->partition_residual() < 1e-10);

    const auto r1 = integrate_one_density(ManifoldDensity::parse(angle, 1.0, {{"1", "0"}, {"1", "0"}}));
    const auto r2 = integrate_one_density(ManifoldDensity::parse(tangent, 1.0, {{"2/(1+x^2)", "0"}, {"2/(1+y^2)", "0"}}));
    CHECK(r1.converged);
    CHECK(r2.converged);
    CHECK(std::abs(r1.total - 2 * pi) < 1e-8);
    CHECK(std::abs(r2.total - 2 * pi) < 1e-8);

    // ∫ e^{cos φ} dφ with cos φ = (1 - x²)/(1 + x²) in the half-angle chart.
    const double oracle = ts::gauss_legendre([](double p) { return std::exp(std::cos(p)); }, 0, 2 * pi);
    const auto e1 = integrate_one_density(ManifoldDensity::parse(angle, 1.0, {{"exp(cos(theta))", "0"}, {"exp(cos(theta))", "0"}}));
    const auto e2 = integrate_one_density(ManifoldDensity::parse(
        tangent, 1.0, {{"2*exp((1-x^2)/(1+x^2))/(1+x^2)", "0"}, {"2*exp((y^2-1)/(1+y^2))/(1+y^2)", "0"}}));
    CHECK(std::abs(e1.total - oracle) < 1e-8);
    CHECK(std::abs(e2.total - oracle) < 1e-8);
}

TEST_CASE("overlap residual detects inconsistent coefficients") {
    const auto tangent = circle_tangent_atlas();
    CHECK(ManifoldDensity::parse(tangent, 1.0, {{"2/(1+x^2)", "0"}, {"2/(1+y^2)", "0"}}).overlap_residual() < 1e-12);
    CHECK(ManifoldDensity::parse(tangent, 1.0, {{"1", "0"}, {"1", "0"}}).overlap_residual() > 0.1);
    // Half-densities pick up |dy/dx|^{1/2} = 1/|x|.
    CHECK(ManifoldDensity::parse(tangent, 0.5, {{"sqrt(2/(1+x^2))", "0"}, {"sqrt(2/(1+y^2))", "0"}}).overlap_residual() < 1e-12);
}

TEST_CASE("products of half-densities integrate") {
    const auto tangent = circle_tangent_atlas();
    const auto mu = ManifoldDensity::parse(tangent, 0.5, {{"sqrt(2/(1+x^2))", "0"}, {"sqrt(2/(1+y^2))", "0"}});
    const auto prod = density_product(conjugate_density(mu), mu);
    CHECK(prod.order() == cplx(1.0, 0.0));
    CHECK(std::abs(integrate_one_density(prod).total - 2 * pi) < 1e-8);
}

TEST_CASE("signed densities split into positive parts") {
    const auto angle = circle_angle_atlas();
    const auto tau = ManifoldDensity::parse(angle, 1.0, {{"sin(theta)", "0"}, {"sin(theta)", "0"}});
    CHECK(std::abs(integrate_one_density(tau).total) < 1e-8);
    const auto [plus, minus] = split_signed_density(tau);
    CHECK(std::abs(integrate_one_density(plus).total - 2.0) < 1e-7);
    CHECK(std::abs(integrate_one_density(minus).total - 2.0) < 1e-7);
    CHECK_THROWS_AS(split_signed_density(ManifoldDensity::parse(angle, 1.0, {{"1", "theta"}, {"1", "theta"}})), ValidationError);
}

TEST_CASE("annulus area and a box") {
    const auto ann = annulus_atlas(1.0, 2.0);
    const auto area = integrate_one_density(ManifoldDensity::parse(ann, 1.0, {{"r", "0"}, {"r", "0"}}));
    CHECK(std::abs(area.total - 3 * pi) < 1e-8);
    const auto box = box_atlas({"u", "v"}, Box{{0, 0}, {1, 2}});
    CHECK(std::abs(integrate_one_density(ManifoldDensity::parse(box, 1.0, {{"u*v", "u"}})).total - cplx(1.0, 1.0)) < 1e-12);
}
