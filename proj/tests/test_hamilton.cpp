#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "prequant/errors.hpp"
#include "prequant/hamilton.hpp"
#include "support.hpp"

using namespace pq;
namespace ts = testing_support;

namespace {
const double two_pi = 2.0 * std::numbers::pi;

// Ξ_f for Ω = [[0, a], [-a, 0]] solved by hand from Ωᵀ Ξ = -∇f.
std::array<double, 2> xi_2d(double a, double fq, double fp) { return {-fp / a, fq / a}; }

// {f, g} = Ξ_f(g) through central differences only.
double fd_bracket(const Expression& f, const Expression& g, const std::vector<double>& x, double a = -1.0) {
    auto F = [&](const std::vector<double>& p) { return f.evaluate(p); };
    auto G = [&](const std::vector<double>& p) { return g.evaluate(p); };
    const auto xi = xi_2d(a, ts::central_difference(F, x, 0), ts::central_difference(F, x, 1));
    return xi[0] * ts::central_difference(G, x, 0) + xi[1] * ts::central_difference(G, x, 1);
}
} // namespace

TEST_CASE("Hamiltonian vector field of p²/2m + V") {
    const auto w = canonical_symplectic(1);
    const Chart& c = w.chart();
    const auto osc = hamiltonian_vector_field(w, c.parse("p^2/2 + q^2/2"));
    const auto quartic = hamiltonian_vector_field(w, c.parse("p^2/(2*3) + q^4 - q"));
    for (const auto& x : ts::random_points(100, 2, 1)) {
        CHECK(std::abs(osc[0].evaluate(x) - x[1]) <= 1e-12);
        CHECK(std::abs(osc[1].evaluate(x) + x[0]) <= 1e-12);
        CHECK(quartic[0].evaluate(x) == doctest::Approx(x[1] / 3.0));
        CHECK(quartic[1].evaluate(x) == doctest::Approx(-(4 * std::pow(x[0], 3) - 1)));
    }
    const auto qp = hamiltonian_vector_field(w, c.parse("q*p"));
    const std::vector<double> x{0.7, -1.3};
    CHECK(qp[0].evaluate(x) == doctest::Approx(0.7));
    CHECK(qp[1].evaluate(x) == doctest::Approx(1.3));
}

TEST_CASE("nonconstant forms: symbolic and pointwise routes agree") {
    const Chart c = cotangent_chart(1);
    const auto w = SymplecticStructure::certify(TwoForm::from_upper(c, {{0, 1, c.parse("-(1 + q^2)")}}));
    const Expression f = c.parse("sin(q)*p^2 + q");
    const VectorField X = hamiltonian_vector_field(w, f);
    for (const auto& x : ts::random_points(50, 2, 2)) {
        const double a = -(1 + x[0] * x[0]);
        const auto expected = xi_2d(a, std::cos(x[0]) * x[1] * x[1] + 1, 2 * std::sin(x[0]) * x[1]);
        const Eigen::VectorXd direct = hamiltonian_vector_at(w, f, x);
        CHECK(X[0].evaluate(x) == doctest::Approx(expected[0]).epsilon(1e-12));
        CHECK(X[1].evaluate(x) == doctest::Approx(expected[1]).epsilon(1e-12));
        CHECK(direct(0) == doctest::Approx(expected[0]).epsilon(1e-12));
        CHECK(direct(1) == doctest::Approx(expected[1]).epsilon(1e-12));
    }
    CHECK(defining_equation_residual(w, f, c.sample(100, 3), 4) < 1e-12);
}

TEST_CASE("singular points are refused") {
    // Ω = -q degenerates at q = 0; the chart leaves it out, evaluation there is refused.
    const Chart right("right", {"q", "p"}, {Interval{0.5, 3.0, true, true}, Interval{}});
    const auto w = SymplecticStructure::certify(TwoForm::from_upper(right, {{0, 1, right.parse("-q")}}));
    const Expression f = right.parse("p");
    CHECK_THROWS_AS(hamiltonian_vector_at(w, f, std::vector<double>{0.0, 1.0}), SingularFormError);
    const VectorField X = hamiltonian_vector_field(w, f);
    CHECK_THROWS_AS(X.evaluate(std::vector<double>{0.0, 1.0}), SingularFormError);
    CHECK(X.evaluate(std::vector<double>{2.0, 1.0})(0) == doctest::Approx(0.5));
}

TEST_CASE("Poisson bracket identities") {
    const auto w = canonical_symplectic(1);
    const Chart& c = w.chart();
    const PointCloud pts = c.sample(100, 5);
    const Expression q = c.parse("q"), p = c.parse("p");
    CHECK(poisson_bracket(q, p, w).expression().is_constant());
    CHECK(poisson_bracket(q, p, w).expression().constant_value() == -1.0);

    for (int trial = 0; trial < 10; ++trial) {
        const Expression f = random_polynomial(c, 3, 100 + 3 * trial);
        const Expression g = random_polynomial(c, 3, 101 + 3 * trial);
        const Expression h = random_polynomial(c, 3, 102 + 3 * trial);
        auto br = [&](const Expression& a, const Expression& b) { return poisson_bracket(a, b, w).expression(); };
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto x = pts[i];
            const std::vector<double> xv(x.begin(), x.end());
            CHECK(std::abs(br(f, f).evaluate(x)) <= 1e-12);
            CHECK(br(f, g).evaluate(x) == doctest::Approx(fd_bracket(f, g, xv)).epsilon(1e-6).scale(1.0));
            CHECK(std::abs(br(f, g * h).evaluate(x) - (br(f, g) * h + g * br(f, h)).evaluate(x)) <= 1e-10);
            CHECK(std::abs((br(f, br(g, h)) + br(g, br(h, f)) + br(h, br(f, g))).evaluate(x)) <= 1e-9);
        }
    }
}

TEST_CASE("Ξ of a bracket is the Lie bracket of the fields") {
    const auto w = canonical_symplectic(1);
    const Chart& c = w.chart();
    const Expression f = c.parse("q^2"), g = c.parse("p^2");
    const VectorField lhs = hamiltonian_vector_field(w, poisson_bracket(f, g, w).expression());
    const VectorField rhs = lie_bracket(hamiltonian_vector_field(w, f), hamiltonian_vector_field(w, g));
    for (const auto& x : ts::random_points(100, 2, 6))
        CHECK((lhs.evaluate(x) - rhs.evaluate(x)).norm() <= 1e-9);

    // Lie bracket by hand: [∂p, p∂q] = ∂q.
    const VectorField L = lie_bracket(VectorField::coordinate(c, 1), VectorField(c, {c.parse("p"), c.constant(0)}));
    CHECK(L.evaluate(std::vector<double>{0.1, 0.2})(0) == 1.0);
    CHECK(L.evaluate(std::vector<double>{0.1, 0.2})(1) == 0.0);
}

TEST_CASE("the plus_df convention flips every field") {
    const auto w = canonical_symplectic(1);
    const Expression H = w.chart().parse("p^2/2 + q^2/2");
    set_sign_convention(SignConvention::plus_df);
    const VectorField flipped = hamiltonian_vector_field(w, H);
    const double residual = defining_equation_residual(w, H, w.chart().sample(50, 1), 2);
    set_sign_convention(SignConvention::minus_df);
    const std::vector<double> x{1.0, 2.0};
    CHECK(flipped.evaluate(x)(0) == -2.0);
    CHECK(flipped.evaluate(x)(1) == 1.0);
    CHECK(residual < 1e-12);
    CHECK(hamiltonian_vector_field(w, H).evaluate(x)(0) == 2.0);
}

TEST_CASE("Hamiltonian flows preserve ω") {
    const auto w = canonical_symplectic(1);
    const Chart& c = w.chart();
    const PointCloud pts = c.sample(200, 7);
    for (int trial = 0; trial < 5; ++trial) {
        const TwoForm L = lie_derivative_of_form(hamiltonian_vector_field(w, random_polynomial(c, 4, 300 + trial)), w.form());
        for (std::size_t i = 0; i < pts.size(); ++i) CHECK(std::abs(L.evaluate(pts[i])(0, 1)) < 1e-9);
    }
    // X = q∂q: ι(X)ω = -q dp, d(-q dp) = dp∧dq, so ℒ_X ω = ω.
    const TwoForm Lq = lie_derivative_of_form(VectorField(c, {c.parse("q"), c.constant(0)}), w.form());
    CHECK(Lq.evaluate(std::vector<double>{0.3, 0.5})(0, 1) == -1.0);

    const Chart c2 = cotangent_chart(1);
    const auto curved = SymplecticStructure::certify(TwoForm::from_upper(c2, {{0, 1, c2.parse("-(2 + sin(q*p))")}}));
    const TwoForm Lc = lie_derivative_of_form(hamiltonian_vector_field(curved, c2.parse("q^3*p - p^2")), curved.form());
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(std::abs(Lc.evaluate(pts[i])(0, 1)) < 1e-9);
}

TEST_CASE("leapfrog oscillator over one period") {
    const auto w = canonical_symplectic(1);
    const HamiltonianSystem sys(w, w.chart().parse("p^2/2 + q^2/2"));
    const double dt = two_pi / 1000;
    const std::vector<double> x0{1.0, 0.0};
    const Trajectory tr = integrate_flow(sys, x0, two_pi, dt, {Integrator::automatic, 10});
    CHECK(tr.integrator == "leapfrog");
    CHECK(tr.steps == 1000);
    CHECK(tr.states.size() == 101);
    for (std::size_t i = 0; i < tr.states.size(); ++i) {
        CHECK(std::abs(tr.states[i][0] - std::cos(tr.times[i])) < 1e-4);
        CHECK(std::abs(tr.states[i][1] + std::sin(tr.times[i])) < 1e-4);
    }
    CHECK(tr.energy_drift < 1e-6);
    // Leapfrog conserves p²/2 + (1 - h²/4) q²/2 exactly, so H deviates by
    // (h²/8)(1 - q²), peaking at h²/8 where q crosses zero.
    CHECK(tr.max_energy_deviation == doctest::Approx(dt * dt / 8).epsilon(1e-4));
}

TEST_CASE("long leapfrog runs keep the energy") {
    const auto w = canonical_symplectic(1);
    const HamiltonianSystem sys(w, w.chart().parse("p^2/2 + q^2/2"));
    const double dt = two_pi / 1000;
    const Trajectory tr = integrate_flow(sys, std::vector<double>{1.0, 0.0}, 1e6 * dt, dt, {Integrator::leapfrog, 100000});
    CHECK(tr.steps == 1000000);
    CHECK(tr.energy_drift < 1e-5);
}

TEST_CASE("RK4 for non-separable Hamiltonians") {
    const auto w = canonical_symplectic(1);
    const Expression H = w.chart().parse("(q^2 + p^2)^2/4");
    CHECK_FALSE(is_separable(H, 1));
    CHECK(is_separable(w.chart().parse("p^2/2 + q^4 - cos(q)"), 1));
    const HamiltonianSystem sys(w, H);
    // Circular orbits at angular speed r² = 1: x(t) = (cos t, -sin t).
    const Trajectory tr = integrate_flow(sys, std::vector<double>{1.0, 0.0}, 1.0, 1e-3);
    CHECK(tr.integrator == "rk4");
    const auto last = tr.states[tr.states.size() - 1];
    CHECK(last[0] == doctest::Approx(std::cos(1.0)).epsilon(1e-10));
    CHECK(last[1] == doctest::Approx(-std::sin(1.0)).epsilon(1e-10));
    CHECK_THROWS_AS(integrate_flow(sys, std::vector<double>{1.0, 0.0}, 1.0, 1e-3, {Integrator::leapfrog, 1}), ValidationError);
}

TEST_CASE("the last step is shortened to land on T") {
    const auto w = canonical_symplectic(1);
    const HamiltonianSystem sys(w, w.chart().parse("p"));
    const Trajectory tr = integrate_flow(sys, std::vector<double>{0.0, 0.0}, 1.05, 0.1);
    CHECK(tr.times.back() == doctest::Approx(1.05).epsilon(1e-15));
    CHECK(tr.states[tr.states.size() - 1][0] == doctest::Approx(1.05).epsilon(1e-14));
}

TEST_CASE("leaving the chart reports the step") {
    const Chart strip("strip", {"q", "p"}, {Interval{-1.0, 1.0, true, true}, Interval{}});
    const auto w = SymplecticStructure::certify(TwoForm::from_upper(strip, {{0, 1, strip.constant(-1.0)}}));
    const HamiltonianSystem sys(w, strip.parse("p"));
    try {
        integrate_flow(sys, std::vector<double>{0.0, 0.0}, 5.0, 0.1);
        FAIL("expected a domain exit");
    } catch (const DomainExitError& e) {
        // q(t) = t leaves (-1, 1) on step 10 (q = 1.0).
        CHECK(e.exit_index() >= 10);
        CHECK(e.exit_index() <= 11);
    }
}
