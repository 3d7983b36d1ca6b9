#include <doctest.h>

#include <algorithm>
#include <random>

#include "prequant/diffcoh.hpp"
#include "prequant/errors.hpp"

using namespace pq;
using namespace pq::dc;

namespace {

IntCochain random_int(const SimplicialComplex& K, std::size_t degree, std::uint64_t seed, int range = 3) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> u(-range, range);
    IntCochain x = zero_int(K, degree);
    for (auto& v : x.values) v = u(rng);
    return x;
}

RealCochain random_real(const SimplicialComplex& K, std::size_t degree, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> num(-20, 20), den(1, 7);
    RealCochain x = zero_real(K, degree);
    for (auto& v : x.values) v = Rational(num(rng), den(rng));
    return x;
}

// Index of the (k-1)-simplex with the given vertex set and the sign of the
// permutation from `face` to its stored orientation.
std::pair<std::size_t, int> locate(const SimplicialComplex& K, std::size_t k, std::vector<std::size_t> face) {
    for (std::size_t i = 0; i < K.count(k); ++i) {
        auto stored = K.simplex(k, i);
        if (!std::is_permutation(stored.begin(), stored.end(), face.begin())) continue;
        int sign = 1;
        for (std::size_t a = 0; a < face.size(); ++a)
            for (std::size_t b = a + 1; b < face.size(); ++b) {
                const auto pa = std::find(stored.begin(), stored.end(), face[a]) - stored.begin();
                const auto pb = std::find(stored.begin(), stored.end(), face[b]) - stored.begin();
                if (pa > pb) sign = -sign;
            }
        return {i, sign};
    }
    FAIL("face not found");
    return {0, 0};
}

// (δx)(v0…vk) = Σ (-1)^i x(v0…v̂i…vk) straight from the vertex lists.
IntCochain alternating_sum(const SimplicialComplex& K, const IntCochain& x) {
    const std::size_t k = x.degree + 1;
    IntCochain out = zero_int(K, k);
    for (std::size_t s = 0; s < K.count(k); ++s) {
        const auto& verts = K.simplex(k, s);
        for (std::size_t i = 0; i < verts.size(); ++i) {
            std::vector<std::size_t> face = verts;
            face.erase(face.begin() + static_cast<long>(i));
            const auto [idx, sign] = locate(K, k - 1, face);
            out.values[s] += ((i % 2) ? -1 : 1) * sign * x.values[idx];
        }
    }
    return out;
}

RealCochain uniform(const SimplicialComplex& K, std::size_t degree, const Rational& total) {
    RealCochain x = zero_real(K, degree);
    for (auto& v : x.values) v = total / static_cast<long>(K.count(degree));
    return x;
}

Rational sum(const RealCochain& x) {
    Rational s = 0;
    for (const auto& v : x.values) s += v;
    return s;
}

std::int64_t sum(const IntCochain& x) {
    std::int64_t s = 0;
    for (auto v : x.values) s += v;
    return s;
}

using Matrix = std::vector<std::vector<Integer>>;
Matrix multiply(const Matrix& A, const Matrix& B) {
    Matrix C(A.size(), std::vector<Integer>(B.empty() ? 0 : B[0].size(), 0));
    for (std::size_t i = 0; i < A.size(); ++i)
        for (std::size_t k = 0; k < B.size(); ++k)
            for (std::size_t j = 0; j < C[i].size(); ++j) C[i][j] += A[i][k] * B[k][j];
    return C;
}
Matrix widen(const std::vector<std::vector<std::int64_t>>& A) {
    Matrix out;
    for (const auto& row : A) out.emplace_back(row.begin(), row.end());
    return out;
}

} // namespace

TEST_CASE("exact rational parsing") {
    CHECK(parse_rational("1.3") == Rational(13, 10));
    CHECK(parse_rational("-2.5e-3") == Rational(-1, 400));
    CHECK(parse_rational("7/4") == Rational(7, 4));
    CHECK(parse_rational("12") == Rational(12));
    CHECK(parse_rational("1e2") == Rational(100));
    CHECK_THROWS_AS(parse_rational("1/0"), ValidationError);
    CHECK_THROWS_AS(parse_rational("abc"), ValidationError);
    CHECK(round_rational(Rational(5, 2)) == 3);
    CHECK(round_rational(Rational(-5, 2)) == -3);
    CHECK(round_rational(Rational(7, 3)) == 2);
    CHECK(is_integer(Rational(8, 4)));
    CHECK(to_string(Rational(-3, 6)) == "-1/2");
}

TEST_CASE("builtin complexes") {
    for (const auto& K : {circle_complex(4), torus_complex(3, 4), tetra_sphere(), tetra_ball()}) CHECK(K->boundary_squared_zero());
    const auto T = torus_complex(3, 4);
    // χ(T²) = 0 with 2mn triangles.
    CHECK(T->count(0) == 12);
    CHECK(T->count(2) == 24);
    CHECK(static_cast<long>(T->count(0)) - static_cast<long>(T->count(1)) + static_cast<long>(T->count(2)) == 0);
    CHECK(tetra_sphere()->count(2) == 4);
    CHECK(tetra_ball()->dimension() == 3);
    CHECK_THROWS_AS(SimplicialComplex("bad", {{{0}, {1}}, {{0, 2}}}), ValidationError);
}

TEST_CASE("coboundary against the alternating face sum") {
    const auto C = circle_complex(4);
    IntCochain chi = zero_int(*C, 0);
    chi.values[0] = 1;
    const IntCochain d = coboundary(*C, chi);
    for (std::size_t e = 0; e < C->count(1); ++e) {
        const auto& v = C->simplex(1, e);
        CHECK(d.values[e] == static_cast<std::int64_t>(v[1] == 0) - static_cast<std::int64_t>(v[0] == 0));
    }
    for (const auto& K : {torus_complex(3, 3), tetra_sphere(), tetra_ball()})
        for (std::size_t k = 0; k < K->dimension(); ++k) {
            const IntCochain x = random_int(*K, k, 10 + k);
            CHECK(coboundary(*K, x) == alternating_sum(*K, x));
            if (k + 2 <= K->dimension()) CHECK(coboundary(*K, coboundary(*K, x)).is_zero());
        }
    // Stokes on the closed sphere: δx sums to zero over ∂[0123].
    const auto S = tetra_sphere();
    CHECK(sum(coboundary(*S, random_real(*S, 1, 3))) == 0);
    CHECK_THROWS_AS(coboundary(*S, zero_int(*S, 2)), ValidationError);
    CHECK(coboundary(*S, zero_int(*S, 2), Overflow::zero).values.empty());
}

TEST_CASE("d̃ squares to zero") {
    const auto B = tetra_ball();
    const auto C = circle_complex(5);
    const auto h = random_real(*C, 0, 4);
    const auto x = DifferentialCochain::make(*C, 1, zero_int(*C, 1), h, zero_real(*C, 1));
    const auto dx = d_tilde(*C, x);
    CHECK(dx.c.is_zero());
    CHECK(dx.h == -coboundary(*C, h));
    CHECK(dx.omega.is_zero());

    for (std::size_t k = 1; k <= 2; ++k)
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            RealCochain omega = k >= 2 ? random_real(*B, k, 100 + seed) : zero_real(*B, k);
            const auto y = DifferentialCochain::make(*B, k, random_int(*B, k, 200 + seed), random_real(*B, k - 1, 300 + seed), omega);
            CHECK(d_tilde(*B, d_tilde(*B, y)).is_zero());
        }
}

TEST_CASE("cocycles and morphisms") {
    const auto T = torus_complex(3, 3);
    const RealCochain a = random_real(*T, 1, 7);
    const DifferentialCocycle z = dch_object(T, a);
    CHECK(z.c().is_zero());
    CHECK(z.h() == a);
    CHECK(z.omega() == coboundary(*T, a));

    CHECK_THROWS_AS(DifferentialCocycle::make(T, zero_int(*T, 2), a, zero_real(*T, 2)), ValidationError);

    const IntCochain e = random_int(*T, 1, 8, 1);
    const RealCochain k = random_real(*T, 0, 9);
    const CocycleMorphism m = CocycleMorphism::from_source(z, e, k);
    CHECK(m.target().c() == z.c() + coboundary(*T, e));
    CHECK(m.target().h() == z.h() - coboundary(*T, k) - to_real(e));
    // A constant shift of k is invisible to δ; a non-constant one is not.
    CHECK_NOTHROW(CocycleMorphism::make(z, m.target(), e, k + uniform(*T, 0, 9)));
    CHECK_THROWS_AS(CocycleMorphism::make(z, m.target(), e, k + random_real(*T, 0, 10)), ValidationError);

    const CocycleMorphism inv = inverse_morphism(m);
    CHECK(morphisms_equal(compose_morphisms(inv, m), identity_morphism(z)));
    CHECK_THROWS_AS(compose_morphisms(m, m), ValidationError);

    // Gauge by an integer 0-cochain n.
    IntCochain n = random_int(*T, 0, 11, 2);
    const CocycleMorphism shifted =
        CocycleMorphism::from_source(z, e - coboundary(*T, n), k + to_real(n));
    CHECK(shifted.target() == m.target());
    CHECK(morphisms_equal(m, shifted));
    RealCochain half = zero_real(*T, 0);
    for (auto& v : half.values) v = Rational(1, 2);
    CHECK_FALSE(morphisms_equal(m, CocycleMorphism::from_source(z, e, k + half)));
}

TEST_CASE("groupoid and functor laws hold exhaustively") {
    for (const auto& K : {circle_complex(3), circle_complex(4)}) {
        for (const auto& r : groupoid_law_suite(K)) {
            INFO(r.law);
            CHECK(r.cases > 0);
            CHECK(r.failures == 0);
        }
        for (const auto& r : dch_functor_suite(K)) {
            INFO(r.law);
            CHECK(r.cases > 0);
            CHECK(r.failures == 0);
        }
    }
    CHECK_THROWS_AS(groupoid_law_suite(torus_complex(4, 4)), ValidationError);
}

TEST_CASE("circle maps and their winding") {
    const std::size_t N = 6;
    const auto C = circle_complex(N);
    // f(θ) = θ: lift i/N, each edge turns by ±1/N with its orientation.
    RealCochain lift = zero_real(*C, 0), pull = zero_real(*C, 1);
    for (std::size_t i = 0; i < N; ++i) lift.values[i] = Rational(static_cast<long>(i), static_cast<long>(N));
    Rational degree = 0;
    for (std::size_t e = 0; e < N; ++e) {
        const auto& v = C->simplex(1, e);
        const int sgn = (v[1] == (v[0] + 1) % N) ? 1 : -1;
        pull.values[e] = Rational(sgn, static_cast<long>(N));
        degree += sgn * pull.values[e];
    }
    CHECK(degree == 1);
    const CircleMap f(C, lift, pull);
    const IntCochain w = f.winding();
    // The winding is δf̃ - f*dθ, supported where the lift jumps back.
    std::int64_t oriented = 0;
    for (std::size_t e = 0; e < N; ++e) {
        const auto& v = C->simplex(1, e);
        oriented += ((v[1] == (v[0] + 1) % N) ? 1 : -1) * w.values[e];
    }
    CHECK(oriented == -1);
    CHECK(std::count_if(w.values.begin(), w.values.end(), [](auto x) { return x != 0; }) == 1);
    CHECK(CircleMap::from_winding(C, lift, w).pullback() == pull);
    CHECK_THROWS_AS(CircleMap(C, lift, uniform(*C, 1, Rational(1, 2))), ValidationError);

    const CircleMap g = f * f;
    CHECK(g.lift() == lift + lift);
    CHECK(g.winding() == w + w);
}

TEST_CASE("DCh on morphisms") {
    const auto C = circle_complex(5);
    const RealCochain a = uniform(*C, 1, Rational(2, 3));
    RealCochain lift = random_real(*C, 0, 12);
    const CircleMap f = CircleMap::from_winding(C, lift, random_int(*C, 1, 13, 1));
    const CocycleMorphism m = dch_morphism(f, a);
    CHECK(m.source() == dch_object(C, a));
    CHECK(m.target() == dch_object(C, a - f.pullback()));
    CHECK(to_real(m.e()) == f.pullback() - coboundary(*C, f.lift()));
    CHECK(m.k() == f.lift());

    // Shifting the lift by integers changes the representative, not the class.
    RealCochain shifted = lift;
    shifted.values[2] += 3;
    const CircleMap f2(C, shifted, f.pullback());
    CHECK(morphisms_equal(m, dch_morphism(f2, a)));
    // dch(fg) = dch(g) ∘ dch(f) on composable objects.
    const CircleMap g = CircleMap::from_winding(C, random_real(*C, 0, 14), random_int(*C, 1, 15, 1));
    const CocycleMorphism fg = dch_morphism(f * g, a);
    const CocycleMorphism comp = compose_morphisms(dch_morphism(g, a - f.pullback()), m);
    CHECK(morphisms_equal(fg, comp));
}

TEST_CASE("Smith normal form") {
    const std::vector<std::vector<std::vector<std::int64_t>>> cases{
        {{2, 4, 4}, {-6, 6, 12}, {10, -4, -16}},
        {{0, 0}, {0, 0}},
        {{1, 2, 3}, {4, 5, 6}, {7, 8, 9}, {1, 0, 1}},
        torus_complex(3, 3)->boundary_matrix(2),
        tetra_ball()->boundary_matrix(3),
    };
    for (const auto& A : cases) {
        const SmithForm S = smith_normal_form(A);
        CHECK(multiply(multiply(S.P, widen(A)), S.Q) == S.D);
        const Matrix QQ = multiply(S.Q, S.Q_inv);
        for (std::size_t i = 0; i < QQ.size(); ++i)
            for (std::size_t j = 0; j < QQ.size(); ++j) CHECK(QQ[i][j] == (i == j ? 1 : 0));
        CHECK(S.diagonal.size() == S.rank);
        for (std::size_t i = 0; i < S.rank; ++i) {
            CHECK(S.D[i][i] == S.diagonal[i]);
            CHECK(S.diagonal[i] > 0);
            if (i + 1 < S.rank) CHECK(S.diagonal[i + 1] % S.diagonal[i] == 0);
        }
        for (std::size_t i = 0; i < S.D.size(); ++i)
            for (std::size_t j = 0; j < S.D[i].size(); ++j)
                if (i != j || i >= S.rank) CHECK(S.D[i][j] == 0);
    }
    CHECK(smith_normal_form(cases[0]).diagonal == std::vector<Integer>{2, 6, 12});
}

TEST_CASE("integral lifts on the torus") {
    const auto T = torus_complex(4, 3);
    for (long total : {0L, 1L, 2L, -3L}) {
        const RealCochain omega = uniform(*T, 2, Rational(total));
        const LiftResult r = integral_lift(T, omega);
        CHECK(r.feasible);
        REQUIRE(r.cocycle);
        const auto& z = *r.cocycle;
        CHECK(to_real(z.c()) + coboundary(*T, z.h()) == omega);
        CHECK(coboundary(*T, z.c(), Overflow::zero).is_zero());
        // H²(T²) = Z: the integer class is the total.
        CHECK(sum(z.c()) == total);
        REQUIRE(r.periods.size() == 1);
        CHECK(r.periods[0].period == Rational(total) * (r.periods[0].cycle[0] > 0 ? 1 : -1));
    }
    for (const char* text : {"1/2", "1.3"}) {
        const RealCochain omega = uniform(*T, 2, parse_rational(text));
        const LiftResult r = integral_lift(T, omega);
        CHECK_FALSE(r.feasible);
        REQUIRE(r.certificate);
        Rational period = 0;
        for (std::size_t i = 0; i < r.certificate->size(); ++i) period += (*r.certificate)[i] * omega.values[i];
        CHECK_FALSE(is_integer(period));
        // The certificate is a cycle: ∂ of it vanishes.
        const auto d2 = T->boundary_matrix(2);
        for (const auto& row : d2) {
            std::int64_t acc = 0;
            for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * (*r.certificate)[j];
            CHECK(acc == 0);
        }
    }
    CHECK_THROWS_AS(integral_lift(tetra_ball(), random_real(*tetra_ball(), 2, 5)), ValidationError);
}

TEST_CASE("lifts on the sphere and the ball") {
    const auto S = tetra_sphere();
    const LiftResult r = integral_lift(S, uniform(*S, 2, Rational(2)));
    CHECK(r.feasible);
    CHECK(std::abs(sum(r.cocycle->c())) == 2);
    CHECK_FALSE(integral_lift(S, uniform(*S, 2, Rational(1, 3))).feasible);

    // H²(ball) = 0: every closed ω lifts with c = 0 up to coboundaries.
    const auto B = tetra_ball();
    const RealCochain omega = coboundary(*B, random_real(*B, 1, 6));
    const LiftResult rb = integral_lift(B, omega);
    CHECK(rb.feasible);
    // The only 2-cycle is ∂[0123], a boundary, so its period vanishes.
    REQUIRE(rb.periods.size() == 1);
    CHECK(rb.periods[0].period == 0);
}

TEST_CASE("sampled forms") {
    const auto T = torus_complex(4, 4);
    const RealCochain F = sample_two_form(*T, Expression::parse("1 + 0.3*sin(2*pi*x)*cos(2*pi*y)", {"x", "y"}));
    CHECK(std::abs(sum(F).convert_to<double>() - 1.0) < 1e-9);
    const LiftResult r = integral_lift(T, F, 1e-8);
    CHECK(r.feasible);
    CHECK(sum(r.cocycle->c()) == 1);

    // Stokes per triangle for the periodic form sin(2πx)/(2π) dy.
    const RealCochain a = sample_one_form(*T, Expression::parse("0", {"x", "y"}),
                                          Expression::parse("sin(2*pi*x)/(2*pi)", {"x", "y"}));
    const RealCochain da = coboundary(*T, a);
    const RealCochain dF = sample_two_form(*T, Expression::parse("cos(2*pi*x)", {"x", "y"}));
    for (std::size_t i = 0; i < da.values.size(); ++i)
        CHECK(std::abs((da.values[i] - dF.values[i]).convert_to<double>()) < 1e-9);
}
