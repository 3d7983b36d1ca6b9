#pragma once

// Discrete differential cohomology: integer and real (exact rational)
// cochains on finite simplicial complexes, the complex DC• with
// d̃(c, h, ω) = (δc, ω - c - δh, δω), differential 2-cocycles and their
// morphisms, the DCh functor on trivial circle bundles, and integral lifts.
//
// Objects satisfy ω = c + δh; a morphism [e, k] from (c, h, ω) to
// (c', h', ω) satisfies c' - c = δe and h' - h = -δk - e.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "prequant/expr.hpp"

namespace pq::dc {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Exact parse of "-12", "1.3", "2.5e-3" or "7/4".
Rational parse_rational(std::string_view text);
std::string to_string(const Rational& r);
bool is_integer(const Rational& r);
// Nearest integer, ties away from zero.
Integer round_rational(const Rational& r);

class SimplicialComplex {
public:
    // simplices[k] lists the k-simplices as ordered vertex tuples; the order
    // fixes the orientation. Every face of a listed simplex must be listed
    // (with either orientation) one dimension down.
    SimplicialComplex(std::string name, std::vector<std::vector<std::vector<std::size_t>>> simplices);

    const std::string& name() const noexcept { return name_; }
    std::size_t dimension() const noexcept { return simplices_.size() - 1; }
    std::size_t count(std::size_t k) const { return k < simplices_.size() ? simplices_[k].size() : 0; }
    std::size_t total_simplices() const;
    const std::vector<std::size_t>& simplex(std::size_t k, std::size_t i) const { return simplices_.at(k).at(i); }

    struct Incidence {
        std::size_t face;
        int sign;
    };
    // Faces of the i-th k-simplex with orientation signs (k >= 1).
    const std::vector<Incidence>& boundary(std::size_t k, std::size_t i) const { return boundary_.at(k).at(i); }
    // Dense ∂_k as an integer matrix (rows: (k-1)-simplices).
    std::vector<std::vector<std::int64_t>> boundary_matrix(std::size_t k) const;
    bool boundary_squared_zero() const;

    // Planar positions of the vertices of each 1- and 2-simplex (unwrapped
    // across the period for tori); empty when the complex has no geometry.
    using Point = std::array<double, 2>;
    bool has_geometry() const noexcept { return !geometry_.empty(); }
    const std::vector<Point>& simplex_points(std::size_t k, std::size_t i) const { return geometry_.at(k).at(i); }
    void set_geometry(std::vector<std::vector<std::vector<Point>>> points);

private:
    std::string name_;
    std::vector<std::vector<std::vector<std::size_t>>> simplices_;
    std::vector<std::vector<std::vector<Incidence>>> boundary_;
    std::vector<std::vector<std::vector<Point>>> geometry_;
};

using Complex = std::shared_ptr<const SimplicialComplex>;

// N-gon, N >= 3.
Complex circle_complex(std::size_t n);
// m×n periodic grid, each square split along its diagonal; m, n >= 3.
// Vertex (i, j) sits at (i/m, j/n) in the unit square.
Complex torus_complex(std::size_t m, std::size_t n);
// Boundary of the tetrahedron, oriented as ∂[0123].
Complex tetra_sphere();
// The solid tetrahedron.
Complex tetra_ball();

template <class T>
struct Cochain {
    std::size_t degree = 0;
    std::vector<T> values;

    Cochain operator+(const Cochain& o) const;
    Cochain operator-(const Cochain& o) const;
    Cochain operator-() const;
    bool operator==(const Cochain& o) const = default;
    bool is_zero() const;
};

using IntCochain = Cochain<std::int64_t>;
using RealCochain = Cochain<Rational>;

IntCochain zero_int(const SimplicialComplex& K, std::size_t degree);
RealCochain zero_real(const SimplicialComplex& K, std::size_t degree);
RealCochain to_real(const IntCochain& c);

// What to do with δ of a cochain of top degree: refuse, or return the
// (empty) cochain on the nonexistent (k+1)-simplices.
enum class Overflow { error, zero };

IntCochain coboundary(const SimplicialComplex& K, const IntCochain& x, Overflow overflow = Overflow::error);
RealCochain coboundary(const SimplicialComplex& K, const RealCochain& x, Overflow overflow = Overflow::error);

// (c, h, ω) of degree k: c ∈ C^k(Z), h ∈ C^{k-1}(R) (empty for k = 0),
// ω ∈ C^k(R) standing for the simplex integrals of a k-form, zero for k < 2.
struct DifferentialCochain {
    std::size_t degree = 0;
    IntCochain c;
    RealCochain h;
    RealCochain omega;

    static DifferentialCochain make(const SimplicialComplex& K, std::size_t degree, IntCochain c, RealCochain h,
                                    RealCochain omega);
    bool is_zero() const;
    bool operator==(const DifferentialCochain& o) const = default;
};

DifferentialCochain d_tilde(const SimplicialComplex& K, const DifferentialCochain& x);

class DifferentialCocycle {
public:
    // Checks δc = 0, δω = 0 and |ω - c - δh| <= tolerance.
    static DifferentialCocycle make(Complex K, IntCochain c, RealCochain h, RealCochain omega,
                                    double tolerance = 1e-9);

    const Complex& complex() const noexcept { return K_; }
    const IntCochain& c() const noexcept { return c_; }
    const RealCochain& h() const noexcept { return h_; }
    const RealCochain& omega() const noexcept { return omega_; }
    DifferentialCochain as_cochain() const;

    // Component-wise equality on the same complex.
    bool operator==(const DifferentialCocycle& o) const;

private:
    friend class CocycleMorphism;
    DifferentialCocycle(Complex K, IntCochain c, RealCochain h, RealCochain omega);
    Complex K_;
    IntCochain c_;
    RealCochain h_;
    RealCochain omega_;
};

class CocycleMorphism {
public:
    // Checks c' - c = δe, h' - h = -δk - e and ω' = ω.
    static CocycleMorphism make(DifferentialCocycle source, DifferentialCocycle target, IntCochain e, RealCochain k);
    // The morphism [e, k] out of `source`; the target is determined.
    static CocycleMorphism from_source(DifferentialCocycle source, IntCochain e, RealCochain k);

    const DifferentialCocycle& source() const noexcept { return source_; }
    const DifferentialCocycle& target() const noexcept { return target_; }
    const IntCochain& e() const noexcept { return e_; }
    const RealCochain& k() const noexcept { return k_; }

private:
    CocycleMorphism(DifferentialCocycle s, DifferentialCocycle t, IntCochain e, RealCochain k);
    DifferentialCocycle source_;
    DifferentialCocycle target_;
    IntCochain e_;
    RealCochain k_;
};

CocycleMorphism identity_morphism(const DifferentialCocycle& z);
// m2 ∘ m1 = [e1 + e2, k1 + k2]; throws ValidationError unless
// m1.target() == m2.source().
CocycleMorphism compose_morphisms(const CocycleMorphism& m2, const CocycleMorphism& m1);
CocycleMorphism inverse_morphism(const CocycleMorphism& m);
// Equal classes modulo d̃(m, 0, 0), m an integer 0-cochain: true iff
// m := -(k_a - k_b) is integral and e_a - e_b = δm.
bool morphisms_equal(const CocycleMorphism& a, const CocycleMorphism& b);

// A map f: K → S¹ given by a real lift f̃ per vertex and the edge integrals
// of f*dθ. δf̃ - f*dθ must be integral and f*dθ closed.
class CircleMap {
public:
    CircleMap(Complex K, RealCochain lift, RealCochain pullback);
    // f*dθ = δf̃ - winding; the winding must be an integer cocycle.
    static CircleMap from_winding(Complex K, RealCochain lift, IntCochain winding);

    const Complex& complex() const noexcept { return K_; }
    const RealCochain& lift() const noexcept { return lift_; }
    const RealCochain& pullback() const noexcept { return pullback_; }
    // δf̃ - f*dθ.
    IntCochain winding() const;

    // Pointwise product of circle-valued maps: lifts and pullbacks add.
    CircleMap operator*(const CircleMap& o) const;

private:
    Complex K_;
    RealCochain lift_;
    RealCochain pullback_;
};

// DCh(M × S¹, a + dθ) = (0, a, δa).
DifferentialCocycle dch_object(const Complex& K, const RealCochain& a);
// The gauge transformation f from (M × S¹, a + dθ) to (M × S¹, a' + dθ),
// a = a' + f*dθ, as the morphism [f*dθ - δf̃, f̃] from dch_object(a) to
// dch_object(a').
CocycleMorphism dch_morphism(const CircleMap& f, const RealCochain& a);

// Exhaustive law checks over finite families of morphisms out of
// dch_object(K, a0), a0 = (1/3, 2/3, 1, ...). The families are
//   F1: e ∈ {-1,0,1}^edges, k ∈ {0,1/2}^vertices      (units, inverses, gauge)
//   F2: e ∈ {-1,0,1} on edges 0,1 and k ∈ {0,1/2} on vertices 0,1
//       (associativity over all chains of three)
// and for the functor, maps with lift ∈ {0,1/2}^vertices and winding
// ∈ {-1,0,1}^edges (lift independence) and their restriction to vertex 0 and
// edges 0, last (composition). Refuses complexes where F1 exceeds 10^5.
struct LawReport {
    std::string law;
    std::size_t cases = 0;
    std::size_t failures = 0;
};
std::vector<LawReport> groupoid_law_suite(const Complex& K);
std::vector<LawReport> dch_functor_suite(const Complex& K);

struct SmithForm {
    std::vector<std::vector<Integer>> D;     // P·A·Q
    std::vector<std::vector<Integer>> P;
    std::vector<std::vector<Integer>> Q;
    std::vector<std::vector<Integer>> Q_inv;
    std::size_t rank = 0;
    std::vector<Integer> diagonal;            // d_1 | d_2 | …, nonzero
};
SmithForm smith_normal_form(const std::vector<std::vector<std::int64_t>>& A);

struct PeriodEntry {
    std::vector<std::int64_t> cycle; // coefficients on the 2-simplices
    Rational period;
    bool integral = false;
};

struct LiftResult {
    bool feasible = false;
    std::optional<DifferentialCocycle> cocycle;
    std::vector<PeriodEntry> periods;                // over a Z-basis of the 2-cycles
    std::optional<std::vector<std::int64_t>> certificate; // a 2-cycle with non-integral period
};

// Integer 2-cocycle c and real 1-cochain h with ω = c + δh, or a certificate
// of infeasibility. Throws ValidationError when δω != 0.
LiftResult integral_lift(const Complex& K, const RealCochain& omega, double tolerance = 1e-9);

// Simplex integrals of smooth forms on a complex with geometry: A dx + B dy
// over edges and F dx∧dy over triangles, with expressions in (x, y), by the
// composite midpoint rule refined until two levels agree to 1e-9. The
// results are converted exactly from the floating-point values.
RealCochain sample_one_form(const SimplicialComplex& K, const Expression& A, const Expression& B);
RealCochain sample_two_form(const SimplicialComplex& K, const Expression& F);

} // namespace pq::dc
