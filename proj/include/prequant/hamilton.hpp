#pragma once

// Hamiltonian vector fields, Poisson brackets, Lie brackets, Lie derivatives
// of 2-forms and Hamiltonian flows.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prequant/geometry.hpp"

namespace pq {

// ω(Ξ_f, ·) = -df is the default. The opposite convention ω(Ξ_f, ·) = df
// flips every Hamiltonian vector field (and hence every bracket) globally.
enum class SignConvention { minus_df, plus_df };
void set_sign_convention(SignConvention convention);
SignConvention sign_convention();

class HamiltonianSystem {
public:
    HamiltonianSystem(SymplecticStructure symplectic, Expression hamiltonian);

    const SymplecticStructure& symplectic() const noexcept { return symplectic_; }
    const Expression& hamiltonian() const noexcept { return hamiltonian_; }
    const Chart& chart() const noexcept { return symplectic_.chart(); }

private:
    SymplecticStructure symplectic_;
    Expression hamiltonian_;
};

VectorField hamiltonian_vector_field(const SymplecticStructure& omega, const Expression& f);
inline VectorField hamiltonian_vector_field(const HamiltonianSystem& sys) {
    return hamiltonian_vector_field(sys.symplectic(), sys.hamiltonian());
}

// Independent pointwise route: solves Ωᵀ Ξ = ∓∇f at x by partial-pivoting
// elimination. Throws SingularFormError when |det Ω(x)| <= 1e-12.
Eigen::VectorXd hamiltonian_vector_at(const SymplecticStructure& omega, const Expression& f,
                                      std::span<const double> x);

// max over points and random test vectors Y of |ω(Ξ_f, Y) ± df(Y)|.
double defining_equation_residual(const SymplecticStructure& omega, const Expression& f, const PointCloud& points,
                                  std::uint64_t seed);

// Scalar field backed by an expression, refusing points where the guarding
// determinant is singular.
class ScalarField {
public:
    ScalarField(Expression expression, std::optional<Expression> singular_guard = std::nullopt);
    const Expression& expression() const noexcept { return expression_; }
    double evaluate(std::span<const double> x) const;
    double operator()(std::span<const double> x) const { return evaluate(x); }

private:
    Expression expression_;
    std::optional<Expression> guard_;
};

// {f, g} = Ξ_f(g).
ScalarField poisson_bracket(const Expression& f, const Expression& g, const SymplecticStructure& omega);

// [X, Y]^i = X(Y^i) - Y(X^i).
VectorField lie_bracket(const VectorField& X, const VectorField& Y);

// ℒ_X ω = ι(X)dω + d(ι(X)ω).
TwoForm lie_derivative_of_form(const VectorField& X, const TwoForm& omega);

enum class Integrator { automatic, leapfrog, rk4 };

struct Trajectory {
    double dt = 0.0;
    std::string integrator;      // "leapfrog" or "rk4"
    std::size_t stride = 1;      // states recorded every `stride` steps
    std::size_t steps = 0;       // steps actually taken
    PointCloud states;           // includes x0 and the final state
    std::vector<double> times;
    double energy_drift = 0.0;   // |H(x_final) - H(x0)|
    double max_energy_deviation = 0.0; // max over all steps of |H(x_t) - H(x0)|
};

struct FlowOptions {
    Integrator integrator = Integrator::automatic;
    std::size_t record_stride = 1;
};

// Flow of Ξ_H from x0 over [0, T] in steps of dt (the last step is shortened
// to land on T). Leapfrog is used for the canonical form with a separable
// H = T(p) + V(q); otherwise classical RK4. Throws DomainExitError with the
// index of the first step that leaves the chart.
Trajectory integrate_flow(const HamiltonianSystem& sys, std::span<const double> x0, double T, double dt,
                          const FlowOptions& options = {});

// True when H splits syntactically into terms depending on q only or p only.
bool is_separable(const Expression& hamiltonian, std::size_t n);

} // namespace pq
