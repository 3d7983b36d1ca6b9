#include "prequant/hamilton.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>

#include "prequant/errors.hpp"

namespace pq {

namespace {
std::atomic<int> g_sign{static_cast<int>(SignConvention::minus_df)};

double sign_factor() { return sign_convention() == SignConvention::minus_df ? 1.0 : -1.0; }
} // namespace

void set_sign_convention(SignConvention convention) { g_sign.store(static_cast<int>(convention)); }
SignConvention sign_convention() { return static_cast<SignConvention>(g_sign.load()); }

HamiltonianSystem::HamiltonianSystem(SymplecticStructure symplectic, Expression hamiltonian)
    : symplectic_(std::move(symplectic)), hamiltonian_(std::move(hamiltonian)) {
    if (!same_variables(symplectic_.chart().variables(), hamiltonian_.variables()))
        throw ValidationError("Hamiltonian variables must equal the chart coordinates");
}

VectorField hamiltonian_vector_field(const SymplecticStructure& omega, const Expression& f) {
    const Chart& chart = omega.chart();
    if (!same_variables(chart.variables(), f.variables()))
        throw ValidationError("Hamiltonian vector field: function is not over the chart coordinates");
    const std::size_t n = chart.dimension();
    const double s = sign_factor();
    std::vector<Expression> grad;
    for (std::size_t j = 0; j < n; ++j) grad.push_back(f.differentiate(j));
    std::vector<Expression> comps;
    for (std::size_t i = 0; i < n; ++i) {
        Expression c = chart.constant(0.0);
        for (std::size_t j = 0; j < n; ++j) c = c + omega.inverse()[i][j] * grad[j];
        comps.push_back(s * c);
    }
    VectorField X(chart, std::move(comps));
    if (omega.determinant()) X = X.with_singular_guard(*omega.determinant());
    return X;
}

Eigen::VectorXd hamiltonian_vector_at(const SymplecticStructure& omega, const Expression& f,
                                      std::span<const double> x) {
    Eigen::MatrixXd m = omega.form().evaluate(x);
    if (std::abs(m.determinant()) <= 1e-12)
        throw SingularFormError("symplectic form is singular (|det Ω| <= 1e-12) at the requested point");
    Eigen::VectorXd rhs(m.rows());
    for (Eigen::Index j = 0; j < m.rows(); ++j)
        rhs(j) = -sign_factor() * f.differentiate(static_cast<std::size_t>(j)).evaluate(x);
    return m.transpose().partialPivLu().solve(rhs);
}

double defining_equation_residual(const SymplecticStructure& omega, const Expression& f, const PointCloud& points,
                                  std::uint64_t seed) {
    const VectorField X = hamiltonian_vector_field(omega, f);
    const std::size_t n = omega.dimension();
    std::vector<Expression> grad;
    for (std::size_t j = 0; j < n; ++j) grad.push_back(f.differentiate(j));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<std::vector<double>> tests(points.size(), std::vector<double>(n));
    for (auto& t : tests)
        for (auto& v : t) v = normal(rng);
    double worst = 0.0;
    for (std::size_t k = 0; k < points.size(); ++k) {
        auto x = points[k];
        Eigen::VectorXd xi = X.evaluate(x);
        std::vector<double> xv(xi.data(), xi.data() + xi.size());
        double df = 0.0;
        for (std::size_t j = 0; j < n; ++j) df += grad[j].evaluate(x) * tests[k][j];
        worst = std::max(worst, std::abs(omega.form().apply(x, xv, tests[k]) + sign_factor() * df));
    }
    return worst;
}

ScalarField::ScalarField(Expression expression, std::optional<Expression> singular_guard)
    : expression_(std::move(expression)), guard_(std::move(singular_guard)) {}

double ScalarField::evaluate(std::span<const double> x) const {
    if (guard_ && std::abs(guard_->evaluate(x)) <= 1e-12)
        throw SingularFormError("symplectic form is singular (|det Ω| <= 1e-12) at the requested point");
    return expression_.evaluate(x);
}

ScalarField poisson_bracket(const Expression& f, const Expression& g, const SymplecticStructure& omega) {
    const VectorField X = hamiltonian_vector_field(omega, f);
    return ScalarField(X.apply(g), omega.determinant());
}

VectorField lie_bracket(const VectorField& X, const VectorField& Y) {
    require_same_chart(X.chart(), Y.chart(), "Lie bracket");
    std::vector<Expression> c;
    for (std::size_t i = 0; i < X.dimension(); ++i) c.push_back(X.apply(Y[i]) - Y.apply(X[i]));
    VectorField out(X.chart(), std::move(c));
    if (X.singular_guard()) out = out.with_singular_guard(*X.singular_guard());
    else if (Y.singular_guard()) out = out.with_singular_guard(*Y.singular_guard());
    return out;
}

TwoForm lie_derivative_of_form(const VectorField& X, const TwoForm& omega) {
    require_same_chart(X.chart(), omega.chart(), "Lie derivative");
    const Chart& chart = omega.chart();
    const std::size_t n = chart.dimension();
    // ι(X)dω with (dω)_ijk = ∂_iΩ_jk + ∂_jΩ_ki + ∂_kΩ_ij.
    auto d_omega = [&](std::size_t i, std::size_t j, std::size_t k) {
        return omega(j, k).differentiate(i) + omega(k, i).differentiate(j) + omega(i, j).differentiate(k);
    };
    const TwoForm exact_part = exterior_derivative(omega.contract(X));
    std::vector<TwoForm::Entry> entries;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k) {
            Expression v = exact_part(j, k);
            for (std::size_t i = 0; i < n; ++i)
                if (i != j && i != k) v = v + X[i] * d_omega(i, j, k);
            entries.push_back({j, k, v});
        }
    return TwoForm::from_upper(chart, entries);
}

bool is_separable(const Expression& hamiltonian, std::size_t n) {
    for (const auto& term : hamiltonian.additive_terms()) {
        bool has_q = false, has_p = false;
        for (std::size_t i = 0; i < n; ++i) {
            has_q = has_q || term.depends_on(i);
            has_p = has_p || term.depends_on(n + i);
        }
        if (has_q && has_p) return false;
    }
    return true;
}

namespace {

struct Splitting {
    std::vector<Expression> grad_kinetic;   // ∂T/∂p_i
    std::vector<Expression> grad_potential; // ∂V/∂q_i
};

Splitting split(const Expression& h, std::size_t n) {
    const auto& vars = h.variables();
    Expression kinetic = Expression::constant(0.0, vars);
    Expression potential = Expression::constant(0.0, vars);
    for (const auto& term : h.additive_terms()) {
        bool has_p = false;
        for (std::size_t i = 0; i < n; ++i) has_p = has_p || term.depends_on(n + i);
        if (has_p) kinetic = kinetic + term;
        else potential = potential + term;
    }
    Splitting s;
    for (std::size_t i = 0; i < n; ++i) {
        s.grad_kinetic.push_back(kinetic.differentiate(n + i));
        s.grad_potential.push_back(potential.differentiate(i));
    }
    return s;
}

} // namespace

Trajectory integrate_flow(const HamiltonianSystem& sys, std::span<const double> x0, double T, double dt,
                          const FlowOptions& options) {
    const Chart& chart = sys.chart();
    const std::size_t dim = chart.dimension();
    if (x0.size() != dim) throw ValidationError("initial point has the wrong dimension");
    if (!chart.contains(x0)) throw ValidationError("initial point is outside the chart domain");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("time step must be positive");
    if (!(T >= 0.0) || !std::isfinite(T)) throw ValidationError("duration must be nonnegative");
    if (options.record_stride == 0) throw ValidationError("record stride must be >= 1");

    std::size_t steps = static_cast<std::size_t>(std::llround(T / dt));
    if (std::abs(static_cast<double>(steps) * dt - T) > 1e-9 * std::max(1.0, T))
        steps = static_cast<std::size_t>(std::ceil(T / dt));

    const std::size_t n = dim / 2;
    const bool can_leapfrog = sys.symplectic().is_canonical() && is_separable(sys.hamiltonian(), n);
    bool leapfrog = false;
    switch (options.integrator) {
    case Integrator::automatic: leapfrog = can_leapfrog; break;
    case Integrator::leapfrog:
        if (!can_leapfrog)
            throw ValidationError("leapfrog needs the canonical form and a Hamiltonian T(p) + V(q)");
        leapfrog = true;
        break;
    case Integrator::rk4: leapfrog = false; break;
    }

    Trajectory out;
    out.dt = dt;
    out.integrator = leapfrog ? "leapfrog" : "rk4";
    out.stride = options.record_stride;
    out.states = PointCloud(dim);

    const Expression& H = sys.hamiltonian();
    std::vector<double> x(x0.begin(), x0.end());
    const double h0 = H.evaluate(x);
    out.states.push_back(x);
    out.times.push_back(0.0);

    const double s = sign_factor();
    std::optional<Splitting> sp;
    std::optional<VectorField> field;
    if (leapfrog) sp = split(H, n);
    else field = hamiltonian_vector_field(sys.symplectic(), H);

    std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    auto eval_field = [&](const std::vector<double>& at, std::vector<double>& outv) {
        Eigen::VectorXd v = field->evaluate(at);
        for (std::size_t i = 0; i < dim; ++i) outv[i] = v(static_cast<Eigen::Index>(i));
    };

    double t = 0.0;
    for (std::size_t step = 1; step <= steps; ++step) {
        const double h = std::min(dt, T - t);
        if (leapfrog) {
            for (std::size_t i = 0; i < n; ++i) tmp[i] = sp->grad_potential[i].evaluate(x);
            for (std::size_t i = 0; i < n; ++i) x[n + i] -= s * 0.5 * h * tmp[i];
            for (std::size_t i = 0; i < n; ++i) tmp[i] = sp->grad_kinetic[i].evaluate(x);
            for (std::size_t i = 0; i < n; ++i) x[i] += s * h * tmp[i];
            for (std::size_t i = 0; i < n; ++i) tmp[i] = sp->grad_potential[i].evaluate(x);
            for (std::size_t i = 0; i < n; ++i) x[n + i] -= s * 0.5 * h * tmp[i];
        } else {
            try {
                eval_field(x, k1);
                for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
                eval_field(tmp, k2);
                for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
                eval_field(tmp, k3);
                for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + h * k3[i];
                eval_field(tmp, k4);
            } catch (const DomainError&) {
                throw DomainExitError("trajectory left the chart domain at step " + std::to_string(step), step);
            }
            for (std::size_t i = 0; i < dim; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t = (step == steps) ? T : t + h;
        if (!chart.contains(x))
            throw DomainExitError("trajectory left the chart domain at step " + std::to_string(step), step);
        const double dev = std::abs(H.evaluate(x) - h0);
        out.max_energy_deviation = std::max(out.max_energy_deviation, dev);
        if (step % options.record_stride == 0 || step == steps) {
            out.states.push_back(x);
            out.times.push_back(t);
        }
    }
    out.steps = steps;
    out.energy_drift = std::abs(H.evaluate(x) - h0);
    return out;
}

} // namespace pq
