#include "prequant/prequantum.hpp"

#include <algorithm>
#include <cmath>

#include "prequant/errors.hpp"

namespace pq {

// ---------------------------------------------------------------- Section

namespace {

std::optional<Box> merged_support(const std::optional<Box>& a, const std::optional<Box>& b) {
    if (!a || !b) return std::nullopt;
    Box out = *a;
    for (std::size_t i = 0; i < out.dim(); ++i) {
        out.lo[i] = std::min(out.lo[i], b->lo[i]);
        out.hi[i] = std::max(out.hi[i], b->hi[i]);
    }
    return out;
}

std::optional<Expression> merged_guard(const std::optional<Expression>& a, const std::optional<Expression>& b) {
    return a ? a : b;
}

} // namespace

Section::Section(Chart chart, ComplexField field, std::optional<Box> support)
    : chart_(std::move(chart)), field_(std::move(field)), support_(std::move(support)) {
    if (!same_variables(chart_.variables(), field_.variables()))
        throw ValidationError("section: values are not over the coordinates of chart '" + chart_.name() + "'");
    if (support_) {
        if (support_->dim() != chart_.dimension()) throw ValidationError("section: support box dimension mismatch");
        for (std::size_t i = 0; i < support_->dim(); ++i)
            if (!(support_->hi[i] > support_->lo[i])) throw ValidationError("section: empty support box");
    }
}

Section Section::parse(const Chart& chart, std::string_view re, std::string_view im, std::optional<Box> support) {
    return Section(chart, ComplexField(chart.parse(re), chart.parse(im)), std::move(support));
}

cplx Section::evaluate(std::span<const double> x) const {
    if (support_ && !support_->contains(x)) return {0.0, 0.0};
    if (guard_ && std::abs(guard_->evaluate(x)) <= 1e-12)
        throw SingularFormError("symplectic form is singular (|det Ω| <= 1e-12) at the requested point");
    return field_.evaluate(x);
}

Section Section::with_guard(std::optional<Expression> guard) const {
    Section out = *this;
    out.guard_ = std::move(guard);
    return out;
}

Section Section::operator+(const Section& other) const {
    require_same_chart(chart_, other.chart_, "section sum");
    std::optional<ComplexField> f;
    if (symbolic() && other.symbolic()) {
        f.emplace(field_.re() + other.field_.re(), field_.im() + other.field_.im());
    } else {
        f.emplace(chart_.variables(), [a = *this, b = other](std::span<const double> x) { return a(x) + b(x); });
    }
    Section out(chart_, *f, merged_support(support_, other.support_));
    out.guard_ = merged_guard(guard_, other.guard_);
    return out;
}

Section Section::operator-(const Section& other) const { return *this + other.times(cplx{-1.0, 0.0}); }

Section Section::times(const Expression& a, const Expression& b) const {
    std::optional<ComplexField> f;
    if (symbolic()) {
        const Expression& u = field_.re();
        const Expression& v = field_.im();
        f.emplace(a * u - b * v, a * v + b * u);
    } else {
        f.emplace(chart_.variables(), [s = *this, a, b](std::span<const double> x) {
            return cplx{a.evaluate(x), b.evaluate(x)} * s(x);
        });
    }
    Section out(chart_, *f, support_);
    out.guard_ = guard_;
    return out;
}

Section Section::times(const Expression& a) const { return times(a, chart_.constant(0.0)); }

Section Section::times(cplx c) const { return times(chart_.constant(c.real()), chart_.constant(c.imag())); }

Section apply(const VectorField& X, const Section& s) {
    require_same_chart(X.chart(), s.chart(), "vector field on section");
    std::optional<ComplexField> f;
    if (s.symbolic()) {
        f.emplace(X.apply(s.field().re()), X.apply(s.field().im()));
    } else {
        f.emplace(s.chart().variables(), [X, field = s.field()](std::span<const double> x) {
            cplx acc{0.0, 0.0};
            for (std::size_t i = 0; i < X.dimension(); ++i) {
                const double c = X[i].evaluate(x);
                if (c != 0.0) acc += c * field.partial(x, i);
            }
            return acc;
        });
    }
    return Section(s.chart(), *f, s.support()).with_guard(merged_guard(s.guard(), X.singular_guard()));
}

Section bump_section(const Chart& chart, const Box& support, int exponent, std::string_view modulation_re,
                     std::string_view modulation_im) {
    if (support.dim() != chart.dimension()) throw ValidationError("bump: support box dimension mismatch");
    if (exponent < 1) throw ValidationError("bump: exponent must be >= 1");
    Expression bump = chart.constant(1.0);
    for (std::size_t i = 0; i < chart.dimension(); ++i) {
        const double c = 0.5 * (support.lo[i] + support.hi[i]);
        const double w = 0.5 * (support.hi[i] - support.lo[i]);
        const Expression u = (chart.coordinate(i) - c) / w;
        bump = bump * pow(1.0 - u * u, static_cast<double>(exponent));
    }
    return Section(chart, ComplexField(bump * chart.parse(modulation_re), bump * chart.parse(modulation_im)), support);
}

// ---------------------------------------------------------------- Bundles

PrequantumBundle::PrequantumBundle(SymplecticStructure omega, OneForm theta, double kappa, BundleCertificate cert)
    : omega_(std::move(omega)), theta_(std::move(theta)), kappa_(kappa), certificate_(cert) {}

PrequantumBundle PrequantumBundle::certify(SymplecticStructure omega, OneForm theta, double kappa,
                                           std::size_t samples, std::uint64_t seed) {
    require_same_chart(omega.chart(), theta.chart(), "prequantum bundle");
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ValidationError("prequantum bundle: κ must be positive");
    const TwoForm diff = exterior_derivative(theta) - omega.form();
    const PointCloud pts = omega.chart().sample(samples, seed);
    double worst = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) worst = std::max(worst, diff.evaluate(pts[k]).cwiseAbs().maxCoeff());
    if (!(worst < 1e-9))
        throw CertificationError("prequantum bundle: dθ differs from ω (residual " + std::to_string(worst) + ")",
                                 worst);
    return PrequantumBundle(std::move(omega), std::move(theta), kappa, {seed, pts.size(), worst});
}

PrequantumBundle cotangent_bundle(std::size_t n, double kappa) {
    return PrequantumBundle::certify(canonical_symplectic(n), tautological_one_form(n), kappa);
}

PrequantumBundle punctured_plane_bundle() {
    const Chart chart = polar_chart();
    OneForm alpha(chart, {chart.constant(0.0), chart.parse("r^2")});
    auto omega = SymplecticStructure::certify(exterior_derivative(alpha));
    return PrequantumBundle::certify(std::move(omega), std::move(alpha), 1.0);
}

// -------------------------------------------------------------- Operators

Section covariant_derivative(const PrequantumBundle& bundle, const Section& s, const VectorField& X) {
    require_same_chart(bundle.chart(), s.chart(), "covariant derivative");
    require_same_chart(bundle.chart(), X.chart(), "covariant derivative");
    const Expression phase = bundle.kappa() * bundle.potential().pair(X);
    return apply(X, s) + s.times(bundle.chart().constant(0.0), phase).with_guard(X.singular_guard());
}

Section curvature(const PrequantumBundle& bundle, const VectorField& X, const VectorField& Y, const Section& s) {
    const Section xy = covariant_derivative(bundle, covariant_derivative(bundle, s, Y), X);
    const Section yx = covariant_derivative(bundle, covariant_derivative(bundle, s, X), Y);
    return xy - yx - covariant_derivative(bundle, s, lie_bracket(X, Y));
}

double max_difference(const Section& a, const Section& b, const PointCloud& points) {
    return kernels::max_abs(points, [&](std::span<const double> x) { return std::abs(a(x) - b(x)); });
}

double curvature_residual(const PrequantumBundle& bundle, const VectorField& X, const VectorField& Y,
                          const Section& s, const PointCloud& points) {
    const Section lhs = curvature(bundle, X, Y, s);
    const Expression w = bundle.symplectic().form().apply(X, Y);
    const Section rhs = s.times(bundle.chart().constant(0.0), bundle.kappa() * w);
    return max_difference(lhs, rhs, points);
}

Section prequantum_operator(const PrequantumBundle& bundle, const Expression& f, const Section& s) {
    const VectorField xi = hamiltonian_vector_field(bundle.symplectic(), f);
    return covariant_derivative(bundle, s, xi) - s.times(bundle.chart().constant(0.0), bundle.kappa() * f);
}

CommutatorCheck commutator_check(const PrequantumBundle& bundle, const Expression& f, const Expression& g,
                                 const Section& s, const PointCloud& points) {
    const SymplecticStructure& omega = bundle.symplectic();
    const Expression fg = poisson_bracket(f, g, omega).expression();

    const Section lhs = prequantum_operator(bundle, f, prequantum_operator(bundle, g, s)) -
                        prequantum_operator(bundle, g, prequantum_operator(bundle, f, s));
    const Section rhs = prequantum_operator(bundle, fg, s);

    const VectorField xf = hamiltonian_vector_field(omega, f);
    const VectorField xg = hamiltonian_vector_field(omega, g);
    const Section conn = covariant_derivative(bundle, covariant_derivative(bundle, s, xg), xf) -
                         covariant_derivative(bundle, covariant_derivative(bundle, s, xf), xg);
    const Section conn_rhs = covariant_derivative(bundle, s, hamiltonian_vector_field(omega, fg)) +
                             s.times(bundle.chart().constant(0.0), bundle.kappa() * fg);

    return {max_difference(lhs, rhs, points), max_difference(conn, conn_rhs, points)};
}

cplx l2_inner_product(const PrequantumBundle& bundle, const Section& s, const Section& s2,
                      const QuadratureGrid& grid, Exec exec) {
    require_same_chart(bundle.chart(), s.chart(), "L2 pairing");
    require_same_chart(bundle.chart(), s2.chart(), "L2 pairing");
    if (grid.box.dim() != bundle.chart().dimension()) throw ValidationError("L2 pairing: grid dimension mismatch");
    for (const Section* sec : {&s, &s2}) {
        if (!sec->support())
            throw ValidationError("L2 pairing: sections must be compactly supported (no support box given)");
        if (!grid.box.contains(*sec->support()))
            throw ValidationError("L2 pairing: section support exceeds the quadrature grid box");
    }
    const Expression rho = wedge_top_power(bundle.symplectic());
    return kernels::simpson(
        grid, [&](std::span<const double> x) { return std::conj(s(x)) * s2(x) * std::abs(rho.evaluate(x)); }, exec);
}

double skew_hermiticity_check(const PrequantumBundle& bundle, const Expression& f, const Section& s,
                              const Section& s2, const QuadratureGrid& grid, Exec exec) {
    const Section qs = prequantum_operator(bundle, f, s);
    const Section qs2 = prequantum_operator(bundle, f, s2);
    return std::abs(l2_inner_product(bundle, qs, s2, grid, exec) + l2_inner_product(bundle, s, qs2, grid, exec));
}

} // namespace pq
