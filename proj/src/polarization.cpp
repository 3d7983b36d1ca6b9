#include "prequant/polarization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "prequant/errors.hpp"

namespace pq {

std::vector<double> LeafQuotient::lift(std::span<const double> y, std::span<const double> t) const {
    if (y.size() != transverse.size() || t.size() != along.size())
        throw ValidationError("leaf quotient: lift dimension mismatch");
    std::vector<double> x(transverse.size() + along.size(), 0.0);
    for (std::size_t i = 0; i < transverse.size(); ++i) x[transverse[i]] = y[i];
    for (std::size_t i = 0; i < along.size(); ++i) x[along[i]] = t[i];
    return x;
}

namespace {

Eigen::MatrixXd frame_matrix(const std::vector<VectorField>& frame, std::span<const double> x) {
    Eigen::MatrixXd A(frame.front().dimension(), static_cast<Eigen::Index>(frame.size()));
    for (std::size_t k = 0; k < frame.size(); ++k) A.col(static_cast<Eigen::Index>(k)) = frame[k].evaluate(x);
    return A;
}

double lsq_residual(const Eigen::MatrixXd& A, const Eigen::VectorXd& v) {
    const Eigen::VectorXd c = A.colPivHouseholderQr().solve(v);
    return (A * c - v).norm();
}

} // namespace

Polarization::Polarization(SymplecticStructure omega, std::vector<VectorField> frame,
                           std::optional<LeafQuotient> quotient, PolarizationCertificate cert, double tolerance)
    : omega_(std::move(omega)), frame_(std::move(frame)), quotient_(std::move(quotient)), certificate_(cert),
      tolerance_(tolerance) {}

Polarization Polarization::certify(SymplecticStructure omega, std::vector<VectorField> frame,
                                   std::optional<LeafQuotient> quotient, std::size_t samples, std::uint64_t seed,
                                   double tolerance) {
    const Chart& chart = omega.chart();
    const std::size_t m = chart.dimension() / 2;
    if (frame.size() != m)
        throw ValidationError("polarization: frame must have dim/2 = " + std::to_string(m) + " fields");
    for (const auto& X : frame) require_same_chart(chart, X.chart(), "polarization frame");
    if (quotient) {
        if (quotient->transverse.size() + quotient->along.size() != chart.dimension() ||
            quotient->coordinates.size() != quotient->transverse.size())
            throw ValidationError("polarization: leaf quotient does not split the chart coordinates");
    }

    std::vector<Expression> isotropy;
    std::vector<VectorField> brackets;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            isotropy.push_back(omega.form().apply(frame[i], frame[j]));
            brackets.push_back(lie_bracket(frame[i], frame[j]));
        }

    PolarizationCertificate cert;
    cert.seed = seed;
    cert.min_singular_value = std::numeric_limits<double>::infinity();
    const PointCloud pts = chart.sample(samples, seed);
    cert.samples = pts.size();
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const Eigen::MatrixXd A = frame_matrix(frame, pts[k]);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
        cert.min_singular_value = std::min(cert.min_singular_value, svd.singularValues().minCoeff());
        for (const auto& w : isotropy) cert.isotropy_residual = std::max(cert.isotropy_residual, std::abs(w.evaluate(pts[k])));
        for (const auto& B : brackets)
            cert.involutivity_residual = std::max(cert.involutivity_residual, lsq_residual(A, B.evaluate(pts[k])));
    }
    if (!(cert.min_singular_value > 1e-10))
        throw CertificationError("polarization: frame is not of rank dim/2 at a sampled point", cert.min_singular_value);
    if (!(cert.isotropy_residual < 1e-10))
        throw CertificationError("polarization: frame is not isotropic (max |ω(X_i,X_j)| = " +
                                     std::to_string(cert.isotropy_residual) + ")",
                                 cert.isotropy_residual);
    if (!(cert.involutivity_residual < tolerance))
        throw CertificationError("polarization: frame is not involutive (residual " +
                                     std::to_string(cert.involutivity_residual) + ")",
                                 cert.involutivity_residual);
    return Polarization(std::move(omega), std::move(frame), std::move(quotient), cert, tolerance);
}

double Polarization::span_residual(std::span<const double> x, const Eigen::VectorXd& v) const {
    return lsq_residual(frame_matrix(frame_, x), v);
}

Polarization vertical_polarization(std::size_t n) {
    auto omega = canonical_symplectic(n);
    const Chart& chart = omega.chart();
    std::vector<VectorField> frame;
    LeafQuotient quotient;
    for (std::size_t i = 0; i < n; ++i) {
        frame.push_back(VectorField::coordinate(chart, n + i));
        quotient.transverse.push_back(i);
        quotient.along.push_back(n + i);
        quotient.coordinates.push_back(chart.coordinates()[i]);
    }
    return Polarization::certify(std::move(omega), std::move(frame), std::move(quotient));
}

Polarization circle_polarization() {
    const PrequantumBundle bundle = punctured_plane_bundle();
    const Chart& chart = bundle.chart();
    LeafQuotient quotient{{0}, {1}, {"r"}};
    return Polarization::certify(bundle.symplectic(), {VectorField::coordinate(chart, 1)}, std::move(quotient));
}

double polarized_residual(const PrequantumBundle& bundle, const Section& s, const Polarization& F,
                          const PointCloud& points) {
    require_same_chart(bundle.chart(), F.chart(), "polarized residual");
    double worst = 0.0;
    for (const auto& X : F.frame()) {
        const Section d = covariant_derivative(bundle, s, X);
        worst = std::max(worst, kernels::max_abs(points, [&](std::span<const double> x) { return std::abs(d(x)); }));
    }
    return worst;
}

cplx leaf_holonomy(const PrequantumBundle& bundle, const Polarization& F, std::span<const double> x0, double period,
                   std::size_t steps) {
    require_same_chart(bundle.chart(), F.chart(), "leaf holonomy");
    if (steps == 0 || !(period > 0.0)) throw ValidationError("leaf holonomy: needs steps >= 1 and period > 0");
    if (!bundle.chart().contains(x0)) throw ValidationError("leaf holonomy: start point outside the chart");
    const VectorField& X = F.frame().front();
    const Expression phase = bundle.potential().pair(X);
    const double kappa = bundle.kappa();
    const std::size_t d = x0.size();

    // y = (x, Re s, Im s).
    auto rhs = [&](const std::vector<double>& y) {
        std::vector<double> out(d + 2);
        std::span<const double> x(y.data(), d);
        const Eigen::VectorXd v = X.evaluate(x);
        for (std::size_t i = 0; i < d; ++i) out[i] = v(static_cast<Eigen::Index>(i));
        const cplx s{y[d], y[d + 1]};
        const cplx ds = cplx{0.0, -kappa * phase.evaluate(x)} * s;
        out[d] = ds.real();
        out[d + 1] = ds.imag();
        return out;
    };
    std::vector<double> y(x0.begin(), x0.end());
    y.push_back(1.0);
    y.push_back(0.0);
    const double h = period / static_cast<double>(steps);
    std::vector<double> tmp(d + 2);
    for (std::size_t n = 0; n < steps; ++n) {
        const auto k1 = rhs(y);
        for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        const auto k2 = rhs(tmp);
        for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        const auto k3 = rhs(tmp);
        for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + h * k3[i];
        const auto k4 = rhs(tmp);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return {y[d], y[d + 1]};
}

HolonomyResult punctured_plane_holonomy(double r, std::size_t steps) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ValidationError("holonomy: r must be positive");
    static const PrequantumBundle bundle = punctured_plane_bundle();
    static const Polarization F = circle_polarization();
    HolonomyResult out;
    out.r = r;
    const double x0[2] = {r, 0.0};
    out.numeric = leaf_holonomy(bundle, F, x0, 2.0 * std::numbers::pi, steps);
    out.closed_form = std::exp(cplx{0.0, -2.0 * std::numbers::pi * r * r});
    out.polarized_exists = std::abs(out.numeric - cplx{1.0, 0.0}) < 1e-8;
    return out;
}

double is_polarization_preserving(const Expression& f, const Polarization& F, const PointCloud& points) {
    const VectorField xi = hamiltonian_vector_field(F.symplectic(), f);
    std::vector<VectorField> brackets;
    for (const auto& X : F.frame()) brackets.push_back(lie_bracket(xi, X));
    double worst = 0.0;
    for (std::size_t k = 0; k < points.size(); ++k)
        for (const auto& B : brackets) worst = std::max(worst, F.span_residual(points[k], B.evaluate(points[k])));
    return worst;
}

double bracket_closure_check(const Expression& f, const Expression& g, const Polarization& F,
                             const PointCloud& points) {
    return is_polarization_preserving(poisson_bracket(f, g, F.symplectic()).expression(), F, points);
}

double qf_preserves_polarized_check(const PrequantumBundle& bundle, const Expression& f, const Section& s,
                                    const Polarization& F, const PointCloud& points) {
    return polarized_residual(bundle, prequantum_operator(bundle, f, s), F, points);
}

cplx half_density_pairing(const PrequantumBundle& bundle, const Polarization& F, const Section& s1,
                          const ManifoldDensity& mu1, const Section& s2, const ManifoldDensity& mu2,
                          const PairingOptions& options) {
    if (!F.quotient()) throw ValidationError("pairing: polarization has no leaf quotient");
    const LeafQuotient& Q = *F.quotient();
    const auto atlas = mu1.atlas();
    if (atlas != mu2.atlas()) throw ValidationError("pairing: half-densities live on different atlases");
    if (std::abs(mu1.order() - cplx{0.5, 0.0}) > 1e-14 || std::abs(mu2.order() - cplx{0.5, 0.0}) > 1e-14)
        throw ValidationError("pairing: μ1 and μ2 must be half-densities");
    for (std::size_t i = 0; i < atlas->size(); ++i)
        if (*atlas->chart(i).coordinates != Q.coordinates)
            throw ValidationError("pairing: leaf-space chart '" + atlas->chart(i).name +
                                  "' must use the quotient coordinates");

    const PointCloud pts = bundle.chart().sample(200, 0x9a1);
    for (const Section* s : {&s1, &s2}) {
        const double r = polarized_residual(bundle, *s, F, pts);
        if (!(r < options.polarized_tolerance))
            throw ValidationError("pairing: section is not polarized (residual " + std::to_string(r) + ")");
    }

    auto inner = [&](std::span<const double> x) { return std::conj(s1(x)) * s2(x); };
    const std::size_t along = Q.along.size();
    for (std::size_t i = 0; i < atlas->size(); ++i) {
        const PointCloud ys = sample_box(atlas->partition_support(i), options.transverse_samples, 0x1eaf + i);
        for (std::size_t k = 0; k < ys.size(); ++k) {
            std::vector<cplx> values;
            for (double t : options.leaf_parameters) {
                const std::vector<double> tv(along, t);
                values.push_back(inner(Q.lift(ys[k], tv)));
            }
            double variation = 0.0;
            for (const auto& v : values) variation = std::max(variation, std::abs(v - values.front()));
            if (variation > options.leaf_tolerance * std::max(1.0, std::abs(values.front())))
                throw NotLeafConstantError("pairing: <s1, s2> is not constant along leaves (variation " +
                                               std::to_string(variation) + ")",
                                           variation);
        }
    }

    const ManifoldDensity weight = density_product(conjugate_density(mu1), mu2);
    std::vector<ComplexField> coefficients;
    for (std::size_t i = 0; i < atlas->size(); ++i) {
        coefficients.emplace_back(atlas->chart(i).coordinates, [&Q, inner, w = weight.coefficient(i), along](std::span<const double> y) {
            const std::vector<double> t(along, 0.0);
            return inner(Q.lift(y, t)) * w.evaluate(y);
        });
    }
    const ManifoldDensity integrand(atlas, weight.order(), std::move(coefficients));
    return integrate_one_density(integrand, options.quadrature_tolerance).total;
}

} // namespace pq
