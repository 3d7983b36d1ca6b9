#include "prequant/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "prequant/errors.hpp"

namespace pq {

bool Interval::contains(double x) const {
    if (lo_open ? !(x > lo) : !(x >= lo)) return false;
    if (hi_open ? !(x < hi) : !(x <= hi)) return false;
    return true;
}

// ------------------------------------------------------------------ Chart

Chart::Chart(std::string name, std::vector<std::string> coordinates, std::vector<Interval> bounds,
             std::vector<std::vector<double>> punctures)
    : name_(std::move(name)), variables_(make_variables(std::move(coordinates))), bounds_(std::move(bounds)),
      punctures_(std::move(punctures)) {
    if (variables_->empty()) throw ValidationError("chart '" + name_ + "' must have dimension >= 1");
    if (bounds_.empty()) bounds_.assign(variables_->size(), Interval{});
    if (bounds_.size() != variables_->size()) throw ValidationError("chart '" + name_ + "': one bound per coordinate");
    for (const auto& b : bounds_)
        if (!(b.hi > b.lo)) throw ValidationError("chart '" + name_ + "': empty coordinate interval");
    for (const auto& p : punctures_)
        if (p.size() != variables_->size()) throw ValidationError("chart '" + name_ + "': puncture dimension mismatch");
}

bool Chart::contains(std::span<const double> x) const {
    if (x.size() != dimension()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !bounds_[i].contains(x[i])) return false;
    }
    for (const auto& p : punctures_) {
        bool same = true;
        for (std::size_t i = 0; i < x.size(); ++i) same = same && x[i] == p[i];
        if (same) return false;
    }
    return true;
}

Box Chart::sample_box() const {
    if (sample_box_) return *sample_box_;
    Box b;
    for (const auto& iv : bounds_) {
        double lo = std::max(iv.lo, -2.0);
        double hi = std::min(iv.hi, 2.0);
        if (iv.lo_open && lo == iv.lo) lo += 0.25;
        if (iv.hi_open && hi == iv.hi) hi -= 0.25;
        if (!(hi > lo)) {
            lo = iv.lo;
            hi = iv.hi;
        }
        b.lo.push_back(lo);
        b.hi.push_back(hi);
    }
    return b;
}

Chart Chart::with_sample_box(Box box) const {
    if (box.dim() != dimension()) throw ValidationError("sample box dimension mismatch");
    Chart c = *this;
    c.sample_box_ = std::move(box);
    return c;
}

PointCloud Chart::sample(std::size_t count, std::uint64_t seed) const {
    return pq::sample_box(sample_box(), count, seed, [this](std::span<const double> x) {
        if (!contains(x)) return false;
        for (const auto& p : punctures_) {
            double d2 = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - p[i]) * (x[i] - p[i]);
            if (d2 < 1e-6) return false;
        }
        return true;
    });
}

bool Chart::operator==(const Chart& other) const {
    return name_ == other.name_ && same_variables(variables_, other.variables_);
}

void require_same_chart(const Chart& a, const Chart& b, std::string_view what) {
    if (!(a == b))
        throw ValidationError(std::string(what) + ": chart mismatch ('" + a.name() + "' vs '" + b.name() + "')");
}

namespace {
void require_vars(const Chart& chart, const Expression& e, std::string_view what) {
    if (!same_variables(chart.variables(), e.variables()))
        throw ValidationError(std::string(what) + ": expression is not over the coordinates of chart '" +
                              chart.name() + "'");
}
} // namespace

// ------------------------------------------------------------ VectorField

VectorField::VectorField(Chart chart, std::vector<Expression> components)
    : chart_(std::move(chart)), components_(std::move(components)) {
    if (components_.size() != chart_.dimension())
        throw ValidationError("vector field: component count must equal the chart dimension");
    for (const auto& c : components_) require_vars(chart_, c, "vector field");
}

Eigen::VectorXd VectorField::evaluate(std::span<const double> x) const {
    if (guard_ && std::abs(guard_->evaluate(x)) <= 1e-12)
        throw SingularFormError("symplectic form is singular (|det Ω| <= 1e-12) at the requested point");
    Eigen::VectorXd v(static_cast<Eigen::Index>(components_.size()));
    for (std::size_t i = 0; i < components_.size(); ++i) v(static_cast<Eigen::Index>(i)) = components_[i].evaluate(x);
    return v;
}

Expression VectorField::apply(const Expression& f) const {
    require_vars(chart_, f, "vector field action");
    Expression out = chart_.constant(0.0);
    for (std::size_t i = 0; i < components_.size(); ++i) out = out + components_[i] * f.differentiate(i);
    return out;
}

VectorField VectorField::scaled(const Expression& f) const {
    std::vector<Expression> c;
    for (const auto& x : components_) c.push_back(f * x);
    VectorField out(chart_, std::move(c));
    out.guard_ = guard_;
    return out;
}

VectorField VectorField::operator+(const VectorField& other) const {
    require_same_chart(chart_, other.chart_, "vector field sum");
    std::vector<Expression> c;
    for (std::size_t i = 0; i < components_.size(); ++i) c.push_back(components_[i] + other.components_[i]);
    VectorField out(chart_, std::move(c));
    out.guard_ = guard_ ? guard_ : other.guard_;
    return out;
}

VectorField VectorField::zero(const Chart& chart) {
    return VectorField(chart, std::vector<Expression>(chart.dimension(), chart.constant(0.0)));
}

VectorField VectorField::coordinate(const Chart& chart, std::size_t i) {
    if (i >= chart.dimension()) throw ValidationError("coordinate field index out of range");
    std::vector<Expression> c(chart.dimension(), chart.constant(0.0));
    c[i] = chart.constant(1.0);
    return VectorField(chart, std::move(c));
}

VectorField VectorField::with_singular_guard(Expression guard) const {
    require_vars(chart_, guard, "singular guard");
    VectorField out = *this;
    out.guard_ = std::move(guard);
    return out;
}

// ---------------------------------------------------------------- OneForm

OneForm::OneForm(Chart chart, std::vector<Expression> coefficients)
    : chart_(std::move(chart)), coefficients_(std::move(coefficients)) {
    if (coefficients_.size() != chart_.dimension())
        throw ValidationError("1-form: coefficient count must equal the chart dimension");
    for (const auto& c : coefficients_) require_vars(chart_, c, "1-form");
}

Eigen::VectorXd OneForm::evaluate(std::span<const double> x) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(coefficients_.size()));
    for (std::size_t i = 0; i < coefficients_.size(); ++i) v(static_cast<Eigen::Index>(i)) = coefficients_[i].evaluate(x);
    return v;
}

double OneForm::pair(std::span<const double> x, std::span<const double> v) const {
    if (v.size() != coefficients_.size()) throw ValidationError("1-form pairing: vector dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += coefficients_[i].evaluate(x) * v[i];
    return s;
}

Expression OneForm::pair(const VectorField& X) const {
    require_same_chart(chart_, X.chart(), "1-form pairing");
    Expression out = chart_.constant(0.0);
    for (std::size_t i = 0; i < coefficients_.size(); ++i) out = out + coefficients_[i] * X[i];
    return out;
}

OneForm OneForm::differential(const Chart& chart, const Expression& f) {
    require_vars(chart, f, "differential");
    std::vector<Expression> c;
    for (std::size_t i = 0; i < chart.dimension(); ++i) c.push_back(f.differentiate(i));
    return OneForm(chart, std::move(c));
}

// ---------------------------------------------------------------- TwoForm

TwoForm::TwoForm(Chart chart, std::vector<std::vector<Expression>> matrix, bool)
    : chart_(std::move(chart)), matrix_(std::move(matrix)) {}

TwoForm::TwoForm(Chart chart, std::vector<std::vector<Expression>> matrix, std::uint64_t seed)
    : chart_(std::move(chart)), matrix_(std::move(matrix)) {
    const std::size_t n = chart_.dimension();
    if (matrix_.size() != n) throw ValidationError("2-form: matrix must be n x n for the chart dimension");
    for (const auto& row : matrix_) {
        if (row.size() != n) throw ValidationError("2-form: matrix must be square");
        for (const auto& e : row) require_vars(chart_, e, "2-form");
    }
    const double r = antisymmetry_residual(chart_.sample(100, seed));
    if (r > 1e-12) throw CertificationError("2-form coefficient matrix is not antisymmetric", r);
}

TwoForm TwoForm::from_upper(const Chart& chart, const std::vector<Entry>& entries) {
    const std::size_t n = chart.dimension();
    std::vector<std::vector<Expression>> m(n, std::vector<Expression>(n, chart.constant(0.0)));
    for (const auto& e : entries) {
        if (!(e.i < e.j && e.j < n)) throw ValidationError("2-form entry indices must satisfy i < j < n");
        require_vars(chart, e.value, "2-form");
        m[e.i][e.j] = e.value;
        m[e.j][e.i] = -e.value;
    }
    return TwoForm(chart, std::move(m), true);
}

TwoForm TwoForm::zero(const Chart& chart) { return from_upper(chart, {}); }

Eigen::MatrixXd TwoForm::evaluate(std::span<const double> x) const {
    const auto n = static_cast<Eigen::Index>(matrix_.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            m(i, j) = matrix_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].evaluate(x);
    return m;
}

double TwoForm::apply(std::span<const double> x, std::span<const double> u, std::span<const double> v) const {
    const auto n = matrix_.size();
    if (u.size() != n || v.size() != n) throw ValidationError("2-form application: vector dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (u[i] != 0.0 && v[j] != 0.0) s += u[i] * matrix_[i][j].evaluate(x) * v[j];
    return s;
}

Expression TwoForm::apply(const VectorField& X, const VectorField& Y) const {
    require_same_chart(chart_, X.chart(), "2-form application");
    require_same_chart(chart_, Y.chart(), "2-form application");
    Expression out = chart_.constant(0.0);
    for (std::size_t i = 0; i < matrix_.size(); ++i)
        for (std::size_t j = 0; j < matrix_.size(); ++j) out = out + X[i] * matrix_[i][j] * Y[j];
    return out;
}

OneForm TwoForm::contract(const VectorField& X) const {
    require_same_chart(chart_, X.chart(), "interior product");
    std::vector<Expression> c;
    for (std::size_t j = 0; j < matrix_.size(); ++j) {
        Expression s = chart_.constant(0.0);
        for (std::size_t i = 0; i < matrix_.size(); ++i) s = s + X[i] * matrix_[i][j];
        c.push_back(s);
    }
    return OneForm(chart_, std::move(c));
}

bool TwoForm::is_constant() const {
    for (const auto& row : matrix_)
        for (const auto& e : row)
            if (!e.is_constant()) return false;
    return true;
}

double TwoForm::closedness_residual(const PointCloud& points) const {
    const std::size_t n = matrix_.size();
    if (n < 3) return 0.0;
    std::vector<Expression> d;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k)
                d.push_back(matrix_[j][k].differentiate(i) + matrix_[k][i].differentiate(j) +
                            matrix_[i][j].differentiate(k));
    return kernels::max_abs(points, [&](std::span<const double> x) {
        double m = 0.0;
        for (const auto& e : d) m = std::max(m, std::abs(e.evaluate(x)));
        return m;
    });
}

double TwoForm::antisymmetry_residual(const PointCloud& points) const {
    return kernels::max_abs(points, [&](std::span<const double> x) {
        Eigen::MatrixXd m = evaluate(x);
        return (m + m.transpose()).cwiseAbs().maxCoeff();
    });
}

TwoForm TwoForm::operator+(const TwoForm& other) const {
    require_same_chart(chart_, other.chart_, "2-form sum");
    auto m = matrix_;
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j) m[i][j] = m[i][j] + other.matrix_[i][j];
    return TwoForm(chart_, std::move(m), true);
}

TwoForm TwoForm::operator-(const TwoForm& other) const {
    require_same_chart(chart_, other.chart_, "2-form difference");
    auto m = matrix_;
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j) m[i][j] = m[i][j] - other.matrix_[i][j];
    return TwoForm(chart_, std::move(m), true);
}

// ------------------------------------------------------- symbolic algebra

namespace {

Expression pfaffian_rec(const std::vector<std::vector<Expression>>& m, std::vector<std::size_t> idx) {
    const auto& vars = m[0][0].variables();
    if (idx.empty()) return Expression::constant(1.0, vars);
    Expression sum = Expression::constant(0.0, vars);
    const std::size_t first = idx[0];
    for (std::size_t j = 1; j < idx.size(); ++j) {
        const Expression& a = m[first][idx[j]];
        if (a.is_constant() && a.constant_value() == 0.0) continue;
        std::vector<std::size_t> rest;
        for (std::size_t k = 1; k < idx.size(); ++k)
            if (k != j) rest.push_back(idx[k]);
        Expression term = a * pfaffian_rec(m, rest);
        sum = (j % 2 == 1) ? sum + term : sum - term;
    }
    return sum;
}

Expression det_rec(const std::vector<std::vector<Expression>>& m, const std::vector<std::size_t>& rows,
                   const std::vector<std::size_t>& cols) {
    const auto& vars = m[0][0].variables();
    if (rows.size() == 1) return m[rows[0]][cols[0]];
    Expression sum = Expression::constant(0.0, vars);
    std::vector<std::size_t> sub_rows(rows.begin() + 1, rows.end());
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const Expression& a = m[rows[0]][cols[j]];
        if (a.is_constant() && a.constant_value() == 0.0) continue;
        std::vector<std::size_t> sub_cols;
        for (std::size_t k = 0; k < cols.size(); ++k)
            if (k != j) sub_cols.push_back(cols[k]);
        Expression term = a * det_rec(m, sub_rows, sub_cols);
        sum = (j % 2 == 0) ? sum + term : sum - term;
    }
    return sum;
}

std::vector<std::size_t> iota_vec(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

} // namespace

Expression pfaffian(const std::vector<std::vector<Expression>>& m) {
    if (m.empty() || m.size() % 2 != 0) throw ValidationError("Pfaffian needs an even, nonzero dimension");
    return pfaffian_rec(m, iota_vec(m.size()));
}

Expression determinant(const std::vector<std::vector<Expression>>& m) {
    if (m.empty()) throw ValidationError("determinant of an empty matrix");
    return det_rec(m, iota_vec(m.size()), iota_vec(m.size()));
}

// ---------------------------------------------------- SymplecticStructure

SymplecticStructure::SymplecticStructure(TwoForm form, SymplecticCertificate cert)
    : form_(std::move(form)), certificate_(cert) {
    const std::size_t dim = form_.dimension();
    const std::size_t n = dim / 2;
    const Chart& chart = form_.chart();
    std::vector<std::vector<Expression>> m(dim, std::vector<Expression>(dim, chart.constant(0.0)));
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) m[i][j] = form_(i, j);

    if (form_.is_constant()) {
        Eigen::MatrixXd num(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j)
                num(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m[i][j].constant_value();
        canonical_ = true;
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) {
                double expect = 0.0;
                if (i < n && j == i + n) expect = -1.0;
                if (i >= n && j == i - n) expect = 1.0;
                canonical_ = canonical_ && num(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) == expect;
            }
        Eigen::MatrixXd inv = num.partialPivLu().inverse();
        inverse_.assign(dim, std::vector<Expression>(dim, chart.constant(0.0)));
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) {
                double v = inv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                if (std::abs(v) < 1e-15) v = 0.0;
                inverse_[i][j] = chart.constant(v);
            }
    } else {
        // Ω⁻¹ = adj(Ω)/det Ω with adj_ij = (-1)^{i+j} M_ji.
        Expression det = pq::determinant(m);
        determinant_ = det;
        inverse_.assign(dim, std::vector<Expression>(dim, chart.constant(0.0)));
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) {
                std::vector<std::size_t> rows, cols;
                for (std::size_t k = 0; k < dim; ++k) {
                    if (k != j) rows.push_back(k);
                    if (k != i) cols.push_back(k);
                }
                Expression minor = dim == 1 ? chart.constant(1.0) : det_rec(m, rows, cols);
                Expression cof = ((i + j) % 2 == 0) ? minor : -minor;
                inverse_[i][j] = cof / det;
            }
    }
}

SymplecticStructure SymplecticStructure::certify(TwoForm form, std::size_t samples, std::uint64_t seed) {
    const std::size_t dim = form.dimension();
    if (dim == 0 || dim % 2 != 0) throw CertificationError("symplectic form needs an even-dimensional chart", 0.0);
    PointCloud pts = form.chart().sample(samples, seed);
    SymplecticCertificate cert;
    cert.seed = seed;
    cert.samples = samples;
    cert.closedness_residual = form.closedness_residual(pts);
    if (!(cert.closedness_residual < 1e-9))
        throw CertificationError("2-form is not closed (residual " + std::to_string(cert.closedness_residual) + ")",
                                 cert.closedness_residual);
    double min_det = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) min_det = std::min(min_det, std::abs(form.evaluate(pts[i]).determinant()));
    cert.min_abs_determinant = min_det;
    if (!(min_det > 1e-12)) throw CertificationError("2-form is degenerate at a sampled point", min_det);
    return SymplecticStructure(std::move(form), cert);
}

// ------------------------------------------------------------ constructors

Chart cotangent_chart(std::size_t n) {
    if (n == 0) throw ValidationError("cotangent chart needs n >= 1");
    std::vector<std::string> names;
    if (n == 1) {
        names = {"q", "p"};
    } else {
        for (std::size_t i = 1; i <= n; ++i) names.push_back("q" + std::to_string(i));
        for (std::size_t i = 1; i <= n; ++i) names.push_back("p" + std::to_string(i));
    }
    return Chart(n == 1 ? "T*R" : "T*R^" + std::to_string(n), std::move(names));
}

SymplecticStructure canonical_symplectic(std::size_t n) {
    Chart chart = cotangent_chart(n);
    std::vector<TwoForm::Entry> entries;
    for (std::size_t i = 0; i < n; ++i) entries.push_back({i, n + i, chart.constant(-1.0)});
    return SymplecticStructure::certify(TwoForm::from_upper(chart, entries));
}

OneForm tautological_one_form(std::size_t n) {
    Chart chart = cotangent_chart(n);
    std::vector<Expression> c(2 * n, chart.constant(0.0));
    for (std::size_t i = 0; i < n; ++i) c[i] = chart.coordinate(n + i);
    return OneForm(chart, std::move(c));
}

double tautological_intrinsic(std::size_t n, std::span<const double> point, std::span<const double> v) {
    if (point.size() != 2 * n || v.size() != 2 * n) throw ValidationError("tautological form: dimension mismatch");
    // dπ: T(T*R^n) → TR^n keeps the base components.
    Eigen::MatrixXd dpi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(2 * n));
    dpi.leftCols(static_cast<Eigen::Index>(n)).setIdentity();
    Eigen::Map<const Eigen::VectorXd> vv(v.data(), static_cast<Eigen::Index>(v.size()));
    Eigen::Map<const Eigen::VectorXd> covector(point.data() + n, static_cast<Eigen::Index>(n));
    return covector.dot(dpi * vv);
}

TwoForm exterior_derivative(const OneForm& alpha) {
    const Chart& chart = alpha.chart();
    std::vector<TwoForm::Entry> entries;
    for (std::size_t i = 0; i < chart.dimension(); ++i)
        for (std::size_t j = i + 1; j < chart.dimension(); ++j)
            entries.push_back({i, j, alpha[j].differentiate(i) - alpha[i].differentiate(j)});
    return TwoForm::from_upper(chart, entries);
}

SymplecticStructure twisted_cotangent(std::size_t n, const TwoForm& tau) {
    Chart chart = cotangent_chart(n);
    if (tau.dimension() != n) throw ValidationError("twist form must live on an n-dimensional base chart");
    for (std::size_t i = 0; i < n; ++i)
        if (tau.chart().coordinates()[i] != chart.coordinates()[i])
            throw ValidationError("twist form base coordinates must be named like the cotangent q's");
    const double closed = tau.closedness_residual(tau.chart().sample(200, 0x7a0));
    if (closed > 1e-9)
        throw ValidationError("twist form is not closed (residual " + std::to_string(closed) + ")");
    std::vector<TwoForm::Entry> entries;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            Expression t = tau(i, j).rebind(chart.variables());
            if (!(t.is_constant() && t.constant_value() == 0.0)) entries.push_back({i, j, t});
        }
        entries.push_back({i, n + i, chart.constant(-1.0)});
    }
    return SymplecticStructure::certify(TwoForm::from_upper(chart, entries));
}

Expression wedge_top_power(const SymplecticStructure& omega) {
    const std::size_t dim = omega.dimension();
    std::vector<std::vector<Expression>> m(dim, std::vector<Expression>(dim, omega.chart().constant(0.0)));
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) m[i][j] = omega.form()(i, j);
    double factorial = 1.0;
    for (std::size_t k = 2; k <= dim / 2; ++k) factorial *= static_cast<double>(k);
    return factorial * pfaffian(m);
}

Expression random_polynomial(const Chart& chart, int degree, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    std::bernoulli_distribution keep(0.7);
    const std::size_t n = chart.dimension();
    Expression out = chart.constant(0.0);
    std::vector<int> e(n, 0);
    // Exponent vectors in lexicographic order, total degree <= degree.
    for (;;) {
        int total = 0;
        for (int v : e) total += v;
        if (total <= degree) {
            const double c = coeff(rng);
            if (keep(rng)) {
                Expression term = chart.constant(c);
                for (std::size_t i = 0; i < n; ++i)
                    if (e[i] > 0) term = term * pow(chart.coordinate(i), e[i]);
                out = out + term;
            }
        }
        std::size_t i = 0;
        while (i < n && ++e[i] > degree) e[i++] = 0;
        if (i == n) break;
    }
    return out;
}

Chart polar_chart() {
    Interval r;
    r.lo = 0.0;
    r.lo_open = true;
    Chart c("punctured-plane-polar", {"r", "theta"}, {r, Interval{}});
    return c.with_sample_box(Box{{0.25, -2.0}, {2.0, 2.0}});
}

} // namespace pq
