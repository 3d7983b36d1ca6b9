#include "prequant/densities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "prequant/errors.hpp"

namespace pq {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_order_dims(std::size_t a, std::size_t b) {
    if (a != b) throw ValidationError("densities: dimension mismatch");
}
} // namespace

// ---------------------------------------------------------- VectorDensity

VectorDensity::VectorDensity(std::size_t dimension, cplx order, cplx reference_value)
    : n_(dimension), order_(order), value_(reference_value) {
    if (n_ == 0) throw ValidationError("density: dimension must be >= 1");
}

cplx abs_det_power(double det, cplx order) {
    const double a = std::abs(det);
    if (!(a > 1e-12)) throw SingularFormError("density: singular frame (|det| <= 1e-12)");
    if (order == cplx{0.0, 0.0}) return {1.0, 0.0};
    return std::exp(order * std::log(a));
}

cplx VectorDensity::evaluate(const Eigen::MatrixXd& frame) const {
    if (static_cast<std::size_t>(frame.rows()) != n_ || static_cast<std::size_t>(frame.cols()) != n_)
        throw ValidationError("density: frame must be n x n");
    return value_ * abs_det_power(frame.determinant(), order_);
}

VectorDensity density_product(const VectorDensity& a, const VectorDensity& b) {
    require_order_dims(a.dimension(), b.dimension());
    return VectorDensity(a.dimension(), a.order() + b.order(), a.reference_value() * b.reference_value());
}

VectorDensity conjugate_density(const VectorDensity& a) {
    return VectorDensity(a.dimension(), std::conj(a.order()), std::conj(a.reference_value()));
}

VectorDensity pullback_density(const Eigen::MatrixXd& T, const VectorDensity& tau) {
    if (static_cast<std::size_t>(T.rows()) != tau.dimension() || T.rows() != T.cols())
        throw ValidationError("pullback: map must be n x n");
    return VectorDensity(tau.dimension(), tau.order(), tau.reference_value() * abs_det_power(T.determinant(), tau.order()));
}

// -------------------------------------------------------------- Piecewise

Piecewise::Piecewise(VariableList variables, std::vector<Piece> pieces, double otherwise)
    : variables_(std::move(variables)), pieces_(std::move(pieces)), otherwise_(otherwise) {
    for (const auto& p : pieces_) {
        if (p.domain.dim() != variables_->size()) throw ValidationError("piecewise: piece dimension mismatch");
        if (!same_variables(p.value.variables(), variables_))
            throw ValidationError("piecewise: piece is not over the declared coordinates");
    }
}

Piecewise Piecewise::constant(VariableList variables, double value) { return Piecewise(std::move(variables), {}, value); }

double Piecewise::evaluate(std::span<const double> x) const {
    for (const auto& p : pieces_)
        if (p.domain.contains(x)) return p.value.evaluate(x);
    return otherwise_;
}

std::vector<double> Piecewise::breakpoints(std::size_t axis) const {
    std::vector<double> out;
    for (const auto& p : pieces_) {
        if (std::isfinite(p.domain.lo[axis])) out.push_back(p.domain.lo[axis]);
        if (std::isfinite(p.domain.hi[axis])) out.push_back(p.domain.hi[axis]);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Expression smootherstep(const Expression& t) {
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

// ------------------------------------------------------------------ Atlas

Transition::Transition(std::size_t from_, std::size_t to_, std::vector<std::pair<Box, std::vector<Expression>>> maps)
    : from(from_), to(to_) {
    for (auto& [box, map] : maps) {
        Piece p{std::move(box), std::move(map), {}};
        for (const auto& m : p.map) {
            std::vector<Expression> row;
            for (std::size_t j = 0; j < m.arity(); ++j) row.push_back(m.differentiate(j));
            p.jacobian.push_back(std::move(row));
        }
        pieces.push_back(std::move(p));
    }
}

namespace {

Box sampling_box(const AtlasChart& c, const Box& support) {
    Box b = c.domain;
    for (std::size_t i = 0; i < b.dim(); ++i) {
        if (!std::isfinite(b.lo[i])) b.lo[i] = support.lo[i] - 1.0;
        if (!std::isfinite(b.hi[i])) b.hi[i] = support.hi[i] + 1.0;
        const double pad = 1e-6 * (b.hi[i] - b.lo[i]);
        if (c.open_lo[i]) b.lo[i] += pad;
        if (c.open_hi[i]) b.hi[i] -= pad;
    }
    return b;
}

} // namespace

Atlas::Atlas(std::string name, std::vector<AtlasChart> charts, std::vector<Transition> transitions,
             std::vector<Piecewise> partition, std::vector<Box> partition_support, std::size_t samples,
             std::uint64_t seed)
    : name_(std::move(name)), charts_(std::move(charts)), transitions_(std::move(transitions)),
      partition_(std::move(partition)), support_(std::move(partition_support)) {
    if (charts_.empty()) throw ValidationError("atlas '" + name_ + "': no charts");
    if (partition_.size() != charts_.size() || support_.size() != charts_.size())
        throw ValidationError("atlas '" + name_ + "': one partition function and support box per chart");
    const std::size_t dim = charts_.front().coordinates->size();
    for (std::size_t i = 0; i < charts_.size(); ++i) {
        auto& c = charts_[i];
        if (c.coordinates->size() != dim || c.domain.dim() != dim) throw ValidationError("atlas: chart dimension mismatch");
        if (c.open_lo.empty()) c.open_lo.assign(dim, false);
        if (c.open_hi.empty()) c.open_hi.assign(dim, false);
        if (!same_variables(partition_[i].variables(), c.coordinates))
            throw ValidationError("atlas: partition function is not over its chart's coordinates");
        const Box& s = support_[i];
        if (s.dim() != dim) throw ValidationError("atlas: support box dimension mismatch");
        for (std::size_t a = 0; a < dim; ++a) {
            const bool lo_ok = c.open_lo[a] ? s.lo[a] > c.domain.lo[a] : s.lo[a] >= c.domain.lo[a];
            const bool hi_ok = c.open_hi[a] ? s.hi[a] < c.domain.hi[a] : s.hi[a] <= c.domain.hi[a];
            if (!lo_ok || !hi_ok || !std::isfinite(s.lo[a]) || !std::isfinite(s.hi[a]) || !(s.hi[a] > s.lo[a]))
                throw ValidationError("atlas '" + name_ + "': partition support of chart '" + c.name +
                                      "' is not a compact box inside the chart domain");
        }
    }
    for (const auto& t : transitions_) {
        if (t.from >= charts_.size() || t.to >= charts_.size() || t.from == t.to)
            throw ValidationError("atlas: transition indices out of range");
        for (const auto& p : t.pieces) {
            if (p.map.size() != dim) throw ValidationError("atlas: transition map dimension mismatch");
            for (const auto& m : p.map)
                if (!same_variables(m.variables(), charts_[t.from].coordinates))
                    throw ValidationError("atlas: transition map is not over the source coordinates");
        }
    }

    auto rho = [&](std::size_t j, std::span<const double> y) {
        return support_[j].contains(y) ? partition_[j].evaluate(y) : 0.0;
    };
    double worst = 0.0;
    for (std::size_t i = 0; i < charts_.size(); ++i) {
        const PointCloud pts = sample_box(sampling_box(charts_[i], support_[i]), samples, seed + i,
                                          [&](std::span<const double> x) { return in_domain(i, x); });
        for (std::size_t k = 0; k < pts.size(); ++k) {
            double sum = 0.0;
            for (std::size_t j = 0; j < charts_.size(); ++j) {
                const double v = j == i ? rho(i, pts[k]) : [&] {
                    auto y = map(i, j, pts[k]);
                    return y ? rho(j, *y) : 0.0;
                }();
                if (v < -1e-14)
                    throw CertificationError("atlas '" + name_ + "': partition function of chart '" +
                                                 charts_[j].name + "' is negative",
                                             -v);
                sum += v;
            }
            worst = std::max(worst, std::abs(sum - 1.0));
        }
    }
    partition_residual_ = worst;
    if (!(worst <= 1e-10))
        throw CertificationError("atlas '" + name_ + "': partition functions do not sum to 1 (residual " +
                                     std::to_string(worst) + ")",
                                 worst);
}

bool Atlas::in_domain(std::size_t chart, std::span<const double> x) const {
    const auto& c = charts_.at(chart);
    if (x.size() != c.domain.dim()) return false;
    for (std::size_t a = 0; a < x.size(); ++a) {
        if (c.open_lo[a] ? !(x[a] > c.domain.lo[a]) : !(x[a] >= c.domain.lo[a])) return false;
        if (c.open_hi[a] ? !(x[a] < c.domain.hi[a]) : !(x[a] <= c.domain.hi[a])) return false;
    }
    return true;
}

const Transition::Piece* Atlas::find(std::size_t from, std::size_t to, std::span<const double> x) const {
    if (!in_domain(from, x)) return nullptr;
    for (const auto& t : transitions_) {
        if (t.from != from || t.to != to) continue;
        for (const auto& p : t.pieces)
            if (p.domain.contains(x)) return &p;
    }
    return nullptr;
}

std::optional<std::vector<double>> Atlas::map(std::size_t from, std::size_t to, std::span<const double> x) const {
    if (from == to) return in_domain(from, x) ? std::optional(std::vector<double>(x.begin(), x.end())) : std::nullopt;
    const auto* p = find(from, to, x);
    if (!p) return std::nullopt;
    std::vector<double> y;
    for (const auto& m : p->map) y.push_back(m.evaluate(x));
    if (!in_domain(to, y)) return std::nullopt;
    return y;
}

std::optional<Eigen::MatrixXd> Atlas::jacobian(std::size_t from, std::size_t to, std::span<const double> x) const {
    const std::size_t n = dimension();
    if (from == to) return Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    if (!map(from, to, x)) return std::nullopt;
    const auto* p = find(from, to, x);
    Eigen::MatrixXd J(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = p->jacobian[i][j].evaluate(x);
    return J;
}

// --------------------------------------------------------------- Builtins

namespace {

struct AngularPieces {
    std::vector<Piecewise::Piece> a;
    std::vector<Piecewise::Piece> b;
};

// Partition on (0, 2π) / (-π, π) along axis `axis` of `vars`; `other` are the
// box extents of the remaining axes.
AngularPieces angular_partition(const VariableList& va, const VariableList& vb, std::size_t axis, double a, double b,
                                const Box& other) {
    auto box = [&](double lo, double hi) {
        Box out = other;
        out.lo[axis] = lo;
        out.hi[axis] = hi;
        return out;
    };
    const double w = b - a;
    const Expression ta = Expression::variable(axis, va);
    const Expression tb = Expression::variable(axis, vb);
    AngularPieces p;
    p.a.push_back({box(a, b), smootherstep((ta - a) / w)});
    p.a.push_back({box(b, kTwoPi - b), Expression::constant(1.0, va)});
    p.a.push_back({box(kTwoPi - b, kTwoPi - a), smootherstep((kTwoPi - a - ta) / w)});
    p.b.push_back({box(-a, a), Expression::constant(1.0, vb)});
    p.b.push_back({box(a, b), 1.0 - smootherstep((tb - a) / w)});
    p.b.push_back({box(-b, -a), 1.0 - smootherstep((-a - tb) / w)});
    return p;
}

std::vector<Expression> shifted(const VariableList& vars, std::size_t axis, double shift) {
    std::vector<Expression> out;
    for (std::size_t i = 0; i < vars->size(); ++i) {
        Expression v = Expression::variable(i, vars);
        out.push_back(i == axis ? v + shift : v);
    }
    return out;
}

void check_ramp(double a, double b) {
    if (!(a > 0.0 && a < b && b < std::numbers::pi))
        throw ValidationError("angular partition needs 0 < a < b < pi");
}

} // namespace

std::shared_ptr<const Atlas> circle_angle_atlas(double a, double b) {
    check_ramp(a, b);
    const auto va = make_variables({"theta"});
    const auto vb = make_variables({"theta"});
    const Box unit{{0.0}, {0.0}};
    auto parts = angular_partition(va, vb, 0, a, b, unit);
    const double pi = std::numbers::pi;
    std::vector<AtlasChart> charts{
        {"A", va, Box{{0.0}, {kTwoPi}}, {true}, {true}},
        {"B", vb, Box{{-pi}, {pi}}, {true}, {true}},
    };
    std::vector<Transition> tr;
    tr.emplace_back(0, 1, std::vector<std::pair<Box, std::vector<Expression>>>{
                              {Box{{0.0}, {pi}}, shifted(va, 0, 0.0)}, {Box{{pi}, {kTwoPi}}, shifted(va, 0, -kTwoPi)}});
    tr.emplace_back(1, 0, std::vector<std::pair<Box, std::vector<Expression>>>{
                              {Box{{0.0}, {pi}}, shifted(vb, 0, 0.0)}, {Box{{-pi}, {0.0}}, shifted(vb, 0, kTwoPi)}});
    std::vector<Piecewise> partition{Piecewise(va, parts.a), Piecewise(vb, parts.b)};
    std::vector<Box> support{Box{{a}, {kTwoPi - a}}, Box{{-b}, {b}}};
    return std::make_shared<const Atlas>("circle-angle(" + std::to_string(a) + "," + std::to_string(b) + ")",
                                         std::move(charts), std::move(tr), std::move(partition), std::move(support));
}

std::shared_ptr<const Atlas> circle_tangent_atlas(double inner, double outer) {
    if (!(inner > 0.0 && inner < outer)) throw ValidationError("tangent atlas needs 0 < inner < outer");
    const auto vx = make_variables({"x"});
    const auto vy = make_variables({"y"});
    const Expression x = Expression::variable(0, vx);
    const Expression y = Expression::variable(0, vy);
    const double w = outer - inner;
    const double tiny = std::numeric_limits<double>::min();
    std::vector<Piecewise::Piece> px{
        {Box{{-inner}, {inner}}, Expression::constant(1.0, vx)},
        {Box{{inner}, {outer}}, 1.0 - smootherstep((x - inner) / w)},
        {Box{{-outer}, {-inner}}, 1.0 - smootherstep((-x - inner) / w)},
    };
    // ρ_y(y) = 1 - ρ_x(-1/y), with |x| = 1/|y|.
    std::vector<Piecewise::Piece> py{
        {Box{{-1.0 / outer}, {1.0 / outer}}, Expression::constant(1.0, vy)},
        {Box{{1.0 / outer}, {1.0 / inner}}, smootherstep((1.0 / y - inner) / w)},
        {Box{{-1.0 / inner}, {-1.0 / outer}}, smootherstep((-1.0 / y - inner) / w)},
    };
    std::vector<AtlasChart> charts{
        {"x", vx, Box{{-kInf}, {kInf}}, {true}, {true}},
        {"y", vy, Box{{-kInf}, {kInf}}, {true}, {true}},
    };
    std::vector<Transition> tr;
    tr.emplace_back(0, 1, std::vector<std::pair<Box, std::vector<Expression>>>{
                              {Box{{tiny}, {kInf}}, {-1.0 / x}}, {Box{{-kInf}, {-tiny}}, {-1.0 / x}}});
    tr.emplace_back(1, 0, std::vector<std::pair<Box, std::vector<Expression>>>{
                              {Box{{tiny}, {kInf}}, {-1.0 / y}}, {Box{{-kInf}, {-tiny}}, {-1.0 / y}}});
    std::vector<Piecewise> partition{Piecewise(vx, px), Piecewise(vy, py)};
    std::vector<Box> support{Box{{-outer}, {outer}}, Box{{-1.0 / inner}, {1.0 / inner}}};
    return std::make_shared<const Atlas>("circle-tangent(" + std::to_string(inner) + "," + std::to_string(outer) + ")",
                                         std::move(charts), std::move(tr), std::move(partition), std::move(support));
}

std::shared_ptr<const Atlas> annulus_atlas(double r0, double r1, double a, double b) {
    check_ramp(a, b);
    if (!(r0 > 0.0 && r0 < r1)) throw ValidationError("annulus needs 0 < r0 < r1");
    const auto va = make_variables({"r", "theta"});
    const auto vb = make_variables({"r", "theta"});
    const Box radial{{r0, 0.0}, {r1, 0.0}};
    auto parts = angular_partition(va, vb, 1, a, b, radial);
    const double pi = std::numbers::pi;
    std::vector<AtlasChart> charts{
        {"A", va, Box{{r0, 0.0}, {r1, kTwoPi}}, {false, true}, {false, true}},
        {"B", vb, Box{{r0, -pi}, {r1, pi}}, {false, true}, {false, true}},
    };
    std::vector<Transition> tr;
    tr.emplace_back(0, 1, std::vector<std::pair<Box, std::vector<Expression>>>{
                              {Box{{r0, 0.0}, {r1, pi}}, shifted(va, 1, 0.0)},
                              {Box{{r0, pi}, {r1, kTwoPi}}, shifted(va, 1, -kTwoPi)}});
    tr.emplace_back(1, 0, std::vector<std::pair<Box, std::vector<Expression>>>{
                              {Box{{r0, 0.0}, {r1, pi}}, shifted(vb, 1, 0.0)},
                              {Box{{r0, -pi}, {r1, 0.0}}, shifted(vb, 1, kTwoPi)}});
    std::vector<Piecewise> partition{Piecewise(va, parts.a), Piecewise(vb, parts.b)};
    std::vector<Box> support{Box{{r0, a}, {r1, kTwoPi - a}}, Box{{r0, -b}, {r1, b}}};
    return std::make_shared<const Atlas>("annulus", std::move(charts), std::move(tr), std::move(partition),
                                         std::move(support));
}

std::shared_ptr<const Atlas> box_atlas(std::vector<std::string> coordinates, Box box) {
    const auto vars = make_variables(std::move(coordinates));
    if (box.dim() != vars->size()) throw ValidationError("box atlas: dimension mismatch");
    std::vector<AtlasChart> charts{{"box", vars, box, {}, {}}};
    return std::make_shared<const Atlas>("box", std::move(charts), std::vector<Transition>{},
                                         std::vector<Piecewise>{Piecewise::constant(vars, 1.0)}, std::vector<Box>{box});
}

// -------------------------------------------------------- ManifoldDensity

ManifoldDensity::ManifoldDensity(std::shared_ptr<const Atlas> atlas, cplx order, std::vector<ComplexField> coefficients)
    : atlas_(std::move(atlas)), order_(order), coefficients_(std::move(coefficients)) {
    if (!atlas_) throw ValidationError("density: null atlas");
    if (coefficients_.size() != atlas_->size()) throw ValidationError("density: one coefficient per chart");
    for (std::size_t i = 0; i < coefficients_.size(); ++i)
        if (!same_variables(coefficients_[i].variables(), atlas_->chart(i).coordinates))
            throw ValidationError("density: coefficient of chart '" + atlas_->chart(i).name +
                                  "' is not over its coordinates");
}

ManifoldDensity ManifoldDensity::parse(std::shared_ptr<const Atlas> atlas, cplx order,
                                       const std::vector<std::pair<std::string, std::string>>& coefficients) {
    if (!atlas) throw ValidationError("density: null atlas");
    if (coefficients.size() != atlas->size()) throw ValidationError("density: one coefficient per chart");
    std::vector<ComplexField> c;
    for (std::size_t i = 0; i < coefficients.size(); ++i) {
        const auto& vars = atlas->chart(i).coordinates;
        c.emplace_back(Expression::parse(coefficients[i].first, vars), Expression::parse(coefficients[i].second, vars));
    }
    return ManifoldDensity(std::move(atlas), order, std::move(c));
}

double ManifoldDensity::overlap_residual(std::size_t samples, std::uint64_t seed) const {
    const Atlas& at = *atlas_;
    double worst = 0.0;
    for (std::size_t i = 0; i < at.size(); ++i) {
        const PointCloud pts = sample_box(sampling_box(at.chart(i), at.partition_support(i)), samples, seed + i,
                                          [&](std::span<const double> x) { return at.in_domain(i, x); });
        for (std::size_t k = 0; k < pts.size(); ++k) {
            for (std::size_t j = 0; j < at.size(); ++j) {
                if (j == i) continue;
                auto y = at.map(i, j, pts[k]);
                if (!y) continue;
                const Eigen::MatrixXd J = *at.jacobian(i, j, pts[k]);
                const cplx lhs = coefficients_[i].evaluate(pts[k]);
                const cplx rhs = coefficients_[j].evaluate(*y) * abs_det_power(J.determinant(), order_);
                worst = std::max(worst, std::abs(lhs - rhs));
            }
        }
    }
    return worst;
}

ManifoldDensity density_product(const ManifoldDensity& a, const ManifoldDensity& b) {
    if (a.atlas() != b.atlas()) throw ValidationError("density product: different atlases");
    std::vector<ComplexField> c;
    for (std::size_t i = 0; i < a.atlas()->size(); ++i) {
        const auto& x = a.coefficient(i);
        const auto& y = b.coefficient(i);
        if (x.symbolic() && y.symbolic())
            c.emplace_back(x.re() * y.re() - x.im() * y.im(), x.re() * y.im() + x.im() * y.re());
        else
            c.emplace_back(x.variables(), [x, y](std::span<const double> p) { return x.evaluate(p) * y.evaluate(p); });
    }
    return ManifoldDensity(a.atlas(), a.order() + b.order(), std::move(c));
}

ManifoldDensity conjugate_density(const ManifoldDensity& a) {
    std::vector<ComplexField> c;
    for (std::size_t i = 0; i < a.atlas()->size(); ++i) {
        const auto& x = a.coefficient(i);
        if (x.symbolic()) c.emplace_back(x.re(), -x.im());
        else c.emplace_back(x.variables(), [x](std::span<const double> p) { return std::conj(x.evaluate(p)); });
    }
    return ManifoldDensity(a.atlas(), std::conj(a.order()), std::move(c));
}

// ------------------------------------------------------------ Integration

namespace {

constexpr std::size_t kMaxNodes = (std::size_t{1} << 14) + 1;

std::vector<double> cuts(const Piecewise& f, std::size_t axis, double lo, double hi) {
    std::vector<double> out{lo};
    for (double b : f.breakpoints(axis))
        if (b > lo && b < hi) out.push_back(b);
    out.push_back(hi);
    return out;
}

} // namespace

IntegrationReport integrate_one_density(const ManifoldDensity& tau, double tolerance, Exec exec) {
    if (std::abs(tau.order() - cplx{1.0, 0.0}) > 1e-14)
        throw ValidationError("integration needs a density of order 1");
    const Atlas& at = *tau.atlas();
    const std::size_t dim = at.dimension();
    IntegrationReport report;
    for (std::size_t i = 0; i < at.size(); ++i) {
        const Box& support = at.partition_support(i);
        const Piecewise& rho = at.partition(i);
        const ComplexField& c = tau.coefficient(i);
        std::vector<std::vector<double>> axis_cuts;
        std::size_t cells = 1;
        for (std::size_t a = 0; a < dim; ++a) {
            axis_cuts.push_back(cuts(rho, a, support.lo[a], support.hi[a]));
            cells *= axis_cuts.back().size() - 1;
        }
        const double cell_tol = tolerance / static_cast<double>(cells * at.size());
        const ComplexKernel integrand = [&](std::span<const double> x) { return rho.evaluate(x) * c.evaluate(x); };

        cplx chart_total{0.0, 0.0};
        std::vector<std::size_t> idx(dim, 0);
        for (std::size_t cell = 0; cell < cells; ++cell) {
            std::size_t rest = cell;
            Box box;
            for (std::size_t a = 0; a < dim; ++a) {
                const std::size_t n = axis_cuts[a].size() - 1;
                idx[a] = rest % n;
                rest /= n;
                box.lo.push_back(axis_cuts[a][idx[a]]);
                box.hi.push_back(axis_cuts[a][idx[a] + 1]);
            }
            QuadratureGrid grid(box, std::vector<std::size_t>(dim, 17));
            cplx prev = kernels::simpson(grid, integrand, exec);
            bool ok = false;
            double change = 0.0;
            while (grid.nodes.front() < kMaxNodes) {
                grid = grid.refined();
                const cplx next = kernels::simpson(grid, integrand, exec);
                change = std::abs(next - prev);
                prev = next;
                if (change <= cell_tol * std::max(1.0, std::abs(next))) {
                    ok = true;
                    break;
                }
                // Stop before a 2-D grid gets unreasonably large.
                if (grid.total_nodes() > (std::size_t{1} << 26)) break;
            }
            report.max_nodes = std::max(report.max_nodes, grid.nodes.front());
            if (!ok) {
                report.converged = false;
                report.warnings.push_back("chart '" + at.chart(i).name + "': quadrature did not stabilise (last change " +
                                          std::to_string(change) + "); the density may not be integrable");
            }
            chart_total += prev;
        }
        report.per_chart.push_back(chart_total);
        report.total += chart_total;
    }
    return report;
}

std::pair<ManifoldDensity, ManifoldDensity> split_signed_density(const ManifoldDensity& tau) {
    const Atlas& at = *tau.atlas();
    for (std::size_t i = 0; i < at.size(); ++i) {
        const auto& c = tau.coefficient(i);
        const PointCloud pts = sample_box(at.partition_support(i), 200, 0x5917 + i);
        for (std::size_t k = 0; k < pts.size(); ++k)
            if (std::abs(c.evaluate(pts[k]).imag()) > 1e-12)
                throw ValidationError("split: density coefficient of chart '" + at.chart(i).name + "' is not real");
    }
    std::vector<ComplexField> plus, minus;
    for (std::size_t i = 0; i < at.size(); ++i) {
        const auto& c = tau.coefficient(i);
        plus.emplace_back(c.variables(), [c](std::span<const double> x) { return cplx{std::max(c.evaluate(x).real(), 0.0), 0.0}; });
        minus.emplace_back(c.variables(), [c](std::span<const double> x) { return cplx{std::max(-c.evaluate(x).real(), 0.0), 0.0}; });
    }
    return {ManifoldDensity(tau.atlas(), tau.order(), std::move(plus)),
            ManifoldDensity(tau.atlas(), tau.order(), std::move(minus))};
}

} // namespace pq
