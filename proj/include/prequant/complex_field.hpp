#pragma once

// Complex-valued functions on a chart.

#include <complex>
#include <functional>
#include <span>
#include <variant>

#include "prequant/expr.hpp"

namespace pq {

using cplx = std::complex<double>;

// A complex function on a chart: either re + i·im as expressions (exact
// derivatives) or an opaque callable (central differences with step
// 1e-5·max(1, |x_i|)).
class ComplexField {
public:
    using Callable = std::function<cplx(std::span<const double>)>;

    ComplexField(Expression re, Expression im);
    ComplexField(VariableList variables, Callable fn);

    bool symbolic() const noexcept { return std::holds_alternative<Symbolic>(value_); }
    const Expression& re() const;
    const Expression& im() const;
    const VariableList& variables() const noexcept { return variables_; }

    cplx evaluate(std::span<const double> x) const;
    cplx partial(std::span<const double> x, std::size_t i) const;

private:
    struct Symbolic {
        Expression re;
        Expression im;
    };
    VariableList variables_;
    std::variant<Symbolic, Callable> value_;
};

} // namespace pq
