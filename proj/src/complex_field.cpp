#include "prequant/complex_field.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "prequant/errors.hpp"

namespace pq {

ComplexField::ComplexField(Expression re, Expression im)
    : variables_(re.variables()), value_(Symbolic{std::move(re), std::move(im)}) {
    if (!same_variables(variables_, std::get<Symbolic>(value_).im.variables()))
        throw ValidationError("complex field: real and imaginary parts use different coordinates");
}

ComplexField::ComplexField(VariableList variables, Callable fn) : variables_(std::move(variables)), value_(std::move(fn)) {
    if (!std::get<Callable>(value_)) throw ValidationError("complex field: empty callable");
}

const Expression& ComplexField::re() const {
    if (!symbolic()) throw ValidationError("complex field is not symbolic");
    return std::get<Symbolic>(value_).re;
}

const Expression& ComplexField::im() const {
    if (!symbolic()) throw ValidationError("complex field is not symbolic");
    return std::get<Symbolic>(value_).im;
}

cplx ComplexField::evaluate(std::span<const double> x) const {
    if (const auto* s = std::get_if<Symbolic>(&value_)) return {s->re.evaluate(x), s->im.evaluate(x)};
    const cplx v = std::get<Callable>(value_)(x);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw DomainError("section value is not finite");
    return v;
}

cplx ComplexField::partial(std::span<const double> x, std::size_t i) const {
    if (const auto* s = std::get_if<Symbolic>(&value_))
        return {s->re.differentiate(i).evaluate(x), s->im.differentiate(i).evaluate(x)};
    const auto& fn = std::get<Callable>(value_);
    std::vector<double> y(x.begin(), x.end());
    const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
    y[i] = x[i] + h;
    const cplx up = fn(y);
    y[i] = x[i] - h;
    const cplx down = fn(y);
    return (up - down) / (2.0 * h);
}

} // namespace pq
