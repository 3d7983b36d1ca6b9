#pragma once

// Scalar expressions over named chart coordinates.
//
// Grammar (lowest to highest precedence):
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?          right associative
//   primary := number | name | func '(' expr ')' | '(' expr ')'
//   func    := sin | cos | exp | log | sqrt
//
// so `-q^2` is `-(q^2)` and `2^-1` is `0.5`. Exponents must fold to a
// constant. `pi` names the constant unless it is one of the variables.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pq {

namespace detail {
struct Node;
struct Program;
} // namespace detail

using VariableList = std::shared_ptr<const std::vector<std::string>>;

VariableList make_variables(std::vector<std::string> names);

class Expression {
public:
    static Expression parse(std::string_view source, const VariableList& variables);
    static Expression parse(std::string_view source, std::vector<std::string> variables);

    static Expression constant(double value, const VariableList& variables);
    static Expression variable(std::size_t index, const VariableList& variables);
    static Expression variable(std::string_view name, const VariableList& variables);

    const VariableList& variables() const noexcept { return variables_; }
    std::size_t arity() const noexcept { return variables_->size(); }
    std::size_t index_of(std::string_view name) const;

    // Throws DomainError instead of returning NaN or infinity.
    double evaluate(std::span<const double> point) const;
    double operator()(std::span<const double> point) const { return evaluate(point); }

    Expression differentiate(std::size_t index) const;
    Expression differentiate(std::string_view name) const;

    std::string to_string() const;

    // The same function read over another coordinate list that contains
    // every name this expression uses (e.g. pulling a base function back
    // to a cotangent bundle).
    Expression rebind(const VariableList& variables) const;

    bool is_constant() const noexcept;
    // Only meaningful when is_constant().
    double constant_value() const noexcept;
    bool depends_on(std::size_t index) const;

    // Flattens top-level sums and differences: e = Σ terms. Used to split
    // Hamiltonians into kinetic and potential parts.
    std::vector<Expression> additive_terms() const;

    // Number of nodes in the (possibly shared) tree; a rough size measure.
    std::size_t node_count() const;

    friend Expression operator+(const Expression& a, const Expression& b);
    friend Expression operator-(const Expression& a, const Expression& b);
    friend Expression operator*(const Expression& a, const Expression& b);
    friend Expression operator/(const Expression& a, const Expression& b);
    friend Expression operator-(const Expression& a);
    friend Expression operator+(const Expression& a, double b);
    friend Expression operator+(double a, const Expression& b);
    friend Expression operator-(const Expression& a, double b);
    friend Expression operator-(double a, const Expression& b);
    friend Expression operator*(const Expression& a, double b);
    friend Expression operator*(double a, const Expression& b);
    friend Expression operator/(const Expression& a, double b);
    friend Expression operator/(double a, const Expression& b);

    friend Expression pow(const Expression& base, double exponent);
    friend Expression sin(const Expression& e);
    friend Expression cos(const Expression& e);
    friend Expression exp(const Expression& e);
    friend Expression log(const Expression& e);
    friend Expression sqrt(const Expression& e);

private:
    Expression(std::shared_ptr<const detail::Node> root, VariableList variables);

    static Expression wrap(std::shared_ptr<const detail::Node> root, const VariableList& vars);

    std::shared_ptr<const detail::Node> root_;
    VariableList variables_;
    std::shared_ptr<const detail::Program> program_;
};

// True when both lists name the same coordinates in the same order.
bool same_variables(const VariableList& a, const VariableList& b);

} // namespace pq
