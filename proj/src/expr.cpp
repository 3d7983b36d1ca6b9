#include "prequant/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <system_error>

#include "prequant/errors.hpp"

namespace pq {

namespace detail {

enum class Op : std::uint8_t { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Exp, Log, Sqrt };

struct Node {
    Op op;
    double value = 0.0;       // Const value, or the exponent of Pow
    std::uint32_t index = 0;  // Var index
    std::uint32_t depth = 1;
    std::shared_ptr<const Node> a;
    std::shared_ptr<const Node> b;
};

using NodePtr = std::shared_ptr<const Node>;

struct Instr {
    Op op;
    double value;
    std::uint32_t index;
};

struct Program {
    std::vector<Instr> code;
    std::size_t max_stack = 0;
};

} // namespace detail

namespace {

using detail::Node;
using detail::NodePtr;
using detail::Op;

constexpr std::uint32_t kMaxDepth = 4000;

NodePtr make_node(Op op, NodePtr a = nullptr, NodePtr b = nullptr, double value = 0.0,
                  std::uint32_t index = 0) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->value = value;
    n->index = index;
    std::uint32_t d = 0;
    if (a) d = std::max(d, a->depth);
    if (b) d = std::max(d, b->depth);
    n->depth = d + 1;
    if (n->depth > kMaxDepth) throw ValidationError("expression nesting exceeds depth limit");
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr constant_node(double v) {
    if (v == 0.0) v = 0.0; // normalise -0
    return make_node(Op::Const, nullptr, nullptr, v);
}

bool is_const(const NodePtr& n) { return n->op == Op::Const; }
bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }

// Folds a unary or binary operation on constants when the result is an
// ordinary finite number; otherwise leaves the node for evaluate() to
// report.
bool fold_ok(double r) { return std::isfinite(r); }

NodePtr add(const NodePtr& a, const NodePtr& b) {
    if (is_const(a) && is_const(b) && fold_ok(a->value + b->value)) return constant_node(a->value + b->value);
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    return make_node(Op::Add, a, b);
}

NodePtr neg(const NodePtr& a) {
    if (is_const(a)) return constant_node(-a->value);
    if (a->op == Op::Neg) return a->a;
    return make_node(Op::Neg, a);
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
    if (is_const(a) && is_const(b) && fold_ok(a->value - b->value)) return constant_node(a->value - b->value);
    if (is_const(b, 0.0)) return a;
    if (is_const(a, 0.0)) return neg(b);
    return make_node(Op::Sub, a, b);
}

NodePtr mul(const NodePtr& a, const NodePtr& b) {
    if (is_const(a) && is_const(b) && fold_ok(a->value * b->value)) return constant_node(a->value * b->value);
    if (is_const(a, 0.0) || is_const(b, 0.0)) return constant_node(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    if (is_const(a, -1.0)) return neg(b);
    if (is_const(b, -1.0)) return neg(a);
    return make_node(Op::Mul, a, b);
}

NodePtr div(const NodePtr& a, const NodePtr& b) {
    if (is_const(a) && is_const(b) && b->value != 0.0 && fold_ok(a->value / b->value))
        return constant_node(a->value / b->value);
    if (is_const(b, 1.0)) return a;
    if (is_const(a, 0.0) && !is_const(b, 0.0)) return constant_node(0.0);
    return make_node(Op::Div, a, b);
}

bool pow_valid(double base, double exponent) {
    if (base < 0.0 && exponent != std::floor(exponent)) return false;
    if (base == 0.0 && exponent < 0.0) return false;
    return true;
}

NodePtr power(const NodePtr& base, double exponent) {
    if (exponent == 0.0) return constant_node(1.0);
    if (exponent == 1.0) return base;
    if (is_const(base) && pow_valid(base->value, exponent)) {
        double r = std::pow(base->value, exponent);
        if (fold_ok(r)) return constant_node(r);
    }
    return make_node(Op::Pow, base, nullptr, exponent);
}

double apply_unary(Op op, double x) {
    switch (op) {
    case Op::Sin: return std::sin(x);
    case Op::Cos: return std::cos(x);
    case Op::Exp: return std::exp(x);
    case Op::Log: return std::log(x);
    case Op::Sqrt: return std::sqrt(x);
    default: return x;
    }
}

bool unary_valid(Op op, double x) {
    if (op == Op::Log) return x > 0.0;
    if (op == Op::Sqrt) return x >= 0.0;
    return true;
}

NodePtr function(Op op, const NodePtr& a) {
    if (is_const(a) && unary_valid(op, a->value)) {
        double r = apply_unary(op, a->value);
        if (fold_ok(r)) return constant_node(r);
    }
    return make_node(op, a);
}

// ---------------------------------------------------------------- parsing

class Parser {
public:
    Parser(std::string_view src, const std::vector<std::string>& vars) : src_(src), vars_(vars) {}

    NodePtr parse() {
        skip_ws();
        if (pos_ >= src_.size()) throw SyntaxError("empty expression", pos_);
        NodePtr e = expr();
        skip_ws();
        if (pos_ < src_.size()) throw SyntaxError(std::string("unexpected '") + src_[pos_] + "'", pos_);
        return e;
    }

private:
    struct DepthGuard {
        explicit DepthGuard(Parser& p) : p_(p) {
            if (++p_.nesting_ > 256) throw SyntaxError("nesting too deep", p_.pos_);
        }
        ~DepthGuard() { --p_.nesting_; }
        Parser& p_;
    };

    void skip_ws() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r'))
            ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr wrap_depth(NodePtr n) {
        if (n->depth > 2000) throw SyntaxError("expression too deep", pos_);
        return n;
    }

    NodePtr expr() {
        DepthGuard g(*this);
        NodePtr lhs = term();
        for (;;) {
            if (accept('+')) lhs = wrap_depth(add(lhs, term()));
            else if (accept('-')) lhs = wrap_depth(sub(lhs, term()));
            else return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*')) lhs = wrap_depth(mul(lhs, unary()));
            else if (accept('/')) lhs = wrap_depth(div(lhs, unary()));
            else return lhs;
        }
    }

    NodePtr unary() {
        DepthGuard g(*this);
        if (accept('-')) return neg(unary());
        if (accept('+')) return unary();
        return pow_expr();
    }

    NodePtr pow_expr() {
        NodePtr base = primary();
        skip_ws();
        if (accept('^')) {
            std::size_t at = pos_;
            NodePtr exponent = unary();
            if (!is_const(exponent)) throw SyntaxError("exponent must be a constant", at);
            return power(base, exponent->value);
        }
        return base;
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= src_.size()) throw SyntaxError("unexpected end of input", pos_);
        char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = expr();
            if (!accept(')')) throw SyntaxError("expected ')'", pos_);
            return e;
        }
        if ((c >= '0' && c <= '9') || c == '.') return number();
        if (is_ident_start(c)) return identifier();
        throw SyntaxError(std::string("unexpected '") + c + "'", pos_);
    }

    static bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
    static bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

    NodePtr number() {
        std::size_t start = pos_;
        while (pos_ < src_.size() && ((src_[pos_] >= '0' && src_[pos_] <= '9') || src_[pos_] == '.')) ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') {
                while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') ++pos_;
            } else {
                pos_ = save;
            }
        }
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
        if (ec != std::errc() || ptr != src_.data() + pos_ || !std::isfinite(v))
            throw SyntaxError("malformed number", start);
        return constant_node(v);
    }

    NodePtr identifier() {
        std::size_t start = pos_;
        while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
        std::string name(src_.substr(start, pos_ - start));
        auto it = std::find(vars_.begin(), vars_.end(), name);
        if (it != vars_.end())
            return make_node(Op::Var, nullptr, nullptr, 0.0, static_cast<std::uint32_t>(it - vars_.begin()));
        Op op;
        if (name == "sin") op = Op::Sin;
        else if (name == "cos") op = Op::Cos;
        else if (name == "exp") op = Op::Exp;
        else if (name == "log") op = Op::Log;
        else if (name == "sqrt") op = Op::Sqrt;
        else if (name == "pi") return constant_node(std::numbers::pi);
        else throw UnknownIdentifier(name, start);
        if (!accept('(')) throw SyntaxError("expected '(' after " + name, pos_);
        NodePtr arg = expr();
        if (!accept(')')) throw SyntaxError("expected ')'", pos_);
        return function(op, arg);
    }

    std::string_view src_;
    const std::vector<std::string>& vars_;
    std::size_t pos_ = 0;
    int nesting_ = 0;
};

// --------------------------------------------------------------- printing

int precedence(const NodePtr& n) {
    switch (n->op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    case Op::Const: return n->value < 0.0 ? 3 : 5;
    default: return 5;
    }
}

std::string format_number(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    (void)ec;
    return std::string(buf.data(), ptr);
}

void print(const NodePtr& n, const std::vector<std::string>& vars, std::string& out);

void print_operand(const NodePtr& n, int min_prec, const std::vector<std::string>& vars, std::string& out) {
    if (precedence(n) < min_prec) {
        out += '(';
        print(n, vars, out);
        out += ')';
    } else {
        print(n, vars, out);
    }
}

void print(const NodePtr& n, const std::vector<std::string>& vars, std::string& out) {
    switch (n->op) {
    case Op::Const: out += format_number(n->value); return;
    case Op::Var: out += vars[n->index]; return;
    case Op::Add:
        print_operand(n->a, 1, vars, out);
        out += " + ";
        print_operand(n->b, 1, vars, out);
        return;
    case Op::Sub:
        print_operand(n->a, 1, vars, out);
        out += " - ";
        print_operand(n->b, 2, vars, out);
        return;
    case Op::Mul:
        print_operand(n->a, 2, vars, out);
        out += "*";
        print_operand(n->b, 2, vars, out);
        return;
    case Op::Div:
        print_operand(n->a, 2, vars, out);
        out += "/";
        print_operand(n->b, 3, vars, out);
        return;
    case Op::Neg:
        out += "-";
        print_operand(n->a, 3, vars, out);
        return;
    case Op::Pow:
        print_operand(n->a, 5, vars, out);
        out += "^";
        if (n->value < 0.0) out += "(" + format_number(n->value) + ")";
        else out += format_number(n->value);
        return;
    case Op::Sin: out += "sin("; break;
    case Op::Cos: out += "cos("; break;
    case Op::Exp: out += "exp("; break;
    case Op::Log: out += "log("; break;
    case Op::Sqrt: out += "sqrt("; break;
    }
    print(n->a, vars, out);
    out += ')';
}

// ---------------------------------------------------------- differentiation

NodePtr derive(const NodePtr& n, std::uint32_t var) {
    switch (n->op) {
    case Op::Const: return constant_node(0.0);
    case Op::Var: return constant_node(n->index == var ? 1.0 : 0.0);
    case Op::Add: return add(derive(n->a, var), derive(n->b, var));
    case Op::Sub: return sub(derive(n->a, var), derive(n->b, var));
    case Op::Neg: return neg(derive(n->a, var));
    case Op::Mul: return add(mul(derive(n->a, var), n->b), mul(n->a, derive(n->b, var)));
    case Op::Div: {
        NodePtr da = derive(n->a, var);
        NodePtr db = derive(n->b, var);
        return sub(div(da, n->b), div(mul(n->a, db), power(n->b, 2.0)));
    }
    case Op::Pow:
        return mul(mul(constant_node(n->value), power(n->a, n->value - 1.0)), derive(n->a, var));
    case Op::Sin: return mul(function(Op::Cos, n->a), derive(n->a, var));
    case Op::Cos: return neg(mul(function(Op::Sin, n->a), derive(n->a, var)));
    case Op::Exp: return mul(n, derive(n->a, var));
    case Op::Log: return div(derive(n->a, var), n->a);
    case Op::Sqrt: return div(derive(n->a, var), mul(constant_node(2.0), n));
    }
    return constant_node(0.0);
}

// -------------------------------------------------------------- compiling

void emit(const NodePtr& n, detail::Program& prog, std::size_t& depth) {
    auto push = [&](detail::Instr in) { prog.code.push_back(in); };
    switch (n->op) {
    case Op::Const:
    case Op::Var:
        push({n->op, n->value, n->index});
        ++depth;
        prog.max_stack = std::max(prog.max_stack, depth);
        return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
        emit(n->a, prog, depth);
        emit(n->b, prog, depth);
        push({n->op, 0.0, 0});
        --depth;
        return;
    default:
        emit(n->a, prog, depth);
        push({n->op, n->value, 0});
        return;
    }
}

std::shared_ptr<const detail::Program> compile(const NodePtr& root) {
    auto prog = std::make_shared<detail::Program>();
    std::size_t depth = 0;
    emit(root, *prog, depth);
    return prog;
}

[[noreturn]] void domain_fail(const char* what) { throw DomainError(what); }

double run(const detail::Program& prog, std::span<const double> x, double* stack) {
    std::size_t sp = 0;
    for (const auto& in : prog.code) {
        switch (in.op) {
        case Op::Const: stack[sp++] = in.value; break;
        case Op::Var: stack[sp++] = x[in.index]; break;
        case Op::Add: --sp; stack[sp - 1] += stack[sp]; break;
        case Op::Sub: --sp; stack[sp - 1] -= stack[sp]; break;
        case Op::Mul: --sp; stack[sp - 1] *= stack[sp]; break;
        case Op::Div:
            --sp;
            if (stack[sp] == 0.0) domain_fail("division by zero");
            stack[sp - 1] /= stack[sp];
            break;
        case Op::Neg: stack[sp - 1] = -stack[sp - 1]; break;
        case Op::Pow:
            if (!pow_valid(stack[sp - 1], in.value)) domain_fail("power of a negative or zero base outside its domain");
            stack[sp - 1] = std::pow(stack[sp - 1], in.value);
            break;
        case Op::Log:
            if (!(stack[sp - 1] > 0.0)) domain_fail("log of a nonpositive number");
            stack[sp - 1] = std::log(stack[sp - 1]);
            break;
        case Op::Sqrt:
            if (stack[sp - 1] < 0.0) domain_fail("sqrt of a negative number");
            stack[sp - 1] = std::sqrt(stack[sp - 1]);
            break;
        default: stack[sp - 1] = apply_unary(in.op, stack[sp - 1]); break;
        }
    }
    double r = stack[0];
    if (!std::isfinite(r)) domain_fail("expression value is not finite");
    return r;
}

bool depends(const NodePtr& n, std::uint32_t var) {
    if (n->op == Op::Var) return n->index == var;
    if (n->op == Op::Const) return false;
    return (n->a && depends(n->a, var)) || (n->b && depends(n->b, var));
}

void collect_terms(const NodePtr& n, bool negate, std::vector<NodePtr>& out) {
    if (n->op == Op::Add) {
        collect_terms(n->a, negate, out);
        collect_terms(n->b, negate, out);
    } else if (n->op == Op::Sub) {
        collect_terms(n->a, negate, out);
        collect_terms(n->b, !negate, out);
    } else if (n->op == Op::Neg) {
        collect_terms(n->a, !negate, out);
    } else {
        out.push_back(negate ? neg(n) : n);
    }
}

std::size_t count_nodes(const NodePtr& n) {
    if (!n) return 0;
    return 1 + count_nodes(n->a) + count_nodes(n->b);
}

} // namespace

// ------------------------------------------------------------- Expression

VariableList make_variables(std::vector<std::string> names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto& n = names[i];
        if (n.empty()) throw ValidationError("empty variable name");
        bool ident = (std::isalpha(static_cast<unsigned char>(n[0])) || n[0] == '_');
        for (char c : n) ident = ident && (std::isalnum(static_cast<unsigned char>(c)) || c == '_');
        if (!ident) throw ValidationError("variable name '" + n + "' is not an identifier");
        if (n == "sin" || n == "cos" || n == "exp" || n == "log" || n == "sqrt")
            throw ValidationError("variable name '" + n + "' shadows a function");
        for (std::size_t j = 0; j < i; ++j)
            if (names[j] == n) throw ValidationError("duplicate variable name '" + n + "'");
    }
    return std::make_shared<const std::vector<std::string>>(std::move(names));
}

bool same_variables(const VariableList& a, const VariableList& b) {
    return a == b || (a && b && *a == *b);
}

Expression::Expression(std::shared_ptr<const detail::Node> root, VariableList variables)
    : root_(std::move(root)), variables_(std::move(variables)), program_(compile(root_)) {}

Expression Expression::wrap(std::shared_ptr<const detail::Node> root, const VariableList& vars) {
    return Expression(std::move(root), vars);
}

Expression Expression::parse(std::string_view source, const VariableList& variables) {
    Parser p(source, *variables);
    return Expression(p.parse(), variables);
}

Expression Expression::parse(std::string_view source, std::vector<std::string> variables) {
    return parse(source, make_variables(std::move(variables)));
}

Expression Expression::constant(double value, const VariableList& variables) {
    return Expression(constant_node(value), variables);
}

Expression Expression::variable(std::size_t index, const VariableList& variables) {
    if (index >= variables->size()) throw ValidationError("variable index out of range");
    return Expression(make_node(Op::Var, nullptr, nullptr, 0.0, static_cast<std::uint32_t>(index)), variables);
}

Expression Expression::variable(std::string_view name, const VariableList& variables) {
    auto it = std::find(variables->begin(), variables->end(), name);
    if (it == variables->end()) throw ValidationError("unknown variable '" + std::string(name) + "'");
    return variable(static_cast<std::size_t>(it - variables->begin()), variables);
}

std::size_t Expression::index_of(std::string_view name) const {
    auto it = std::find(variables_->begin(), variables_->end(), name);
    if (it == variables_->end()) throw ValidationError("unknown variable '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - variables_->begin());
}

double Expression::evaluate(std::span<const double> point) const {
    if (point.size() != variables_->size())
        throw ValidationError("point has " + std::to_string(point.size()) + " coordinates, expected " +
                              std::to_string(variables_->size()));
    if (program_->max_stack <= 64) {
        std::array<double, 64> stack;
        return run(*program_, point, stack.data());
    }
    std::vector<double> stack(program_->max_stack);
    return run(*program_, point, stack.data());
}

Expression Expression::differentiate(std::size_t index) const {
    if (index >= variables_->size()) throw ValidationError("variable index out of range");
    return Expression(derive(root_, static_cast<std::uint32_t>(index)), variables_);
}

Expression Expression::differentiate(std::string_view name) const { return differentiate(index_of(name)); }

std::string Expression::to_string() const {
    std::string out;
    print(root_, *variables_, out);
    return out;
}

Expression Expression::rebind(const VariableList& variables) const {
    if (same_variables(variables_, variables)) return Expression(root_, variables);
    return parse(to_string(), variables);
}

bool Expression::is_constant() const noexcept { return root_->op == Op::Const; }
double Expression::constant_value() const noexcept { return root_->value; }

bool Expression::depends_on(std::size_t index) const { return depends(root_, static_cast<std::uint32_t>(index)); }

std::vector<Expression> Expression::additive_terms() const {
    std::vector<NodePtr> nodes;
    collect_terms(root_, false, nodes);
    std::vector<Expression> out;
    out.reserve(nodes.size());
    for (auto& n : nodes) out.push_back(Expression(n, variables_));
    return out;
}

std::size_t Expression::node_count() const { return count_nodes(root_); }

namespace {
const VariableList& common(const Expression& a, const Expression& b) {
    if (!same_variables(a.variables(), b.variables()))
        throw ValidationError("expressions are defined over different coordinates");
    return a.variables();
}
} // namespace

Expression operator+(const Expression& a, const Expression& b) { return Expression::wrap(add(a.root_, b.root_), common(a, b)); }
Expression operator-(const Expression& a, const Expression& b) { return Expression::wrap(sub(a.root_, b.root_), common(a, b)); }
Expression operator*(const Expression& a, const Expression& b) { return Expression::wrap(mul(a.root_, b.root_), common(a, b)); }
Expression operator/(const Expression& a, const Expression& b) { return Expression::wrap(div(a.root_, b.root_), common(a, b)); }
Expression operator-(const Expression& a) { return Expression::wrap(neg(a.root_), a.variables_); }
Expression operator+(const Expression& a, double b) { return Expression::wrap(add(a.root_, constant_node(b)), a.variables_); }
Expression operator+(double a, const Expression& b) { return Expression::wrap(add(constant_node(a), b.root_), b.variables_); }
Expression operator-(const Expression& a, double b) { return Expression::wrap(sub(a.root_, constant_node(b)), a.variables_); }
Expression operator-(double a, const Expression& b) { return Expression::wrap(sub(constant_node(a), b.root_), b.variables_); }
Expression operator*(const Expression& a, double b) { return Expression::wrap(mul(a.root_, constant_node(b)), a.variables_); }
Expression operator*(double a, const Expression& b) { return Expression::wrap(mul(constant_node(a), b.root_), b.variables_); }
Expression operator/(const Expression& a, double b) { return Expression::wrap(div(a.root_, constant_node(b)), a.variables_); }
Expression operator/(double a, const Expression& b) { return Expression::wrap(div(constant_node(a), b.root_), b.variables_); }

Expression pow(const Expression& base, double exponent) { return Expression::wrap(power(base.root_, exponent), base.variables_); }
Expression sin(const Expression& e) { return Expression::wrap(function(Op::Sin, e.root_), e.variables_); }
Expression cos(const Expression& e) { return Expression::wrap(function(Op::Cos, e.root_), e.variables_); }
Expression exp(const Expression& e) { return Expression::wrap(function(Op::Exp, e.root_), e.variables_); }
Expression log(const Expression& e) { return Expression::wrap(function(Op::Log, e.root_), e.variables_); }
Expression sqrt(const Expression& e) { return Expression::wrap(function(Op::Sqrt, e.root_), e.variables_); }

} // namespace pq
