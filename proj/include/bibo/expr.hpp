#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace bibo {

using Complex = std::complex<double>;

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t pos)
        : std::runtime_error(what + " (at position " + std::to_string(pos) + ")"), pos_(pos) {}
    std::size_t position() const { return pos_; }

private:
    std::size_t pos_;
};

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

enum class NodeKind { Constant, Var, Add, Sub, Mul, Div, Pow, Exp, Neg };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind;
    Complex value{};     // Constant
    double exponent = 0; // Pow
    NodePtr a, b;
};

inline NodePtr make_const(Complex v) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Constant;
    n->value = v;
    return n;
}

inline NodePtr make_var() {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Var;
    return n;
}

inline bool is_const(const NodePtr& n, Complex v) {
    return n->kind == NodeKind::Constant && n->value == v;
}

inline Complex principal_pow(Complex base, double ex) {
    if (base == Complex(0.0, 0.0)) {
        if (ex > 0) return {0.0, 0.0};
        throw EvalError("pole hit: zero base with non-positive exponent");
    }
    // exp(ex * PrincipalLog(base)); the cut of each power node is the ray
    // where its base is negative real.
    return std::exp(ex * std::log(base));
}

// Smart constructors fold constant subtrees so that e.g. "j*2" collapses to
// a single constant node and derivative trees stay small. No structural
// rewriting beyond literal arithmetic.
inline NodePtr make_neg(NodePtr a) {
    if (a->kind == NodeKind::Constant) return make_const(-a->value);
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Neg;
    n->a = std::move(a);
    return n;
}

inline NodePtr make_add(NodePtr a, NodePtr b) {
    if (a->kind == NodeKind::Constant && b->kind == NodeKind::Constant)
        return make_const(a->value + b->value);
    if (is_const(a, {0, 0})) return b;
    if (is_const(b, {0, 0})) return a;
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Add;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

inline NodePtr make_sub(NodePtr a, NodePtr b) {
    if (a->kind == NodeKind::Constant && b->kind == NodeKind::Constant)
        return make_const(a->value - b->value);
    if (is_const(b, {0, 0})) return a;
    if (is_const(a, {0, 0})) return make_neg(std::move(b));
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Sub;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

inline NodePtr make_mul(NodePtr a, NodePtr b) {
    if (a->kind == NodeKind::Constant && b->kind == NodeKind::Constant)
        return make_const(a->value * b->value);
    if (is_const(a, {0, 0}) || is_const(b, {0, 0})) return make_const({0, 0});
    if (is_const(a, {1, 0})) return b;
    if (is_const(b, {1, 0})) return a;
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Mul;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

inline NodePtr make_div(NodePtr a, NodePtr b, std::size_t pos = 0) {
    if (is_const(b, {0, 0})) throw ParseError("division by literal zero", pos);
    if (a->kind == NodeKind::Constant && b->kind == NodeKind::Constant)
        return make_const(a->value / b->value);
    if (is_const(a, {0, 0})) return make_const({0, 0});
    if (is_const(b, {1, 0})) return a;
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Div;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

inline NodePtr make_pow(NodePtr base, double ex) {
    if (!std::isfinite(ex)) throw std::invalid_argument("power exponent must be finite");
    if (ex == 1.0) return base;
    if (ex == 0.0) return make_const({1, 0});
    if (base->kind == NodeKind::Constant) return make_const(principal_pow(base->value, ex));
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Pow;
    n->exponent = ex;
    n->a = std::move(base);
    return n;
}

inline NodePtr make_exp(NodePtr a) {
    if (a->kind == NodeKind::Constant) return make_const(std::exp(a->value));
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Exp;
    n->a = std::move(a);
    return n;
}

inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format_constant(Complex v) {
    double re = v.real(), im = v.imag();
    if (im == 0.0) return format_double(re);
    std::string imag = (im == 1.0) ? "j" : (im == -1.0) ? "-j" : format_double(im) + "*j";
    if (re == 0.0) return imag;
    if (im < 0.0) return "(" + format_double(re) + imag + ")";
    return "(" + format_double(re) + "+" + imag + ")";
}

}  // namespace detail

// Expression tree for a transfer function of the complex variable s.
// Immutable after construction; evaluation and differentiation are pure.
//
// Branch convention: every power node E^k evaluates as exp(k*Log(E)) with
// the principal logarithm, so a factor (s - b)^k carries its cut on the
// horizontal ray running left from b.
class TransferExpr {
public:
    TransferExpr() : root_(detail::make_const({0, 0})) {}
    explicit TransferExpr(detail::NodePtr root) : root_(std::move(root)) {}

    static TransferExpr constant(Complex v) { return TransferExpr(detail::make_const(v)); }
    static TransferExpr var() { return TransferExpr(detail::make_var()); }

    const detail::NodePtr& root() const { return root_; }

    friend TransferExpr operator+(const TransferExpr& a, const TransferExpr& b) {
        return TransferExpr(detail::make_add(a.root_, b.root_));
    }
    friend TransferExpr operator-(const TransferExpr& a, const TransferExpr& b) {
        return TransferExpr(detail::make_sub(a.root_, b.root_));
    }
    friend TransferExpr operator*(const TransferExpr& a, const TransferExpr& b) {
        return TransferExpr(detail::make_mul(a.root_, b.root_));
    }
    friend TransferExpr operator/(const TransferExpr& a, const TransferExpr& b) {
        return TransferExpr(detail::make_div(a.root_, b.root_));
    }
    TransferExpr pow(double ex) const { return TransferExpr(detail::make_pow(root_, ex)); }

    bool operator==(const TransferExpr& o) const { return structurally_equal(root_, o.root_); }

private:
    static bool structurally_equal(const detail::NodePtr& x, const detail::NodePtr& y) {
        if (x == y) return true;
        if (x->kind != y->kind) return false;
        switch (x->kind) {
            case detail::NodeKind::Constant: return x->value == y->value;
            case detail::NodeKind::Var: return true;
            case detail::NodeKind::Pow:
                return x->exponent == y->exponent && structurally_equal(x->a, y->a);
            case detail::NodeKind::Exp:
            case detail::NodeKind::Neg: return structurally_equal(x->a, y->a);
            default:
                return structurally_equal(x->a, y->a) && structurally_equal(x->b, y->b);
        }
    }

    detail::NodePtr root_;
};

using ConstantBindings = std::map<std::string, Complex>;

namespace detail {

class Parser {
public:
    Parser(std::string_view text, const ConstantBindings& bindings)
        : text_(text), bindings_(bindings) {}

    NodePtr parse() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("empty input", 0);
        NodePtr e = expression();
        skip_ws();
        if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
        check_finite_constants(e);
        return e;
    }

    static void check_finite_constants(const NodePtr& n) {
        if (n->kind == NodeKind::Constant) {
            if (!std::isfinite(n->value.real()) || !std::isfinite(n->value.imag()))
                throw ParseError("constant folding produced a non-finite value", 0);
            return;
        }
        if (n->a) check_finite_constants(n->a);
        if (n->b) check_finite_constants(n->b);
    }

private:
    NodePtr expression() {
        NodePtr lhs = term();
        for (;;) {
            skip_ws();
            if (consume('+')) lhs = make_add(lhs, term());
            else if (consume('-')) lhs = make_sub(lhs, term());
            else return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            skip_ws();
            std::size_t at = pos_;
            if (consume('*')) lhs = make_mul(lhs, unary());
            else if (consume('/')) lhs = make_div(lhs, unary(), at);
            else return lhs;
        }
    }

    NodePtr unary() {
        skip_ws();
        if (consume('-')) return make_neg(unary());
        if (consume('+')) return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = atom();
        skip_ws();
        if (consume('^')) {
            std::size_t at = pos_;
            double ex = exponent_literal();
            try {
                base = make_pow(base, ex);
            } catch (const EvalError& e) {
                throw ParseError(std::string("invalid constant power: ") + e.what(), at);
            }
        }
        return base;
    }

    // The exponent of '^' must be a (possibly negated, possibly
    // parenthesized) real literal; expression exponents are rejected.
    double exponent_literal() {
        skip_ws();
        bool paren = consume('(');
        skip_ws();
        double sign = 1.0;
        if (consume('-')) sign = -1.0;
        skip_ws();
        std::size_t at = pos_;
        if (pos_ >= text_.size() || !(std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            throw ParseError("exponent must be a real literal", at);
        double v = sign * number();
        if (paren) {
            skip_ws();
            if (!consume(')')) throw ParseError("expected ')' after exponent", pos_);
        }
        return v;
    }

    NodePtr atom() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = expression();
            skip_ws();
            if (!consume(')')) throw ParseError("expected ')'", pos_);
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return make_const(Complex(number(), 0.0));
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    NodePtr identifier() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string name(text_.substr(start, pos_ - start));
        if (name == "s") return make_var();
        if (name == "j") return make_const(Complex(0.0, 1.0));
        if (name == "exp") {
            skip_ws();
            if (!consume('(')) throw ParseError("expected '(' after exp", pos_);
            NodePtr arg = expression();
            skip_ws();
            if (!consume(')')) throw ParseError("expected ')' after exp argument", pos_);
            return make_exp(arg);
        }
        auto it = bindings_.find(name);
        if (it == bindings_.end())
            throw ParseError("unbound constant '" + name + "'", start);
        if (!std::isfinite(it->second.real()) || !std::isfinite(it->second.imag()))
            throw ParseError("constant '" + name + "' is not finite", start);
        return make_const(it->second);
    }

    double number() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t mark = pos_++;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            } else {
                pos_ = mark;  // 'e' was not an exponent marker
            }
        }
        double v = 0;
        auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (res.ec != std::errc() || res.ptr != text_.data() + pos_)
            throw ParseError("malformed number", start);
        if (!std::isfinite(v)) throw ParseError("number out of range", start);
        return v;
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool consume(char c) {
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    std::string_view text_;
    const ConstantBindings& bindings_;
    std::size_t pos_ = 0;
};

inline Complex eval_node(const Node& n, Complex s) {
    switch (n.kind) {
        case NodeKind::Constant: return n.value;
        case NodeKind::Var: return s;
        case NodeKind::Add: return eval_node(*n.a, s) + eval_node(*n.b, s);
        case NodeKind::Sub: return eval_node(*n.a, s) - eval_node(*n.b, s);
        case NodeKind::Mul: return eval_node(*n.a, s) * eval_node(*n.b, s);
        case NodeKind::Div: {
            Complex den = eval_node(*n.b, s);
            if (den == Complex(0.0, 0.0)) throw EvalError("pole hit: division by zero");
            return eval_node(*n.a, s) / den;
        }
        case NodeKind::Pow: return principal_pow(eval_node(*n.a, s), n.exponent);
        case NodeKind::Exp: return std::exp(eval_node(*n.a, s));
        case NodeKind::Neg: return -eval_node(*n.a, s);
    }
    throw EvalError("corrupt expression node");
}

inline NodePtr derivative_node(const NodePtr& n) {
    switch (n->kind) {
        case NodeKind::Constant: return make_const({0, 0});
        case NodeKind::Var: return make_const({1, 0});
        case NodeKind::Add: return make_add(derivative_node(n->a), derivative_node(n->b));
        case NodeKind::Sub: return make_sub(derivative_node(n->a), derivative_node(n->b));
        case NodeKind::Mul:
            return make_add(make_mul(derivative_node(n->a), n->b),
                            make_mul(n->a, derivative_node(n->b)));
        case NodeKind::Div:
            return make_div(make_sub(make_mul(derivative_node(n->a), n->b),
                                     make_mul(n->a, derivative_node(n->b))),
                            make_pow(n->b, 2.0));
        case NodeKind::Pow:
            // d (E^k) = k E^(k-1) E'
            return make_mul(make_mul(make_const({n->exponent, 0}), make_pow(n->a, n->exponent - 1.0)),
                            derivative_node(n->a));
        case NodeKind::Exp: return make_mul(n, derivative_node(n->a));
        case NodeKind::Neg: return make_neg(derivative_node(n->a));
    }
    throw std::logic_error("corrupt expression node");
}

inline int precedence(NodeKind k) {
    switch (k) {
        case NodeKind::Add:
        case NodeKind::Sub: return 1;
        case NodeKind::Mul:
        case NodeKind::Div: return 2;
        case NodeKind::Neg: return 3;
        case NodeKind::Pow: return 4;
        default: return 5;
    }
}

inline void print_node(const NodePtr& n, std::string& out, int parent_prec, bool rhs) {
    int prec = precedence(n->kind);
    bool need_paren = prec < parent_prec || (prec == parent_prec && rhs);
    if (n->kind == NodeKind::Constant) {
        // "a*j" forms must be protected inside products so the reparse
        // folds them back into a single constant.
        std::string txt = format_constant(n->value);
        bool composite = txt.front() != '(' && txt.find('*') != std::string::npos;
        if (composite && parent_prec >= 2) out += '(' + txt + ')';
        else out += txt;
        return;
    }
    if (need_paren) out += '(';
    switch (n->kind) {
        case NodeKind::Var: out += 's'; break;
        case NodeKind::Add:
            print_node(n->a, out, 1, false);
            out += " + ";
            print_node(n->b, out, 1, true);
            break;
        case NodeKind::Sub:
            print_node(n->a, out, 1, false);
            out += " - ";
            print_node(n->b, out, 1, true);
            break;
        case NodeKind::Mul:
            print_node(n->a, out, 2, false);
            out += "*";
            print_node(n->b, out, 2, true);
            break;
        case NodeKind::Div:
            print_node(n->a, out, 2, false);
            out += "/";
            print_node(n->b, out, 2, true);
            break;
        case NodeKind::Neg:
            out += "-";
            print_node(n->a, out, 3, true);
            break;
        case NodeKind::Pow:
            print_node(n->a, out, 5, false);
            out += "^";
            if (n->exponent < 0) {
                out += "(" + format_double(n->exponent) + ")";
            } else {
                out += format_double(n->exponent);
            }
            break;
        default: break;
    }
    if (need_paren) out += ')';
}

}  // namespace detail

inline TransferExpr parse(std::string_view text, const ConstantBindings& bindings = {}) {
    detail::Parser p(text, bindings);
    return TransferExpr(p.parse());
}

inline Complex eval(const TransferExpr& f, Complex s) {
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
        throw EvalError("evaluation point is not finite");
    Complex v = detail::eval_node(*f.root(), s);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw EvalError("non-finite value");
    return v;
}

inline TransferExpr derivative(const TransferExpr& f) {
    return TransferExpr(detail::derivative_node(f.root()));
}

// Deterministic parenthesization; parse(to_string(f)) == f structurally.
inline std::string to_string(const TransferExpr& f) {
    std::string out;
    detail::print_node(f.root(), out, 0, false);
    return out;
}

}  // namespace bibo
