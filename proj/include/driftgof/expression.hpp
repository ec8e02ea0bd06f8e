#pragma once

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace driftgof {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " at offset " + std::to_string(offset)),
          offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

namespace detail {

enum class ExprOp : unsigned char {
    PushConst, PushX,
    Add, Sub, Mul, Div, Pow, Neg,
    Exp, Log, Sqrt, Tanh, Sin, Cos, Abs,
};

struct Instruction {
    ExprOp op;
    double value;  // only for PushConst
};

struct ExprNode {
    ExprOp op;
    double value = 0.0;  // PushConst payload
    std::shared_ptr<const ExprNode> lhs, rhs;
};

inline const char* function_name(ExprOp op) {
    switch (op) {
        case ExprOp::Exp:  return "exp";
        case ExprOp::Log:  return "log";
        case ExprOp::Sqrt: return "sqrt";
        case ExprOp::Tanh: return "tanh";
        case ExprOp::Sin:  return "sin";
        case ExprOp::Cos:  return "cos";
        case ExprOp::Abs:  return "abs";
        default:           return nullptr;
    }
}

}  // namespace detail

/// A parsed scalar function of the single variable `x`.
///
/// Grammar (highest precedence first): `^` (right associative), unary `-`,
/// `*` `/`, `+` `-` (all left associative); the function whitelist is
/// exp, log, sqrt, tanh, sin, cos, abs. Instances are immutable after parse
/// and safe to evaluate concurrently. Evaluation never throws: domain
/// violations (log of a negative, 0/0, ...) surface as non-finite values
/// and are checked by callers.
class FunctionExpr {
public:
    FunctionExpr() = default;

    static FunctionExpr parse(std::string_view source) {
        Parser p(source);
        FunctionExpr f;
        f.source_.assign(source);
        f.root_ = p.parse_full();
        f.compile();
        return f;
    }

    double operator()(double x) const noexcept {
        double stack[kMaxDepth];
        int top = -1;
        for (const auto& ins : program_) {
            using detail::ExprOp;
            switch (ins.op) {
                case ExprOp::PushConst: stack[++top] = ins.value; break;
                case ExprOp::PushX:     stack[++top] = x; break;
                case ExprOp::Add:  --top; stack[top] += stack[top + 1]; break;
                case ExprOp::Sub:  --top; stack[top] -= stack[top + 1]; break;
                case ExprOp::Mul:  --top; stack[top] *= stack[top + 1]; break;
                case ExprOp::Div:  --top; stack[top] /= stack[top + 1]; break;
                case ExprOp::Pow:  --top; stack[top] = std::pow(stack[top], stack[top + 1]); break;
                case ExprOp::Neg:  stack[top] = -stack[top]; break;
                case ExprOp::Exp:  stack[top] = std::exp(stack[top]); break;
                case ExprOp::Log:  stack[top] = std::log(stack[top]); break;
                case ExprOp::Sqrt: stack[top] = std::sqrt(stack[top]); break;
                case ExprOp::Tanh: stack[top] = std::tanh(stack[top]); break;
                case ExprOp::Sin:  stack[top] = std::sin(stack[top]); break;
                case ExprOp::Cos:  stack[top] = std::cos(stack[top]); break;
                case ExprOp::Abs:  stack[top] = std::fabs(stack[top]); break;
            }
        }
        return stack[0];
    }

    /// Original text handed to parse().
    const std::string& source() const noexcept { return source_; }

    /// Serialized form of the AST; reparsing yields a bit-identical evaluator.
    std::string canonical() const { return print(*root_, 0); }

    bool parsed() const noexcept { return root_ != nullptr; }

private:
    static constexpr int kMaxDepth = 64;

    using NodePtr = std::shared_ptr<const detail::ExprNode>;

    class Parser {
    public:
        explicit Parser(std::string_view src) : src_(src) {}

        NodePtr parse_full() {
            skip_ws();
            if (pos_ >= src_.size()) throw ParseError("empty expression", 0);
            NodePtr e = parse_sum();
            skip_ws();
            if (pos_ < src_.size())
                throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
            return e;
        }

    private:
        std::string_view src_;
        std::size_t pos_ = 0;

        void skip_ws() {
            while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        }
        bool eat(char c) {
            skip_ws();
            if (pos_ < src_.size() && src_[pos_] == c) { ++pos_; return true; }
            return false;
        }
        char peek() {
            skip_ws();
            return pos_ < src_.size() ? src_[pos_] : '\0';
        }

        static NodePtr make(detail::ExprOp op, NodePtr lhs = nullptr, NodePtr rhs = nullptr,
                            double value = 0.0) {
            auto n = std::make_shared<detail::ExprNode>();
            n->op = op;
            n->value = value;
            n->lhs = std::move(lhs);
            n->rhs = std::move(rhs);
            return n;
        }

        NodePtr parse_sum() {
            NodePtr lhs = parse_product();
            for (;;) {
                if (eat('+'))      lhs = make(detail::ExprOp::Add, lhs, parse_product());
                else if (eat('-')) lhs = make(detail::ExprOp::Sub, lhs, parse_product());
                else return lhs;
            }
        }

        NodePtr parse_product() {
            NodePtr lhs = parse_unary();
            for (;;) {
                if (eat('*'))      lhs = make(detail::ExprOp::Mul, lhs, parse_unary());
                else if (eat('/')) lhs = make(detail::ExprOp::Div, lhs, parse_unary());
                else return lhs;
            }
        }

        // Unary minus binds looser than '^': -x^2 is -(x^2).
        NodePtr parse_unary() {
            if (eat('-')) return make(detail::ExprOp::Neg, parse_unary());
            return parse_power();
        }

        NodePtr parse_power() {
            NodePtr base = parse_primary();
            if (eat('^')) return make(detail::ExprOp::Pow, base, parse_unary());
            return base;
        }

        NodePtr parse_primary() {
            skip_ws();
            if (pos_ >= src_.size()) throw ParseError("unexpected end of expression", pos_);
            const char c = src_[pos_];
            if (c == '(') {
                ++pos_;
                NodePtr e = parse_sum();
                skip_ws();
                if (!eat(')')) throw ParseError("unbalanced parenthesis", pos_);
                return e;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
            throw ParseError(std::string("unexpected '") + c + "'", pos_);
        }

        NodePtr parse_number() {
            const std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
                ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
                std::size_t mark = pos_ + 1;
                if (mark < src_.size() && (src_[mark] == '+' || src_[mark] == '-')) ++mark;
                if (mark < src_.size() && std::isdigit(static_cast<unsigned char>(src_[mark]))) {
                    pos_ = mark;
                    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                        ++pos_;
                }
            }
            const std::string text(src_.substr(start, pos_ - start));
            errno = 0;
            char* end = nullptr;
            const double v = std::strtod(text.c_str(), &end);
            if (end != text.c_str() + text.size())
                throw ParseError("malformed number '" + text + "'", start);
            return make(detail::ExprOp::PushConst, nullptr, nullptr, v);
        }

        NodePtr parse_identifier() {
            const std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            const std::string_view name = src_.substr(start, pos_ - start);
            if (name == "x") return make(detail::ExprOp::PushX);

            detail::ExprOp op;
            if      (name == "exp")  op = detail::ExprOp::Exp;
            else if (name == "log")  op = detail::ExprOp::Log;
            else if (name == "sqrt") op = detail::ExprOp::Sqrt;
            else if (name == "tanh") op = detail::ExprOp::Tanh;
            else if (name == "sin")  op = detail::ExprOp::Sin;
            else if (name == "cos")  op = detail::ExprOp::Cos;
            else if (name == "abs")  op = detail::ExprOp::Abs;
            else throw ParseError("unknown identifier '" + std::string(name) + "'", start);

            if (!eat('(')) throw ParseError("expected '(' after function name", pos_);
            NodePtr arg = parse_sum();
            skip_ws();
            if (!eat(')')) throw ParseError("unbalanced parenthesis", pos_);
            return make(op, std::move(arg));
        }
    };

    void compile() {
        program_.clear();
        const int depth = emit(*root_);
        if (depth > kMaxDepth)
            throw ParseError("expression too deeply nested", 0);
    }

    // Appends postfix instructions; returns the stack depth the subtree needs.
    int emit(const detail::ExprNode& n) {
        using detail::ExprOp;
        switch (n.op) {
            case ExprOp::PushConst:
                program_.push_back({n.op, n.value});
                return 1;
            case ExprOp::PushX:
                program_.push_back({n.op, 0.0});
                return 1;
            case ExprOp::Add: case ExprOp::Sub: case ExprOp::Mul:
            case ExprOp::Div: case ExprOp::Pow: {
                const int dl = emit(*n.lhs);
                const int dr = emit(*n.rhs);
                program_.push_back({n.op, 0.0});
                return std::max(dl, dr + 1);
            }
            default: {  // unary ops and functions
                const int d = emit(*n.lhs);
                program_.push_back({n.op, 0.0});
                return d;
            }
        }
    }

    // Precedence levels used by the printer; mirror the grammar.
    static int precedence(detail::ExprOp op) {
        using detail::ExprOp;
        switch (op) {
            case ExprOp::Add: case ExprOp::Sub: return 1;
            case ExprOp::Mul: case ExprOp::Div: return 2;
            case ExprOp::Neg: return 3;
            case ExprOp::Pow: return 4;
            default: return 5;  // atoms and function calls
        }
    }

    static std::string format_literal(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    static std::string print(const detail::ExprNode& n, int parent_prec) {
        using detail::ExprOp;
        const int prec = precedence(n.op);
        std::string out;
        switch (n.op) {
            case ExprOp::PushConst:
                out = format_literal(n.value);
                // negative literals only arise via Neg nodes, never here
                break;
            case ExprOp::PushX:
                out = "x";
                break;
            case ExprOp::Neg:
                out = "-" + print(*n.lhs, prec);
                break;
            case ExprOp::Add: case ExprOp::Sub: case ExprOp::Mul: case ExprOp::Div: {
                const char sym = (n.op == ExprOp::Add) ? '+'
                               : (n.op == ExprOp::Sub) ? '-'
                               : (n.op == ExprOp::Mul) ? '*' : '/';
                // left-associative: right child needs parens at equal precedence
                out = print(*n.lhs, prec) + sym + print(*n.rhs, prec + 1);
                break;
            }
            case ExprOp::Pow:
                // right-associative: left child needs parens at equal precedence
                out = print(*n.lhs, prec + 1) + "^" + print(*n.rhs, prec);
                break;
            default:
                out = std::string(detail::function_name(n.op)) + "(" + print(*n.lhs, 0) + ")";
                return out;  // call syntax never needs outer parens
        }
        if (prec < parent_prec && n.op != ExprOp::PushConst && n.op != ExprOp::PushX)
            out = "(" + out + ")";
        return out;
    }

    std::string source_;
    NodePtr root_;
    std::vector<detail::Instruction> program_;
};

}  // namespace driftgof
