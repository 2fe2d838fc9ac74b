#pragma once

#include "critorb/core.hpp"

#include <cctype>
#include <memory>
#include <string>

namespace critorb {

// Tiny arithmetic-expression evaluator for config fields: variables x, y,
// constants, + - * / ^, parentheses, and the usual scalar functions.
// Grammar: expr := term (('+'|'-') term)* ; term := factor (('*'|'/') factor)*;
// factor := unary ('^' factor)? ; unary := ('-'|'+')* primary.
class Expr {
public:
    static Expr parse(const std::string& text) {
        Parser p{text, 0};
        Expr e;
        e.root_ = p.parse_expr();
        p.skip_ws();
        if (p.pos != text.size())
            throw PreconditionError("expression: trailing input at position " +
                                    std::to_string(p.pos) + " in '" + text + "'");
        return e;
    }

    double eval(double x, double y) const { return root_->eval(x, y); }

private:
    struct Node {
        virtual ~Node() = default;
        virtual double eval(double x, double y) const = 0;
    };
    using NodePtr = std::shared_ptr<const Node>;

    struct Num : Node {
        double v;
        explicit Num(double v) : v(v) {}
        double eval(double, double) const override { return v; }
    };
    struct Var : Node {
        bool is_x;
        explicit Var(bool is_x) : is_x(is_x) {}
        double eval(double x, double y) const override { return is_x ? x : y; }
    };
    struct Bin : Node {
        char op;
        NodePtr a, b;
        Bin(char op, NodePtr a, NodePtr b) : op(op), a(std::move(a)), b(std::move(b)) {}
        double eval(double x, double y) const override {
            const double u = a->eval(x, y), v = b->eval(x, y);
            switch (op) {
                case '+': return u + v;
                case '-': return u - v;
                case '*': return u * v;
                case '/': return u / v;
                case '^': return std::pow(u, v);
            }
            return 0.0;
        }
    };
    struct Neg : Node {
        NodePtr a;
        explicit Neg(NodePtr a) : a(std::move(a)) {}
        double eval(double x, double y) const override { return -a->eval(x, y); }
    };
    struct Fun : Node {
        double (*f)(double);
        NodePtr a;
        Fun(double (*f)(double), NodePtr a) : f(f), a(std::move(a)) {}
        double eval(double x, double y) const override { return f(a->eval(x, y)); }
    };

    struct Parser {
        const std::string& s;
        size_t pos;

        void skip_ws() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        bool match(char c) {
            skip_ws();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }
        [[noreturn]] void fail(const std::string& what) {
            throw PreconditionError("expression: " + what + " at position " +
                                    std::to_string(pos) + " in '" + s + "'");
        }

        NodePtr parse_expr() {
            NodePtr a = parse_term();
            for (;;) {
                if (match('+'))
                    a = std::make_shared<Bin>('+', a, parse_term());
                else if (match('-'))
                    a = std::make_shared<Bin>('-', a, parse_term());
                else
                    return a;
            }
        }
        NodePtr parse_term() {
            NodePtr a = parse_factor();
            for (;;) {
                if (match('*'))
                    a = std::make_shared<Bin>('*', a, parse_factor());
                else if (match('/'))
                    a = std::make_shared<Bin>('/', a, parse_factor());
                else
                    return a;
            }
        }
        NodePtr parse_factor() {
            NodePtr a = parse_unary();
            if (match('^')) return std::make_shared<Bin>('^', a, parse_factor());
            return a;
        }
        NodePtr parse_unary() {
            if (match('-')) return std::make_shared<Neg>(parse_unary());
            if (match('+')) return parse_unary();
            return parse_primary();
        }
        NodePtr parse_primary() {
            skip_ws();
            if (pos >= s.size()) fail("unexpected end of input");
            if (match('(')) {
                NodePtr a = parse_expr();
                if (!match(')')) fail("missing ')'");
                return a;
            }
            const char c = s[pos];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                size_t used = 0;
                double v;
                try {
                    v = std::stod(s.substr(pos), &used);
                } catch (const std::exception&) {
                    fail("bad number");
                }
                pos += used;
                return std::make_shared<Num>(v);
            }
            if (std::isalpha(static_cast<unsigned char>(c))) {
                size_t end = pos;
                while (end < s.size() &&
                       (std::isalnum(static_cast<unsigned char>(s[end])) || s[end] == '_'))
                    ++end;
                const std::string name = s.substr(pos, end - pos);
                pos = end;
                if (name == "x") return std::make_shared<Var>(true);
                if (name == "y") return std::make_shared<Var>(false);
                if (name == "pi") return std::make_shared<Num>(M_PI);
                if (name == "e") return std::make_shared<Num>(M_E);
                static const std::pair<const char*, double (*)(double)> funcs[] = {
                    {"sin", std::sin},   {"cos", std::cos},   {"tan", std::tan},
                    {"exp", std::exp},   {"log", std::log},   {"sqrt", std::sqrt},
                    {"abs", std::fabs},  {"tanh", std::tanh}, {"sinh", std::sinh},
                    {"cosh", std::cosh},
                };
                for (const auto& [fn, fp] : funcs) {
                    if (name == fn) {
                        if (!match('(')) fail("expected '(' after " + name);
                        NodePtr a = parse_expr();
                        if (!match(')')) fail("missing ')'");
                        return std::make_shared<Fun>(fp, a);
                    }
                }
                fail("unknown identifier '" + name + "'");
            }
            fail(std::string("unexpected character '") + c + "'");
        }
    };

    NodePtr root_;
};

}  // namespace critorb
