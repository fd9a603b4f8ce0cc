#include "dfadapt/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <vector>

#include "dfadapt/error.hpp"

namespace dfadapt {

struct Expression::Node {
    enum class Kind { constant, var_x, var_y, var_nx, var_ny, neg, add, sub, mul, div, pow, lt, le, gt, ge, call, select };
    Kind kind = Kind::constant;
    double value = 0.0;
    double (*fn)(double) = nullptr;
    std::vector<std::shared_ptr<const Node>> args;

    double eval(double x, double y, double nx, double ny) const {
        auto a = [&](int i) { return args[i]->eval(x, y, nx, ny); };
        switch (kind) {
            case Kind::constant: return value;
            case Kind::var_x: return x;
            case Kind::var_y: return y;
            case Kind::var_nx: return nx;
            case Kind::var_ny: return ny;
            case Kind::neg: return -a(0);
            case Kind::add: return a(0) + a(1);
            case Kind::sub: return a(0) - a(1);
            case Kind::mul: return a(0) * a(1);
            case Kind::div: return a(0) / a(1);
            case Kind::pow: return std::pow(a(0), a(1));
            case Kind::lt: return a(0) < a(1) ? 1.0 : 0.0;
            case Kind::le: return a(0) <= a(1) ? 1.0 : 0.0;
            case Kind::gt: return a(0) > a(1) ? 1.0 : 0.0;
            case Kind::ge: return a(0) >= a(1) ? 1.0 : 0.0;
            case Kind::call: return fn(a(0));
            case Kind::select: return a(0) != 0.0 ? a(1) : a(2);
        }
        return 0.0;
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind k, std::vector<NodePtr> args = {}, double value = 0.0, double (*fn)(double) = nullptr) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = k;
    n->args = std::move(args);
    n->value = value;
    n->fn = fn;
    return n;
}

double fn_sin(double v) { return std::sin(v); }
double fn_cos(double v) { return std::cos(v); }
double fn_tan(double v) { return std::tan(v); }
double fn_exp(double v) { return std::exp(v); }
double fn_log(double v) { return std::log(v); }
double fn_sqrt(double v) { return std::sqrt(v); }
double fn_abs(double v) { return std::abs(v); }

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    NodePtr parse_all() {
        NodePtr n = compare();
        skip();
        if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
        return n;
    }

private:
    [[noreturn]] void fail(const std::string& why) const {
        throw ParseError("expression '" + std::string(s_) + "' at column " + std::to_string(pos_ + 1) + ": " + why);
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(std::string_view tok) {
        skip();
        if (s_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(std::string_view(&c, 1))) fail(std::string("expected '") + c + "'");
    }

    NodePtr compare() {
        NodePtr lhs = sum();
        if (accept("<=")) return make(Kind::le, {lhs, sum()});
        if (accept(">=")) return make(Kind::ge, {lhs, sum()});
        if (accept("<")) return make(Kind::lt, {lhs, sum()});
        if (accept(">")) return make(Kind::gt, {lhs, sum()});
        return lhs;
    }

    NodePtr sum() {
        NodePtr n = product();
        for (;;) {
            if (accept("+")) n = make(Kind::add, {n, product()});
            else if (accept("-")) n = make(Kind::sub, {n, product()});
            else return n;
        }
    }

    NodePtr product() {
        NodePtr n = unary();
        for (;;) {
            if (accept("*")) n = make(Kind::mul, {n, unary()});
            else if (accept("/")) n = make(Kind::div, {n, unary()});
            else return n;
        }
    }

    NodePtr unary() {
        if (accept("-")) return make(Kind::neg, {unary()});
        if (accept("+")) return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept("^")) return make(Kind::pow, {base, unary()});
        return base;
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const std::string rest(s_.substr(pos_));
            char* end = nullptr;
            const double v = std::strtod(rest.c_str(), &end);
            if (end == rest.c_str()) fail("malformed number");
            pos_ += static_cast<std::size_t>(end - rest.c_str());
            return make(Kind::constant, {}, v);
        }
        if (accept("(")) {
            NodePtr n = compare();
            expect(')');
            return n;
        }
        std::string word;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            word += s_[pos_++];
        if (word.empty()) fail("expected a number, variable or function");
        if (word == "x") return make(Kind::var_x);
        if (word == "y") return make(Kind::var_y);
        if (word == "nx") return make(Kind::var_nx);
        if (word == "ny") return make(Kind::var_ny);
        if (word == "pi") return make(Kind::constant, {}, std::numbers::pi);
        if (word == "if") {
            expect('(');
            NodePtr cond = compare();
            expect(',');
            NodePtr a = compare();
            expect(',');
            NodePtr b = compare();
            expect(')');
            return make(Kind::select, {cond, a, b});
        }
        static const std::pair<const char*, double (*)(double)> table[] = {
            {"sin", fn_sin}, {"cos", fn_cos}, {"tan", fn_tan}, {"exp", fn_exp},
            {"log", fn_log}, {"sqrt", fn_sqrt}, {"abs", fn_abs}};
        for (const auto& [name, fn] : table) {
            if (word == name) {
                expect('(');
                NodePtr arg = compare();
                expect(')');
                return make(Kind::call, {arg}, 0.0, fn);
            }
        }
        fail("unknown identifier '" + word + "'");
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression() : root_(make(Kind::constant)), source_("0") {}

Expression Expression::parse(std::string_view text) {
    Expression e;
    e.root_ = Parser(text).parse_all();
    e.source_ = std::string(text);
    return e;
}

Expression Expression::constant(double value) {
    Expression e;
    e.root_ = make(Kind::constant, {}, value);
    e.source_ = std::to_string(value);
    return e;
}

double Expression::operator()(double x, double y, double nx, double ny) const {
    return root_->eval(x, y, nx, ny);
}

}  // namespace dfadapt
