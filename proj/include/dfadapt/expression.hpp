#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace dfadapt {

// Parsed scalar expression in the variables x, y (and nx, ny, the outward
// normal, when used as boundary data).
//
// Grammar (whitespace-insensitive, precedence low to high):
//   expr    := compare
//   compare := sum [ ("<" | "<=" | ">" | ">=") sum ]     -> 1 or 0
//   sum     := product { ("+" | "-") product }
//   product := unary { ("*" | "/") unary }
//   unary   := "-" unary | power
//   power   := primary [ "^" unary ]
//   primary := number | "x" | "y" | "nx" | "ny" | "pi"
//            | fn "(" expr ")"  with fn in sin cos tan exp log sqrt abs
//            | "if" "(" expr "," expr "," expr ")"
//            | "(" expr ")"
// Examples: "2+sin(pi*x)*sin(pi*y)", "if(y <= 1, -2, 0)".
class Expression {
public:
    struct Node;

    Expression();  // the constant 0
    static Expression parse(std::string_view text);
    static Expression constant(double value);

    double operator()(double x, double y, double nx = 0.0, double ny = 0.0) const;
    const std::string& source() const { return source_; }

private:
    std::shared_ptr<const Node> root_;
    std::string source_;
};

}  // namespace dfadapt
