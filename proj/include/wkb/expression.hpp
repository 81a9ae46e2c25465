#pragma once

// Small expression language for user coefficient functions a(x).
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | '+' unary | power
//   power   := primary ('^' unary)?          right associative, binds tighter than unary minus
//   primary := number | 'x' | func '(' expr ')' | '(' expr ')'
//   func    := exp | log | sin | cos | sqrt
//
// Expressions are evaluated on Jet<T>, which yields exact derivatives.

#include <cctype>
#include <cstdlib>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wkb/errors.hpp"
#include "wkb/jet.hpp"

namespace wkb {

class Expression {
 public:
  enum class Op { number, variable, add, sub, mul, div, pow, neg, exp, log, sin, cos, sqrt };

  static Expression parse(std::string_view text) {
    Parser p{text, 0};
    auto root = p.expr();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("unexpected trailing input");
    return Expression(std::move(root), std::string(text));
  }

  template <class T>
  [[nodiscard]] Jet<T> evaluate(T x0, int order) const {
    return eval<T>(*root_, Jet<T>::variable(x0, order));
  }

  [[nodiscard]] double value(double x) const { return evaluate<double>(x, 0).value(); }
  [[nodiscard]] const std::string& text() const noexcept { return text_; }

 private:
  struct Node {
    Op op = Op::number;
    double number = 0.0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };
  using NodePtr = std::shared_ptr<const Node>;

  Expression(NodePtr root, std::string text) : root_(std::move(root)), text_(std::move(text)) {}

  static NodePtr make(Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr, double number = 0.0) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->number = number;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
  }

  struct Parser {
    std::string_view src;
    std::size_t pos;

    [[noreturn]] void fail(const std::string& msg) const {
      throw ConfigError("expression parse error at offset " + std::to_string(pos) + ": " + msg + " in '" +
                        std::string(src) + "'");
    }

    void skip_ws() {
      while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos])) != 0) ++pos;
    }

    bool accept(char c) {
      skip_ws();
      if (pos < src.size() && src[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }

    NodePtr expr() {
      auto lhs = term();
      for (;;) {
        if (accept('+')) {
          lhs = make(Op::add, lhs, term());
        } else if (accept('-')) {
          lhs = make(Op::sub, lhs, term());
        } else {
          return lhs;
        }
      }
    }

    NodePtr term() {
      auto lhs = unary();
      for (;;) {
        if (accept('*')) {
          lhs = make(Op::mul, lhs, unary());
        } else if (accept('/')) {
          lhs = make(Op::div, lhs, unary());
        } else {
          return lhs;
        }
      }
    }

    NodePtr unary() {
      if (accept('-')) return make(Op::neg, unary());
      if (accept('+')) return unary();
      return power();
    }

    NodePtr power() {
      auto base = primary();
      if (accept('^')) return make(Op::pow, base, unary());
      return base;
    }

    NodePtr primary() {
      skip_ws();
      if (pos >= src.size()) fail("unexpected end of input");
      const char c = src[pos];
      if (c == '(') {
        ++pos;
        auto inner = expr();
        if (!accept(')')) fail("expected ')'");
        return inner;
      }
      if ((std::isdigit(static_cast<unsigned char>(c)) != 0) || c == '.') {
        const std::string rest(src.substr(pos));
        char* end = nullptr;
        const double v = std::strtod(rest.c_str(), &end);
        if (end == rest.c_str()) fail("bad number");
        pos += static_cast<std::size_t>(end - rest.c_str());
        return make(Op::number, nullptr, nullptr, v);
      }
      if (std::isalpha(static_cast<unsigned char>(c)) != 0) {
        const std::size_t start = pos;
        while (pos < src.size() && std::isalpha(static_cast<unsigned char>(src[pos])) != 0) ++pos;
        const std::string_view name = src.substr(start, pos - start);
        if (name == "x") return make(Op::variable);
        Op op{};
        if (name == "exp") {
          op = Op::exp;
        } else if (name == "log") {
          op = Op::log;
        } else if (name == "sin") {
          op = Op::sin;
        } else if (name == "cos") {
          op = Op::cos;
        } else if (name == "sqrt") {
          op = Op::sqrt;
        } else {
          pos = start;
          fail("unknown identifier '" + std::string(name) + "'");
        }
        if (!accept('(')) fail("expected '(' after function name");
        auto arg = expr();
        if (!accept(')')) fail("expected ')'");
        return make(op, arg);
      }
      fail(std::string("unexpected character '") + c + "'");
    }
  };

  template <class T>
  static Jet<T> eval(const Node& n, const Jet<T>& x) {
    switch (n.op) {
      case Op::number:
        return Jet<T>(T(n.number), x.order());
      case Op::variable:
        return x;
      case Op::add:
        return eval(*n.lhs, x) + eval(*n.rhs, x);
      case Op::sub:
        return eval(*n.lhs, x) - eval(*n.rhs, x);
      case Op::mul:
        return eval(*n.lhs, x) * eval(*n.rhs, x);
      case Op::div:
        return eval(*n.lhs, x) / eval(*n.rhs, x);
      case Op::pow:
        return pow(eval(*n.lhs, x), eval(*n.rhs, x));
      case Op::neg:
        return -eval(*n.lhs, x);
      case Op::exp:
        return exp(eval(*n.lhs, x));
      case Op::log:
        return log(eval(*n.lhs, x));
      case Op::sin:
        return sin(eval(*n.lhs, x));
      case Op::cos:
        return cos(eval(*n.lhs, x));
      case Op::sqrt:
        return sqrt(eval(*n.lhs, x));
    }
    return Jet<T>(T(0), x.order());
  }

  NodePtr root_;
  std::string text_;
};

}  // namespace wkb
