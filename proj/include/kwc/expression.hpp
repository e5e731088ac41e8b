#pragma once

// Small closed-form expression language for forcings and initial profiles:
// numbers, the variables t, x, y, the constants pi and e, + - * / ^ with the
// usual precedence, unary minus, and sin cos tan tanh exp log sqrt abs.

#include <cctype>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "grid.hpp"

namespace kwc {

class Expression {
public:
  Expression() : Expression("0") {}
  explicit Expression(std::string source) : source_(std::move(source)) {
    Parser p{source_, 0};
    root_ = p.parse_sum();
    p.skip_ws();
    if (p.pos != source_.size())
      throw Error("expression: unexpected '" + source_.substr(p.pos) + "' in \"" + source_ + "\"");
  }

  double operator()(double t, double x, double y = 0.0) const { return root_->eval(t, x, y); }

  const std::string& source() const { return source_; }

  /// True when the value does not depend on x or y.
  bool spatially_constant() const { return !root_->uses_space(); }

  ScalarField sample(const Grid& g, double t) const {
    return ScalarField::sample(g, [&](double x, double y) { return (*this)(t, x, y); });
  }

  bool operator==(const Expression& o) const { return source_ == o.source_; }

private:
  struct Node {
    enum Kind { Number, VarT, VarX, VarY, Add, Sub, Mul, Div, Pow, Neg, Call } kind = Number;
    double value = 0.0;
    double (*fn)(double) = nullptr;
    std::shared_ptr<const Node> lhs, rhs;

    double eval(double t, double x, double y) const {
      switch (kind) {
        case Number: return value;
        case VarT: return t;
        case VarX: return x;
        case VarY: return y;
        case Add: return lhs->eval(t, x, y) + rhs->eval(t, x, y);
        case Sub: return lhs->eval(t, x, y) - rhs->eval(t, x, y);
        case Mul: return lhs->eval(t, x, y) * rhs->eval(t, x, y);
        case Div: return lhs->eval(t, x, y) / rhs->eval(t, x, y);
        case Pow: return std::pow(lhs->eval(t, x, y), rhs->eval(t, x, y));
        case Neg: return -lhs->eval(t, x, y);
        case Call: return fn(lhs->eval(t, x, y));
      }
      return 0.0;
    }

    bool uses_space() const {
      if (kind == VarX || kind == VarY) return true;
      return (lhs && lhs->uses_space()) || (rhs && rhs->uses_space());
    }
  };
  using NodePtr = std::shared_ptr<const Node>;

  static NodePtr make(Node::Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
  }

  struct Parser {
    const std::string& s;
    std::size_t pos;

    void skip_ws() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
      skip_ws();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    [[noreturn]] void fail(const std::string& what) const {
      throw Error("expression: " + what + " at position " + std::to_string(pos) + " in \"" + s + "\"");
    }

    NodePtr parse_sum() {
      NodePtr n = parse_product();
      for (;;) {
        if (eat('+')) n = make(Node::Add, n, parse_product());
        else if (eat('-')) n = make(Node::Sub, n, parse_product());
        else return n;
      }
    }
    NodePtr parse_product() {
      NodePtr n = parse_unary();
      for (;;) {
        if (eat('*')) n = make(Node::Mul, n, parse_unary());
        else if (eat('/')) n = make(Node::Div, n, parse_unary());
        else return n;
      }
    }
    NodePtr parse_unary() {
      if (eat('-')) return make(Node::Neg, parse_unary());
      if (eat('+')) return parse_unary();
      return parse_power();
    }
    NodePtr parse_power() {
      NodePtr base = parse_atom();
      if (eat('^')) return make(Node::Pow, base, parse_unary());  // right-associative
      return base;
    }
    NodePtr parse_atom() {
      skip_ws();
      if (pos >= s.size()) fail("unexpected end");
      if (eat('(')) {
        NodePtr n = parse_sum();
        if (!eat(')')) fail("expected ')'");
        return n;
      }
      const char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(s.substr(pos), &used);
        } catch (const std::exception&) {
          fail("bad number");
        }
        pos += used;
        auto n = std::make_shared<Node>();
        n->value = v;
        return n;
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        std::size_t start = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
        const std::string id = s.substr(start, pos - start);
        if (id == "t") return make(Node::VarT);
        if (id == "x") return make(Node::VarX);
        if (id == "y") return make(Node::VarY);
        if (id == "pi" || id == "e") {
          auto n = std::make_shared<Node>();
          n->value = id == "pi" ? M_PI : M_E;
          return n;
        }
        double (*fn)(double) = lookup(id);
        if (!fn) fail("unknown identifier '" + id + "'");
        if (!eat('(')) fail("expected '(' after " + id);
        auto n = std::make_shared<Node>();
        n->kind = Node::Call;
        n->fn = fn;
        n->lhs = parse_sum();
        if (!eat(')')) fail("expected ')'");
        return n;
      }
      fail(std::string("unexpected character '") + c + "'");
    }

    static double (*lookup(const std::string& id))(double) {
      if (id == "sin") return [](double v) { return std::sin(v); };
      if (id == "cos") return [](double v) { return std::cos(v); };
      if (id == "tan") return [](double v) { return std::tan(v); };
      if (id == "tanh") return [](double v) { return std::tanh(v); };
      if (id == "exp") return [](double v) { return std::exp(v); };
      if (id == "log") return [](double v) { return std::log(v); };
      if (id == "sqrt") return [](double v) { return std::sqrt(v); };
      if (id == "abs") return [](double v) { return std::abs(v); };
      return nullptr;
    }
  };

  std::string source_;
  NodePtr root_;
};

}  // namespace kwc
