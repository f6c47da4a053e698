#include "lfbp/probe.hpp"

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>

namespace lfbp {

namespace {

using Expr = std::function<double(double)>;

// Recursive descent:
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := atom ('^' unary)?
//   atom    := number | 'y' | constant | name '(' sum (',' sum)? ')' | '(' sum ')'
class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  Expr parse() {
    Expr e = sum();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ProbeError("expression, column " + std::to_string(pos_ + 1) + ": " + msg);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr sum() {
    Expr lhs = product();
    for (;;) {
      if (eat('+')) {
        lhs = [l = lhs, r = product()](double y) { return l(y) + r(y); };
      } else if (eat('-')) {
        lhs = [l = lhs, r = product()](double y) { return l(y) - r(y); };
      } else {
        return lhs;
      }
    }
  }

  Expr product() {
    Expr lhs = unary();
    for (;;) {
      if (eat('*')) {
        lhs = [l = lhs, r = unary()](double y) { return l(y) * r(y); };
      } else if (eat('/')) {
        lhs = [l = lhs, r = unary()](double y) { return l(y) / r(y); };
      } else {
        return lhs;
      }
    }
  }

  Expr unary() {
    if (eat('-')) return [e = unary()](double y) { return -e(y); };
    if (eat('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = atom();
    if (eat('^')) return [b = base, p = unary()](double y) { return std::pow(b(y), p(y)); };
    return base;
  }

  Expr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    if (eat('(')) {
      Expr e = sum();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("bad number");
      }
      pos_ += used;
      return [v](double) { return v; };
    }
    if (!std::isalpha(static_cast<unsigned char>(c))) fail("unexpected '" + std::string(1, c) + "'");
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    const std::string name = s_.substr(start, pos_ - start);
    if (name == "y") return [](double y) { return y; };
    if (name == "pi") return [](double) { return std::numbers::pi; };
    if (name == "e") return [](double) { return std::numbers::e; };

    if (!eat('(')) fail("unknown name '" + name + "'");
    Expr a = sum();
    if (name == "min" || name == "max") {
      if (!eat(',')) fail(name + " takes two arguments");
      Expr b = sum();
      if (!eat(')')) fail("expected ')'");
      if (name == "min") return [a, b](double y) { return std::min(a(y), b(y)); };
      return [a, b](double y) { return std::max(a(y), b(y)); };
    }
    if (!eat(')')) fail("expected ')'");
    double (*f)(double) = nullptr;
    if (name == "exp") f = [](double v) { return std::exp(v); };
    else if (name == "log") f = [](double v) { return std::log(v); };
    else if (name == "sqrt") f = [](double v) { return std::sqrt(v); };
    else if (name == "abs") f = [](double v) { return std::abs(v); };
    else if (name == "sin") f = [](double v) { return std::sin(v); };
    else if (name == "cos") f = [](double v) { return std::cos(v); };
    else if (name == "tanh") f = [](double v) { return std::tanh(v); };
    else fail("unknown function '" + name + "'");
    return [a, f](double y) { return f(a(y)); };
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

double parse_number(const std::string& text, const std::string& source) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty() || !std::isfinite(v)) {
    throw ProbeError("probe '" + source + "': bad number '" + text + "'");
  }
  return v;
}

}  // namespace

std::function<double(double)> compile_expression(const std::string& formula) {
  return Parser(formula).parse();
}

void require_nested_integrable(const Probe& probe, const Triplet& triplet) {
  if (!probe.smooth && std::holds_alternative<ExpFamilyTriplet>(triplet)) {
    throw ProbeError("probe '" + probe.source +
                     "': indicators are not supported for generation-n functionals of the "
                     "exponential family; use exp: or expr:");
  }
}

Probe parse_probe(const std::string& source) {
  const auto colon = source.find(':');
  const std::string kind = source.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : source.substr(colon + 1);
  auto lift = [](std::function<double(double)> w) -> TestFunction {
    return [w = std::move(w)](const TypePoint& p) { return w(p.coordinate()); };
  };

  if (kind == "const") {
    const double c = rest.empty() ? 1.0 : parse_number(rest, source);
    return {source, constant_function(c)};
  }
  if (kind == "exp") {
    const double theta = parse_number(rest, source);
    return {source, lift([theta](double y) { return std::exp(-theta * y); })};
  }
  if (kind == "ind") {
    const auto mid = rest.find(':');
    if (mid == std::string::npos) throw ProbeError("probe '" + source + "': expected ind:A:B");
    const double a = parse_number(rest.substr(0, mid), source);
    const double b = parse_number(rest.substr(mid + 1), source);
    if (!(a <= b)) throw ProbeError("probe '" + source + "': empty interval");
    return {source, lift([a, b](double y) { return y >= a && y <= b ? 1.0 : 0.0; }), false};
  }
  if (kind == "expr") {
    if (rest.empty()) throw ProbeError("probe '" + source + "': empty expression");
    return {source, lift(compile_expression(rest))};
  }
  throw ProbeError("probe '" + source + "': unknown kind '" + kind + "'");
}

}  // namespace lfbp
