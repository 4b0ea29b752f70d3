#pragma once

// A small expression language for metric definitions.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          exponent must be constant
//   primary := number | x<i> | y<i> | parameter | fn '(' expr ')' | '(' expr ')'
//   fn      := sqrt | exp | ln
//
// Positions are 1-based columns.  Trees are immutable and evaluate over any
// scalar ring with the same control flow.

#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "finslab/error.hpp"
#include "finslab/jets.hpp"

namespace finslab {

enum class NodeKind : std::uint8_t { literal, variable, parameter, neg, sqrt, exp, ln, add, sub, mul, div, pow };

struct Node {
  NodeKind kind = NodeKind::literal;
  double value = 0.0;
  Axis axis = Axis::x;
  int index = 0;  // 0-based
  std::string name;
  std::shared_ptr<const Node> left, right;
  int position = 0;
};

using NodePtr = std::shared_ptr<const Node>;

class Expr {
 public:
  Expr() = default;
  Expr(NodePtr root, int dimension) : root_(std::move(root)), dimension_(dimension) {}

  const Node& root() const {
    if (!root_) throw Error("empty expression");
    return *root_;
  }
  NodePtr root_ptr() const noexcept { return root_; }
  int dimension() const noexcept { return dimension_; }
  bool empty() const noexcept { return !root_; }

 private:
  NodePtr root_;
  int dimension_ = 0;
};

namespace detail {

class Parser {
 public:
  Parser(std::string_view src, int n, const std::set<std::string>& params)
      : src_(src), n_(n), params_(params) {}

  NodePtr parse() {
    skip();
    if (pos_ >= src_.size()) fail("empty expression", "an expression");
    NodePtr e = expr();
    skip();
    if (pos_ < src_.size()) fail(std::string("unexpected '") + src_[pos_] + "'", "an operator or end of input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, const std::string& expected) const {
    throw ParseError(msg, static_cast<int>(pos_) + 1, expected);
  }

  void skip() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  int col() const { return static_cast<int>(pos_) + 1; }

  static NodePtr make(NodeKind k, NodePtr l, NodePtr r, int position) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->left = std::move(l);
    n->right = std::move(r);
    n->position = position;
    return n;
  }

  NodePtr expr() {
    NodePtr l = term();
    for (;;) {
      skip();
      const int p = col();
      if (eat('+'))
        l = make(NodeKind::add, l, term(), p);
      else if (eat('-'))
        l = make(NodeKind::sub, l, term(), p);
      else
        return l;
    }
  }

  NodePtr term() {
    NodePtr l = unary();
    for (;;) {
      skip();
      const int p = col();
      if (eat('*'))
        l = make(NodeKind::mul, l, unary(), p);
      else if (eat('/'))
        l = make(NodeKind::div, l, unary(), p);
      else
        return l;
    }
  }

  NodePtr unary() {
    skip();
    const int p = col();
    if (eat('-')) return make(NodeKind::neg, unary(), nullptr, p);
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    skip();
    const int p = col();
    if (eat('^')) {
      skip();
      const std::size_t start = pos_;
      NodePtr ex = unary();
      if (has_variable(*ex)) {
        pos_ = start;
        fail("exponent depends on x or y", "a constant exponent");
      }
      return make(NodeKind::pow, base, ex, p);
    }
    return base;
  }

  static bool has_variable(const Node& n) {
    if (n.kind == NodeKind::variable) return true;
    return (n.left && has_variable(*n.left)) || (n.right && has_variable(*n.right));
  }

  NodePtr primary() {
    skip();
    if (pos_ >= src_.size()) fail("unexpected end of input", "a number, variable, function or '('");
    const char c = src_[pos_];
    const int p = col();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      if (!eat(')')) fail(pos_ >= src_.size() ? "unexpected end of input" : "unbalanced parenthesis", "')'");
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t end = pos_;
      while (end < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_'))
        ++end;
      const std::string id(src_.substr(pos_, end - pos_));
      if (id == "sqrt" || id == "exp" || id == "ln") {
        pos_ = end;
        if (!eat('(')) fail("function name without argument list", "'('");
        NodePtr arg = expr();
        if (!eat(')')) fail(pos_ >= src_.size() ? "unexpected end of input" : "unbalanced parenthesis", "')'");
        const NodeKind k = id == "sqrt" ? NodeKind::sqrt : id == "exp" ? NodeKind::exp : NodeKind::ln;
        return make(k, arg, nullptr, p);
      }
      if (params_.count(id)) {
        pos_ = end;
        auto n = std::make_shared<Node>();
        n->kind = NodeKind::parameter;
        n->name = id;
        n->position = p;
        return n;
      }
      if ((id[0] == 'x' || id[0] == 'y') && id.size() > 1 &&
          id.find_first_not_of("0123456789", 1) == std::string::npos) {
        int idx = 0;
        std::from_chars(id.data() + 1, id.data() + id.size(), idx);
        if (idx < 1 || idx > n_)
          throw ParseError("variable index out of range: " + id, p,
                           "an index between 1 and " + std::to_string(n_));
        pos_ = end;
        auto n = std::make_shared<Node>();
        n->kind = NodeKind::variable;
        n->axis = id[0] == 'x' ? Axis::x : Axis::y;
        n->index = idx - 1;
        n->position = p;
        return n;
      }
      throw ParseError("unknown identifier '" + id + "'", p, "a variable, parameter or function");
    }
    fail(std::string("unexpected '") + c + "'", "a number, variable, function or '('");
  }

  NodePtr number() {
    std::size_t end = pos_;
    while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
    if (end < src_.size() && src_[end] == '.') {
      ++end;
      while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
    }
    if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
      std::size_t e = end + 1;
      if (e < src_.size() && (src_[e] == '+' || src_[e] == '-')) ++e;
      if (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e]))) {
        end = e;
        while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
      }
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + pos_, src_.data() + end, v);
    if (ec != std::errc() || ptr != src_.data() + end) fail("malformed number", "a number");
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::literal;
    n->value = v;
    n->position = col();
    pos_ = end;
    return n;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int n_;
  const std::set<std::string>& params_;
};

inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf, ptr);
}

}  // namespace detail

inline Expr parse(std::string_view source, int dimension, const std::set<std::string>& parameter_names = {}) {
  if (dimension < 1) throw Error("expression dimension must be positive");
  detail::Parser p(source, dimension, parameter_names);
  return Expr(p.parse(), dimension);
}

using Parameters = std::map<std::string, double>;

template <class R>
R evaluate_node(const Node& n, std::span<const R> x, std::span<const R> y, const Parameters& params) {
  using std::exp;
  using std::log;
  using std::sqrt;
  auto domain = [&](const std::string& what) { return DomainError(what + " at offset " + std::to_string(n.position), n.position); };
  switch (n.kind) {
    case NodeKind::literal:
      return R(n.value);
    case NodeKind::variable: {
      const auto& v = n.axis == Axis::x ? x : y;
      if (static_cast<std::size_t>(n.index) >= v.size()) throw Error("state has fewer coordinates than the expression");
      return v[static_cast<std::size_t>(n.index)];
    }
    case NodeKind::parameter: {
      auto it = params.find(n.name);
      if (it == params.end()) throw Error("unbound parameter '" + n.name + "'");
      return R(it->second);
    }
    case NodeKind::neg:
      return -evaluate_node(*n.left, x, y, params);
    case NodeKind::sqrt: {
      R a = evaluate_node(*n.left, x, y, params);
      if (value_of(a) < 0.0) throw domain("sqrt of a negative value");
      try {
        return sqrt(a);
      } catch (const DomainError&) {
        throw domain("sqrt at zero inside a differentiated region");
      }
    }
    case NodeKind::exp:
      return exp(evaluate_node(*n.left, x, y, params));
    case NodeKind::ln: {
      R a = evaluate_node(*n.left, x, y, params);
      if (!(value_of(a) > 0.0)) throw domain("ln of a non-positive value");
      return log(a);
    }
    case NodeKind::add:
      return evaluate_node(*n.left, x, y, params) + evaluate_node(*n.right, x, y, params);
    case NodeKind::sub:
      return evaluate_node(*n.left, x, y, params) - evaluate_node(*n.right, x, y, params);
    case NodeKind::mul:
      return evaluate_node(*n.left, x, y, params) * evaluate_node(*n.right, x, y, params);
    case NodeKind::div: {
      R a = evaluate_node(*n.left, x, y, params);
      R b = evaluate_node(*n.right, x, y, params);
      if (value_of(b) == 0.0) throw domain("division by zero");
      return a / b;
    }
    case NodeKind::pow: {
      R base = evaluate_node(*n.left, x, y, params);
      const double p = evaluate_node<double>(*n.right, {}, {}, params);
      const bool integral = std::floor(p) == p && std::fabs(p) <= 64.0;
      if (!integral && !(value_of(base) > 0.0)) throw domain("non-integral power of a non-positive value");
      if (integral && p < 0.0 && value_of(base) == 0.0) throw domain("negative power of zero");
      return rpow(base, p);
    }
  }
  throw Error("corrupt expression node");
}

template <class R>
R evaluate(const Expr& e, std::span<const R> x, std::span<const R> y, const Parameters& params = {}) {
  return evaluate_node<R>(e.root(), x, y, params);
}

// Fully parenthesized text; reparses to a structurally identical tree.
inline std::string to_string(const Node& n) {
  switch (n.kind) {
    case NodeKind::literal:
      return detail::format_number(n.value);
    case NodeKind::variable:
      return std::string(n.axis == Axis::x ? "x" : "y") + std::to_string(n.index + 1);
    case NodeKind::parameter:
      return n.name;
    case NodeKind::neg:
      return "(-" + to_string(*n.left) + ")";
    case NodeKind::sqrt:
      return "sqrt(" + to_string(*n.left) + ")";
    case NodeKind::exp:
      return "exp(" + to_string(*n.left) + ")";
    case NodeKind::ln:
      return "ln(" + to_string(*n.left) + ")";
    case NodeKind::add:
      return "(" + to_string(*n.left) + " + " + to_string(*n.right) + ")";
    case NodeKind::sub:
      return "(" + to_string(*n.left) + " - " + to_string(*n.right) + ")";
    case NodeKind::mul:
      return "(" + to_string(*n.left) + " * " + to_string(*n.right) + ")";
    case NodeKind::div:
      return "(" + to_string(*n.left) + " / " + to_string(*n.right) + ")";
    case NodeKind::pow:
      return "(" + to_string(*n.left) + " ^ " + to_string(*n.right) + ")";
  }
  return {};
}

inline std::string to_string(const Expr& e) { return to_string(e.root()); }

inline bool structurally_equal(const Node& a, const Node& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case NodeKind::literal:
      return a.value == b.value;
    case NodeKind::variable:
      return a.axis == b.axis && a.index == b.index;
    case NodeKind::parameter:
      return a.name == b.name;
    default:
      break;
  }
  if (static_cast<bool>(a.left) != static_cast<bool>(b.left)) return false;
  if (static_cast<bool>(a.right) != static_cast<bool>(b.right)) return false;
  if (a.left && !structurally_equal(*a.left, *b.left)) return false;
  if (a.right && !structurally_equal(*a.right, *b.right)) return false;
  return true;
}

inline bool structurally_equal(const Expr& a, const Expr& b) {
  return structurally_equal(a.root(), b.root());
}

// Names referenced as parameters anywhere in the tree.
inline void collect_parameters(const Node& n, std::set<std::string>& out) {
  if (n.kind == NodeKind::parameter) out.insert(n.name);
  if (n.left) collect_parameters(*n.left, out);
  if (n.right) collect_parameters(*n.right, out);
}

}  // namespace finslab
