#include "pmelab/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <utility>

namespace pmelab::expr {

namespace {

constexpr int kMaxStack = 128;
constexpr int kMaxParseDepth = 200;

bool is_unary(OpCode op) {
  return op >= OpCode::negate && op <= OpCode::fn_abs;
}

// Shortest decimal form that parses back to the same double, so printed
// trees evaluate bit-for-bit like the originals.
std::string format_number(double v) {
  char buf[64];
  for (int digits = 15; digits <= 17; ++digits) {
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    double back = 0.0;
    std::from_chars(buf, buf + std::strlen(buf), back);
    if (back == v) break;
  }
  return buf;
}

}  // namespace

const char* var_name(VarId v) {
  switch (v) {
    case VarId::x: return "x";
    case VarId::y: return "y";
    case VarId::t: return "t";
    case VarId::p: return "p";
    case VarId::r: return "r";
  }
  return "?";
}

double Env::lookup(VarId v) const {
  auto require = [](const std::optional<double>& slot, VarId id) {
    if (!slot)
      throw EvalError(std::string("unbound variable '") + var_name(id) + "'");
    return *slot;
  };
  switch (v) {
    case VarId::x: return require(x, VarId::x);
    case VarId::y: return require(y, VarId::y);
    case VarId::t: return require(t, VarId::t);
    case VarId::p: return require(p, VarId::p);
    case VarId::r: {
      double xv = require(x, VarId::x);
      return y ? std::hypot(xv, *y) : std::abs(xv);
    }
  }
  throw EvalError("unknown variable id");
}

struct Expr::Node {
  OpCode op;
  double number = 0.0;
  const char* const_name = nullptr;  // "pi" / "e" for named constants
  VarId var = VarId::x;
  std::shared_ptr<const Node> lhs, rhs;
};

Expr::Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) { compile(); }

Expr Expr::number(double value, const char* constant_name) {
  auto n = std::make_shared<Node>();
  n->op = OpCode::push_number;
  n->number = value;
  n->const_name = constant_name;
  return Expr(std::move(n));
}

Expr Expr::variable(VarId v) {
  auto n = std::make_shared<Node>();
  n->op = OpCode::push_var;
  n->var = v;
  return Expr(std::move(n));
}

Expr Expr::unary(OpCode op, Expr operand) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(operand.root_);
  return Expr(std::move(n));
}

Expr Expr::binary(OpCode op, Expr lhs, Expr rhs) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(lhs.root_);
  n->rhs = std::move(rhs.root_);
  return Expr(std::move(n));
}

void Expr::compile() {
  program_.clear();
  stack_need_ = 0;
  if (!root_) return;
  int depth = 0;
  // Postorder flatten; evaluation order is fixed left-to-right.
  auto walk = [&](auto&& self, const Node& node) -> void {
    switch (node.op) {
      case OpCode::push_number:
        program_.push_back({OpCode::push_number, node.number, VarId::x});
        ++depth;
        break;
      case OpCode::push_var:
        program_.push_back({OpCode::push_var, 0.0, node.var});
        ++depth;
        break;
      default:
        self(self, *node.lhs);
        if (node.rhs) {
          self(self, *node.rhs);
          --depth;  // binary op pops one
        }
        program_.push_back({node.op, 0.0, VarId::x});
        break;
    }
    stack_need_ = std::max(stack_need_, depth);
  };
  walk(walk, *root_);
  if (stack_need_ > kMaxStack)
    throw ParseError(0, "expression too deeply nested");
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Token {
  enum Kind { number, ident, plus, minus, star, slash, caret, lparen, rparen, comma, end };
  Kind kind;
  double value = 0.0;
  std::string text;
  std::size_t offset = 0;
};

const char* token_desc(Token::Kind k) {
  switch (k) {
    case Token::number: return "number";
    case Token::ident: return "identifier";
    case Token::plus: return "'+'";
    case Token::minus: return "'-'";
    case Token::star: return "'*'";
    case Token::slash: return "'/'";
    case Token::caret: return "'^'";
    case Token::lparen: return "'('";
    case Token::rparen: return "')'";
    case Token::comma: return "','";
    case Token::end: return "end of input";
  }
  return "?";
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return current_; }

  Token take() {
    Token t = current_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    current_.offset = pos_;
    if (pos_ >= src_.size()) {
      current_.kind = Token::end;
      return;
    }
    char c = src_[pos_];
    switch (c) {
      case '+': current_.kind = Token::plus; ++pos_; return;
      case '-': current_.kind = Token::minus; ++pos_; return;
      case '*': current_.kind = Token::star; ++pos_; return;
      case '/': current_.kind = Token::slash; ++pos_; return;
      case '^': current_.kind = Token::caret; ++pos_; return;
      case '(': current_.kind = Token::lparen; ++pos_; return;
      case ')': current_.kind = Token::rparen; ++pos_; return;
      case ',': current_.kind = Token::comma; ++pos_; return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = src_.data() + pos_;
      const char* end = src_.data() + src_.size();
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(begin, end, value);
      if (ec != std::errc() || ptr == begin)
        throw ParseError(pos_, "malformed number literal");
      current_.kind = Token::number;
      current_.value = value;
      pos_ = static_cast<std::size_t>(ptr - src_.data());
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      current_.kind = Token::ident;
      current_.text = std::string(src_.substr(start, pos_ - start));
      return;
    }
    throw ParseError(pos_, std::string("unexpected character '") + c + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token current_;
};

struct FunctionInfo {
  const char* name;
  OpCode op;
  int arity;
};

constexpr std::array<FunctionInfo, 10> kFunctions{{
    {"sin", OpCode::fn_sin, 1},
    {"cos", OpCode::fn_cos, 1},
    {"tanh", OpCode::fn_tanh, 1},
    {"cosh", OpCode::fn_cosh, 1},
    {"exp", OpCode::fn_exp, 1},
    {"log", OpCode::fn_log, 1},
    {"sqrt", OpCode::fn_sqrt, 1},
    {"abs", OpCode::fn_abs, 1},
    {"min", OpCode::fn_min, 2},
    {"max", OpCode::fn_max, 2},
}};

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) {}

  Expr run() {
    Expr e = parse_sum(0);
    const Token& t = lex_.peek();
    if (t.kind != Token::end)
      throw ParseError(t.offset, std::string("expected operator or end of input, got ") +
                                     token_desc(t.kind));
    return e;
  }

 private:
  Expr parse_sum(int depth) {
    check_depth(depth);
    Expr lhs = parse_product(depth + 1);
    for (;;) {
      Token::Kind k = lex_.peek().kind;
      if (k != Token::plus && k != Token::minus) return lhs;
      lex_.take();
      Expr rhs = parse_product(depth + 1);
      lhs = Expr::binary(k == Token::plus ? OpCode::add : OpCode::subtract,
                         std::move(lhs), std::move(rhs));
    }
  }

  Expr parse_product(int depth) {
    check_depth(depth);
    Expr lhs = parse_unary(depth + 1);
    for (;;) {
      Token::Kind k = lex_.peek().kind;
      if (k != Token::star && k != Token::slash) return lhs;
      lex_.take();
      Expr rhs = parse_unary(depth + 1);
      lhs = Expr::binary(k == Token::star ? OpCode::multiply : OpCode::divide,
                         std::move(lhs), std::move(rhs));
    }
  }

  Expr parse_unary(int depth) {
    check_depth(depth);
    if (lex_.peek().kind == Token::minus) {
      lex_.take();
      return Expr::unary(OpCode::negate, parse_unary(depth + 1));
    }
    return parse_power(depth + 1);
  }

  Expr parse_power(int depth) {
    check_depth(depth);
    Expr base = parse_atom(depth + 1);
    if (lex_.peek().kind != Token::caret) return base;
    lex_.take();
    // Right-associative; a unary minus is admitted in the exponent.
    Expr exponent = parse_unary(depth + 1);
    return Expr::binary(OpCode::power, std::move(base), std::move(exponent));
  }

  Expr parse_atom(int depth) {
    check_depth(depth);
    Token t = lex_.take();
    switch (t.kind) {
      case Token::number:
        return Expr::number(t.value);
      case Token::lparen: {
        Expr inner = parse_sum(depth + 1);
        expect(Token::rparen);
        return inner;
      }
      case Token::ident:
        return parse_ident(t, depth);
      default:
        throw ParseError(t.offset, std::string("expected number, identifier or '(', got ") +
                                       token_desc(t.kind));
    }
  }

  Expr parse_ident(const Token& t, int depth) {
    for (const auto& fn : kFunctions) {
      if (t.text == fn.name) {
        expect(Token::lparen);
        Expr first = parse_sum(depth + 1);
        if (fn.arity == 1) {
          expect(Token::rparen);
          return Expr::unary(fn.op, std::move(first));
        }
        expect(Token::comma);
        Expr second = parse_sum(depth + 1);
        expect(Token::rparen);
        return Expr::binary(fn.op, std::move(first), std::move(second));
      }
    }
    if (t.text == "pi") return Expr::number(M_PI, "pi");
    if (t.text == "e") return Expr::number(M_E, "e");
    static constexpr std::pair<const char*, VarId> vars[] = {
        {"x", VarId::x}, {"y", VarId::y}, {"t", VarId::t}, {"p", VarId::p}, {"r", VarId::r}};
    for (const auto& [name, id] : vars) {
      if (t.text == name) {
        if (lex_.peek().kind == Token::lparen)
          throw ParseError(lex_.peek().offset,
                           "'" + t.text + "' is a variable, not a function");
        return Expr::variable(id);
      }
    }
    throw ParseError(t.offset, "unknown identifier '" + t.text + "'");
  }

  void expect(Token::Kind k) {
    const Token& t = lex_.peek();
    if (t.kind != k)
      throw ParseError(t.offset, std::string("expected ") + token_desc(k) + ", got " +
                                     token_desc(t.kind));
    lex_.take();
  }

  void check_depth(int depth) {
    if (depth > kMaxParseDepth)
      throw ParseError(lex_.peek().offset, "expression too deeply nested");
  }

  Lexer lex_;
};

}  // namespace

Expr Expr::parse(std::string_view source) {
  std::size_t i = 0;
  while (i < source.size() && std::isspace(static_cast<unsigned char>(source[i]))) ++i;
  if (i == source.size()) throw ParseError(0, "empty expression");
  return Parser(source).run();
}

// ---------------------------------------------------------------------------
// Evaluation

double Expr::eval(const Env& env) const {
  if (!root_) throw EvalError("empty expression");
  double stack[kMaxStack];
  int top = 0;
  for (const Instr& in : program_) {
    switch (in.op) {
      case OpCode::push_number: stack[top++] = in.number; break;
      case OpCode::push_var: stack[top++] = env.lookup(in.var); break;
      case OpCode::negate: stack[top - 1] = -stack[top - 1]; break;
      case OpCode::fn_sin: stack[top - 1] = std::sin(stack[top - 1]); break;
      case OpCode::fn_cos: stack[top - 1] = std::cos(stack[top - 1]); break;
      case OpCode::fn_tanh: stack[top - 1] = std::tanh(stack[top - 1]); break;
      case OpCode::fn_cosh: stack[top - 1] = std::cosh(stack[top - 1]); break;
      case OpCode::fn_exp: stack[top - 1] = std::exp(stack[top - 1]); break;
      case OpCode::fn_log:
        if (stack[top - 1] <= 0.0)
          throw EvalError("log of non-positive argument " + format_number(stack[top - 1]));
        stack[top - 1] = std::log(stack[top - 1]);
        break;
      case OpCode::fn_sqrt:
        if (stack[top - 1] < 0.0)
          throw EvalError("sqrt of negative argument " + format_number(stack[top - 1]));
        stack[top - 1] = std::sqrt(stack[top - 1]);
        break;
      case OpCode::fn_abs: stack[top - 1] = std::abs(stack[top - 1]); break;
      case OpCode::add: --top; stack[top - 1] += stack[top]; break;
      case OpCode::subtract: --top; stack[top - 1] -= stack[top]; break;
      case OpCode::multiply: --top; stack[top - 1] *= stack[top]; break;
      case OpCode::divide:
        --top;
        if (stack[top] == 0.0) throw EvalError("division by zero");
        stack[top - 1] /= stack[top];
        break;
      case OpCode::power:
        --top;
        stack[top - 1] = std::pow(stack[top - 1], stack[top]);
        if (!std::isfinite(stack[top - 1])) throw EvalError("power outside real domain");
        break;
      case OpCode::fn_min: --top; stack[top - 1] = std::fmin(stack[top - 1], stack[top]); break;
      case OpCode::fn_max: --top; stack[top - 1] = std::fmax(stack[top - 1], stack[top]); break;
    }
  }
  if (!std::isfinite(stack[0])) throw EvalError("non-finite result");
  return stack[0];
}

Eigen::ArrayXd Expr::eval(const BatchEnv& env) const {
  using Eigen::ArrayXd;
  if (!root_) throw EvalError("empty expression");
  if (env.x == nullptr) throw EvalError("batch environment must bind x");
  const Eigen::Index n = env.x->size();

  auto check = [n](const ArrayXd& a, const char* what) {
    if (a.allFinite()) return;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!std::isfinite(a[i]))
        throw EvalError(std::string(what) + " at cell " + std::to_string(i));
    throw EvalError(what);
  };

  std::vector<ArrayXd> stack(static_cast<std::size_t>(stack_need_));
  int top = 0;
  for (const Instr& in : program_) {
    switch (in.op) {
      case OpCode::push_number: stack[top++] = ArrayXd::Constant(n, in.number); break;
      case OpCode::push_var:
        switch (in.var) {
          case VarId::x: stack[top++] = *env.x; break;
          case VarId::y:
            if (!env.y) throw EvalError("unbound variable 'y'");
            stack[top++] = *env.y;
            break;
          case VarId::t:
            if (!env.t) throw EvalError("unbound variable 't'");
            stack[top++] = ArrayXd::Constant(n, *env.t);
            break;
          case VarId::p:
            if (!env.p) throw EvalError("unbound variable 'p'");
            stack[top++] = *env.p;
            break;
          case VarId::r:
            stack[top++] = env.y ? ArrayXd((env.x->square() + env.y->square()).sqrt())
                                 : ArrayXd(env.x->abs());
            break;
        }
        break;
      case OpCode::negate: stack[top - 1] = -stack[top - 1]; break;
      case OpCode::fn_sin: stack[top - 1] = stack[top - 1].sin(); break;
      case OpCode::fn_cos: stack[top - 1] = stack[top - 1].cos(); break;
      case OpCode::fn_tanh: stack[top - 1] = stack[top - 1].tanh(); break;
      case OpCode::fn_cosh: stack[top - 1] = stack[top - 1].cosh(); break;
      case OpCode::fn_exp: stack[top - 1] = stack[top - 1].exp(); break;
      case OpCode::fn_log:
        stack[top - 1] = stack[top - 1].log();
        check(stack[top - 1], "log outside real domain");
        break;
      case OpCode::fn_sqrt:
        stack[top - 1] = stack[top - 1].sqrt();
        check(stack[top - 1], "sqrt of negative argument");
        break;
      case OpCode::fn_abs: stack[top - 1] = stack[top - 1].abs(); break;
      case OpCode::add: --top; stack[top - 1] += stack[top]; break;
      case OpCode::subtract: --top; stack[top - 1] -= stack[top]; break;
      case OpCode::multiply: --top; stack[top - 1] *= stack[top]; break;
      case OpCode::divide:
        --top;
        stack[top - 1] /= stack[top];
        check(stack[top - 1], "division outside real domain");
        break;
      case OpCode::power:
        --top;
        stack[top - 1] = stack[top - 1].binaryExpr(
            stack[top], [](double a, double b) { return std::pow(a, b); });
        check(stack[top - 1], "power outside real domain");
        break;
      case OpCode::fn_min: --top; stack[top - 1] = stack[top - 1].min(stack[top]); break;
      case OpCode::fn_max: --top; stack[top - 1] = stack[top - 1].max(stack[top]); break;
    }
  }
  check(stack[0], "non-finite result");
  return std::move(stack[0]);
}

bool Expr::references(VarId v) const {
  for (const Instr& in : program_) {
    if (in.op != OpCode::push_var) continue;
    if (in.var == v) return true;
    if (in.var == VarId::r && (v == VarId::x || v == VarId::y)) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

// Precedence levels: + - (1), * / (2), unary - (3), ^ (4), atoms (5).
int node_level(OpCode op) {
  switch (op) {
    case OpCode::add:
    case OpCode::subtract: return 1;
    case OpCode::multiply:
    case OpCode::divide: return 2;
    case OpCode::negate: return 3;
    case OpCode::power: return 4;
    default: return 5;
  }
}

const char* fn_name(OpCode op) {
  switch (op) {
    case OpCode::fn_sin: return "sin";
    case OpCode::fn_cos: return "cos";
    case OpCode::fn_tanh: return "tanh";
    case OpCode::fn_cosh: return "cosh";
    case OpCode::fn_exp: return "exp";
    case OpCode::fn_log: return "log";
    case OpCode::fn_sqrt: return "sqrt";
    case OpCode::fn_abs: return "abs";
    case OpCode::fn_min: return "min";
    case OpCode::fn_max: return "max";
    default: return nullptr;
  }
}

}  // namespace

std::string Expr::to_string() const {
  if (!root_) return "";
  auto print = [](auto&& self, const Node& node) -> std::string {
    auto wrap = [&](const Node& child, bool parens) {
      std::string s = self(self, child);
      return parens ? "(" + s + ")" : s;
    };
    switch (node.op) {
      case OpCode::push_number:
        return node.const_name ? std::string(node.const_name) : format_number(node.number);
      case OpCode::push_var:
        return std::string(var_name(node.var));
      case OpCode::negate:
        return "-" + wrap(*node.lhs, node_level(node.lhs->op) < 4);
      case OpCode::add:
      case OpCode::subtract:
      case OpCode::multiply:
      case OpCode::divide: {
        int level = node_level(node.op);
        const char* sym = node.op == OpCode::add        ? " + "
                          : node.op == OpCode::subtract ? " - "
                          : node.op == OpCode::multiply ? " * "
                                                        : " / ";
        return wrap(*node.lhs, node_level(node.lhs->op) < level) + sym +
               wrap(*node.rhs, node_level(node.rhs->op) <= level);
      }
      case OpCode::power:
        // Right-associative; the exponent may start with a unary minus.
        return wrap(*node.lhs, node_level(node.lhs->op) <= 4) + " ^ " +
               wrap(*node.rhs, node_level(node.rhs->op) < 3);
      default: {
        std::string out = fn_name(node.op);
        out += "(" + self(self, *node.lhs);
        if (node.rhs) out += ", " + self(self, *node.rhs);
        out += ")";
        return out;
      }
    }
  };
  return print(print, *root_);
}

double fd_derivative(const Expr& e, const Env& env, VarId var, int order,
                     std::optional<double> step) {
  if (order != 1 && order != 2)
    throw std::invalid_argument("fd_derivative: order must be 1 or 2");
  double v = env.lookup(var);
  double h = step ? *step : 1e-5 * std::max(1.0, std::abs(v));
  Env shifted = env;
  auto set = [&](double value) {
    switch (var) {
      case VarId::x: shifted.x = value; break;
      case VarId::y: shifted.y = value; break;
      case VarId::t: shifted.t = value; break;
      case VarId::p: shifted.p = value; break;
      case VarId::r:
        throw std::invalid_argument("fd_derivative: cannot differentiate in derived variable r");
    }
  };
  set(v + h);
  double fp = e.eval(shifted);
  set(v - h);
  double fm = e.eval(shifted);
  if (order == 1) return (fp - fm) / (2.0 * h);
  double f0 = e.eval(env);
  return (fp - 2.0 * f0 + fm) / (h * h);
}

}  // namespace pmelab::expr
