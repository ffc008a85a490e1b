#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pmelab/expr.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

using namespace pmelab;
using expr::Env;
using expr::EvalError;
using expr::Expr;
using expr::ParseError;
using expr::VarId;

namespace {

double eval_str(const std::string& src, Env env = {}) { return Expr::parse(src).eval(env); }

Env env_x(double x) {
  Env e;
  e.x = x;
  return e;
}

}  // namespace

TEST_CASE("precedence and associativity") {
  CHECK(eval_str("1+2*3") == 7.0);
  CHECK(eval_str("2^3^2") == 512.0);  // right-associative
  CHECK(eval_str("(2^3)^2") == 64.0);
  CHECK(eval_str("-2^2") == -4.0);    // ^ binds tighter than unary minus
  CHECK(eval_str("2^-1") == 0.5);
  CHECK(eval_str("1-2-3") == -4.0);
  CHECK(eval_str("6/3/2") == 1.0);
  CHECK(eval_str("2*3^2") == 18.0);
  CHECK(eval_str("(1+2)*3") == 9.0);
}

TEST_CASE("functions and constants") {
  CHECK(std::abs(eval_str("sin(pi)")) < 1e-12);
  CHECK(eval_str("pi") == M_PI);
  CHECK(eval_str("e") == M_E);
  CHECK(eval_str("cosh(0)") == 1.0);
  CHECK(eval_str("min(1, 2)") == 1.0);
  CHECK(eval_str("max(1, 2)") == 2.0);
  CHECK(eval_str("abs(-3)") == 3.0);
  CHECK(eval_str("sqrt(9)") == 3.0);
  CHECK(eval_str("tanh(0)") == 0.0);
}

TEST_CASE("variable binding") {
  Env env;
  env.x = 3.0;
  env.t = 1.0;
  CHECK(Expr::parse("x^2 + t").eval(env) == 10.0);

  Env radial;
  radial.x = -3.0;
  CHECK(Expr::parse("r").eval(radial) == 3.0);
  radial.y = 4.0;
  CHECK(Expr::parse("r").eval(radial) == 5.0);

  CHECK_THROWS_AS(Expr::parse("x + y").eval(env_x(1.0)), EvalError);
}

TEST_CASE("parse errors carry offsets and expectations") {
  CHECK_THROWS_AS(Expr::parse(""), ParseError);
  CHECK_THROWS_AS(Expr::parse("   "), ParseError);

  try {
    Expr::parse("log(q)");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("unknown identifier 'q'") != std::string::npos);
  }

  try {
    Expr::parse("1 + * 2");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
    CHECK(std::string(e.what()).find("expected") != std::string::npos);
  }

  try {
    Expr::parse("1+");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 2);
  }

  CHECK_THROWS_AS(Expr::parse("x(3)"), ParseError);    // variable used as function
  CHECK_THROWS_AS(Expr::parse("min(1)"), ParseError);  // arity
  CHECK_THROWS_AS(Expr::parse("(1"), ParseError);
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(Expr::parse("1/(x-1)").eval(env_x(1.0)), EvalError);
  CHECK(Expr::parse("1/(x-1)").eval(env_x(2.0)) == 1.0);
  CHECK_THROWS_AS(Expr::parse("log(x)").eval(env_x(-1.0)), EvalError);
  CHECK_THROWS_AS(Expr::parse("log(x)").eval(env_x(0.0)), EvalError);
  CHECK_THROWS_AS(Expr::parse("sqrt(x)").eval(env_x(-1.0)), EvalError);
  CHECK_THROWS_AS(Expr::parse("x^0.5").eval(env_x(-1.0)), EvalError);
  CHECK_THROWS_AS(Expr::parse("exp(x)").eval(env_x(1e6)), EvalError);  // overflow
}

TEST_CASE("references") {
  Expr e = Expr::parse("x^2 + t");
  CHECK(e.references(VarId::x));
  CHECK(e.references(VarId::t));
  CHECK_FALSE(e.references(VarId::y));
  CHECK_FALSE(e.references(VarId::p));
  // r is derived from the coordinates
  CHECK(Expr::parse("r").references(VarId::x));
  CHECK(Expr::parse("r").references(VarId::y));
}

TEST_CASE("printer golden file is byte-exact") {
  std::ifstream golden("tests/data/expr_golden.txt");
  REQUIRE(golden.good());
  std::string line;
  int cases = 0;
  while (std::getline(golden, line)) {
    if (line.empty()) continue;
    auto sep = line.find(" => ");
    REQUIRE(sep != std::string::npos);
    std::string input = line.substr(0, sep);
    std::string expected = line.substr(sep + 4);
    CAPTURE(input);
    CHECK(Expr::parse(input).to_string() == expected);
    ++cases;
  }
  CHECK(cases >= 20);
}

TEST_CASE("parse-print-parse round trip evaluates bit-for-bit") {
  const char* samples[] = {
      "1+2*3",
      "x^2 + t - p/2",
      "-x^2 + (-x)^2",
      "0.9*min(1, 1.5*max(1-(x/0.3)^2, 0))",
      "sin(pi*x)*cos(t) + tanh(x-t)",
      "exp(-(x/0.5)^2) + sqrt(abs(x)+1)",
      "cosh(r)/(1+p)",
      "2^3^x",
      "x - t + p - 0.125",
      "log(x+4)*e",
  };
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> dist(0.1, 3.0);
  for (const char* sample : samples) {
    Expr original = Expr::parse(sample);
    Expr reparsed = Expr::parse(original.to_string());
    CAPTURE(sample);
    CHECK(original.to_string() == reparsed.to_string());
    for (int trial = 0; trial < 100; ++trial) {
      Env env;
      env.x = dist(rng);
      env.y = dist(rng);
      env.t = dist(rng);
      env.p = dist(rng);
      CHECK(original.eval(env) == reparsed.eval(env));  // bitwise
    }
  }
}

TEST_CASE("batch evaluation agrees with scalar evaluation bitwise") {
  Expr e = Expr::parse("sin(pi*x)/(2+p) + t*max(x, 0.25) - r");
  const int n = 64;
  Eigen::ArrayXd x(n), p(n);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int i = 0; i < n; ++i) {
    x[i] = dist(rng);
    p[i] = std::abs(dist(rng));
  }
  expr::BatchEnv batch;
  batch.x = &x;
  batch.t = 0.75;
  batch.p = &p;
  Eigen::ArrayXd values = e.eval(batch);
  for (int i = 0; i < n; ++i) {
    Env env;
    env.x = x[i];
    env.t = 0.75;
    env.p = p[i];
    CHECK(values[i] == e.eval(env));
  }
}

TEST_CASE("finite differences: spec examples") {
  CHECK(expr::fd_derivative(Expr::parse("x^2"), env_x(1.0), VarId::x, 1) ==
        doctest::Approx(2.0).epsilon(1e-8));
  CHECK(expr::fd_derivative(Expr::parse("x^2"), env_x(0.0), VarId::x, 2) ==
        doctest::Approx(2.0).epsilon(1e-6));
  CHECK(expr::fd_derivative(Expr::parse("exp(x)"), env_x(0.0), VarId::x, 1) ==
        doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("finite differences match analytic derivatives of cubics") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> coeff(0.5, 2.0);
  std::uniform_real_distribution<double> where(0.5, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    double c0 = coeff(rng), c1 = coeff(rng), c2 = coeff(rng), c3 = coeff(rng);
    std::ostringstream src;
    src.precision(17);
    src << c0 << " + " << c1 << "*x + " << c2 << "*x^2 + " << c3 << "*x^3";
    Expr poly = Expr::parse(src.str());
    double at = where(rng);
    double d1 = c1 + 2.0 * c2 * at + 3.0 * c3 * at * at;
    double d2 = 2.0 * c2 + 6.0 * c3 * at;
    double fd1 = expr::fd_derivative(poly, env_x(at), VarId::x, 1);
    double fd2 = expr::fd_derivative(poly, env_x(at), VarId::x, 2);
    CHECK(std::abs(fd1 - d1) / std::abs(d1) < 1e-6);
    // Second differences sit on the roundoff floor eps |f| / h^2 ~ 1e-6 |f|.
    CHECK(std::abs(fd2 - d2) / std::abs(d2) < 1e-4);
  }
}

TEST_CASE("fd_derivative propagates domain errors") {
  CHECK_THROWS_AS(expr::fd_derivative(Expr::parse("sqrt(x)"), env_x(0.0), VarId::x, 1),
                  EvalError);
}
