#include <doctest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"

using namespace steeple;

namespace {

Value real(double d) { return Value::real(d); }
Value sym(std::string_view s) { return Value::symbol(s); }

template <class F>
double integrate(F f, double lo, double hi, int n = 200000) {
  double h = (hi - lo) / n, total = 0.0;
  for (int i = 0; i < n; ++i) total += f(lo + (i + 0.5) * h);
  return total * h;
}

}  // namespace

TEST_CASE("flip scores") {
  std::vector<Value> p = {real(0.9)};
  CHECK(score_erp(flip_erp(), p, Value::boolean(true)) == doctest::Approx(std::log(0.9)));
  CHECK(score_erp(flip_erp(), p, Value::boolean(false)) == doctest::Approx(std::log(0.1)));
  CHECK(score_erp(flip_erp(), {}, Value::boolean(true)) == doctest::Approx(std::log(0.5)));
  CHECK(std::isinf(score_erp(flip_erp(), p, Value::integer(1))));
  CHECK(score_erp(flip_erp(), std::vector<Value>{real(1.0)}, Value::boolean(false)) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("invalid parameters") {
  Rng rng(1);
  std::vector<Value> bad = {real(1.5)};
  CHECK(sample_erp(flip_erp(), bad, rng).is_error());
  CHECK(std::isnan(score_erp(flip_erp(), bad, Value::boolean(true))));
  std::vector<Value> neg = {real(0.0), real(-1.0)};
  CHECK(sample_erp(normal_erp(), neg, rng).is_error());
  CHECK(sample_erp(beta_erp(), std::vector<Value>{real(0.0), real(1.0)}, rng).is_error());
  CHECK(testing::run("(flip 2)").is_error());
  CHECK(testing::run("(multinomial '(a b) '(0.5))").is_error());
  CHECK(testing::run("(uniform-draw '())").is_error());
}

TEST_CASE("normal density at the mean") {
  std::vector<Value> p = {real(0.0), real(10.0)};
  CHECK(score_erp(normal_erp(), p, real(0.0)) == doctest::Approx(-std::log(10.0 * std::sqrt(2 * std::numbers::pi))));
}

TEST_CASE("continuous densities integrate to one") {
  for (auto [a, b] : {std::pair{1.0, 1.0}, {2.0, 5.0}, {0.5, 0.5}, {3.0, 1.0}}) {
    CAPTURE(a);
    CAPTURE(b);
    std::vector<Value> p = {real(a), real(b)};
    double mass = integrate([&](double x) { return std::exp(score_erp(beta_erp(), p, real(x))); }, 0.0, 1.0);
    CHECK(mass == doctest::Approx(1.0).epsilon(a < 1 ? 5e-3 : 1e-6));
  }
  for (auto [m, s] : {std::pair{0.0, 1.0}, {3.0, 0.5}, {-2.0, 10.0}}) {
    std::vector<Value> p = {real(m), real(s)};
    double mass = integrate([&](double x) { return std::exp(score_erp(normal_erp(), p, real(x))); }, m - 12 * s,
                            m + 12 * s);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
  }
  double mass = integrate([&](double x) { return std::exp(score_erp(random_erp(), {}, real(x))); }, 0.0, 1.0);
  CHECK(mass == doctest::Approx(1.0));
  CHECK(std::isinf(score_erp(random_erp(), {}, real(1.5))));
}

TEST_CASE("discrete scores sum to one over the support") {
  std::vector<Value> p = {testing::run("'((S a) (T a))"), testing::run("'(0.2 0.8)")};
  double total = 0.0;
  for (const auto& [v, w] : multinomial_erp().support(p)) {
    total += w;
    CHECK(std::exp(score_erp(multinomial_erp(), p, v)) == doctest::Approx(w));
  }
  CHECK(total == doctest::Approx(1.0));
  CHECK(std::exp(score_erp(multinomial_erp(), p, testing::run("'(T a)"))) == doctest::Approx(0.8));
  std::vector<Value> u = {testing::run("'(a b c d)")};
  CHECK(std::exp(score_erp(uniform_draw_erp(), u, sym("c"))) == doctest::Approx(0.25));
  CHECK(std::isinf(score_erp(uniform_draw_erp(), u, sym("e"))));
}

TEST_CASE("dirichlet samples lie on the simplex and score consistently") {
  Rng rng(3);
  std::vector<Value> p = {testing::run("'(1.0 2.0 3.0)")};
  for (int i = 0; i < 100; ++i) {
    Value v = sample_erp(dirichlet_erp(), p, rng);
    auto xs = list_elements(v);
    REQUIRE(xs);
    double sum = 0.0;
    for (const auto& x : *xs) {
      CHECK(x.as_number() >= 0.0);
      sum += x.as_number();
    }
    CHECK(sum == doctest::Approx(1.0));
    CHECK(std::isfinite(score_erp(dirichlet_erp(), p, v)));
  }
  // Dirichlet(1,1) on two cells is uniform on the segment: density 1.
  std::vector<Value> flat = {testing::run("'(1.0 1.0)")};
  CHECK(score_erp(dirichlet_erp(), flat, testing::run("'(0.3 0.7)")) == doctest::Approx(0.0));
}

TEST_CASE("finite samplers match their scores") {
  struct Case {
    const ErpDescriptor* erp;
    std::vector<Value> params;
  };
  std::vector<Case> cases = {
      {&flip_erp(), {}},
      {&flip_erp(), {real(0.9)}},
      {&multinomial_erp(), {testing::run("'((S a) (T a))"), testing::run("'(0.2 0.8)")}},
      {&multinomial_erp(), {testing::run("'(1 2 3 4)"), testing::run("'(0.1 0.2 0.3 0.4)")}},
      {&uniform_draw_erp(), {testing::run("'(a b c)")}},
  };
  const int n = 20000;
  for (const auto& c : cases) {
    CAPTURE(c.erp->name());
    Rng rng(11);
    auto support = c.erp->support(c.params);
    std::vector<double> observed(support.size(), 0.0), probs;
    for (const auto& [v, w] : support) probs.push_back(std::exp(score_erp(*c.erp, c.params, v)));
    for (int i = 0; i < n; ++i) {
      Value v = sample_erp(*c.erp, c.params, rng);
      for (std::size_t k = 0; k < support.size(); ++k) {
        if (values_equal(v, support[k].first)) observed[k] += 1.0;
      }
    }
    CHECK(testing::chi_square_p(observed, probs) > 0.001);
  }
}

TEST_CASE("continuous samplers match their densities") {
  // Bin samples into ten equal-probability cells computed from the density.
  struct Case {
    const ErpDescriptor* erp;
    std::vector<Value> params;
    double lo, hi;
  };
  std::vector<Case> cases = {
      {&beta_erp(), {real(2.0), real(5.0)}, 0.0, 1.0},
      {&beta_erp(), {real(1.0), real(1.0)}, 0.0, 1.0},
      {&normal_erp(), {real(1.0), real(2.0)}, -15.0, 17.0},
      {&random_erp(), {}, 0.0, 1.0},
  };
  for (const auto& c : cases) {
    CAPTURE(c.erp->name());
    std::vector<double> edges = {c.lo};
    const int grid = 20000;
    double h = (c.hi - c.lo) / grid, acc = 0.0;
    for (int i = 0; i < grid && edges.size() < 10; ++i) {
      double x = c.lo + (i + 0.5) * h;
      acc += std::exp(score_erp(*c.erp, c.params, real(x))) * h;
      if (acc >= 0.1 * static_cast<double>(edges.size())) edges.push_back(c.lo + (i + 1) * h);
    }
    edges.push_back(c.hi);
    std::vector<double> observed(10, 0.0);
    Rng rng(5);
    for (int i = 0; i < 20000; ++i) {
      double x = sample_erp(*c.erp, c.params, rng).as_number();
      std::size_t k = std::upper_bound(edges.begin(), edges.end(), x) - edges.begin();
      observed[std::min<std::size_t>(std::max<std::size_t>(k, 1) - 1, 9)] += 1.0;
    }
    CHECK(testing::chi_square_p(observed, std::vector<double>(10, 0.1)) > 0.001);
  }
}

TEST_CASE("sampling is determined by the seed") {
  for (const ErpDescriptor* erp : builtin_erps()) {
    CAPTURE(erp->name());
    std::vector<Value> params;
    if (erp->name() == "multinomial") params = {testing::run("'(a b)"), testing::run("'(0.5 0.5)")};
    if (erp->name() == "uniform-draw") params = {testing::run("'(a b)")};
    if (erp->name() == "beta") params = {real(1.0), real(1.0)};
    if (erp->name() == "normal") params = {real(0.0), real(1.0)};
    if (erp->name() == "dirichlet") params = {testing::run("'(1 1)")};
    Rng a(42), b(42);
    for (int i = 0; i < 20; ++i) {
      CHECK(print_value(sample_erp(*erp, params, a)) == print_value(sample_erp(*erp, params, b)));
    }
  }
}

TEST_CASE("first expansion of the grammar rule") {
  int hits = 0;
  Rng rng(9);
  std::vector<Value> p = {testing::run("'((S a) (T a))"), testing::run("'(0.2 0.8)")};
  for (int i = 0; i < 10000; ++i) hits += print_value(sample_erp(multinomial_erp(), p, rng)) == "(S a)";
  CHECK(hits / 10000.0 == doctest::Approx(0.2).epsilon(0.1));
}
