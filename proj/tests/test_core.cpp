#include <doctest.h>

#include <cmath>
#include <set>

#include "support.hpp"

using namespace steeple;
using testing::run;
using testing::show;

namespace {

Trace trace_of(std::string_view source, std::uint64_t seed = 0) {
  SamplingSource src;
  EvalContext ctx(testing::interp(), Rng(seed), src, "t");
  auto forms = compile_program(source);
  testing::interp().run_top_level(forms, testing::interp().global_env(), ctx);
  return ctx.trace();
}

}  // namespace

TEST_CASE("constants and quote") {
  CHECK(show("42") == "42");
  CHECK(show("2.5") == "2.5");
  CHECK(show("true") == "true");
  CHECK(show("'(a b)") == "(a b)");
  CHECK(show("(quote (a b))") == "(a b)");
  CHECK(show("'()") == "()");
}

TEST_CASE("unbound variables give error") {
  CHECK(run("z").is_error());
  CHECK(run("(+ z 1)").is_error());
}

TEST_CASE("lambda and application") {
  CHECK(show("((lambda (x y) (+ x y)) 1 2)") == "3");
  CHECK(show("((lambda a a) 1 2)") == "(1 2)");
  CHECK(show("((lambda a a))") == "()");
  CHECK(run("((lambda (x) x))").is_error());
  CHECK(run("((lambda (x) x) 1 2)").is_error());
}

TEST_CASE("closures capture their environment") {
  CHECK(show("(define (adder n) (lambda (x) (+ x n))) ((adder 3) 4)") == "7");
  CHECK(show("(define n 1) (define (f) n) (define n 2) (f)") == "1");
}

TEST_CASE("if evaluates only the taken branch") {
  CHECK(show("(define (loop) (loop)) (if true 1 (loop))") == "1");
  CHECK(show("(if false (car '()) 2)") == "2");
  CHECK(show("(if '() 1 2)") == "1");
  CHECK(show("(if 0 1 2)") == "1");
}

TEST_CASE("type errors give the error value") {
  CHECK(run("(+ 1 true)").is_error());
  CHECK(run("(3 1)").is_error());
  CHECK(run("(car 5)").is_error());
  CHECK(run("(/ 1 0)").is_error());
}

TEST_CASE("error is contagious") {
  CHECK(run("(list 1 (+ 1 true))").is_error());
  CHECK(run("(if (car 1) 1 2)").is_error());
  CHECK(show("(error? (+ 1 true))") == "true");
}

TEST_CASE("top-level defines nest") {
  CHECK(show("(define a 2) (+ a 1)") == "3");
  CHECK(show("(define a 1) (define a 2) a") == "2");
  CHECK(show("(define (fact n) (if (= n 0) 1 (* n (fact (- n 1))))) (fact 10)") == "3628800");
}

TEST_CASE("arithmetic") {
  CHECK(show("(+ 1 2 3)") == "6");
  CHECK(show("(- 5)") == "-5");
  CHECK(show("(* 2 2.5)") == "5.0");
  CHECK(show("(= 1 1.0)") == "true");
  CHECK(show("(< 1 2 3)") == "true");
  CHECK(show("(modulo -7 3)") == "2");
  CHECK(show("(/ 6 3)") == "2.0");
  CHECK(show("(/ 1 4)") == "0.25");
}

TEST_CASE("list primitives") {
  CHECK(show("(pair 1 2)") == "(1 . 2)");
  CHECK(show("(list 1 2 3)") == "(1 2 3)");
  CHECK(show("(first '(a b))") == "a");
  CHECK(show("(rest '(a b))") == "(b)");
  CHECK(show("(null? '())") == "true");
  CHECK(show("(append '(1) '(2 3))") == "(1 2 3)");
  CHECK(show("(iota 3)") == "(0 1 2)");
  CHECK(show("(apply + '(1 2 3))") == "6");
  CHECK(show("(equal? '(1 (2)) '(1 (2)))") == "true");
}

TEST_CASE("eval of quoted expressions") {
  CHECK(show("(eval '(+ 1 2))") == "3");
  CHECK(show("(define x 5) (eval 'x (get-current-environment))") == "5");
  CHECK(show("(eval (list 'quote '(a b)))") == "(a b)");
  for (const char* text : {"(+ 1 2)", "(if true 'a 'b)", "((lambda (x) (* x x)) 7)", "(let ((a 3)) a)"}) {
    CAPTURE(text);
    CHECK(show(std::string("(eval '") + text + ")") == show(text));
  }
}

TEST_CASE("deterministic programs do not depend on the seed") {
  const char* program = "(define (fib n) (if (< n 2) n (+ (fib (- n 1)) (fib (- n 2))))) (map fib (iota 12))";
  std::string first = show(program, 0);
  for (std::uint64_t seed = 1; seed < 5; ++seed) CHECK(show(program, seed) == first);
  CHECK(trace_of(program).empty());
}

TEST_CASE("same seed gives the same run") {
  const char* program = "(list (flip) (beta 1 1) (normal 0 1) (uniform-draw '(a b c)))";
  for (std::uint64_t seed = 0; seed < 5; ++seed) CHECK(show(program, seed) == show(program, seed));
  CHECK(show(program, 1) != show(program, 2));
}

TEST_CASE("flip is fair across seeds, and both halves agree") {
  const int n = 4000;
  std::vector<double> first(2, 0.0), second(2, 0.0);
  for (int seed = 0; seed < n; ++seed) {
    bool v = run("(flip)", seed).as_bool();
    (seed < n / 2 ? first : second)[v ? 1 : 0] += 1.0;
  }
  CHECK(testing::chi_square_p(first, {0.5, 0.5}) > 0.001);
  CHECK(testing::chi_square_p(second, {0.5, 0.5}) > 0.001);
  CHECK(testing::chi_square_two_sample_p(first, second) > 0.001);
}

TEST_CASE("flip records its choice") {
  Trace t = trace_of("(flip)");
  REQUIRE(t.size() == 1);
  CHECK(t.choices()[0].erp->name() == "flip");
  CHECK(t.choices()[0].logp == doctest::Approx(std::log(0.5)));
}

TEST_CASE("gensym") {
  CHECK(show("((gensym) (gensym))") == "false");
  CHECK(show("(gensym (gensym))") == "false");
  CHECK(show("(define g (gensym)) (g g)") == "true");
  CHECK(show("(define g (gensym)) (g 'g)") == "false");
  CHECK(show("(= (gensym) (gensym))") == "false");
  CHECK(show("(gensym? (gensym))") == "true");
  CHECK(show("(let ((a (gensym)) (b (gensym))) (eq? a b))") == "false");
}

TEST_CASE("a thousand gensyms are distinct") {
  Value v = run("(repeat 1000 gensym)");
  auto items = list_elements(v);
  REQUIRE(items);
  REQUIRE(items->size() == 1000);
  std::set<std::string> keys;
  for (const auto& g : *items) keys.insert(g.as_procedure()->identity_key());
  CHECK(keys.size() == 1000);
  for (std::size_t i = 0; i < 50; ++i) {
    for (std::size_t j = 0; j < 50; ++j) CHECK(values_equal((*items)[i], (*items)[j]) == (i == j));
  }
}

TEST_CASE("runaway recursion gives error rather than crashing") {
  CHECK(run("(define (f x) (+ 1 (f x))) (f 0)").is_error());
  CHECK(run("(define (loop) (loop)) (loop)").is_error());
}
