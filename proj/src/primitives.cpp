#include <algorithm>
#include <cctype>
#include <cmath>

#include "steeple/inference.hpp"
#include "steeple/interpreter.hpp"

namespace steeple {

namespace {

using Args = std::span<const Value>;

Value fail(const std::string& name, const std::string& what) { return Value::error(name + ": " + what); }

void def(Environment& env, const std::string& name, PrimitiveFn fn, bool accepts_errors = false) {
  env.bind(Symbol(name), Value::procedure(std::make_shared<PrimitiveProcedure>(name, std::move(fn), accepts_errors)));
}

bool all_numbers(Args args) {
  return std::all_of(args.begin(), args.end(), [](const Value& v) { return v.is_number(); });
}

bool all_integers(Args args) {
  return std::all_of(args.begin(), args.end(), [](const Value& v) { return v.is_integer(); });
}

Value number(double d) { return Value::real(d); }

template <typename IntOp, typename RealOp>
Value fold_numbers(const std::string& name, Args args, std::int64_t unit, IntOp iop, RealOp rop) {
  if (!all_numbers(args)) return fail(name, "expects numbers");
  if (all_integers(args)) {
    std::int64_t acc = unit;
    for (const auto& a : args) acc = iop(acc, a.as_integer());
    return Value::integer(acc);
  }
  double acc = static_cast<double>(unit);
  for (const auto& a : args) acc = rop(acc, a.as_number());
  return number(acc);
}

template <typename Cmp>
PrimitiveFn comparison(const std::string& name, Cmp cmp) {
  return [name, cmp](CallInfo&, Args args) {
    if (args.empty() || !all_numbers(args)) return fail(name, "expects numbers");
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      bool ok = args[i].is_integer() && args[i + 1].is_integer()
                    ? cmp(args[i].as_integer(), args[i + 1].as_integer())
                    : cmp(args[i].as_number(), args[i + 1].as_number());
      if (!ok) return Value::boolean(false);
    }
    return Value::boolean(true);
  };
}

template <typename F>
PrimitiveFn unary_math(const std::string& name, F f) {
  return [name, f](CallInfo&, Args args) {
    if (args.size() != 1 || !args[0].is_number()) return fail(name, "expects one number");
    double r = f(args[0].as_number());
    if (std::isnan(r)) return fail(name, "argument out of domain");
    return number(r);
  };
}

template <typename P>
PrimitiveFn predicate(const std::string& name, P p) {
  return [name, p](CallInfo&, Args args) {
    if (args.size() != 1) return fail(name, "expects one argument");
    return Value::boolean(p(args[0]));
  };
}

bool is_kind(const Value& v, Procedure::Kind k) { return v.is_procedure() && v.as_procedure()->kind() == k; }

void install_arithmetic(Environment& env) {
  def(env, "+", [](CallInfo&, Args args) {
    return fold_numbers("+", args, 0, [](std::int64_t a, std::int64_t b) { return a + b; },
                        [](double a, double b) { return a + b; });
  });
  def(env, "*", [](CallInfo&, Args args) {
    return fold_numbers("*", args, 1, [](std::int64_t a, std::int64_t b) { return a * b; },
                        [](double a, double b) { return a * b; });
  });
  def(env, "-", [](CallInfo&, Args args) {
    if (args.empty() || !all_numbers(args)) return fail("-", "expects numbers");
    if (args.size() == 1) {
      return args[0].is_integer() ? Value::integer(-args[0].as_integer()) : number(-args[0].as_number());
    }
    if (all_integers(args)) {
      std::int64_t acc = args[0].as_integer();
      for (std::size_t i = 1; i < args.size(); ++i) acc -= args[i].as_integer();
      return Value::integer(acc);
    }
    double acc = args[0].as_number();
    for (std::size_t i = 1; i < args.size(); ++i) acc -= args[i].as_number();
    return number(acc);
  });
  // Division always produces a real.
  def(env, "/", [](CallInfo&, Args args) {
    if (args.empty() || !all_numbers(args)) return fail("/", "expects numbers");
    double acc = args.size() == 1 ? 1.0 : args[0].as_number();
    for (std::size_t i = args.size() == 1 ? 0 : 1; i < args.size(); ++i) {
      if (args[i].as_number() == 0.0) return fail("/", "division by zero");
      acc /= args[i].as_number();
    }
    return number(acc);
  });
  def(env, "modulo", [](CallInfo&, Args args) {
    if (args.size() != 2 || !all_integers(args)) return fail("modulo", "expects two integers");
    std::int64_t b = args[1].as_integer();
    if (b == 0) return fail("modulo", "division by zero");
    std::int64_t r = args[0].as_integer() % b;
    if (r != 0 && ((r < 0) != (b < 0))) r += b;
    return Value::integer(r);
  });
  def(env, "=", [](CallInfo&, Args args) {
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      if (!values_equal(args[i], args[i + 1])) return Value::boolean(false);
    }
    return Value::boolean(true);
  });
  def(env, "<", comparison("<", [](auto a, auto b) { return a < b; }));
  def(env, ">", comparison(">", [](auto a, auto b) { return a > b; }));
  def(env, "<=", comparison("<=", [](auto a, auto b) { return a <= b; }));
  def(env, ">=", comparison(">=", [](auto a, auto b) { return a >= b; }));
  def(env, "min", [](CallInfo&, Args args) {
    if (args.empty() || !all_numbers(args)) return fail("min", "expects numbers");
    Value best = args[0];
    for (const auto& a : args) {
      if (a.as_number() < best.as_number()) best = a;
    }
    return all_integers(args) ? best : number(best.as_number());
  });
  def(env, "max", [](CallInfo&, Args args) {
    if (args.empty() || !all_numbers(args)) return fail("max", "expects numbers");
    Value best = args[0];
    for (const auto& a : args) {
      if (a.as_number() > best.as_number()) best = a;
    }
    return all_integers(args) ? best : number(best.as_number());
  });
  def(env, "abs", [](CallInfo&, Args args) {
    if (args.size() != 1 || !args[0].is_number()) return fail("abs", "expects one number");
    if (args[0].is_integer()) return Value::integer(std::abs(args[0].as_integer()));
    return number(std::abs(args[0].as_real()));
  });
  def(env, "exp", unary_math("exp", [](double x) { return std::exp(x); }));
  def(env, "log", unary_math("log", [](double x) { return x < 0 ? std::nan("") : std::log(x); }));
  def(env, "sqrt", unary_math("sqrt", [](double x) { return x < 0 ? std::nan("") : std::sqrt(x); }));
  def(env, "floor", unary_math("floor", [](double x) { return std::floor(x); }));
  def(env, "ceiling", unary_math("ceiling", [](double x) { return std::ceil(x); }));
  def(env, "round", unary_math("round", [](double x) { return std::nearbyint(x); }));
  def(env, "expt", [](CallInfo&, Args args) {
    if (args.size() != 2 || !all_numbers(args)) return fail("expt", "expects two numbers");
    if (all_integers(args) && args[1].as_integer() >= 0) {
      std::int64_t r = 1;
      for (std::int64_t i = 0; i < args[1].as_integer(); ++i) r *= args[0].as_integer();
      return Value::integer(r);
    }
    double r = std::pow(args[0].as_number(), args[1].as_number());
    if (std::isnan(r)) return fail("expt", "argument out of domain");
    return number(r);
  });
  def(env, "not", [](CallInfo&, Args args) {
    if (args.size() != 1) return fail("not", "expects one argument");
    return Value::boolean(!args[0].truthy());
  });
}

void install_lists(Environment& env) {
  auto cons = [](CallInfo&, Args args) {
    if (args.size() != 2) return fail("pair", "expects two arguments");
    return Value::cons(args[0], args[1]);
  };
  def(env, "pair", cons);
  def(env, "cons", cons);
  auto first = [](CallInfo&, Args args) {
    if (args.size() != 1 || !args[0].is_pair()) return fail("first", "expects a pair");
    return args[0].as_pair().first();
  };
  def(env, "first", first);
  def(env, "car", first);
  auto rest = [](CallInfo&, Args args) {
    if (args.size() != 1 || !args[0].is_pair()) return fail("rest", "expects a pair");
    return args[0].as_pair().rest();
  };
  def(env, "rest", rest);
  def(env, "cdr", rest);
  auto nth = [](std::size_t n, std::string name) {
    return [n, name](CallInfo&, Args args) {
      if (args.size() != 1) return fail(name, "expects one list");
      const Value* cur = &args[0];
      for (std::size_t i = 0; i < n; ++i) {
        if (!cur->is_pair()) return fail(name, "list too short");
        cur = &cur->as_pair().rest();
      }
      if (!cur->is_pair()) return fail(name, "list too short");
      return cur->as_pair().first();
    };
  };
  def(env, "second", nth(1, "second"));
  def(env, "third", nth(2, "third"));
  // On an improper tail, `last` returns the final cdr: (last (a . b)) is b.
  def(env, "last", [](CallInfo&, Args args) {
    if (args.size() != 1 || !args[0].is_pair()) return fail("last", "expects a non-empty list");
    const Value* cur = &args[0];
    while (cur->as_pair().rest().is_pair()) cur = &cur->as_pair().rest();
    const Value& tail = cur->as_pair().rest();
    return tail.is_nil() ? cur->as_pair().first() : tail;
  });
  def(env, "list", [](CallInfo&, Args args) { return make_list(args); });
  def(env, "null?", predicate("null?", [](const Value& v) { return v.is_nil(); }));
  def(env, "pair?", predicate("pair?", [](const Value& v) { return v.is_pair(); }));
  def(env, "list?", predicate("list?", [](const Value& v) { return list_elements(v).has_value(); }));
  def(env, "list-ref", [](CallInfo&, Args args) {
    if (args.size() != 2 || !args[1].is_integer()) return fail("list-ref", "expects a list and an index");
    auto items = list_elements(args[0]);
    std::int64_t i = args[1].as_integer();
    if (!items || i < 0 || static_cast<std::size_t>(i) >= items->size()) return fail("list-ref", "index out of range");
    return (*items)[static_cast<std::size_t>(i)];
  });
  def(env, "append", [](CallInfo&, Args args) {
    std::vector<Value> all;
    for (const auto& a : args) {
      auto items = list_elements(a);
      if (!items) return fail("append", "expects lists");
      all.insert(all.end(), items->begin(), items->end());
    }
    return make_list(all);
  });
  def(env, "reverse", [](CallInfo&, Args args) {
    if (args.size() != 1) return fail("reverse", "expects one list");
    auto items = list_elements(args[0]);
    if (!items) return fail("reverse", "expects a list");
    std::reverse(items->begin(), items->end());
    return make_list(*items);
  });
  def(env, "member", [](CallInfo&, Args args) {
    if (args.size() != 2) return fail("member", "expects a value and a list");
    const Value* cur = &args[1];
    while (cur->is_pair()) {
      if (values_equal(cur->as_pair().first(), args[0])) return *cur;
      cur = &cur->as_pair().rest();
    }
    return Value::boolean(false);
  });
  def(env, "#case-member", [](CallInfo&, Args args) {
    if (args.size() != 2) return fail("case", "malformed clause");
    const Value* cur = &args[1];
    while (cur->is_pair()) {
      if (values_equal(cur->as_pair().first(), args[0])) return Value::boolean(true);
      cur = &cur->as_pair().rest();
    }
    return Value::boolean(false);
  });
  def(env, "iota", [](CallInfo&, Args args) {
    if (args.empty() || args.size() > 2 || !all_integers(args) || args[0].as_integer() < 0) {
      return fail("iota", "expects a count and an optional start");
    }
    std::int64_t start = args.size() == 2 ? args[1].as_integer() : 0;
    std::vector<Value> out;
    for (std::int64_t i = 0; i < args[0].as_integer(); ++i) out.push_back(Value::integer(start + i));
    return make_list(out);
  });
}

void install_types(Environment& env) {
  def(env, "symbol?", predicate("symbol?", [](const Value& v) { return v.is_symbol(); }));
  def(env, "number?", predicate("number?", [](const Value& v) { return v.is_number(); }));
  def(env, "integer?", predicate("integer?", [](const Value& v) {
        return v.is_integer() || (v.is_real() && std::isfinite(v.as_real()) && std::floor(v.as_real()) == v.as_real());
      }));
  def(env, "real?", predicate("real?", [](const Value& v) { return v.is_number(); }));
  def(env, "boolean?", predicate("boolean?", [](const Value& v) { return v.is_boolean(); }));
  def(env, "char?", predicate("char?", [](const Value& v) { return v.is_character(); }));
  def(env, "procedure?", predicate("procedure?", [](const Value& v) { return v.is_procedure(); }));
  def(env, "environment?", predicate("environment?", [](const Value& v) { return v.is_environment(); }));
  def(env, "gensym?", predicate("gensym?", [](const Value& v) { return is_kind(v, Procedure::Kind::Gensym); }));
  def(env, "uppercase-symbol?", predicate("uppercase-symbol?", [](const Value& v) {
        return v.is_symbol() && !v.as_symbol().name().empty() &&
               std::isupper(static_cast<unsigned char>(v.as_symbol().name()[0]));
      }));
  def(env, "error?", predicate("error?", [](const Value& v) { return v.is_error(); }), true);
  def(env, "eq?", [](CallInfo&, Args args) {
    if (args.size() != 2) return fail("eq?", "expects two arguments");
    return Value::boolean(values_equal(args[0], args[1]));
  });
  def(env, "equal?", [](CallInfo&, Args args) {
    if (args.size() != 2) return fail("equal?", "expects two arguments");
    return Value::boolean(values_equal(args[0], args[1]));
  });
  env.bind(Symbol("error"), Value::error("no matching clause"));
}

EnvPtr env_argument(CallInfo& info, Args args, std::size_t index) {
  if (args.size() > index) return args[index].is_environment() ? args[index].as_environment() : nullptr;
  return info.env;
}

void install_control(Environment& env) {
  def(env, "apply", [](CallInfo& info, Args args) {
    if (args.size() != 2) return fail("apply", "expects a procedure and a list");
    auto items = list_elements(args[1]);
    if (!items) return fail("apply", "expects an argument list");
    return info.ctx.interp().apply(args[0], *items, info.ctx, info.address, info.env);
  });
  def(env, "eval", [](CallInfo& info, Args args) {
    if (args.empty() || args.size() > 2) return fail("eval", "expects an expression and an optional environment");
    EnvPtr target = env_argument(info, args, 1);
    if (!target) return fail("eval", "second argument must be an environment");
    ExprPtr expr;
    try {
      expr = compile_datum(args[0]);
    } catch (const SyntaxError& e) {
      return fail("eval", e.what());
    }
    return info.ctx.interp().eval_at(expr, target, info.ctx, info.address);
  });
  def(env, "get-current-environment", [](CallInfo& info, Args args) {
    if (!args.empty()) return fail("get-current-environment", "takes no arguments");
    return Value::environment(info.env);
  });
  def(env, "mem", [](CallInfo& info, Args args) {
    if (args.size() != 1 || !args[0].is_procedure()) return fail("mem", "expects a procedure");
    return Value::procedure(std::make_shared<MemoizedProcedure>(args[0].as_procedure(), info.address));
  });
  def(env, "DPmem", [](CallInfo& info, Args args) {
    if (args.size() != 2 || !args[0].is_number() || !args[1].is_procedure()) {
      return fail("DPmem", "expects a concentration and a procedure");
    }
    double alpha = args[0].as_number();
    if (!(alpha >= 0.0)) return fail("DPmem", "concentration must be non-negative");
    return Value::procedure(std::make_shared<DpMemoizedProcedure>(alpha, args[1].as_procedure(), info.address));
  });
  // (gensym x) is false for every x: a fresh tag equals nothing that exists.
  def(env, "gensym", [](CallInfo& info, Args args) {
    if (!args.empty()) return Value::boolean(false);
    return Value::procedure(std::make_shared<GensymProcedure>(stable_hash(info.address)));
  });
  def(env, "query", [](CallInfo& info, Args args) {
    if (args.size() < 2 || args.size() > 3) return fail("query", "expects an expression, a predicate and an optional environment");
    EnvPtr target = env_argument(info, args, 2);
    if (!target) return fail("query", "third argument must be an environment");
    std::vector<Value> params = {Value::symbol("query"), args[0], args[1], Value::environment(target)};
    return info.ctx.choose(info.address, info.ctx.interp().nested_query_erp(), params);
  });
  def(env, "lex-query", [](CallInfo& info, Args args) {
    if (args.size() != 3) return fail("lex-query", "expects a lexicon, an expression and a predicate expression");
    std::vector<Value> params = {Value::symbol("lex-query"), args[0], args[1], args[2], Value::environment(info.env)};
    return info.ctx.choose(info.address, info.ctx.interp().nested_query_erp(), params);
  });
}

}  // namespace

void install_primitives(Environment& env) {
  install_arithmetic(env);
  install_lists(env);
  install_types(env);
  install_control(env);
  for (const ErpDescriptor* erp : builtin_erps()) {
    env.bind(Symbol(erp->name()), Value::procedure(std::make_shared<ElementaryProcedure>(*erp)));
  }
}

}  // namespace steeple
