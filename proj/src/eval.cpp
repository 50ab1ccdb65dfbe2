#include <cmath>
#include <limits>

#include "steeple/inference.hpp"
#include "steeple/interpreter.hpp"
#include "steeple/prelude.hpp"

namespace steeple {

std::string Closure::identity_key() const { return "c" + hex64(id_); }

std::string GensymProcedure::identity_key() const { return "g" + hex64(tag_); }

// EvalContext -----------------------------------------------------------------

namespace {

// Stack position of the outermost live context on this thread.
thread_local const char* stack_base = nullptr;
thread_local int live_contexts = 0;

std::size_t stack_in_use() {
  const char* here = static_cast<const char*>(__builtin_frame_address(0));
  return stack_base > here ? static_cast<std::size_t>(stack_base - here) : 0;
}

}  // namespace

EvalContext::EvalContext(const Interpreter& interp, Rng rng, ChoiceSource& source, std::string root)
    : interp_(&interp), rng_(rng), source_(&source), root_(std::move(root)) {
  if (live_contexts++ == 0) stack_base = static_cast<const char*>(__builtin_frame_address(0));
  frames_.push_back(Frame{root_, {}});
}

EvalContext::~EvalContext() {
  if (--live_contexts == 0) stack_base = nullptr;
}

Value EvalContext::choose(const std::string& address, const ErpDescriptor& erp, std::span<const Value> params) {
  if (auto err = erp.validate(params)) return Value::error(*err);
  Value v = source_->choose(*this, address, erp, params);
  double lp = 0.0;
  try {
    lp = erp.score(params, v);
  } catch (const InferenceError&) {
    if (source_->needs_scores()) throw;
  }
  if (std::isnan(lp) || lp == -std::numeric_limits<double>::infinity()) throw ZeroProbability{};
  trace_.record(ChoiceRecord{address, &erp, std::vector<Value>(params.begin(), params.end()), v, lp});
  source_->recorded(*this, trace_.choices().back());
  return v;
}

std::string compact_address(std::string address) {
  if (address.size() <= kMaxAddressLength) return address;
  return "~" + hex64(stable_hash(address));
}

std::string EvalContext::next_address(std::uint32_t site) {
  Frame& f = frames_.back();
  std::uint32_t count = 0;
  bool found = false;
  for (auto& [s, n] : f.counts) {
    if (s == site) {
      count = n++;
      found = true;
      break;
    }
  }
  if (!found) f.counts.emplace_back(site, 1);
  std::string out;
  out.reserve(f.address.size() + 12);
  out += f.address;
  out += '/';
  out += std::to_string(site);
  if (count > 0) {
    out += '.';
    out += std::to_string(count);
  }
  return compact_address(std::move(out));
}

EvalContext::FrameGuard::FrameGuard(EvalContext& ctx, std::string address) : ctx_(ctx) {
  ctx_.frames_.push_back(Frame{std::move(address), {}});
}

EvalContext::FrameGuard::~FrameGuard() { ctx_.frames_.pop_back(); }

bool EvalContext::DepthGuard::exceeded() const {
  return ctx_.depth_ > ctx_.interp_->max_depth || ctx_.steps_ > ctx_.interp_->max_steps ||
         stack_in_use() > ctx_.interp_->max_stack_bytes;
}

// Interpreter -----------------------------------------------------------------

Interpreter::Interpreter() : global_(Environment::make()) {
  install_primitives(*global_);
  nested_query_ = make_nested_query_erp(*this);
  SamplingSource source;
  EvalContext ctx(*this, Rng(0), source, "P:");
  auto forms = compile_program(prelude_source());
  auto loaded = run_top_level(forms, global_, ctx);
  // Flatten the prelude's define chain into one indexed frame.
  auto flat = Environment::make();
  std::vector<const Environment*> chain;
  for (const Environment* e = loaded.env.get(); e != nullptr; e = e->parent().get()) chain.push_back(e);
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    for (const auto& [name, value] : (*it)->bindings()) flat->bind(name, value);
  }
  global_ = flat;
}

Interpreter::~Interpreter() = default;

Value Interpreter::eval(const ExprPtr& expr, const EnvPtr& env, EvalContext& ctx) const {
  EvalContext::DepthGuard depth(ctx);
  if (depth.exceeded()) return Value::error("evaluation depth or step limit exceeded");
  const Expr& e = *expr;
  switch (e.kind) {
    case Expr::Kind::Constant:
    case Expr::Kind::Quote:
      return e.constant;
    case Expr::Kind::Variable:
      return env->lookup(e.name);
    case Expr::Kind::Lambda: {
      std::string where = ctx.frame_address();
      where += '@';
      where += std::to_string(e.site);
      return Value::procedure(std::make_shared<Closure>(expr, env, stable_hash(where)));
    }
    case Expr::Kind::If: {
      Value test = eval(e.items[0], env, ctx);
      if (test.is_error()) return test;
      return eval(test.truthy() ? e.items[1] : e.items[2], env, ctx);
    }
    case Expr::Kind::Define: {
      auto child = Environment::make(env);
      child->bind(e.name, Value::error("uninitialized variable: " + e.name.name()));
      Value v = eval(e.items[0], child, ctx);
      child->assign(e.name, std::move(v));
      return Value::environment(child);
    }
    case Expr::Kind::Application: {
      std::string address = ctx.next_address(e.site);
      Value op = eval(e.items[0], env, ctx);
      std::vector<Value> args;
      args.reserve(e.items.size() - 1);
      for (std::size_t i = 1; i < e.items.size(); ++i) args.push_back(eval(e.items[i], env, ctx));
      if (op.is_error()) return op;
      return apply(op, args, ctx, address, env);
    }
  }
  return Value::error("unknown expression");
}

Value Interpreter::apply(const Value& proc, std::span<const Value> args, EvalContext& ctx,
                         const std::string& address, const EnvPtr& caller_env) const {
  if (proc.is_error()) return proc;
  if (!proc.is_procedure()) return Value::error("not a procedure: " + print_value(proc));
  const Procedure& p = *proc.as_procedure();
  bool accepts_errors =
      p.kind() == Procedure::Kind::Primitive && static_cast<const PrimitiveProcedure&>(p).accepts_errors();
  if (!accepts_errors) {
    for (const auto& a : args) {
      if (a.is_error()) return a;
    }
  }

  switch (p.kind()) {
    case Procedure::Kind::Closure: {
      const auto& c = static_cast<const Closure&>(p);
      const Expr& lambda = c.lambda();
      EnvPtr frame;
      if (lambda.variadic) {
        Value all = make_list(args);
        frame = Environment::extend(c.env(), std::span<const Symbol>(&lambda.name, 1), std::span<const Value>(&all, 1));
      } else {
        if (args.size() != lambda.formals.size()) {
          return Value::error("expected " + std::to_string(lambda.formals.size()) + " arguments, got " +
                              std::to_string(args.size()));
        }
        frame = Environment::extend(c.env(), lambda.formals, args);
      }
      EvalContext::FrameGuard guard(ctx, address);
      return eval(lambda.items[0], frame, ctx);
    }
    case Procedure::Kind::Primitive: {
      CallInfo info{ctx, address, caller_env};
      return static_cast<const PrimitiveProcedure&>(p).call(info, args);
    }
    case Procedure::Kind::Elementary:
      return ctx.choose(address, static_cast<const ElementaryProcedure&>(p).erp(), args);
    case Procedure::Kind::Memoized: {
      const auto& m = static_cast<const MemoizedProcedure&>(p);
      std::string key = memo_key(args);
      {
        auto& table = ctx.memo().tables[m.creation()];
        if (auto it = table.find(key); it != table.end()) return it->second;
      }
      Value v = apply(Value::procedure(m.underlying()), args, ctx, compact_address(m.creation() + "|m" + key), caller_env);
      ctx.memo().tables[m.creation()].emplace(key, v);
      return v;
    }
    case Procedure::Kind::DpMemoized: {
      const auto& d = static_cast<const DpMemoizedProcedure&>(p);
      std::string key = memo_key(args);
      auto params = crp_seat_params(d.alpha(), ctx.memo().restaurants[d.creation()][key]);
      Value seat = ctx.choose(address, crp_seat_erp(), params);
      if (seat.is_error()) return seat;
      if (seat.is_integer()) {
        Table* t = ctx.memo().restaurants[d.creation()][key].find(seat.as_integer());
        if (t == nullptr) throw ZeroProbability{};
        ++t->count;
        return t->dish;
      }
      std::int64_t id = table_id_for(address);
      std::string dish_address = d.creation() + "|d" + key + "#" + hex64(static_cast<std::uint64_t>(id));
      Value dish = apply(Value::procedure(d.underlying()), args, ctx, compact_address(std::move(dish_address)), caller_env);
      ctx.memo().restaurants[d.creation()][key].tables.push_back(Table{id, 1, dish});
      return dish;
    }
    case Procedure::Kind::Gensym: {
      if (args.size() != 1) return Value::error("a gensym takes one argument");
      const auto& g = static_cast<const GensymProcedure&>(p);
      const Value& x = args[0];
      bool same = x.is_procedure() && x.as_procedure()->kind() == Procedure::Kind::Gensym &&
                  static_cast<const GensymProcedure&>(*x.as_procedure()).tag() == g.tag();
      return Value::boolean(same);
    }
  }
  return Value::error("unknown procedure kind");
}

Value Interpreter::eval_at(const ExprPtr& expr, const EnvPtr& env, EvalContext& ctx, std::string address) const {
  EvalContext::FrameGuard guard(ctx, std::move(address));
  return eval(expr, env, ctx);
}

Interpreter::TopLevel Interpreter::run_top_level(std::span<const ExprPtr> forms, EnvPtr env, EvalContext& ctx,
                                                 std::size_t first_index) const {
  TopLevel out{std::move(env), {}};
  for (std::size_t k = 0; k < forms.size(); ++k) {
    ctx.reset_steps();
    Value v = eval_at(forms[k], out.env, ctx, ctx.root() + "t" + std::to_string(first_index + k));
    if (forms[k]->kind == Expr::Kind::Define && v.is_environment()) {
      out.env = v.as_environment();
    } else {
      out.values.push_back(std::move(v));
    }
  }
  return out;
}

Value Interpreter::run(std::string_view source, std::uint64_t seed) const {
  SamplingSource sampler;
  EvalContext ctx(*this, Rng(seed), sampler);
  auto forms = compile_program(source);
  auto result = run_top_level(forms, global_, ctx);
  return result.values.empty() ? Value() : result.values.back();
}

}  // namespace steeple
