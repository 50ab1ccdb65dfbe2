#pragma once

// The evaluator: closures, primitives, evaluation contexts and eval/apply.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "steeple/environment.hpp"
#include "steeple/erp.hpp"
#include "steeple/expr.hpp"
#include "steeple/memo.hpp"
#include "steeple/rng.hpp"
#include "steeple/trace.hpp"
#include "steeple/value.hpp"

namespace steeple {

class Interpreter;
class EvalContext;

/// Thrown when a choice scores -inf, e.g. a replayed value that left the
/// support. The enclosing inference routine discards the run.
struct ZeroProbability {};

/// Addresses longer than this are replaced by a hash of their text so that
/// deep recursion does not make every step proportional to its depth.
inline constexpr std::size_t kMaxAddressLength = 160;
std::string compact_address(std::string address);

class Closure final : public Procedure {
 public:
  Closure(ExprPtr lambda, EnvPtr env, std::uint64_t id)
      : lambda_(std::move(lambda)), env_(std::move(env)), id_(id) {}
  Kind kind() const override { return Kind::Closure; }
  std::string identity_key() const override;
  const Expr& lambda() const { return *lambda_; }
  const EnvPtr& env() const { return env_; }

 private:
  ExprPtr lambda_;
  EnvPtr env_;
  std::uint64_t id_;
};

struct CallInfo {
  EvalContext& ctx;
  const std::string& address;
  const EnvPtr& env;
};

using PrimitiveFn = std::function<Value(CallInfo&, std::span<const Value>)>;

class PrimitiveProcedure final : public Procedure {
 public:
  PrimitiveProcedure(std::string name, PrimitiveFn fn, bool accepts_errors = false)
      : name_(std::move(name)), fn_(std::move(fn)), accepts_errors_(accepts_errors) {}
  Kind kind() const override { return Kind::Primitive; }
  std::string identity_key() const override { return "p:" + name_; }
  const std::string& name() const { return name_; }
  bool accepts_errors() const { return accepts_errors_; }
  Value call(CallInfo& info, std::span<const Value> args) const { return fn_(info, args); }

 private:
  std::string name_;
  PrimitiveFn fn_;
  bool accepts_errors_;
};

class ElementaryProcedure final : public Procedure {
 public:
  explicit ElementaryProcedure(const ErpDescriptor& erp) : erp_(&erp) {}
  Kind kind() const override { return Kind::Elementary; }
  std::string identity_key() const override { return "e:" + std::string(erp_->name()); }
  const ErpDescriptor& erp() const { return *erp_; }

 private:
  const ErpDescriptor* erp_;
};

/// Value returned by `gensym`: a predicate true only of itself.
class GensymProcedure final : public Procedure {
 public:
  explicit GensymProcedure(std::uint64_t tag) : tag_(tag) {}
  Kind kind() const override { return Kind::Gensym; }
  std::string identity_key() const override;
  std::uint64_t tag() const { return tag_; }

 private:
  std::uint64_t tag_;
};

/// Mutable state of one evaluation: random stream, choice source, trace,
/// memo tables and the frame stack used to build choice addresses.
class EvalContext {
 public:
  EvalContext(const Interpreter& interp, Rng rng, ChoiceSource& source, std::string root = {});
  ~EvalContext();
  EvalContext(const EvalContext&) = delete;
  EvalContext& operator=(const EvalContext&) = delete;

  const Interpreter& interp() const { return *interp_; }
  Rng& rng() { return rng_; }
  ChoiceSource& source() { return *source_; }
  Trace& trace() { return trace_; }
  const Trace& trace() const { return trace_; }
  MemoState& memo() { return memo_; }
  const std::string& root() const { return root_; }

  /// Makes a random choice at `address`, records it and returns its value.
  /// Invalid params give the `error` value and record nothing.
  Value choose(const std::string& address, const ErpDescriptor& erp, std::span<const Value> params);

  /// Address for the next application of `site` in the current frame.
  std::string next_address(std::uint32_t site);
  const std::string& frame_address() const { return frames_.back().address; }

  /// Restarts the evaluation-step budget; done once per top-level form.
  void reset_steps() { steps_ = 0; }

  class FrameGuard {
   public:
    FrameGuard(EvalContext& ctx, std::string address);
    ~FrameGuard();
    FrameGuard(const FrameGuard&) = delete;
    FrameGuard& operator=(const FrameGuard&) = delete;

   private:
    EvalContext& ctx_;
  };

  class DepthGuard {
   public:
    explicit DepthGuard(EvalContext& ctx) : ctx_(ctx) {
      ++ctx_.depth_;
      ++ctx_.steps_;
    }
    ~DepthGuard() { --ctx_.depth_; }
    DepthGuard(const DepthGuard&) = delete;
    DepthGuard& operator=(const DepthGuard&) = delete;
    bool exceeded() const;

   private:
    EvalContext& ctx_;
  };

 private:
  struct Frame {
    std::string address;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> counts;
  };

  const Interpreter* interp_;
  Rng rng_;
  ChoiceSource* source_;
  Trace trace_;
  MemoState memo_;
  std::string root_;
  std::vector<Frame> frames_;
  int depth_ = 0;
  std::uint64_t steps_ = 0;
};

class Interpreter {
 public:
  /// Builds the global environment: primitives, then the prelude.
  Interpreter();
  ~Interpreter();
  Interpreter(const Interpreter&) = delete;
  Interpreter& operator=(const Interpreter&) = delete;

  const EnvPtr& global_env() const { return global_; }

  Value eval(const ExprPtr& expr, const EnvPtr& env, EvalContext& ctx) const;
  Value apply(const Value& proc, std::span<const Value> args, EvalContext& ctx,
              const std::string& address, const EnvPtr& caller_env) const;

  /// Evaluates `expr` in a fresh frame at `address`.
  Value eval_at(const ExprPtr& expr, const EnvPtr& env, EvalContext& ctx, std::string address) const;

  struct TopLevel {
    EnvPtr env;
    std::vector<Value> values;
  };
  /// Evaluates forms in order. A `define` extends the environment seen by
  /// later forms; other forms contribute their value.
  TopLevel run_top_level(std::span<const ExprPtr> forms, EnvPtr env, EvalContext& ctx,
                         std::size_t first_index = 0) const;

  /// Convenience: fresh sampling context, run the program, last value.
  Value run(std::string_view source, std::uint64_t seed = 0) const;

  const ErpDescriptor& nested_query_erp() const { return *nested_query_; }

  /// Evaluation nesting limit; deeper recursion yields the `error` value.
  int max_depth = 12000;
  /// Evaluation steps allowed per top-level form before yielding `error`.
  std::uint64_t max_steps = 5'000'000;
  /// Native stack bytes evaluation may use on one thread.
  std::size_t max_stack_bytes = 6u << 20;

 private:
  EnvPtr global_;
  std::unique_ptr<ErpDescriptor> nested_query_;
};

/// Installs built-in primitives and elementary random procedures.
void install_primitives(Environment& env);

}  // namespace steeple
