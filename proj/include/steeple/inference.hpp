#pragma once

// Query backends: rejection, exact enumeration and trace Metropolis-Hastings.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "steeple/interpreter.hpp"

namespace steeple {

class InferenceError : public std::runtime_error {
 public:
  enum class Kind { BudgetExceeded, InadmissibleConditioning, Unsupported };
  InferenceError(Kind kind, const std::string& message, double acceptance_rate = 0.0)
      : std::runtime_error(message), kind_(kind), acceptance_rate_(acceptance_rate) {}
  Kind kind() const { return kind_; }
  double acceptance_rate() const { return acceptance_rate_; }

 private:
  Kind kind_;
  double acceptance_rate_;
};

/// A conditional sampling problem: the value of `expr` given that the
/// predicate holds. Lexicon problems first bind their definitions in one
/// recursive frame; the query expression and predicate expression are then
/// evaluated there, sharing memoized randomness.
struct QueryProblem {
  enum class Kind { Procedure, Lexicon };
  Kind kind = Kind::Procedure;
  ExprPtr expr;
  Value predicate;  // Procedure kind
  std::vector<std::pair<Symbol, ExprPtr>> lexicon;
  ExprPtr predicate_expr;  // Lexicon kind
  EnvPtr env;
};

/// `(query 'expr pred)`. Throws SyntaxError for malformed data.
QueryProblem make_query(const Value& expr_datum, const Value& predicate, EnvPtr env);
/// `(lex-query '((name def) ...) 'expr 'pred)`.
QueryProblem make_lex_query(const Value& lexicon, const Value& expr_datum, const Value& pred_datum, EnvPtr env);

struct EnumerationLimits {
  std::size_t max_choices = 10000;
  double min_path_prob = 1e-12;
};

struct EnumerationResult {
  /// Values with their probabilities, sorted by printed form.
  std::vector<std::pair<Value, double>> mass;
  double residual = 0.0;
  std::size_t leaves = 0;

  double probability(const std::string& printed) const;
  double total_mass() const;
};

/// Exact distribution of `expr` by depth-first exploration of every choice.
/// Paths over the limits contribute to the residual. Throws InferenceError
/// (Unsupported) on reaching a continuous choice.
EnumerationResult enumerate(const Interpreter& interp, const ExprPtr& expr, const EnvPtr& env,
                            const EnumerationLimits& limits = {});
/// Enumerates a whole program; the distribution is over its last value.
EnumerationResult enumerate(const Interpreter& interp, std::string_view source,
                            const EnumerationLimits& limits = {});
EnumerationResult enumerate(const Interpreter& interp, std::span<const ExprPtr> forms,
                            const EnumerationLimits& limits = {});

/// Conditional distribution by joint enumeration of expression and predicate.
/// The residual is the truncated mass relative to accepted plus truncated.
/// Throws InferenceError (InadmissibleConditioning) when nothing is accepted.
EnumerationResult enumerate_query(const Interpreter& interp, const QueryProblem& problem,
                                  const EnumerationLimits& limits = {});

/// How the predicate's own randomness is treated.
/// Joint: it is sampled with the rest of the run and must come out true.
/// Collapsed: it is summed out exactly by enumeration (finite-discrete only).
/// Auto: collapsed when that succeeds, joint otherwise.
enum class PredicateMode { Auto, Collapsed, Joint };

struct RejectionOptions {
  std::uint64_t max_attempts = 1'000'000;
  PredicateMode predicate = PredicateMode::Joint;
};

struct RejectionSample {
  Value value;
  std::uint64_t attempts = 0;
};

/// Independent samples from the conditional distribution. Each attempt is a
/// fresh evaluation with fresh memo tables.
std::vector<RejectionSample> rejection_query(const Interpreter& interp, const QueryProblem& problem, std::size_t n,
                                             Rng& rng, const RejectionOptions& options = {});

struct MhOptions {
  PredicateMode predicate = PredicateMode::Auto;
  std::uint64_t max_init_attempts = 1'000'000;
};

/// State of the chain: the choices of one accepted run and its value.
struct MhState {
  Trace trace;
  Value value;
  double log_pred = 0.0;  // log P(predicate) when collapsed, else 0
  double score() const { return trace.total_logp() + log_pred; }
};

/// Single-site Metropolis-Hastings over computation traces.
class MhChain {
 public:
  MhChain(const Interpreter& interp, QueryProblem problem, Rng rng, MhOptions options = {});

  const MhState& state() const { return state_; }
  bool collapsed() const { return collapsed_; }

  /// One transition: pick a choice uniformly, resample it from its prior,
  /// replay, then accept or reject.
  void step();

  struct Proposal {
    double acceptance = 0.0;
    std::optional<MhState> state;  // empty when the proposal is infeasible
    double log_ratio = 0.0;
  };

  /// Evaluates the move that sets choice `index` of `from` to `value`.
  /// Returns min(1, R) together with the proposed state.
  Proposal propose(const MhState& from, std::size_t index, const Value& value);

  std::uint64_t proposals() const { return proposals_; }
  std::uint64_t accepted() const { return accepted_; }

 private:
  std::optional<MhState> run(ChoiceSource& source);
  std::optional<double> collapse_predicate(const Value& value, const EnvPtr& world, const MemoState& memo);

  const Interpreter* interp_;
  QueryProblem problem_;
  Rng rng_;
  MhOptions options_;
  bool collapsed_ = false;
  bool decided_ = false;
  MhState state_;
  std::uint64_t proposals_ = 0;
  std::uint64_t accepted_ = 0;
};

/// Runs burn-in steps, then collects every lag-th value.
std::vector<Value> mh_query(const Interpreter& interp, const QueryProblem& problem, std::size_t n,
                            std::size_t burn_in, std::size_t lag, Rng& rng, const MhOptions& options = {});

/// Rebuilds a problem from the params of a nested query choice:
/// ('query datum predicate env) or ('lex-query lexicon datum predicate env).
QueryProblem query_problem_from_params(std::span<const Value> params);

/// Elementary procedure behind nested `query` and `lex-query` calls: samples
/// by rejection in an isolated evaluation, scores by enumeration.
std::unique_ptr<ErpDescriptor> make_nested_query_erp(const Interpreter& interp);

/// Stage one of a query run: evaluates the lexicon (if any) and the query
/// expression. Sets `world` to the environment the predicate sees.
Value evaluate_query_expression(const QueryProblem& problem, EvalContext& ctx, EnvPtr& world);

/// Applies or evaluates the predicate. Returns true iff it accepted.
bool evaluate_predicate(const QueryProblem& problem, EvalContext& ctx, const Value& value, const EnvPtr& world);

}  // namespace steeple
