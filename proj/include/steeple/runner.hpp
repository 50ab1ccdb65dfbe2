#pragma once

// Script runner and REPL session behind the command-line tool.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "steeple/inference.hpp"
#include "steeple/interpreter.hpp"

namespace steeple {

enum class Method { Rejection, Mh, Enumerate };
enum class OutputFormat { Jsonl, Csv, Summary };

std::string_view to_string(Method m);
std::string_view to_string(OutputFormat f);
std::optional<Method> parse_method(std::string_view text);
std::optional<OutputFormat> parse_format(std::string_view text);

struct RunConfig {
  std::string input = "inline";  // label written to the header
  Method method = Method::Rejection;
  std::size_t samples = 1000;
  std::optional<std::size_t> burn_in;  // defaults to samples / 10
  std::size_t lag = 1;
  std::uint64_t seed = 0;
  std::uint64_t max_attempts = 1'000'000;  // rejection attempts per sample, MH initialisation
  EnumerationLimits limits;
  OutputFormat format = OutputFormat::Jsonl;
  /// Replacement expressions for top-level definitions, by name.
  std::vector<std::pair<std::string, std::string>> overrides;

  std::size_t effective_burn_in() const { return burn_in.value_or(samples / 10); }
  /// One comment line recording every setting that affects the output.
  std::string header() const;
};

/// Samples or an exact distribution produced for one query.
struct QueryOutput {
  std::vector<Value> values;
  std::vector<std::uint64_t> attempts;  // rejection only
  std::optional<EnumerationResult> exact;
};

/// Runs `problem` under the configured method and budgets.
QueryOutput run_query(const Interpreter& interp, const QueryProblem& problem, const RunConfig& config, Rng& rng);

/// Forward samples (or the exact distribution) of a whole program's last value.
QueryOutput run_model(const Interpreter& interp, std::string_view source, const RunConfig& config);

void write_output(std::ostream& out, const QueryOutput& output, const RunConfig& config);

/// True if `form` is a top-level `(query ...)` or `(lex-query ...)` call.
bool is_query_form(const Expr& form);

/// Persistent top-level state: global definitions, memo tables and the
/// random stream. Query forms run under the configured method.
class Session {
 public:
  Session(const Interpreter& interp, RunConfig config, std::ostream& out);
  ~Session();

  RunConfig& config() { return config_; }
  const EnvPtr& env() const { return env_; }

  /// Evaluates each form of `source` in order. Query results are written in
  /// the configured format; other values are printed when `echo` is set.
  /// Throws SyntaxError and InferenceError.
  void evaluate(std::string_view source, bool echo);

  /// Evaluates all forms but the last, then builds the problem the final
  /// query form describes. Throws std::invalid_argument if it is not one.
  QueryProblem prepare_query(std::string_view source);

  void reseed(std::uint64_t seed);
  std::size_t queries_run() const { return queries_run_; }

 private:
  ExprPtr apply_overrides(const ExprPtr& form) const;
  std::optional<QueryProblem> query_problem(const ExprPtr& form, const std::string& address);
  std::string next_root();

  const Interpreter* interp_;
  RunConfig config_;
  std::ostream* out_;
  SamplingSource source_;
  std::unique_ptr<EvalContext> ctx_;
  EnvPtr env_;
  std::size_t forms_ = 0;
  std::size_t queries_run_ = 0;
};

/// Runs a whole program as the command-line tool does and returns its exit
/// status: 0 success, 1 usage or runtime failure, 2 syntax error, 3 budget
/// exceeded, 4 other inference failure.
int run_script(const Interpreter& interp, std::string_view source, const RunConfig& config, std::ostream& out,
               std::ostream& err);

/// Line-oriented read-eval-print loop. Directives: :method, :samples,
/// :burn-in, :lag, :seed, :format, :quit.
void repl(const Interpreter& interp, RunConfig config, std::istream& in, std::ostream& out, bool prompt);

/// Builds a problem from a program whose last form is a query; convenience
/// wrapper over Session::prepare_query.
QueryProblem load_query(const Interpreter& interp, std::string_view source, std::uint64_t seed = 0,
                        const std::vector<std::pair<std::string, std::string>>& overrides = {});

}  // namespace steeple
