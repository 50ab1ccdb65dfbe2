#include "steeple/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

namespace steeple {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Enumeration -------------------------------------------------------------------

struct PathTruncated {};

struct Step {
  Value value;
  double prob;
};

struct Branch {
  std::vector<Step> prefix;
};

// Follows a stored prefix of choices, then takes the first support point of
// each new choice and leaves the remaining points as pending branches.
class EnumerationSource final : public ChoiceSource {
 public:
  EnumerationSource(std::vector<Step> prefix, const EnumerationLimits& limits, std::vector<Branch>& pending)
      : prefix_(std::move(prefix)), limits_(limits), pending_(pending) {
    path_.reserve(prefix_.size());
  }

  Value choose(EvalContext&, const std::string&, const ErpDescriptor& erp, std::span<const Value> params) override {
    std::size_t index = path_.size();
    if (index >= limits_.max_choices) throw PathTruncated{};
    Step step;
    if (index < prefix_.size()) {
      step = prefix_[index];
    } else {
      if (erp.support_kind() == SupportKind::Continuous) {
        throw InferenceError(InferenceError::Kind::Unsupported,
                             "enumeration cannot branch on continuous choice '" + std::string(erp.name()) + "'");
      }
      WeightedValues support = erp.support(params);
      if (support.empty()) throw ZeroProbability{};
      for (std::size_t j = support.size(); j-- > 1;) {
        Branch b;
        b.prefix = path_;
        b.prefix.push_back(Step{support[j].first, support[j].second});
        pending_.push_back(std::move(b));
      }
      step = Step{support[0].first, support[0].second};
    }
    path_.push_back(step);
    prob_ *= step.prob;
    if (limits_.min_path_prob > 0.0 && prob_ <= limits_.min_path_prob) throw PathTruncated{};
    return step.value;
  }

  double path_prob() const { return prob_; }

 private:
  std::vector<Step> prefix_;
  std::vector<Step> path_;
  const EnumerationLimits& limits_;
  std::vector<Branch>& pending_;
  double prob_ = 1.0;
};

struct Leaf {
  std::optional<Value> value;  // empty when the path was rejected
  double prob = 0.0;
  double logp = 0.0;
};

// Runs `body` once per path of the evaluation tree.
template <typename Body, typename OnLeaf>
void explore(const Interpreter& interp, const EnumerationLimits& limits, const MemoState* memo_seed, Body body,
             OnLeaf on_leaf, double& residual, std::size_t& leaves) {
  std::vector<Branch> pending;
  pending.push_back(Branch{});
  while (!pending.empty()) {
    Branch b = std::move(pending.back());
    pending.pop_back();
    EnumerationSource source(std::move(b.prefix), limits, pending);
    EvalContext ctx(interp, Rng(0), source);
    if (memo_seed != nullptr) ctx.memo() = *memo_seed;
    try {
      std::optional<Value> v = body(ctx);
      ++leaves;
      on_leaf(Leaf{std::move(v), source.path_prob(), ctx.trace().total_logp()});
    } catch (const PathTruncated&) {
      residual += source.path_prob();
    } catch (const ZeroProbability&) {
    }
  }
}

class MassTable {
 public:
  void add(const Value& v, double p) {
    auto [it, inserted] = table_.try_emplace(print_value(v), v, 0.0);
    it->second.second += p;
  }
  double total() const {
    double t = 0.0;
    for (const auto& [k, vp] : table_) t += vp.second;
    return t;
  }
  std::vector<std::pair<Value, double>> sorted(double scale) const {
    std::vector<std::pair<Value, double>> out;
    for (const auto& [k, vp] : table_) out.emplace_back(vp.first, vp.second * scale);
    return out;
  }

 private:
  std::map<std::string, std::pair<Value, double>> table_;
};

// Query stages --------------------------------------------------------------------

const EnumerationLimits kCollapseLimits{1'000'000, 0.0};

std::optional<double> log_predicate_probability(const Interpreter& interp, const QueryProblem& problem,
                                                const Value& value, const EnvPtr& world, const MemoState& memo) {
  double log_total = kNegInf;
  double residual = 0.0;
  std::size_t leaves = 0;
  try {
    explore(
        interp, kCollapseLimits, &memo,
        [&](EvalContext& ctx) -> std::optional<Value> {
          if (evaluate_predicate(problem, ctx, value, world)) return Value::boolean(true);
          return std::nullopt;
        },
        [&](const Leaf& leaf) {
          if (leaf.value) log_total = log_add(log_total, leaf.logp);
        },
        residual, leaves);
  } catch (const InferenceError& e) {
    if (e.kind() == InferenceError::Kind::Unsupported) return std::nullopt;
    throw;
  }
  if (residual > 0.0) return std::nullopt;
  return log_total;
}

std::string acceptance_message(const char* what, std::uint64_t attempts, std::uint64_t accepted) {
  std::ostringstream out;
  double rate = attempts == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(attempts);
  out << what << " budget exceeded after " << attempts << " attempts (acceptance rate " << rate << ")";
  return out.str();
}

}  // namespace

// Problems --------------------------------------------------------------------------

QueryProblem make_query(const Value& expr_datum, const Value& predicate, EnvPtr env) {
  QueryProblem p;
  p.kind = QueryProblem::Kind::Procedure;
  p.expr = compile_datum(expr_datum);
  if (!predicate.is_procedure()) throw std::invalid_argument("query predicate must be a procedure");
  p.predicate = predicate;
  p.env = std::move(env);
  return p;
}

QueryProblem make_lex_query(const Value& lexicon, const Value& expr_datum, const Value& pred_datum, EnvPtr env) {
  QueryProblem p;
  p.kind = QueryProblem::Kind::Lexicon;
  auto entries = list_elements(lexicon);
  if (!entries) throw std::invalid_argument("lex-query lexicon must be a list of (name definition) pairs");
  for (const auto& entry : *entries) {
    auto parts = list_elements(entry);
    if (!parts || parts->size() != 2 || !(*parts)[0].is_symbol()) {
      throw std::invalid_argument("lex-query lexicon entry must be (name definition): " + print_value(entry));
    }
    p.lexicon.emplace_back((*parts)[0].as_symbol(), compile_datum((*parts)[1]));
  }
  p.expr = compile_datum(expr_datum);
  p.predicate_expr = compile_datum(pred_datum);
  p.env = std::move(env);
  return p;
}

Value evaluate_query_expression(const QueryProblem& problem, EvalContext& ctx, EnvPtr& world) {
  const Interpreter& interp = ctx.interp();
  if (problem.kind == QueryProblem::Kind::Lexicon) {
    // One recursive frame so that definitions may refer to each other.
    auto frame = Environment::make(problem.env);
    for (const auto& [name, def] : problem.lexicon) frame->bind(name, Value::error("uninitialized variable: " + name.name()));
    for (std::size_t i = 0; i < problem.lexicon.size(); ++i) {
      Value v = interp.eval_at(problem.lexicon[i].second, frame, ctx, ctx.root() + "q/L" + std::to_string(i));
      frame->assign(problem.lexicon[i].first, std::move(v));
    }
    world = frame;
  } else {
    world = problem.env;
  }
  return interp.eval_at(problem.expr, world, ctx, ctx.root() + "q/e");
}

bool evaluate_predicate(const QueryProblem& problem, EvalContext& ctx, const Value& value, const EnvPtr& world) {
  const Interpreter& interp = ctx.interp();
  Value r;
  if (problem.kind == QueryProblem::Kind::Lexicon) {
    r = interp.eval_at(problem.predicate_expr, world, ctx, ctx.root() + "p");
  } else {
    r = interp.apply(problem.predicate, std::span<const Value>(&value, 1), ctx, ctx.root() + "p", world);
  }
  return !r.is_error() && r.truthy();
}

// Enumeration -----------------------------------------------------------------------

double EnumerationResult::probability(const std::string& printed) const {
  for (const auto& [v, p] : mass) {
    if (print_value(v) == printed) return p;
  }
  return 0.0;
}

double EnumerationResult::total_mass() const {
  double t = 0.0;
  for (const auto& [v, p] : mass) t += p;
  return t;
}

EnumerationResult enumerate(const Interpreter& interp, const ExprPtr& expr, const EnvPtr& env,
                            const EnumerationLimits& limits) {
  MassTable table;
  EnumerationResult out;
  explore(
      interp, limits, nullptr,
      [&](EvalContext& ctx) -> std::optional<Value> { return interp.eval_at(expr, env, ctx, "e"); },
      [&](const Leaf& leaf) { table.add(*leaf.value, leaf.prob); }, out.residual, out.leaves);
  out.mass = table.sorted(1.0);
  return out;
}

EnumerationResult enumerate(const Interpreter& interp, std::string_view source, const EnumerationLimits& limits) {
  auto forms = compile_program(source);
  return enumerate(interp, std::span<const ExprPtr>(forms), limits);
}

EnumerationResult enumerate(const Interpreter& interp, std::span<const ExprPtr> forms,
                            const EnumerationLimits& limits) {
  MassTable table;
  EnumerationResult out;
  explore(
      interp, limits, nullptr,
      [&](EvalContext& ctx) -> std::optional<Value> {
        auto top = interp.run_top_level(forms, interp.global_env(), ctx);
        return top.values.empty() ? Value() : top.values.back();
      },
      [&](const Leaf& leaf) { table.add(*leaf.value, leaf.prob); }, out.residual, out.leaves);
  out.mass = table.sorted(1.0);
  return out;
}

EnumerationResult enumerate_query(const Interpreter& interp, const QueryProblem& problem,
                                  const EnumerationLimits& limits) {
  MassTable table;
  EnumerationResult out;
  double residual = 0.0;
  explore(
      interp, limits, nullptr,
      [&](EvalContext& ctx) -> std::optional<Value> {
        EnvPtr world;
        Value v = evaluate_query_expression(problem, ctx, world);
        if (v.is_error()) return std::nullopt;
        if (!evaluate_predicate(problem, ctx, v, world)) return std::nullopt;
        return v;
      },
      [&](const Leaf& leaf) {
        if (leaf.value) table.add(*leaf.value, leaf.prob);
      },
      residual, out.leaves);
  double accepted = table.total();
  if (!(accepted > 0.0)) {
    throw InferenceError(InferenceError::Kind::InadmissibleConditioning,
                         "inadmissible conditioning: the predicate has probability zero");
  }
  double z = accepted + residual;
  out.mass = table.sorted(1.0 / z);
  out.residual = residual / z;
  return out;
}

// Rejection -------------------------------------------------------------------------

std::vector<RejectionSample> rejection_query(const Interpreter& interp, const QueryProblem& problem, std::size_t n,
                                             Rng& rng, const RejectionOptions& options) {
  std::vector<RejectionSample> out;
  out.reserve(n);
  std::uint64_t total_attempts = 0;
  PredicateMode mode = options.predicate;
  while (out.size() < n) {
    std::uint64_t attempts = 0;
    while (true) {
      if (attempts >= options.max_attempts) {
        throw InferenceError(InferenceError::Kind::BudgetExceeded,
                             acceptance_message("rejection", total_attempts, out.size()),
                             total_attempts == 0 ? 0.0 : static_cast<double>(out.size()) / static_cast<double>(total_attempts));
      }
      ++attempts;
      ++total_attempts;
      SamplingSource source;
      EvalContext ctx(interp, rng.split(), source);
      try {
        EnvPtr world;
        Value v = evaluate_query_expression(problem, ctx, world);
        if (v.is_error()) continue;
        bool accept = false;
        std::optional<double> lp;
        if (mode != PredicateMode::Joint) lp = log_predicate_probability(interp, problem, v, world, ctx.memo());
        if (lp) {
          mode = PredicateMode::Collapsed;
          accept = ctx.rng().uniform01() < std::exp(*lp);
        } else if (mode == PredicateMode::Collapsed) {
          throw InferenceError(InferenceError::Kind::Unsupported,
                               "collapsed rejection needs a predicate with finite-discrete randomness");
        } else {
          mode = PredicateMode::Joint;
          accept = evaluate_predicate(problem, ctx, v, world);
        }
        if (accept) {
          out.push_back(RejectionSample{v, attempts});
          break;
        }
      } catch (const ZeroProbability&) {
      }
    }
  }
  return out;
}

// Metropolis-Hastings ---------------------------------------------------------------

MhChain::MhChain(const Interpreter& interp, QueryProblem problem, Rng rng, MhOptions options)
    : interp_(&interp), problem_(std::move(problem)), rng_(rng), options_(options) {
  collapsed_ = options_.predicate != PredicateMode::Joint;
  for (std::uint64_t attempt = 0; attempt < options_.max_init_attempts; ++attempt) {
    SamplingSource source;
    if (auto st = run(source)) {
      state_ = std::move(*st);
      return;
    }
  }
  throw InferenceError(InferenceError::Kind::BudgetExceeded,
                       acceptance_message("MH initialisation", options_.max_init_attempts, 0), 0.0);
}

std::optional<double> MhChain::collapse_predicate(const Value& value, const EnvPtr& world, const MemoState& memo) {
  return log_predicate_probability(*interp_, problem_, value, world, memo);
}

std::optional<MhState> MhChain::run(ChoiceSource& source) {
  EvalContext ctx(*interp_, rng_.split(), source);
  try {
    EnvPtr world;
    Value v = evaluate_query_expression(problem_, ctx, world);
    if (v.is_error()) return std::nullopt;
    MhState st;
    if (collapsed_) {
      auto lp = collapse_predicate(v, world, ctx.memo());
      if (!lp) {
        if (options_.predicate != PredicateMode::Auto || decided_) {
          throw InferenceError(InferenceError::Kind::Unsupported,
                               "the predicate's randomness cannot be summed out by enumeration");
        }
        collapsed_ = false;
      } else {
        decided_ = true;
        if (*lp == kNegInf) return std::nullopt;
        st.log_pred = *lp;
      }
    }
    if (!collapsed_) {
      decided_ = true;
      if (!evaluate_predicate(problem_, ctx, v, world)) return std::nullopt;
    }
    st.value = std::move(v);
    st.trace = std::move(ctx.trace());
    return st;
  } catch (const ZeroProbability&) {
    return std::nullopt;
  }
}

MhChain::Proposal MhChain::propose(const MhState& from, std::size_t index, const Value& value) {
  const ChoiceRecord& old = from.trace.choices().at(index);
  ReplaySource source = ReplaySource::from_trace(from.trace);
  source.constrain(old.address, Constraint{std::string(old.erp->name()), value});
  Proposal out;
  out.state = run(source);
  if (!out.state) return out;
  const auto& reused = source.reused();
  auto is_new = [&](const ChoiceRecord& c) { return c.address == old.address || reused.count(c.address) == 0; };
  double fresh = 0.0;
  double stale = 0.0;
  for (const auto& c : out.state->trace.choices()) {
    if (is_new(c)) fresh += c.logp;
  }
  for (const auto& c : from.trace.choices()) {
    if (is_new(c)) stale += c.logp;
  }
  double n_old = static_cast<double>(from.trace.size());
  double n_new = static_cast<double>(out.state->trace.size());
  out.log_ratio = (out.state->score() - from.score()) + std::log(n_old) - std::log(n_new) + stale - fresh;
  out.acceptance = std::isnan(out.log_ratio) ? 0.0 : std::min(1.0, std::exp(out.log_ratio));
  return out;
}

void MhChain::step() {
  ++proposals_;
  if (state_.trace.empty()) {
    ++accepted_;
    return;
  }
  std::size_t index = rng_.below(state_.trace.size());
  const ChoiceRecord& rec = state_.trace.choices()[index];
  Value proposed = rec.erp->sample(rec.params, rng_);
  Proposal p = propose(state_, index, proposed);
  if (p.state && rng_.uniform01() < p.acceptance) {
    state_ = std::move(*p.state);
    ++accepted_;
  }
}

std::vector<Value> mh_query(const Interpreter& interp, const QueryProblem& problem, std::size_t n,
                            std::size_t burn_in, std::size_t lag, Rng& rng, const MhOptions& options) {
  MhChain chain(interp, problem, rng.split(), options);
  for (std::size_t i = 0; i < burn_in; ++i) chain.step();
  std::vector<Value> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < std::max<std::size_t>(lag, 1); ++l) chain.step();
    out.push_back(chain.state().value);
  }
  return out;
}

// Nested queries ----------------------------------------------------------------------

QueryProblem query_problem_from_params(std::span<const Value> params) {
  if (params.empty() || !params[0].is_symbol()) throw std::invalid_argument("malformed query");
  const std::string& tag = params[0].as_symbol().name();
  if (tag == "query" && params.size() == 4 && params[3].is_environment()) {
    return make_query(params[1], params[2], params[3].as_environment());
  }
  if (tag == "lex-query" && params.size() == 5 && params[4].is_environment()) {
    return make_lex_query(params[1], params[2], params[3], params[4].as_environment());
  }
  throw std::invalid_argument("malformed query");
}

namespace {

constexpr int kMaxQueryNesting = 32;
thread_local int query_nesting = 0;

struct NestingGuard {
  NestingGuard() {
    if (++query_nesting > kMaxQueryNesting) {
      --query_nesting;
      throw InferenceError(InferenceError::Kind::BudgetExceeded, "queries nested too deeply");
    }
  }
  ~NestingGuard() { --query_nesting; }
};

class NestedQueryErp final : public ErpDescriptor {
 public:
  explicit NestedQueryErp(const Interpreter& interp) : interp_(interp) {}

  std::string_view name() const override { return "query"; }
  SupportKind support_kind() const override { return SupportKind::FiniteDiscrete; }

  std::optional<std::string> validate(std::span<const Value> params) const override {
    try {
      query_problem_from_params(params);
    } catch (const std::exception& e) {
      return std::string(e.what());
    }
    return std::nullopt;
  }

  Value sample(std::span<const Value> params, Rng& rng) const override {
    NestingGuard guard;
    auto samples = rejection_query(interp_, query_problem_from_params(params), 1, rng);
    return samples.front().value;
  }

  double score(std::span<const Value> params, const Value& value) const override {
    const auto& dist = distribution(params);
    double p = dist.probability(print_value(value));
    return p > 0.0 ? std::log(p) : kNegInf;
  }

  WeightedValues support(std::span<const Value> params) const override { return distribution(params).mass; }

 private:
  struct Entry {
    std::vector<Value> params;  // keeps keyed environments alive
    EnumerationResult result;
  };

  const EnumerationResult& distribution(std::span<const Value> params) const {
    std::string key = memo_key(params);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second.result;
    NestingGuard guard;
    EnumerationResult r = enumerate_query(interp_, query_problem_from_params(params));
    if (cache_.size() > 4096) cache_.clear();
    auto& e = cache_[key];
    e.params.assign(params.begin(), params.end());
    e.result = std::move(r);
    return e.result;
  }

  const Interpreter& interp_;
  mutable std::unordered_map<std::string, Entry> cache_;
};

}  // namespace

std::unique_ptr<ErpDescriptor> make_nested_query_erp(const Interpreter& interp) {
  return std::make_unique<NestedQueryErp>(interp);
}

}  // namespace steeple
