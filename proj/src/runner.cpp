#include "steeple/runner.hpp"

#include <charconv>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "steeple/reader.hpp"

namespace steeple {

namespace {

std::string format_probability(double p) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, p);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

ExprPtr compile_one(std::string_view text) {
  auto forms = compile_program(text);
  if (forms.size() != 1) throw std::invalid_argument("expected exactly one expression: " + std::string(text));
  return forms.front();
}

ExprPtr override_definition(const ExprPtr& form, const std::vector<std::pair<std::string, std::string>>& overrides) {
  if (form->kind != Expr::Kind::Define) return form;
  for (const auto& [name, text] : overrides) {
    if (form->name.name() != name) continue;
    auto replaced = std::make_shared<Expr>(*form);
    replaced->items = {compile_one(text)};
    return replaced;
  }
  return form;
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Rejection: return "rejection";
    case Method::Mh: return "mh";
    case Method::Enumerate: return "enumerate";
  }
  return "?";
}

std::string_view to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::Jsonl: return "jsonl";
    case OutputFormat::Csv: return "csv";
    case OutputFormat::Summary: return "summary";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view text) {
  if (text == "rejection") return Method::Rejection;
  if (text == "mh") return Method::Mh;
  if (text == "enumerate") return Method::Enumerate;
  return std::nullopt;
}

std::optional<OutputFormat> parse_format(std::string_view text) {
  if (text == "jsonl") return OutputFormat::Jsonl;
  if (text == "csv") return OutputFormat::Csv;
  if (text == "summary") return OutputFormat::Summary;
  return std::nullopt;
}

std::string RunConfig::header() const {
  std::ostringstream h;
  h << "# steeple input=" << input << " method=" << to_string(method) << " samples=" << samples
    << " burn-in=" << effective_burn_in() << " lag=" << lag << " seed=" << seed << " max-attempts=" << max_attempts
    << " max-choices=" << limits.max_choices << " min-path-prob=" << format_probability(limits.min_path_prob)
    << " format=" << to_string(format);
  for (const auto& [name, expr] : overrides) h << " set:" << name << "=" << expr;
  return h.str();
}

QueryOutput run_query(const Interpreter& interp, const QueryProblem& problem, const RunConfig& config, Rng& rng) {
  QueryOutput out;
  switch (config.method) {
    case Method::Rejection:
      for (auto& s : rejection_query(interp, problem, config.samples, rng, {config.max_attempts})) {
        out.values.push_back(std::move(s.value));
        out.attempts.push_back(s.attempts);
      }
      break;
    case Method::Mh:
      out.values = mh_query(interp, problem, config.samples, config.effective_burn_in(), config.lag, rng,
                            {PredicateMode::Auto, config.max_attempts});
      break;
    case Method::Enumerate:
      out.exact = enumerate_query(interp, problem, config.limits);
      break;
  }
  return out;
}

QueryOutput run_model(const Interpreter& interp, std::string_view source, const RunConfig& config) {
  QueryOutput out;
  auto forms = compile_program(source);
  for (auto& form : forms) form = override_definition(form, config.overrides);
  switch (config.method) {
    case Method::Rejection: {
      Rng rng(config.seed);
      for (std::size_t i = 0; i < config.samples; ++i) {
        SamplingSource sampler;
        EvalContext ctx(interp, rng.split(), sampler);
        auto top = interp.run_top_level(forms, interp.global_env(), ctx);
        out.values.push_back(top.values.empty() ? Value() : top.values.back());
        out.attempts.push_back(1);
      }
      break;
    }
    case Method::Mh:
      throw InferenceError(InferenceError::Kind::Unsupported,
                           "mh needs a query form; use rejection or enumerate to sample a model");
    case Method::Enumerate:
      out.exact = enumerate(interp, std::span<const ExprPtr>(forms), config.limits);
      break;
  }
  return out;
}

void write_output(std::ostream& out, const QueryOutput& output, const RunConfig& config) {
  if (output.exact) {
    const auto& r = *output.exact;
    switch (config.format) {
      case OutputFormat::Jsonl:
        for (const auto& [v, p] : r.mass) {
          nlohmann::ordered_json line;
          line["value"] = print_value(v);
          line["probability"] = p;
          out << line.dump() << '\n';
        }
        if (r.residual > 0.0) out << nlohmann::ordered_json{{"residual", r.residual}}.dump() << '\n';
        break;
      case OutputFormat::Csv:
        out << "value,probability\n";
        for (const auto& [v, p] : r.mass) out << csv_field(print_value(v)) << ',' << format_probability(p) << '\n';
        if (r.residual > 0.0) out << "#residual," << format_probability(r.residual) << '\n';
        break;
      case OutputFormat::Summary:
        for (const auto& [v, p] : r.mass) out << print_value(v) << '\t' << format_probability(p) << '\n';
        if (r.residual > 0.0) out << "#residual\t" << format_probability(r.residual) << '\n';
        break;
    }
    return;
  }
  const bool with_attempts = !output.attempts.empty();
  switch (config.format) {
    case OutputFormat::Jsonl:
      for (std::size_t i = 0; i < output.values.size(); ++i) {
        nlohmann::ordered_json line;
        line["index"] = i;
        line["value"] = print_value(output.values[i]);
        if (with_attempts) line["accepted_attempts"] = output.attempts[i];
        out << line.dump() << '\n';
      }
      break;
    case OutputFormat::Csv:
      out << (with_attempts ? "index,value,accepted_attempts\n" : "index,value\n");
      for (std::size_t i = 0; i < output.values.size(); ++i) {
        out << i << ',' << csv_field(print_value(output.values[i]));
        if (with_attempts) out << ',' << output.attempts[i];
        out << '\n';
      }
      break;
    case OutputFormat::Summary: {
      std::map<std::string, std::size_t> counts;
      for (const auto& v : output.values) ++counts[print_value(v)];
      const double n = static_cast<double>(output.values.size());
      for (const auto& [printed, c] : counts) {
        out << printed << '\t' << c << '\t' << format_probability(static_cast<double>(c) / n) << '\n';
      }
      break;
    }
  }
}

bool is_query_form(const Expr& form) {
  if (form.kind != Expr::Kind::Application || form.items.empty()) return false;
  const Expr& op = *form.items.front();
  return op.kind == Expr::Kind::Variable && (op.name.name() == "query" || op.name.name() == "lex-query");
}

Session::Session(const Interpreter& interp, RunConfig config, std::ostream& out)
    : interp_(&interp),
      config_(std::move(config)),
      out_(&out),
      ctx_(std::make_unique<EvalContext>(interp, Rng(config_.seed), source_)),
      env_(interp.global_env()) {}

Session::~Session() = default;

void Session::reseed(std::uint64_t seed) {
  config_.seed = seed;
  ctx_->rng() = Rng(seed);
}

std::string Session::next_root() { return "t" + std::to_string(forms_++); }

ExprPtr Session::apply_overrides(const ExprPtr& form) const {
  return override_definition(form, config_.overrides);
}

std::optional<QueryProblem> Session::query_problem(const ExprPtr& form, const std::string& address) {
  if (!is_query_form(*form)) return std::nullopt;
  EvalContext& ctx = *ctx_;
  EvalContext::FrameGuard frame(ctx, address);
  Value op = interp_->eval(form->items[0], env_, ctx);
  if (!op.is_procedure()) return std::nullopt;
  std::string identity = op.as_procedure()->identity_key();
  if (identity != "p:query" && identity != "p:lex-query") return std::nullopt;
  std::vector<Value> args;
  for (std::size_t i = 1; i < form->items.size(); ++i) {
    Value v = interp_->eval(form->items[i], env_, ctx);
    if (v.is_error()) throw std::invalid_argument("query argument " + std::to_string(i) + " evaluated to error");
    args.push_back(std::move(v));
  }
  std::vector<Value> params;
  if (identity == "p:query") {
    if (args.size() < 2 || args.size() > 3) throw std::invalid_argument("query expects an expression, a predicate and an optional environment");
    EnvPtr target = env_;
    if (args.size() == 3) {
      if (!args[2].is_environment()) throw std::invalid_argument("query: third argument must be an environment");
      target = args[2].as_environment();
    }
    params = {Value::symbol("query"), args[0], args[1], Value::environment(target)};
  } else {
    if (args.size() != 3) throw std::invalid_argument("lex-query expects a lexicon, an expression and a predicate expression");
    params = {Value::symbol("lex-query"), args[0], args[1], args[2], Value::environment(env_)};
  }
  return query_problem_from_params(params);
}

void Session::evaluate(std::string_view source, bool echo) {
  auto forms = compile_program(source);
  std::size_t queries_in_source = 0;
  for (const auto& f : forms) queries_in_source += is_query_form(*f) ? 1 : 0;
  for (const auto& original : forms) {
    ExprPtr form = apply_overrides(original);
    std::string address = next_root();
    if (auto problem = query_problem(form, address)) {
      if (queries_in_source > 1) *out_ << "# " << address << '\n';
      Rng rng = ctx_->rng().split();
      write_output(*out_, run_query(*interp_, *problem, config_, rng), config_);
      ++queries_run_;
      continue;
    }
    ctx_->reset_steps();
    Value v = interp_->eval_at(form, env_, *ctx_, address);
    if (form->kind == Expr::Kind::Define && v.is_environment()) {
      env_ = v.as_environment();
    } else if (echo) {
      *out_ << print_value(v) << '\n';
    }
  }
}

QueryProblem Session::prepare_query(std::string_view source) {
  auto forms = compile_program(source);
  if (forms.empty() || !is_query_form(*forms.back())) {
    throw std::invalid_argument("program does not end with a query form");
  }
  for (std::size_t i = 0; i + 1 < forms.size(); ++i) {
    ExprPtr form = apply_overrides(forms[i]);
    Value v = interp_->eval_at(form, env_, *ctx_, next_root());
    if (form->kind == Expr::Kind::Define && v.is_environment()) env_ = v.as_environment();
  }
  auto problem = query_problem(forms.back(), next_root());
  if (!problem) throw std::invalid_argument("final form does not call the built-in query");
  return *problem;
}

QueryProblem load_query(const Interpreter& interp, std::string_view source, std::uint64_t seed,
                        const std::vector<std::pair<std::string, std::string>>& overrides) {
  RunConfig config;
  config.seed = seed;
  config.overrides = overrides;
  std::ostringstream sink;
  Session session(interp, config, sink);
  return session.prepare_query(source);
}

int run_script(const Interpreter& interp, std::string_view source, const RunConfig& config, std::ostream& out,
               std::ostream& err) {
  try {
    auto forms = compile_program(source);
    out << config.header() << '\n';
    bool has_query = false;
    for (const auto& f : forms) has_query = has_query || is_query_form(*f);
    if (has_query) {
      Session session(interp, config, out);
      session.evaluate(source, false);
      if (session.queries_run() > 0) return 0;
    }
    write_output(out, run_model(interp, source, config), config);
    return 0;
  } catch (const SyntaxError& e) {
    err << e.what() << '\n';
    return 2;
  } catch (const InferenceError& e) {
    if (e.kind() == InferenceError::Kind::BudgetExceeded) {
      err << "inference " << e.what() << '\n';
      return 3;
    }
    err << "inference failed: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

namespace {

// Open minus close parentheses; a negative count is left for the parser to report.
long paren_balance(std::string_view text) {
  long depth = 0;
  for (const auto& tok : tokenize(text)) {
    if (tok.kind == Token::Kind::OpenParen) ++depth;
    if (tok.kind == Token::Kind::CloseParen) --depth;
  }
  return depth;
}

bool apply_directive(Session& session, const std::string& line, std::ostream& out) {
  std::istringstream in(line);
  std::string name, arg;
  in >> name >> arg;
  RunConfig& c = session.config();
  try {
    if (name == ":method") {
      auto m = parse_method(arg);
      if (!m) throw std::invalid_argument("unknown method '" + arg + "'");
      c.method = *m;
    } else if (name == ":samples") {
      c.samples = std::stoul(arg);
      if (c.samples == 0) throw std::invalid_argument("samples must be at least 1");
    } else if (name == ":burn-in") {
      c.burn_in = std::stoul(arg);
    } else if (name == ":lag") {
      c.lag = std::stoul(arg);
      if (c.lag == 0) throw std::invalid_argument("lag must be at least 1");
    } else if (name == ":seed") {
      session.reseed(std::stoull(arg));
    } else if (name == ":format") {
      auto f = parse_format(arg);
      if (!f) throw std::invalid_argument("unknown format '" + arg + "'");
      c.format = *f;
    } else {
      out << "unknown directive " << name << '\n';
    }
  } catch (const std::exception& e) {
    out << "error: " << e.what() << '\n';
  }
  return true;
}

}  // namespace

void repl(const Interpreter& interp, RunConfig config, std::istream& in, std::ostream& out, bool prompt) {
  Session session(interp, std::move(config), out);
  std::string pending, line;
  auto show_prompt = [&] {
    if (prompt) out << (pending.empty() ? "church> " : "   ...> ") << std::flush;
  };
  show_prompt();
  while (std::getline(in, line)) {
    if (pending.empty()) {
      std::string_view trimmed = line;
      while (!trimmed.empty() && (trimmed.front() == ' ' || trimmed.front() == '\t')) trimmed.remove_prefix(1);
      if (!trimmed.empty() && trimmed.front() == ':') {
        if (trimmed.substr(0, 5) == ":quit") return;
        apply_directive(session, std::string(trimmed), out);
        show_prompt();
        continue;
      }
    }
    pending += line;
    pending += '\n';
    try {
      if (paren_balance(pending) > 0) {
        show_prompt();
        continue;
      }
      session.evaluate(pending, true);
    } catch (const SyntaxError& e) {
      out << e.what() << '\n';
    } catch (const std::exception& e) {
      out << "error: " << e.what() << '\n';
    }
    pending.clear();
    show_prompt();
  }
}

}  // namespace steeple
