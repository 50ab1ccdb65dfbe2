#include "steeple/erp.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace steeple {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kSumTolerance = 1e-6;

double log_or_neg_inf(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

bool all_numbers(const std::vector<Value>& vs) {
  for (const auto& v : vs) {
    if (!v.is_number()) return false;
  }
  return true;
}

class Flip final : public ErpDescriptor {
 public:
  std::string_view name() const override { return "flip"; }
  SupportKind support_kind() const override { return SupportKind::FiniteDiscrete; }

  std::optional<std::string> validate(std::span<const Value> params) const override {
    if (params.empty()) return std::nullopt;
    if (params.size() != 1 || !params[0].is_number()) return "flip takes an optional numeric weight";
    double p = params[0].as_number();
    if (!(p >= 0.0 && p <= 1.0)) return "flip weight must lie in [0, 1]";
    return std::nullopt;
  }

  Value sample(std::span<const Value> params, Rng& rng) const override {
    return Value::boolean(rng.uniform01() < weight(params));
  }

  double score(std::span<const Value> params, const Value& value) const override {
    if (!value.is_boolean()) return kNegInf;
    double p = weight(params);
    return log_or_neg_inf(value.as_bool() ? p : 1.0 - p);
  }

  WeightedValues support(std::span<const Value> params) const override {
    double p = weight(params);
    WeightedValues out;
    if (p > 0.0) out.emplace_back(Value::boolean(true), p);
    if (p < 1.0) out.emplace_back(Value::boolean(false), 1.0 - p);
    return out;
  }

 private:
  static double weight(std::span<const Value> params) {
    return params.empty() ? 0.5 : params[0].as_number();
  }
};

class UniformRandom final : public ErpDescriptor {
 public:
  std::string_view name() const override { return "random"; }
  SupportKind support_kind() const override { return SupportKind::Continuous; }

  std::optional<std::string> validate(std::span<const Value> params) const override {
    if (!params.empty()) return "random takes no arguments";
    return std::nullopt;
  }

  Value sample(std::span<const Value>, Rng& rng) const override { return Value::real(rng.uniform01()); }

  double score(std::span<const Value>, const Value& value) const override {
    if (!value.is_number()) return kNegInf;
    double x = value.as_number();
    return (x >= 0.0 && x < 1.0) ? 0.0 : kNegInf;
  }
};

class Beta final : public ErpDescriptor {
 public:
  std::string_view name() const override { return "beta"; }
  SupportKind support_kind() const override { return SupportKind::Continuous; }

  std::optional<std::string> validate(std::span<const Value> params) const override {
    if (params.size() != 2 || !params[0].is_number() || !params[1].is_number()) {
      return "beta takes two numeric shape parameters";
    }
    if (!(params[0].as_number() > 0.0) || !(params[1].as_number() > 0.0)) {
      return "beta shape parameters must be positive";
    }
    return std::nullopt;
  }

  Value sample(std::span<const Value> params, Rng& rng) const override {
    double x = rng.gamma(params[0].as_number());
    double y = rng.gamma(params[1].as_number());
    double v = (x + y) > 0.0 ? x / (x + y) : 0.5;
    // Keep the draw strictly inside (0, 1) so that it scores finitely.
    if (v <= 0.0) v = std::numeric_limits<double>::denorm_min();
    if (v >= 1.0) v = std::nextafter(1.0, 0.0);
    return Value::real(v);
  }

  double score(std::span<const Value> params, const Value& value) const override {
    if (!value.is_number()) return kNegInf;
    double x = value.as_number();
    if (!(x > 0.0 && x < 1.0)) return kNegInf;
    double a = params[0].as_number();
    double b = params[1].as_number();
    return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) -
           (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
  }
};

// Second parameter is the standard deviation.
class Normal final : public ErpDescriptor {
 public:
  std::string_view name() const override { return "normal"; }
  SupportKind support_kind() const override { return SupportKind::Continuous; }

  std::optional<std::string> validate(std::span<const Value> params) const override {
    if (params.size() != 2 || !params[0].is_number() || !params[1].is_number()) {
      return "normal takes a numeric mean and standard deviation";
    }
    if (!(params[1].as_number() > 0.0)) return "normal standard deviation must be positive";
    if (!std::isfinite(params[0].as_number())) return "normal mean must be finite";
    return std::nullopt;
  }

  Value sample(std::span<const Value> params, Rng& rng) const override {
    return Value::real(rng.normal(params[0].as_number(), params[1].as_number()));
  }

  double score(std::span<const Value> params, const Value& value) const override {
    if (!value.is_number()) return kNegInf;
    double mu = params[0].as_number();
    double sd = params[1].as_number();
    double z = (value.as_number() - mu) / sd;
    return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
};

class Multinomial final : public ErpDescriptor {
 public:
  std::string_view name() const override { return "multinomial"; }
  SupportKind support_kind() const override { return SupportKind::FiniteDiscrete; }

  std::optional<std::string> validate(std::span<const Value> params) const override {
    if (params.size() != 2) return "multinomial takes a list of values and a list of probabilities";
    auto values = list_elements(params[0]);
    auto probs = list_elements(params[1]);
    if (!values || !probs) return "multinomial arguments must be proper lists";
    if (values->empty()) return "multinomial needs at least one value";
    if (values->size() != probs->size()) return "multinomial value and probability lists differ in length";
    if (!all_numbers(*probs)) return "multinomial probabilities must be numbers";
    double total = 0.0;
    for (const auto& p : *probs) {
      if (p.as_number() < 0.0) return "multinomial probabilities must be non-negative";
      total += p.as_number();
    }
    if (std::abs(total - 1.0) > kSumTolerance) return "multinomial probabilities must sum to 1";
    return std::nullopt;
  }

  Value sample(std::span<const Value> params, Rng& rng) const override {
    auto values = *list_elements(params[0]);
    auto probs = *list_elements(params[1]);
    double total = 0.0;
    for (const auto& p : probs) total += p.as_number();
    double u = rng.uniform01() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      acc += probs[i].as_number();
      if (u < acc) return values[i];
    }
    for (std::size_t i = values.size(); i-- > 0;) {
      if (probs[i].as_number() > 0.0) return values[i];
    }
    return values.back();
  }

  double score(std::span<const Value> params, const Value& value) const override {
    auto values = *list_elements(params[0]);
    auto probs = *list_elements(params[1]);
    double p = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values_equal(values[i], value)) p += probs[i].as_number();
    }
    return log_or_neg_inf(p);
  }

  WeightedValues support(std::span<const Value> params) const override {
    auto values = *list_elements(params[0]);
    auto probs = *list_elements(params[1]);
    WeightedValues out;
    for (std::size_t i = 0; i < values.size(); ++i) {
      double p = probs[i].as_number();
      bool merged = false;
      for (auto& [v, w] : out) {
        if (values_equal(v, values[i])) {
          w += p;
          merged = true;
          break;
        }
      }
      if (!merged) out.emplace_back(values[i], p);
    }
    std::erase_if(out, [](const auto& vw) { return vw.second <= 0.0; });
    return out;
  }
};

class UniformDraw final : public ErpDescriptor {
 public:
  std::string_view name() const override { return "uniform-draw"; }
  SupportKind support_kind() const override { return SupportKind::FiniteDiscrete; }

  std::optional<std::string> validate(std::span<const Value> params) const override {
    if (params.size() != 1) return "uniform-draw takes one list";
    auto items = list_elements(params[0]);
    if (!items || items->empty()) return "uniform-draw needs a non-empty proper list";
    return std::nullopt;
  }

  Value sample(std::span<const Value> params, Rng& rng) const override {
    auto items = *list_elements(params[0]);
    return items[rng.below(items.size())];
  }

  double score(std::span<const Value> params, const Value& value) const override {
    auto items = *list_elements(params[0]);
    std::size_t hits = 0;
    for (const auto& item : items) hits += values_equal(item, value) ? 1 : 0;
    return log_or_neg_inf(static_cast<double>(hits) / static_cast<double>(items.size()));
  }

  WeightedValues support(std::span<const Value> params) const override {
    auto items = *list_elements(params[0]);
    WeightedValues out;
    double w = 1.0 / static_cast<double>(items.size());
    for (const auto& item : items) {
      bool merged = false;
      for (auto& [v, p] : out) {
        if (values_equal(v, item)) {
          p += w;
          merged = true;
          break;
        }
      }
      if (!merged) out.emplace_back(item, w);
    }
    return out;
  }
};

class Dirichlet final : public ErpDescriptor {
 public:
  std::string_view name() const override { return "dirichlet"; }
  SupportKind support_kind() const override { return SupportKind::Continuous; }

  std::optional<std::string> validate(std::span<const Value> params) const override {
    if (params.size() != 1) return "dirichlet takes one list of concentrations";
    auto alphas = list_elements(params[0]);
    if (!alphas || alphas->empty() || !all_numbers(*alphas)) {
      return "dirichlet needs a non-empty list of numbers";
    }
    for (const auto& a : *alphas) {
      if (!(a.as_number() > 0.0)) return "dirichlet concentrations must be positive";
    }
    return std::nullopt;
  }

  Value sample(std::span<const Value> params, Rng& rng) const override {
    auto alphas = *list_elements(params[0]);
    std::vector<double> draws;
    double total = 0.0;
    for (const auto& a : alphas) {
      draws.push_back(rng.gamma(a.as_number()));
      total += draws.back();
    }
    std::vector<Value> out;
    for (double d : draws) {
      double x = total > 0.0 ? d / total : 1.0 / static_cast<double>(draws.size());
      out.push_back(Value::real(std::max(x, std::numeric_limits<double>::denorm_min())));
    }
    return make_list(out);
  }

  double score(std::span<const Value> params, const Value& value) const override {
    auto alphas = *list_elements(params[0]);
    auto xs = list_elements(value);
    if (!xs || xs->size() != alphas.size() || !all_numbers(*xs)) return kNegInf;
    double total = 0.0;
    double alpha_sum = 0.0;
    double lp = 0.0;
    for (std::size_t i = 0; i < xs->size(); ++i) {
      double x = (*xs)[i].as_number();
      double a = alphas[i].as_number();
      if (!(x > 0.0)) return kNegInf;
      total += x;
      alpha_sum += a;
      lp += (a - 1.0) * std::log(x) - std::lgamma(a);
    }
    if (std::abs(total - 1.0) > kSumTolerance) return kNegInf;
    return lp + std::lgamma(alpha_sum);
  }
};

}  // namespace

std::uint64_t Rng::below(std::uint64_t n) {
  std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
  return dist(engine_);
}

double Rng::normal(double mean, double stddev) {
  std::normal_distribution<double> dist(mean, stddev);
  return dist(engine_);
}

double Rng::gamma(double shape) {
  std::gamma_distribution<double> dist(shape, 1.0);
  return dist(engine_);
}

WeightedValues ErpDescriptor::support(std::span<const Value>) const {
  throw std::logic_error(std::string(name()) + " does not have a finite support");
}

const ErpDescriptor& flip_erp() {
  static const Flip erp;
  return erp;
}
const ErpDescriptor& random_erp() {
  static const UniformRandom erp;
  return erp;
}
const ErpDescriptor& beta_erp() {
  static const Beta erp;
  return erp;
}
const ErpDescriptor& normal_erp() {
  static const Normal erp;
  return erp;
}
const ErpDescriptor& multinomial_erp() {
  static const Multinomial erp;
  return erp;
}
const ErpDescriptor& uniform_draw_erp() {
  static const UniformDraw erp;
  return erp;
}
const ErpDescriptor& dirichlet_erp() {
  static const Dirichlet erp;
  return erp;
}

std::span<const ErpDescriptor* const> builtin_erps() {
  static const ErpDescriptor* const all[] = {&flip_erp(),        &random_erp(),       &beta_erp(),
                                             &normal_erp(),      &multinomial_erp(),  &uniform_draw_erp(),
                                             &dirichlet_erp()};
  return all;
}

Value sample_erp(const ErpDescriptor& erp, std::span<const Value> params, Rng& rng) {
  if (auto err = erp.validate(params)) return Value::error(*err);
  return erp.sample(params, rng);
}

double score_erp(const ErpDescriptor& erp, std::span<const Value> params, const Value& value) {
  if (erp.validate(params)) return std::numeric_limits<double>::quiet_NaN();
  return erp.score(params, value);
}

}  // namespace steeple
