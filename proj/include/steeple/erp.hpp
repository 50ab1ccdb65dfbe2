#pragma once

// Elementary random procedures: each pairs a sampler with an exact scorer.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "steeple/rng.hpp"
#include "steeple/value.hpp"

namespace steeple {

enum class SupportKind { FiniteDiscrete, CountableDiscrete, Continuous };

using WeightedValues = std::vector<std::pair<Value, double>>;

class ErpDescriptor {
 public:
  virtual ~ErpDescriptor() = default;

  virtual std::string_view name() const = 0;
  virtual SupportKind support_kind() const = 0;

  /// Error message if `params` are not valid for this procedure.
  virtual std::optional<std::string> validate(std::span<const Value> params) const = 0;

  /// Precondition: validate(params) is empty.
  virtual Value sample(std::span<const Value> params, Rng& rng) const = 0;

  /// Log-probability (pmf) or log-density (pdf) in nats; -inf off support.
  /// Precondition: validate(params) is empty.
  virtual double score(std::span<const Value> params, const Value& value) const = 0;

  /// Support points with their probabilities (zero-probability points
  /// omitted). Only meaningful for finite-discrete procedures; throws
  /// std::logic_error otherwise.
  virtual WeightedValues support(std::span<const Value> params) const;
};

const ErpDescriptor& flip_erp();
const ErpDescriptor& random_erp();
const ErpDescriptor& beta_erp();
const ErpDescriptor& normal_erp();
const ErpDescriptor& multinomial_erp();
const ErpDescriptor& uniform_draw_erp();
const ErpDescriptor& dirichlet_erp();

/// The primitive procedures bound in the global environment.
std::span<const ErpDescriptor* const> builtin_erps();

/// Validating wrappers: an invalid parameter list gives the `error` value
/// from sample and NaN from score.
Value sample_erp(const ErpDescriptor& erp, std::span<const Value> params, Rng& rng);
double score_erp(const ErpDescriptor& erp, std::span<const Value> params, const Value& value);

}  // namespace steeple
