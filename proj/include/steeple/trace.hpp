#pragma once

// Addressed record of the random choices made by one evaluation.

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "steeple/erp.hpp"
#include "steeple/rng.hpp"
#include "steeple/value.hpp"

namespace steeple {

class EvalContext;

struct ChoiceRecord {
  std::string address;
  const ErpDescriptor* erp = nullptr;
  std::vector<Value> params;
  Value value;
  double logp = 0.0;
};

class Trace {
 public:
  /// Throws std::logic_error if the address is already present.
  void record(ChoiceRecord choice);

  const std::vector<ChoiceRecord>& choices() const { return choices_; }
  std::size_t size() const { return choices_.size(); }
  bool empty() const { return choices_.empty(); }
  const ChoiceRecord* find(const std::string& address) const;

  double total_logp() const { return total_logp_; }
  /// Sum of every record rescored from its stored erp, params and value.
  double rescored_logp() const;

  Value result;

  /// One tab-separated line per choice (address, erp, params, value, logp),
  /// sorted by address.
  std::string dump() const;

 private:
  std::vector<ChoiceRecord> choices_;
  std::unordered_map<std::string, std::size_t> index_;
  double total_logp_ = 0.0;
};

/// Decides the value of each random choice as evaluation reaches it.
class ChoiceSource {
 public:
  virtual ~ChoiceSource() = default;
  virtual Value choose(EvalContext& ctx, const std::string& address, const ErpDescriptor& erp,
                       std::span<const Value> params) = 0;
  /// Called after the choice has been recorded in the context's trace.
  virtual void recorded(EvalContext&, const ChoiceRecord&) {}
  /// Forward sampling can tolerate choices that have no computable score.
  virtual bool needs_scores() const { return true; }
};

/// Forward sampling from each procedure's prior.
class SamplingSource final : public ChoiceSource {
 public:
  Value choose(EvalContext& ctx, const std::string& address, const ErpDescriptor& erp,
               std::span<const Value> params) override;
  bool needs_scores() const override { return false; }
};

struct Constraint {
  std::string erp;
  Value value;
};

/// Re-execution against stored values. A constrained address whose erp name
/// matches reuses the stored value (rescored under the current params);
/// anything else is sampled fresh.
class ReplaySource final : public ChoiceSource {
 public:
  ReplaySource() = default;
  explicit ReplaySource(std::unordered_map<std::string, Constraint> constraints)
      : constraints_(std::move(constraints)) {}

  /// Constrains every choice of `trace`.
  static ReplaySource from_trace(const Trace& trace);

  void constrain(const std::string& address, Constraint c) { constraints_[address] = std::move(c); }

  Value choose(EvalContext& ctx, const std::string& address, const ErpDescriptor& erp,
               std::span<const Value> params) override;

  const std::unordered_set<std::string>& reused() const { return reused_; }

 private:
  std::unordered_map<std::string, Constraint> constraints_;
  std::unordered_set<std::string> reused_;
};

}  // namespace steeple
