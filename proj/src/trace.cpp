#include "steeple/trace.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "steeple/interpreter.hpp"

namespace steeple {

void Trace::record(ChoiceRecord choice) {
  auto [it, inserted] = index_.emplace(choice.address, choices_.size());
  if (!inserted) throw std::logic_error("duplicate choice address " + choice.address);
  total_logp_ += choice.logp;
  choices_.push_back(std::move(choice));
}

const ChoiceRecord* Trace::find(const std::string& address) const {
  auto it = index_.find(address);
  return it == index_.end() ? nullptr : &choices_[it->second];
}

double Trace::rescored_logp() const {
  double total = 0.0;
  for (const auto& c : choices_) total += c.erp->score(c.params, c.value);
  return total;
}

std::string Trace::dump() const {
  std::vector<const ChoiceRecord*> sorted;
  for (const auto& c : choices_) sorted.push_back(&c);
  std::sort(sorted.begin(), sorted.end(),
            [](const ChoiceRecord* a, const ChoiceRecord* b) { return a->address < b->address; });
  std::ostringstream out;
  for (const auto* c : sorted) {
    out << c->address << '\t' << c->erp->name() << '\t' << print_value(make_list(c->params)) << '\t'
        << print_value(c->value) << '\t' << print_real(c->logp) << '\n';
  }
  return out.str();
}

Value SamplingSource::choose(EvalContext& ctx, const std::string&, const ErpDescriptor& erp,
                             std::span<const Value> params) {
  return erp.sample(params, ctx.rng());
}

ReplaySource ReplaySource::from_trace(const Trace& trace) {
  ReplaySource out;
  for (const auto& c : trace.choices()) out.constrain(c.address, {std::string(c.erp->name()), c.value});
  return out;
}

Value ReplaySource::choose(EvalContext& ctx, const std::string& address, const ErpDescriptor& erp,
                           std::span<const Value> params) {
  auto it = constraints_.find(address);
  if (it != constraints_.end() && it->second.erp == erp.name()) {
    reused_.insert(address);
    return it->second.value;
  }
  return erp.sample(params, ctx.rng());
}

}  // namespace steeple
