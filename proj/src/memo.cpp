#include "steeple/memo.hpp"

#include <cmath>
#include <limits>

namespace steeple {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct SeatParams {
  double alpha = 0.0;
  std::vector<std::pair<std::int64_t, std::int64_t>> tables;
  std::int64_t customers = 0;
};

std::optional<SeatParams> parse_seat_params(std::span<const Value> params) {
  if (params.size() != 2 || !params[0].is_number()) return std::nullopt;
  SeatParams out;
  out.alpha = params[0].as_number();
  if (!(out.alpha >= 0.0)) return std::nullopt;
  auto entries = list_elements(params[1]);
  if (!entries) return std::nullopt;
  for (const auto& e : *entries) {
    if (!e.is_pair() || !e.as_pair().first().is_integer() || !e.as_pair().rest().is_integer()) {
      return std::nullopt;
    }
    std::int64_t count = e.as_pair().rest().as_integer();
    if (count <= 0) return std::nullopt;
    out.tables.emplace_back(e.as_pair().first().as_integer(), count);
    out.customers += count;
  }
  return out;
}

const Value& new_table_symbol() {
  static const Value v = Value::symbol("new");
  return v;
}

class CrpSeat final : public ErpDescriptor {
 public:
  std::string_view name() const override { return "crp-seat"; }
  SupportKind support_kind() const override { return SupportKind::FiniteDiscrete; }

  std::optional<std::string> validate(std::span<const Value> params) const override {
    if (!parse_seat_params(params)) return "malformed restaurant state";
    return std::nullopt;
  }

  Value sample(std::span<const Value> params, Rng& rng) const override {
    auto sp = *parse_seat_params(params);
    if (sp.customers == 0) return new_table_symbol();
    if (sp.alpha == 0.0 && sp.tables.size() == 1) return Value::integer(sp.tables[0].first);
    double u = rng.uniform01() * (static_cast<double>(sp.customers) + sp.alpha);
    double acc = 0.0;
    for (const auto& [id, count] : sp.tables) {
      acc += static_cast<double>(count);
      if (u < acc) return Value::integer(id);
    }
    if (sp.alpha > 0.0) return new_table_symbol();
    return Value::integer(sp.tables.back().first);
  }

  double score(std::span<const Value> params, const Value& value) const override {
    auto sp = *parse_seat_params(params);
    double denom = static_cast<double>(sp.customers) + sp.alpha;
    if (value.is_symbol() && values_equal(value, new_table_symbol())) {
      if (sp.customers == 0) return 0.0;
      return sp.alpha > 0.0 ? std::log(sp.alpha / denom) : kNegInf;
    }
    if (!value.is_integer()) return kNegInf;
    for (const auto& [id, count] : sp.tables) {
      if (id == value.as_integer()) return std::log(static_cast<double>(count) / denom);
    }
    return kNegInf;
  }

  WeightedValues support(std::span<const Value> params) const override {
    auto sp = *parse_seat_params(params);
    WeightedValues out;
    if (sp.customers == 0) {
      out.emplace_back(new_table_symbol(), 1.0);
      return out;
    }
    double denom = static_cast<double>(sp.customers) + sp.alpha;
    for (const auto& [id, count] : sp.tables) out.emplace_back(Value::integer(id), static_cast<double>(count) / denom);
    if (sp.alpha > 0.0) out.emplace_back(new_table_symbol(), sp.alpha / denom);
    return out;
  }
};

}  // namespace

std::int64_t Restaurant::customers() const {
  std::int64_t n = 0;
  for (const auto& t : tables) n += t.count;
  return n;
}

const Table* Restaurant::find(std::int64_t id) const {
  for (const auto& t : tables) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

Table* Restaurant::find(std::int64_t id) {
  for (auto& t : tables) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

std::optional<std::size_t> crp_next_table(const Restaurant& restaurant, double alpha, Rng& rng) {
  Value v = crp_seat_erp().sample(crp_seat_params(alpha, restaurant), rng);
  if (!v.is_integer()) return std::nullopt;
  for (std::size_t i = 0; i < restaurant.tables.size(); ++i) {
    if (restaurant.tables[i].id == v.as_integer()) return i;
  }
  return std::nullopt;
}

const ErpDescriptor& crp_seat_erp() {
  static const CrpSeat erp;
  return erp;
}

std::vector<Value> crp_seat_params(double alpha, const Restaurant& restaurant) {
  std::vector<Value> entries;
  entries.reserve(restaurant.tables.size());
  for (const auto& t : restaurant.tables) entries.push_back(Value::cons(Value::integer(t.id), Value::integer(t.count)));
  return {Value::real(alpha), make_list(entries)};
}

std::int64_t table_id_for(const std::string& address) {
  return static_cast<std::int64_t>(stable_hash(address) >> 1);
}

std::string MemoizedProcedure::identity_key() const { return "m" + hex64(stable_hash(creation_)); }

std::string DpMemoizedProcedure::identity_key() const { return "d" + hex64(stable_hash(creation_)); }

}  // namespace steeple
