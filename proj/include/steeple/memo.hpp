#pragma once

// Stochastic memoization: mem tables and Chinese-restaurant DPmem state.

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "steeple/erp.hpp"
#include "steeple/rng.hpp"
#include "steeple/value.hpp"

namespace steeple {

struct Table {
  std::int64_t id = 0;
  std::int64_t count = 0;
  Value dish;
};

struct Restaurant {
  std::vector<Table> tables;
  std::int64_t customers() const;
  const Table* find(std::int64_t id) const;
  Table* find(std::int64_t id);
};

/// All memo tables and restaurants of one evaluation, keyed first by the
/// address at which the memoized procedure was created, then by argument key.
struct MemoState {
  std::unordered_map<std::string, std::unordered_map<std::string, Value>> tables;
  std::unordered_map<std::string, std::unordered_map<std::string, Restaurant>> restaurants;
};

/// Index of the chosen existing table, or nullopt for a new table.
/// Existing table i has probability count_i / (N + alpha), a new one
/// alpha / (N + alpha); an empty restaurant always opens a table.
std::optional<std::size_t> crp_next_table(const Restaurant& restaurant, double alpha, Rng& rng);

/// Seating choice recorded for every DPmem call. Params are the concentration
/// and a list of `(table-id . count)` pairs; the value is a table id or the
/// symbol `new`.
const ErpDescriptor& crp_seat_erp();

std::vector<Value> crp_seat_params(double alpha, const Restaurant& restaurant);

/// Table id assigned to a table opened by the seating choice at `address`.
std::int64_t table_id_for(const std::string& address);

class MemoizedProcedure final : public Procedure {
 public:
  MemoizedProcedure(ProcPtr underlying, std::string creation)
      : underlying_(std::move(underlying)), creation_(std::move(creation)) {}
  Kind kind() const override { return Kind::Memoized; }
  std::string identity_key() const override;
  const ProcPtr& underlying() const { return underlying_; }
  const std::string& creation() const { return creation_; }

 private:
  ProcPtr underlying_;
  std::string creation_;
};

class DpMemoizedProcedure final : public Procedure {
 public:
  DpMemoizedProcedure(double alpha, ProcPtr underlying, std::string creation)
      : alpha_(alpha), underlying_(std::move(underlying)), creation_(std::move(creation)) {}
  Kind kind() const override { return Kind::DpMemoized; }
  std::string identity_key() const override;
  double alpha() const { return alpha_; }
  const ProcPtr& underlying() const { return underlying_; }
  const std::string& creation() const { return creation_; }

 private:
  double alpha_;
  ProcPtr underlying_;
  std::string creation_;
};

}  // namespace steeple
