#pragma once

#include <unordered_map>
#include <utility>
#include <vector>

#include "steeple/value.hpp"

namespace steeple {

/// One frame of bindings plus a link to the enclosing environment.
///
/// Frames are treated as immutable once handed out. The only mutation is
/// `assign`, used while a recursive binding form (`define`, a lexicon) is
/// still initialising the frame it just created.
class Environment {
 public:
  explicit Environment(EnvPtr parent = nullptr) : parent_(std::move(parent)) {}

  static EnvPtr make(EnvPtr parent = nullptr) {
    return std::make_shared<Environment>(std::move(parent));
  }

  /// Innermost binding, or the `error` value if `name` is unbound.
  Value lookup(const Symbol& name) const;
  bool is_bound(const Symbol& name) const;

  /// New child frame binding `names` to `values` pairwise. Sizes must match.
  static EnvPtr extend(const EnvPtr& parent, std::span<const Symbol> names,
                       std::span<const Value> values);

  /// Adds a binding to this frame. Only valid while constructing the frame.
  void bind(Symbol name, Value value);
  /// Overwrites an existing binding in this frame.
  void assign(const Symbol& name, Value value);

  const EnvPtr& parent() const { return parent_; }
  const std::vector<std::pair<Symbol, Value>>& bindings() const { return bindings_; }

 private:
  const Value* find_local(const Symbol& name) const;
  void reindex();

  std::vector<std::pair<Symbol, Value>> bindings_;
  // Built once a frame grows large, e.g. the global frame.
  std::unordered_map<const void*, std::size_t> index_;
  EnvPtr parent_;
};

}  // namespace steeple
