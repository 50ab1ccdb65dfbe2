#pragma once

// Runtime values of the language: constants, pairs, environments, procedures
// and the distinguished `error` constant.

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace steeple {

/// Interned symbol name; equality is pointer identity.
class Symbol {
 public:
  Symbol();
  explicit Symbol(std::string_view name);

  const std::string& name() const { return *name_; }
  bool operator==(const Symbol& other) const { return name_ == other.name_; }
  std::strong_ordering operator<=>(const Symbol& other) const {
    return *name_ <=> *other.name_;
  }
  const void* id() const { return name_; }

 private:
  const std::string* name_;
};

class Pair;
class Environment;
class Procedure;

using PairPtr = std::shared_ptr<const Pair>;
using EnvPtr = std::shared_ptr<Environment>;
using ProcPtr = std::shared_ptr<const Procedure>;

struct Nil {};

struct Character {
  char32_t code;
};

struct ErrorInfo {
  std::shared_ptr<const std::string> message;
};

class Value {
 public:
  enum class Kind : std::uint8_t {
    Nil,
    Boolean,
    Integer,
    Real,
    Character,
    Symbol,
    Pair,
    Environment,
    Procedure,
    Error,
  };

  Value() = default;

  static Value nil() { return Value(); }
  static Value boolean(bool b);
  static Value integer(std::int64_t i);
  static Value real(double d);
  static Value character(char32_t c);
  static Value symbol(Symbol s);
  static Value symbol(std::string_view name) { return symbol(Symbol(name)); }
  static Value cons(Value first, Value rest);
  static Value environment(EnvPtr env);
  static Value procedure(ProcPtr proc);
  static Value error(std::string message = {});

  Kind kind() const { return static_cast<Kind>(data_.index()); }

  bool is_nil() const { return kind() == Kind::Nil; }
  bool is_boolean() const { return kind() == Kind::Boolean; }
  bool is_integer() const { return kind() == Kind::Integer; }
  bool is_real() const { return kind() == Kind::Real; }
  bool is_number() const { return is_integer() || is_real(); }
  bool is_character() const { return kind() == Kind::Character; }
  bool is_symbol() const { return kind() == Kind::Symbol; }
  bool is_pair() const { return kind() == Kind::Pair; }
  bool is_environment() const { return kind() == Kind::Environment; }
  bool is_procedure() const { return kind() == Kind::Procedure; }
  bool is_error() const { return kind() == Kind::Error; }

  bool as_bool() const { return std::get<bool>(data_); }
  std::int64_t as_integer() const { return std::get<std::int64_t>(data_); }
  double as_real() const { return std::get<double>(data_); }
  /// Integer or real, widened to double.
  double as_number() const;
  char32_t as_character() const { return std::get<Character>(data_).code; }
  const Symbol& as_symbol() const { return std::get<Symbol>(data_); }
  const Pair& as_pair() const { return *std::get<PairPtr>(data_); }
  const EnvPtr& as_environment() const { return std::get<EnvPtr>(data_); }
  const ProcPtr& as_procedure() const { return std::get<ProcPtr>(data_); }
  std::string error_message() const;

  /// Everything except `false` counts as true in a conditional.
  bool truthy() const { return !(is_boolean() && !as_bool()); }

  bool is_true() const { return is_boolean() && as_bool(); }

 private:
  using Storage = std::variant<Nil, bool, std::int64_t, double, Character, Symbol,
                               PairPtr, EnvPtr, ProcPtr, ErrorInfo>;
  explicit Value(Storage s) : data_(std::move(s)) {}
  Storage data_;
};

class Pair {
 public:
  Pair(Value first, Value rest) : first_(std::move(first)), rest_(std::move(rest)) {}
  const Value& first() const { return first_; }
  const Value& rest() const { return rest_; }

 private:
  Value first_;
  Value rest_;
};

/// Abstract procedure; concrete kinds live next to the code that applies them.
class Procedure {
 public:
  enum class Kind {
    Closure,
    Primitive,
    Elementary,
    Memoized,
    DpMemoized,
    Gensym,
  };

  virtual ~Procedure() = default;
  virtual Kind kind() const = 0;
  /// Key that identifies this procedure inside memo-table keys. Stable across
  /// re-executions of the same program with the same control flow.
  virtual std::string identity_key() const = 0;
};

/// Build a proper list.
Value make_list(std::span<const Value> items);
Value make_list(std::initializer_list<Value> items);

/// Elements of a proper list, or nullopt for anything else.
std::optional<std::vector<Value>> list_elements(const Value& v);

/// Structural equality. Numbers compare numerically across integer/real,
/// procedures and environments by identity, every `error` equals every other.
bool values_equal(const Value& a, const Value& b);

/// Canonical printed form. Procedures print as `#<procedure>`, environments
/// as `#<env>`, gensym tags as `#<gensym:…>`.
std::string print_value(const Value& v);

/// Real number printed so that it reads back as a real (always has `.` or `e`).
std::string print_real(double d);

/// Key for memo tables and addresses. Equal under values_equal implies equal key.
std::string memo_key(std::span<const Value> args);

/// 64-bit FNV-1a, used for stable identities derived from addresses.
std::uint64_t stable_hash(std::string_view text);
std::uint64_t stable_hash(std::uint64_t seed, std::string_view text);

/// Sixteen lowercase hex digits.
std::string hex64(std::uint64_t x);

}  // namespace steeple
