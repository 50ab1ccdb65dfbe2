#include "steeple/value.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <unordered_set>

#include "steeple/environment.hpp"

namespace steeple {

namespace {

const std::string* intern(std::string_view name) {
  static std::mutex mutex;
  static std::unordered_set<std::string> table;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = table.emplace(name).first;
  return &*it;
}

std::string print_character(char32_t c) {
  switch (c) {
    case U' ':
      return "#\\space";
    case U'\n':
      return "#\\newline";
    case U'\t':
      return "#\\tab";
    default:
      break;
  }
  std::string out = "#\\";
  if (c < 0x80) {
    out.push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (c >> 12)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (c >> 18)));
    out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
  return out;
}

void print_into(const Value& v, std::string& out);

void print_pair(const Value& v, std::string& out) {
  out.push_back('(');
  const Value* cur = &v;
  bool first = true;
  while (cur->is_pair()) {
    if (!first) out.push_back(' ');
    first = false;
    print_into(cur->as_pair().first(), out);
    cur = &cur->as_pair().rest();
  }
  if (!cur->is_nil()) {
    out += " . ";
    print_into(*cur, out);
  }
  out.push_back(')');
}

void print_into(const Value& v, std::string& out) {
  switch (v.kind()) {
    case Value::Kind::Nil:
      out += "()";
      return;
    case Value::Kind::Boolean:
      out += v.as_bool() ? "true" : "false";
      return;
    case Value::Kind::Integer:
      out += std::to_string(v.as_integer());
      return;
    case Value::Kind::Real:
      out += print_real(v.as_real());
      return;
    case Value::Kind::Character:
      out += print_character(v.as_character());
      return;
    case Value::Kind::Symbol:
      out += v.as_symbol().name();
      return;
    case Value::Kind::Pair:
      print_pair(v, out);
      return;
    case Value::Kind::Environment:
      out += "#<env>";
      return;
    case Value::Kind::Procedure: {
      const auto& p = *v.as_procedure();
      if (p.kind() == Procedure::Kind::Gensym) {
        out += "#<gensym:" + p.identity_key().substr(1) + ">";
      } else {
        out += "#<procedure>";
      }
      return;
    }
    case Value::Kind::Error:
      out += "error";
      return;
  }
}

void key_into(const Value& v, std::string& out) {
  switch (v.kind()) {
    case Value::Kind::Integer:
      // Integers and reals that compare equal must share a key.
      out += print_real(static_cast<double>(v.as_integer()));
      return;
    case Value::Kind::Real:
      out += print_real(v.as_real() == 0.0 ? 0.0 : v.as_real());
      return;
    case Value::Kind::Procedure:
      out += v.as_procedure()->identity_key();
      return;
    case Value::Kind::Environment: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "#e%p", static_cast<const void*>(v.as_environment().get()));
      out += buf;
      return;
    }
    case Value::Kind::Pair: {
      out.push_back('(');
      const Value* cur = &v;
      while (cur->is_pair()) {
        key_into(cur->as_pair().first(), out);
        out.push_back(' ');
        cur = &cur->as_pair().rest();
      }
      if (!cur->is_nil()) {
        out += ". ";
        key_into(*cur, out);
      }
      out.push_back(')');
      return;
    }
    case Value::Kind::Symbol:
      // Symbols are prefixed so that the symbol `true` differs from the boolean.
      out.push_back('\'');
      out += v.as_symbol().name();
      return;
    default:
      print_into(v, out);
      return;
  }
}

}  // namespace

Symbol::Symbol() : name_(intern("")) {}
Symbol::Symbol(std::string_view name) : name_(intern(name)) {}

Value Value::boolean(bool b) { return Value(Storage(b)); }
Value Value::integer(std::int64_t i) { return Value(Storage(i)); }
Value Value::real(double d) { return Value(Storage(d)); }
Value Value::character(char32_t c) { return Value(Storage(Character{c})); }
Value Value::symbol(Symbol s) { return Value(Storage(s)); }
Value Value::cons(Value first, Value rest) {
  return Value(Storage(std::make_shared<const Pair>(std::move(first), std::move(rest))));
}
Value Value::environment(EnvPtr env) { return Value(Storage(std::move(env))); }
Value Value::procedure(ProcPtr proc) { return Value(Storage(std::move(proc))); }
Value Value::error(std::string message) {
  return Value(Storage(ErrorInfo{std::make_shared<const std::string>(std::move(message))}));
}

double Value::as_number() const {
  if (is_integer()) return static_cast<double>(as_integer());
  return as_real();
}

std::string Value::error_message() const {
  const auto& info = std::get<ErrorInfo>(data_);
  return info.message ? *info.message : std::string();
}

Value make_list(std::span<const Value> items) {
  Value out;
  for (auto it = items.rbegin(); it != items.rend(); ++it) out = Value::cons(*it, std::move(out));
  return out;
}

Value make_list(std::initializer_list<Value> items) {
  return make_list(std::span<const Value>(items.begin(), items.size()));
}

std::optional<std::vector<Value>> list_elements(const Value& v) {
  std::vector<Value> out;
  const Value* cur = &v;
  while (cur->is_pair()) {
    out.push_back(cur->as_pair().first());
    cur = &cur->as_pair().rest();
  }
  if (!cur->is_nil()) return std::nullopt;
  return out;
}

bool values_equal(const Value& a, const Value& b) {
  if (a.is_number() && b.is_number()) {
    if (a.is_integer() && b.is_integer()) return a.as_integer() == b.as_integer();
    return a.as_number() == b.as_number();
  }
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Value::Kind::Nil:
    case Value::Kind::Error:
      return true;
    case Value::Kind::Boolean:
      return a.as_bool() == b.as_bool();
    case Value::Kind::Character:
      return a.as_character() == b.as_character();
    case Value::Kind::Symbol:
      return a.as_symbol() == b.as_symbol();
    case Value::Kind::Pair: {
      const Value* x = &a;
      const Value* y = &b;
      while (x->is_pair() && y->is_pair()) {
        if (!values_equal(x->as_pair().first(), y->as_pair().first())) return false;
        x = &x->as_pair().rest();
        y = &y->as_pair().rest();
      }
      return values_equal(*x, *y);
    }
    case Value::Kind::Environment:
      return a.as_environment() == b.as_environment();
    case Value::Kind::Procedure: {
      const auto& p = a.as_procedure();
      const auto& q = b.as_procedure();
      if (p == q) return true;
      // Gensym tags are identified by the address that created them.
      return p->kind() == Procedure::Kind::Gensym && q->kind() == Procedure::Kind::Gensym &&
             p->identity_key() == q->identity_key();
    }
    default:
      return false;
  }
}

std::string print_real(double d) {
  if (std::isnan(d)) return "+nan.0";
  if (std::isinf(d)) return d > 0 ? "+inf.0" : "-inf.0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, d);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::string print_value(const Value& v) {
  std::string out;
  print_into(v, out);
  return out;
}

std::string memo_key(std::span<const Value> args) {
  std::string out;
  for (const auto& a : args) {
    key_into(a, out);
    out.push_back(' ');
  }
  return out;
}

std::uint64_t stable_hash(std::uint64_t seed, std::string_view text) {
  std::uint64_t h = seed;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t stable_hash(std::string_view text) {
  return stable_hash(0xcbf29ce484222325ULL, text);
}

std::string hex64(std::uint64_t x) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, x >>= 4) out[static_cast<std::size_t>(i)] = digits[x & 0xf];
  return out;
}

// Environment -----------------------------------------------------------------

namespace {
constexpr std::size_t kIndexThreshold = 16;
}

const Value* Environment::find_local(const Symbol& name) const {
  if (!index_.empty()) {
    auto it = index_.find(name.id());
    return it == index_.end() ? nullptr : &bindings_[it->second].second;
  }
  for (auto it = bindings_.rbegin(); it != bindings_.rend(); ++it) {
    if (it->first == name) return &it->second;
  }
  return nullptr;
}

void Environment::reindex() {
  index_.clear();
  if (bindings_.size() < kIndexThreshold) return;
  for (std::size_t i = 0; i < bindings_.size(); ++i) index_[bindings_[i].first.id()] = i;
}

Value Environment::lookup(const Symbol& name) const {
  for (const Environment* env = this; env != nullptr; env = env->parent_.get()) {
    if (const Value* v = env->find_local(name)) return *v;
  }
  return Value::error("unbound variable: " + name.name());
}

bool Environment::is_bound(const Symbol& name) const {
  for (const Environment* env = this; env != nullptr; env = env->parent_.get()) {
    if (env->find_local(name)) return true;
  }
  return false;
}

EnvPtr Environment::extend(const EnvPtr& parent, std::span<const Symbol> names,
                           std::span<const Value> values) {
  auto env = make(parent);
  env->bindings_.reserve(names.size());
  for (std::size_t i = 0; i < names.size() && i < values.size(); ++i) {
    env->bindings_.emplace_back(names[i], values[i]);
  }
  env->reindex();
  return env;
}

void Environment::bind(Symbol name, Value value) {
  bindings_.emplace_back(std::move(name), std::move(value));
  if (!index_.empty()) {
    index_[bindings_.back().first.id()] = bindings_.size() - 1;
  } else if (bindings_.size() >= kIndexThreshold) {
    reindex();
  }
}

void Environment::assign(const Symbol& name, Value value) {
  for (auto it = bindings_.rbegin(); it != bindings_.rend(); ++it) {
    if (it->first == name) {
      it->second = std::move(value);
      return;
    }
  }
  bind(name, std::move(value));
}

}  // namespace steeple
