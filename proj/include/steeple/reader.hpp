#pragma once

// Source text to syntax trees: tokenizer, parser, and the desugaring pass
// that rewrites `let`, `cond`, `case`, `and`, `or` and procedure-definition
// shorthand into the seven core forms.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "steeple/value.hpp"

namespace steeple {

struct SourcePos {
  std::size_t line = 1;
  std::size_t column = 1;

  auto operator<=>(const SourcePos&) const = default;
};

/// Raised for lexical, parse and desugaring errors. Carries the position of
/// the offending text.
class SyntaxError : public std::runtime_error {
 public:
  enum class Stage { Lex, Parse, Desugar };
  SyntaxError(Stage stage, SourcePos pos, const std::string& message);

  Stage stage() const { return stage_; }
  SourcePos position() const { return pos_; }

 private:
  Stage stage_;
  SourcePos pos_;
};

struct Token {
  enum class Kind {
    OpenParen,
    CloseParen,
    QuoteMark,
    Symbol,
    Integer,
    Real,
    Boolean,
    Character,
  };
  Kind kind;
  std::string text;
  SourcePos pos;
};

std::vector<Token> tokenize(std::string_view source);

/// A parsed datum with source position. Atoms carry their constant value (a
/// symbol for identifiers); lists carry their items.
struct SourceExpr {
  enum class Kind { Atom, List };

  Kind kind = Kind::Atom;
  Value atom;
  std::vector<SourceExpr> items;
  SourcePos pos;

  static SourceExpr make_atom(Value v, SourcePos pos = {});
  static SourceExpr make_list(std::vector<SourceExpr> items, SourcePos pos = {});
  static SourceExpr make_symbol(std::string_view name, SourcePos pos = {});

  bool is_symbol() const { return kind == Kind::Atom && atom.is_symbol(); }
  bool is_symbol(std::string_view name) const {
    return is_symbol() && atom.as_symbol().name() == name;
  }
  bool is_list() const { return kind == Kind::List; }
  /// Name of the head symbol of a non-empty list, empty otherwise.
  std::string_view head() const;
};

/// Syntactic category of a source expression.
enum class Form {
  Constant,
  Variable,
  Application,
  Lambda,
  If,
  Define,
  Quote,
  Let,
  Cond,
  Case,
  And,
  Or,
};

Form classify(const SourceExpr& e);

/// One SourceExpr per top-level datum. `'e` reads as `(quote e)`.
std::vector<SourceExpr> parse(const std::vector<Token>& tokens);

/// Rewrites sugar into core forms. The result contains only constants,
/// variables, applications, `lambda`, `if`, `define` and `quote`.
SourceExpr desugar(const SourceExpr& e);

/// Canonical parenthesised text; parse(tokenize(print_source(e))) == e.
std::string print_source(const SourceExpr& e);

/// Structural equality ignoring positions.
bool same_structure(const SourceExpr& a, const SourceExpr& b);

/// Conversion between syntax and quoted data.
Value to_datum(const SourceExpr& e);
SourceExpr from_datum(const Value& v);

/// tokenize + parse + desugar.
std::vector<SourceExpr> read_program(std::string_view source);

}  // namespace steeple
