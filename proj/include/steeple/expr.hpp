#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "steeple/reader.hpp"
#include "steeple/value.hpp"

namespace steeple {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Core-form expression tree consumed by the evaluator.
///
/// `site` numbers the application and lambda nodes of one compiled unit in
/// preorder. Together with the dynamic frame path it forms choice addresses,
/// so it must not depend on anything but the unit's own structure.
struct Expr {
  enum class Kind { Constant, Variable, Application, Lambda, If, Define, Quote };

  Kind kind = Kind::Constant;
  Value constant;              // Constant value, or the quoted datum
  Symbol name;                 // Variable, Define target, variadic formal
  std::vector<ExprPtr> items;  // Application: operator then operands; If: 3; Lambda/Define: 1
  std::vector<Symbol> formals;
  bool variadic = false;
  std::uint32_t site = 0;
  SourcePos pos;
};

/// Compiles a desugared expression. Throws SyntaxError if it is not built
/// from the seven core forms.
ExprPtr compile(const SourceExpr& desugared);

/// Desugars then compiles quoted data, as used by `eval` and `query`.
ExprPtr compile_datum(const Value& datum);

/// Reads, desugars and compiles every top-level form of `source`.
std::vector<ExprPtr> compile_program(std::string_view source);

}  // namespace steeple
