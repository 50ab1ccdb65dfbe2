#include "steeple/expr.hpp"

namespace steeple {

namespace {

class Compiler {
 public:
  ExprPtr compile(const SourceExpr& e) {
    auto out = std::make_shared<Expr>();
    out->pos = e.pos;
    switch (classify(e)) {
      case Form::Constant:
        out->kind = Expr::Kind::Constant;
        out->constant = e.atom;
        break;
      case Form::Variable:
        out->kind = Expr::Kind::Variable;
        out->name = e.atom.as_symbol();
        break;
      case Form::Quote:
        if (e.items.size() != 2) fail(e, "quote takes exactly one expression");
        out->kind = Expr::Kind::Quote;
        out->constant = to_datum(e.items[1]);
        break;
      case Form::If:
        if (e.items.size() != 4) fail(e, "if takes exactly three expressions");
        out->kind = Expr::Kind::If;
        for (std::size_t i = 1; i < 4; ++i) out->items.push_back(compile(e.items[i]));
        break;
      case Form::Define:
        if (e.items.size() != 3 || !e.items[1].is_symbol()) fail(e, "define takes a symbol and one expression");
        out->kind = Expr::Kind::Define;
        out->name = e.items[1].atom.as_symbol();
        out->items.push_back(compile(e.items[2]));
        break;
      case Form::Lambda: {
        if (e.items.size() != 3) fail(e, "lambda takes formals and one body expression");
        out->kind = Expr::Kind::Lambda;
        out->site = next_site_++;
        const SourceExpr& formals = e.items[1];
        if (formals.is_symbol()) {
          out->variadic = true;
          out->name = formals.atom.as_symbol();
        } else if (formals.is_list()) {
          for (const auto& f : formals.items) {
            if (!f.is_symbol()) fail(f, "formal parameter must be a symbol");
            for (const auto& seen : out->formals) {
              if (seen == f.atom.as_symbol()) fail(f, "duplicate formal parameter");
            }
            out->formals.push_back(f.atom.as_symbol());
          }
        } else {
          fail(formals, "malformed formals");
        }
        out->items.push_back(compile(e.items[2]));
        break;
      }
      case Form::Application:
        if (e.items.empty()) fail(e, "empty application ()");
        out->kind = Expr::Kind::Application;
        out->site = next_site_++;
        for (const auto& item : e.items) out->items.push_back(compile(item));
        break;
      default:
        fail(e, "derived form was not desugared");
    }
    return out;
  }

 private:
  [[noreturn]] static void fail(const SourceExpr& e, const std::string& msg) {
    throw SyntaxError(SyntaxError::Stage::Desugar, e.pos, msg);
  }

  std::uint32_t next_site_ = 0;
};

}  // namespace

ExprPtr compile(const SourceExpr& desugared) {
  Compiler c;
  return c.compile(desugared);
}

ExprPtr compile_datum(const Value& datum) { return compile(desugar(from_datum(datum))); }

std::vector<ExprPtr> compile_program(std::string_view source) {
  std::vector<ExprPtr> out;
  for (const auto& form : read_program(source)) out.push_back(compile(form));
  return out;
}

}  // namespace steeple
