#include "steeple/reader.hpp"

#include <cstdlib>
#include <set>

namespace steeple {

namespace {

std::string stage_name(SyntaxError::Stage s) {
  switch (s) {
    case SyntaxError::Stage::Lex:
      return "lex error";
    case SyntaxError::Stage::Parse:
      return "parse error";
    case SyntaxError::Stage::Desugar:
      return "syntax error";
  }
  return "error";
}

bool is_delimiter(char c) {
  return c == '(' || c == ')' || c == '\'' || c == ';' || c == '"' || c == ' ' || c == '\t' ||
         c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_illegal(char c) {
  return c == '"' || c == '`' || c == ',' || c == '|' || c == '[' || c == ']' || c == '{' ||
         c == '}' || (static_cast<unsigned char>(c) < 0x20 && c != '\n' && c != '\t' &&
                      c != '\r' && c != '\f' && c != '\v');
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

bool looks_integer(std::string_view s) {
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) s.remove_prefix(1);
  return all_digits(s);
}

bool looks_real(std::string_view s) {
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) s.remove_prefix(1);
  std::string_view mantissa = s;
  std::string_view exponent;
  bool has_exponent = false;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    mantissa = s.substr(0, e);
    exponent = s.substr(e + 1);
    has_exponent = true;
  }
  std::string_view int_part = mantissa;
  std::string_view frac_part;
  bool has_dot = false;
  if (auto d = mantissa.find('.'); d != std::string_view::npos) {
    int_part = mantissa.substr(0, d);
    frac_part = mantissa.substr(d + 1);
    has_dot = true;
  }
  if (int_part.empty() && frac_part.empty()) return false;
  if (!int_part.empty() && !all_digits(int_part)) return false;
  if (!frac_part.empty() && !all_digits(frac_part)) return false;
  if (has_exponent) {
    if (!exponent.empty() && (exponent[0] == '-' || exponent[0] == '+')) exponent.remove_prefix(1);
    if (!all_digits(exponent)) return false;
  }
  return has_dot || has_exponent;
}

/// Decodes one UTF-8 code point starting at text[i]; advances i.
char32_t decode_utf8(std::string_view text, std::size_t& i) {
  auto byte = static_cast<unsigned char>(text[i]);
  int extra = 0;
  char32_t cp = byte;
  if (byte >= 0xF0) {
    extra = 3;
    cp = byte & 0x07;
  } else if (byte >= 0xE0) {
    extra = 2;
    cp = byte & 0x0F;
  } else if (byte >= 0xC0) {
    extra = 1;
    cp = byte & 0x1F;
  }
  ++i;
  for (int k = 0; k < extra && i < text.size(); ++k, ++i) {
    cp = (cp << 6) | (static_cast<unsigned char>(text[i]) & 0x3F);
  }
  return cp;
}

Value character_value(const Token& tok) {
  std::string_view body = std::string_view(tok.text).substr(2);
  if (body == "space") return Value::character(U' ');
  if (body == "newline") return Value::character(U'\n');
  if (body == "tab") return Value::character(U'\t');
  std::size_t i = 0;
  return Value::character(decode_utf8(body, i));
}

class Parser {
 public:
  explicit Parser(const std::vector<Token>& tokens) : tokens_(tokens) {}

  std::vector<SourceExpr> parse_all() {
    std::vector<SourceExpr> out;
    while (pos_ < tokens_.size()) out.push_back(parse_one());
    return out;
  }

 private:
  SourceExpr parse_one() {
    const Token& tok = tokens_[pos_++];
    switch (tok.kind) {
      case Token::Kind::OpenParen: {
        std::vector<SourceExpr> items;
        while (true) {
          if (pos_ >= tokens_.size()) {
            throw SyntaxError(SyntaxError::Stage::Parse, tok.pos, "unbalanced parentheses: missing ')'");
          }
          if (tokens_[pos_].kind == Token::Kind::CloseParen) {
            ++pos_;
            break;
          }
          items.push_back(parse_one());
        }
        return SourceExpr::make_list(std::move(items), tok.pos);
      }
      case Token::Kind::CloseParen:
        throw SyntaxError(SyntaxError::Stage::Parse, tok.pos, "unbalanced parentheses: unexpected ')'");
      case Token::Kind::QuoteMark: {
        if (pos_ >= tokens_.size()) {
          throw SyntaxError(SyntaxError::Stage::Parse, tok.pos, "quote mark at end of input");
        }
        std::vector<SourceExpr> items;
        items.push_back(SourceExpr::make_symbol("quote", tok.pos));
        items.push_back(parse_one());
        return SourceExpr::make_list(std::move(items), tok.pos);
      }
      case Token::Kind::Symbol:
        return SourceExpr::make_atom(Value::symbol(tok.text), tok.pos);
      case Token::Kind::Integer: {
        errno = 0;
        long long v = std::strtoll(tok.text.c_str(), nullptr, 10);
        if (errno == ERANGE) {
          throw SyntaxError(SyntaxError::Stage::Parse, tok.pos, "integer literal out of range: " + tok.text);
        }
        return SourceExpr::make_atom(Value::integer(v), tok.pos);
      }
      case Token::Kind::Real:
        return SourceExpr::make_atom(Value::real(std::strtod(tok.text.c_str(), nullptr)), tok.pos);
      case Token::Kind::Boolean:
        return SourceExpr::make_atom(Value::boolean(tok.text == "true" || tok.text == "#t"), tok.pos);
      case Token::Kind::Character:
        return SourceExpr::make_atom(character_value(tok), tok.pos);
    }
    throw SyntaxError(SyntaxError::Stage::Parse, tok.pos, "unexpected token");
  }

  const std::vector<Token>& tokens_;
  std::size_t pos_ = 0;
};

// Rejects `()` wherever it would be evaluated as an application.
void check_applications(const SourceExpr& e) {
  if (!e.is_list()) return;
  if (e.items.empty()) {
    throw SyntaxError(SyntaxError::Stage::Parse, e.pos, "empty application ()");
  }
  auto check_from = [&](std::size_t start) {
    for (std::size_t i = start; i < e.items.size(); ++i) check_applications(e.items[i]);
  };
  switch (classify(e)) {
    case Form::Quote:
      return;
    case Form::Lambda:
      check_from(2);
      return;
    case Form::Define:
      check_from(2);
      return;
    case Form::Let:
      if (e.items.size() > 1 && e.items[1].is_list()) {
        for (const auto& b : e.items[1].items) {
          if (b.is_list() && b.items.size() == 2) check_applications(b.items[1]);
        }
      }
      check_from(2);
      return;
    case Form::Cond:
      for (std::size_t i = 1; i < e.items.size(); ++i) {
        if (e.items[i].is_list()) {
          for (const auto& part : e.items[i].items) check_applications(part);
        }
      }
      return;
    case Form::Case:
      if (e.items.size() > 1) check_applications(e.items[1]);
      for (std::size_t i = 2; i < e.items.size(); ++i) {
        if (e.items[i].is_list()) {
          for (std::size_t k = 1; k < e.items[i].items.size(); ++k) check_applications(e.items[i].items[k]);
        }
      }
      return;
    default:
      check_from(0);
      return;
  }
}

[[noreturn]] void desugar_error(const SourceExpr& e, const std::string& message) {
  throw SyntaxError(SyntaxError::Stage::Desugar, e.pos, message);
}

SourceExpr sym(std::string_view name, SourcePos pos) { return SourceExpr::make_symbol(name, pos); }

SourceExpr list_of(std::vector<SourceExpr> items, SourcePos pos) {
  return SourceExpr::make_list(std::move(items), pos);
}

SourceExpr make_if(SourceExpr c, SourceExpr t, SourceExpr f, SourcePos pos) {
  return list_of({sym("if", pos), std::move(c), std::move(t), std::move(f)}, pos);
}

void validate_formals(const SourceExpr& formals) {
  if (formals.is_symbol()) return;
  if (!formals.is_list()) desugar_error(formals, "lambda formals must be a symbol or a list of symbols");
  std::set<std::string> seen;
  for (const auto& f : formals.items) {
    if (!f.is_symbol()) desugar_error(f, "lambda formal parameter must be a symbol");
    if (!seen.insert(f.atom.as_symbol().name()).second) {
      desugar_error(f, "duplicate formal parameter: " + f.atom.as_symbol().name());
    }
  }
}

SourceExpr desugar_lambda(const SourceExpr& e) {
  if (e.items.size() != 3) desugar_error(e, "lambda takes a formals list and exactly one body expression");
  validate_formals(e.items[1]);
  return list_of({e.items[0], e.items[1], desugar(e.items[2])}, e.pos);
}

SourceExpr desugar_define(const SourceExpr& e) {
  if (e.items.size() != 3) desugar_error(e, "define takes a name and exactly one expression");
  const SourceExpr& target = e.items[1];
  if (target.is_symbol()) {
    return list_of({e.items[0], target, desugar(e.items[2])}, e.pos);
  }
  if (target.is_list() && !target.items.empty() && target.items[0].is_symbol()) {
    std::vector<SourceExpr> formals(target.items.begin() + 1, target.items.end());
    SourceExpr formal_list = list_of(std::move(formals), target.pos);
    validate_formals(formal_list);
    SourceExpr lambda = list_of({sym("lambda", e.pos), formal_list, desugar(e.items[2])}, e.pos);
    return list_of({e.items[0], target.items[0], std::move(lambda)}, e.pos);
  }
  desugar_error(e, "define target must be a symbol or (name formals...)");
}

SourceExpr desugar_let(const SourceExpr& e) {
  if (e.items.size() != 3 || !e.items[1].is_list()) {
    desugar_error(e, "let takes a binding list and exactly one body expression");
  }
  std::vector<SourceExpr> names;
  std::vector<SourceExpr> values;
  for (const auto& b : e.items[1].items) {
    if (!b.is_list() || b.items.size() != 2 || !b.items[0].is_symbol()) {
      desugar_error(b, "malformed let binding; expected (name expression)");
    }
    names.push_back(b.items[0]);
    values.push_back(desugar(b.items[1]));
  }
  SourceExpr formals = list_of(std::move(names), e.items[1].pos);
  validate_formals(formals);
  std::vector<SourceExpr> app;
  app.push_back(list_of({sym("lambda", e.pos), std::move(formals), desugar(e.items[2])}, e.pos));
  for (auto& v : values) app.push_back(std::move(v));
  return list_of(std::move(app), e.pos);
}

SourceExpr desugar_cond(const SourceExpr& e, std::size_t clause) {
  if (clause >= e.items.size()) return sym("error", e.pos);
  const SourceExpr& c = e.items[clause];
  if (!c.is_list() || c.items.size() != 2) desugar_error(c, "cond clause must be (test expression)");
  if (c.items[0].is_symbol("else")) {
    if (clause + 1 != e.items.size()) desugar_error(c, "else must be the last cond clause");
    return desugar(c.items[1]);
  }
  return make_if(desugar(c.items[0]), desugar(c.items[1]), desugar_cond(e, clause + 1), c.pos);
}

// A case datum written as 'x matches the symbol x.
SourceExpr strip_quote(const SourceExpr& d) {
  if (d.is_list() && d.items.size() == 2 && d.items[0].is_symbol("quote")) return d.items[1];
  return d;
}

SourceExpr desugar_case_clauses(const SourceExpr& e, std::size_t clause) {
  if (clause >= e.items.size()) return sym("error", e.pos);
  const SourceExpr& c = e.items[clause];
  if (!c.is_list() || c.items.size() != 2) desugar_error(c, "case clause must be ((datum...) expression)");
  if (c.items[0].is_symbol("else")) {
    if (clause + 1 != e.items.size()) desugar_error(c, "else must be the last case clause");
    return desugar(c.items[1]);
  }
  if (!c.items[0].is_list()) desugar_error(c.items[0], "case datums must be a list");
  std::vector<SourceExpr> data;
  for (const auto& d : c.items[0].items) data.push_back(strip_quote(d));
  SourceExpr quoted = list_of({sym("quote", c.pos), list_of(std::move(data), c.items[0].pos)}, c.pos);
  SourceExpr test = list_of({sym("#case-member", c.pos), sym("#case-key", c.pos), std::move(quoted)}, c.pos);
  return make_if(std::move(test), desugar(c.items[1]), desugar_case_clauses(e, clause + 1), c.pos);
}

SourceExpr desugar_case(const SourceExpr& e) {
  if (e.items.size() < 2) desugar_error(e, "case needs a key expression");
  SourceExpr body = desugar_case_clauses(e, 2);
  SourceExpr lambda = list_of({sym("lambda", e.pos), list_of({sym("#case-key", e.pos)}, e.pos), std::move(body)}, e.pos);
  return list_of({std::move(lambda), desugar(e.items[1])}, e.pos);
}

SourceExpr desugar_and(const SourceExpr& e, std::size_t i) {
  if (i >= e.items.size()) return SourceExpr::make_atom(Value::boolean(true), e.pos);
  if (i + 1 == e.items.size()) return desugar(e.items[i]);
  return make_if(desugar(e.items[i]), desugar_and(e, i + 1),
                 SourceExpr::make_atom(Value::boolean(false), e.pos), e.items[i].pos);
}

SourceExpr desugar_or(const SourceExpr& e, std::size_t i) {
  if (i >= e.items.size()) return SourceExpr::make_atom(Value::boolean(false), e.pos);
  if (i + 1 == e.items.size()) return desugar(e.items[i]);
  SourcePos p = e.items[i].pos;
  SourceExpr body = make_if(sym("#or-value", p), sym("#or-value", p), desugar_or(e, i + 1), p);
  SourceExpr lambda = list_of({sym("lambda", p), list_of({sym("#or-value", p)}, p), std::move(body)}, p);
  return list_of({std::move(lambda), desugar(e.items[i])}, p);
}

}  // namespace

SyntaxError::SyntaxError(Stage stage, SourcePos pos, const std::string& message)
    : std::runtime_error(stage_name(stage) + " at " + std::to_string(pos.line) + ":" +
                         std::to_string(pos.column) + ": " + message),
      stage_(stage),
      pos_(pos) {}

std::vector<Token> tokenize(std::string_view source) {
  std::vector<Token> out;
  std::size_t i = 0;
  SourcePos pos;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < source.size(); ++k, ++i) {
      if (source[i] == '\n') {
        ++pos.line;
        pos.column = 1;
      } else {
        ++pos.column;
      }
    }
  };
  while (i < source.size()) {
    char c = source[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      advance(1);
      continue;
    }
    if (c == ';') {
      while (i < source.size() && source[i] != '\n') advance(1);
      continue;
    }
    SourcePos start = pos;
    if (c == '(' || c == ')' || c == '\'') {
      Token::Kind kind = c == '(' ? Token::Kind::OpenParen
                         : c == ')' ? Token::Kind::CloseParen
                                    : Token::Kind::QuoteMark;
      out.push_back(Token{kind, std::string(1, c), start});
      advance(1);
      continue;
    }
    if (is_illegal(c)) {
      throw SyntaxError(SyntaxError::Stage::Lex, start,
                        std::string("illegal character '") + c + "'");
    }
    if (c == '#') {
      if (i + 1 < source.size() && source[i + 1] == '\\') {
        if (i + 2 >= source.size()) {
          throw SyntaxError(SyntaxError::Stage::Lex, start, "unterminated character literal");
        }
        // One code point, then any alphabetic continuation (#\space).
        std::size_t j = i + 2;
        decode_utf8(source, j);
        while (j < source.size() && !is_delimiter(source[j]) && !is_illegal(source[j])) ++j;
        std::string text(source.substr(i, j - i));
        std::string_view name = std::string_view(text).substr(2);
        std::size_t k = 0;
        decode_utf8(name, k);
        if (k != name.size() && name != "space" && name != "newline" && name != "tab") {
          throw SyntaxError(SyntaxError::Stage::Lex, start, "unknown character name: " + text);
        }
        out.push_back(Token{Token::Kind::Character, text, start});
        advance(j - i);
        continue;
      }
      std::size_t j = i + 1;
      while (j < source.size() && !is_delimiter(source[j])) ++j;
      std::string text(source.substr(i, j - i));
      if (text == "#t" || text == "#f") {
        out.push_back(Token{Token::Kind::Boolean, text, start});
        advance(j - i);
        continue;
      }
      throw SyntaxError(SyntaxError::Stage::Lex, start, "illegal character sequence: " + text);
    }
    std::size_t j = i;
    while (j < source.size() && !is_delimiter(source[j])) {
      if (is_illegal(source[j])) {
        SourcePos bad = pos;
        bad.column += j - i;
        throw SyntaxError(SyntaxError::Stage::Lex, bad,
                          std::string("illegal character '") + source[j] + "'");
      }
      ++j;
    }
    std::string text(source.substr(i, j - i));
    Token::Kind kind = Token::Kind::Symbol;
    if (text == "true" || text == "false") {
      kind = Token::Kind::Boolean;
    } else if (looks_integer(text)) {
      kind = Token::Kind::Integer;
    } else if (looks_real(text)) {
      kind = Token::Kind::Real;
    }
    out.push_back(Token{kind, std::move(text), start});
    advance(j - i);
  }
  return out;
}

SourceExpr SourceExpr::make_atom(Value v, SourcePos pos) {
  SourceExpr e;
  e.kind = Kind::Atom;
  e.atom = std::move(v);
  e.pos = pos;
  return e;
}

SourceExpr SourceExpr::make_list(std::vector<SourceExpr> items, SourcePos pos) {
  SourceExpr e;
  e.kind = Kind::List;
  e.items = std::move(items);
  e.pos = pos;
  return e;
}

SourceExpr SourceExpr::make_symbol(std::string_view name, SourcePos pos) {
  return make_atom(Value::symbol(name), pos);
}

std::string_view SourceExpr::head() const {
  if (!is_list() || items.empty() || !items[0].is_symbol()) return {};
  return items[0].atom.as_symbol().name();
}

Form classify(const SourceExpr& e) {
  if (e.kind == SourceExpr::Kind::Atom) return e.atom.is_symbol() ? Form::Variable : Form::Constant;
  std::string_view h = e.head();
  if (h == "lambda") return Form::Lambda;
  if (h == "if") return Form::If;
  if (h == "define") return Form::Define;
  if (h == "quote") return Form::Quote;
  if (h == "let") return Form::Let;
  if (h == "cond") return Form::Cond;
  if (h == "case") return Form::Case;
  if (h == "and") return Form::And;
  if (h == "or") return Form::Or;
  return Form::Application;
}

std::vector<SourceExpr> parse(const std::vector<Token>& tokens) {
  Parser parser(tokens);
  auto forms = parser.parse_all();
  for (const auto& f : forms) check_applications(f);
  return forms;
}

SourceExpr desugar(const SourceExpr& e) {
  switch (classify(e)) {
    case Form::Constant:
    case Form::Variable:
      return e;
    case Form::Quote:
      if (e.items.size() != 2) desugar_error(e, "quote takes exactly one expression");
      return e;
    case Form::Lambda:
      return desugar_lambda(e);
    case Form::If: {
      if (e.items.size() != 4) desugar_error(e, "if takes exactly three expressions");
      return make_if(desugar(e.items[1]), desugar(e.items[2]), desugar(e.items[3]), e.pos);
    }
    case Form::Define:
      return desugar_define(e);
    case Form::Let:
      return desugar_let(e);
    case Form::Cond:
      return desugar_cond(e, 1);
    case Form::Case:
      return desugar_case(e);
    case Form::And:
      return desugar_and(e, 1);
    case Form::Or:
      return desugar_or(e, 1);
    case Form::Application: {
      if (e.items.empty()) desugar_error(e, "empty application ()");
      std::vector<SourceExpr> items;
      items.reserve(e.items.size());
      for (const auto& item : e.items) items.push_back(desugar(item));
      return SourceExpr::make_list(std::move(items), e.pos);
    }
  }
  return e;
}

std::string print_source(const SourceExpr& e) {
  if (e.kind == SourceExpr::Kind::Atom) return print_value(e.atom);
  std::string out = "(";
  for (std::size_t i = 0; i < e.items.size(); ++i) {
    if (i) out.push_back(' ');
    out += print_source(e.items[i]);
  }
  out.push_back(')');
  return out;
}

bool same_structure(const SourceExpr& a, const SourceExpr& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == SourceExpr::Kind::Atom) {
    return a.atom.kind() == b.atom.kind() && print_value(a.atom) == print_value(b.atom);
  }
  if (a.items.size() != b.items.size()) return false;
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    if (!same_structure(a.items[i], b.items[i])) return false;
  }
  return true;
}

Value to_datum(const SourceExpr& e) {
  if (e.kind == SourceExpr::Kind::Atom) return e.atom;
  std::vector<Value> items;
  items.reserve(e.items.size());
  for (const auto& item : e.items) items.push_back(to_datum(item));
  return make_list(items);
}

SourceExpr from_datum(const Value& v) {
  if (!v.is_pair()) {
    if (v.is_nil()) return SourceExpr::make_list({});
    return SourceExpr::make_atom(v);
  }
  auto items = list_elements(v);
  if (!items) throw SyntaxError(SyntaxError::Stage::Parse, {}, "improper list is not an expression: " + print_value(v));
  std::vector<SourceExpr> out;
  out.reserve(items->size());
  for (const auto& item : *items) out.push_back(from_datum(item));
  return SourceExpr::make_list(std::move(out));
}

std::vector<SourceExpr> read_program(std::string_view source) {
  auto forms = parse(tokenize(source));
  std::vector<SourceExpr> out;
  out.reserve(forms.size());
  for (const auto& f : forms) out.push_back(desugar(f));
  return out;
}

}  // namespace steeple
