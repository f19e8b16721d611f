#pragma once

// Production-rule language: lexer, parser (with static checking against a
// FactSchema) and canonical printer.
//
//   rule "Pars - Permissions"
//     salience -100
//     when
//       $principal : Principal( $pid : id )
//       $pca : Pca( principal.id == $pid, category.id == $cid )
//       not Barca( category.id == $cid )
//     then
//       insert( new Pca( $principal, categories.getCategoryById( "read_all" ) ) );
//       delete( $pca );
//       pars.add( new Par( $principal, categories.getPermissionChain( $cid, $x ), $perm ) );
//   end
//
// Only the `salience` attribute is supported; the other attributes of the
// full language are recognised and rejected. `update($x)` is accepted and
// desugared into delete+insert. Getter calls such as `$pca.getPrincipal()`
// are read as field access (`$pca.principal`).

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "gacm/model.hpp"
#include "gacm/schema.hpp"

namespace gacm::rules {

// ---------------------------------------------------------------------------
// AST

using Literal = std::variant<bool, std::string>;

struct Expr {
  enum class Op {
    literal,           // "text", Boolean.TRUE
    var,               // $x.path.to.field
    field,             // path.to.field on the fact the enclosing pattern matches
    category_by_id,    // categories.getCategoryById(arg)
    build_permission,  // PermissionFactory.buildPermission(action, resource)
    new_fact,          // new Kind(args...)
  };

  Op op = Op::literal;
  Literal literal;
  std::string name;               // variable name (without '$') or fact kind for new_fact
  std::vector<std::string> path;  // var / field
  std::vector<Expr> args;

  friend bool operator==(const Expr&, const Expr&) = default;
};

enum class CompareOp { eq, ne };

struct FieldComparison {
  std::vector<std::string> field;
  CompareOp op = CompareOp::eq;
  Expr operand;
  friend bool operator==(const FieldComparison&, const FieldComparison&) = default;
};

struct FieldBinding {
  std::string var;
  std::vector<std::string> field;
  friend bool operator==(const FieldBinding&, const FieldBinding&) = default;
};

/// categories.containsOrEquals(general, specific)
struct BuiltinCall {
  std::string function;
  std::vector<Expr> args;
  friend bool operator==(const BuiltinCall&, const BuiltinCall&) = default;
};

using Constraint = std::variant<FieldComparison, FieldBinding, BuiltinCall>;

struct Pattern {
  std::optional<std::string> binding;
  std::string kind;
  std::vector<Constraint> constraints;
  friend bool operator==(const Pattern&, const Pattern&) = default;
};

struct InsertAction {
  Expr fact;
  friend bool operator==(const InsertAction&, const InsertAction&) = default;
};

struct DeleteAction {
  std::string var;
  friend bool operator==(const DeleteAction&, const DeleteAction&) = default;
};

enum class ChainFunction { permission, prohibition };

/// pars.add(new Par(principal, categories.get*Chain(from, to), permission))
struct CollectParAction {
  Expr principal;
  ChainFunction chain = ChainFunction::permission;
  Expr chain_from;
  Expr chain_to;
  Expr permission;

  Sign sign() const { return chain == ChainFunction::permission ? Sign::grant : Sign::deny; }
  friend bool operator==(const CollectParAction&, const CollectParAction&) = default;
};

using ActionAst = std::variant<InsertAction, DeleteAction, CollectParAction>;

struct RuleAst {
  std::string name;
  int salience = 0;
  std::vector<Pattern> patterns;
  std::vector<Pattern> negated_patterns;
  std::vector<ActionAst> actions;
  friend bool operator==(const RuleAst&, const RuleAst&) = default;
};

// ---------------------------------------------------------------------------
// Errors

enum class ParseErrorCode {
  syntax,
  unknown_fact_kind,
  unknown_field,
  unbound_variable,
  unsupported_attribute,
  type_mismatch,
  duplicate_rule,
};

class RuleParseError : public std::runtime_error {
 public:
  RuleParseError(ParseErrorCode code, std::size_t line, std::size_t column, std::string message,
                 std::vector<std::string> expected = {})
      : std::runtime_error(format(line, column, message, expected)),
        code_(code),
        line_(line),
        column_(column),
        expected_(std::move(expected)) {}

  ParseErrorCode code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  static std::string format(std::size_t line, std::size_t column, const std::string& message,
                            const std::vector<std::string>& expected) {
    std::string out = std::to_string(line) + ":" + std::to_string(column) + ": " + message;
    if (!expected.empty()) {
      out += " (expected ";
      for (std::size_t i = 0; i < expected.size(); ++i) out += (i ? ", " : "") + expected[i];
      out += ")";
    }
    return out;
  }

  ParseErrorCode code_;
  std::size_t line_;
  std::size_t column_;
  std::vector<std::string> expected_;
};

// ---------------------------------------------------------------------------
// Lexer

namespace detail {

enum class Tok { ident, variable, string, integer, punct, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;
};

inline std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::end: return "end of input";
    case Tok::string: return "string \"" + t.text + "\"";
    case Tok::variable: return "'$" + t.text + "'";
    default: return "'" + t.text + "'";
  }
}

inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0, line = 1, col = 1;

  auto advance = [&](std::size_t n = 1) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto at = [&](std::size_t k) -> char { return i + k < src.size() ? src[i + k] : '\0'; };
  auto is_ident_start = [](char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  };
  auto is_ident_char = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  };

  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance();
      continue;
    }
    if (c == '/' && at(1) == '/') {
      while (i < src.size() && src[i] != '\n') advance();
      continue;
    }
    if (c == '/' && at(1) == '*') {
      const std::size_t l0 = line, c0 = col;
      advance(2);
      while (i < src.size() && !(src[i] == '*' && at(1) == '/')) advance();
      if (i >= src.size())
        throw RuleParseError(ParseErrorCode::syntax, l0, c0, "unterminated comment");
      advance(2);
      continue;
    }

    Token tok;
    tok.line = line;
    tok.column = col;

    if (c == '"') {
      advance();
      while (true) {
        if (i >= src.size() || src[i] == '\n')
          throw RuleParseError(ParseErrorCode::syntax, tok.line, tok.column,
                               "unterminated string literal");
        char ch = src[i];
        if (ch == '"') {
          advance();
          break;
        }
        if (ch == '\\' && i + 1 < src.size()) {
          char esc = at(1);
          tok.text.push_back(esc == 'n' ? '\n' : esc == 't' ? '\t' : esc);
          advance(2);
          continue;
        }
        tok.text.push_back(ch);
        advance();
      }
      tok.kind = Tok::string;
    } else if (c == '$') {
      advance();
      if (!is_ident_start(at(0)))
        throw RuleParseError(ParseErrorCode::syntax, tok.line, tok.column,
                             "expected a variable name after '$'");
      while (is_ident_char(at(0))) {
        tok.text.push_back(src[i]);
        advance();
      }
      tok.kind = Tok::variable;
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '-' && std::isdigit(static_cast<unsigned char>(at(1))))) {
      tok.text.push_back(c);
      advance();
      while (std::isdigit(static_cast<unsigned char>(at(0)))) {
        tok.text.push_back(src[i]);
        advance();
      }
      tok.kind = Tok::integer;
    } else if (is_ident_start(c)) {
      // Hyphens join words so attribute names such as `no-loop` lex as one token.
      while (is_ident_char(at(0)) ||
             (at(0) == '-' && std::isalpha(static_cast<unsigned char>(at(1))))) {
        tok.text.push_back(src[i]);
        advance();
      }
      tok.kind = Tok::ident;
    } else if ((c == '=' || c == '!') && at(1) == '=') {
      tok.text = std::string{c, '='};
      advance(2);
      tok.kind = Tok::punct;
    } else if (std::string_view("(),:;.=").find(c) != std::string_view::npos) {
      tok.text = std::string(1, c);
      advance();
      tok.kind = Tok::punct;
    } else {
      throw RuleParseError(ParseErrorCode::syntax, tok.line, tok.column,
                           std::string("unexpected character '") + c + "'");
    }
    out.push_back(std::move(tok));
  }
  Token end;
  end.kind = Tok::end;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

inline bool is_builtin_fn(std::string_view s) { return s == "containsOrEquals"; }

inline const std::set<std::string, std::less<>>& unsupported_attributes() {
  static const std::set<std::string, std::less<>> names{
      "no-loop",     "ruleflow-group", "lock-on-active",   "dialect",
      "agenda-group", "auto-focus",    "activation-group", "date-effective",
      "date-expires", "duration",      "enabled",          "timer",
      "calendars"};
  return names;
}

/// `getPrincipal` -> `principal`; anything else unchanged.
inline std::string getter_field(const std::string& method) {
  if (method.size() > 3 && method.starts_with("get") &&
      std::isupper(static_cast<unsigned char>(method[3]))) {
    std::string f = method.substr(3);
    f[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(f[0])));
    return f;
  }
  return method;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  Parser(std::string_view source, const FactSchema& schema)
      : toks_(tokenize(source)), schema_(schema) {}

  std::vector<RuleAst> parse_all() {
    std::vector<RuleAst> rules;
    std::set<std::string> names;
    while (peek().kind != Tok::end) {
      const Token& start = peek();
      RuleAst rule = parse_rule();
      if (!names.insert(rule.name).second)
        throw RuleParseError(ParseErrorCode::duplicate_rule, start.line, start.column,
                             "duplicate rule name \"" + rule.name + "\"");
      rules.push_back(std::move(rule));
    }
    return rules;
  }

 private:
  struct VarInfo {
    TypeRef type;
    bool is_fact = false;  // bound to a whole pattern fact
  };

  const Token& peek(std::size_t k = 0) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool is_punct(std::string_view p, std::size_t k = 0) const {
    return peek(k).kind == Tok::punct && peek(k).text == p;
  }
  bool is_ident(std::string_view word, std::size_t k = 0) const {
    return peek(k).kind == Tok::ident && peek(k).text == word;
  }

  static bool is_keyword(const Token& t) {
    return t.kind == Tok::ident && (t.text == "rule" || t.text == "when" || t.text == "then" || t.text == "end");
  }

  [[noreturn]] void fail_expected(std::vector<std::string> expected) const {
    const Token& t = peek();
    throw RuleParseError(ParseErrorCode::syntax, t.line, t.column,
                         "unexpected " + describe(t), std::move(expected));
  }
  [[noreturn]] static void fail_at(const Token& t, ParseErrorCode code, const std::string& msg) {
    throw RuleParseError(code, t.line, t.column, msg);
  }

  void expect_punct(std::string_view p) {
    if (!is_punct(p)) fail_expected({"'" + std::string(p) + "'"});
    next();
  }
  void expect_ident(std::string_view word) {
    if (!is_ident(word)) fail_expected({"'" + std::string(word) + "'"});
    next();
  }
  std::string expect_name() {
    if (peek().kind != Tok::ident) fail_expected({"identifier"});
    return next().text;
  }
  void skip_semicolon() {
    if (is_punct(";")) next();
  }

  RuleAst parse_rule() {
    expect_ident("rule");
    if (peek().kind != Tok::string) fail_expected({"rule name string"});
    RuleAst rule;
    const Token& name_tok = next();
    rule.name = name_tok.text;
    if (rule.name.empty())
      fail_at(name_tok, ParseErrorCode::syntax, "rule name must not be empty");

    bool salience_seen = false;
    while (!is_ident("when")) {
      if (is_ident("salience")) {
        if (salience_seen)
          fail_at(peek(), ParseErrorCode::syntax, "salience given twice");
        next();
        if (peek().kind != Tok::integer) fail_expected({"integer salience"});
        rule.salience = std::stoi(next().text);
        salience_seen = true;
        continue;
      }
      if (peek().kind == Tok::ident && unsupported_attributes().contains(peek().text))
        fail_at(peek(), ParseErrorCode::unsupported_attribute,
                "unsupported rule attribute '" + peek().text + "' (only salience is supported)");
      fail_expected({"'salience'", "'when'"});
    }
    next();  // when

    vars_.clear();
    while (!is_ident("then")) {
      if (peek().kind == Tok::end) fail_expected({"pattern", "'then'"});
      bool negated = false;
      if (is_ident("not")) {
        next();
        negated = true;
      }
      Pattern p = parse_pattern(negated);
      (negated ? rule.negated_patterns : rule.patterns).push_back(std::move(p));
    }
    next();  // then

    while (!is_ident("end")) {
      if (peek().kind == Tok::end) fail_expected({"action", "'end'"});
      parse_action(rule.actions);
    }
    next();  // end
    return rule;
  }

  Pattern parse_pattern(bool negated) {
    Pattern p;
    const Token& start = peek();
    if (peek().kind == Tok::variable) {
      if (negated)
        fail_at(start, ParseErrorCode::syntax, "negated patterns cannot bind a variable");
      p.binding = next().text;
      expect_punct(":");
    }
    if (peek().kind != Tok::ident) fail_expected({"fact kind"});
    const Token& kind_tok = next();
    p.kind = kind_tok.text;
    const KindSpec* spec = schema_.find(p.kind);
    if (!spec) fail_at(kind_tok, ParseErrorCode::unknown_fact_kind, "unknown fact kind '" + p.kind + "'");

    expect_punct("(");
    if (!is_punct(")")) {
      while (true) {
        p.constraints.push_back(parse_constraint(*spec, negated));
        if (is_punct(",")) {
          next();
          continue;
        }
        break;
      }
    }
    expect_punct(")");

    // The pattern variable becomes visible after the pattern, not inside it.
    if (p.binding) bind(start, *p.binding, VarInfo{spec->fact_type(), true});
    return p;
  }

  Constraint parse_constraint(const KindSpec& spec, bool negated) {
    const Token& start = peek();
    if (peek().kind == Tok::variable && is_punct(":", 1)) {
      if (negated)
        fail_at(start, ParseErrorCode::syntax, "negated patterns cannot bind variables");
      std::string var = next().text;
      next();  // :
      auto [path, type] = parse_field_path(spec);
      bind(start, var, VarInfo{type, false});
      return FieldBinding{std::move(var), std::move(path)};
    }
    if (is_ident("categories") && is_punct(".", 1)) {
      next();
      next();
      const Token& fn = peek();
      std::string name = expect_name();
      if (!is_builtin_fn(name))
        fail_at(fn, ParseErrorCode::syntax,
                "'" + name + "' is not a boolean builtin (expected containsOrEquals)");
      expect_punct("(");
      Expr general = parse_expr(&spec);
      expect_punct(",");
      Expr specific = parse_expr(&spec);
      expect_punct(")");
      require_category_arg(fn, general, &spec);
      require_category_arg(fn, specific, &spec);
      return BuiltinCall{std::move(name), {std::move(general), std::move(specific)}};
    }
    if (peek().kind != Tok::ident || is_keyword(peek())) fail_expected({"field", "'$var :'", "'categories.'"});
    const Token& field_tok = peek();
    auto [path, type] = parse_field_path(spec);
    CompareOp op;
    if (is_punct("==")) op = CompareOp::eq;
    else if (is_punct("!=")) op = CompareOp::ne;
    else fail_expected({"'=='", "'!='"});
    next();
    Expr operand = parse_expr(&spec);
    TypeRef rhs = type_of(field_tok, operand, &spec);
    if (!(rhs == type))
      fail_at(field_tok, ParseErrorCode::type_mismatch,
              "cannot compare " + describe(type) + " with " + describe(rhs));
    return FieldComparison{std::move(path), op, std::move(operand)};
  }

  /// ident(.ident)* against the fields of `spec`, with getter sugar.
  std::pair<std::vector<std::string>, TypeRef> parse_field_path(const KindSpec& spec) {
    std::vector<std::string> path;
    const Token& start = peek();
    path.push_back(member_name());
    while (is_punct(".") && peek(1).kind == Tok::ident) {
      next();
      path.push_back(member_name());
    }
    TypeRef t = resolve_path(start, spec.fields, path, spec.name);
    return {std::move(path), t};
  }

  std::string member_name() {
    std::string name = expect_name();
    if (is_punct("(") && is_punct(")", 1)) {
      next();
      next();
      return getter_field(name);
    }
    return name;
  }

  TypeRef resolve_path(const Token& at, std::vector<FieldSpec> fields,
                       const std::vector<std::string>& path, const std::string& owner) const {
    TypeRef cur;
    std::string where = owner;
    for (const auto& seg : path) {
      auto it = std::find_if(fields.begin(), fields.end(),
                             [&](const FieldSpec& f) { return f.name == seg; });
      if (it == fields.end())
        fail_at(at, ParseErrorCode::unknown_field, "unknown field '" + seg + "' on " + where);
      cur = it->type;
      where = describe(cur);
      fields = fields_of(cur);
    }
    return cur;
  }

  std::vector<FieldSpec> fields_of(const TypeRef& t) const {
    if (t.type == ValueType::fact) {
      const KindSpec* spec = schema_.find(t.kind);
      return spec ? spec->fields : std::vector<FieldSpec>{};
    }
    return value_fields(t);
  }

  Expr parse_expr(const KindSpec* pattern) {
    const Token& t = peek();
    Expr e;
    if (t.kind == Tok::string) {
      e.op = Expr::Op::literal;
      e.literal = next().text;
      return e;
    }
    if (is_ident("true") || is_ident("false")) {
      e.op = Expr::Op::literal;
      e.literal = next().text == "true";
      return e;
    }
    if (is_ident("Boolean") && is_punct(".", 1)) {
      next();
      next();
      if (is_ident("TRUE") || is_ident("FALSE")) {
        e.op = Expr::Op::literal;
        e.literal = next().text == "TRUE";
        return e;
      }
      fail_expected({"'TRUE'", "'FALSE'"});
    }
    if (t.kind == Tok::variable) {
      e.op = Expr::Op::var;
      e.name = next().text;
      while (is_punct(".") && peek(1).kind == Tok::ident) {
        next();
        e.path.push_back(member_name());
      }
      type_of(t, e, pattern);
      return e;
    }
    if (is_ident("categories") && is_punct(".", 1)) {
      next();
      next();
      if (!is_ident("getCategoryById")) fail_expected({"'getCategoryById'"});
      next();
      expect_punct("(");
      e.op = Expr::Op::category_by_id;
      e.args.push_back(parse_expr(pattern));
      expect_punct(")");
      type_of(t, e, pattern);
      return e;
    }
    if (is_ident("PermissionFactory") && is_punct(".", 1)) {
      next();
      next();
      if (!is_ident("buildPermission")) fail_expected({"'buildPermission'"});
      next();
      expect_punct("(");
      e.op = Expr::Op::build_permission;
      e.args.push_back(parse_expr(pattern));
      expect_punct(",");
      e.args.push_back(parse_expr(pattern));
      expect_punct(")");
      type_of(t, e, pattern);
      return e;
    }
    if (is_ident("new")) {
      next();
      const Token& kind_tok = peek();
      e.op = Expr::Op::new_fact;
      e.name = expect_name();
      if (e.name == "Par")
        fail_at(kind_tok, ParseErrorCode::syntax, "Par can only be constructed inside pars.add(...)");
      expect_punct("(");
      if (!is_punct(")")) {
        while (true) {
          e.args.push_back(parse_expr(pattern));
          if (!is_punct(",")) break;
          next();
        }
      }
      expect_punct(")");
      type_of(kind_tok, e, pattern);
      return e;
    }
    if (pattern && t.kind == Tok::ident) {
      e.op = Expr::Op::field;
      auto [path, _] = parse_field_path(*pattern);
      e.path = std::move(path);
      return e;
    }
    fail_expected({"literal", "variable", "'new'", "'categories.'"});
  }

  TypeRef type_of(const Token& at, const Expr& e, const KindSpec* pattern) const {
    switch (e.op) {
      case Expr::Op::literal:
        return std::holds_alternative<bool>(e.literal) ? TypeRef::boolean() : TypeRef::string();
      case Expr::Op::var: {
        auto it = vars_.find(e.name);
        if (it == vars_.end())
          fail_at(at, ParseErrorCode::unbound_variable, "variable '$" + e.name + "' is not bound");
        if (e.path.empty()) return it->second.type;
        return resolve_path(at, fields_of(it->second.type), e.path, "$" + e.name);
      }
      case Expr::Op::field:
        return resolve_path(at, pattern ? pattern->fields : std::vector<FieldSpec>{}, e.path,
                            pattern ? pattern->name : "expression");
      case Expr::Op::category_by_id: {
        TypeRef arg = type_of(at, e.args.at(0), pattern);
        if (!(arg == TypeRef::string()))
          fail_at(at, ParseErrorCode::type_mismatch, "getCategoryById expects a String id");
        return TypeRef::of(EntityKind::category);
      }
      case Expr::Op::build_permission: {
        require_entity_or_id(at, e.args.at(0), EntityKind::action, pattern);
        require_entity_or_id(at, e.args.at(1), EntityKind::resource, pattern);
        return TypeRef::permission();
      }
      case Expr::Op::new_fact: {
        const KindSpec* spec = schema_.find(e.name);
        if (!spec)
          fail_at(at, ParseErrorCode::unknown_fact_kind, "unknown fact kind '" + e.name + "'");
        std::vector<TypeRef> want;
        switch (spec->base) {
          case KindBase::entity:
            fail_at(at, ParseErrorCode::syntax, "entities cannot be created by rules");
          case KindBase::pca:
            want = {TypeRef::of(EntityKind::principal), TypeRef::of(EntityKind::category)};
            break;
          case KindBase::arca:
          case KindBase::barca:
            want = {TypeRef::of(EntityKind::category), TypeRef::permission()};
            break;
          case KindBase::custom:
            for (const auto& f : spec->fields) want.push_back(f.type);
            break;
        }
        if (want.size() != e.args.size())
          fail_at(at, ParseErrorCode::type_mismatch,
                  "new " + e.name + " takes " + std::to_string(want.size()) + " arguments, got " +
                      std::to_string(e.args.size()));
        for (std::size_t i = 0; i < want.size(); ++i) {
          TypeRef got = type_of(at, e.args[i], pattern);
          if (!(got == want[i]))
            fail_at(at, ParseErrorCode::type_mismatch,
                    "argument " + std::to_string(i + 1) + " of new " + e.name + " must be " +
                        describe(want[i]) + ", got " + describe(got));
        }
        return spec->fact_type();
      }
    }
    return TypeRef::string();
  }

  void require_entity_or_id(const Token& at, const Expr& e, EntityKind kind,
                            const KindSpec* pattern) const {
    TypeRef t = type_of(at, e, pattern);
    if (t == TypeRef::string() || t == TypeRef::of(kind)) return;
    fail_at(at, ParseErrorCode::type_mismatch,
            "expected a " + std::string(entity_kind_name(kind)) + " or its id, got " + describe(t));
  }

  void require_category_arg(const Token& at, const Expr& e, const KindSpec* pattern) const {
    require_entity_or_id(at, e, EntityKind::category, pattern);
  }

  void bind(const Token& at, const std::string& var, VarInfo info) {
    if (vars_.contains(var))
      fail_at(at, ParseErrorCode::syntax, "variable '$" + var + "' is bound twice");
    vars_.emplace(var, std::move(info));
  }

  void parse_action(std::vector<ActionAst>& out) {
    const Token& start = peek();
    if (is_ident("insert")) {
      next();
      expect_punct("(");
      Expr e = parse_expr(nullptr);
      expect_punct(")");
      skip_semicolon();
      TypeRef t = type_of(start, e, nullptr);
      if (t.type != ValueType::fact)
        fail_at(start, ParseErrorCode::type_mismatch, "insert expects a relation or custom fact");
      out.push_back(InsertAction{std::move(e)});
      return;
    }
    if (is_ident("delete") || is_ident("retract") || is_ident("update")) {
      const bool update = peek().text == "update";
      next();
      expect_punct("(");
      if (peek().kind != Tok::variable) fail_expected({"fact variable"});
      const Token& var_tok = next();
      expect_punct(")");
      skip_semicolon();
      auto it = vars_.find(var_tok.text);
      if (it == vars_.end())
        fail_at(var_tok, ParseErrorCode::unbound_variable,
                "variable '$" + var_tok.text + "' is not bound");
      if (!it->second.is_fact)
        fail_at(var_tok, ParseErrorCode::type_mismatch,
                "'$" + var_tok.text + "' is not bound to a fact");
      out.push_back(DeleteAction{var_tok.text});
      if (update) {
        if (it->second.type.type != ValueType::fact)
          fail_at(var_tok, ParseErrorCode::type_mismatch, "entities cannot be updated");
        Expr e;
        e.op = Expr::Op::var;
        e.name = var_tok.text;
        out.push_back(InsertAction{std::move(e)});
      }
      return;
    }
    if (is_ident("pars") && is_punct(".", 1)) {
      next();
      next();
      expect_ident("add");
      expect_punct("(");
      expect_ident("new");
      expect_ident("Par");
      expect_punct("(");
      CollectParAction a;
      const Token& p_tok = peek();
      a.principal = parse_expr(nullptr);
      if (!(type_of(p_tok, a.principal, nullptr) == TypeRef::of(EntityKind::principal)))
        fail_at(p_tok, ParseErrorCode::type_mismatch, "Par principal must be a Principal");
      expect_punct(",");
      expect_ident("categories");
      expect_punct(".");
      if (is_ident("getPermissionChain")) a.chain = ChainFunction::permission;
      else if (is_ident("getProhibitionChain")) a.chain = ChainFunction::prohibition;
      else fail_expected({"'getPermissionChain'", "'getProhibitionChain'"});
      const Token& chain_tok = next();
      expect_punct("(");
      a.chain_from = parse_expr(nullptr);
      expect_punct(",");
      a.chain_to = parse_expr(nullptr);
      expect_punct(")");
      require_category_arg(chain_tok, a.chain_from, nullptr);
      require_category_arg(chain_tok, a.chain_to, nullptr);
      expect_punct(",");
      const Token& perm_tok = peek();
      a.permission = parse_expr(nullptr);
      if (!(type_of(perm_tok, a.permission, nullptr) == TypeRef::permission()))
        fail_at(perm_tok, ParseErrorCode::type_mismatch, "Par permission must be a Permission");
      expect_punct(")");
      expect_punct(")");
      skip_semicolon();
      out.push_back(std::move(a));
      return;
    }
    fail_expected({"'insert'", "'delete'", "'update'", "'pars.add'", "'end'"});
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  const FactSchema& schema_;
  std::map<std::string, VarInfo> vars_;
};

// ---------------------------------------------------------------------------
// Printer

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string join_path(const std::vector<std::string>& path) {
  std::string out;
  for (const auto& seg : path) out += (out.empty() ? "" : ".") + seg;
  return out;
}

inline std::string print_expr(const Expr& e) {
  switch (e.op) {
    case Expr::Op::literal:
      if (auto b = std::get_if<bool>(&e.literal)) return *b ? "Boolean.TRUE" : "Boolean.FALSE";
      return quote(std::get<std::string>(e.literal));
    case Expr::Op::var: {
      std::string out = "$" + e.name;
      for (const auto& seg : e.path) out += "." + seg;
      return out;
    }
    case Expr::Op::field: return join_path(e.path);
    case Expr::Op::category_by_id:
      return "categories.getCategoryById( " + print_expr(e.args.at(0)) + " )";
    case Expr::Op::build_permission:
      return "PermissionFactory.buildPermission( " + print_expr(e.args.at(0)) + ", " +
             print_expr(e.args.at(1)) + " )";
    case Expr::Op::new_fact: {
      std::string out = "new " + e.name + "(";
      for (std::size_t i = 0; i < e.args.size(); ++i)
        out += (i ? ", " : " ") + print_expr(e.args[i]);
      return out + (e.args.empty() ? ")" : " )");
    }
  }
  return {};
}

inline std::string print_constraint(const Constraint& c) {
  if (auto b = std::get_if<FieldBinding>(&c)) return "$" + b->var + " : " + join_path(b->field);
  if (auto cmp = std::get_if<FieldComparison>(&c))
    return join_path(cmp->field) + (cmp->op == CompareOp::eq ? " == " : " != ") +
           print_expr(cmp->operand);
  const auto& call = std::get<BuiltinCall>(c);
  std::string out = "categories." + call.function + "(";
  for (std::size_t i = 0; i < call.args.size(); ++i)
    out += (i ? ", " : " ") + print_expr(call.args[i]);
  return out + " )";
}

inline std::string print_pattern(const Pattern& p, bool negated) {
  std::string out = negated ? "not " : "";
  if (p.binding) out += "$" + *p.binding + " : ";
  out += p.kind + "(";
  for (std::size_t i = 0; i < p.constraints.size(); ++i)
    out += (i ? ", " : " ") + print_constraint(p.constraints[i]);
  return out + (p.constraints.empty() ? ")" : " )");
}

inline std::string print_action(const ActionAst& a) {
  if (auto ins = std::get_if<InsertAction>(&a)) return "insert( " + print_expr(ins->fact) + " );";
  if (auto del = std::get_if<DeleteAction>(&a)) return "delete( $" + del->var + " );";
  const auto& par = std::get<CollectParAction>(a);
  return "pars.add( new Par( " + print_expr(par.principal) + ", categories." +
         (par.chain == ChainFunction::permission ? "getPermissionChain" : "getProhibitionChain") +
         "( " + print_expr(par.chain_from) + ", " + print_expr(par.chain_to) + " ), " +
         print_expr(par.permission) + " ) );";
}

}  // namespace detail

/// Parses a rule source into ASTs in declaration order. Throws RuleParseError.
inline std::vector<RuleAst> parse_rules(std::string_view source,
                                        const FactSchema& schema = FactSchema::builtin()) {
  return detail::Parser(source, schema).parse_all();
}

/// Canonical text; parse_rules(print_rules(r)) == r.
inline std::string print_rules(const std::vector<RuleAst>& rules) {
  std::ostringstream out;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const RuleAst& r = rules[i];
    if (i) out << "\n";
    out << "rule " << detail::quote(r.name) << "\n";
    if (r.salience != 0) out << "    salience " << r.salience << "\n";
    out << "    when\n";
    for (const auto& p : r.patterns) out << "        " << detail::print_pattern(p, false) << "\n";
    for (const auto& p : r.negated_patterns)
      out << "        " << detail::print_pattern(p, true) << "\n";
    out << "    then\n";
    for (const auto& a : r.actions) out << "        " << detail::print_action(a) << "\n";
    out << "end\n";
  }
  return out.str();
}

}  // namespace gacm::rules
