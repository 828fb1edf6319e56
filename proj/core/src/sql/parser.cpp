#include <cctype>
#include <set>

#include "viewguard/errors.hpp"
#include "viewguard/sql/ast.hpp"

namespace viewguard::sql {
namespace {

enum class Tok { Ident, QuotedIdent, Number, String, Symbol, Placeholder, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;  // identifiers keep their spelling; symbols are the operator
  std::size_t pos = 0;
};

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto err = [&](const std::string& msg) { throw SyntaxError(msg + " at offset " + std::to_string(i)); };
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < s.size() && s[i + 1] == '-') {
      while (i < s.size() && s[i] != '\n') ++i;
      continue;
    }
    Token t;
    t.pos = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      t.kind = Tok::Ident;
      t.text = std::string(s.substr(i, j - i));
      i = j;
    } else if (c == '"' || c == '`') {
      std::size_t j = i + 1;
      while (j < s.size() && s[j] != c) ++j;
      if (j >= s.size()) err("unterminated quoted identifier");
      t.kind = Tok::QuotedIdent;
      t.text = std::string(s.substr(i + 1, j - i - 1));
      i = j + 1;
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '-' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t j = i + 1;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j < s.size() && s[j] == '.') err("decimal literals are not supported");
      t.kind = Tok::Number;
      t.text = std::string(s.substr(i, j - i));
      i = j;
    } else if (c == '\'') {
      std::string v;
      std::size_t j = i + 1;
      for (;;) {
        if (j >= s.size()) err("unterminated string literal");
        if (s[j] == '\'') {
          if (j + 1 < s.size() && s[j + 1] == '\'') {
            v += '\'';
            j += 2;
            continue;
          }
          break;
        }
        v += s[j++];
      }
      t.kind = Tok::String;
      t.text = v;
      i = j + 1;
    } else if (c == '?') {
      std::size_t j = i + 1;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      t.kind = Tok::Placeholder;
      t.text = std::string(s.substr(i + 1, j - i - 1));
      i = j;
    } else {
      static const char* two[] = {"<>", "!=", "<=", ">="};
      bool matched = false;
      for (const char* op : two) {
        if (s.substr(i, 2) == op) {
          t.kind = Tok::Symbol;
          t.text = op;
          i += 2;
          matched = true;
          break;
        }
      }
      if (!matched) {
        if (std::string_view("(),.*=<>;").find(c) == std::string_view::npos)
          err(std::string("unexpected character '") + c + "'");
        t.kind = Tok::Symbol;
        t.text = std::string(1, c);
        ++i;
      }
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.pos = s.size();
  out.push_back(end);
  return out;
}

const std::set<std::string>& reserved() {
  static const std::set<std::string> words = {
      "SELECT", "FROM",  "WHERE", "AND",    "OR",    "NOT",   "IN",     "IS",    "NULL",     "TRUE",
      "FALSE",  "JOIN",  "INNER", "LEFT",   "RIGHT", "FULL",  "OUTER",  "CROSS", "ON",       "ORDER",
      "BY",     "LIMIT", "UNION", "GROUP",  "HAVING", "AS",   "DISTINCT", "ASC", "DESC",     "EXISTS",
      "ANY",    "ALL",   "SOME",  "OFFSET", "EXCEPT", "MINUS", "INTERSECT", "LIKE", "BETWEEN"};
  return words;
}

class Parser {
 public:
  Parser(std::string_view sql, const std::vector<Value>& params, const ParseOptions& opts)
      : toks_(lex(sql)), params_(params), opts_(opts) {}

  Query parse_all() {
    Query q = query();
    accept_symbol(";");
    if (peek().kind != Tok::End) fail("unexpected trailing input '" + peek().text + "'");
    if (next_param_ != params_.size())
      throw ParseError("query has " + std::to_string(next_param_) + " placeholders but " +
                       std::to_string(params_.size()) + " parameters were supplied");
    return q;
  }

 private:
  std::vector<Token> toks_;
  std::size_t at_ = 0;
  const std::vector<Value>& params_;
  const ParseOptions& opts_;
  std::size_t next_param_ = 0;

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(at_ + k, toks_.size() - 1)]; }
  const Token& advance() { return toks_[at_ < toks_.size() - 1 ? at_++ : at_]; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw SyntaxError(msg + " at offset " + std::to_string(peek().pos));
  }
  [[noreturn]] void unsupported(const std::string& what) const {
    throw UnsupportedFeature(what + " is not supported");
  }

  bool is_kw(const Token& t, std::string_view kw) const { return t.kind == Tok::Ident && upper(t.text) == kw; }
  bool at_kw(std::string_view kw, std::size_t k = 0) const { return is_kw(peek(k), kw); }
  bool accept_kw(std::string_view kw) {
    if (!at_kw(kw)) return false;
    advance();
    return true;
  }
  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) fail("expected " + std::string(kw));
  }
  bool at_symbol(std::string_view s, std::size_t k = 0) const {
    return peek(k).kind == Tok::Symbol && peek(k).text == s;
  }
  bool accept_symbol(std::string_view s) {
    if (!at_symbol(s)) return false;
    advance();
    return true;
  }
  void expect_symbol(std::string_view s) {
    if (!accept_symbol(s)) fail("expected '" + std::string(s) + "'");
  }

  bool at_identifier() const {
    const auto& t = peek();
    if (t.kind == Tok::QuotedIdent) return true;
    return t.kind == Tok::Ident && !reserved().count(upper(t.text));
  }
  std::string identifier() {
    if (!at_identifier()) fail("expected identifier");
    return advance().text;
  }

  void check_unsupported_clause() {
    if (at_kw("GROUP")) unsupported("GROUP BY");
    if (at_kw("HAVING")) unsupported("HAVING");
    if (at_kw("EXCEPT") || at_kw("MINUS")) unsupported("EXCEPT/MINUS");
    if (at_kw("INTERSECT")) unsupported("INTERSECT");
    if (at_kw("OFFSET")) unsupported("OFFSET");
  }

  Query query() {
    Query q;
    q.selects.push_back(select());
    while (accept_kw("UNION")) {
      if (at_kw("ALL")) unsupported("UNION ALL");
      accept_kw("DISTINCT");
      q.selects.push_back(select());
    }
    check_unsupported_clause();
    if (accept_kw("ORDER")) {
      expect_kw("BY");
      do {
        q.order_by.push_back(column_name());
        if (!accept_kw("ASC")) accept_kw("DESC");
      } while (accept_symbol(","));
    }
    if (accept_kw("LIMIT")) {
      if (peek().kind != Tok::Number) fail("expected LIMIT count");
      q.limit = std::stoll(advance().text);
      if (*q.limit < 0) fail("negative LIMIT");
    }
    check_unsupported_clause();
    return q;
  }

  Select select() {
    Select s;
    expect_kw("SELECT");
    if (accept_kw("DISTINCT")) s.distinct = true;
    else accept_kw("ALL");
    do {
      s.items.push_back(select_item());
    } while (accept_symbol(","));
    expect_kw("FROM");
    s.from.push_back(table_ref(TableRef::Join::Comma));
    for (;;) {
      if (accept_symbol(",")) {
        s.from.push_back(table_ref(TableRef::Join::Comma));
      } else if (at_kw("JOIN") || at_kw("INNER")) {
        accept_kw("INNER");
        expect_kw("JOIN");
        auto t = table_ref(TableRef::Join::Inner);
        expect_kw("ON");
        t.on = condition();
        s.from.push_back(std::move(t));
      } else if (at_kw("LEFT")) {
        advance();
        accept_kw("OUTER");
        expect_kw("JOIN");
        auto t = table_ref(TableRef::Join::Left);
        expect_kw("ON");
        t.on = condition();
        s.from.push_back(std::move(t));
      } else if (at_kw("RIGHT") || at_kw("FULL") || at_kw("CROSS")) {
        unsupported(upper(peek().text) + " JOIN");
      } else {
        break;
      }
    }
    if (accept_kw("WHERE")) s.where = condition();
    check_unsupported_clause();
    return s;
  }

  SelectItem select_item() {
    SelectItem it;
    if (accept_symbol("*")) {
      it.kind = SelectItem::Kind::Star;
      return it;
    }
    if (peek().kind == Tok::Ident && at_symbol("(", 1)) {
      std::string fn = upper(peek().text);
      if (fn != "SUM") unsupported("aggregate " + fn);
      advance();
      advance();
      if (at_kw("DISTINCT")) unsupported("SUM(DISTINCT ...)");
      it.kind = SelectItem::Kind::Sum;
      it.column = column_name();
      expect_symbol(")");
      skip_alias();
      return it;
    }
    if (at_identifier() && at_symbol(".", 1) && at_symbol("*", 2)) {
      it.kind = SelectItem::Kind::TableStar;
      it.qualifier = identifier();
      advance();
      advance();
      return it;
    }
    it.kind = SelectItem::Kind::Column;
    it.column = column_name();
    skip_alias();
    return it;
  }

  void skip_alias() {
    if (accept_kw("AS")) {
      identifier();
    }
  }

  TableRef table_ref(TableRef::Join join) {
    TableRef t;
    t.join = join;
    if (at_symbol("(")) unsupported("derived tables");
    t.table = identifier();
    if (accept_kw("AS")) t.alias = identifier();
    else if (at_identifier()) t.alias = identifier();
    return t;
  }

  ColumnName column_name() {
    ColumnName c;
    c.name = identifier();
    if (accept_symbol(".")) {
      c.qualifier = c.name;
      c.name = identifier();
    }
    return c;
  }

  Condition condition() {
    std::vector<Condition> parts{conjunction()};
    while (accept_kw("OR")) parts.push_back(conjunction());
    if (parts.size() == 1) return std::move(parts.front());
    Condition c;
    c.kind = Condition::Kind::Or;
    c.children = std::move(parts);
    return c;
  }

  Condition conjunction() {
    std::vector<Condition> parts{atom()};
    while (accept_kw("AND")) parts.push_back(atom());
    if (parts.size() == 1) return std::move(parts.front());
    Condition c;
    c.kind = Condition::Kind::And;
    c.children = std::move(parts);
    return c;
  }

  bool comparison_follows(std::size_t k) const {
    const auto& t = peek(k);
    if (t.kind == Tok::Symbol)
      return t.text == "=" || t.text == "<>" || t.text == "!=" || t.text == "<" || t.text == ">" || t.text == "<=" ||
             t.text == ">=";
    return is_kw(t, "IN") || is_kw(t, "IS") || is_kw(t, "NOT") || is_kw(t, "LIKE") || is_kw(t, "BETWEEN");
  }

  Condition atom() {
    if (at_kw("NOT")) unsupported("NOT");
    if (at_kw("EXISTS")) unsupported("EXISTS");
    if (accept_symbol("(")) {
      if (at_kw("SELECT")) unsupported("scalar subqueries");
      Condition c = condition();
      expect_symbol(")");
      return c;
    }
    if ((at_kw("TRUE") || at_kw("FALSE")) && !comparison_follows(1)) {
      Condition c;
      c.kind = advance().text.size() == 4 ? Condition::Kind::True : Condition::Kind::False;
      return c;
    }
    Operand lhs = operand();
    Condition c;
    if (peek().kind == Tok::Symbol && comparison_follows(0)) {
      std::string op = advance().text;
      c.kind = Condition::Kind::Cmp;
      if (op == "=") c.op = CmpOp::Eq;
      else if (op == "<>" || op == "!=") c.op = CmpOp::Ne;
      else if (op == "<") c.op = CmpOp::Lt;
      else if (op == "<=") c.op = CmpOp::Le;
      else if (op == ">") c.op = CmpOp::Gt;
      else c.op = CmpOp::Ge;
      if (at_kw("ANY") || at_kw("SOME") || at_kw("ALL")) unsupported("ANY/ALL comparisons");
      c.operands = {std::move(lhs), operand()};
      return c;
    }
    if (accept_kw("IS")) {
      bool neg = accept_kw("NOT");
      expect_kw("NULL");
      c.kind = neg ? Condition::Kind::IsNotNull : Condition::Kind::IsNull;
      c.operands = {std::move(lhs)};
      return c;
    }
    bool negated = accept_kw("NOT");
    if (at_kw("LIKE")) unsupported("LIKE");
    if (at_kw("BETWEEN")) unsupported("BETWEEN");
    expect_kw("IN");
    expect_symbol("(");
    if (at_kw("SELECT")) {
      if (negated || !opts_.allow_in_subquery) unsupported("subquery inside IN");
      c.kind = Condition::Kind::InSubquery;
      c.operands = {std::move(lhs)};
      c.subquery = std::make_shared<Query>(query());
      expect_symbol(")");
      return c;
    }
    c.kind = negated ? Condition::Kind::NotIn : Condition::Kind::In;
    c.operands.push_back(std::move(lhs));
    do {
      c.operands.push_back(operand());
    } while (accept_symbol(","));
    expect_symbol(")");
    return c;
  }

  Operand operand() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number: {
        advance();
        try {
          return Value::of_int(std::stoll(t.text));
        } catch (const std::out_of_range&) {
          fail("integer literal out of range");
        }
      }
      case Tok::String: advance(); return Value::of_string(t.text);
      case Tok::Placeholder: {
        advance();
        if (t.text.empty()) {
          if (next_param_ >= params_.size()) throw ParseError("not enough parameters for placeholders");
          return params_[next_param_++];
        }
        if (std::isdigit(static_cast<unsigned char>(t.text[0]))) {
          if (!opts_.template_syntax) fail("numbered placeholders are only valid in templates");
          return VarName{std::stoi(t.text)};
        }
        return ParamName{t.text};
      }
      case Tok::Symbol:
        if (t.text == "*" && opts_.template_syntax) {
          advance();
          return VarName{-1};
        }
        if (t.text == "(") unsupported("parenthesized expressions");
        fail("expected operand");
      case Tok::Ident:
        if (is_kw(t, "NULL")) {
          advance();
          return Value::null(ColumnType::Int);
        }
        if (is_kw(t, "TRUE") || is_kw(t, "FALSE")) {
          bool v = is_kw(t, "TRUE");
          advance();
          return Value::of_bool(v);
        }
        if (at_symbol("(", 1)) unsupported("function call '" + t.text + "'");
        return column_name();
      case Tok::QuotedIdent: return column_name();
      case Tok::End: fail("unexpected end of input");
    }
    fail("expected operand");
  }
};

}  // namespace

Query parse(std::string_view sql, const std::vector<Value>& params, const ParseOptions& opts) {
  Parser p(sql, params, opts);
  return p.parse_all();
}

}  // namespace viewguard::sql
