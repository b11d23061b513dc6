#include "cqlin/parser.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "cqlin/errors.hpp"

namespace cqlin {
namespace {

enum class Tok { Ident, Number, String, LParen, RParen, Comma, Dot, ColonDash, Arrow, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

const char* describe(Tok t) {
  switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::Number: return "number";
    case Tok::String: return "quoted string";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::Comma: return "','";
    case Tok::Dot: return "'.'";
    case Tok::ColonDash: return "':-'";
    case Tok::Arrow: return "'->'";
    case Tok::End: return "end of input";
  }
  return "?";
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  const Token& peek() const { return current_; }

  Token next() {
    Token t = current_;
    advance();
    return t;
  }

  Token expect(Tok kind) {
    if (current_.kind != kind) {
      throw ParseError(std::string("expected ") + describe(kind) + ", found " + found(), current_.line,
                       current_.column);
    }
    return next();
  }

  std::string found() const {
    return current_.kind == Tok::End ? std::string(describe(Tok::End)) : "'" + current_.text + "'";
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(message, current_.line, current_.column);
  }

 private:
  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') bump();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        bump();
      } else {
        break;
      }
    }
  }

  void bump() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void advance() {
    skip_space();
    current_ = Token{Tok::End, "", line_, column_};
    if (pos_ >= text_.size()) return;
    const char c = text_[pos_];
    const std::size_t start = pos_;
    auto single = [&](Tok k) {
      current_.kind = k;
      current_.text = std::string(1, c);
      bump();
    };
    if (c == '(') return single(Tok::LParen);
    if (c == ')') return single(Tok::RParen);
    if (c == ',') return single(Tok::Comma);
    if (c == '.') return single(Tok::Dot);
    if (c == ':' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '-') {
      bump();
      bump();
      current_.kind = Tok::ColonDash;
      current_.text = ":-";
      return;
    }
    if (c == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
      bump();
      bump();
      current_.kind = Tok::Arrow;
      current_.text = "->";
      return;
    }
    if (c == '"') {
      bump();
      std::string s;
      while (pos_ < text_.size() && text_[pos_] != '"') {
        if (text_[pos_] == '\n') throw ParseError("unterminated string", current_.line, current_.column);
        if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) bump();
        s += text_[pos_];
        bump();
      }
      if (pos_ >= text_.size()) throw ParseError("unterminated string", current_.line, current_.column);
      bump();
      current_.kind = Tok::String;
      current_.text = std::move(s);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && pos_ + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
      bump();
      while (pos_ < text_.size() && ident_char(text_[pos_])) bump();
      current_.kind = Tok::Number;
      current_.text = std::string(text_.substr(start, pos_ - start));
      return;
    }
    if (ident_start(c)) {
      while (pos_ < text_.size() && ident_char(text_[pos_])) bump();
      current_.kind = Tok::Ident;
      current_.text = std::string(text_.substr(start, pos_ - start));
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line_, column_);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
  Token current_{Tok::End, "", 1, 1};
};

bool is_variable_name(const std::string& s) {
  return !s.empty() && (std::islower(static_cast<unsigned char>(s[0])) || s[0] == '_');
}

class RuleParser {
 public:
  explicit RuleParser(std::string_view text) : lex_(text) {}

  Lexer& lexer() { return lex_; }

  Symbol relation_name() {
    const Token t = lex_.peek();
    if (t.kind != Tok::Ident) lex_.fail(std::string("expected relation name, found ") + lex_.found());
    if (t.text == guard_relation().name()) lex_.fail("relation name " + t.text + " is reserved");
    lex_.next();
    return Symbol(t.text);
  }

  Symbol variable() {
    const Token t = lex_.peek();
    if (t.kind != Tok::Ident || !is_variable_name(t.text)) {
      lex_.fail("expected a variable (lowercase identifier), found " + lex_.found() +
                "; constants are not allowed in rules");
    }
    lex_.next();
    return Symbol(t.text);
  }

  std::vector<Symbol> variable_list() {
    std::vector<Symbol> out;
    lex_.expect(Tok::LParen);
    if (lex_.peek().kind != Tok::RParen) {
      out.push_back(variable());
      while (lex_.peek().kind == Tok::Comma) {
        lex_.next();
        out.push_back(variable());
      }
    }
    lex_.expect(Tok::RParen);
    return out;
  }

  Atom atom() {
    const Token at = lex_.peek();
    Atom a{relation_name(), variable_list()};
    record_arity(a.relation, a.args.size(), at);
    return a;
  }

  // `true` or a non-empty atom list.
  std::vector<Atom> conjunction(bool allow_true) {
    std::vector<Atom> out;
    if (allow_true && lex_.peek().kind == Tok::Ident && lex_.peek().text == "true") {
      lex_.next();
      if (lex_.peek().kind == Tok::LParen) lex_.fail("'true' is not a relation name");
      return out;
    }
    out.push_back(atom());
    while (lex_.peek().kind == Tok::Comma) {
      lex_.next();
      out.push_back(atom());
    }
    return out;
  }

 private:
  void record_arity(Symbol rel, std::size_t arity, const Token& at) {
    auto [it, inserted] = arities_.emplace(rel, arity);
    if (!inserted && it->second != arity) {
      throw ArityError(rel.name() + " (line " + std::to_string(at.line) + ", column " + std::to_string(at.column) +
                           ")",
                       it->second, arity);
    }
  }

  Lexer lex_;
  std::map<Symbol, std::size_t> arities_;
};

}  // namespace

ConjunctiveQuery parse_query(std::string_view text) {
  RuleParser p(text);
  Lexer& lex = p.lexer();
  const Token head = lex.peek();
  if (head.kind != Tok::Ident) lex.fail("expected query head, found " + lex.found());
  lex.next();
  std::vector<Symbol> answers = p.variable_list();
  lex.expect(Tok::ColonDash);
  std::vector<Atom> body = p.conjunction(true);
  const Token dot = lex.peek();
  lex.expect(Tok::Dot);
  if (lex.peek().kind != Tok::End) lex.fail("expected end of query file after the rule, found " + lex.found());
  try {
    return ConjunctiveQuery(std::move(answers), std::move(body), Symbol(head.text));
  } catch (const DomainError& e) {
    throw ParseError(e.what(), head.line, head.column);
  }
}

TgdSet parse_tgds(std::string_view text) {
  RuleParser p(text);
  Lexer& lex = p.lexer();
  TgdSet out;
  while (lex.peek().kind != Tok::End) {
    Tgd t;
    t.body = p.conjunction(true);
    lex.expect(Tok::Arrow);
    t.head = p.conjunction(false);
    lex.expect(Tok::Dot);
    out.push_back(std::move(t));
  }
  return out;
}

Database parse_database(std::string_view text) {
  Lexer lex(text);
  Database db;
  Tuple args;
  while (lex.peek().kind != Tok::End) {
    const Token rel = lex.peek();
    if (rel.kind != Tok::Ident) lex.fail("expected relation name, found " + lex.found());
    if (rel.text == guard_relation().name()) lex.fail("relation name " + rel.text + " is reserved");
    lex.next();
    lex.expect(Tok::LParen);
    args.clear();
    if (lex.peek().kind != Tok::RParen) {
      while (true) {
        const Token c = lex.peek();
        if (c.kind != Tok::Ident && c.kind != Tok::Number && c.kind != Tok::String) {
          lex.fail("expected a constant, found " + lex.found());
        }
        lex.next();
        args.push_back(constant(c.text));
        if (lex.peek().kind != Tok::Comma) break;
        lex.next();
      }
    }
    lex.expect(Tok::RParen);
    lex.expect(Tok::Dot);
    const Symbol r(rel.text);
    if (auto a = db.arity(r); a && *a != args.size()) {
      throw ArityError(rel.text + " (line " + std::to_string(rel.line) + ", column " + std::to_string(rel.column) +
                           ")",
                       *a, args.size());
    }
    db.add_fact(r, args);
  }
  return db;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

}  // namespace

Database load_database(const std::filesystem::path& path) {
  if (!std::filesystem::is_directory(path)) return parse_database(read_file(path));
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  Database db;
  for (const auto& file : files) {
    const Symbol rel(file.stem().string());
    std::istringstream in(read_file(file));
    std::string line;
    std::size_t line_no = 0;
    Tuple args;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      args.clear();
      std::stringstream fields(line);
      std::string field;
      while (std::getline(fields, field, ',')) args.push_back(constant(trim(field)));
      if (auto a = db.arity(rel); a && *a != args.size()) {
        throw ArityError(rel.name() + " (" + file.filename().string() + " line " + std::to_string(line_no) + ")", *a,
                         args.size());
      }
      db.add_fact(rel, args);
    }
  }
  return db;
}

void check_schema(const ConjunctiveQuery& q, const TgdSet& tgds, const Database* db) {
  std::map<Symbol, std::size_t> arity;
  auto note = [&](const Atom& a) {
    auto [it, inserted] = arity.emplace(a.relation, a.args.size());
    if (!inserted && it->second != a.args.size()) throw ArityError(a.relation.name(), it->second, a.args.size());
  };
  for (const Atom& a : q.atoms()) note(a);
  for (const Tgd& t : tgds) {
    for (const Atom& a : t.body) note(a);
    for (const Atom& a : t.head) note(a);
  }
  if (db) {
    for (Symbol rel : db->relations()) {
      auto it = arity.find(rel);
      if (it != arity.end() && it->second != *db->arity(rel)) throw ArityError(rel.name(), it->second, *db->arity(rel));
    }
  }
}

std::string render_constant(Value v) {
  const std::string& text = render(v);
  const bool bare = !text.empty() && std::all_of(text.begin(), text.end(), ident_char);
  if (bare) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string to_string(const Fact& fact) {
  std::string out = fact.relation.name() + "(";
  for (std::size_t i = 0; i < fact.args.size(); ++i) {
    if (i) out += ",";
    out += render_constant(fact.args[i]);
  }
  return out + ").";
}

std::string to_string(const Database& db) {
  std::string out;
  for (const Fact& f : db.facts()) out += to_string(f) + "\n";
  return out;
}

}  // namespace cqlin
