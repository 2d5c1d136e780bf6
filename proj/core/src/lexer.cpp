#include "rswarm/token.hpp"

#include <cctype>

#include "rswarm/errors.hpp"

namespace rswarm {

namespace {

bool is_symbol_char(char c) {
  switch (c) {
    case '!': case '#': case '$': case '%': case '&': case '*': case '+':
    case '.': case '/': case '<': case '=': case '>': case '?': case '@':
    case '\\': case '^': case '|': case '-': case '~': case ':':
      return true;
    default:
      return false;
  }
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

bool is_reserved_word(std::string_view s) {
  static const char* words[] = {
      "case", "class", "data", "default", "deriving", "do", "else", "foreign",
      "if", "import", "in", "infix", "infixl", "infixr", "instance", "let",
      "module", "newtype", "of", "then", "type", "where", "_",
  };
  for (const char* w : words) {
    if (s == w) return true;
  }
  return false;
}

class Lexer {
 public:
  Lexer(std::string_view source, std::string file)
      : src_(source), file_(std::move(file)) {}

  std::vector<Token> run() {
    std::vector<Token> tokens;
    while (!at_end()) {
      skip_whitespace();
      if (at_end()) break;
      tokens.push_back(next_token());
    }
    return tokens;
  }

 private:
  bool at_end() const { return pos_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  void advance() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else if (c == '\t') {
      col_ = ((col_ - 1) / 8 + 1) * 8 + 1;
    } else {
      ++col_;
    }
  }

  void skip_whitespace() {
    while (!at_end()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
        advance();
      } else {
        break;
      }
    }
  }

  SourceSpan span_here() const {
    SourceSpan s;
    s.file = file_;
    s.start_line = s.end_line = line_;
    s.start_col = s.end_col = col_;
    return s;
  }

  Token make(TokenKind kind, std::size_t start, SourceSpan span) {
    span.end_line = line_;
    span.end_col = col_;
    Token t;
    t.kind = kind;
    t.text = std::string(src_.substr(start, pos_ - start));
    t.span = std::move(span);
    t.offset = start;
    return t;
  }

  Token next_token() {
    const std::size_t start = pos_;
    SourceSpan span = span_here();
    char c = peek();

    // Line comments: two or more dashes not followed by a symbol char.
    if (c == '-' && peek(1) == '-') {
      std::size_t dashes = 0;
      while (peek(dashes) == '-') ++dashes;
      if (!is_symbol_char(peek(dashes))) {
        while (!at_end() && peek() != '\n') advance();
        return make(TokenKind::Comment, start, span);
      }
    }

    if (c == '{' && peek(1) == '-') return block_comment(start, span);

    if (c == '"') return string_literal(start, span);

    if (c == '\'') {
      Token t;
      if (char_literal(start, span, t)) return t;
      // Lone apostrophe: fall through as an operator-ish token.
      advance();
      return make(TokenKind::Operator, start, span);
    }

    if (std::isdigit(static_cast<unsigned char>(c))) return number(start, span);

    if (is_ident_start(c)) return identifier(start, span);

    if (c == '{' || c == '}' || c == ';') {
      advance();
      return make(TokenKind::LayoutBrace, start, span);
    }

    if (c == '(' || c == ')' || c == '[' || c == ']' || c == ',' || c == '`') {
      advance();
      return make(TokenKind::Operator, start, span);
    }

    if (is_symbol_char(c)) {
      while (!at_end() && is_symbol_char(peek())) advance();
      return make(TokenKind::Operator, start, span);
    }

    // Unknown byte (e.g. unicode): emit as a one-byte operator token so the
    // round-trip invariant still holds.
    advance();
    return make(TokenKind::Operator, start, span);
  }

  Token block_comment(std::size_t start, SourceSpan span) {
    advance();  // {
    advance();  // -
    int depth = 1;
    while (depth > 0) {
      if (at_end()) throw UnterminatedBlockComment("unterminated block comment", span);
      if (peek() == '{' && peek(1) == '-') {
        advance();
        advance();
        ++depth;
      } else if (peek() == '-' && peek(1) == '}') {
        advance();
        advance();
        --depth;
      } else {
        advance();
      }
    }
    return make(TokenKind::Comment, start, span);
  }

  Token string_literal(std::size_t start, SourceSpan span) {
    advance();  // opening quote
    while (true) {
      if (at_end() || peek() == '\n') throw UnterminatedString("unterminated string literal", span);
      char c = peek();
      if (c == '\\') {
        advance();
        if (at_end()) throw UnterminatedString("unterminated string literal", span);
        advance();  // escaped char
      } else if (c == '"') {
        advance();
        break;
      } else {
        advance();
      }
    }
    return make(TokenKind::Literal, start, span);
  }

  // Returns false when the quote does not open a well-formed char literal.
  bool char_literal(std::size_t start, SourceSpan span, Token& out) {
    std::size_t i = 1;  // after the quote
    if (peek(i) == '\\') {
      i += 2;
      while (peek(i) != '\'' && peek(i) != '\0' && peek(i) != '\n') ++i;  // \DEL, \123
      if (peek(i) != '\'') return false;
      ++i;
    } else if (peek(i) != '\0' && peek(i) != '\'' && peek(i) != '\n') {
      if (peek(i + 1) != '\'') return false;
      i += 2;
    } else {
      return false;
    }
    for (std::size_t k = 0; k < i; ++k) advance();
    out = make(TokenKind::Literal, start, span);
    return true;
  }

  Token number(std::size_t start, SourceSpan span) {
    if (peek() == '0' && (peek(1) == 'x' || peek(1) == 'X' || peek(1) == 'o' ||
                          peek(1) == 'O' || peek(1) == 'b' || peek(1) == 'B')) {
      advance();
      advance();
      while (!at_end() && std::isalnum(static_cast<unsigned char>(peek()))) advance();
      return make(TokenKind::Literal, start, span);
    }
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) advance();
    if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
      advance();
      while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) advance();
    }
    if (peek() == 'e' || peek() == 'E') {
      std::size_t i = 1;
      if (peek(i) == '+' || peek(i) == '-') ++i;
      if (std::isdigit(static_cast<unsigned char>(peek(i)))) {
        while (i-- > 0) advance();
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) advance();
      }
    }
    return make(TokenKind::Literal, start, span);
  }

  Token identifier(std::size_t start, SourceSpan span) {
    bool upper = std::isupper(static_cast<unsigned char>(peek()));
    advance();
    while (!at_end() && is_ident_char(peek())) advance();
    // Qualified names: an upper-case segment followed by '.' and another
    // identifier start continues the same token (Data.List.map).
    while (upper && peek() == '.' && (is_ident_start(peek(1)) || is_symbol_char(peek(1)))) {
      if (is_ident_start(peek(1))) {
        upper = std::isupper(static_cast<unsigned char>(peek(1)));
        advance();  // dot
        while (!at_end() && is_ident_char(peek())) advance();
      } else {
        break;  // qualified operator (M..&&.) is out of subset; stop at the dot
      }
    }
    std::string_view text = src_.substr(start, pos_ - start);
    TokenKind kind = is_reserved_word(text) ? TokenKind::Keyword : TokenKind::Identifier;
    return make(kind, start, span);
  }

  std::string_view src_;
  std::string file_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace

std::vector<Token> tokenize(std::string_view source, const std::string& file) {
  return Lexer(source, file).run();
}

std::string reconstruct(std::string_view source, const std::vector<Token>& tokens) {
  std::string out;
  out.reserve(source.size());
  std::size_t cursor = 0;
  for (const Token& t : tokens) {
    out.append(source.substr(cursor, t.offset - cursor));
    out.append(t.text);
    cursor = t.offset + t.text.size();
  }
  out.append(source.substr(cursor));
  return out;
}

bool uses_cpp(std::string_view source) {
  std::size_t pos = 0;
  while (pos < source.size()) {
    std::size_t eol = source.find('\n', pos);
    if (eol == std::string_view::npos) eol = source.size();
    std::string_view line = source.substr(pos, eol - pos);
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i < line.size() && line[i] == '#') {
      std::string_view rest = line.substr(i + 1);
      for (std::string_view d : {"if", "ifdef", "ifndef", "define", "include", "else", "endif"}) {
        if (rest.substr(0, d.size()) == d) return true;
      }
    }
    pos = eol + 1;
  }
  return false;
}

}  // namespace rswarm
