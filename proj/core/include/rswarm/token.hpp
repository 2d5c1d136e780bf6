#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rswarm/source_span.hpp"

namespace rswarm {

enum class TokenKind {
  Identifier,   // varid / conid, including qualified names (Data.List.map)
  Operator,     // symbolic operators plus ( ) [ ] , ` and reserved ops
  Keyword,      // reserved words (module, where, if, ...)
  Literal,      // numeric, string and char literals
  LayoutBrace,  // explicit { } ;
  Comment,      // line and block comments, text preserved verbatim
};

struct Token {
  TokenKind kind;
  std::string text;
  SourceSpan span;
  std::size_t offset = 0;  // byte offset of the first character in the source

  bool is(TokenKind k) const { return kind == k; }
  bool is(TokenKind k, std::string_view t) const { return kind == k && text == t; }
};

/// Lexes Haskell source into concrete tokens. Token texts plus the
/// intervening whitespace reconstruct the input byte for byte; comments are
/// emitted as tokens. Throws UnterminatedString / UnterminatedBlockComment.
std::vector<Token> tokenize(std::string_view source, const std::string& file = "<input>");

/// Rebuilds the source from a token list produced by tokenize(). The gaps
/// between tokens are copied from `source`, so equality with `source` checks
/// that the lexer dropped nothing but whitespace.
std::string reconstruct(std::string_view source, const std::vector<Token>& tokens);

/// True if the file uses CPP directives (#if/#ifdef/...); such files are
/// unsupported and skipped by snapshot loading.
bool uses_cpp(std::string_view source);

}  // namespace rswarm
