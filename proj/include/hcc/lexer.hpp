#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace hcc {

enum class TokenKind { identifier, keyword, integer, floating, string, op };

struct LexToken {
  TokenKind kind;
  std::string text;
  std::size_t offset;  // byte offset of the first character
};

// Python-flavoured word-level lexer. Comments and whitespace (including
// indentation and line continuations) are dropped; string literals, with any
// prefix letters, are single tokens. Throws LexError on an unterminated
// string literal, reporting the literal's starting byte offset.
std::vector<LexToken> lex(std::string_view source);

// Token texts of lex(source).
std::vector<std::string> tokenize_code(std::string_view source);

bool is_python_keyword(std::string_view word) noexcept;

}  // namespace hcc
