#include "hcc/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "hcc/errors.hpp"

namespace hcc {

namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",    "and",      "as",       "assert", "async",
    "await", "break",  "class",   "continue", "def",      "del",    "elif",
    "else",  "except", "finally", "for",      "from",     "global", "if",
    "import", "in",    "is",      "lambda",   "nonlocal", "not",    "or",
    "pass",  "raise",  "return",  "try",      "while",    "with",   "yield"};

constexpr std::array<std::string_view, 5> kThreeCharOps = {"**=", "//=", ">>=", "<<=", "..."};
constexpr std::array<std::string_view, 19> kTwoCharOps = {
    "->", ":=", "**", "//", "==", "!=", "<=", ">=", "<<", ">>",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@="};

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_string_prefix(std::string_view word) {
  if (word.size() > 2) return false;
  std::string lower;
  for (char c : word) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return lower == "r" || lower == "u" || lower == "b" || lower == "f" || lower == "br" ||
         lower == "rb" || lower == "fr" || lower == "rf";
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<LexToken> run() {
    std::vector<LexToken> out;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == '\\' && pos_ + 1 < src_.size() &&
                 (src_[pos_ + 1] == '\n' || src_[pos_ + 1] == '\r')) {
        pos_ += 2;  // explicit line continuation
      } else if (c == '"' || c == '\'') {
        out.push_back(read_string(pos_));
      } else if (is_ident_start(static_cast<unsigned char>(c))) {
        out.push_back(read_word());
      } else if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
        out.push_back(read_number());
      } else {
        out.push_back(read_operator());
      }
    }
    return out;
  }

 private:
  LexToken read_word() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && is_ident_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const std::string_view word = src_.substr(start, pos_ - start);
    if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'') && is_string_prefix(word)) {
      return read_string(start);
    }
    const TokenKind kind = is_python_keyword(word) ? TokenKind::keyword : TokenKind::identifier;
    return {kind, std::string(word), start};
  }

  // `start` is the offset of the prefix (or the quote when unprefixed);
  // pos_ points at the opening quote.
  LexToken read_string(std::size_t start) {
    const char quote = src_[pos_];
    const bool triple = pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote;
    pos_ += triple ? 3 : 1;
    while (true) {
      if (pos_ >= src_.size()) throw LexError("unterminated string literal", start);
      const char c = src_[pos_];
      if (c == '\\') {
        pos_ += 2;
        continue;
      }
      if (!triple && c == '\n') throw LexError("unterminated string literal", start);
      if (c == quote) {
        if (!triple) {
          ++pos_;
          break;
        }
        if (pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote) {
          pos_ += 3;
          break;
        }
      }
      ++pos_;
    }
    return {TokenKind::string, std::string(src_.substr(start, pos_ - start)), start};
  }

  LexToken read_number() {
    const std::size_t start = pos_;
    bool floating = false;
    auto digits = [this] {
      while (pos_ < src_.size() && (is_digit(src_[pos_]) || src_[pos_] == '_')) ++pos_;
    };
    if (src_[pos_] == '0' && pos_ + 1 < src_.size() &&
        std::string_view("xXoObB").find(src_[pos_ + 1]) != std::string_view::npos) {
      pos_ += 2;
      while (pos_ < src_.size() && (std::isxdigit(static_cast<unsigned char>(src_[pos_])) ||
                                    src_[pos_] == '_')) {
        ++pos_;
      }
      return {TokenKind::integer, std::string(src_.substr(start, pos_ - start)), start};
    }
    digits();
    if (pos_ < src_.size() && src_[pos_] == '.' &&
        !(pos_ + 1 < src_.size() && src_[pos_ + 1] == '.')) {
      floating = true;
      ++pos_;
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (look < src_.size() && is_digit(src_[look])) {
        floating = true;
        pos_ = look;
        digits();
      }
    }
    if (pos_ < src_.size() && (src_[pos_] == 'j' || src_[pos_] == 'J')) {
      floating = true;
      ++pos_;
    }
    return {floating ? TokenKind::floating : TokenKind::integer,
            std::string(src_.substr(start, pos_ - start)), start};
  }

  LexToken read_operator() {
    const std::size_t start = pos_;
    const std::string_view rest = src_.substr(pos_);
    for (auto op : kThreeCharOps) {
      if (rest.starts_with(op)) {
        pos_ += 3;
        return {TokenKind::op, std::string(op), start};
      }
    }
    for (auto op : kTwoCharOps) {
      if (rest.starts_with(op)) {
        pos_ += 2;
        return {TokenKind::op, std::string(op), start};
      }
    }
    ++pos_;
    return {TokenKind::op, std::string(1, src_[start]), start};
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace

bool is_python_keyword(std::string_view word) noexcept {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

std::vector<LexToken> lex(std::string_view source) { return Lexer(source).run(); }

std::vector<std::string> tokenize_code(std::string_view source) {
  std::vector<std::string> out;
  for (auto& t : lex(source)) out.push_back(std::move(t.text));
  return out;
}

}  // namespace hcc
