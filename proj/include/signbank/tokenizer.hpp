#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "signbank/fsw.hpp"

namespace signbank::tokens {

class MalformedTokenStream : public std::runtime_error {
 public:
  MalformedTokenStream(const std::string& message, std::size_t position);
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class UnknownToken : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TokenKind { box, symbol_base, fill, rotation, position };

// Surface forms: B/L/M/R, S100..S38f, c0..c5, r0..rf, p250..p749.
class Token {
 public:
  /// Throws UnknownToken if `text` is not a legal surface form.
  static Token parse(std::string_view text);

  static Token box(fsw::Box box);
  static Token symbol_base(std::uint16_t base);
  static Token fill(int fill);
  static Token rotation(int rotation);
  static Token position(int value);

  TokenKind kind() const noexcept { return kind_; }
  const std::string& text() const noexcept { return text_; }
  /// Numeric payload: box char, base, fill, rotation or coordinate.
  int value() const noexcept { return value_; }

  friend bool operator==(const Token& a, const Token& b) { return a.text_ == b.text_; }

 private:
  Token(TokenKind kind, std::string text, int value)
      : kind_(kind), text_(std::move(text)), value_(value) {}

  TokenKind kind_;
  std::string text_;
  int value_;
};

inline constexpr std::size_t kBoxCount = 4;
inline constexpr std::size_t kSymbolBaseCount = fsw::kMaxBase - fsw::kMinBase + 1;
inline constexpr std::size_t kFillCount = fsw::kMaxFill + 1;
inline constexpr std::size_t kRotationCount = fsw::kMaxRotation + 1;
inline constexpr std::size_t kPositionCount = fsw::kMaxCoordinate - fsw::kMinCoordinate + 1;
inline constexpr std::size_t kVocabularySize =
    kBoxCount + kSymbolBaseCount + kFillCount + kRotationCount + kPositionCount;

class TokenVocabulary {
 public:
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  bool contains(std::string_view text) const;
  /// Throws UnknownToken.
  std::int32_t id(std::string_view text) const;
  const std::string& text(std::int32_t id) const;

 private:
  friend TokenVocabulary build_vocabulary();

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

/// Order: boxes B,L,M,R; symbol bases ascending; fills; rotations; positions ascending.
TokenVocabulary build_vocabulary();

/// Shared immutable instance.
const TokenVocabulary& vocabulary();

/// Sort prefixes are dropped; punctuation items emit S/c/r/p/p with no box.
std::vector<Token> tokenize(const fsw::FswSequence& sequence);
std::vector<Token> tokenize(const fsw::FswSign& sign);

/// A punctuation-range base directly following a sign starts a standalone item.
fsw::FswSequence detokenize(std::span<const Token> tokens);

std::vector<std::int32_t> encode_ids(std::span<const Token> tokens,
                                     const TokenVocabulary& vocab = vocabulary());
std::vector<Token> decode_ids(std::span<const std::int32_t> ids,
                              const TokenVocabulary& vocab = vocabulary());

/// Space-joined. With `pretty`, each box or symbol base after the first starts a new line.
std::string format_tokens(std::span<const Token> tokens, bool pretty = false);
/// Splits on any whitespace.
std::vector<Token> parse_tokens(std::string_view line);

}  // namespace signbank::tokens
