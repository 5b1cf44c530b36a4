#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace signbank::fsw {

// Symbol base codes span 0x100..0x38f (656 vocabulary slots); ISWA proper ends at 0x38b.
inline constexpr std::uint16_t kMinBase = 0x100;
inline constexpr std::uint16_t kMaxBase = 0x38f;
inline constexpr std::uint16_t kMaxIswaBase = 0x38b;
inline constexpr std::uint16_t kMinPunctuationBase = 0x387;
inline constexpr std::uint16_t kMaxPunctuationBase = 0x38b;
inline constexpr int kMaxFill = 5;
inline constexpr int kMaxRotation = 15;
inline constexpr int kMinCoordinate = 250;
inline constexpr int kMaxCoordinate = 749;

/// Raised for any FSW text that does not follow the grammar. `offset` is the byte
/// offset inside the offending fragment; `fragment` is its index in a sequence.
class MalformedSign : public std::runtime_error {
 public:
  MalformedSign(const std::string& message, std::size_t offset, std::size_t fragment = 0);

  std::size_t offset() const noexcept { return offset_; }
  std::size_t fragment() const noexcept { return fragment_; }

 private:
  std::size_t offset_;
  std::size_t fragment_;
};

class SymbolId {
 public:
  /// Throws std::invalid_argument when a field is out of range.
  SymbolId(std::uint16_t base, int fill, int rotation);

  std::uint16_t base() const noexcept { return base_; }
  int fill() const noexcept { return fill_; }
  int rotation() const noexcept { return rotation_; }

  bool is_punctuation() const noexcept {
    return base_ >= kMinPunctuationBase && base_ <= kMaxPunctuationBase;
  }
  bool is_iswa() const noexcept { return base_ <= kMaxIswaBase; }

  /// "S" + base + fill + rotation, lowercase hex.
  std::string str() const;

  friend auto operator<=>(const SymbolId&, const SymbolId&) = default;

 private:
  std::uint16_t base_;
  std::uint8_t fill_;
  std::uint8_t rotation_;
};

class Coordinate {
 public:
  Coordinate(int x, int y);

  int x() const noexcept { return x_; }
  int y() const noexcept { return y_; }

  static bool in_range(int v) noexcept { return v >= kMinCoordinate && v <= kMaxCoordinate; }

  /// Always "xxxXyyy" with three digits per axis.
  std::string str() const;

  friend auto operator<=>(const Coordinate&, const Coordinate&) = default;

 private:
  int x_;
  int y_;
};

struct PlacedSymbol {
  SymbolId id;
  Coordinate at;

  std::string str() const;
  friend auto operator<=>(const PlacedSymbol&, const PlacedSymbol&) = default;
};

enum class Box : char { B = 'B', L = 'L', M = 'M', R = 'R' };

struct FswSign {
  std::vector<SymbolId> sort_prefix;
  Box box;
  Coordinate max;
  std::vector<PlacedSymbol> symbols;

  std::string str() const;
  friend bool operator==(const FswSign&, const FswSign&) = default;
};

/// One space-separated unit of a sequence: a boxed sign or a bare punctuation symbol.
using SequenceItem = std::variant<FswSign, PlacedSymbol>;

struct FswSequence {
  std::vector<SequenceItem> items;

  bool empty() const noexcept { return items.empty(); }
  friend bool operator==(const FswSequence&, const FswSequence&) = default;
};

struct ParseOptions {
  // Rejects the vocabulary-only bases 0x38c..0x38f.
  bool strict = false;
};

FswSign parse_sign(std::string_view text, const ParseOptions& options = {});
FswSequence parse_sequence(std::string_view text, const ParseOptions& options = {});

std::string serialize(const FswSign& sign);
std::string serialize(const FswSequence& sequence);

/// Punctuation items count as one sign each.
std::size_t count_signs(const FswSequence& sequence) noexcept;
std::size_t count_signs(std::string_view text);

}  // namespace signbank::fsw
