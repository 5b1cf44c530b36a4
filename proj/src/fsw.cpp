#include "signbank/fsw.hpp"

#include <array>
#include <optional>

namespace signbank::fsw {

namespace {

constexpr std::array<char, 16> kHex = {'0', '1', '2', '3', '4', '5', '6', '7',
                                       '8', '9', 'a', 'b', 'c', 'd', 'e', 'f'};

std::optional<int> hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return std::nullopt;
}

void append_3digits(std::string& out, int v) {
  out.push_back(static_cast<char>('0' + v / 100));
  out.push_back(static_cast<char>('0' + (v / 10) % 10));
  out.push_back(static_cast<char>('0' + v % 10));
}

class Cursor {
 public:
  Cursor(std::string_view text, const ParseOptions& options) : text_(text), options_(options) {}

  bool done() const { return pos_ >= text_.size(); }
  std::size_t pos() const { return pos_; }
  char peek() const { return done() ? '\0' : text_[pos_]; }

  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw MalformedSign(what + " at offset " + std::to_string(at), at);
  }

  void expect(char c, const char* what) {
    if (peek() != c) fail(std::string("expected ") + what, pos_);
    ++pos_;
  }

  SymbolId symbol() {
    const std::size_t start = pos_;
    expect('S', "'S'");
    int base = 0;
    for (int i = 0; i < 3; ++i) {
      const auto v = hex_value(peek());
      if (!v) fail("bad hex digit in symbol base", pos_);
      base = base * 16 + *v;
      ++pos_;
    }
    if (base < kMinBase || base > kMaxBase) fail("symbol base out of range", start + 1);
    if (options_.strict && base > kMaxIswaBase) fail("symbol base outside ISWA range", start + 1);
    const auto fill = hex_value(peek());
    if (!fill) fail("bad fill digit", pos_);
    if (*fill > kMaxFill) fail("fill modifier out of range", pos_);
    ++pos_;
    const auto rotation = hex_value(peek());
    if (!rotation) fail("bad rotation digit", pos_);
    ++pos_;
    return SymbolId(static_cast<std::uint16_t>(base), *fill, *rotation);
  }

  int number() {
    const std::size_t start = pos_;
    int v = 0;
    for (int i = 0; i < 3; ++i) {
      const char c = peek();
      if (c < '0' || c > '9') fail("expected 3-digit coordinate", pos_);
      v = v * 10 + (c - '0');
      ++pos_;
    }
    if (!Coordinate::in_range(v)) fail("coordinate out of range", start);
    return v;
  }

  Coordinate coordinate() {
    const int x = number();
    expect('x', "'x'");
    const int y = number();
    return Coordinate(x, y);
  }

  FswSign sign() {
    std::vector<SymbolId> prefix;
    if (peek() == 'A') {
      ++pos_;
      if (peek() != 'S') fail("empty sort prefix", pos_);
      while (peek() == 'S') prefix.push_back(symbol());
    }
    Box box;
    switch (peek()) {
      case 'B': box = Box::B; break;
      case 'L': box = Box::L; break;
      case 'M': box = Box::M; break;
      case 'R': box = Box::R; break;
      default: fail("expected box marker B, L, M or R", pos_);
    }
    ++pos_;
    const Coordinate max = coordinate();
    std::vector<PlacedSymbol> symbols;
    while (!done()) {
      const SymbolId id = symbol();
      symbols.push_back(PlacedSymbol{id, coordinate()});
    }
    return FswSign{std::move(prefix), box, max, std::move(symbols)};
  }

  PlacedSymbol punctuation() {
    const std::size_t start = pos_;
    const SymbolId id = symbol();
    if (!id.is_punctuation()) fail("standalone symbol is not punctuation", start);
    const Coordinate at = coordinate();
    if (!done()) fail("trailing characters after punctuation", pos_);
    return PlacedSymbol{id, at};
  }

 private:
  std::string_view text_;
  const ParseOptions& options_;
  std::size_t pos_ = 0;
};

}  // namespace

MalformedSign::MalformedSign(const std::string& message, std::size_t offset, std::size_t fragment)
    : std::runtime_error(message), offset_(offset), fragment_(fragment) {}

SymbolId::SymbolId(std::uint16_t base, int fill, int rotation)
    : base_(base), fill_(static_cast<std::uint8_t>(fill)), rotation_(static_cast<std::uint8_t>(rotation)) {
  if (base < kMinBase || base > kMaxBase) throw std::invalid_argument("symbol base out of range");
  if (fill < 0 || fill > kMaxFill) throw std::invalid_argument("fill out of range");
  if (rotation < 0 || rotation > kMaxRotation) throw std::invalid_argument("rotation out of range");
}

std::string SymbolId::str() const {
  std::string out = "S";
  out.push_back(kHex[(base_ >> 8) & 0xf]);
  out.push_back(kHex[(base_ >> 4) & 0xf]);
  out.push_back(kHex[base_ & 0xf]);
  out.push_back(kHex[fill_]);
  out.push_back(kHex[rotation_]);
  return out;
}

Coordinate::Coordinate(int x, int y) : x_(x), y_(y) {
  if (!in_range(x) || !in_range(y)) throw std::invalid_argument("coordinate out of range");
}

std::string Coordinate::str() const {
  std::string out;
  out.reserve(7);
  append_3digits(out, x_);
  out.push_back('x');
  append_3digits(out, y_);
  return out;
}

std::string PlacedSymbol::str() const { return id.str() + at.str(); }

std::string FswSign::str() const { return serialize(*this); }

FswSign parse_sign(std::string_view text, const ParseOptions& options) {
  if (text.empty()) throw MalformedSign("empty sign", 0);
  Cursor cursor(text, options);
  return cursor.sign();
}

FswSequence parse_sequence(std::string_view text, const ParseOptions& options) {
  FswSequence sequence;
  if (text.empty()) return sequence;
  std::size_t fragment = 0;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = text.find(' ', start);
    const std::string_view piece =
        text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    try {
      if (piece.empty()) throw MalformedSign("empty fragment", 0);
      Cursor cursor(piece, options);
      if (piece.front() == 'S') {
        sequence.items.emplace_back(cursor.punctuation());
      } else {
        sequence.items.emplace_back(cursor.sign());
      }
    } catch (const MalformedSign& e) {
      throw MalformedSign("fragment " + std::to_string(fragment) + ": " + e.what(), e.offset(),
                          fragment);
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
    ++fragment;
  }
  return sequence;
}

std::string serialize(const FswSign& sign) {
  std::string out;
  out.reserve(8 + 6 * sign.sort_prefix.size() + 13 * sign.symbols.size());
  if (!sign.sort_prefix.empty()) {
    out.push_back('A');
    for (const auto& id : sign.sort_prefix) out += id.str();
  }
  out.push_back(static_cast<char>(sign.box));
  out += sign.max.str();
  for (const auto& symbol : sign.symbols) out += symbol.str();
  return out;
}

std::string serialize(const FswSequence& sequence) {
  std::string out;
  for (const auto& item : sequence.items) {
    if (!out.empty()) out.push_back(' ');
    std::visit([&out](const auto& v) {
      if constexpr (std::is_same_v<std::decay_t<decltype(v)>, FswSign>) {
        out += serialize(v);
      } else {
        out += v.str();
      }
    }, item);
  }
  return out;
}

std::size_t count_signs(const FswSequence& sequence) noexcept { return sequence.items.size(); }

std::size_t count_signs(std::string_view text) { return count_signs(parse_sequence(text)); }

}  // namespace signbank::fsw
