#include "signbank/tokenizer.hpp"

#include <cctype>
#include <charconv>
#include <optional>

namespace signbank::tokens {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

std::optional<int> parse_hex(std::string_view s) {
  if (s.empty()) return std::nullopt;
  int v = 0;
  for (char c : s) {
    if (c >= '0' && c <= '9') {
      v = v * 16 + (c - '0');
    } else if (c >= 'a' && c <= 'f') {
      v = v * 16 + (c - 'a' + 10);
    } else {
      return std::nullopt;
    }
  }
  return v;
}

std::optional<int> parse_dec(std::string_view s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string base_text(std::uint16_t base) {
  std::string out = "S";
  out.push_back(kHexDigits[(base >> 8) & 0xf]);
  out.push_back(kHexDigits[(base >> 4) & 0xf]);
  out.push_back(kHexDigits[base & 0xf]);
  return out;
}

void emit_symbol(std::vector<Token>& out, const fsw::PlacedSymbol& symbol) {
  out.push_back(Token::symbol_base(symbol.id.base()));
  out.push_back(Token::fill(symbol.id.fill()));
  out.push_back(Token::rotation(symbol.id.rotation()));
  out.push_back(Token::position(symbol.at.x()));
  out.push_back(Token::position(symbol.at.y()));
}

class Reader {
 public:
  explicit Reader(std::span<const Token> tokens) : tokens_(tokens) {}

  bool done() const { return pos_ >= tokens_.size(); }
  const Token& peek() const { return tokens_[pos_]; }

  const Token& take(TokenKind kind, const char* what) {
    if (done()) throw MalformedTokenStream(std::string("stream ends where ") + what + " is required", pos_);
    if (tokens_[pos_].kind() != kind) {
      throw MalformedTokenStream(std::string("token '") + tokens_[pos_].text() + "' where " + what +
                                     " is required",
                                 pos_);
    }
    return tokens_[pos_++];
  }

  fsw::Coordinate coordinate() {
    const int x = take(TokenKind::position, "an x position").value();
    const int y = take(TokenKind::position, "a y position").value();
    return fsw::Coordinate(x, y);
  }

  fsw::PlacedSymbol symbol() {
    const auto base = static_cast<std::uint16_t>(take(TokenKind::symbol_base, "a symbol").value());
    const int fill = take(TokenKind::fill, "a fill modifier").value();
    const int rotation = take(TokenKind::rotation, "a rotation modifier").value();
    return fsw::PlacedSymbol{fsw::SymbolId(base, fill, rotation), coordinate()};
  }

  std::size_t pos() const { return pos_; }

 private:
  std::span<const Token> tokens_;
  std::size_t pos_ = 0;
};

bool starts_punctuation(const Token& token) {
  return token.kind() == TokenKind::symbol_base && token.value() >= fsw::kMinPunctuationBase &&
         token.value() <= fsw::kMaxPunctuationBase;
}

}  // namespace

MalformedTokenStream::MalformedTokenStream(const std::string& message, std::size_t position)
    : std::runtime_error(message + " (token " + std::to_string(position) + ")"), position_(position) {}

Token Token::parse(std::string_view text) {
  auto unknown = [&]() { return UnknownToken("unknown token '" + std::string(text) + "'"); };
  if (text.size() == 1) {
    switch (text[0]) {
      case 'B': return box(fsw::Box::B);
      case 'L': return box(fsw::Box::L);
      case 'M': return box(fsw::Box::M);
      case 'R': return box(fsw::Box::R);
      default: throw unknown();
    }
  }
  if (text.size() < 2) throw unknown();
  const std::string_view rest = text.substr(1);
  switch (text[0]) {
    case 'S': {
      const auto v = parse_hex(rest);
      if (rest.size() != 3 || !v || *v < fsw::kMinBase || *v > fsw::kMaxBase) throw unknown();
      return symbol_base(static_cast<std::uint16_t>(*v));
    }
    case 'c': {
      const auto v = parse_dec(rest);
      if (rest.size() != 1 || !v || *v > fsw::kMaxFill) throw unknown();
      return fill(*v);
    }
    case 'r': {
      const auto v = parse_hex(rest);
      if (rest.size() != 1 || !v) throw unknown();
      return rotation(*v);
    }
    case 'p': {
      const auto v = parse_dec(rest);
      if (rest.size() != 3 || !v || !fsw::Coordinate::in_range(*v)) throw unknown();
      return position(*v);
    }
    default:
      throw unknown();
  }
}

Token Token::box(fsw::Box box) {
  return Token(TokenKind::box, std::string(1, static_cast<char>(box)), static_cast<char>(box));
}

Token Token::symbol_base(std::uint16_t base) {
  if (base < fsw::kMinBase || base > fsw::kMaxBase) throw UnknownToken("symbol base out of range");
  return Token(TokenKind::symbol_base, base_text(base), base);
}

Token Token::fill(int fill) {
  if (fill < 0 || fill > fsw::kMaxFill) throw UnknownToken("fill out of range");
  return Token(TokenKind::fill, "c" + std::to_string(fill), fill);
}

Token Token::rotation(int rotation) {
  if (rotation < 0 || rotation > fsw::kMaxRotation) throw UnknownToken("rotation out of range");
  return Token(TokenKind::rotation, std::string("r") + kHexDigits[rotation], rotation);
}

Token Token::position(int value) {
  if (!fsw::Coordinate::in_range(value)) throw UnknownToken("position out of range");
  return Token(TokenKind::position, "p" + std::to_string(value), value);
}

bool TokenVocabulary::contains(std::string_view text) const {
  return index_.find(std::string(text)) != index_.end();
}

std::int32_t TokenVocabulary::id(std::string_view text) const {
  const auto it = index_.find(std::string(text));
  if (it == index_.end()) throw UnknownToken("token not in vocabulary: '" + std::string(text) + "'");
  return it->second;
}

const std::string& TokenVocabulary::text(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw UnknownToken("token id out of range: " + std::to_string(id));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

TokenVocabulary build_vocabulary() {
  TokenVocabulary vocab;
  auto& tokens = vocab.tokens_;
  tokens.reserve(kVocabularySize);
  for (const char box : {'B', 'L', 'M', 'R'}) tokens.emplace_back(1, box);
  for (int base = fsw::kMinBase; base <= fsw::kMaxBase; ++base) {
    tokens.push_back(base_text(static_cast<std::uint16_t>(base)));
  }
  for (int fill = 0; fill <= fsw::kMaxFill; ++fill) tokens.push_back("c" + std::to_string(fill));
  for (int rotation = 0; rotation <= fsw::kMaxRotation; ++rotation) {
    tokens.push_back(std::string("r") + kHexDigits[rotation]);
  }
  for (int p = fsw::kMinCoordinate; p <= fsw::kMaxCoordinate; ++p) {
    tokens.push_back("p" + std::to_string(p));
  }
  vocab.index_.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    vocab.index_.emplace(tokens[i], static_cast<std::int32_t>(i));
  }
  return vocab;
}

const TokenVocabulary& vocabulary() {
  static const TokenVocabulary instance = build_vocabulary();
  return instance;
}

std::vector<Token> tokenize(const fsw::FswSign& sign) {
  std::vector<Token> out;
  out.reserve(3 + 5 * sign.symbols.size());
  out.push_back(Token::box(sign.box));
  out.push_back(Token::position(sign.max.x()));
  out.push_back(Token::position(sign.max.y()));
  for (const auto& symbol : sign.symbols) emit_symbol(out, symbol);
  return out;
}

std::vector<Token> tokenize(const fsw::FswSequence& sequence) {
  std::vector<Token> out;
  for (const auto& item : sequence.items) {
    if (const auto* sign = std::get_if<fsw::FswSign>(&item)) {
      auto part = tokenize(*sign);
      out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    } else {
      emit_symbol(out, std::get<fsw::PlacedSymbol>(item));
    }
  }
  return out;
}

fsw::FswSequence detokenize(std::span<const Token> tokens) {
  fsw::FswSequence sequence;
  Reader reader(tokens);
  while (!reader.done()) {
    const Token& head = reader.peek();
    if (head.kind() == TokenKind::box) {
      const auto box = static_cast<fsw::Box>(reader.take(TokenKind::box, "a box").value());
      fsw::FswSign sign{{}, box, reader.coordinate(), {}};
      while (!reader.done() && reader.peek().kind() == TokenKind::symbol_base &&
             !starts_punctuation(reader.peek())) {
        sign.symbols.push_back(reader.symbol());
      }
      sequence.items.emplace_back(std::move(sign));
    } else if (starts_punctuation(head)) {
      sequence.items.emplace_back(reader.symbol());
    } else {
      throw MalformedTokenStream("token '" + head.text() + "' cannot start a sign", reader.pos());
    }
  }
  return sequence;
}

std::vector<std::int32_t> encode_ids(std::span<const Token> tokens, const TokenVocabulary& vocab) {
  std::vector<std::int32_t> ids;
  ids.reserve(tokens.size());
  for (const auto& token : tokens) ids.push_back(vocab.id(token.text()));
  return ids;
}

std::vector<Token> decode_ids(std::span<const std::int32_t> ids, const TokenVocabulary& vocab) {
  std::vector<Token> out;
  out.reserve(ids.size());
  for (const auto id : ids) out.push_back(Token::parse(vocab.text(id)));
  return out;
}

std::string format_tokens(std::span<const Token> tokens, bool pretty) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) {
      const bool breaks = tokens[i].kind() == TokenKind::box || tokens[i].kind() == TokenKind::symbol_base;
      out.push_back(pretty && breaks ? '\n' : ' ');
    }
    out += tokens[i].text();
  }
  return out;
}

std::vector<Token> parse_tokens(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(Token::parse(line.substr(i, j - i)));
    i = j;
  }
  return out;
}

}  // namespace signbank::tokens
