#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace textspot {

// The fixed 68-class recognition alphabet: 26 letters (case-folded to
// upper), 10 digits, and the 32 ASCII printable punctuation characters, in
// that order. Class ids are stable: 'A'..'Z' -> 0..25, '0'..'9' -> 26..35,
// punctuation in ASCII order -> 36..67.
class Charset {
 public:
  static constexpr int kNumClasses = 68;

  static std::string_view default_symbols() {
    return "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
           "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";
  }

  Charset() : Charset(default_symbols()) {}

  explicit Charset(std::string_view symbols) : symbols_(symbols) {
    if (symbols_.size() != kNumClasses) {
      throw std::invalid_argument("Charset: need exactly 68 symbols");
    }
    by_char_.fill(-1);
    for (int id = 0; id < kNumClasses; ++id) {
      unsigned char c = static_cast<unsigned char>(symbols_[static_cast<size_t>(id)]);
      if (c >= 128) throw std::invalid_argument("Charset: symbols must be ASCII");
      if (c >= 'a' && c <= 'z') throw std::invalid_argument("Charset: letters must be upper-case");
      if (by_char_[c] != -1) throw std::invalid_argument("Charset: duplicate symbol");
      by_char_[c] = id;
      if (c >= 'A' && c <= 'Z') by_char_[c - 'A' + 'a'] = id;  // fold lower -> upper
    }
  }

  // Class id for a code point, or nullopt when the symbol is outside the
  // alphabet. Letters are case-insensitive.
  std::optional<int> class_of(char32_t cp) const {
    if (cp >= 128) return std::nullopt;
    int id = by_char_[static_cast<size_t>(cp)];
    if (id < 0) return std::nullopt;
    return id;
  }

  char symbol_of(int id) const {
    if (id < 0 || id >= kNumClasses) throw std::out_of_range("Charset: class id out of range");
    return symbols_[static_cast<size_t>(id)];
  }

  const std::string& symbols() const { return symbols_; }

  struct NormalizedTranscript {
    std::vector<int> ids;  // in-charset symbols, in order
    int dropped = 0;       // non-whitespace symbols outside the charset
    std::string text;      // the normalized (upper-case) text

    size_t length() const { return ids.size(); }
  };

  // Map a transcript to class ids: whitespace is skipped, out-of-charset
  // symbols are counted and dropped, letters fold to upper case. Input is
  // treated as UTF-8 so a multi-byte symbol counts as one drop.
  NormalizedTranscript normalize(std::string_view utf8) const {
    NormalizedTranscript out;
    size_t i = 0;
    while (i < utf8.size()) {
      char32_t cp = 0;
      i += decode_utf8(utf8, i, cp);
      if (cp < 128 && is_space(static_cast<char>(cp))) continue;
      if (auto id = class_of(cp)) {
        out.ids.push_back(*id);
        out.text.push_back(symbol_of(*id));
      } else {
        ++out.dropped;
      }
    }
    return out;
  }

 private:
  static bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  }

  // Returns the byte length of the sequence starting at `i` and writes the
  // code point. Malformed bytes decode as one replacement symbol each.
  static size_t decode_utf8(std::string_view s, size_t i, char32_t& cp) {
    unsigned char b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) { cp = b0; return 1; }
    size_t len = (b0 >= 0xF0) ? 4 : (b0 >= 0xE0) ? 3 : (b0 >= 0xC0) ? 2 : 1;
    if (len == 1 || i + len > s.size()) { cp = 0xFFFD; return 1; }
    char32_t acc = b0 & (0x7F >> len);
    for (size_t k = 1; k < len; ++k) {
      unsigned char bk = static_cast<unsigned char>(s[i + k]);
      if ((bk & 0xC0) != 0x80) { cp = 0xFFFD; return 1; }
      acc = (acc << 6) | (bk & 0x3F);
    }
    cp = acc;
    return len;
  }

  std::string symbols_;
  std::array<int, 128> by_char_{};
};

}  // namespace textspot
