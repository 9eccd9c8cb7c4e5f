#pragma once

// Matrix marshalling for the offload wire.
//
// TEXT: a JSON array of row arrays, no whitespace. Each element is the
//   shortest decimal string that parses back to the same binary64 value.
//   Magnitudes in [1e-4, 1e16) are written positionally and always carry a
//   fraction ("1.0", "0.00025"); everything else uses a lowercase exponent
//   with an explicit sign ("5e-324", "1.5e+16"). Zero is "0.0" or "-0.0".
// RAW:  "ODM1", rows (u32 LE), cols (u32 LE), then rows*cols binary64 LE
//   values in row-major order. Total length is exactly 12 + 8*rows*cols.

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "obench/error.hpp"
#include "obench/workloads.hpp"

namespace obench {

enum class CodecKind : std::uint8_t { kText, kRaw };

inline constexpr std::string_view kTextContentType = "application/json";
inline constexpr std::string_view kRawContentType = "application/octet-stream";

inline std::string_view content_type(CodecKind kind) {
  return kind == CodecKind::kText ? kTextContentType : kRawContentType;
}

inline std::optional<CodecKind> codec_from_content_type(std::string_view ct) {
  // Media-type parameters (";charset=...") do not change the codec.
  if (auto semi = ct.find(';'); semi != std::string_view::npos) ct = ct.substr(0, semi);
  while (!ct.empty() && ct.back() == ' ') ct.remove_suffix(1);
  if (ct == kTextContentType) return CodecKind::kText;
  if (ct == kRawContentType) return CodecKind::kRaw;
  return std::nullopt;
}

inline std::string_view to_string(CodecKind kind) {
  return kind == CodecKind::kText ? "text" : "raw";
}

inline std::optional<CodecKind> parse_codec_kind(std::string_view name) {
  if (name == "text") return CodecKind::kText;
  if (name == "raw") return CodecKind::kRaw;
  return std::nullopt;
}

struct Payload {
  CodecKind kind;
  std::vector<std::uint8_t> bytes;

  std::size_t size() const noexcept { return bytes.size(); }
  std::string_view view() const noexcept {
    return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
  }
};

inline constexpr std::array<char, 4> kRawMagic = {'O', 'D', 'M', '1'};
inline constexpr std::size_t kRawHeaderBytes = 12;

namespace detail {

inline void append_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t read_u32_le(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 |
         std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24;
}

inline std::uint64_t byteswap64(std::uint64_t v) {
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) {
    r = (r << 8) | (v & 0xFF);
    v >>= 8;
  }
  return r;
}

inline void check_wire_dims(const Matrix& m) {
  constexpr std::size_t kMax = std::numeric_limits<std::uint32_t>::max();
  if (m.rows() > kMax || m.cols() > kMax) {
    throw InvalidArgument("encode: dimensions exceed 2^32-1");
  }
}

}  // namespace detail

// Appends the TEXT rendering of one finite double.
inline void append_number(std::string& out, double x) {
  if (!std::isfinite(x)) {
    throw InvalidArgument("TEXT codec cannot represent non-finite values");
  }
  if (x == 0.0) {
    out += std::signbit(x) ? "-0.0" : "0.0";
    return;
  }
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::scientific);
  std::string_view sci(buf, static_cast<std::size_t>(res.ptr - buf));

  // Split "-d.ddde+XX" into sign, digit string and decimal exponent.
  const bool negative = sci.front() == '-';
  if (negative) sci.remove_prefix(1);
  const auto epos = sci.find('e');
  std::string_view mantissa = sci.substr(0, epos);
  int exponent = 0;
  std::from_chars(sci.data() + epos + 1 + (sci[epos + 1] == '+'),
                  sci.data() + sci.size(), exponent);

  char digits[24];
  std::size_t ndigits = 0;
  for (char c : mantissa) {
    if (c != '.') digits[ndigits++] = c;
  }

  if (negative) out += '-';
  const double mag = std::abs(x);
  if (mag >= 1e-4 && mag < 1e16) {
    if (exponent >= 0) {
      const auto int_len = static_cast<std::size_t>(exponent) + 1;
      if (ndigits > int_len) {
        out.append(digits, int_len);
        out += '.';
        out.append(digits + int_len, ndigits - int_len);
      } else {
        out.append(digits, ndigits);
        out.append(int_len - ndigits, '0');
        out += ".0";
      }
    } else {
      out += "0.";
      out.append(static_cast<std::size_t>(-exponent - 1), '0');
      out.append(digits, ndigits);
    }
  } else {
    out += digits[0];
    if (ndigits > 1) {
      out += '.';
      out.append(digits + 1, ndigits - 1);
    }
    out += exponent < 0 ? "e-" : "e+";
    out += std::to_string(exponent < 0 ? -exponent : exponent);
  }
}

inline std::string format_number(double x) {
  std::string s;
  append_number(s, x);
  return s;
}

inline Payload encode_text(const Matrix& m) {
  detail::check_wire_dims(m);
  std::string text;
  text.reserve(m.rows() * (m.cols() * 20 + 2) + 2);
  text += '[';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (r) text += ',';
    text += '[';
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) text += ',';
      append_number(text, row[c]);
    }
    text += ']';
  }
  text += ']';
  return {CodecKind::kText, std::vector<std::uint8_t>(text.begin(), text.end())};
}

inline Payload encode_raw(const Matrix& m) {
  detail::check_wire_dims(m);
  std::vector<std::uint8_t> out;
  out.reserve(kRawHeaderBytes + 8 * m.data().size());
  out.insert(out.end(), kRawMagic.begin(), kRawMagic.end());
  detail::append_u32_le(out, static_cast<std::uint32_t>(m.rows()));
  detail::append_u32_le(out, static_cast<std::uint32_t>(m.cols()));
  const std::size_t body = out.size();
  out.resize(body + 8 * m.data().size());
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data() + body, m.data().data(), 8 * m.data().size());
  } else {
    std::size_t off = body;
    for (double x : m.data()) {
      const std::uint64_t le = detail::byteswap64(std::bit_cast<std::uint64_t>(x));
      std::memcpy(out.data() + off, &le, 8);
      off += 8;
    }
  }
  return {CodecKind::kRaw, std::move(out)};
}

inline Payload encode(CodecKind kind, const Matrix& m) {
  return kind == CodecKind::kText ? encode_text(m) : encode_raw(m);
}

namespace detail {

class TextParser {
 public:
  explicit TextParser(std::string_view s) : s_(s) {}

  Matrix parse() {
    skip_ws();
    expect('[');
    std::vector<double> data;
    std::size_t cols = 0;
    std::size_t rows = 0;
    skip_ws();
    if (peek() == ']') fail("empty matrix");
    while (true) {
      skip_ws();
      const std::size_t before = data.size();
      parse_row(data);
      const std::size_t width = data.size() - before;
      if (rows == 0) {
        cols = width;
        data.reserve(cols * cols);
      } else if (width != cols) {
        fail("ragged rows: row " + std::to_string(rows) + " has " +
             std::to_string(width) + " elements, expected " + std::to_string(cols));
      }
      ++rows;
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect(']');
      break;
    }
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
    return Matrix(rows, cols, std::move(data));
  }

 private:
  void parse_row(std::vector<double>& data) {
    expect('[');
    skip_ws();
    if (peek() == ']') fail("empty row");
    while (true) {
      skip_ws();
      data.push_back(parse_number());
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect(']');
      return;
    }
  }

  // Validates the JSON number grammar, then converts with from_chars.
  double parse_number() {
    const std::size_t start = pos_;
    if (peek() == '-') ++pos_;
    if (peek() == '0') {
      ++pos_;
    } else if (is_digit(peek()) && peek() != '0') {
      while (is_digit(peek())) ++pos_;
    } else {
      fail("expected number");
    }
    if (peek() == '.') {
      ++pos_;
      if (!is_digit(peek())) fail("expected fraction digits");
      while (is_digit(peek())) ++pos_;
    }
    if (peek() == 'e' || peek() == 'E') {
      ++pos_;
      if (peek() == '+' || peek() == '-') ++pos_;
      if (!is_digit(peek())) fail("expected exponent digits");
      while (is_digit(peek())) ++pos_;
    }
    double value = 0.0;
    const char* first = s_.data() + start;
    const char* last = s_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, value, std::chars_format::general);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
      fail("number out of range: " + std::string(first, last));
    }
    return value;
  }

  static bool is_digit(char c) { return c >= '0' && c <= '9'; }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < s_.size() &&
           (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r')) {
      ++pos_;
    }
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw MalformedPayload("TEXT payload at offset " + std::to_string(pos_) + ": " + what);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Matrix decode_text(std::span<const std::uint8_t> bytes) {
  return detail::TextParser({reinterpret_cast<const char*>(bytes.data()), bytes.size()})
      .parse();
}

inline Matrix decode_raw(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kRawHeaderBytes) {
    throw MalformedPayload("RAW payload truncated: " + std::to_string(bytes.size()) +
                           " bytes is shorter than the header");
  }
  if (std::memcmp(bytes.data(), kRawMagic.data(), kRawMagic.size()) != 0) {
    throw MalformedPayload("RAW payload has bad magic");
  }
  const std::uint64_t rows = detail::read_u32_le(bytes.data() + 4);
  const std::uint64_t cols = detail::read_u32_le(bytes.data() + 8);
  if (rows == 0 || cols == 0) throw MalformedPayload("RAW payload has a zero dimension");
  const std::uint64_t count = rows * cols;  // < 2^64: both factors < 2^32
  if (count > (std::numeric_limits<std::uint64_t>::max() - kRawHeaderBytes) / 8 ||
      bytes.size() != kRawHeaderBytes + 8 * count) {
    throw MalformedPayload("RAW payload length " + std::to_string(bytes.size()) +
                           " does not match " + std::to_string(rows) + "x" +
                           std::to_string(cols));
  }
  std::vector<double> data(static_cast<std::size_t>(count));
  const std::uint8_t* body = bytes.data() + kRawHeaderBytes;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(data.data(), body, 8 * data.size());
  } else {
    for (std::size_t i = 0; i < data.size(); ++i) {
      std::uint64_t le;
      std::memcpy(&le, body + 8 * i, 8);
      data[i] = std::bit_cast<double>(detail::byteswap64(le));
    }
  }
  return Matrix(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols),
                std::move(data));
}

inline Matrix decode(CodecKind kind, std::span<const std::uint8_t> bytes) {
  return kind == CodecKind::kText ? decode_text(bytes) : decode_raw(bytes);
}

inline Matrix decode(CodecKind kind, std::string_view bytes) {
  return decode(kind, std::span<const std::uint8_t>(
                          reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

}  // namespace obench
