#include "ehwrt/duration.hpp"

#include <cctype>
#include <cstdio>
#include <stdexcept>

namespace ehwrt {
namespace {

std::int64_t unit_ns(std::string_view unit) {
  if (unit == "ns") return 1;
  if (unit == "us") return 1'000;
  if (unit == "ms") return 1'000'000;
  if (unit == "s") return 1'000'000'000;
  if (unit == "min") return 60'000'000'000;
  if (unit == "h") return 3'600'000'000'000;
  throw std::invalid_argument("unknown duration unit '" + std::string(unit) +
                              "'");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

constexpr std::int64_t kMaxWhole = std::numeric_limits<std::int64_t>::max();

}  // namespace

Nanos parse_duration(std::string_view text, std::string_view default_unit) {
  const std::string_view original = text;
  auto fail = [&](const char* why) {
    throw std::invalid_argument("invalid duration '" + std::string(original) +
                                "': " + why);
  };

  text = trim(text);
  if (text.empty()) fail("empty");

  bool negative = false;
  if (text.front() == '-' || text.front() == '+') {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }

  std::size_t pos = 0;
  std::string whole;
  std::string frac;
  while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
    whole.push_back(text[pos++]);
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() &&
           std::isdigit(static_cast<unsigned char>(text[pos])))
      frac.push_back(text[pos++]);
  }
  if (whole.empty() && frac.empty()) fail("no digits");

  std::string_view unit = trim(text.substr(pos));
  if (unit.empty()) unit = default_unit;
  const std::int64_t scale = unit_ns(unit);

  // whole * scale
  std::int64_t w = 0;
  for (char c : whole) {
    if (w > (kMaxWhole - (c - '0')) / 10) fail("out of range");
    w = w * 10 + (c - '0');
  }
  if (w != 0 && scale > kMaxWhole / w) fail("out of range");
  std::int64_t ns = w * scale;

  // frac * scale must land on an integer number of nanoseconds
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  if (!frac.empty()) {
    if (frac.size() > 18) fail("too many fractional digits");
    __int128 num = 0;
    __int128 denom = 1;
    for (char c : frac) {
      num = num * 10 + (c - '0');
      denom *= 10;
    }
    const __int128 scaled = num * scale;
    if (scaled % denom != 0) fail("finer than 1 ns");
    const __int128 total = static_cast<__int128>(ns) + scaled / denom;
    if (total > kMaxWhole) fail("out of range");
    ns = static_cast<std::int64_t>(total);
  }
  return Nanos{negative ? -ns : ns};
}

std::string format_in(Nanos d, std::string_view unit) {
  const std::int64_t scale = unit_ns(unit);
  if (unit == "min" || unit == "h") {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g",
                  static_cast<double>(d.count()) / static_cast<double>(scale));
    return buf;
  }
  std::int64_t v = d.count();
  const bool negative = v < 0;
  if (negative) v = -v;
  std::string out = std::to_string(v / scale);
  std::int64_t rem = v % scale;
  if (rem != 0) {
    std::string digits = std::to_string(rem);
    std::string pad = std::to_string(scale).substr(1);  // zeros only
    digits.insert(0, pad.size() - digits.size(), '0');
    while (!digits.empty() && digits.back() == '0') digits.pop_back();
    out += "." + digits;
  }
  return negative ? "-" + out : out;
}

std::string format_human(Nanos d) {
  const std::int64_t a = d.count() < 0 ? -d.count() : d.count();
  if (a < 1'000'000'000) return format_in(d, "ms") + " ms";
  std::string s = format_in(d, "s") + " s";
  if (a >= 3'600'000'000'000 / 10) {
    char buf[48];
    std::snprintf(buf, sizeof buf, " (%.3f h)", d.hours());
    s += buf;
  }
  return s;
}

}  // namespace ehwrt
