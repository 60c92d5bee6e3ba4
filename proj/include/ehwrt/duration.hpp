#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

namespace ehwrt {

/// Integer-nanosecond duration. All hardware time accounting goes through
/// this type so that sums over tens of thousands of evaluations are exact.
class Nanos {
public:
  constexpr Nanos() = default;
  constexpr explicit Nanos(std::int64_t ns) : ns_(ns) {}

  static constexpr Nanos zero() { return Nanos{0}; }
  static constexpr Nanos max() {
    return Nanos{std::numeric_limits<std::int64_t>::max()};
  }
  static constexpr Nanos from_us(std::int64_t us) { return Nanos{us * 1000}; }
  static constexpr Nanos from_ms(std::int64_t ms) {
    return Nanos{ms * 1'000'000};
  }
  static constexpr Nanos from_s(std::int64_t s) {
    return Nanos{s * 1'000'000'000};
  }
  static constexpr Nanos from_h(std::int64_t h) { return from_s(h * 3600); }

  constexpr std::int64_t count() const { return ns_; }
  constexpr double ms() const { return static_cast<double>(ns_) / 1e6; }
  constexpr double seconds() const { return static_cast<double>(ns_) / 1e9; }
  constexpr double hours() const { return seconds() / 3600.0; }

  constexpr auto operator<=>(const Nanos&) const = default;

  constexpr Nanos operator+(Nanos o) const { return Nanos{ns_ + o.ns_}; }
  constexpr Nanos operator-(Nanos o) const { return Nanos{ns_ - o.ns_}; }
  constexpr Nanos operator*(std::int64_t k) const { return Nanos{ns_ * k}; }
  constexpr Nanos& operator+=(Nanos o) {
    ns_ += o.ns_;
    return *this;
  }

private:
  std::int64_t ns_ = 0;
};

/// Parses a decimal duration such as "3.8ms", "10h", "2min", "625".
/// The decimal is converted exactly; anything finer than 1 ns is rejected.
/// A bare number takes `default_unit` ("ns", "us", "ms", "s", "min", "h").
/// Throws std::invalid_argument on malformed input.
Nanos parse_duration(std::string_view text, std::string_view default_unit = "ms");

/// Exact decimal rendering in a decimal unit (ns, us, ms, s), trailing
/// zeros trimmed; "min" and "h" are rounded to six significant digits.
/// format_in(Nanos{628'800'000}, "ms") == "628.8".
std::string format_in(Nanos d, std::string_view unit);

/// Human rendering with an automatically chosen unit, e.g. "628.8 ms",
/// "31440 s (8.733 h)".
std::string format_human(Nanos d);

}  // namespace ehwrt
