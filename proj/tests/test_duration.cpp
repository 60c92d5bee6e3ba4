#include <doctest.h>

#include <stdexcept>

#include "ehwrt/duration.hpp"

using ehwrt::Nanos;
using ehwrt::format_human;
using ehwrt::format_in;
using ehwrt::parse_duration;

TEST_CASE("durations parse exactly to nanoseconds") {
  CHECK(parse_duration("3.8ms") == Nanos{3'800'000});
  CHECK(parse_duration("0.008ms") == Nanos{8'000});
  CHECK(parse_duration("628.8 ms") == Nanos{628'800'000});
  CHECK(parse_duration("625") == Nanos::from_ms(625));
  CHECK(parse_duration("10h") == Nanos::from_h(10));
  CHECK(parse_duration("2min") == Nanos::from_s(120));
  CHECK(parse_duration("1.5", "s") == Nanos{1'500'000'000});
  CHECK(parse_duration("250ns") == Nanos{250});
  CHECK(parse_duration("0") == Nanos::zero());
  CHECK(parse_duration("-5ms") == Nanos{-5'000'000});
}

TEST_CASE("malformed durations are rejected") {
  CHECK_THROWS_AS(parse_duration(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_duration("ms"), std::invalid_argument);
  CHECK_THROWS_AS(parse_duration("1.5ns"), std::invalid_argument);
  CHECK_THROWS_AS(parse_duration("3 days"), std::invalid_argument);
  CHECK_THROWS_AS(parse_duration("99999999999h"), std::invalid_argument);
}

TEST_CASE("formatting") {
  CHECK(format_in(Nanos{628'800'000}, "ms") == "628.8");
  CHECK(format_in(Nanos{8'000}, "ms") == "0.008");
  CHECK(format_in(Nanos::from_s(31'440), "s") == "31440");
  CHECK(format_in(Nanos{-1'500'000}, "ms") == "-1.5");
  CHECK(format_human(Nanos::from_s(31'440)) == "31440 s (8.733 h)");
  CHECK(format_human(Nanos{3'800'000}) == "3.8 ms");
}

TEST_CASE("format_in and parse_duration agree") {
  for (std::int64_t ns : {0LL, 1LL, 999LL, 3'686'400LL, 628'800'000LL, 31'440'000'000'000LL}) {
    const Nanos d{ns};
    CHECK(parse_duration(format_in(d, "ms"), "ms") == d);
    CHECK(parse_duration(format_in(d, "s") + "s") == d);
  }
}
