#include <doctest.h>

#include <bit>
#include <cmath>

#include "ehwrt/analog_sim.hpp"
#include "ehwrt/rng.hpp"

using namespace ehwrt;

namespace {

Bits to_bits(std::uint64_t value, std::size_t width) {
  Bits b(width);
  for (std::size_t i = 0; i < width; ++i) b[i] = (value >> (width - 1 - i)) & 1U;
  return b;
}

// kp and kd codes are levels; the field stores their Gray codes MSB first
Bits compensator_bits(std::uint64_t kp_level, std::uint64_t kd_level) {
  Bits bits = to_bits(binary_to_gray(kp_level), 10);
  const Bits kd = to_bits(binary_to_gray(kd_level), 10);
  bits.insert(bits.end(), kd.begin(), kd.end());
  return bits;
}

std::shared_ptr<const DeviceProfile> device(const std::string& name) {
  const auto all = builtin_profiles();
  return std::make_shared<const DeviceProfile>(find_profile(all, name));
}

// Last instant the sampled analytic response is outside the band.
double brute_settling(double (*y)(double), double window, double dt, double final,
                      double band) {
  const auto n = static_cast<std::size_t>(std::llround(window / dt));
  for (std::size_t i = n + 1; i-- > 0;) {
    const double t = static_cast<double>(i) * dt;
    if (std::abs(y(t) - final) > band * std::abs(final))
      return i == n ? window : static_cast<double>(i + 1) * dt;
  }
  return 0.0;
}

constexpr double kZeta = 0.2;
constexpr double kWn = 2.0;

double underdamped(double t) {
  const double wd = kWn * std::sqrt(1.0 - kZeta * kZeta);
  const double phi = std::acos(kZeta);
  return 1.0 - std::exp(-kZeta * kWn * t) / std::sqrt(1.0 - kZeta * kZeta) *
                   std::sin(wd * t + phi);
}

double first_order(double t) { return 1.0 - std::exp(-t); }

}  // namespace

TEST_CASE("transfer function construction") {
  const auto tf = TransferFunction::make({0.0, 0.0, 2.0}, {0.0, 1.0, 4.0});
  CHECK(tf.num == std::vector<double>{2.0});
  CHECK(tf.den == std::vector<double>{1.0, 4.0});
  CHECK(tf.order() == 1);
  CHECK(*tf.dc_gain() == doctest::Approx(0.5));
  CHECK_FALSE(TransferFunction::make({1.0}, {1.0, 0.0}).dc_gain());
  CHECK_THROWS_AS(TransferFunction::make({1.0, 0.0}, {1.0}), SimError);
  CHECK_THROWS_AS(TransferFunction::make({1.0}, {0.0}), SimError);
  CHECK(poly_mul(std::vector<double>{1, 1}, std::vector<double>{1, -1}) ==
        std::vector<double>{1, 0, -1});
  CHECK(poly_add(std::vector<double>{1, 0, 0}, std::vector<double>{2, 3}) ==
        std::vector<double>{1, 2, 3});
}

TEST_CASE("settling time edge cases") {
  const std::vector<double> t{0, 1, 2, 3, 4};
  CHECK(*settling_time(t, std::vector<double>{1, 1, 1, 1, 1}, 1.0, 0.02) == 0.0);
  CHECK(*settling_time(t, std::vector<double>{0, 2, 0.99, 1.01, 1.0}, 1.0, 0.02) == 2.0);
  CHECK_FALSE(settling_time(t, std::vector<double>{0, 0, 0, 0, 0.5}, 1.0, 0.02));
  // zero final value uses an absolute band
  CHECK(*settling_time(t, std::vector<double>{1, 0.5, 0.01, -0.01, 0}, 0.0, 0.02) == 2.0);
  CHECK_THROWS_AS(settling_time(std::vector<double>{}, std::vector<double>{}, 1.0, 0.02),
                  SimError);
  CHECK_THROWS_AS(settling_time(t, std::vector<double>{1, 1}, 1.0, 0.02), SimError);
}

TEST_CASE("first-order step response") {
  const auto tf = TransferFunction::make({1.0}, {1.0, 1.0});
  const double dt = 10.0 / 4096.0;
  const auto r = step_response(tf, 10.0, dt);
  REQUIRE(r.settling_time);
  CHECK(std::abs(*r.settling_time - std::log(50.0)) <= dt);
  CHECK(r.times.size() == 4097);
  CHECK(r.times.back() == doctest::Approx(10.0));
  CHECK_FALSE(r.unstable);
  for (std::size_t i = 0; i < r.times.size(); i += 97)
    CHECK(r.values[i] == doctest::Approx(first_order(r.times[i])).epsilon(1e-8));
}

TEST_CASE("static gain settles at t = 0") {
  const auto r = step_response(TransferFunction::make({1.0}, {1.0}), 5.0, 0.01);
  REQUIRE(r.settling_time);
  CHECK(*r.settling_time == 0.0);
}

TEST_CASE("integrator and unstable plants never settle") {
  const auto integ = step_response(TransferFunction::make({1.0}, {1.0, 0.0}), 10.0, 0.01);
  CHECK_FALSE(integ.final_value);
  CHECK_FALSE(integ.settling_time);

  const auto unstable = step_response(TransferFunction::make({1.0}, {1.0, -1.0}), 100.0, 0.01);
  CHECK(unstable.unstable);
  CHECK_FALSE(unstable.settling_time);
  CHECK(unstable.times.size() < 10'001);

  CHECK_THROWS_AS(step_response(TransferFunction::make({1.0}, {1.0, 1.0}), 1.0, 0.0), SimError);
  CHECK_THROWS_AS(step_response(TransferFunction::make({1.0}, {1.0, 1.0}), 1.0, 2.0), SimError);
}

TEST_CASE("underdamped second order matches an analytic scan") {
  const auto tf = TransferFunction::make({kWn * kWn}, {1.0, 2.0 * kZeta * kWn, kWn * kWn});
  const double window = 20.0;
  const double dt = window / 4096.0;
  const auto r = step_response(tf, window, dt);
  REQUIRE(r.settling_time);
  const double oracle = brute_settling(underdamped, window, dt / 10.0, 1.0, 0.02);
  CHECK(std::abs(*r.settling_time - oracle) <= dt);
}

TEST_CASE("settling time is stable under dt refinement") {
  Rng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const double zeta = 0.1 + 0.8 * rng.uniform01();
    const double wn = 0.5 + 3.0 * rng.uniform01();
    const auto tf = TransferFunction::make({wn * wn}, {1.0, 2.0 * zeta * wn, wn * wn});
    const double window = 40.0;
    const double dt = window / 4096.0;
    const auto coarse = step_response(tf, window, dt);
    const auto fine = step_response(tf, window, dt / 2.0);
    REQUIRE(coarse.settling_time);
    REQUIRE(fine.settling_time);
    CHECK(std::abs(*coarse.settling_time - *fine.settling_time) <= dt + 1e-12);
  }
}

TEST_CASE("stable responses approach the dc gain") {
  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const double k = 0.2 + 5.0 * rng.uniform01();
    const double p1 = 0.5 + 2.0 * rng.uniform01();
    const double p2 = 0.5 + 2.0 * rng.uniform01();
    const auto tf = TransferFunction::make({k}, poly_mul(std::vector<double>{1.0, p1},
                                                         std::vector<double>{1.0, p2}));
    const auto r = step_response(tf, 60.0, 60.0 / 8192.0);
    REQUIRE(r.final_value);
    CHECK(*r.final_value == doctest::Approx(k / (p1 * p2)));
    CHECK(std::abs(r.values.back() - *r.final_value) < 1e-6);

    // every sample after the settling time is inside the band, the one before is not
    REQUIRE(r.settling_time);
    const double tol = 0.02 * std::abs(*r.final_value);
    std::size_t first = 0;
    while (r.times[first] < *r.settling_time) ++first;
    for (std::size_t i = first; i < r.values.size(); ++i)
      CHECK(std::abs(r.values[i] - *r.final_value) <= tol);
    if (first > 0) CHECK(std::abs(r.values[first - 1] - *r.final_value) > tol);
  }
}

TEST_CASE("gray code") {
  for (std::uint64_t v = 0; v < 1024; ++v) {
    CHECK(gray_to_binary(binary_to_gray(v)) == v);
    CHECK(std::popcount(binary_to_gray(v) ^ binary_to_gray(v + 1)) == 1);
  }
}

TEST_CASE("parameter decoding") {
  const DecodeField f{"p", 0, 3, FieldKind::Parameter, 0.0, 4.0, 5, std::nullopt};
  CHECK(decode_parameter(f, to_bits(0, 3)) == 0.0);
  CHECK(decode_parameter(f, to_bits(binary_to_gray(2), 3)) == doctest::Approx(2.0));
  CHECK(decode_parameter(f, to_bits(binary_to_gray(4), 3)) == doctest::Approx(4.0));
  CHECK(decode_parameter(f, to_bits(binary_to_gray(7), 3)) == doctest::Approx(4.0));
  CHECK_THROWS_AS(decode_parameter(f, to_bits(binary_to_gray(7), 3), false), SimError);
  CHECK_THROWS_AS(decode_parameter(f, to_bits(0, 2)), SimError);

  const DecodeField full{"q", 2, 10, FieldKind::Parameter, -1.0, 1.0, 0, std::nullopt};
  Bits bits(12, 0);
  CHECK(decode_parameter(full, bits) == -1.0);
  const Bits top = to_bits(binary_to_gray(1023), 10);
  std::copy(top.begin(), top.end(), bits.begin() + 2);
  CHECK(decode_parameter(full, bits) == doctest::Approx(1.0));
}

TEST_CASE("resistive networks") {
  ResistiveNetwork half;
  half.branches = {{1, 2, 1.0}, {2, 0, 1.0}};
  CHECK(output_ratio(half) == doctest::Approx(0.5));

  ResistiveNetwork fifth;
  fifth.branches = {{1, 2, 1.0}, {2, 0, 4.0}};
  CHECK(output_ratio(fifth) == doctest::Approx(0.2));

  // two-section ladder through node 3
  ResistiveNetwork ladder;
  ladder.node_count = 4;
  ladder.branches = {{1, 3, 1.0}, {3, 0, 1.0}, {3, 2, 1.0}, {2, 0, 1.0}};
  CHECK(output_ratio(ladder) == doctest::Approx(0.2));

  // a dangling node hanging off the output does not disturb it
  ResistiveNetwork dangling = half;
  dangling.node_count = 5;
  dangling.branches.push_back({2, 3, 1.0});
  CHECK(output_ratio(dangling) == doctest::Approx(0.5));

  ResistiveNetwork floating;
  floating.branches = {{1, 0, 1.0}};
  CHECK_THROWS_AS(output_ratio(floating), SimError);

  ResistiveNetwork bad;
  bad.branches = {{1, 7, 1.0}};
  CHECK_THROWS_AS(output_ratio(bad), SimError);
}

TEST_CASE("divider benchmark agrees with the series-parallel formula") {
  const auto benches = builtin_benchmarks();
  const auto& bench = find_benchmark(benches, "fpta-divider");
  const auto fpta = device("FPTA2");
  const double weights[4] = {1, 2, 4, 8};
  int correct = 0, oracle_correct = 0, balanced = 0;

  for (std::uint64_t code = 0; code < 256; ++code) {
    Bits bits(8);
    double top = 0, bottom = 0;
    for (int i = 0; i < 8; ++i) {
      bits[i] = (code >> i) & 1U;
      if (bits[i]) (i < 4 ? top : bottom) += weights[i % 4];
    }
    const auto ev = evaluate(bench, make_configuration(fpta, bench.map, bits));
    CHECK(ev.t_eval == Nanos::from_ms(1));
    if (top + bottom == 0.0) {
      CHECK(ev.decode_failed);
      CHECK(ev.fitness == 1.0);
      CHECK_FALSE(ev.logically_correct);
      continue;
    }
    const double expected = std::abs(top / (top + bottom) - 0.5);
    CHECK(ev.fitness == doctest::Approx(expected).epsilon(1e-12));
    CHECK(ev.logically_correct == (expected <= 0.02));
    correct += ev.logically_correct;
    oracle_correct += expected <= 0.02;
    balanced += top == bottom;
    if (top == bottom) CHECK(ev.fitness == 0.0);
  }
  CHECK(correct == oracle_correct);
  // top and bottom sums each take every value 0..15 exactly once
  CHECK(balanced == 15);
}

TEST_CASE("compensator evaluation") {
  const auto benches = builtin_benchmarks();
  const auto& bench = find_benchmark(benches, "example2-compensator");
  const auto an = device("AN220E04");

  CHECK(bench.step_dt() == doctest::Approx(20.0 / 4096.0));
  CHECK(bench.worst_fitness() == 200.0);

  const auto cfg = make_configuration(an, bench.map, compensator_bits(512, 256));
  const auto ev = evaluate(bench, cfg);
  CHECK(ev.t_eval == Nanos::from_ms(625));
  CHECK(ev == evaluate(bench, cfg));
  CHECK_FALSE(ev.decode_failed);

  // the same loop assembled by hand
  const double kp = 20.0 * 512 / 1023, kd = 10.0 * 256 / 1023;
  const auto loop = TransferFunction::make({kd, kp}, {1.0, 0.6 + kd, 1.0 + kp});
  const auto r = step_response(loop, 20.0, 20.0 / 4096.0);
  REQUIRE(r.settling_time);
  CHECK(ev.fitness == *r.settling_time);
  CHECK(ev.logically_correct == (*r.settling_time <= 2.0));

  SUBCASE("hardware test window is configurable") {
    Benchmark slow = bench;
    slow.test_window = Nanos::from_s(120);
    CHECK(evaluate(slow, cfg).t_eval == Nanos::from_ms(120'000));
  }

  SUBCASE("plant gain drift") {
    const std::vector<FaultSpec> drift{
        {ParameterTarget{"plant_gain"}, FaultMode::ParameterDrift, 1.5}};
    Benchmark scaled = bench;
    scaled.plant = TransferFunction::make({1.5}, {1.0, 0.6, 1.0});
    CHECK(evaluate(bench, cfg, drift).fitness == evaluate(scaled, cfg).fitness);
  }

  SUBCASE("dead derivative module reads as zero") {
    const std::vector<FaultSpec> dead{{ModuleTarget{1}, FaultMode::ModuleDead}};
    const auto no_kd = make_configuration(an, bench.map, compensator_bits(512, 0));
    CHECK(evaluate(bench, cfg, dead) == evaluate(bench, no_kd));
  }

  SUBCASE("faults after now are ignored") {
    const std::vector<FaultSpec> later{
        {ModuleTarget{1}, FaultMode::ModuleDead, 1.0, Nanos::from_s(10)}};
    CHECK(evaluate(bench, cfg, later, Nanos::from_s(9)) == ev);
  }

  SUBCASE("zero gains give a flat output that is settled from t = 0") {
    const auto zero = make_configuration(an, bench.map, compensator_bits(0, 0));
    const auto z = evaluate(bench, zero);
    CHECK(z.fitness == 0.0);
    CHECK(z.logically_correct);
  }

  SUBCASE("wrong device kind is rejected") {
    const auto fpta = device("FPTA2");
    CHECK_THROWS_AS(evaluate(bench, make_configuration(fpta, bench.map, compensator_bits(1, 1))),
                    SimError);
  }
}

TEST_CASE("step csv") {
  const auto r = step_response(TransferFunction::make({1.0}, {1.0}), 1.0, 0.5);
  CHECK(step_response_csv(r) == "time,value\n0,1\n0.5,1\n1,1\n");
}
