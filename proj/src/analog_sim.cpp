#include "ehwrt/analog_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace ehwrt {

namespace {

void strip_leading_zeros(std::vector<double>& p) {
  auto it = std::find_if(p.begin(), p.end(), [](double c) { return c != 0.0; });
  p.erase(p.begin(), it == p.end() && !p.empty() ? p.end() - 1 : it);
}

}  // namespace

TransferFunction TransferFunction::make(std::vector<double> num,
                                        std::vector<double> den) {
  if (num.empty()) num = {0.0};
  strip_leading_zeros(num);
  strip_leading_zeros(den);
  if (den.empty() || den.front() == 0.0)
    throw SimError("transfer function denominator is zero");
  for (double c : num)
    if (!std::isfinite(c)) throw SimError("non-finite numerator coefficient");
  for (double c : den)
    if (!std::isfinite(c)) throw SimError("non-finite denominator coefficient");
  if (num.size() > den.size())
    throw SimError("transfer function is improper (deg num > deg den)");
  return TransferFunction{std::move(num), std::move(den)};
}

std::optional<double> TransferFunction::dc_gain() const {
  if (den.back() == 0.0) return std::nullopt;
  return num.back() / den.back();
}

std::vector<double> poly_mul(std::span<const double> a,
                             std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

std::vector<double> poly_add(std::span<const double> a,
                             std::span<const double> b) {
  std::vector<double> out(std::max(a.size(), b.size()), 0.0);
  const std::size_t oa = out.size() - a.size();
  const std::size_t ob = out.size() - b.size();
  for (std::size_t i = 0; i < a.size(); ++i) out[oa + i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[ob + i] += b[i];
  return out;
}

std::optional<double> settling_time(std::span<const double> times,
                                    std::span<const double> values,
                                    double final_value, double band) {
  if (times.empty() || times.size() != values.size())
    throw SimError("settling_time needs matching, nonempty samples");
  const double tol = final_value == 0.0 ? band : band * std::abs(final_value);
  std::size_t first_settled = values.size();
  for (std::size_t i = values.size(); i-- > 0;) {
    if (!(std::abs(values[i] - final_value) <= tol)) break;
    first_settled = i;
  }
  if (first_settled == values.size()) return std::nullopt;
  return times[first_settled];
}

StepResponse step_response(const TransferFunction& tf, double window_s,
                           double dt_s, double band, double divergence_bound) {
  if (!(dt_s > 0.0) || !(dt_s < window_s))
    throw SimError("step_response needs 0 < dt < window");

  const std::size_t n = tf.order();
  const double lead = tf.den.front();
  // monic denominator 1, a1..an and numerator padded to b0..bn
  std::vector<double> a(n + 1), b(n + 1, 0.0);
  for (std::size_t i = 0; i <= n; ++i) a[i] = tf.den[i] / lead;
  const std::size_t pad = n + 1 - tf.num.size();
  for (std::size_t i = 0; i < tf.num.size(); ++i) b[pad + i] = tf.num[i] / lead;

  // x[k] holds the k-th derivative of the canonical state variable
  std::vector<double> c(n);
  for (std::size_t k = 0; k < n; ++k) c[k] = b[n - k] - b[0] * a[n - k];
  const double d = b[0];

  // With a constant input, one classical RK4 step on x' = Ax + Bu is the
  // affine map x <- Mx + v, M = I + hA + (hA)^2/2 + (hA)^3/6 + (hA)^4/24.
  // Precomputing M and v gives the same scheme at O(n^2) per step.
  using Matrix = std::vector<double>;  // row-major n x n
  auto matmul = [n](const Matrix& p, const Matrix& q) {
    Matrix out(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] += p[i * n + k] * q[k * n + j];
    return out;
  };
  Matrix ha(n * n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) ha[k * n + k + 1] = dt_s;
  for (std::size_t k = 0; k < n; ++k) ha[(n - 1) * n + k] = -a[n - k] * dt_s;

  Matrix m(n * n, 0.0), series(n * n, 0.0), power(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) power[i * n + i] = 1.0;
  // series = I + hA/2 + (hA)^2/6 + (hA)^3/24, so v = h * series * B
  const double mcoef[5] = {1.0, 1.0, 1.0 / 2.0, 1.0 / 6.0, 1.0 / 24.0};
  const double vcoef[4] = {1.0, 1.0 / 2.0, 1.0 / 6.0, 1.0 / 24.0};
  for (int p = 0; p <= 4; ++p) {
    for (std::size_t i = 0; i < n * n; ++i) {
      m[i] += mcoef[p] * power[i];
      if (p < 4) series[i] += vcoef[p] * power[i];
    }
    if (p < 4) power = matmul(power, ha);
  }
  std::vector<double> v(n, 0.0);
  if (n > 0)
    for (std::size_t i = 0; i < n; ++i) v[i] = dt_s * series[i * n + (n - 1)];

  auto output = [&](const std::vector<double>& x) {
    double y = d;
    for (std::size_t k = 0; k < n; ++k) y += c[k] * x[k];
    return y;
  };

  const auto steps = static_cast<std::size_t>(std::llround(window_s / dt_s));
  StepResponse r;
  r.times.reserve(steps + 1);
  r.values.reserve(steps + 1);

  std::vector<double> x(n, 0.0), next(n);
  r.times.push_back(0.0);
  r.values.push_back(output(x));
  for (std::size_t s = 1; s <= steps; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = v[i];
      for (std::size_t j = 0; j < n; ++j) acc += m[i * n + j] * x[j];
      next[i] = acc;
    }
    x.swap(next);
    const double y = output(x);
    r.times.push_back(static_cast<double>(s) * dt_s);
    r.values.push_back(y);
    if (!std::isfinite(y) || std::abs(y) > divergence_bound) {
      r.unstable = true;
      break;
    }
  }

  r.final_value = tf.dc_gain();
  if (r.final_value && !r.unstable)
    r.settling_time = settling_time(r.times, r.values, *r.final_value, band);
  return r;
}

std::string step_response_csv(const StepResponse& r) {
  std::string out = "time,value\n";
  char buf[64];
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9g,%.17g\n", r.times[i], r.values[i]);
    out += buf;
  }
  return out;
}

double output_ratio(const ResistiveNetwork& net) {
  const int n = net.node_count;
  if (n < 3) throw SimError("network needs ground, input and output nodes");

  // nodes tied to a source through closed branches
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (const auto& br : net.branches) {
    if (br.a < 0 || br.a >= n || br.b < 0 || br.b >= n)
      throw SimError("branch references a missing node");
    if (br.conductance > 0.0) parent[root(br.a)] = root(br.b);
  }
  const int src_g = root(ResistiveNetwork::kGround);
  const int src_i = root(ResistiveNetwork::kInput);
  const int out_root = root(ResistiveNetwork::kOutput);
  if (out_root != src_g && out_root != src_i)
    throw SimError("output node is floating");

  std::vector<int> unknown_index(n, -1);
  int m = 0;
  for (int v = 2; v < n; ++v) {
    const int rv = root(v);
    if (rv == src_g || rv == src_i) unknown_index[v] = m++;
  }

  std::vector<std::vector<double>> g(m, std::vector<double>(m + 1, 0.0));
  auto fixed_voltage = [](int v) { return v == ResistiveNetwork::kInput ? 1.0 : 0.0; };
  for (const auto& br : net.branches) {
    if (!(br.conductance > 0.0) || br.a == br.b) continue;
    const int ia = br.a >= 2 ? unknown_index[br.a] : -1;
    const int ib = br.b >= 2 ? unknown_index[br.b] : -1;
    const double c = br.conductance;
    if (ia >= 0) {
      g[ia][ia] += c;
      if (ib >= 0) g[ia][ib] -= c;
      else g[ia][m] += c * fixed_voltage(br.b);
    }
    if (ib >= 0) {
      g[ib][ib] += c;
      if (ia >= 0) g[ib][ia] -= c;
      else g[ib][m] += c * fixed_voltage(br.a);
    }
  }

  for (int col = 0; col < m; ++col) {
    int piv = col;
    for (int r = col + 1; r < m; ++r)
      if (std::abs(g[r][col]) > std::abs(g[piv][col])) piv = r;
    if (std::abs(g[piv][col]) < 1e-12) throw SimError("singular nodal matrix");
    std::swap(g[piv], g[col]);
    for (int r = 0; r < m; ++r) {
      if (r == col || g[r][col] == 0.0) continue;
      const double f = g[r][col] / g[col][col];
      for (int k = col; k <= m; ++k) g[r][k] -= f * g[col][k];
    }
  }
  const int out = unknown_index[ResistiveNetwork::kOutput];
  return g[out][m] / g[out][out];
}

void Benchmark::validate() const {
  if (id.empty()) throw SimError("benchmark needs an id");
  if (!map) throw SimError(id + ": missing decode map");
  try {
    map->validate();
  } catch (const DeviceError& e) {
    throw SimError(id + ": " + e.what());
  }
  if (test_window <= Nanos::zero()) throw SimError(id + ": test_window must be > 0");
  if (!(band > 0.0 && band < 1.0)) throw SimError(id + ": band must be in (0, 1)");

  auto need_parameter = [&](const std::string& name) {
    const auto* f = map->find(name);
    if (!f || f->kind != FieldKind::Parameter)
      throw SimError(id + ": decode map has no parameter field '" + name + "'");
  };

  if (kind == BenchmarkKind::StepResponse) {
    need_parameter(kp_field);
    need_parameter(kd_field);
    if (plant.den.empty()) throw SimError(id + ": missing plant");
    if (plant.num.size() >= plant.den.size())
      throw SimError(id + ": plant must be strictly proper for PD control");
    if (!(sim_window_s > 0.0)) throw SimError(id + ": sim_window must be > 0");
    if (!(step_dt() < sim_window_s)) throw SimError(id + ": dt must be < sim_window");
    if (!(max_settling_time_s > 0.0))
      throw SimError(id + ": max_settling_time must be > 0");
  } else {
    if (node_count < 3) throw SimError(id + ": network needs >= 3 nodes");
    for (const auto& br : branches) {
      if (br.a < 0 || br.a >= node_count || br.b < 0 || br.b >= node_count)
        throw SimError(id + ": branch node out of range");
      if (!(br.conductance > 0.0))
        throw SimError(id + ": branch conductance must be > 0");
      if (!br.switch_field.empty()) {
        const auto* f = map->find(br.switch_field);
        if (!f || f->kind != FieldKind::Switch)
          throw SimError(id + ": no switch field '" + br.switch_field + "'");
      }
    }
    if (!(target_dc_ratio >= 0.0 && target_dc_ratio <= 1.0))
      throw SimError(id + ": target_dc_ratio must be in [0, 1]");
  }
}

double Benchmark::step_dt() const {
  return dt_s > 0.0 ? dt_s : sim_window_s / 4096.0;
}

double Benchmark::worst_fitness() const {
  return kind == BenchmarkKind::StepResponse ? 10.0 * sim_window_s : 1.0;
}

std::uint64_t gray_to_binary(std::uint64_t gray) {
  for (std::uint64_t shift = 1; shift < 64; shift <<= 1) gray ^= gray >> shift;
  return gray;
}

std::uint64_t binary_to_gray(std::uint64_t value) { return value ^ (value >> 1); }

double decode_parameter(const DecodeField& field,
                        std::span<const std::uint8_t> bits, bool clamp) {
  if (field.offset + field.width > bits.size())
    throw SimError("field '" + field.name + "' runs past the configuration");
  std::uint64_t code = 0;
  for (std::size_t i = 0; i < field.width; ++i)
    code = (code << 1) | (bits[field.offset + i] & 1U);  // MSB first
  std::uint64_t level = gray_to_binary(code);
  const std::uint64_t levels = field.level_count();
  if (level >= levels) {
    if (!clamp)
      throw SimError("field '" + field.name + "' code " + std::to_string(level) +
                     " is out of range");
    level = levels - 1;
  }
  return field.min + (field.max - field.min) * static_cast<double>(level) /
                         static_cast<double>(levels - 1);
}

namespace {

double field_value(const Benchmark& bench, const EffectiveCircuitState& state,
                   const std::string& name) {
  const DecodeField& f = *bench.map->find(name);
  if (f.module && state.dead_modules.contains(*f.module)) return 0.0;
  return decode_parameter(f, state.bits, bench.clamp) * state.multiplier(name);
}

}  // namespace

DecodedCircuit decode(const Benchmark& bench, const EffectiveCircuitState& state) {
  if (state.kind != bench.device_kind)
    throw SimError(bench.id + ": benchmark expects an " +
                   to_string(bench.device_kind) + " state");
  if (state.bits.size() != bench.map->length())
    throw SimError(bench.id + ": state length does not match the decode map");

  if (bench.kind == BenchmarkKind::StepResponse) {
    const double kp = field_value(bench, state, bench.kp_field);
    const double kd = field_value(bench, state, bench.kd_field);
    // an ideal PD term is improper on its own; only the loop must be proper
    if (kd == 0.0) return TransferFunction{{kp}, {1.0}};
    return TransferFunction{{kd, kp}, {1.0}};
  }

  ResistiveNetwork net;
  net.node_count = bench.node_count;
  for (const auto& br : bench.branches) {
    double g = br.conductance;
    if (!br.switch_field.empty()) {
      const DecodeField& f = *bench.map->find(br.switch_field);
      const bool dead = f.module && state.dead_modules.contains(*f.module);
      if (dead || state.bits[f.offset] == 0) continue;
      g *= state.multiplier(br.switch_field);
    }
    net.branches.push_back({br.a, br.b, g});
  }
  return net;
}

TransferFunction closed_loop(const Benchmark& bench,
                             const TransferFunction& controller,
                             const EffectiveCircuitState& state) {
  const double gain = state.multiplier(bench.plant_gain_parameter);
  std::vector<double> plant_num = bench.plant.num;
  for (double& c : plant_num) c *= gain;
  // T = Nc Np / (Dc Dp + Nc Np)
  const auto open_num = poly_mul(controller.num, plant_num);
  const auto open_den = poly_mul(controller.den, bench.plant.den);
  return TransferFunction::make(open_num, poly_add(open_den, open_num));
}

namespace {

void check_match(const Benchmark& bench, const Configuration& config) {
  if (config.device->kind != bench.device_kind)
    throw SimError(bench.id + " needs an " + to_string(bench.device_kind) +
                   " device, got " + config.device->name);
  if (config.bits.size() != bench.map->length())
    throw SimError(bench.id + ": configuration length " +
                   std::to_string(config.bits.size()) + " != decode map length " +
                   std::to_string(bench.map->length()));
}

}  // namespace

StepResponse simulate_step(const Benchmark& bench, const Configuration& config,
                           std::span<const FaultSpec> faults) {
  if (bench.kind != BenchmarkKind::StepResponse)
    throw SimError(bench.id + " is not a step-response benchmark");
  check_match(bench, config);
  const auto state = apply_faults(config, faults);
  const auto controller = std::get<TransferFunction>(decode(bench, state));
  auto r = step_response(closed_loop(bench, controller, state), bench.sim_window_s,
                         bench.step_dt(), bench.band);
  r.test_duration = bench.test_window;
  return r;
}

Evaluation evaluate(const Benchmark& bench, const Configuration& config,
                    std::span<const FaultSpec> faults, Nanos now) {
  check_match(bench, config);
  Evaluation ev;
  ev.t_eval = bench.test_window;
  const auto state = apply_faults(config, faults, now);

  try {
    const DecodedCircuit circuit = decode(bench, state);
    if (bench.kind == BenchmarkKind::StepResponse) {
      const auto loop = closed_loop(bench, std::get<TransferFunction>(circuit), state);
      const auto r = step_response(loop, bench.sim_window_s, bench.step_dt(),
                                   bench.band);
      ev.fitness = r.settling_time ? *r.settling_time : bench.worst_fitness();
      ev.logically_correct =
          r.settling_time && *r.settling_time <= bench.max_settling_time_s;
    } else {
      const double ratio = output_ratio(std::get<ResistiveNetwork>(circuit));
      ev.fitness = std::abs(ratio - bench.target_dc_ratio);
      ev.logically_correct = ev.fitness <= bench.band;
    }
  } catch (const SimError&) {
    ev.fitness = bench.worst_fitness();
    ev.logically_correct = false;
    ev.decode_failed = true;
  }
  return ev;
}

std::vector<Benchmark> builtin_benchmarks() {
  std::vector<Benchmark> out;

  {
    Benchmark b;
    b.id = "example2-compensator";
    b.description =
        "Stand-in antenna positioner: PD compensator around 1/(s^2+0.6s+1), "
        "settle within 2 s of plant time; 625 ms hardware step test";
    b.kind = BenchmarkKind::StepResponse;
    b.device_kind = DeviceKind::FPAA;
    DecodeMap m;
    m.fields.push_back({"kp", 0, 10, FieldKind::Parameter, 0.0, 20.0, 0, 0});
    m.fields.push_back({"kd", 10, 10, FieldKind::Parameter, 0.0, 10.0, 0, 1});
    m.physical_parameters = {"plant_gain"};
    b.map = std::make_shared<const DecodeMap>(std::move(m));
    b.plant = TransferFunction::make({1.0}, {1.0, 0.6, 1.0});
    b.max_settling_time_s = 2.0;
    b.sim_window_s = 20.0;
    b.test_window = Nanos::from_ms(625);
    out.push_back(std::move(b));
  }

  {
    Benchmark b;
    b.id = "fpta-divider";
    b.description =
        "Stand-in FPTA resistive divider: 8 switched conductances (1,2,4,8 "
        "on each side of the output), target DC ratio 0.5";
    b.kind = BenchmarkKind::DcRatio;
    b.device_kind = DeviceKind::FPTA;
    DecodeMap m;
    const double weights[4] = {1.0, 2.0, 4.0, 8.0};
    for (int i = 0; i < 8; ++i) {
      const std::string name = "s" + std::to_string(i);
      m.fields.push_back({name, static_cast<std::size_t>(i), 1, FieldKind::Switch,
                          0.0, 0.0, 0, i});
      const bool top = i < 4;
      b.branches.push_back({top ? ResistiveNetwork::kInput : ResistiveNetwork::kOutput,
                            top ? ResistiveNetwork::kOutput : ResistiveNetwork::kGround,
                            weights[i % 4], name});
    }
    b.map = std::make_shared<const DecodeMap>(std::move(m));
    b.node_count = 3;
    b.target_dc_ratio = 0.5;
    b.test_window = Nanos::from_ms(1);
    out.push_back(std::move(b));
  }

  for (const auto& b : out) b.validate();
  return out;
}

const Benchmark& find_benchmark(std::span<const Benchmark> all, std::string_view id) {
  for (const auto& b : all)
    if (b.id == id) return b;
  throw SimError("unknown benchmark '" + std::string(id) + "'");
}

}  // namespace ehwrt
