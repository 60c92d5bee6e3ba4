#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

#include "ehwrt/harness.hpp"
#include "yaml_support.hpp"

namespace ehwrt {

using detail::YamlContext;

std::vector<DeviceProfile> all_profiles(std::span<const DeviceProfile> extra) {
  auto out = builtin_profiles();
  for (const auto& p : extra) {
    for (const auto& q : out)
      if (q.name == p.name)
        throw DeviceError("profile '" + p.name + "' is already defined");
    out.push_back(p);
  }
  return out;
}

namespace {

Selection parse_selection(const YamlContext& ctx, const YAML::Node& node) {
  const std::string s = ctx.str(node);
  static const std::regex tournament(R"(\s*tournament\s*\(\s*(\d+)\s*\)\s*)");
  static const std::regex truncation(R"(\s*truncation\s*\(\s*([0-9.eE+-]+)\s*\)\s*)");
  std::smatch m;
  if (std::regex_match(s, m, tournament)) return Tournament{std::stoi(m[1])};
  if (std::regex_match(s, m, truncation)) {
    try {
      return Truncation{std::stod(m[1])};
    } catch (const std::exception&) {
      ctx.fail(node, "bad truncation fraction");
    }
  }
  if (s == "roulette" || s == "roulette_wheel") return RouletteWheel{};
  ctx.fail(node, "selection must be tournament(k), truncation(f) or roulette");
}

EAParams parse_ea(const YamlContext& ctx, const YAML::Node& node) {
  ctx.expect_map(node, "ea");
  ctx.expect_keys(node, {"preset", "population_size", "max_generations",
                         "selection", "mutation_rate", "crossover_rate", "elitism",
                         "stop_on_success", "warm_start"});
  EAParams p;
  if (const auto n = node["preset"]) {
    const std::string s = ctx.str(n);
    if (s == "PaperRecommended") p.apply(Preset::PaperRecommended);
    else if (s == "PlainGA") p.apply(Preset::PlainGA);
    else ctx.fail(n, "preset must be PaperRecommended or PlainGA");
  }
  if (const auto n = node["population_size"]) p.population_size = static_cast<int>(ctx.integer(n));
  if (const auto n = node["max_generations"]) p.max_generations = static_cast<int>(ctx.integer(n));
  if (const auto n = node["selection"]) p.selection = parse_selection(ctx, n);
  if (const auto n = node["mutation_rate"]) p.mutation_rate = ctx.real(n);
  if (const auto n = node["crossover_rate"]) p.crossover_rate = ctx.real(n);
  if (const auto n = node["elitism"]) p.elitism = static_cast<int>(ctx.integer(n));
  if (const auto n = node["stop_on_success"]) p.stop_on_success = ctx.boolean(n);
  if (const auto n = node["warm_start"]) p.warm_start = ctx.boolean(n);
  try {
    p.validate();
  } catch (const EvolutionError& e) {
    ctx.fail(node, e.what());
  }
  return p;
}

FaultSpec parse_fault(const YamlContext& ctx, const YAML::Node& node) {
  ctx.expect_map(node, "fault");
  ctx.expect_keys(node, {"switch", "module", "parameter", "mode", "multiplier", "onset"});
  FaultSpec f;
  const int targets = (node["switch"] ? 1 : 0) + (node["module"] ? 1 : 0) +
                      (node["parameter"] ? 1 : 0);
  if (targets != 1) ctx.fail(node, "a fault names exactly one of switch, module, parameter");
  if (const auto n = node["switch"]) {
    const auto v = ctx.integer(n);
    if (v < 0) ctx.fail(n, "switch index must be >= 0");
    f.target = SwitchTarget{static_cast<std::size_t>(v)};
  } else if (const auto n = node["module"]) {
    f.target = ModuleTarget{static_cast<int>(ctx.integer(n))};
  } else {
    f.target = ParameterTarget{ctx.str(node["parameter"])};
  }
  const auto mode = ctx.require(node, "mode");
  const std::string m = ctx.str(mode);
  if (m == "stuck_open") f.mode = FaultMode::StuckOpen;
  else if (m == "stuck_closed") f.mode = FaultMode::StuckClosed;
  else if (m == "module_dead") f.mode = FaultMode::ModuleDead;
  else if (m == "drift") f.mode = FaultMode::ParameterDrift;
  else ctx.fail(mode, "mode must be stuck_open, stuck_closed, module_dead or drift");
  if (const auto n = node["multiplier"]) {
    if (f.mode != FaultMode::ParameterDrift) ctx.fail(n, "multiplier only applies to drift");
    f.multiplier = ctx.real(n);
  } else if (f.mode == FaultMode::ParameterDrift) {
    ctx.fail(node, "drift faults need a multiplier");
  }
  if (const auto n = node["onset"]) f.onset = ctx.duration(n, "ms");
  return f;
}

std::vector<double> parse_coefficients(const YamlContext& ctx, const YAML::Node& node) {
  if (!node.IsSequence()) ctx.fail(node, "expected a coefficient list");
  std::vector<double> out;
  for (const auto& c : node) out.push_back(ctx.real(c));
  return out;
}

double seconds_of(const YamlContext& ctx, const YAML::Node& node) {
  return ctx.duration(node, "s").seconds();
}

Benchmark parse_benchmark(const YamlContext& ctx, const YAML::Node& node) {
  const auto builtins = builtin_benchmarks();
  if (node.IsScalar()) {
    try {
      return find_benchmark(builtins, ctx.str(node));
    } catch (const SimError& e) {
      ctx.fail(node, e.what());
    }
  }
  ctx.expect_map(node, "benchmark");
  ctx.expect_keys(node, {"base", "id", "description", "kind", "device_kind", "fields",
                         "physical_parameters", "plant", "kp_field", "kd_field",
                         "plant_gain_parameter", "max_settling_time", "sim_window",
                         "dt", "nodes", "branches", "target_dc_ratio", "test_window",
                         "band", "clamp"});
  Benchmark b;
  if (const auto n = node["base"]) {
    try {
      b = find_benchmark(builtins, ctx.str(n));
    } catch (const SimError& e) {
      ctx.fail(n, e.what());
    }
  } else {
    ctx.require(node, "id");
    ctx.require(node, "kind");
    ctx.require(node, "fields");
    ctx.require(node, "test_window");
  }
  if (const auto n = node["id"]) b.id = ctx.str(n);
  if (const auto n = node["description"]) b.description = ctx.str(n);
  if (const auto n = node["kind"]) {
    const std::string k = ctx.str(n);
    if (k == "step_response") b.kind = BenchmarkKind::StepResponse;
    else if (k == "dc_ratio") b.kind = BenchmarkKind::DcRatio;
    else ctx.fail(n, "kind must be step_response or dc_ratio");
    b.device_kind = b.kind == BenchmarkKind::StepResponse ? DeviceKind::FPAA
                                                          : DeviceKind::FPTA;
  }
  if (const auto n = node["device_kind"]) {
    try {
      b.device_kind = parse_device_kind(ctx.str(n));
    } catch (const DeviceError& e) {
      ctx.fail(n, e.what());
    }
  }
  if (node["fields"] || node["physical_parameters"]) {
    DecodeMap m = b.map ? *b.map : DecodeMap{};
    if (const auto fields = node["fields"]) {
      if (!fields.IsSequence()) ctx.fail(fields, "fields must be a list");
      m.fields.clear();
      for (const auto& fn : fields) {
        ctx.expect_map(fn, "decode field");
        ctx.expect_keys(fn, {"name", "offset", "width", "kind", "min", "max", "levels", "module"});
        DecodeField f;
        f.name = ctx.str(ctx.require(fn, "name"));
        f.offset = static_cast<std::size_t>(ctx.integer(ctx.require(fn, "offset")));
        f.width = fn["width"] ? static_cast<std::size_t>(ctx.integer(fn["width"])) : 1;
        const std::string kind = ctx.str(ctx.require(fn, "kind"));
        if (kind == "switch") f.kind = FieldKind::Switch;
        else if (kind == "parameter") f.kind = FieldKind::Parameter;
        else if (kind == "reserved") f.kind = FieldKind::Reserved;
        else ctx.fail(fn["kind"], "field kind must be switch, parameter or reserved");
        if (const auto v = fn["min"]) f.min = ctx.real(v);
        if (const auto v = fn["max"]) f.max = ctx.real(v);
        if (const auto v = fn["levels"]) f.levels = static_cast<std::uint64_t>(ctx.integer(v));
        if (const auto v = fn["module"]) f.module = static_cast<int>(ctx.integer(v));
        m.fields.push_back(std::move(f));
      }
    }
    if (const auto pp = node["physical_parameters"]) {
      if (!pp.IsSequence()) ctx.fail(pp, "physical_parameters must be a list");
      m.physical_parameters.clear();
      for (const auto& p : pp) m.physical_parameters.push_back(ctx.str(p));
    }
    b.map = std::make_shared<const DecodeMap>(std::move(m));
  }
  if (const auto n = node["plant"]) {
    ctx.expect_map(n, "plant");
    ctx.expect_keys(n, {"num", "den"});
    try {
      b.plant = TransferFunction::make(parse_coefficients(ctx, ctx.require(n, "num")),
                                       parse_coefficients(ctx, ctx.require(n, "den")));
    } catch (const SimError& e) {
      ctx.fail(n, e.what());
    }
  }
  if (const auto n = node["kp_field"]) b.kp_field = ctx.str(n);
  if (const auto n = node["kd_field"]) b.kd_field = ctx.str(n);
  if (const auto n = node["plant_gain_parameter"]) b.plant_gain_parameter = ctx.str(n);
  if (const auto n = node["max_settling_time"]) b.max_settling_time_s = seconds_of(ctx, n);
  if (const auto n = node["sim_window"]) b.sim_window_s = seconds_of(ctx, n);
  if (const auto n = node["dt"]) b.dt_s = seconds_of(ctx, n);
  if (const auto n = node["nodes"]) b.node_count = static_cast<int>(ctx.integer(n));
  if (const auto n = node["branches"]) {
    if (!n.IsSequence()) ctx.fail(n, "branches must be a list");
    b.branches.clear();
    for (const auto& bn : n) {
      ctx.expect_map(bn, "branch");
      ctx.expect_keys(bn, {"a", "b", "g", "switch"});
      NetworkBranch br;
      br.a = static_cast<int>(ctx.integer(ctx.require(bn, "a")));
      br.b = static_cast<int>(ctx.integer(ctx.require(bn, "b")));
      br.conductance = ctx.real(ctx.require(bn, "g"));
      if (const auto s = bn["switch"]) br.switch_field = ctx.str(s);
      b.branches.push_back(std::move(br));
    }
  }
  if (const auto n = node["target_dc_ratio"]) b.target_dc_ratio = ctx.real(n);
  if (const auto n = node["test_window"]) b.test_window = ctx.duration(n, "ms");
  if (const auto n = node["band"]) b.band = ctx.real(n);
  if (const auto n = node["clamp"]) b.clamp = ctx.boolean(n);
  try {
    b.validate();
  } catch (const SimError& e) {
    ctx.fail(node, e.what());
  }
  return b;
}

std::vector<std::uint64_t> parse_seeds(const YamlContext& ctx, const YAML::Node& node) {
  std::vector<std::uint64_t> seeds;
  if (node.IsSequence()) {
    for (const auto& s : node) {
      const auto v = ctx.integer(s);
      if (v < 0) ctx.fail(s, "seeds must be >= 0");
      seeds.push_back(static_cast<std::uint64_t>(v));
    }
  } else if (node.IsMap()) {
    ctx.expect_keys(node, {"from", "count"});
    const auto from = ctx.integer(ctx.require(node, "from"));
    const auto count = ctx.integer(ctx.require(node, "count"));
    if (from < 0 || count < 0) ctx.fail(node, "seed range must be non-negative");
    for (std::int64_t i = 0; i < count; ++i)
      seeds.push_back(static_cast<std::uint64_t>(from + i));
  } else {
    const auto v = ctx.integer(node);
    if (v < 0) ctx.fail(node, "seeds must be >= 0");
    seeds.push_back(static_cast<std::uint64_t>(v));
  }
  if (seeds.empty()) ctx.fail(node, "at least one seed is required");
  return seeds;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin,
                        std::span<const DeviceProfile> profiles) {
  const YamlContext ctx{origin};
  const YAML::Node root = detail::load_yaml_text(text, origin);
  ctx.expect_map(root, "scenario");
  ctx.expect_keys(root, {"schema", "name", "device", "benchmark", "faults", "ea",
                         "requirement", "seeds", "pre_fault", "deadline_boundary"});

  const auto schema = ctx.require(root, "schema");
  if (ctx.integer(schema) != kScenarioSchema)
    ctx.fail(schema, "unsupported schema version (expected " +
                         std::to_string(kScenarioSchema) + ")");

  Scenario s;
  s.name = root["name"] ? ctx.str(root["name"]) : origin;

  const auto dev = ctx.require(root, "device");
  if (dev.IsScalar()) {
    try {
      s.device = find_profile(all_profiles(profiles), ctx.str(dev));
    } catch (const DeviceError& e) {
      ctx.fail(dev, e.what());
    }
  } else {
    s.device = ctx.profile(dev);
  }

  const auto bench = ctx.require(root, "benchmark");
  s.benchmark = parse_benchmark(ctx, bench);
  if (s.benchmark.device_kind != s.device.kind)
    ctx.fail(bench, s.benchmark.id + " needs an " + to_string(s.benchmark.device_kind) +
                        " device but " + s.device.name + " is " +
                        to_string(s.device.kind));
  if (s.benchmark.map->length() > s.device.config_bits())
    ctx.fail(bench, s.benchmark.id + " does not fit the " + s.device.name + " bitstream");

  if (const auto faults = root["faults"]) {
    if (!faults.IsSequence() && !faults.IsNull()) ctx.fail(faults, "faults must be a list");
    for (const auto& fn : faults) {
      FaultSpec f = parse_fault(ctx, fn);
      try {
        validate_fault(f, s.device, *s.benchmark.map);
      } catch (const DeviceError& e) {
        ctx.fail(fn, e.what());
      }
      s.faults.push_back(std::move(f));
    }
  }

  s.ea = parse_ea(ctx, ctx.require(root, "ea"));

  const auto req = ctx.require(root, "requirement");
  ctx.expect_map(req, "requirement");
  ctx.expect_keys(req, {"deadline", "classification", "description"});
  s.requirement.deadline = ctx.duration(ctx.require(req, "deadline"), "ms");
  if (s.requirement.deadline < Nanos::zero())
    ctx.fail(req["deadline"], "deadline must not be negative");
  if (const auto c = req["classification"]) {
    const std::string v = ctx.str(c);
    if (v == "hard") s.requirement.classification = Criticality::Hard;
    else if (v == "soft") s.requirement.classification = Criticality::Soft;
    else ctx.fail(c, "classification must be hard or soft");
  }
  if (const auto d = req["description"]) s.requirement.description = ctx.str(d);

  if (const auto b = root["deadline_boundary"]) {
    const std::string v = ctx.str(b);
    if (v == "inclusive") s.boundary = DeadlineBoundary::Inclusive;
    else if (v == "strict") s.boundary = DeadlineBoundary::Strict;
    else ctx.fail(b, "deadline_boundary must be inclusive or strict");
  }

  s.seeds = parse_seeds(ctx, ctx.require(root, "seeds"));

  if (const auto pf = root["pre_fault"]) {
    const std::string bits = ctx.str(pf);
    if (bits.size() != s.benchmark.map->length())
      ctx.fail(pf, "pre_fault must have " + std::to_string(s.benchmark.map->length()) +
                       " bits");
    Bits v;
    for (char c : bits) {
      if (c != '0' && c != '1') ctx.fail(pf, "pre_fault must be a 0/1 string");
      v.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    s.pre_fault = std::move(v);
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path,
                       std::span<const DeviceProfile> profiles) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.string(), profiles);
}

}  // namespace ehwrt
