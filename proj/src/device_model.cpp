#include "ehwrt/device_model.hpp"

#include <algorithm>

#include "ehwrt/rng.hpp"
#include "yaml_support.hpp"

namespace ehwrt {

const char* to_string(DeviceKind kind) {
  return kind == DeviceKind::FPAA ? "FPAA" : "FPTA";
}

DeviceKind parse_device_kind(std::string_view text) {
  if (text == "FPAA" || text == "fpaa") return DeviceKind::FPAA;
  if (text == "FPTA" || text == "fpta") return DeviceKind::FPTA;
  throw DeviceError("unknown device kind '" + std::string(text) +
                    "' (expected FPAA or FPTA)");
}

std::size_t DeviceProfile::config_bits() const {
  if (transfer) return static_cast<std::size_t>(transfer->bitstream_bytes) * 8;
  return static_cast<std::size_t>(size) * 8 * 8;
}

void DeviceProfile::validate() const {
  if (name.empty()) throw DeviceError("device profile needs a name");
  if (size <= 0) throw DeviceError(name + ": size must be positive");
  if (t_program <= Nanos::zero())
    throw DeviceError(name + ": t_program must be > 0");
  if (transfer) {
    if (transfer->bus_width_bits <= 0 || transfer->clock_hz <= 0)
      throw DeviceError(name + ": transfer bus width and clock must be > 0");
    if (transfer->bitstream_bytes < 0)
      throw DeviceError(name + ": negative bitstream size");
    if (transfer_time(*this) > t_program)
      throw DeviceError(name + ": transfer time " +
                        format_human(transfer_time(*this)) +
                        " exceeds t_program " + format_human(t_program));
  }
}

std::vector<DeviceProfile> builtin_profiles() {
  std::vector<DeviceProfile> out;
  out.push_back({"ispPAC10", DeviceKind::FPAA, 4, Nanos::from_ms(100),
                 std::nullopt, "Lattice Semiconductor"});
  out.push_back({"AN220E04", DeviceKind::FPAA, 4, Nanos::from_us(3800),
                 TransferGeometry{1, 10'000'000, 18 * 256},
                 "Anadigm; 18 banks x 256 bytes reloaded, serial 10 MHz"});
  // Bitstream size is not published; 8 bytes per cell stands in.
  out.push_back({"FPTA2", DeviceKind::FPTA, 64, Nanos{8'000},
                 TransferGeometry{8, 160'000'000, 64 * 8},
                 "JPL FPTA2; byte-wide transfers at 160 MHz"});
  return out;
}

const DeviceProfile& find_profile(std::span<const DeviceProfile> profiles,
                                  std::string_view name) {
  auto it = std::find_if(profiles.begin(), profiles.end(),
                         [&](const DeviceProfile& p) { return p.name == name; });
  if (it == profiles.end()) {
    std::string known;
    for (const auto& p : profiles) known += (known.empty() ? "" : ", ") + p.name;
    throw DeviceError("unknown device '" + std::string(name) + "' (known: " +
                      known + ")");
  }
  return *it;
}

std::vector<DeviceProfile> load_profiles(const std::filesystem::path& path) {
  const detail::YamlContext ctx{path.string()};
  const YAML::Node root = detail::load_yaml_file(path.string());
  YAML::Node list = root;
  if (root.IsMap()) list = ctx.require(root, "profiles");
  if (!list.IsSequence()) ctx.fail(list, "expected a list of device profiles");
  std::vector<DeviceProfile> out;
  for (const auto& node : list) {
    DeviceProfile p = ctx.profile(node);
    for (const auto& q : out)
      if (q.name == p.name) ctx.fail(node, "duplicate profile '" + p.name + "'");
    out.push_back(std::move(p));
  }
  return out;
}

Nanos transfer_time(const DeviceProfile& profile) {
  if (!profile.transfer)
    throw DeviceError(profile.name + ": no transfer geometry");
  const auto& t = *profile.transfer;
  const __int128 num =
      static_cast<__int128>(t.bitstream_bytes) * 8 * 1'000'000'000;
  const __int128 den = static_cast<__int128>(t.bus_width_bits) * t.clock_hz;
  return Nanos{static_cast<std::int64_t>((num + den / 2) / den)};
}

std::uint64_t DecodeField::level_count() const {
  const std::uint64_t full = width >= 64 ? ~0ULL : (1ULL << width);
  return levels == 0 ? full : std::min(levels, full);
}

std::size_t DecodeMap::length() const {
  std::size_t n = 0;
  for (const auto& f : fields) n = std::max(n, f.offset + f.width);
  return n;
}

const DecodeField* DecodeMap::find(std::string_view name) const {
  for (const auto& f : fields)
    if (f.name == name) return &f;
  return nullptr;
}

bool DecodeMap::has_parameter(std::string_view id) const {
  if (const auto* f = find(id); f && f->kind != FieldKind::Reserved) return true;
  return std::find(physical_parameters.begin(), physical_parameters.end(), id) !=
         physical_parameters.end();
}

void DecodeMap::validate() const {
  std::vector<const DecodeField*> order;
  for (const auto& f : fields) {
    if (f.width == 0) throw DeviceError("decode field '" + f.name + "' is empty");
    if (f.kind == FieldKind::Switch && f.width != 1)
      throw DeviceError("switch field '" + f.name + "' must be 1 bit wide");
    if (f.kind == FieldKind::Parameter) {
      if (f.width > 32)
        throw DeviceError("parameter field '" + f.name + "' wider than 32 bits");
      if (!(f.max >= f.min))
        throw DeviceError("parameter field '" + f.name + "' has max < min");
      if (f.levels == 1)
        throw DeviceError("parameter field '" + f.name + "' needs >= 2 levels");
    }
    order.push_back(&f);
  }
  std::sort(order.begin(), order.end(),
            [](auto* a, auto* b) { return a->offset < b->offset; });
  std::size_t next = 0;
  for (const auto* f : order) {
    if (f->offset < next)
      throw DeviceError("decode field '" + f->name + "' overlaps bit " +
                        std::to_string(f->offset));
    if (f->offset > next)
      throw DeviceError("bits " + std::to_string(next) + ".." +
                        std::to_string(f->offset - 1) + " are unmapped");
    next = f->offset + f->width;
  }
  for (std::size_t i = 0; i < fields.size(); ++i)
    for (std::size_t j = i + 1; j < fields.size(); ++j)
      if (fields[i].name == fields[j].name)
        throw DeviceError("duplicate decode field '" + fields[i].name + "'");
}

DecodeMap DecodeMap::raw(std::size_t bits) {
  DecodeMap m;
  if (bits > 0) m.fields.push_back({"raw", 0, bits, FieldKind::Reserved, 0.0, 0.0, 0, std::nullopt});
  return m;
}

Configuration make_configuration(std::shared_ptr<const DeviceProfile> device,
                                 std::shared_ptr<const DecodeMap> map,
                                 Bits bits) {
  if (!device || !map) throw DeviceError("configuration needs device and map");
  if (bits.size() != map->length())
    throw DeviceError("configuration has " + std::to_string(bits.size()) +
                      " bits, decode map expects " +
                      std::to_string(map->length()));
  if (map->length() > device->config_bits())
    throw DeviceError("decode map (" + std::to_string(map->length()) +
                      " bits) does not fit the " + device->name + " bitstream (" +
                      std::to_string(device->config_bits()) + " bits)");
  for (auto b : bits)
    if (b > 1) throw DeviceError("configuration bits must be 0 or 1");
  return Configuration{std::move(device), std::move(map), std::move(bits)};
}

Configuration random_configuration(const DeviceProfile& profile,
                                   std::uint64_t seed) {
  const std::size_t n = profile.config_bits();
  Rng rng(seed);
  Bits bits(n);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 64 == 0) word = rng.next_u64();
    bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1U);
  }
  return make_configuration(std::make_shared<const DeviceProfile>(profile),
                            std::make_shared<const DecodeMap>(DecodeMap::raw(n)),
                            std::move(bits));
}

const char* to_string(FaultMode mode) {
  switch (mode) {
    case FaultMode::StuckOpen: return "stuck_open";
    case FaultMode::StuckClosed: return "stuck_closed";
    case FaultMode::ModuleDead: return "module_dead";
    case FaultMode::ParameterDrift: return "drift";
  }
  return "?";
}

double EffectiveCircuitState::multiplier(const std::string& id) const {
  auto it = drift.find(id);
  return it == drift.end() ? 1.0 : it->second;
}

EffectiveCircuitState effective_state(const Configuration& config) {
  return EffectiveCircuitState{config.device->kind, config.bits, {}, {}};
}

void validate_fault(const FaultSpec& fault, const DeviceProfile& device,
                    const DecodeMap& map) {
  switch (fault.mode) {
    case FaultMode::StuckOpen:
    case FaultMode::StuckClosed: {
      const auto* t = std::get_if<SwitchTarget>(&fault.target);
      if (!t) throw DeviceError("stuck faults need a switch target");
      if (t->index >= map.length())
        throw DeviceError("switch " + std::to_string(t->index) +
                          " does not exist (configuration has " +
                          std::to_string(map.length()) + " bits)");
      break;
    }
    case FaultMode::ModuleDead: {
      const auto* t = std::get_if<ModuleTarget>(&fault.target);
      if (!t) throw DeviceError("module_dead faults need a module target");
      if (t->index < 0 || t->index >= device.size)
        throw DeviceError("module " + std::to_string(t->index) +
                          " does not exist on " + device.name);
      break;
    }
    case FaultMode::ParameterDrift: {
      const auto* t = std::get_if<ParameterTarget>(&fault.target);
      if (!t) throw DeviceError("drift faults need a parameter target");
      if (!map.has_parameter(t->id))
        throw DeviceError("parameter '" + t->id + "' does not exist");
      if (!(fault.multiplier > 0.0))
        throw DeviceError("drift multiplier must be > 0");
      break;
    }
  }
}

EffectiveCircuitState apply_fault(EffectiveCircuitState state,
                                  const Configuration& config,
                                  const FaultSpec& fault) {
  validate_fault(fault, *config.device, *config.map);
  switch (fault.mode) {
    case FaultMode::StuckOpen:
      state.bits[std::get<SwitchTarget>(fault.target).index] = 0;
      break;
    case FaultMode::StuckClosed:
      state.bits[std::get<SwitchTarget>(fault.target).index] = 1;
      break;
    case FaultMode::ModuleDead:
      state.dead_modules.insert(std::get<ModuleTarget>(fault.target).index);
      break;
    case FaultMode::ParameterDrift: {
      const auto& id = std::get<ParameterTarget>(fault.target).id;
      state.drift[id] = state.multiplier(id) * fault.multiplier;
      break;
    }
  }
  return state;
}

EffectiveCircuitState apply_fault(const Configuration& config,
                                  const FaultSpec& fault) {
  return apply_fault(effective_state(config), config, fault);
}

EffectiveCircuitState apply_faults(const Configuration& config,
                                   std::span<const FaultSpec> faults,
                                   Nanos now) {
  EffectiveCircuitState state = effective_state(config);
  for (const auto& f : faults)
    if (f.onset <= now) state = apply_fault(std::move(state), config, f);
  return state;
}

}  // namespace ehwrt
