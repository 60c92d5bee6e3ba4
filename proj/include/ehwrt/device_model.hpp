#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ehwrt/duration.hpp"

namespace ehwrt {

class DeviceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class DeviceKind { FPAA, FPTA };

const char* to_string(DeviceKind kind);
DeviceKind parse_device_kind(std::string_view text);

/// Bitstream download geometry: how many bits move per clock, at what rate.
struct TransferGeometry {
  int bus_width_bits = 1;
  std::int64_t clock_hz = 0;
  std::int64_t bitstream_bytes = 0;

  bool operator==(const TransferGeometry&) const = default;
};

/// A reconfigurable analog device. `size` counts modules on an FPAA and
/// cells on an FPTA. `t_program` is the full reload time including the
/// bitstream download; transfer_time() is reported for analysis only.
struct DeviceProfile {
  std::string name;
  DeviceKind kind = DeviceKind::FPAA;
  int size = 1;
  Nanos t_program;
  std::optional<TransferGeometry> transfer;
  std::string notes;

  /// Full configuration length: 8 x bitstream_bytes with transfer geometry,
  /// otherwise 8 bytes per module/cell.
  std::size_t config_bits() const;

  /// Throws DeviceError if an invariant is broken.
  void validate() const;

  bool operator==(const DeviceProfile&) const = default;
};

/// The ispPAC10, AN220E04 and FPTA2 profiles.
std::vector<DeviceProfile> builtin_profiles();

/// Looks `name` up in `profiles` (case-sensitive). Throws DeviceError.
const DeviceProfile& find_profile(std::span<const DeviceProfile> profiles,
                                  std::string_view name);

/// Reads a YAML list of profiles (name, kind, size, t_program_ms and an
/// optional transfer {bus_width, clock_hz, bitstream_bytes}).
std::vector<DeviceProfile> load_profiles(const std::filesystem::path& path);

/// Bitstream transfer time, rounded to the nearest nanosecond.
/// Throws DeviceError when the profile has no transfer geometry.
Nanos transfer_time(const DeviceProfile& profile);

using Bits = std::vector<std::uint8_t>;

enum class FieldKind {
  Switch,     ///< one bit, 1 = closed
  Parameter,  ///< Gray-coded fixed-point value in [min, max]
  Reserved,   ///< present in the bitstream, no function
};

struct DecodeField {
  std::string name;
  std::size_t offset = 0;
  std::size_t width = 1;
  FieldKind kind = FieldKind::Reserved;
  double min = 0.0;
  double max = 0.0;
  /// Quantization levels; 0 means 2^width. Codes past the last level clamp.
  std::uint64_t levels = 0;
  /// Module (FPAA) or cell (FPTA) that realizes this field.
  std::optional<int> module;

  std::uint64_t level_count() const;
};

/// Which bit ranges drive which switches and parameters. Fields must tile
/// [0, length) exactly once. `physical_parameters` lists drift targets that
/// are not configuration fields (plant gain, for instance).
struct DecodeMap {
  std::vector<DecodeField> fields;
  std::vector<std::string> physical_parameters;

  std::size_t length() const;
  const DecodeField* find(std::string_view name) const;
  bool has_parameter(std::string_view id) const;
  void validate() const;

  /// One Reserved field spanning `bits`.
  static DecodeMap raw(std::size_t bits);
};

/// A candidate configuration. The profile and map are shared immutable
/// data; only the bits vary between individuals.
struct Configuration {
  std::shared_ptr<const DeviceProfile> device;
  std::shared_ptr<const DecodeMap> map;
  Bits bits;

  bool operator==(const Configuration& o) const { return bits == o.bits; }
};

/// Builds a configuration after checking bits against the map.
Configuration make_configuration(std::shared_ptr<const DeviceProfile> device,
                                 std::shared_ptr<const DecodeMap> map,
                                 Bits bits);

/// Uniform random full-bitstream configuration, deterministic in `seed`.
Configuration random_configuration(const DeviceProfile& profile,
                                   std::uint64_t seed);

struct SwitchTarget {
  std::size_t index = 0;
  bool operator==(const SwitchTarget&) const = default;
};
struct ModuleTarget {
  int index = 0;
  bool operator==(const ModuleTarget&) const = default;
};
struct ParameterTarget {
  std::string id;
  bool operator==(const ParameterTarget&) const = default;
};
using FaultTarget = std::variant<SwitchTarget, ModuleTarget, ParameterTarget>;

enum class FaultMode { StuckOpen, StuckClosed, ModuleDead, ParameterDrift };

const char* to_string(FaultMode mode);

struct FaultSpec {
  FaultTarget target;
  FaultMode mode = FaultMode::StuckOpen;
  double multiplier = 1.0;  ///< ParameterDrift only
  Nanos onset;

  bool operator==(const FaultSpec&) const = default;
};

/// What the hardware actually realizes once faults are taken into account.
struct EffectiveCircuitState {
  DeviceKind kind = DeviceKind::FPAA;
  Bits bits;
  std::set<int> dead_modules;
  std::map<std::string, double> drift;  ///< parameter id -> multiplier

  double multiplier(const std::string& id) const;
  bool operator==(const EffectiveCircuitState&) const = default;
};

/// The fault-free realization of `config`.
EffectiveCircuitState effective_state(const Configuration& config);

/// Throws DeviceError if `fault` does not name something on this device.
void validate_fault(const FaultSpec& fault, const DeviceProfile& device,
                    const DecodeMap& map);

/// Overlays one fault on an existing realization. Drift multipliers on the
/// same parameter compound.
EffectiveCircuitState apply_fault(EffectiveCircuitState state,
                                  const Configuration& config,
                                  const FaultSpec& fault);

EffectiveCircuitState apply_fault(const Configuration& config,
                                  const FaultSpec& fault);

/// Applies every fault whose onset is at or before `now`.
EffectiveCircuitState apply_faults(const Configuration& config,
                                   std::span<const FaultSpec> faults,
                                   Nanos now = Nanos::max());

}  // namespace ehwrt
