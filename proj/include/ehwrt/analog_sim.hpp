#pragma once

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ehwrt/device_model.hpp"
#include "ehwrt/duration.hpp"

namespace ehwrt {

class SimError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Rational transfer function in s, coefficients in descending powers.
struct TransferFunction {
  std::vector<double> num;
  std::vector<double> den;

  /// Strips leading zeros and checks properness. Throws SimError.
  static TransferFunction make(std::vector<double> num, std::vector<double> den);

  std::size_t order() const { return den.size() - 1; }
  /// num(0)/den(0), or nullopt when den(0) == 0.
  std::optional<double> dc_gain() const;

  bool operator==(const TransferFunction&) const = default;
};

std::vector<double> poly_mul(std::span<const double> a, std::span<const double> b);
std::vector<double> poly_add(std::span<const double> a, std::span<const double> b);

struct StepResponse {
  std::vector<double> times;   ///< seconds, uniform step starting at 0
  std::vector<double> values;
  std::optional<double> final_value;
  std::optional<double> settling_time;  ///< nullopt = did not settle
  bool unstable = false;                ///< trace left the divergence bound
  Nanos test_duration;                  ///< hardware window it occupies
};

/// Smallest sample time after which every sample stays within
/// band * |final| of `final` (an absolute band when final == 0).
std::optional<double> settling_time(std::span<const double> times,
                                    std::span<const double> values,
                                    double final_value, double band);

/// Unit-step response over [0, window] by classical RK4 on the controllable
/// canonical realization. Integration stops early, flagging `unstable`,
/// once |y| exceeds `divergence_bound`.
StepResponse step_response(const TransferFunction& tf, double window_s,
                           double dt_s, double band = 0.02,
                           double divergence_bound = 1e6);

/// CSV with a "time,value" header and one sample per row.
std::string step_response_csv(const StepResponse& r);

/// Node 0 is ground, node 1 the 1 V input, node 2 the output.
struct ResistiveNetwork {
  struct Branch {
    int a = 0;
    int b = 0;
    double conductance = 0.0;
  };
  int node_count = 3;
  std::vector<Branch> branches;

  static constexpr int kGround = 0;
  static constexpr int kInput = 1;
  static constexpr int kOutput = 2;
};

/// Output voltage for a 1 V input by nodal analysis. Nodes not connected to
/// ground or input are dropped. Throws SimError if the output floats.
double output_ratio(const ResistiveNetwork& net);

enum class BenchmarkKind { StepResponse, DcRatio };

/// One branch of an FPTA benchmark topology. An empty `switch_field` means
/// the branch is hardwired.
struct NetworkBranch {
  int a = 0;
  int b = 0;
  double conductance = 1.0;
  std::string switch_field;
};

/// A fitness test: what to decode, how to exercise it and what counts as
/// functionally correct.
struct Benchmark {
  std::string id;
  std::string description;
  BenchmarkKind kind = BenchmarkKind::StepResponse;
  DeviceKind device_kind = DeviceKind::FPAA;
  std::shared_ptr<const DecodeMap> map;

  // Step-response benchmarks: PD controller kp + kd*s around `plant`.
  TransferFunction plant;
  std::string kp_field = "kp";
  std::string kd_field = "kd";
  std::string plant_gain_parameter = "plant_gain";
  double max_settling_time_s = 0.0;
  double sim_window_s = 0.0;
  double dt_s = 0.0;  ///< 0 selects sim_window / 4096

  // DC-ratio benchmarks.
  int node_count = 3;
  std::vector<NetworkBranch> branches;
  double target_dc_ratio = 0.0;

  Nanos test_window;  ///< hardware time charged per evaluation
  double band = 0.02;
  bool clamp = true;  ///< out-of-range codes clamp instead of failing decode

  void validate() const;
  double step_dt() const;
  /// Fitness assigned to individuals that fail to decode or never settle.
  double worst_fitness() const;
};

/// Maps a Gray-coded field to its value. Codes beyond the field's level
/// count clamp to `max`, or throw SimError when `clamp` is false.
double decode_parameter(const DecodeField& field, std::span<const std::uint8_t> bits,
                        bool clamp = true);

std::uint64_t gray_to_binary(std::uint64_t gray);
std::uint64_t binary_to_gray(std::uint64_t value);

using DecodedCircuit = std::variant<TransferFunction, ResistiveNetwork>;

/// Controller transfer function (FPAA) or conductance network (FPTA).
DecodedCircuit decode(const Benchmark& bench, const EffectiveCircuitState& state);

/// Unity-feedback loop of `controller` around the (possibly drifted) plant.
TransferFunction closed_loop(const Benchmark& bench,
                             const TransferFunction& controller,
                             const EffectiveCircuitState& state);

struct Evaluation {
  double fitness = 0.0;
  bool logically_correct = false;
  Nanos t_eval;
  bool decode_failed = false;

  bool operator==(const Evaluation&) const = default;
};

/// decode -> simulate -> score. Never throws for a well-formed benchmark and
/// matching configuration; decode failures come back as worst fitness.
Evaluation evaluate(const Benchmark& bench, const Configuration& config,
                    std::span<const FaultSpec> faults = {},
                    Nanos now = Nanos::max());

/// Closed-loop step response for a compensator configuration, with the
/// hardware window filled in. Throws SimError on decode failure.
StepResponse simulate_step(const Benchmark& bench, const Configuration& config,
                           std::span<const FaultSpec> faults = {});

/// "example2-compensator" and "fpta-divider".
std::vector<Benchmark> builtin_benchmarks();
const Benchmark& find_benchmark(std::span<const Benchmark> all, std::string_view id);

}  // namespace ehwrt
