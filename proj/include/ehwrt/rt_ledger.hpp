#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ehwrt/duration.hpp"

namespace ehwrt {

class TimingError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Append-only record of hardware time spent on a recovery search.
/// total() is the reconfiguration time T_r.
class TimeLedger {
public:
  struct Entry {
    std::uint64_t evaluation_index = 0;
    Nanos t_program;
    Nanos t_eval;

    bool operator==(const Entry&) const = default;
  };

  /// Appends one evaluation. Throws TimingError on a negative duration.
  void charge(Nanos t_program, Nanos t_eval);

  Nanos total() const { return total_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<Entry>& entries() const { return entries_; }

  /// index,t_program_ns,t_eval_ns,cumulative_ns
  std::string to_csv() const;

  bool operator==(const TimeLedger&) const = default;

private:
  std::vector<Entry> entries_;
  Nanos total_;
};

enum class Criticality { Hard, Soft };

const char* to_string(Criticality c);

/// A recovery deadline as produced by failure-mode analysis, measured from
/// fault detection.
struct RecoveryRequirement {
  Nanos deadline;
  Criticality classification = Criticality::Hard;
  std::string description;

  void validate() const;
};

/// Whether T_r == deadline still counts as on time.
enum class DeadlineBoundary { Inclusive, Strict };

/// A recovery is effective only when it restores function and finishes in
/// time.
struct RecoveryVerdict {
  bool logically_correct = false;
  bool temporally_correct = false;
  bool effective = false;
  Nanos margin;  ///< deadline - T_r

  bool operator==(const RecoveryVerdict&) const = default;
};

RecoveryVerdict check(Nanos reconfiguration_time,
                      const RecoveryRequirement& requirement,
                      bool logically_correct,
                      DeadlineBoundary boundary = DeadlineBoundary::Inclusive);

/// Number of whole evaluations costing t_program + t_eval that fit before
/// `deadline`. Throws TimingError for a zero or negative cost.
std::int64_t evaluation_budget(Nanos t_program, Nanos t_eval, Nanos deadline);

/// Largest number of full generations of `population_size` evaluations that
/// finish before the deadline.
std::int64_t plan(Nanos deadline, Nanos t_program, Nanos t_eval,
                  std::int64_t population_size);

}  // namespace ehwrt
