#include "ehwrt/rt_ledger.hpp"

namespace ehwrt {

void TimeLedger::charge(Nanos t_program, Nanos t_eval) {
  if (t_program < Nanos::zero() || t_eval < Nanos::zero())
    throw TimingError("ledger charges must be non-negative");
  entries_.push_back({entries_.size(), t_program, t_eval});
  total_ += t_program + t_eval;
}

std::string TimeLedger::to_csv() const {
  std::string out = "index,t_program_ns,t_eval_ns,cumulative_ns\n";
  out.reserve(out.size() + entries_.size() * 40);
  Nanos cumulative;
  for (const auto& e : entries_) {
    cumulative += e.t_program + e.t_eval;
    out += std::to_string(e.evaluation_index);
    out += ',';
    out += std::to_string(e.t_program.count());
    out += ',';
    out += std::to_string(e.t_eval.count());
    out += ',';
    out += std::to_string(cumulative.count());
    out += '\n';
  }
  return out;
}

const char* to_string(Criticality c) {
  return c == Criticality::Hard ? "hard" : "soft";
}

void RecoveryRequirement::validate() const {
  if (deadline < Nanos::zero())
    throw TimingError("recovery deadline must not be negative");
}

RecoveryVerdict check(Nanos reconfiguration_time,
                      const RecoveryRequirement& requirement,
                      bool logically_correct, DeadlineBoundary boundary) {
  RecoveryVerdict v;
  v.logically_correct = logically_correct;
  v.margin = requirement.deadline - reconfiguration_time;
  v.temporally_correct = boundary == DeadlineBoundary::Inclusive
                             ? v.margin >= Nanos::zero()
                             : v.margin > Nanos::zero();
  v.effective = v.logically_correct && v.temporally_correct;
  return v;
}

std::int64_t evaluation_budget(Nanos t_program, Nanos t_eval, Nanos deadline) {
  if (t_program < Nanos::zero() || t_eval < Nanos::zero())
    throw TimingError("evaluation costs must be non-negative");
  const Nanos cost = t_program + t_eval;
  if (cost <= Nanos::zero())
    throw TimingError("an evaluation must cost more than zero time");
  if (deadline <= Nanos::zero()) return 0;
  return deadline.count() / cost.count();
}

std::int64_t plan(Nanos deadline, Nanos t_program, Nanos t_eval,
                  std::int64_t population_size) {
  if (population_size <= 0) throw TimingError("population size must be > 0");
  return evaluation_budget(t_program, t_eval, deadline) / population_size;
}

}  // namespace ehwrt
