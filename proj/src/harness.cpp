#include "ehwrt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace ehwrt {

bool CampaignReport::all_effective() const {
  return !runs.empty() &&
         std::all_of(runs.begin(), runs.end(),
                     [](const SeedOutcome& o) { return o.verdict.effective; });
}

namespace {

SeedOutcome run_seed(const Scenario& s, std::uint64_t seed) {
  EAParams params = s.ea;
  params.rng_seed = seed;
  const RunInputs inputs{s.benchmark, s.device, s.faults, s.requirement.deadline,
                         s.pre_fault};
  SeedOutcome out;
  out.seed = seed;
  out.result = run(params, inputs);
  out.verdict = check(out.result.ledger.total(), s.requirement,
                      out.result.logically_correct, s.boundary);
  return out;
}

std::string bits_string(const Bits& bits) {
  std::string s;
  s.reserve(bits.size());
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

}  // namespace

CampaignReport run_campaign(const Scenario& scenario, int jobs) {
  CampaignReport report;
  const std::size_t n = scenario.seeds.size();
  report.runs.resize(n);

  const std::size_t workers =
      std::clamp<std::size_t>(jobs > 0 ? static_cast<std::size_t>(jobs) : 1, 1, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      report.runs[i] = run_seed(scenario, scenario.seeds[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < n; i = next++)
            report.runs[i] = run_seed(scenario, scenario.seeds[i]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::vector<Nanos> totals;
  int effective = 0;
  for (const auto& o : report.runs) {
    totals.push_back(o.result.ledger.total());
    effective += o.verdict.effective ? 1 : 0;
    ++report.verdict_counts[o.verdict.logically_correct][o.verdict.temporally_correct];
  }
  if (n > 0) {
    report.success_rate = static_cast<double>(effective) / static_cast<double>(n);
    std::sort(totals.begin(), totals.end());
    report.tr_min = totals.front();
    report.tr_max = totals.back();
    report.tr_median = totals[(n - 1) / 2];
  }
  return report;
}

std::string summary_csv(const CampaignReport& report) {
  std::string out = "seed,termination,evaluations,T_r_ns,logical,temporal,effective\n";
  for (const auto& o : report.runs) {
    out += std::to_string(o.seed) + ',' + to_string(o.result.termination) + ',' +
           std::to_string(o.result.evaluations) + ',' +
           std::to_string(o.result.ledger.total().count()) + ',' +
           (o.verdict.logically_correct ? "true" : "false") + ',' +
           (o.verdict.temporally_correct ? "true" : "false") + ',' +
           (o.verdict.effective ? "true" : "false") + '\n';
  }
  return out;
}

namespace {

std::string describe(const FaultSpec& f) {
  std::string target;
  if (const auto* t = std::get_if<SwitchTarget>(&f.target))
    target = "switch " + std::to_string(t->index);
  else if (const auto* t = std::get_if<ModuleTarget>(&f.target))
    target = "module " + std::to_string(t->index);
  else
    target = "parameter " + std::get<ParameterTarget>(f.target).id;
  std::string s = std::string(to_string(f.mode)) + " on " + target;
  if (f.mode == FaultMode::ParameterDrift) {
    char buf[32];
    std::snprintf(buf, sizeof buf, " x%g", f.multiplier);
    s += buf;
  }
  return s + " at " + format_human(f.onset);
}

}  // namespace

std::string render_report(const Scenario& s, const CampaignReport& report) {
  std::ostringstream o;
  char buf[256];
  const Nanos per_eval = s.device.t_program + s.benchmark.test_window;

  o << "scenario        " << s.name << '\n';
  o << "device          " << s.device.name << " (" << to_string(s.device.kind)
    << ", size " << s.device.size << ", t_program " << format_human(s.device.t_program)
    << ")\n";
  o << "benchmark       " << s.benchmark.id << " (test window "
    << format_human(s.benchmark.test_window) << ")\n";
  if (s.faults.empty()) {
    o << "faults          none\n";
  } else {
    for (std::size_t i = 0; i < s.faults.size(); ++i)
      o << (i == 0 ? "faults          " : "                ") << describe(s.faults[i])
        << '\n';
  }
  std::snprintf(buf, sizeof buf,
                "pop %d, gens %d, %s, mutation %g, crossover %g, elitism %d%s",
                s.ea.population_size, s.ea.max_generations,
                to_string(s.ea.selection).c_str(), s.ea.mutation_rate,
                s.ea.crossover_rate, s.ea.elitism,
                s.ea.stop_on_success ? ", stop on success" : "");
  o << "ea              " << (s.ea.preset ? to_string(*s.ea.preset) : "custom") << ": "
    << buf << '\n';
  o << "requirement     deadline " << format_human(s.requirement.deadline) << " ("
    << to_string(s.requirement.classification) << ", "
    << (s.boundary == DeadlineBoundary::Inclusive ? "inclusive" : "strict") << ")";
  if (!s.requirement.description.empty()) o << " - " << s.requirement.description;
  o << '\n';
  o << "per evaluation  " << format_human(per_eval) << " = "
    << format_human(s.device.t_program) << " program + "
    << format_human(s.benchmark.test_window) << " test\n\n";

  std::snprintf(buf, sizeof buf, "%-8s %-18s %8s %6s %-22s %12s %-8s %-9s %-9s %s\n",
                "seed", "termination", "evals", "gens", "T_r", "best", "logical",
                "temporal", "effective", "margin");
  o << buf;
  for (const auto& r : report.runs) {
    std::snprintf(buf, sizeof buf, "%-8llu %-18s %8lld %6d %-22s %12.6g %-8s %-9s %-9s %s\n",
                  static_cast<unsigned long long>(r.seed), to_string(r.result.termination),
                  static_cast<long long>(r.result.evaluations),
                  r.result.generations_executed,
                  format_human(r.result.ledger.total()).c_str(), r.result.best_fitness,
                  r.verdict.logically_correct ? "yes" : "no",
                  r.verdict.temporally_correct ? "yes" : "no",
                  r.verdict.effective ? "yes" : "no",
                  format_human(r.verdict.margin).c_str());
    o << buf;
  }

  const int effective = report.verdict_counts[1][1];
  std::snprintf(buf, sizeof buf, "\nsuccess rate    %d/%zu = %.3f\n", effective,
                report.runs.size(), report.success_rate);
  o << buf;
  o << "T_r             min " << format_human(report.tr_min) << ", median "
    << format_human(report.tr_median) << ", max " << format_human(report.tr_max)
    << '\n';
  o << "verdicts        logical+temporal " << report.verdict_counts[1][1]
    << ", logical only " << report.verdict_counts[1][0] << ", temporal only "
    << report.verdict_counts[0][1] << ", neither " << report.verdict_counts[0][0]
    << '\n';
  return o.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace

void write_artifacts(const Scenario& s, const CampaignReport& report,
                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "summary.csv", summary_csv(report));
  write_file(dir / "report.txt", render_report(s, report));
  for (const auto& r : report.runs) {
    const std::string tag = "_seed" + std::to_string(r.seed) + ".csv";
    write_file(dir / ("ledger" + tag), r.result.ledger.to_csv());
    write_file(dir / ("fitness" + tag), r.result.trace_csv());
    if (r.result.best) {
      write_file(dir / ("best_seed" + std::to_string(r.seed) + ".txt"),
                 bits_string(r.result.best->bits) + '\n');
      if (s.benchmark.kind == BenchmarkKind::StepResponse) {
        try {
          write_file(dir / ("step" + tag),
                     step_response_csv(simulate_step(s.benchmark, *r.result.best, s.faults)));
        } catch (const SimError&) {
          // undecodable best individual has no trace to export
        }
      }
    }
  }
}

BudgetReport budget(const BudgetQuery& q) {
  if (q.population < 0 || q.generations < 0)
    throw TimingError("population and generations must be >= 0");
  if (q.t_program < Nanos::zero() || q.t_eval < Nanos::zero())
    throw TimingError("durations must be >= 0");
  BudgetReport r;
  r.query = q;
  r.per_evaluation = q.t_program + q.t_eval;
  r.evaluations = q.population * q.generations;
  r.reconfiguration_time = r.per_evaluation * r.evaluations;
  if (q.deadline) {
    const RecoveryRequirement req{*q.deadline, Criticality::Hard, {}};
    r.verdict = check(r.reconfiguration_time, req, true);
    if (r.per_evaluation > Nanos::zero()) {
      r.max_evaluations = evaluation_budget(q.t_program, q.t_eval, *q.deadline);
      if (q.population > 0)
        r.max_generations = plan(*q.deadline, q.t_program, q.t_eval, q.population);
    }
  }
  return r;
}

std::string render_budget(const BudgetReport& r) {
  std::ostringstream o;
  const auto& q = r.query;
  o << "device            " << (q.device_name.empty() ? "(custom)" : q.device_name)
    << ", t_program " << format_in(q.t_program, "ms") << " ms\n";
  o << "fitness test      " << format_in(q.t_eval, "ms") << " ms\n";
  o << "per evaluation    " << format_in(r.per_evaluation, "ms") << " ms\n";
  o << "evaluations       " << q.population << " x " << q.generations << " = "
    << r.evaluations << '\n';
  o << "T_r               " << format_human(r.reconfiguration_time) << '\n';
  if (r.evaluations > 0) {
    o << "count check       T_r counts " << r.evaluations
      << " evaluations; 10x that count (" << r.evaluations * 10 << ") would need "
      << format_human(r.reconfiguration_time * 10) << '\n';
  }
  if (r.verdict) {
    o << "deadline          " << format_human(*q.deadline) << '\n';
    o << "margin            " << format_human(r.verdict->margin) << '\n';
    if (r.max_evaluations)
      o << "max evaluations   " << *r.max_evaluations << '\n';
    if (r.max_generations)
      o << "max generations   " << *r.max_generations << " at population "
        << q.population << '\n';
    o << "verdict           "
      << (r.verdict->temporally_correct ? "feasible (T_r <= deadline)"
                                        : "INFEASIBLE (T_r > deadline)")
      << '\n';
  } else {
    o << "verdict           no deadline given\n";
  }
  return o.str();
}

std::string render_devices(std::span<const DeviceProfile> profiles) {
  std::ostringstream o;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %-5s %5s %14s %14s  %s\n", "device", "kind",
                "size", "t_program", "transfer", "notes");
  o << buf;
  for (const auto& p : profiles) {
    const std::string tp = format_in(p.t_program, "ms") + " ms";
    std::string tt = "-";
    std::string notes = p.notes;
    if (p.transfer) {
      tt = format_in(transfer_time(p), "ms") + " ms";
      char g[128];
      std::snprintf(g, sizeof g, "%s%lld bytes, %d-bit @ %g MHz",
                    notes.empty() ? "" : "; ",
                    static_cast<long long>(p.transfer->bitstream_bytes),
                    p.transfer->bus_width_bits,
                    static_cast<double>(p.transfer->clock_hz) / 1e6);
      notes += g;
    }
    std::snprintf(buf, sizeof buf, "%-10s %-5s %5d %14s %14s  %s\n", p.name.c_str(),
                  to_string(p.kind), p.size, tp.c_str(), tt.c_str(), notes.c_str());
    o << buf;
  }
  return o.str();
}

}  // namespace ehwrt
