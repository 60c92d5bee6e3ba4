#include "ehwrt/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

namespace ehwrt {

std::string to_string(const Selection& s) {
  char buf[64];
  if (const auto* t = std::get_if<Tournament>(&s)) {
    std::snprintf(buf, sizeof buf, "tournament(%d)", t->k);
  } else if (const auto* t = std::get_if<Truncation>(&s)) {
    std::snprintf(buf, sizeof buf, "truncation(%g)", t->fraction);
  } else {
    std::snprintf(buf, sizeof buf, "roulette");
  }
  return buf;
}

const char* to_string(Preset p) {
  return p == Preset::PaperRecommended ? "PaperRecommended" : "PlainGA";
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::Success: return "Success";
    case Termination::GenerationCap: return "GenerationCap";
    case Termination::DeadlineExhausted: return "DeadlineExhausted";
  }
  return "?";
}

EAParams& EAParams::apply(Preset p) {
  preset = p;
  if (p == Preset::PaperRecommended) {
    const auto* t = std::get_if<Truncation>(&selection);
    if (!t || t->fraction > 0.25) selection = Truncation{0.25};
    crossover_rate = 0.0;
  } else {
    population_size = 100;
    max_generations = 500;
    selection = Tournament{2};
    crossover_rate = 0.7;
    elitism = 1;
  }
  return *this;
}

bool EAParams::mutation_only() const {
  return preset == Preset::PaperRecommended || crossover_rate == 0.0;
}

void EAParams::validate() const {
  if (population_size <= 0) throw EvolutionError("population_size must be > 0");
  if (max_generations <= 0) throw EvolutionError("max_generations must be > 0");
  if (!(mutation_rate > 0.0 && mutation_rate < 1.0))
    throw EvolutionError("mutation_rate must be in (0, 1)");
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0))
    throw EvolutionError("crossover_rate must be in [0, 1]");
  if (elitism < 0 || elitism >= population_size)
    throw EvolutionError("elitism must be in [0, population_size)");
  if (const auto* t = std::get_if<Tournament>(&selection); t && t->k < 1)
    throw EvolutionError("tournament size must be >= 1");
  if (const auto* t = std::get_if<Truncation>(&selection);
      t && !(t->fraction > 0.0 && t->fraction <= 1.0))
    throw EvolutionError("truncation fraction must be in (0, 1]");
  if (preset == Preset::PaperRecommended) {
    const auto* t = std::get_if<Truncation>(&selection);
    if (!t || t->fraction > 0.25 || crossover_rate != 0.0)
      throw EvolutionError(
          "PaperRecommended requires truncation <= 0.25 and no crossover");
  }
}

namespace {

/// Population order by fitness, ties to the lower index.
std::vector<std::size_t> ranking(std::span<const double> fitness) {
  std::vector<std::size_t> order(fitness.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return fitness[a] < fitness[b];
  });
  return order;
}

}  // namespace

std::vector<std::size_t> select(std::span<const double> fitness,
                                const Selection& method, std::size_t count,
                                Rng& rng) {
  const std::size_t n = fitness.size();
  if (n == 0) throw EvolutionError("cannot select from an empty population");
  std::vector<std::size_t> pool;
  pool.reserve(count);

  if (const auto* t = std::get_if<Tournament>(&method)) {
    const std::size_t k = std::clamp<std::size_t>(t->k, 1, n);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t draw = 0; draw < count; ++draw) {
      // k distinct contestants via a partial Fisher-Yates shuffle
      for (std::size_t i = 0; i < k; ++i)
        std::swap(perm[i], perm[i + rng.index(n - i)]);
      std::size_t winner = perm[0];
      for (std::size_t i = 1; i < k; ++i) {
        const std::size_t c = perm[i];
        if (fitness[c] < fitness[winner] ||
            (fitness[c] == fitness[winner] && c < winner))
          winner = c;
      }
      pool.push_back(winner);
    }
  } else if (const auto* t = std::get_if<Truncation>(&method)) {
    const auto order = ranking(fitness);
    auto keep = static_cast<std::size_t>(
        std::ceil(t->fraction * static_cast<double>(n) - 1e-9));
    keep = std::clamp<std::size_t>(keep, 1, n);
    for (std::size_t draw = 0; draw < count; ++draw)
      pool.push_back(order[rng.index(keep)]);
  } else {
    constexpr double kEpsilon = 1e-9;
    const double worst = *std::max_element(fitness.begin(), fitness.end());
    std::vector<double> cumulative(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += worst - fitness[i] + kEpsilon;
      cumulative[i] = total;
    }
    for (std::size_t draw = 0; draw < count; ++draw) {
      const double u = rng.uniform01() * total;
      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
      pool.push_back(it == cumulative.end() ? n - 1
                                            : static_cast<std::size_t>(
                                                  it - cumulative.begin()));
    }
  }
  return pool;
}

void mutate(Bits& bits, double rate, Rng& rng) {
  for (auto& b : bits)
    if (rng.bernoulli(rate)) b ^= 1U;
}

std::vector<Bits> reproduce(std::span<const Bits> parents, const EAParams& params,
                            Rng& rng) {
  if (parents.empty()) throw EvolutionError("reproduce needs parents");
  const std::size_t offspring =
      static_cast<std::size_t>(params.population_size - params.elitism);
  std::vector<Bits> children;
  children.reserve(offspring);
  const bool crossover = !params.mutation_only();

  for (std::size_t i = 0; i < offspring; ++i) {
    if (!crossover) {
      Bits child = parents[i % parents.size()];
      mutate(child, params.mutation_rate, rng);
      children.push_back(std::move(child));
      continue;
    }
    const Bits& a = parents[(2 * i) % parents.size()];
    const Bits& b = parents[(2 * i + 1) % parents.size()];
    Bits child = a;
    if (a.size() > 1 && rng.bernoulli(params.crossover_rate)) {
      const std::size_t cut = 1 + rng.index(a.size() - 1);
      std::copy(b.begin() + static_cast<std::ptrdiff_t>(cut), b.end(),
                child.begin() + static_cast<std::ptrdiff_t>(cut));
    }
    mutate(child, params.mutation_rate, rng);
    children.push_back(std::move(child));
  }
  return children;
}

std::string RunResult::trace_csv() const {
  std::string out = "generation,best,mean,cumulative_T_r_ns\n";
  char buf[128];
  for (const auto& g : trace) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%lld\n", g.generation, g.best,
                  g.mean, static_cast<long long>(g.cumulative.count()));
    out += buf;
  }
  return out;
}

namespace {

Bits random_bits(std::size_t n, Rng& rng) {
  Bits bits(n);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 64 == 0) word = rng.next_u64();
    bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1U);
  }
  return bits;
}

}  // namespace

RunResult run(const EAParams& params, const RunInputs& in) {
  params.validate();
  const Benchmark& bench = in.benchmark;
  bench.validate();
  in.device.validate();
  if (in.device.kind != bench.device_kind)
    throw EvolutionError(bench.id + " needs an " + to_string(bench.device_kind) +
                         " device but " + in.device.name + " is " +
                         to_string(in.device.kind));
  const std::size_t length = bench.map->length();
  if (length > in.device.config_bits())
    throw EvolutionError(bench.id + " needs " + std::to_string(length) +
                         " configuration bits; " + in.device.name + " has " +
                         std::to_string(in.device.config_bits()));
  for (const auto& f : in.faults) {
    try {
      validate_fault(f, in.device, *bench.map);
    } catch (const DeviceError& e) {
      throw EvolutionError(std::string("invalid fault: ") + e.what());
    }
  }
  if (in.pre_fault && in.pre_fault->size() != length)
    throw EvolutionError("pre-fault configuration has the wrong length");

  const auto device = std::make_shared<const DeviceProfile>(in.device);
  const auto map = bench.map;
  const Nanos cost = in.device.t_program + bench.test_window;
  const std::size_t n = static_cast<std::size_t>(params.population_size);

  Rng rng(params.rng_seed);
  std::vector<Bits> population;
  population.reserve(n);
  if (params.warm_start && in.pre_fault) population.push_back(*in.pre_fault);
  while (population.size() < n) population.push_back(random_bits(length, rng));

  RunResult result;
  result.best_fitness = std::numeric_limits<double>::infinity();
  result.termination = Termination::GenerationCap;
  bool stopped = false;
  std::map<Bits, Evaluation> cache;
  std::size_t cached_faults = 0;

  for (int gen = 0; gen < params.max_generations && !stopped; ++gen) {
    std::vector<double> fitness(n, 0.0);
    std::size_t evaluated = 0;

    for (std::size_t i = 0; i < n; ++i) {
      if (in.deadline && result.ledger.total() + cost > *in.deadline) {
        result.termination = Termination::DeadlineExhausted;
        stopped = true;
        break;
      }
      const Nanos now = result.ledger.total();
      const Configuration config{device, map, population[i]};
      // evaluate() is pure, so repeated genomes reuse the software result;
      // the hardware time is charged regardless
      const std::size_t active = static_cast<std::size_t>(std::count_if(
          in.faults.begin(), in.faults.end(),
          [now](const FaultSpec& f) { return f.onset <= now; }));
      if (active != cached_faults) {
        cache.clear();
        cached_faults = active;
      }
      auto hit = cache.find(population[i]);
      if (hit == cache.end())
        hit = cache.emplace(population[i], evaluate(bench, config, in.faults, now)).first;
      const Evaluation ev = hit->second;
      result.ledger.charge(in.device.t_program, ev.t_eval);
      ++result.evaluations;
      ++evaluated;
      fitness[i] = ev.fitness;

      if (!result.best || ev.fitness < result.best_fitness) {
        result.best = config;
        result.best_fitness = ev.fitness;
        result.logically_correct = ev.logically_correct;
      }
      if (params.stop_on_success && ev.logically_correct) {
        result.best = config;
        result.best_fitness = ev.fitness;
        result.logically_correct = true;
        result.termination = Termination::Success;
        stopped = true;
        break;
      }
    }

    if (evaluated > 0) {
      ++result.generations_executed;
      GenerationStats stats;
      stats.generation = gen;
      stats.evaluated = static_cast<int>(evaluated);
      stats.best = *std::min_element(fitness.begin(), fitness.begin() + evaluated);
      stats.mean = std::accumulate(fitness.begin(), fitness.begin() + evaluated, 0.0) /
                   static_cast<double>(evaluated);
      stats.cumulative = result.ledger.total();
      result.trace.push_back(stats);
    }
    if (stopped || gen + 1 == params.max_generations) break;

    const auto order = ranking(fitness);
    std::vector<Bits> next;
    next.reserve(n);
    for (int e = 0; e < params.elitism; ++e) next.push_back(population[order[e]]);

    const std::size_t offspring = n - static_cast<std::size_t>(params.elitism);
    const std::size_t wanted = params.mutation_only() ? offspring : 2 * offspring;
    std::vector<Bits> parents;
    parents.reserve(wanted);
    for (std::size_t idx : select(fitness, params.selection, wanted, rng))
      parents.push_back(population[idx]);
    for (auto& child : reproduce(parents, params, rng)) next.push_back(std::move(child));
    population = std::move(next);
  }

  if (!result.best) result.best_fitness = bench.worst_fitness();
  return result;
}

}  // namespace ehwrt
