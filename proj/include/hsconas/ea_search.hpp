#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "hsconas/arch_space.hpp"
#include "hsconas/objective.hpp"
#include "hsconas/rng.hpp"

namespace hsconas {

struct EAConfig {
  int generations = 20;
  int population_size = 50;
  int n_parents = 20;
  double crossover_prob = 0.25;  // per offspring
  double mutation_prob = 0.25;   // per gene slot (or per individual, see below)
  int elitism = 2;
  bool per_individual_mutation = false;  // one draw per child, mutating one random layer
  std::uint64_t seed = 0;
};

inline void validate_ea(const EAConfig& ea) {
  if (ea.generations < 0) throw std::invalid_argument("generations must be >= 0");
  if (ea.population_size < 1) throw std::invalid_argument("population size must be >= 1");
  if (ea.n_parents < 1 || ea.n_parents > ea.population_size)
    throw std::invalid_argument("n_parents must be in [1, population_size]");
  if (ea.crossover_prob < 0.0 || ea.crossover_prob > 1.0 || ea.mutation_prob < 0.0 ||
      ea.mutation_prob > 1.0)
    throw std::invalid_argument("probabilities must be in [0, 1]");
  if (ea.elitism < 0 || ea.elitism >= ea.population_size)
    throw std::invalid_argument("elitism must be in [0, population_size)");
}

struct Individual {
  Architecture arch;
  double score = 0.0;
  double latency_ms = 0.0;
  double accuracy = 0.0;
};

inline std::vector<int> latency_histogram(const std::vector<Individual>& population, int bins,
                                          double lo, double hi) {
  if (bins < 1) throw std::invalid_argument("histogram needs >= 1 bin");
  if (lo >= hi) throw std::invalid_argument("histogram range must satisfy lo < hi");
  std::vector<int> counts(bins, 0);
  double width = (hi - lo) / bins;
  for (const auto& ind : population) {
    int bin = static_cast<int>((ind.latency_ms - lo) / width);
    bin = std::clamp(bin, 0, bins - 1);  // out-of-range mass goes to the edge bins
    ++counts[bin];
  }
  return counts;
}

struct GenerationStats {
  double best_score = 0.0;
  double mean_score = 0.0;
  std::vector<int> latency_hist;
};

struct SearchReport {
  Individual best;
  std::vector<GenerationStats> generations;       // index 0 = initial population
  std::vector<std::vector<Individual>> populations;  // full population per generation
  std::size_t evaluations = 0;                    // scores actually computed
  std::uint64_t seed = 0;
  int hist_bins = 20;
  double hist_lo = 0.0, hist_hi = 0.0;
};

namespace detail {

// Deterministic parallel map: slot i always computes the same pure result, so
// the worker count cannot affect anything but wall time.
template <typename Fn>
void parallel_slots(int count, int jobs, Fn&& fn) {
  if (jobs <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  std::atomic<int> next{0};
  int n_workers = std::min(jobs, count);
  workers.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) {
    workers.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : workers) t.join();
}

inline bool lex_less(const Architecture& a, const Architecture& b) {
  for (std::size_t i = 0; i < a.genes.size(); ++i) {
    if (a.genes[i].op.id != b.genes[i].op.id) return a.genes[i].op.id < b.genes[i].op.id;
    if (a.genes[i].cf.value != b.genes[i].cf.value)
      return a.genes[i].cf.value < b.genes[i].cf.value;
  }
  return false;
}

inline void mutate_gene(Architecture& arch, const SearchSpace& space, int layer, bool op_slot,
                        RngStream& rng) {
  const auto& spec = space.layers[layer];
  if (op_slot) {
    if (!spec.fixed_operator)
      arch.genes[layer].op = spec.operators[rng.next_int(static_cast<int>(spec.operators.size()))];
  } else {
    arch.genes[layer].cf =
        space.channel_factors[rng.next_int(static_cast<int>(space.channel_factors.size()))];
  }
}

}  // namespace detail

// Evolutionary argmax of the objective over the (possibly shrunk) space.
// Generation 0 is uniform; afterwards: truncation selection of the top
// n_parents, elites copied unchanged, the rest bred by uniform gene-wise
// crossover (per-offspring probability) and uniform resampling mutation on
// both the operator and the channel slot of each layer.
inline SearchReport evolve(const SearchSpace& space, Evaluator& evaluator, const EAConfig& ea,
                           int jobs = 1) {
  validate_space(space);
  validate_ea(ea);

  const RngStream root(ea.seed);
  const double T = evaluator.config().target_latency_ms;

  SearchReport report;
  report.seed = ea.seed;
  report.hist_bins = 20;
  report.hist_lo = 0.5 * T;
  report.hist_hi = 1.5 * T;

  std::vector<Individual> population(ea.population_size);
  detail::parallel_slots(ea.population_size, jobs, [&](int i) {
    RngStream rng = root.child("init/" + std::to_string(i));
    population[i].arch = sample_uniform(space, rng);
  });

  std::size_t computed_before = evaluator.computed();
  auto score_population = [&](std::vector<Individual>& pop) {
    detail::parallel_slots(static_cast<int>(pop.size()), jobs, [&](int i) {
      ScoredArch s = evaluator.evaluate(pop[i].arch);
      pop[i].score = s.score;
      pop[i].latency_ms = s.latency_ms;
      pop[i].accuracy = s.accuracy;
    });
  };
  auto record_stats = [&](const std::vector<Individual>& pop) {
    GenerationStats stats;
    stats.best_score = pop.front().score;
    double sum = 0.0;
    for (const auto& ind : pop) {
      sum += ind.score;
      if (ind.score > stats.best_score) stats.best_score = ind.score;
    }
    stats.mean_score = sum / static_cast<double>(pop.size());
    stats.latency_hist = latency_histogram(pop, report.hist_bins, report.hist_lo, report.hist_hi);
    report.generations.push_back(std::move(stats));
    report.populations.push_back(pop);
  };
  // Sort by score descending; equal scores order by gene vector for
  // reproducible selection.
  auto by_rank = [](const Individual& a, const Individual& b) {
    if (a.score != b.score) return a.score > b.score;
    return detail::lex_less(a.arch, b.arch);
  };

  score_population(population);
  std::sort(population.begin(), population.end(), by_rank);
  record_stats(population);
  report.best = population.front();

  for (int gen = 1; gen <= ea.generations; ++gen) {
    std::vector<Individual> next(ea.population_size);
    for (int i = 0; i < ea.elitism; ++i) next[i] = population[i];

    detail::parallel_slots(ea.population_size - ea.elitism, jobs, [&](int slot) {
      int i = ea.elitism + slot;
      RngStream rng = root.child("gen/" + std::to_string(gen) + "/slot/" + std::to_string(i));
      const Architecture& p1 = population[rng.next_int(ea.n_parents)].arch;
      const Architecture& p2 = population[rng.next_int(ea.n_parents)].arch;

      Architecture child = p1;
      if (rng.next_unit() < ea.crossover_prob) {
        for (int l = 0; l < space.num_layers(); ++l)
          if (rng.next_unit() < 0.5) child.genes[l] = p2.genes[l];
      }

      if (ea.per_individual_mutation) {
        if (rng.next_unit() < ea.mutation_prob) {
          int l = rng.next_int(space.num_layers());
          detail::mutate_gene(child, space, l, /*op_slot=*/true, rng);
          detail::mutate_gene(child, space, l, /*op_slot=*/false, rng);
        }
      } else {
        for (int l = 0; l < space.num_layers(); ++l) {
          if (rng.next_unit() < ea.mutation_prob)
            detail::mutate_gene(child, space, l, /*op_slot=*/true, rng);
          if (rng.next_unit() < ea.mutation_prob)
            detail::mutate_gene(child, space, l, /*op_slot=*/false, rng);
        }
      }
      next[i].arch = std::move(child);
    });

    population = std::move(next);
    score_population(population);
    std::sort(population.begin(), population.end(), by_rank);
    record_stats(population);
    if (population.front().score > report.best.score) report.best = population.front();
  }

  report.evaluations = evaluator.computed() - computed_before;
  return report;
}

// Brute-force verification oracle: enumerates the whole space, refusing sizes
// above the cap. Ties resolve to the lexicographically smallest gene vector.
inline Individual exhaustive_argmax(const SearchSpace& space, const ObjectiveConfig& cfg,
                                    std::uint64_t size_cap = 1000000) {
  validate_space(space);
  BigInt size = space_size(space);
  if (size > BigInt(size_cap))
    throw std::runtime_error("space size " + size.str() + " exceeds the exhaustive cap of " +
                             std::to_string(size_cap));
  bool have = false;
  Individual best;
  enumerate_space(space, [&](const Architecture& arch) {
    ScoredArch s = score_detail(cfg, arch);
    if (!have || s.score > best.score) {  // enumeration is lexicographic, first max wins
      have = true;
      best = {arch, s.score, s.latency_ms, s.accuracy};
    }
    return true;
  });
  return best;
}

}  // namespace hsconas
