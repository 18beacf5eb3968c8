#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hsconas/arch_space.hpp"
#include "hsconas/latency_model.hpp"
#include "hsconas/rng.hpp"

namespace hsconas {

class AccuracyOracle {
 public:
  virtual ~AccuracyOracle() = default;
  // Deterministic per architecture, in [0, 1].
  virtual double evaluate(const Architecture& arch) const = 0;
};

class ConstantOracle final : public AccuracyOracle {
 public:
  explicit ConstantOracle(double value) : value_(value) {}
  double evaluate(const Architecture&) const override { return value_; }

 private:
  double value_;
};

// Synthetic fitness landscape: logistic of a sum of per-gene weights plus a
// sparse set of cross-layer operator-pair weights (the pairwise term keeps the
// landscape non-separable).
class SurrogateOracle final : public AccuracyOracle {
 public:
  struct PairwiseWeight {
    int layer_a = 0, op_a = 0;
    int layer_b = 0, op_b = 0;
    double weight = 0.0;
  };

  SurrogateOracle(std::uint64_t seed, CostMap unary_weights,
                  std::vector<PairwiseWeight> pairwise_weights)
      : seed_(seed),
        unary_(std::move(unary_weights)),
        pairwise_(std::move(pairwise_weights)) {}

  // Random landscape covering the given space. unary_stddev controls the
  // accuracy spread; pairwise_count > 0 keeps the landscape non-separable.
  static SurrogateOracle random(const SearchSpace& space, std::uint64_t seed,
                                double unary_stddev = 0.3, int pairwise_count = 8,
                                double pairwise_stddev = 0.1) {
    RngStream unary_rng = RngStream(seed).child("surrogate/unary");
    CostMap unary;
    for (int l = 0; l < space.num_layers(); ++l)
      for (const auto& op : space.layers[l].operators)
        for (const auto& cf : space.channel_factors)
          unary[{l, op.id, cf.value}] = unary_rng.next_gaussian(0.0, unary_stddev);

    RngStream pair_rng = RngStream(seed).child("surrogate/pairwise");
    std::vector<PairwiseWeight> pairwise;
    if (space.num_layers() >= 2) {
      for (int i = 0; i < pairwise_count; ++i) {
        PairwiseWeight pw;
        pw.layer_a = pair_rng.next_int(space.num_layers());
        do {
          pw.layer_b = pair_rng.next_int(space.num_layers());
        } while (pw.layer_b == pw.layer_a);
        pw.op_a = pair_rng.next_int(static_cast<int>(space.layers[pw.layer_a].operators.size()));
        pw.op_b = pair_rng.next_int(static_cast<int>(space.layers[pw.layer_b].operators.size()));
        pw.weight = pair_rng.next_gaussian(0.0, pairwise_stddev);
        pairwise.push_back(pw);
      }
    }
    return SurrogateOracle(seed, std::move(unary), std::move(pairwise));
  }

  // Unary-only landscape; separable by construction (used by shrink checks).
  static SurrogateOracle random_unary(const SearchSpace& space, std::uint64_t seed,
                                      double unary_stddev = 0.3) {
    return random(space, seed, unary_stddev, 0);
  }

  double evaluate(const Architecture& arch) const override {
    double sum = 0.0;
    for (int l = 0; l < static_cast<int>(arch.genes.size()); ++l) {
      auto it = unary_.find({l, arch.genes[l].op.id, arch.genes[l].cf.value});
      if (it == unary_.end())
        throw std::out_of_range("surrogate has no weight for layer " + std::to_string(l));
      sum += it->second;
    }
    for (const auto& pw : pairwise_) {
      if (arch.genes[pw.layer_a].op.id == pw.op_a && arch.genes[pw.layer_b].op.id == pw.op_b)
        sum += pw.weight;
    }
    return 1.0 / (1.0 + std::exp(-sum));
  }

  std::uint64_t seed() const { return seed_; }
  const CostMap& unary_weights() const { return unary_; }
  const std::vector<PairwiseWeight>& pairwise_weights() const { return pairwise_; }

 private:
  std::uint64_t seed_;
  CostMap unary_;
  std::vector<PairwiseWeight> pairwise_;
};

// Exhaustive tabular oracle: exact per-architecture accuracies, no fallback.
class TableOracle final : public AccuracyOracle {
 public:
  explicit TableOracle(std::unordered_map<std::string, double> table)
      : table_(std::move(table)) {}

  void set(const Architecture& arch, double accuracy) {
    table_[arch.canonical_key()] = accuracy;
  }

  double evaluate(const Architecture& arch) const override {
    auto it = table_.find(arch.canonical_key());
    if (it == table_.end())
      throw std::out_of_range("architecture not present in accuracy table");
    return it->second;
  }

  const std::unordered_map<std::string, double>& table() const { return table_; }

 private:
  std::unordered_map<std::string, double> table_;
};

struct ObjectiveConfig {
  double target_latency_ms = 1.0;  // T > 0
  double beta = -0.1;              // trade-off coefficient, strictly negative
  bool one_sided_penalty = false;  // penalize only over-budget latency
  const DeviceProfile* profile = nullptr;
  const AccuracyOracle* oracle = nullptr;
};

inline void validate_objective(const ObjectiveConfig& cfg) {
  if (cfg.target_latency_ms <= 0.0) throw std::invalid_argument("target latency must be > 0");
  if (cfg.beta >= 0.0) throw std::invalid_argument("beta must be strictly negative");
  if (!cfg.profile || !cfg.oracle)
    throw std::invalid_argument("objective needs a profile and an oracle");
}

struct ScoredArch {
  double score = 0.0;
  double latency_ms = 0.0;
  double accuracy = 0.0;
};

inline ScoredArch score_detail(const ObjectiveConfig& cfg, const Architecture& arch) {
  ScoredArch out;
  out.latency_ms = estimate_latency(*cfg.profile, arch);
  out.accuracy = cfg.oracle->evaluate(arch);
  double deviation = out.latency_ms / cfg.target_latency_ms - 1.0;
  double penalty = cfg.one_sided_penalty ? std::max(0.0, deviation) : std::abs(deviation);
  out.score = out.accuracy + cfg.beta * penalty;
  return out;
}

inline double score(const ObjectiveConfig& cfg, const Architecture& arch) {
  return score_detail(cfg, arch).score;
}

// Memoizing evaluator, safe for concurrent callers. Caching never changes a
// returned value; it only skips recomputation of an identical architecture.
class Evaluator {
 public:
  explicit Evaluator(const ObjectiveConfig& cfg, bool memoize = true)
      : cfg_(cfg), memoize_(memoize) {}

  ScoredArch evaluate(const Architecture& arch) {
    if (memoize_) {
      std::string key = arch.canonical_key();
      {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
      }
      ScoredArch scored = score_detail(cfg_, arch);
      std::lock_guard<std::mutex> lock(mutex_);
      auto [it, inserted] = cache_.emplace(std::move(key), scored);
      if (inserted) ++computed_;
      return it->second;
    }
    ++computed_;
    return score_detail(cfg_, arch);
  }

  const ObjectiveConfig& config() const { return cfg_; }
  std::size_t computed() const { return computed_; }

 private:
  const ObjectiveConfig& cfg_;
  bool memoize_;
  std::mutex mutex_;
  std::unordered_map<std::string, ScoredArch> cache_;
  std::atomic<std::size_t> computed_{0};
};

}  // namespace hsconas
