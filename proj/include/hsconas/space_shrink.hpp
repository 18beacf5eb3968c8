#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hsconas/arch_space.hpp"
#include "hsconas/objective.hpp"
#include "hsconas/rng.hpp"

namespace hsconas {

struct QualityEstimate {
  int op_id = 0;  // the candidate operator whose restricted subspace was sampled
  int n_samples = 0;
  double mean_score = 0.0;
  double score_stddev = 0.0;
  std::uint64_t seed = 0;
};

struct ShrinkPlan {
  // Stage layer sequences, 0-indexed, processed in order within each stage.
  std::vector<std::vector<int>> stages;
  int n_samples = 100;

  // Two four-layer stages over the last eight layers, last layer first.
  static ShrinkPlan standard(int num_layers = 20) {
    if (num_layers < 8) throw std::invalid_argument("standard plan needs >= 8 layers");
    ShrinkPlan plan;
    plan.stages = {{num_layers - 1, num_layers - 2, num_layers - 3, num_layers - 4},
                   {num_layers - 5, num_layers - 6, num_layers - 7, num_layers - 8}};
    return plan;
  }
};

inline void validate_plan(const ShrinkPlan& plan, const SearchSpace& space) {
  if (plan.n_samples < 1) throw std::invalid_argument("shrink n_samples must be >= 1");
  std::vector<bool> seen(space.layers.size(), false);
  for (const auto& stage : plan.stages)
    for (int layer : stage) {
      if (layer < 0 || layer >= space.num_layers())
        throw std::invalid_argument("shrink plan layer " + std::to_string(layer) +
                                    " out of range");
      if (seen[layer])
        throw std::invalid_argument("shrink plan repeats layer " + std::to_string(layer));
      if (space.layers[layer].fixed_operator)
        throw std::invalid_argument("shrink plan layer " + std::to_string(layer) +
                                    " is already fixed");
      seen[layer] = true;
    }
}

struct LayerShrinkRecord {
  int stage = 0;
  int layer = 0;
  std::vector<QualityEstimate> candidates;  // one per operator of the layer
  int chosen_op = 0;
  bool tie = false;  // chosen by lowest id among equal means
  BigInt size_before;
  BigInt size_after;
};

struct ShrinkTrace {
  std::vector<LayerShrinkRecord> records;
  int total_evaluated = 0;  // subspace quality estimates computed
};

inline QualityEstimate estimate_quality(const SearchSpace& subspace, Evaluator& evaluator,
                                        int n, RngStream rng) {
  if (n < 1) throw std::invalid_argument("quality estimate needs n >= 1");
  QualityEstimate est;
  est.n_samples = n;
  est.seed = rng.seed();
  std::vector<double> scores;
  scores.reserve(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    Architecture arch = sample_uniform(subspace, rng);
    double s = evaluator.evaluate(arch).score;
    scores.push_back(s);
    sum += s;
  }
  est.mean_score = sum / n;
  double sq = 0.0;
  for (double s : scores) sq += (s - est.mean_score) * (s - est.mean_score);
  est.score_stddev = std::sqrt(sq / n);
  return est;
}

// Fixes one layer to its highest-quality operator. Computes exactly K quality
// estimates, one per candidate. Ties break toward the lowest operator id.
inline std::pair<SearchSpace, LayerShrinkRecord> shrink_layer(
    const SearchSpace& space, int stage, int layer, Evaluator& evaluator, int n,
    const RngStream& master) {
  if (layer < 0 || layer >= space.num_layers())
    throw std::invalid_argument("layer index out of range");
  if (space.layers[layer].fixed_operator)
    throw std::invalid_argument("layer " + std::to_string(layer) + " is already fixed");

  LayerShrinkRecord record;
  record.stage = stage;
  record.layer = layer;
  record.size_before = space_size(space);

  int best_op = 0;
  double best_mean = -1e300;
  for (const auto& op : space.layers[layer].operators) {
    SearchSpace candidate = restrict_layer(space, layer, op.id);
    RngStream rng = master.child("shrink/s" + std::to_string(stage) + "/l" +
                                 std::to_string(layer) + "/op" + std::to_string(op.id));
    QualityEstimate est = estimate_quality(candidate, evaluator, n, rng);
    est.op_id = op.id;
    if (est.mean_score == best_mean) record.tie = true;
    if (est.mean_score > best_mean) {
      best_mean = est.mean_score;
      best_op = op.id;
      record.tie = false;
    }
    record.candidates.push_back(est);
  }
  record.chosen_op = best_op;
  SearchSpace shrunk = restrict_layer(space, layer, best_op);
  record.size_after = space_size(shrunk);
  return {std::move(shrunk), std::move(record)};
}

// Progressive shrinking: stages in order, layers within a stage in listed
// order, each layer seeing every previously fixed choice. The optional
// refresh callback runs between stages (a hook for trainable oracles).
inline std::pair<SearchSpace, ShrinkTrace> run_shrink(
    const SearchSpace& space, const ShrinkPlan& plan, Evaluator& evaluator,
    const RngStream& master, const std::function<void(int)>& refresh_between_stages = {}) {
  validate_plan(plan, space);
  SearchSpace current = space;
  ShrinkTrace trace;
  for (int stage = 0; stage < static_cast<int>(plan.stages.size()); ++stage) {
    if (stage > 0 && refresh_between_stages) refresh_between_stages(stage);
    for (int layer : plan.stages[stage]) {
      auto [shrunk, record] = shrink_layer(current, stage, layer, evaluator,
                                           plan.n_samples, master);
      trace.total_evaluated += static_cast<int>(record.candidates.size());
      trace.records.push_back(std::move(record));
      current = std::move(shrunk);
    }
  }
  return {std::move(current), std::move(trace)};
}

}  // namespace hsconas
