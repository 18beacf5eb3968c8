#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsconas/arch_space.hpp"
#include "hsconas/hardware_sim.hpp"
#include "hsconas/rng.hpp"

namespace hsconas {

// The bundled 20-layer, 5-operator demo space with ten channel factors.
inline SearchSpace demo_space(int num_layers = 20) {
  static const std::vector<std::string> kOps = {"shuffle_k3", "shuffle_k5", "shuffle_k7",
                                                "shuffle_x", "skip"};
  // Four channel stages spread evenly across the layers.
  static const int kStageChannels[4] = {48, 128, 256, 512};

  SearchSpace space;
  for (int l = 0; l < num_layers; ++l) {
    LayerSpec layer;
    for (int i = 0; i < static_cast<int>(kOps.size()); ++i) layer.operators.push_back({i, kOps[i]});
    layer.max_channels = kStageChannels[std::min(3, l * 4 / num_layers)];
    space.layers.push_back(std::move(layer));
  }
  for (int i = 1; i <= 10; ++i) space.channel_factors.push_back({i / 10.0});
  return space;
}

inline const std::vector<std::string>& sim_device_templates() {
  static const std::vector<std::string> names = {"sim-gpu", "sim-cpu", "sim-edge"};
  return names;
}

// Builds a synthetic device over the demo space. Cost scales are invented;
// only their structure matters: per-layer costs grow with kernel size, layer
// depth, and the rounded channel count, with multiplicative jitter per
// (layer, operator). The flops proxy is jitter-free and gives shuffle_k7 and
// shuffle_x identical work units, so swapping them preserves total FLOPs while
// their latencies differ - the equal-FLOPs/different-latency phenomenon.
inline SimDeviceConfig make_sim_device(const std::string& template_name, std::uint64_t seed) {
  double device_scale, delta, sigma;
  int batch_size;
  if (template_name == "sim-gpu") {
    device_scale = 0.12;
    delta = 0.08;
    sigma = 0.05;
    batch_size = 32;
  } else if (template_name == "sim-cpu") {
    device_scale = 0.9;
    delta = 0.1;
    sigma = 0.1;
    batch_size = 1;
  } else if (template_name == "sim-edge") {
    device_scale = 1.3;
    delta = 0.3;
    sigma = 0.1;
    batch_size = 16;
  } else {
    throw std::invalid_argument("unknown device template '" + template_name +
                                "' (expected sim-gpu, sim-cpu, or sim-edge)");
  }

  // Latency weight per operator; skip is a constant-cost pass-through whose
  // entries do not vary with the channel factor.
  const double op_cost[5] = {1.0, 1.4, 2.1, 1.2, 0.05};
  const double op_flops[5] = {1.0, 1.3, 1.8, 1.8, 0.0};
  const int kSkip = 4;

  SearchSpace space = demo_space();
  SimDeviceConfig config;
  config.device_name = template_name;
  config.batch_size = batch_size;
  config.seed = seed;
  config.boundary_overhead_ms = delta;
  config.noise_stddev_ms = sigma;

  RngStream root(seed);
  for (int l = 0; l < space.num_layers(); ++l) {
    double layer_scale = 0.7 + 0.03 * l;
    for (const auto& op : space.layers[l].operators) {
      RngStream jitter_rng =
          root.child("cost/l" + std::to_string(l) + "/op" + std::to_string(op.id));
      double jitter = std::max(0.4, 1.0 + 0.15 * jitter_rng.next_gaussian(0.0, 1.0));
      for (const auto& cf : space.channel_factors) {
        double work =
            op.id == kSkip
                ? 1.0
                : static_cast<double>(scaled_channels(space.layers[l].max_channels, cf)) /
                      space.layers[l].max_channels;
        config.base_cost[{l, op.id, cf.value}] =
            device_scale * op_cost[op.id] * layer_scale * work * jitter;
        config.flops_proxy[{l, op.id, cf.value}] =
            op.id == kSkip ? 0.0 : op_flops[op.id] * layer_scale * work;
      }
    }
  }
  return config;
}

}  // namespace hsconas
