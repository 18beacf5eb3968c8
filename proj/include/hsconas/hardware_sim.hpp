#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "hsconas/latency_model.hpp"
#include "hsconas/rng.hpp"

namespace hsconas {

// Synthetic target device. Ground truth is additive per-layer cost plus a
// constant overhead per adjacent-layer boundary, plus optional Gaussian noise,
// so the calibration pipeline has an exactly recoverable bias of (L-1)*delta.
struct SimDeviceConfig {
  std::string device_name;
  int batch_size = 1;
  std::uint64_t seed = 0;
  CostMap base_cost;                  // (layer, op, cf) -> ms
  double boundary_overhead_ms = 0.0;  // delta, per adjacent-layer boundary
  double noise_stddev_ms = 0.0;       // sigma, Gaussian on the total
  // Heterogeneity of the boundary overheads, in [0, 1). When nonzero, each
  // boundary's overhead becomes delta * (1 + jitter * u) with u in [-1, 1]
  // depending on the adjacent operator pair, so a scalar bias can only absorb
  // the mean and calibration is left with a nonzero residual RMSE.
  double boundary_jitter = 0.0;
  CostMap flops_proxy;                // (layer, op, cf) -> abstract work units

  double base_cost_at(int layer, int op, double cf) const {
    auto it = base_cost.find({layer, op, cf});
    if (it == base_cost.end())
      throw std::out_of_range("no base cost for (layer=" + std::to_string(layer) +
                              ", op=" + std::to_string(op) + ", cf=" + std::to_string(cf) + ")");
    return it->second;
  }
};

inline MeasurementRecord measure(const SimDeviceConfig& config, const Architecture& arch,
                                 RngStream& rng) {
  const int L = static_cast<int>(arch.genes.size());
  double total = 0.0;
  for (int l = 0; l < L; ++l)
    total += config.base_cost_at(l, arch.genes[l].op.id, arch.genes[l].cf.value);
  for (int l = 0; l + 1 < L; ++l) {
    double overhead = config.boundary_overhead_ms;
    if (config.boundary_jitter > 0.0) {
      RngStream u = RngStream(config.seed).child(
          "boundary/" + std::to_string(l) + "/" + std::to_string(arch.genes[l].op.id) + "/" +
          std::to_string(arch.genes[l + 1].op.id));
      overhead *= 1.0 + config.boundary_jitter * (2.0 * u.next_unit() - 1.0);
    }
    total += overhead;
  }
  if (config.noise_stddev_ms > 0.0) total += rng.next_gaussian(0.0, config.noise_stddev_ms);
  return {arch, std::max(0.0, total)};
}

inline double flops_of(const SimDeviceConfig& config, const Architecture& arch) {
  double total = 0.0;
  for (int l = 0; l < static_cast<int>(arch.genes.size()); ++l) {
    auto it = config.flops_proxy.find({l, arch.genes[l].op.id, arch.genes[l].cf.value});
    if (it == config.flops_proxy.end())
      throw std::out_of_range("no flops proxy for layer " + std::to_string(l));
    total += it->second;
  }
  return total;
}

// The noiseless per-layer cost map as a latency table; no delta, no noise.
inline LatencyTable export_true_table(const SimDeviceConfig& config) {
  return LatencyTable{config.base_cost};
}

}  // namespace hsconas
