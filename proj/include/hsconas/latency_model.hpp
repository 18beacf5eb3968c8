#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsconas/arch_space.hpp"

namespace hsconas {

struct LatencyKey {
  int layer = 0;
  int op = 0;
  double cf = 1.0;

  friend bool operator<(const LatencyKey& a, const LatencyKey& b) {
    if (a.layer != b.layer) return a.layer < b.layer;
    if (a.op != b.op) return a.op < b.op;
    return a.cf < b.cf;
  }
  friend bool operator==(const LatencyKey& a, const LatencyKey& b) {
    return a.layer == b.layer && a.op == b.op && a.cf == b.cf;
  }
};

using CostMap = std::map<LatencyKey, double>;

struct LatencyTable {
  CostMap entries;  // (layer, operator, channel factor) -> milliseconds

  double at(int layer, int op, double cf) const {
    auto it = entries.find({layer, op, cf});
    if (it == entries.end())
      throw std::out_of_range("no latency entry for (layer=" + std::to_string(layer) +
                              ", op=" + std::to_string(op) + ", cf=" + std::to_string(cf) + ")");
    return it->second;
  }
};

struct DeviceProfile {
  std::string device_name;
  int batch_size = 1;
  LatencyTable table;
  double bias_ms = 0.0;
  std::optional<double> calibration_rmse_ms;  // in-sample, set by calibrate_bias
};

struct MeasurementRecord {
  Architecture arch;
  double measured_ms = 0.0;
};

// Per-layer table sum without the bias term; the LAT of the calibration formula.
inline double uncalibrated_sum(const DeviceProfile& profile, const Architecture& arch) {
  double sum = 0.0;
  for (int l = 0; l < static_cast<int>(arch.genes.size()); ++l)
    sum += profile.table.at(l, arch.genes[l].op.id, arch.genes[l].cf.value);
  return sum;
}

// Table sum plus bias, clamped at zero (a negative bias can undershoot).
inline double estimate_latency(const DeviceProfile& profile, const Architecture& arch) {
  return std::max(0.0, uncalibrated_sum(profile, arch) + profile.bias_ms);
}

// Sets bias to the mean measured-minus-predicted gap over the records and
// stores the in-sample RMSE of the corrected estimates.
inline DeviceProfile calibrate_bias(const DeviceProfile& profile,
                                    const std::vector<MeasurementRecord>& records) {
  if (records.empty()) throw std::invalid_argument("calibrate_bias needs at least one record");
  double gap_sum = 0.0;
  std::vector<double> sums;
  sums.reserve(records.size());
  for (const auto& rec : records) {
    double s = uncalibrated_sum(profile, rec.arch);
    sums.push_back(s);
    gap_sum += rec.measured_ms - s;
  }
  DeviceProfile calibrated = profile;
  calibrated.bias_ms = gap_sum / static_cast<double>(records.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    double r = sums[i] + calibrated.bias_ms - records[i].measured_ms;
    sq += r * r;
  }
  calibrated.calibration_rmse_ms = std::sqrt(sq / static_cast<double>(records.size()));
  return calibrated;
}

inline double rmse(const DeviceProfile& profile, const std::vector<MeasurementRecord>& records) {
  if (records.empty()) throw std::invalid_argument("rmse needs at least one record");
  double sq = 0.0;
  for (const auto& rec : records) {
    double r = estimate_latency(profile, rec.arch) - rec.measured_ms;
    sq += r * r;
  }
  return std::sqrt(sq / static_cast<double>(records.size()));
}

}  // namespace hsconas
