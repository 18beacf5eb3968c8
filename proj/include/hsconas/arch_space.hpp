#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "hsconas/rng.hpp"

namespace hsconas {

using BigInt = boost::multiprecision::cpp_int;

struct OperatorId {
  int id = 0;  // index into the owning layer's operator list
  std::string display_name;

  friend bool operator==(const OperatorId& a, const OperatorId& b) { return a.id == b.id; }
};

struct ChannelFactor {
  double value = 1.0;  // in (0, 1], drawn from the space's factor list

  friend bool operator==(const ChannelFactor& a, const ChannelFactor& b) {
    return a.value == b.value;
  }
};

struct LayerSpec {
  std::vector<OperatorId> operators;
  int max_channels = 1;
  std::optional<int> fixed_operator;  // operator id, when shrinking has fixed this layer
};

struct SearchSpace {
  std::vector<LayerSpec> layers;
  std::vector<ChannelFactor> channel_factors;  // strictly increasing, shared across layers

  int num_layers() const { return static_cast<int>(layers.size()); }

  int factor_index(double value) const {
    for (int i = 0; i < static_cast<int>(channel_factors.size()); ++i)
      if (channel_factors[i].value == value) return i;
    throw std::invalid_argument("channel factor " + std::to_string(value) +
                                " not in the space's factor list");
  }

  int operator_index(int layer, const std::string& name) const {
    const auto& ops = layers.at(layer).operators;
    for (const auto& op : ops)
      if (op.display_name == name) return op.id;
    throw std::invalid_argument("unknown operator '" + name + "' at layer " +
                                std::to_string(layer));
  }
};

struct Gene {
  OperatorId op;
  ChannelFactor cf;
};

struct Architecture {
  std::vector<Gene> genes;

  // Canonical byte encoding, used for memoization and tie-breaking.
  std::string canonical_key() const {
    std::string key;
    key.reserve(genes.size() * 12);
    for (const auto& g : genes) {
      key.append(std::to_string(g.op.id));
      key.push_back(':');
      key.append(std::to_string(g.cf.value));
      key.push_back(';');
    }
    return key;
  }

  friend bool operator==(const Architecture& a, const Architecture& b) {
    if (a.genes.size() != b.genes.size()) return false;
    for (std::size_t i = 0; i < a.genes.size(); ++i)
      if (!(a.genes[i].op == b.genes[i].op && a.genes[i].cf == b.genes[i].cf)) return false;
    return true;
  }
};

inline void validate_space(const SearchSpace& space) {
  if (space.layers.empty()) throw std::invalid_argument("search space has no layers");
  if (space.channel_factors.empty())
    throw std::invalid_argument("search space has no channel factors");
  double prev = 0.0;
  for (const auto& cf : space.channel_factors) {
    if (cf.value <= prev || cf.value > 1.0)
      throw std::invalid_argument("channel factors must be strictly increasing in (0, 1]");
    prev = cf.value;
  }
  for (std::size_t l = 0; l < space.layers.size(); ++l) {
    const auto& layer = space.layers[l];
    if (layer.operators.empty())
      throw std::invalid_argument("layer " + std::to_string(l) + " has no operators");
    if (layer.max_channels < 1)
      throw std::invalid_argument("layer " + std::to_string(l) + " max_channels < 1");
    for (int i = 0; i < static_cast<int>(layer.operators.size()); ++i)
      if (layer.operators[i].id != i)
        throw std::invalid_argument("operator ids at layer " + std::to_string(l) +
                                    " must equal their positions");
    if (layer.fixed_operator &&
        (*layer.fixed_operator < 0 ||
         *layer.fixed_operator >= static_cast<int>(layer.operators.size())))
      throw std::invalid_argument("fixed operator out of range at layer " + std::to_string(l));
  }
}

inline bool space_contains(const SearchSpace& space, const Architecture& arch) {
  if (static_cast<int>(arch.genes.size()) != space.num_layers()) return false;
  for (int l = 0; l < space.num_layers(); ++l) {
    const auto& layer = space.layers[l];
    const auto& g = arch.genes[l];
    if (g.op.id < 0 || g.op.id >= static_cast<int>(layer.operators.size())) return false;
    if (layer.fixed_operator && g.op.id != *layer.fixed_operator) return false;
    bool cf_ok = std::any_of(space.channel_factors.begin(), space.channel_factors.end(),
                             [&](const ChannelFactor& c) { return c.value == g.cf.value; });
    if (!cf_ok) return false;
  }
  return true;
}

// Size of the (possibly restricted) space. Fixing a layer removes its operator
// choice only; channel factors stay searchable on every layer.
inline BigInt space_size(const SearchSpace& space) {
  BigInt size = 1;
  for (const auto& layer : space.layers) {
    if (!layer.fixed_operator) size *= static_cast<int>(layer.operators.size());
    size *= static_cast<int>(space.channel_factors.size());
  }
  return size;
}

inline Architecture sample_uniform(const SearchSpace& space, RngStream& rng) {
  Architecture arch;
  arch.genes.reserve(space.layers.size());
  for (const auto& layer : space.layers) {
    int op_id = layer.fixed_operator ? *layer.fixed_operator
                                     : rng.next_int(static_cast<int>(layer.operators.size()));
    int cf_idx = rng.next_int(static_cast<int>(space.channel_factors.size()));
    arch.genes.push_back({layer.operators[op_id], space.channel_factors[cf_idx]});
  }
  return arch;
}

inline SearchSpace restrict_layer(const SearchSpace& space, int layer, int op_id) {
  if (layer < 0 || layer >= space.num_layers())
    throw std::invalid_argument("layer index " + std::to_string(layer) + " out of range");
  const auto& ops = space.layers[layer].operators;
  if (op_id < 0 || op_id >= static_cast<int>(ops.size()))
    throw std::invalid_argument("operator id " + std::to_string(op_id) +
                                " not in layer " + std::to_string(layer));
  SearchSpace restricted = space;
  restricted.layers[layer].fixed_operator = op_id;
  return restricted;
}

// Rounds max_channels * cf half away from zero, floored at 1 channel.
inline int scaled_channels(int max_channels, ChannelFactor cf) {
  if (max_channels < 1) throw std::invalid_argument("max_channels must be >= 1");
  int scaled = static_cast<int>(std::llround(max_channels * cf.value));
  return std::max(1, scaled);
}

// Visits every architecture in lexicographic gene order (first layer slowest;
// operators before channel factors within a layer). Returns the count visited.
// Callback may return false to stop early.
inline std::uint64_t enumerate_space(const SearchSpace& space,
                                     const std::function<bool(const Architecture&)>& visit) {
  const int L = space.num_layers();
  const int n = static_cast<int>(space.channel_factors.size());
  std::vector<int> op_idx(L, 0), cf_idx(L, 0);
  std::vector<int> op_count(L);
  for (int l = 0; l < L; ++l)
    op_count[l] = space.layers[l].fixed_operator
                      ? 1
                      : static_cast<int>(space.layers[l].operators.size());

  Architecture arch;
  arch.genes.resize(L);
  std::uint64_t visited = 0;
  while (true) {
    for (int l = 0; l < L; ++l) {
      const auto& layer = space.layers[l];
      int op_id = layer.fixed_operator ? *layer.fixed_operator : op_idx[l];
      arch.genes[l] = {layer.operators[op_id], space.channel_factors[cf_idx[l]]};
    }
    ++visited;
    if (!visit(arch)) return visited;

    // odometer increment, last layer's cf fastest
    int l = L - 1;
    for (; l >= 0; --l) {
      if (++cf_idx[l] < n) break;
      cf_idx[l] = 0;
      if (++op_idx[l] < op_count[l]) break;
      op_idx[l] = 0;
    }
    if (l < 0) return visited;
  }
}

}  // namespace hsconas
