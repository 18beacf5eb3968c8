#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hsconas/arch_space.hpp"
#include "hsconas/ea_search.hpp"
#include "hsconas/hardware_sim.hpp"
#include "hsconas/latency_model.hpp"
#include "hsconas/objective.hpp"
#include "hsconas/space_shrink.hpp"

namespace hsconas {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSpaceSchema = "hsconas/space@1";
inline constexpr const char* kArchSchema = "hsconas/arch@1";
inline constexpr const char* kProfileSchema = "hsconas/profile@1";
inline constexpr const char* kMeasurementsSchema = "hsconas/measurements@1";
inline constexpr const char* kSimDeviceSchema = "hsconas/sim-device@1";
inline constexpr const char* kAccuracyTableSchema = "hsconas/accuracy-table@1";
inline constexpr const char* kSearchConfigSchema = "hsconas/search-config@1";
inline constexpr const char* kShrinkTraceSchema = "hsconas/shrink-trace@1";
inline constexpr const char* kSearchReportSchema = "hsconas/search-report@1";
inline constexpr const char* kManifestSchema = "hsconas/manifest@1";

inline void require_schema(const Json& doc, const std::string& expected) {
  if (!doc.contains("schema") || doc.at("schema").get<std::string>() != expected)
    throw std::runtime_error("document is not a " + expected +
                             " (schema tag missing or mismatched)");
}

// ---- search space ----

inline Json space_to_json(const SearchSpace& space) {
  Json doc;
  doc["schema"] = kSpaceSchema;
  doc["layers"] = Json::array();
  for (const auto& layer : space.layers) {
    Json jl;
    jl["operators"] = Json::array();
    for (const auto& op : layer.operators) jl["operators"].push_back(op.display_name);
    jl["max_channels"] = layer.max_channels;
    if (layer.fixed_operator)
      jl["fixed_operator"] = layer.operators[*layer.fixed_operator].display_name;
    doc["layers"].push_back(std::move(jl));
  }
  doc["channel_factors"] = Json::array();
  for (const auto& cf : space.channel_factors) doc["channel_factors"].push_back(cf.value);
  return doc;
}

inline SearchSpace space_from_json(const Json& doc) {
  require_schema(doc, kSpaceSchema);
  SearchSpace space;
  for (const auto& jl : doc.at("layers")) {
    LayerSpec layer;
    int id = 0;
    for (const auto& name : jl.at("operators"))
      layer.operators.push_back({id++, name.get<std::string>()});
    layer.max_channels = jl.at("max_channels").get<int>();
    if (jl.contains("fixed_operator")) {
      std::string name = jl.at("fixed_operator").get<std::string>();
      bool found = false;
      for (const auto& op : layer.operators)
        if (op.display_name == name) {
          layer.fixed_operator = op.id;
          found = true;
        }
      if (!found) throw std::runtime_error("fixed operator '" + name + "' not in layer");
    }
    space.layers.push_back(std::move(layer));
  }
  for (const auto& v : doc.at("channel_factors"))
    space.channel_factors.push_back({v.get<double>()});
  validate_space(space);
  return space;
}

// ---- architecture ----

inline Json arch_genes_to_json(const Architecture& arch) {
  Json genes = Json::array();
  for (int l = 0; l < static_cast<int>(arch.genes.size()); ++l) {
    Json g;
    g["layer"] = l;
    g["operator"] = arch.genes[l].op.display_name;
    g["channel_factor"] = arch.genes[l].cf.value;
    genes.push_back(std::move(g));
  }
  return genes;
}

inline Architecture arch_genes_from_json(const Json& genes, const SearchSpace& space) {
  if (static_cast<int>(genes.size()) != space.num_layers())
    throw std::runtime_error("architecture has " + std::to_string(genes.size()) +
                             " genes, space has " + std::to_string(space.num_layers()) +
                             " layers");
  Architecture arch;
  for (const auto& g : genes) {
    int layer = g.at("layer").get<int>();
    int op_id = space.operator_index(layer, g.at("operator").get<std::string>());
    int cf_idx = space.factor_index(g.at("channel_factor").get<double>());
    arch.genes.push_back({space.layers[layer].operators[op_id], space.channel_factors[cf_idx]});
  }
  return arch;
}

inline Json arch_to_json(const Architecture& arch) {
  Json doc;
  doc["schema"] = kArchSchema;
  doc["genes"] = arch_genes_to_json(arch);
  return doc;
}

inline Architecture arch_from_json(const Json& doc, const SearchSpace& space) {
  require_schema(doc, kArchSchema);
  return arch_genes_from_json(doc.at("genes"), space);
}

// ---- cost maps (latency tables, flops proxies) ----

inline Json cost_map_to_json(const CostMap& map, const SearchSpace& space,
                             const std::string& value_key) {
  Json entries = Json::array();
  for (const auto& [key, value] : map) {
    Json e;
    e["layer"] = key.layer;
    e["operator"] = space.layers.at(key.layer).operators.at(key.op).display_name;
    e["channel_factor"] = key.cf;
    e[value_key] = value;
    entries.push_back(std::move(e));
  }
  return entries;
}

inline CostMap cost_map_from_json(const Json& entries, const SearchSpace& space,
                                  const std::string& value_key) {
  CostMap map;
  for (const auto& e : entries) {
    int layer = e.at("layer").get<int>();
    int op_id = space.operator_index(layer, e.at("operator").get<std::string>());
    map[{layer, op_id, e.at("channel_factor").get<double>()}] = e.at(value_key).get<double>();
  }
  return map;
}

// ---- device profile ----

inline Json profile_to_json(const DeviceProfile& profile, const SearchSpace& space) {
  Json doc;
  doc["schema"] = kProfileSchema;
  doc["device_name"] = profile.device_name;
  doc["batch_size"] = profile.batch_size;
  doc["bias_ms"] = profile.bias_ms;
  if (profile.calibration_rmse_ms) doc["calibration_rmse_ms"] = *profile.calibration_rmse_ms;
  doc["entries"] = cost_map_to_json(profile.table.entries, space, "latency_ms");
  return doc;
}

inline DeviceProfile profile_from_json(const Json& doc, const SearchSpace& space) {
  require_schema(doc, kProfileSchema);
  DeviceProfile profile;
  profile.device_name = doc.at("device_name").get<std::string>();
  profile.batch_size = doc.at("batch_size").get<int>();
  profile.bias_ms = doc.at("bias_ms").get<double>();
  if (doc.contains("calibration_rmse_ms"))
    profile.calibration_rmse_ms = doc.at("calibration_rmse_ms").get<double>();
  profile.table.entries = cost_map_from_json(doc.at("entries"), space, "latency_ms");
  return profile;
}

// ---- measurement log ----

inline Json measurements_to_json(const std::vector<MeasurementRecord>& records) {
  Json doc;
  doc["schema"] = kMeasurementsSchema;
  doc["records"] = Json::array();
  for (const auto& rec : records) {
    Json r;
    r["architecture"] = arch_genes_to_json(rec.arch);
    r["measured_ms"] = rec.measured_ms;
    doc["records"].push_back(std::move(r));
  }
  return doc;
}

inline std::vector<MeasurementRecord> measurements_from_json(const Json& doc,
                                                             const SearchSpace& space) {
  require_schema(doc, kMeasurementsSchema);
  std::vector<MeasurementRecord> records;
  for (const auto& r : doc.at("records"))
    records.push_back({arch_genes_from_json(r.at("architecture"), space),
                       r.at("measured_ms").get<double>()});
  return records;
}

// ---- simulated device ----

inline Json sim_device_to_json(const SimDeviceConfig& config, const SearchSpace& space) {
  Json doc;
  doc["schema"] = kSimDeviceSchema;
  doc["device_name"] = config.device_name;
  doc["batch_size"] = config.batch_size;
  doc["seed"] = config.seed;
  doc["boundary_overhead_ms"] = config.boundary_overhead_ms;
  doc["noise_stddev_ms"] = config.noise_stddev_ms;
  doc["boundary_jitter"] = config.boundary_jitter;
  doc["base_cost"] = cost_map_to_json(config.base_cost, space, "cost_ms");
  doc["flops_proxy"] = cost_map_to_json(config.flops_proxy, space, "work_units");
  return doc;
}

inline SimDeviceConfig sim_device_from_json(const Json& doc, const SearchSpace& space) {
  require_schema(doc, kSimDeviceSchema);
  SimDeviceConfig config;
  config.device_name = doc.at("device_name").get<std::string>();
  config.batch_size = doc.at("batch_size").get<int>();
  config.seed = doc.at("seed").get<std::uint64_t>();
  config.boundary_overhead_ms = doc.at("boundary_overhead_ms").get<double>();
  config.noise_stddev_ms = doc.at("noise_stddev_ms").get<double>();
  if (doc.contains("boundary_jitter"))
    config.boundary_jitter = doc.at("boundary_jitter").get<double>();
  config.base_cost = cost_map_from_json(doc.at("base_cost"), space, "cost_ms");
  config.flops_proxy = cost_map_from_json(doc.at("flops_proxy"), space, "work_units");
  return config;
}

// ---- oracles ----

struct OracleSpec {
  std::string kind = "surrogate";  // surrogate | table | constant
  std::uint64_t seed = 0;
  double unary_stddev = 0.3;
  int pairwise_count = 8;
  double pairwise_stddev = 0.1;
  double value = 0.5;         // constant oracle
  std::string table_path;     // table oracle
};

inline Json oracle_spec_to_json(const OracleSpec& spec) {
  Json j;
  j["kind"] = spec.kind;
  if (spec.kind == "surrogate") {
    j["seed"] = spec.seed;
    j["unary_stddev"] = spec.unary_stddev;
    j["pairwise_count"] = spec.pairwise_count;
    j["pairwise_stddev"] = spec.pairwise_stddev;
  } else if (spec.kind == "constant") {
    j["value"] = spec.value;
  } else if (spec.kind == "table") {
    j["table_path"] = spec.table_path;
  }
  return j;
}

inline OracleSpec oracle_spec_from_json(const Json& j) {
  OracleSpec spec;
  spec.kind = j.at("kind").get<std::string>();
  if (spec.kind == "surrogate") {
    spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("unary_stddev")) spec.unary_stddev = j.at("unary_stddev").get<double>();
    if (j.contains("pairwise_count")) spec.pairwise_count = j.at("pairwise_count").get<int>();
    if (j.contains("pairwise_stddev"))
      spec.pairwise_stddev = j.at("pairwise_stddev").get<double>();
  } else if (spec.kind == "constant") {
    spec.value = j.at("value").get<double>();
  } else if (spec.kind == "table") {
    spec.table_path = j.at("table_path").get<std::string>();
  } else {
    throw std::runtime_error("unknown oracle kind '" + spec.kind + "'");
  }
  return spec;
}

inline TableOracle accuracy_table_from_json(const Json& doc, const SearchSpace& space) {
  require_schema(doc, kAccuracyTableSchema);
  std::unordered_map<std::string, double> table;
  for (const auto& e : doc.at("entries")) {
    Architecture arch = arch_genes_from_json(e.at("architecture"), space);
    table[arch.canonical_key()] = e.at("accuracy").get<double>();
  }
  return TableOracle(std::move(table));
}

inline std::unique_ptr<AccuracyOracle> build_oracle(const OracleSpec& spec,
                                                    const SearchSpace& space) {
  if (spec.kind == "surrogate")
    return std::make_unique<SurrogateOracle>(SurrogateOracle::random(
        space, spec.seed, spec.unary_stddev, spec.pairwise_count, spec.pairwise_stddev));
  if (spec.kind == "constant") return std::make_unique<ConstantOracle>(spec.value);
  if (spec.kind == "table") {
    std::ifstream in(spec.table_path);
    if (!in) throw std::runtime_error("cannot open accuracy table: " + spec.table_path);
    Json doc = Json::parse(in);
    return std::make_unique<TableOracle>(accuracy_table_from_json(doc, space));
  }
  throw std::runtime_error("unknown oracle kind '" + spec.kind + "'");
}

// ---- search config (objective + shrink + ea sections) ----

struct SearchConfigDoc {
  double target_latency_ms = 1.0;
  double beta = -0.1;
  bool one_sided_penalty = false;
  OracleSpec oracle;
  ShrinkPlan shrink_plan;  // layers 0-indexed in the file
  bool has_shrink_plan = false;
  EAConfig ea;
};

inline Json search_config_to_json(const SearchConfigDoc& cfg) {
  Json doc;
  doc["schema"] = kSearchConfigSchema;
  doc["objective"] = {{"target_latency_ms", cfg.target_latency_ms},
                      {"beta", cfg.beta},
                      {"one_sided_penalty", cfg.one_sided_penalty},
                      {"oracle", oracle_spec_to_json(cfg.oracle)}};
  if (cfg.has_shrink_plan) {
    Json stages = Json::array();
    for (const auto& stage : cfg.shrink_plan.stages) stages.push_back(stage);
    doc["shrink"] = {{"stages", std::move(stages)}, {"n_samples", cfg.shrink_plan.n_samples}};
  }
  doc["ea"] = {{"generations", cfg.ea.generations},
               {"population_size", cfg.ea.population_size},
               {"n_parents", cfg.ea.n_parents},
               {"crossover_prob", cfg.ea.crossover_prob},
               {"mutation_prob", cfg.ea.mutation_prob},
               {"elitism", cfg.ea.elitism},
               {"per_individual_mutation", cfg.ea.per_individual_mutation}};
  return doc;
}

inline SearchConfigDoc search_config_from_json(const Json& doc) {
  require_schema(doc, kSearchConfigSchema);
  SearchConfigDoc cfg;
  const Json& obj = doc.at("objective");
  cfg.target_latency_ms = obj.at("target_latency_ms").get<double>();
  cfg.beta = obj.at("beta").get<double>();
  if (obj.contains("one_sided_penalty"))
    cfg.one_sided_penalty = obj.at("one_sided_penalty").get<bool>();
  cfg.oracle = oracle_spec_from_json(obj.at("oracle"));
  if (doc.contains("shrink")) {
    cfg.has_shrink_plan = true;
    for (const auto& stage : doc.at("shrink").at("stages"))
      cfg.shrink_plan.stages.push_back(stage.get<std::vector<int>>());
    if (doc.at("shrink").contains("n_samples"))
      cfg.shrink_plan.n_samples = doc.at("shrink").at("n_samples").get<int>();
  }
  if (doc.contains("ea")) {
    const Json& ea = doc.at("ea");
    if (ea.contains("generations")) cfg.ea.generations = ea.at("generations").get<int>();
    if (ea.contains("population_size"))
      cfg.ea.population_size = ea.at("population_size").get<int>();
    if (ea.contains("n_parents")) cfg.ea.n_parents = ea.at("n_parents").get<int>();
    if (ea.contains("crossover_prob"))
      cfg.ea.crossover_prob = ea.at("crossover_prob").get<double>();
    if (ea.contains("mutation_prob")) cfg.ea.mutation_prob = ea.at("mutation_prob").get<double>();
    if (ea.contains("elitism")) cfg.ea.elitism = ea.at("elitism").get<int>();
    if (ea.contains("per_individual_mutation"))
      cfg.ea.per_individual_mutation = ea.at("per_individual_mutation").get<bool>();
  }
  return cfg;
}

// ---- shrink trace ----

inline Json shrink_trace_to_json(const ShrinkTrace& trace, const SearchSpace& space) {
  Json doc;
  doc["schema"] = kShrinkTraceSchema;
  doc["total_evaluated"] = trace.total_evaluated;
  doc["records"] = Json::array();
  for (const auto& rec : trace.records) {
    Json r;
    r["stage"] = rec.stage;
    r["layer"] = rec.layer;
    r["chosen_operator"] = space.layers.at(rec.layer).operators.at(rec.chosen_op).display_name;
    r["tie"] = rec.tie;
    r["size_before"] = rec.size_before.str();
    r["size_after"] = rec.size_after.str();
    r["candidates"] = Json::array();
    for (const auto& est : rec.candidates) {
      r["candidates"].push_back(
          {{"operator", space.layers.at(rec.layer).operators.at(est.op_id).display_name},
           {"n_samples", est.n_samples},
           {"mean_score", est.mean_score},
           {"score_stddev", est.score_stddev},
           {"seed", est.seed}});
    }
    doc["records"].push_back(std::move(r));
  }
  return doc;
}

// ---- search report ----

inline Json individual_to_json(const Individual& ind) {
  return Json{{"architecture", arch_genes_to_json(ind.arch)},
              {"score", ind.score},
              {"latency_ms", ind.latency_ms},
              {"accuracy", ind.accuracy}};
}

inline Json search_report_to_json(const SearchReport& report) {
  Json doc;
  doc["schema"] = kSearchReportSchema;
  doc["seed"] = report.seed;
  doc["evaluations"] = report.evaluations;
  doc["histogram"] = {{"bins", report.hist_bins},
                      {"lo_ms", report.hist_lo},
                      {"hi_ms", report.hist_hi}};
  doc["best"] = individual_to_json(report.best);
  doc["generations"] = Json::array();
  for (const auto& gen : report.generations)
    doc["generations"].push_back({{"best_score", gen.best_score},
                                  {"mean_score", gen.mean_score},
                                  {"latency_hist", gen.latency_hist}});
  doc["final_population"] = Json::array();
  if (!report.populations.empty())
    for (const auto& ind : report.populations.back())
      doc["final_population"].push_back(individual_to_json(ind));
  return doc;
}

// ---- file helpers ----

inline Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  return Json::parse(in);
}

inline void save_json(const Json& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace hsconas
