#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hsconas/device_templates.hpp"
#include "hsconas/ea_search.hpp"
#include "hsconas/hardware_sim.hpp"
#include "hsconas/latency_model.hpp"
#include "hsconas/objective.hpp"
#include "hsconas/serialization.hpp"
#include "hsconas/space_shrink.hpp"

namespace fs = std::filesystem;
using namespace hsconas;

namespace {

constexpr const char* kToolVersion = "0.1.0";

class StageTimer {
 public:
  StageTimer() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// One manifest per command run. Timings live under "metadata" so the primary
// outputs stay byte-identical across reruns.
void write_manifest(const std::string& command, std::uint64_t seed,
                    const std::vector<std::pair<std::string, std::string>>& inputs,
                    const std::vector<std::pair<std::string, std::string>>& outputs,
                    double elapsed_ms, const fs::path& out_dir) {
  Json doc;
  doc["schema"] = kManifestSchema;
  doc["command"] = command;
  doc["tool_version"] = kToolVersion;
  doc["seed"] = seed;
  doc["inputs"] = Json::object();
  for (const auto& [k, v] : inputs) doc["inputs"][k] = v;
  doc["outputs"] = Json::object();
  for (const auto& [k, v] : outputs) {
    if (!fs::exists(v)) throw std::runtime_error("manifest output missing on disk: " + v);
    doc["outputs"][k] = v;
  }
  doc["metadata"] = {{"elapsed_ms", elapsed_ms}};
  save_json(doc, (out_dir / "manifest.json").string());
}

struct ObjectiveBundle {
  SearchSpace space;
  DeviceProfile profile;
  std::unique_ptr<AccuracyOracle> oracle;
  SearchConfigDoc config;
  ObjectiveConfig objective;
};

ObjectiveBundle load_objective(const std::string& config_path, const std::string& space_path,
                               const std::string& profile_path) {
  ObjectiveBundle bundle;
  bundle.config = search_config_from_json(load_json(config_path));
  bundle.space = space_from_json(load_json(space_path));
  bundle.profile = profile_from_json(load_json(profile_path), bundle.space);
  bundle.oracle = build_oracle(bundle.config.oracle, bundle.space);
  bundle.objective.target_latency_ms = bundle.config.target_latency_ms;
  bundle.objective.beta = bundle.config.beta;
  bundle.objective.one_sided_penalty = bundle.config.one_sided_penalty;
  bundle.objective.profile = &bundle.profile;
  bundle.objective.oracle = bundle.oracle.get();
  validate_objective(bundle.objective);
  return bundle;
}

int cmd_gen_device(const std::string& template_name, std::uint64_t seed,
                   const std::string& out_path, const std::string& space_out, bool verbose) {
  StageTimer timer;
  SearchSpace space = demo_space();
  SimDeviceConfig config = make_sim_device(template_name, seed);
  fs::path out(out_path);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_json(sim_device_to_json(config, space), out_path);
  std::vector<std::pair<std::string, std::string>> outputs = {{"device", out_path}};
  if (!space_out.empty()) {
    save_json(space_to_json(space), space_out);
    outputs.emplace_back("space", space_out);
  }
  write_manifest("gen-device", seed, {{"template", template_name}}, outputs, timer.elapsed_ms(),
                 out.has_parent_path() ? out.parent_path() : fs::path("."));
  if (verbose)
    std::cerr << "gen-device: wrote " << out_path << " (template " << template_name << ", seed "
              << seed << ")\n";
  return 0;
}

int cmd_profile(const std::string& device_path, const std::string& space_path, int m,
                int holdout, std::uint64_t seed, const std::string& out_dir, bool verbose) {
  StageTimer timer;
  SearchSpace space = space_from_json(load_json(space_path));
  SimDeviceConfig device = sim_device_from_json(load_json(device_path), space);

  DeviceProfile profile;
  profile.device_name = device.device_name;
  profile.batch_size = device.batch_size;
  profile.table = export_true_table(device);

  RngStream root(seed);
  auto draw_records = [&](const std::string& label, int count) {
    std::vector<MeasurementRecord> records;
    records.reserve(count);
    for (int i = 0; i < count; ++i) {
      RngStream arch_rng = root.child(label + "/arch/" + std::to_string(i));
      RngStream noise_rng = root.child(label + "/noise/" + std::to_string(i));
      records.push_back(measure(device, sample_uniform(space, arch_rng), noise_rng));
    }
    return records;
  };

  std::vector<MeasurementRecord> records = draw_records("profile", m);
  profile = calibrate_bias(profile, records);

  fs::path dir(out_dir);
  fs::create_directories(dir);
  std::string profile_path = (dir / "profile.json").string();
  std::string log_path = (dir / "measurements.json").string();
  save_json(profile_to_json(profile, space), profile_path);
  save_json(measurements_to_json(records), log_path);

  if (verbose || holdout > 0) {
    std::cerr << "profile: device " << profile.device_name << ", M=" << m << ", bias "
              << profile.bias_ms << " ms, in-sample RMSE " << *profile.calibration_rmse_ms
              << " ms\n";
    if (holdout > 0) {
      std::vector<MeasurementRecord> held = draw_records("holdout", holdout);
      std::cerr << "profile: held-out RMSE over " << holdout << " fresh measurements: "
                << rmse(profile, held) << " ms\n";
    }
  }

  write_manifest("profile", seed, {{"device", device_path}, {"space", space_path}},
                 {{"profile", profile_path}, {"measurements", log_path}}, timer.elapsed_ms(), dir);
  return 0;
}

int cmd_shrink(const std::string& config_path, const std::string& space_path,
               const std::string& profile_path, std::uint64_t seed, const std::string& out_dir,
               bool verbose) {
  StageTimer timer;
  ObjectiveBundle bundle = load_objective(config_path, space_path, profile_path);
  ShrinkPlan plan = bundle.config.has_shrink_plan
                        ? bundle.config.shrink_plan
                        : ShrinkPlan::standard(bundle.space.num_layers());

  Evaluator evaluator(bundle.objective);
  auto [shrunk, trace] = run_shrink(bundle.space, plan, evaluator, RngStream(seed).child("shrink"));

  fs::path dir(out_dir);
  fs::create_directories(dir);
  std::string space_out = (dir / "shrunk_space.json").string();
  std::string trace_out = (dir / "shrink_trace.json").string();
  save_json(space_to_json(shrunk), space_out);
  save_json(shrink_trace_to_json(trace, bundle.space), trace_out);

  if (verbose) {
    std::cerr << "shrink: " << trace.total_evaluated << " subspace evaluations\n";
    for (const auto& rec : trace.records)
      std::cerr << "  stage " << rec.stage << " layer " << rec.layer << " -> "
                << bundle.space.layers[rec.layer].operators[rec.chosen_op].display_name
                << " (size " << rec.size_before.str() << " -> " << rec.size_after.str() << ")"
                << (rec.tie ? " [tie]" : "") << "\n";
  }

  write_manifest("shrink", seed,
                 {{"config", config_path}, {"space", space_path}, {"profile", profile_path}},
                 {{"shrunk_space", space_out}, {"shrink_trace", trace_out}}, timer.elapsed_ms(),
                 dir);
  return 0;
}

int cmd_search(const std::string& config_path, const std::string& space_path,
               const std::string& profile_path, std::uint64_t seed, int jobs,
               const std::string& out_dir, bool verbose) {
  StageTimer timer;
  ObjectiveBundle bundle = load_objective(config_path, space_path, profile_path);
  EAConfig ea = bundle.config.ea;
  ea.seed = RngStream(seed).child("search").seed();

  Evaluator evaluator(bundle.objective);
  SearchReport report = evolve(bundle.space, evaluator, ea, jobs);

  fs::path dir(out_dir);
  fs::create_directories(dir);
  std::string report_path = (dir / "report.json").string();
  std::string csv_path = (dir / "trace.csv").string();
  save_json(search_report_to_json(report), report_path);

  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot write file: " + csv_path);
  csv << "generation,individual,latency_ms,accuracy,score\n";
  for (std::size_t g = 0; g < report.populations.size(); ++g)
    for (std::size_t i = 0; i < report.populations[g].size(); ++i) {
      const Individual& ind = report.populations[g][i];
      csv << g << "," << i << "," << ind.latency_ms << "," << ind.accuracy << "," << ind.score
          << "\n";
    }
  csv.close();

  if (verbose)
    std::cerr << "search: best score " << report.best.score << " at latency "
              << report.best.latency_ms << " ms (" << report.evaluations << " evaluations)\n";

  write_manifest("search", seed,
                 {{"config", config_path}, {"space", space_path}, {"profile", profile_path}},
                 {{"report", report_path}, {"trace_csv", csv_path}}, timer.elapsed_ms(), dir);
  return 0;
}

int cmd_report(const std::string& report_path, const std::string& out_dir, bool verbose) {
  StageTimer timer;
  Json doc = load_json(report_path);
  require_schema(doc, kSearchReportSchema);

  fs::path dir(out_dir);
  fs::create_directories(dir);
  std::string summary_path = (dir / "summary.txt").string();
  std::string hist_path = (dir / "histogram.csv").string();

  std::ofstream summary(summary_path);
  if (!summary) throw std::runtime_error("cannot write file: " + summary_path);
  const Json& best = doc.at("best");
  summary << "best score:   " << best.at("score").get<double>() << "\n"
          << "best latency: " << best.at("latency_ms").get<double>() << " ms\n"
          << "best accuracy:" << best.at("accuracy").get<double>() << "\n"
          << "evaluations:  " << doc.at("evaluations").get<std::size_t>() << "\n"
          << "seed:         " << doc.at("seed").get<std::uint64_t>() << "\n"
          << "generations:  " << doc.at("generations").size() - 1 << "\n\n"
          << "best architecture:\n";
  for (const auto& g : best.at("architecture"))
    summary << "  layer " << g.at("layer").get<int>() << ": "
            << g.at("operator").get<std::string>() << " x "
            << g.at("channel_factor").get<double>() << "\n";
  summary.close();

  std::ofstream hist(hist_path);
  if (!hist) throw std::runtime_error("cannot write file: " + hist_path);
  const Json& h = doc.at("histogram");
  int bins = h.at("bins").get<int>();
  double lo = h.at("lo_ms").get<double>(), hi = h.at("hi_ms").get<double>();
  hist << "generation,bin,lo_ms,hi_ms,count\n";
  double width = (hi - lo) / bins;
  const Json& gens = doc.at("generations");
  for (std::size_t g = 0; g < gens.size(); ++g) {
    const auto& counts = gens[g].at("latency_hist");
    for (int b = 0; b < bins; ++b)
      hist << g << "," << b << "," << lo + b * width << "," << lo + (b + 1) * width << ","
           << counts[b].get<int>() << "\n";
  }
  hist.close();

  if (verbose) std::cerr << "report: wrote " << summary_path << " and " << hist_path << "\n";
  write_manifest("report", 0, {{"report", report_path}},
                 {{"summary", summary_path}, {"histogram_csv", hist_path}}, timer.elapsed_ms(),
                 dir);
  return 0;
}

int cmd_validate(const std::string& file_path, const std::string& space_path) {
  Json doc = load_json(file_path);
  if (!doc.contains("schema")) throw std::runtime_error(file_path + ": no schema tag");
  std::string schema = doc.at("schema").get<std::string>();

  if (schema == kSpaceSchema) {
    space_from_json(doc);
  } else if (schema == kSearchConfigSchema) {
    search_config_from_json(doc);
  } else if (schema == kSearchReportSchema || schema == kShrinkTraceSchema ||
             schema == kManifestSchema) {
    // self-contained; parse already proved well-formedness
  } else if (schema == kArchSchema || schema == kProfileSchema ||
             schema == kMeasurementsSchema || schema == kSimDeviceSchema ||
             schema == kAccuracyTableSchema) {
    if (space_path.empty()) {
      std::cerr << "validate: " << schema << " checked structurally; pass --space for full "
                << "cross-validation\n";
    } else {
      SearchSpace space = space_from_json(load_json(space_path));
      if (schema == kArchSchema)
        arch_from_json(doc, space);
      else if (schema == kProfileSchema)
        profile_from_json(doc, space);
      else if (schema == kMeasurementsSchema)
        measurements_from_json(doc, space);
      else if (schema == kSimDeviceSchema)
        sim_device_from_json(doc, space);
      else
        accuracy_table_from_json(doc, space);
    }
  } else {
    throw std::runtime_error(file_path + ": unknown schema '" + schema + "'");
  }
  std::cerr << "validate: " << file_path << " ok (" << schema << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hardware-aware architecture search over a layered operator/channel space"};
  app.require_subcommand(1);
  app.fallthrough();  // let --seed/--jobs/--verbose appear after the subcommand

  std::uint64_t seed = 0;
  int jobs = 1;
  bool verbose = false;
  app.add_option("--seed", seed, "Master seed; every module seed derives from it");
  app.add_option("--jobs", jobs, "Worker threads for fitness evaluation (never affects results)");
  app.add_flag("--verbose", verbose, "Chatty diagnostics on stderr");

  auto* gen = app.add_subcommand("gen-device", "Emit a simulated device config from a template");
  std::string template_name = "sim-edge", gen_out = "device.json", gen_space_out;
  gen->add_option("--template", template_name, "sim-gpu | sim-cpu | sim-edge")->required();
  gen->add_option("--out", gen_out, "Device config output path");
  gen->add_option("--space-out", gen_space_out, "Also write the matching search space");

  auto* prof = app.add_subcommand("profile", "Measure a device and calibrate the latency bias");
  std::string prof_device, prof_space, prof_out = "out";
  int prof_m = 100, prof_holdout = 0;
  prof->add_option("--device", prof_device, "Simulated device config")->required();
  prof->add_option("--space", prof_space, "Search space document")->required();
  prof->add_option("-m,--measurements", prof_m, "Architectures sampled for calibration");
  prof->add_option("--holdout", prof_holdout, "Extra measurements for a held-out RMSE report");
  prof->add_option("--out-dir", prof_out, "Output directory");

  auto* shr = app.add_subcommand("shrink", "Progressively fix the highest-quality operators");
  std::string shr_config, shr_space, shr_profile, shr_out = "out";
  shr->add_option("--config", shr_config, "Search config document")->required();
  shr->add_option("--space", shr_space, "Search space document")->required();
  shr->add_option("--profile", shr_profile, "Calibrated device profile")->required();
  shr->add_option("--out-dir", shr_out, "Output directory");

  auto* sea = app.add_subcommand("search", "Evolve the best architecture under the objective");
  std::string sea_config, sea_space, sea_profile, sea_out = "out";
  sea->add_option("--config", sea_config, "Search config document")->required();
  sea->add_option("--space", sea_space, "Search space document (possibly shrunk)")->required();
  sea->add_option("--profile", sea_profile, "Calibrated device profile")->required();
  sea->add_option("--out-dir", sea_out, "Output directory");

  auto* rep = app.add_subcommand("report", "Render a summary and histogram CSV from a report");
  std::string rep_report, rep_out = "out";
  rep->add_option("--report", rep_report, "Search report document")->required();
  rep->add_option("--out-dir", rep_out, "Output directory");

  auto* val = app.add_subcommand("validate", "Schema-check any document");
  std::string val_file, val_space;
  val->add_option("--file", val_file, "Document to check")->required();
  val->add_option("--space", val_space, "Search space for cross-validation");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen_device(template_name, seed, gen_out, gen_space_out, verbose);
    if (*prof)
      return cmd_profile(prof_device, prof_space, prof_m, prof_holdout, seed, prof_out, verbose);
    if (*shr) return cmd_shrink(shr_config, shr_space, shr_profile, seed, shr_out, verbose);
    if (*sea) return cmd_search(sea_config, sea_space, sea_profile, seed, jobs, sea_out, verbose);
    if (*rep) return cmd_report(rep_report, rep_out, verbose);
    if (*val) return cmd_validate(val_file, val_space);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
