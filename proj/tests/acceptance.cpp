// Acceptance suite: runs every acceptance criterion end to end and prints one
// pass/fail line per criterion. Exit code is the number of failures.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hsconas/device_templates.hpp"
#include "hsconas/ea_search.hpp"
#include "hsconas/hardware_sim.hpp"
#include "hsconas/latency_model.hpp"
#include "hsconas/objective.hpp"
#include "hsconas/serialization.hpp"
#include "hsconas/space_shrink.hpp"

using namespace hsconas;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void criterion(int number, const std::string& what, bool pass, const std::string& detail = "") {
  std::printf("%s  criterion %2d: %s%s%s\n", pass ? "PASS" : "FAIL", number, what.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

SearchSpace tiny_space(int num_layers, int num_ops, int num_factors) {
  SearchSpace space;
  for (int l = 0; l < num_layers; ++l) {
    LayerSpec layer;
    for (int i = 0; i < num_ops; ++i) layer.operators.push_back({i, "op" + std::to_string(i)});
    layer.max_channels = 8;
    space.layers.push_back(std::move(layer));
  }
  for (int i = 1; i <= num_factors; ++i)
    space.channel_factors.push_back({static_cast<double>(i) / num_factors});
  return space;
}

SimDeviceConfig tiny_device(const SearchSpace& space, double delta, double sigma) {
  SimDeviceConfig config;
  config.device_name = "tiny";
  config.batch_size = 1;
  config.seed = 7;
  config.boundary_overhead_ms = delta;
  config.noise_stddev_ms = sigma;
  for (int l = 0; l < space.num_layers(); ++l)
    for (const auto& op : space.layers[l].operators)
      for (const auto& cf : space.channel_factors) {
        config.base_cost[{l, op.id, cf.value}] = (0.5 + 0.3 * op.id + 0.2 * l) * cf.value;
        config.flops_proxy[{l, op.id, cf.value}] = (1.0 + op.id) * cf.value;
      }
  return config;
}

DeviceProfile profile_from(const SimDeviceConfig& device, double bias = 0.0) {
  DeviceProfile profile;
  profile.device_name = device.device_name;
  profile.batch_size = device.batch_size;
  profile.table = export_true_table(device);
  profile.bias_ms = bias;
  return profile;
}

std::vector<MeasurementRecord> draw_measurements(const SimDeviceConfig& device,
                                                 const SearchSpace& space, int m,
                                                 const RngStream& root,
                                                 const std::string& label) {
  std::vector<MeasurementRecord> records;
  records.reserve(m);
  for (int i = 0; i < m; ++i) {
    RngStream arch_rng = root.child(label + "/arch/" + std::to_string(i));
    RngStream noise_rng = root.child(label + "/noise/" + std::to_string(i));
    records.push_back(measure(device, sample_uniform(space, arch_rng), noise_rng));
  }
  return records;
}

// Every evolve run executed by the suite feeds the elitist-monotonicity check.
bool g_monotone = true;
int g_monotone_runs = 0;
void check_monotone(const SearchReport& report) {
  ++g_monotone_runs;
  for (std::size_t g = 1; g < report.generations.size(); ++g)
    if (report.generations[g].best_score < report.generations[g - 1].best_score)
      g_monotone = false;
}

// ---- criteria ----

void criterion_1_space_size() {
  SearchSpace space = demo_space();
  BigInt size = space_size(space);
  BigInt expected = 1;
  for (int i = 0; i < 20; ++i) expected *= 50;
  BigInt reference("9500000000000000000000000000000000");  // 9.5e33
  BigInt gap = size > reference ? size - reference : reference - size;
  bool within_1pct = gap * 100 <= reference;
  criterion(1, "space size for L=20, K=5, n=10 is exactly 50^20, within 1% of 9.5e33",
            size == expected && within_1pct, size.str());
}

void criterion_2_calibration_exact() {
  SearchSpace space = demo_space();
  SimDeviceConfig device = make_sim_device("sim-edge", 42);
  device.noise_stddev_ms = 0.0;
  const double truth = 19 * device.boundary_overhead_ms;

  DeviceProfile profile = profile_from(device);
  auto records = draw_measurements(device, space, 100, RngStream(42), "c2");
  DeviceProfile calibrated = calibrate_bias(profile, records);

  bool bias_ok = std::abs(calibrated.bias_ms - truth) <= 1e-9 * truth;
  bool rmse_ok = *calibrated.calibration_rmse_ms <= 1e-9;
  std::ostringstream detail;
  detail << "bias " << calibrated.bias_ms << " vs " << truth << ", RMSE "
         << *calibrated.calibration_rmse_ms;
  criterion(2, "noiseless calibration recovers (L-1)*delta with zero in-sample RMSE",
            bias_ok && rmse_ok, detail.str());
}

void criterion_3_calibration_noise() {
  SearchSpace space = demo_space();
  const double sigma = 0.1;
  const int M = 1000;
  int bias_hits = 0, rmse_hits = 0;
  for (int trial = 0; trial < 20; ++trial) {
    SimDeviceConfig device = make_sim_device("sim-edge", 42);
    device.noise_stddev_ms = sigma;
    const double truth = 19 * device.boundary_overhead_ms;

    RngStream root(9000 + trial);
    DeviceProfile calibrated =
        calibrate_bias(profile_from(device), draw_measurements(device, space, M, root, "cal"));
    if (std::abs(calibrated.bias_ms - truth) <= 4 * sigma / std::sqrt(M)) ++bias_hits;

    auto held_out = draw_measurements(device, space, M, root, "holdout");
    double held_rmse = rmse(calibrated, held_out);
    if (held_rmse >= 0.8 * sigma && held_rmse <= 1.3 * sigma) ++rmse_hits;
  }
  std::ostringstream detail;
  detail << "bias within 4*sigma/sqrt(M) in " << bias_hits << "/20, held-out RMSE in band in "
         << rmse_hits << "/20";
  criterion(3, "noisy calibration: bias near (L-1)*delta, held-out RMSE near sigma",
            bias_hits >= 19 && rmse_hits >= 19, detail.str());
}

void criterion_4_residual_centering() {
  RngStream master(31337);
  bool all_centered = true;
  for (int trial = 0; trial < 100; ++trial) {
    RngStream rng = master.child("trial/" + std::to_string(trial));
    SearchSpace space =
        tiny_space(1 + rng.next_int(8), 1 + rng.next_int(4), 1 + rng.next_int(4));
    DeviceProfile profile;
    for (int l = 0; l < space.num_layers(); ++l)
      for (const auto& op : space.layers[l].operators)
        for (const auto& cf : space.channel_factors)
          profile.table.entries[{l, op.id, cf.value}] = 5.0 * rng.next_unit();

    std::vector<MeasurementRecord> records;
    int M = 1 + rng.next_int(30);
    for (int i = 0; i < M; ++i) {
      Architecture arch = sample_uniform(space, rng);
      records.push_back({arch, uncalibrated_sum(profile, arch) + rng.next_gaussian(0.0, 2.0)});
    }
    DeviceProfile calibrated = calibrate_bias(profile, records);
    double mean_residual = 0.0, scale = 1.0;
    for (const auto& rec : records) {
      mean_residual +=
          uncalibrated_sum(calibrated, rec.arch) + calibrated.bias_ms - rec.measured_ms;
      scale = std::max(scale, std::abs(rec.measured_ms));
    }
    if (std::abs(mean_residual / M) / scale > 1e-9) all_centered = false;
  }
  criterion(4, "mean signed residual is zero after calibration, 100 random profiles",
            all_centered);
}

void criterion_5_shrink_complexity() {
  SearchSpace space = demo_space();
  SimDeviceConfig device = make_sim_device("sim-edge", 5);
  DeviceProfile profile = profile_from(device, 19 * device.boundary_overhead_ms);
  SurrogateOracle oracle = SurrogateOracle::random(space, 5, 0.05, 8, 0.05);
  ObjectiveConfig cfg{34.0, -2.0, false, &profile, &oracle};
  Evaluator evaluator(cfg);

  auto [shrunk, trace] = run_shrink(space, ShrinkPlan::standard(20), evaluator, RngStream(5));

  int per_stage[2] = {0, 0};
  for (const auto& rec : trace.records) per_stage[rec.stage] += (int)rec.candidates.size();
  BigInt stage1 = trace.records[0].size_before / trace.records[3].size_after;
  BigInt stage2 = trace.records[4].size_before / trace.records[7].size_after;
  bool ok = per_stage[0] == 20 && per_stage[1] == 20 && trace.total_evaluated == 40 &&
            stage1 == 625 && stage2 == 625;
  std::ostringstream detail;
  detail << per_stage[0] << "+" << per_stage[1] << " estimates, stage ratios " << stage1.str()
         << ", " << stage2.str();
  criterion(5, "shrinking evaluates 5x4 subspaces per stage and divides the size by 625", ok,
            detail.str());
}

void criterion_6_shrink_separable() {
  // Small enumerable space so the per-layer argmax has an exhaustive oracle.
  SearchSpace space = tiny_space(4, 3, 2);
  SimDeviceConfig device = tiny_device(space, 0.1, 0.0);
  DeviceProfile profile = profile_from(device, 3 * 0.1);
  const int N = 100;

  int eligible = 0, matched = 0;
  for (int seed = 0; seed < 100; ++seed) {
    SurrogateOracle oracle = SurrogateOracle::random_unary(space, 1000 + seed, 0.3);
    ObjectiveConfig cfg{3.0, -0.1, false, &profile, &oracle};
    Evaluator evaluator(cfg);

    ShrinkPlan plan;
    plan.stages = {{3, 2, 1, 0}};
    plan.n_samples = N;
    auto [shrunk, trace] = run_shrink(space, plan, evaluator, RngStream(seed));

    // Replay the restrictions, comparing each chosen operator against the
    // exhaustive per-candidate subspace mean.
    SearchSpace current = space;
    for (const auto& rec : trace.records) {
      std::vector<double> exact_means;
      for (const auto& op : current.layers[rec.layer].operators) {
        SearchSpace candidate = restrict_layer(current, rec.layer, op.id);
        double sum = 0.0;
        std::uint64_t count = enumerate_space(candidate, [&](const Architecture& arch) {
          sum += score(cfg, arch);
          return true;
        });
        exact_means.push_back(sum / static_cast<double>(count));
      }
      std::vector<double> sorted = exact_means;
      std::sort(sorted.rbegin(), sorted.rend());
      double margin = sorted[0] - sorted[1];
      int exact_best = static_cast<int>(
          std::max_element(exact_means.begin(), exact_means.end()) - exact_means.begin());
      double stddev = rec.candidates[exact_best].score_stddev;
      if (margin > 3.0 * stddev / std::sqrt(N)) {
        ++eligible;
        if (rec.chosen_op == exact_best) ++matched;
      }
      current = restrict_layer(current, rec.layer, rec.chosen_op);
    }
  }
  std::ostringstream detail;
  detail << matched << "/" << eligible << " clear-margin layers matched";
  criterion(6, "separable shrinking matches the exhaustive per-layer argmax >= 95%",
            eligible > 0 && matched * 100 >= eligible * 95, detail.str());
}

void criterion_7_ea_recovery() {
  SearchSpace space = tiny_space(4, 3, 2);  // 1296 architectures
  SimDeviceConfig device = tiny_device(space, 0.1, 0.0);
  DeviceProfile profile = profile_from(device, 3 * 0.1);
  SurrogateOracle oracle = SurrogateOracle::random(space, 2024, 0.3, 6, 0.15);
  ObjectiveConfig cfg{3.0, -0.3, false, &profile, &oracle};
  Individual truth = exhaustive_argmax(space, cfg);

  int hits = 0;
  for (int seed = 0; seed < 100; ++seed) {
    Evaluator evaluator(cfg);
    EAConfig ea;  // stock defaults: 20 generations, pop 50, 20 parents, 0.25/0.25
    ea.seed = 5000 + seed;
    SearchReport report = evolve(space, evaluator, ea);
    check_monotone(report);
    if (report.best.arch == truth.arch) ++hits;
  }
  criterion(7, "EA with stock defaults recovers the exhaustive argmax on 1296 archs >= 95/100",
            hits >= 95, std::to_string(hits) + "/100");
}

struct EdgeRuns {
  int latency_hits = 0;       // criterion 9
  int concentration_hits = 0;  // criterion 10
};

EdgeRuns run_edge_searches() {
  SearchSpace space = demo_space();
  const double T = 34.0;
  EdgeRuns out;
  for (int trial = 0; trial < 20; ++trial) {
    SimDeviceConfig device = make_sim_device("sim-edge", 7000 + trial);
    DeviceProfile profile = calibrate_bias(
        profile_from(device), draw_measurements(device, space, 100, RngStream(trial), "edge"));
    SurrogateOracle oracle = SurrogateOracle::random(space, 8000 + trial, 0.05, 8, 0.05);
    ObjectiveConfig cfg{T, -2.0, false, &profile, &oracle};
    Evaluator evaluator(cfg);
    EAConfig ea;
    ea.seed = 6000 + trial;
    SearchReport report = evolve(space, evaluator, ea);
    check_monotone(report);

    if (report.best.latency_ms >= 0.97 * T && report.best.latency_ms <= 1.03 * T)
      ++out.latency_hits;

    auto band_mass = [&](const std::vector<Individual>& pop) {
      int in_band = 0;
      for (const auto& ind : pop)
        if (ind.latency_ms >= 0.9 * T && ind.latency_ms <= 1.1 * T) ++in_band;
      return in_band;
    };
    if (band_mass(report.populations.back()) > band_mass(report.populations.front()))
      ++out.concentration_hits;
  }
  return out;
}

void criterion_9_10(const EdgeRuns& runs) {
  criterion(9, "sim-edge search at T=34ms lands within [0.97T, 1.03T] in >= 18/20 seeds",
            runs.latency_hits >= 18, std::to_string(runs.latency_hits) + "/20");
  criterion(10, "final-generation mass within +/-10% of T exceeds generation 0 in >= 18/20",
            runs.concentration_hits >= 18, std::to_string(runs.concentration_hits) + "/20");
}

void criterion_8_monotone() {
  criterion(8, "per-generation best score non-decreasing in every elitist run of this suite",
            g_monotone && g_monotone_runs >= 120,
            std::to_string(g_monotone_runs) + " runs checked");
}

void criterion_11_flops_divergence() {
  SearchSpace space = demo_space();
  SimDeviceConfig device = make_sim_device("sim-edge", 42);
  device.noise_stddev_ms = 0.0;

  // shuffle_k7 and shuffle_x share flops proxies but not costs.
  int op_k7 = space.operator_index(0, "shuffle_k7");
  int op_x = space.operator_index(0, "shuffle_x");
  Architecture a, b;
  for (int l = 0; l < space.num_layers(); ++l) {
    a.genes.push_back({space.layers[l].operators[op_k7], space.channel_factors.back()});
    b.genes.push_back({space.layers[l].operators[op_x], space.channel_factors.back()});
  }
  double flops_a = flops_of(device, a), flops_b = flops_of(device, b);
  RngStream r1(0), r2(0);
  double lat_a = measure(device, a, r1).measured_ms;
  double lat_b = measure(device, b, r2).measured_ms;
  double rel_gap = std::abs(lat_a - lat_b) / std::min(lat_a, lat_b);
  std::ostringstream detail;
  detail << "flops " << flops_a << " vs " << flops_b << ", latency " << lat_a << " vs " << lat_b
         << " ms (" << rel_gap * 100 << "% apart)";
  criterion(11, "equal-FLOPs architectures differ in noiseless latency by >= 20%",
            flops_a == flops_b && rel_gap >= 0.20, detail.str());
}

void criterion_12_pipeline_determinism() {
  const std::string cli = HSCONAS_CLI_PATH;
  fs::path root = fs::temp_directory_path() / "hsconas_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);

  SearchConfigDoc cfg;
  cfg.target_latency_ms = 34.0;
  cfg.beta = -2.0;
  cfg.oracle.kind = "surrogate";
  cfg.oracle.seed = 11;
  cfg.oracle.unary_stddev = 0.05;
  cfg.has_shrink_plan = true;
  cfg.shrink_plan.stages = {{19, 18, 17, 16}, {15, 14, 13, 12}};
  cfg.shrink_plan.n_samples = 50;
  save_json(search_config_to_json(cfg), (root / "config.json").string());

  auto run_pipeline = [&](const std::string& name, int jobs) {
    fs::path dir = root / name;
    fs::create_directories(dir);
    std::string jobs_flag = " --jobs " + std::to_string(jobs) + " ";
    std::vector<std::string> cmds = {
        cli + " gen-device --template sim-edge --seed 11 --out " + (dir / "device.json").string() +
            " --space-out " + (dir / "space.json").string(),
        cli + " profile --device " + (dir / "device.json").string() + " --space " +
            (dir / "space.json").string() + " -m 100 --seed 11 --out-dir " +
            (dir / "prof").string(),
        cli + jobs_flag + "shrink --config " + (root / "config.json").string() + " --space " +
            (dir / "space.json").string() + " --profile " + (dir / "prof/profile.json").string() +
            " --seed 11 --out-dir " + (dir / "shrink").string(),
        cli + jobs_flag + "search --config " + (root / "config.json").string() + " --space " +
            (dir / "shrink/shrunk_space.json").string() + " --profile " +
            (dir / "prof/profile.json").string() + " --seed 11 --out-dir " +
            (dir / "search").string(),
    };
    for (const auto& cmd : cmds)
      if (std::system((cmd + " 2>/dev/null").c_str()) != 0) return false;
    return true;
  };

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
  };

  bool ran = run_pipeline("a", 1) && run_pipeline("b", 1) && run_pipeline("c", 8);
  bool identical = ran;
  const char* primaries[] = {"device.json",          "space.json",
                             "prof/profile.json",    "prof/measurements.json",
                             "shrink/shrunk_space.json", "shrink/shrink_trace.json",
                             "search/report.json",   "search/trace.csv"};
  if (ran)
    for (const char* file : primaries) {
      std::string a = slurp(root / "a" / file);
      if (a.empty() || a != slurp(root / "b" / file) || a != slurp(root / "c" / file))
        identical = false;
    }
  criterion(12, "pipeline reruns (and --jobs 8) produce byte-identical primary outputs",
            identical);
  fs::remove_all(root);
}

}  // namespace

int main() {
  criterion_1_space_size();
  criterion_2_calibration_exact();
  criterion_3_calibration_noise();
  criterion_4_residual_centering();
  criterion_5_shrink_complexity();
  criterion_6_shrink_separable();
  criterion_7_ea_recovery();
  EdgeRuns edge = run_edge_searches();
  criterion_8_monotone();
  criterion_9_10(edge);
  criterion_11_flops_divergence();
  criterion_12_pipeline_determinism();

  if (g_failures == 0)
    std::printf("all 12 acceptance criteria passed\n");
  else
    std::printf("%d acceptance criteria FAILED\n", g_failures);
  return g_failures;
}
