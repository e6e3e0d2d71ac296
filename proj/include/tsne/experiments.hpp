#pragma once

#include "tsne/diagnostics.hpp"
#include "tsne/io.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tsne {

using Json = nlohmann::ordered_json;

enum class DataSource { Gmm, Spheres, Idx, Csv };

/// Explicit values that win over the theory schedule or the defaults.
struct ParamOverrides {
  std::optional<double> alpha, h, h_prime, perplexity, sigma_n;
  std::optional<long> K0, K1;
};

struct ExperimentConfig {
  DataSource source = DataSource::Gmm;
  GmmPreset gmm;
  SpheresPreset spheres;
  std::filesystem::path data_path;    // idx images or csv
  std::filesystem::path labels_path;  // idx labels (optional)
  bool csv_has_labels = true;
  std::vector<int> digits{2, 4, 6, 8};
  Index per_digit = 0;                // 0 keeps every idx image

  std::optional<double> theory_delta;
  std::optional<double> theory_gamma;  // multiplies the theory alpha
  bool stable_gamma = false;           // further shrink alpha until h lambda_n(L(alpha P)) <= 0.9
  ParamOverrides overrides;
  InitMode init = InitMode::Random;
  long stride = 5;                    // embedding-stage snapshot stride
  std::filesystem::path out = "out";
  std::uint64_t seed = 0;

  std::vector<long> sweep_n;          // compare: GMM sizes to sweep
  bool dry_run = false;               // early-stop: write the plan only
};

/// Exit codes of the command-line driver.
enum ExitCode { kExitOk = 0, kExitConfig = 1, kExitIo = 2, kExitDivergence = 3 };

/// Loaded or generated samples plus whatever metadata the source records.
struct LoadedData {
  LabeledData data;
  Json metadata;
};

LoadedData load_data(const ExperimentConfig& cfg);

/// Theory schedule for n (when a delta is set) or the defaults, then overrides.
TuningParams resolve_params(const ExperimentConfig& cfg, Index n);

Json params_json(const TuningParams& p);
Json ratio_json(const Ratio& r);

/// Diagnostics of one trajectory; cluster diagnostics need labels.
Json diagnostic_report(const TrajectoryLog<double>& traj, const AffinityP<double>& p, const LabeledData& data);

/// Each returns the report it wrote to cfg.out.
Json cmd_run(const ExperimentConfig& cfg);
Json cmd_compare(const ExperimentConfig& cfg);
Json cmd_early_stop_study(const ExperimentConfig& cfg);

}  // namespace tsne
