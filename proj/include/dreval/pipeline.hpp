#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dreval/analysis.hpp"
#include "dreval/ensemble.hpp"
#include "dreval/experiments.hpp"
#include "dreval/metric_catalog.hpp"
#include "dreval/types.hpp"

namespace dreval {

/// A dataset is either a CSV file or a synthetic spec. Projections are either
/// generated from the ensemble spec or loaded from `projections`.
struct DatasetSource {
  std::filesystem::path path;
  std::optional<SynthSpec> synth;
  /// False when the synth seed is derived from the master seed.
  bool synth_seed_explicit = false;
  std::filesystem::path projections;
};

struct EnsembleConfig {
  Index count = 50;
  std::vector<GeneratorSpec> generators = default_generator_specs();
};

struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 1;
  std::vector<DatasetSource> datasets;
  EnsembleConfig ensemble;
  std::vector<MetricInstance> metrics = default_metric_grid();
  AnalysisOptions analysis;
  /// seed and threads are filled in from the top level.
  SweepOptions experiments;
  /// Empty disables the score cache.
  std::filesystem::path cache_dir;
  std::filesystem::path output_dir = "out";

  /// Fully defaulted form; parse_config(to_json()) reproduces the config.
  nlohmann::json to_json() const;
  /// Re-derives seeds that follow the master seed; call after changing it.
  void set_seed(std::uint64_t seed);
};

/// Throws ConfigError on unknown keys, bad values or missing paths. Relative
/// paths resolve against `base_dir`.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

struct Inputs {
  std::vector<DatasetTable> datasets;
  std::vector<ProjectionSet> projections;
};

/// Loads or synthesizes every dataset and its projection ensemble.
Inputs prepare_inputs(const RunConfig& config);

struct AnalysisResult {
  SimilarityMatrix similarity;
  Dendrogram dendrogram;
  std::vector<MetricClustering> clusterings;
  OptimalK optimal;
  MetricClustering recommended;
};

AnalysisResult analyze_scores(const ScoreTensor& tensor, const AnalysisOptions& options);

/// Each command writes its files under config.output_dir plus a manifest.json
/// listing them, and logs a short summary to `log`.
ScoreTensor cmd_score(const RunConfig& config, std::ostream& log);
/// The remaining commands read `scores` (a scores.csv) when given and
/// otherwise score first, writing the score outputs as well.
AnalysisResult cmd_analyze(const RunConfig& config, std::ostream& log, const std::filesystem::path& scores = {});
std::vector<StabilityReport> cmd_stability(const RunConfig& config, std::ostream& log,
                                           const std::filesystem::path& scores = {});
/// score, analyze, then the recommendation at the chosen k.
AnalysisResult cmd_recommend(const RunConfig& config, std::ostream& log, const std::filesystem::path& scores = {});

}  // namespace dreval
