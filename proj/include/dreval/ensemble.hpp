#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dreval/types.hpp"

namespace dreval {

struct SynthSpec {
  std::string id = "synth";
  Index n = 300;
  Index d = 10;
  int clusters = 3;
  double spread = 0.1;
  std::uint64_t seed = 0;
};

/// Gaussian mixture: centers uniform in [0,1]^d, round-robin cluster
/// assignment, isotropic noise with standard deviation `spread`.
DatasetTable synth_dataset(const SynthSpec& spec);

enum class GeneratorKind {
  pca,
  random_linear,
  classical_mds,
  pca_jitter,
  spring_layout,
  shuffled_pca,
  nonlinear_squash,
};

std::string to_string(GeneratorKind kind);
std::optional<GeneratorKind> generator_from_string(const std::string& name);

/// A projection generator with uniform sampling ranges for its hyperparameters.
struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::pca;
  std::map<std::string, std::pair<double, double>> ranges;

  void validate() const;
};

/// Hyperparameter names and ranges each generator understands.
GeneratorSpec default_generator_spec(GeneratorKind kind);
std::vector<GeneratorSpec> default_generator_specs();

/// Runs one generator with fixed hyperparameters. Throws DataError when the
/// data is degenerate for this generator.
Eigen::Matrix<double, Eigen::Dynamic, 2> run_generator(GeneratorKind kind, const DatasetTable& data,
                                                       const std::map<std::string, double>& hyper,
                                                       std::uint64_t seed);

/// `count` projections; slot i draws its generator and hyperparameters from a
/// sub-seed derived from (seed, i), retrying up to 10 times on failure.
ProjectionSet generate_projections(const DatasetTable& data, Index count, const std::vector<GeneratorSpec>& specs,
                                   std::uint64_t seed, int threads = 1);

}  // namespace dreval
