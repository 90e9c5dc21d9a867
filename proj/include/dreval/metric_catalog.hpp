#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dreval/types.hpp"

namespace dreval {

enum class MetricFamily {
  trustworthiness_continuity,
  mrre,
  neighbor_dissimilarity,
  stress,
  kl_divergence,
  distance_consistency,
  silhouette,
  label_trustworthiness,
};

std::string to_string(MetricFamily family);
std::optional<MetricFamily> family_from_string(const std::string& name);
Category family_category(MetricFamily family);
Orientation family_orientation(MetricFamily family);
bool family_uses_k(MetricFamily family);
bool family_uses_sigma(MetricFamily family);
bool family_uses_labels(MetricFamily family);

/// A metric family bound to its parameter. Canonical id: `family[k=10]`,
/// `family[sigma=0.1]`, or bare `family` for parameterless families.
class MetricInstance {
 public:
  static MetricInstance with_k(MetricFamily family, int k);
  static MetricInstance with_sigma(MetricFamily family, double sigma);
  static MetricInstance plain(MetricFamily family);
  /// Throws InvalidArgument on unknown families or missing/extra parameters.
  static MetricInstance parse(const std::string& id);

  MetricFamily family() const { return family_; }
  int k() const { return k_; }
  double sigma() const { return sigma_; }
  Category category() const { return family_category(family_); }
  Orientation orientation() const { return family_orientation(family_); }
  const std::string& id() const { return id_; }
  MetricInfo info() const { return {id_, category(), orientation()}; }

  /// Throws InvalidArgument when the parameter is unusable for n points.
  void check_applicable(Index n) const;

 private:
  MetricInstance(MetricFamily family, int k, double sigma);

  MetricFamily family_;
  int k_ = 0;
  double sigma_ = 0.0;
  std::string id_;
};

/// T&C, MRRE, ND at k in {5, 10, 25}; KL at sigma in {0.1, 1.0};
/// stress, distance consistency and silhouette once. 14 instances.
std::vector<MetricInstance> default_metric_grid();

/// JSON array of {id, family, params, category, orientation}.
std::string catalog_json(const std::vector<MetricInstance>& catalog);

}  // namespace dreval
