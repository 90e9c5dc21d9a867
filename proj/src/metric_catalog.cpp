#include "dreval/metric_catalog.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>

namespace dreval {

namespace {

struct FamilyRow {
  MetricFamily family;
  const char* name;
  Category category;
  Orientation orientation;
  enum Param { none, k, sigma } param;
};

constexpr FamilyRow kFamilies[] = {
    {MetricFamily::trustworthiness_continuity, "trustworthiness_continuity", Category::local,
     Orientation::higher_better, FamilyRow::k},
    {MetricFamily::mrre, "mrre", Category::local, Orientation::lower_better, FamilyRow::k},
    {MetricFamily::neighbor_dissimilarity, "neighbor_dissimilarity", Category::local, Orientation::lower_better,
     FamilyRow::k},
    {MetricFamily::stress, "stress", Category::global, Orientation::lower_better, FamilyRow::none},
    {MetricFamily::kl_divergence, "kl_divergence", Category::global, Orientation::lower_better, FamilyRow::sigma},
    {MetricFamily::distance_consistency, "distance_consistency", Category::cluster_level, Orientation::higher_better,
     FamilyRow::none},
    {MetricFamily::silhouette, "silhouette", Category::cluster_level, Orientation::higher_better, FamilyRow::none},
    {MetricFamily::label_trustworthiness, "label_trustworthiness", Category::cluster_level,
     Orientation::higher_better, FamilyRow::k},
};

const FamilyRow& row(MetricFamily f) {
  for (const auto& r : kFamilies)
    if (r.family == f) return r;
  throw InvalidArgument("unknown metric family");
}

std::string format_sigma(double sigma) {
  // Shortest representation that parses back to the same double.
  char buf[32];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, sigma);
    if (std::strtod(buf, nullptr) == sigma) break;
  }
  return buf;
}

}  // namespace

std::string to_string(MetricFamily family) { return row(family).name; }

std::optional<MetricFamily> family_from_string(const std::string& name) {
  for (const auto& r : kFamilies)
    if (name == r.name) return r.family;
  return std::nullopt;
}

Category family_category(MetricFamily family) { return row(family).category; }
Orientation family_orientation(MetricFamily family) { return row(family).orientation; }
bool family_uses_k(MetricFamily family) { return row(family).param == FamilyRow::k; }
bool family_uses_sigma(MetricFamily family) { return row(family).param == FamilyRow::sigma; }

bool family_uses_labels(MetricFamily family) {
  return family == MetricFamily::distance_consistency || family == MetricFamily::silhouette ||
         family == MetricFamily::label_trustworthiness;
}

MetricInstance::MetricInstance(MetricFamily family, int k, double sigma) : family_(family), k_(k), sigma_(sigma) {
  id_ = to_string(family);
  if (family_uses_k(family)) id_ += "[k=" + std::to_string(k) + "]";
  if (family_uses_sigma(family)) id_ += "[sigma=" + format_sigma(sigma) + "]";
}

MetricInstance MetricInstance::with_k(MetricFamily family, int k) {
  require(family_uses_k(family), to_string(family) + " does not take k");
  require(k >= 1, to_string(family) + ": k must be positive");
  return MetricInstance(family, k, 0.0);
}

MetricInstance MetricInstance::with_sigma(MetricFamily family, double sigma) {
  require(family_uses_sigma(family), to_string(family) + " does not take sigma");
  require(sigma > 0 && std::isfinite(sigma), to_string(family) + ": sigma must be positive");
  return MetricInstance(family, 0, sigma);
}

MetricInstance MetricInstance::plain(MetricFamily family) {
  require(!family_uses_k(family) && !family_uses_sigma(family), to_string(family) + " requires a parameter");
  return MetricInstance(family, 0, 0.0);
}

MetricInstance MetricInstance::parse(const std::string& id) {
  const auto open = id.find('[');
  const std::string name = id.substr(0, open);
  const auto family = family_from_string(name);
  if (!family) throw InvalidArgument("unknown metric family '" + name + "' in '" + id + "'");
  if (open == std::string::npos) return plain(*family);

  if (id.back() != ']') throw InvalidArgument("malformed metric id '" + id + "'");
  const std::string param = id.substr(open + 1, id.size() - open - 2);
  const auto eq = param.find('=');
  if (eq == std::string::npos) throw InvalidArgument("malformed metric id '" + id + "'");
  const std::string key = param.substr(0, eq);
  const std::string value = param.substr(eq + 1);
  if (key == "k") {
    int k = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), k);
    if (ec != std::errc() || ptr != value.data() + value.size())
      throw InvalidArgument("malformed k in '" + id + "'");
    return with_k(*family, k);
  }
  if (key == "sigma") {
    double sigma = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), sigma);
    if (ec != std::errc() || ptr != value.data() + value.size())
      throw InvalidArgument("malformed sigma in '" + id + "'");
    return with_sigma(*family, sigma);
  }
  throw InvalidArgument("unknown parameter '" + key + "' in '" + id + "'");
}

void MetricInstance::check_applicable(Index n) const {
  if (family_uses_k(family_)) {
    require(k_ <= n - 2, id_ + ": k exceeds n - 2 for n=" + std::to_string(n));
    if (family_ == MetricFamily::trustworthiness_continuity)
      require(2 * n - 3 * k_ - 1 > 0, id_ + ": k too large for n=" + std::to_string(n));
  }
}

std::vector<MetricInstance> default_metric_grid() {
  std::vector<MetricInstance> grid;
  for (auto family : {MetricFamily::trustworthiness_continuity, MetricFamily::mrre,
                      MetricFamily::neighbor_dissimilarity})
    for (int k : {5, 10, 25}) grid.push_back(MetricInstance::with_k(family, k));
  grid.push_back(MetricInstance::plain(MetricFamily::stress));
  for (double sigma : {0.1, 1.0}) grid.push_back(MetricInstance::with_sigma(MetricFamily::kl_divergence, sigma));
  grid.push_back(MetricInstance::plain(MetricFamily::distance_consistency));
  grid.push_back(MetricInstance::plain(MetricFamily::silhouette));
  return grid;
}

std::string catalog_json(const std::vector<MetricInstance>& catalog) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& m : catalog) {
    nlohmann::json params = nlohmann::json::object();
    if (family_uses_k(m.family())) params["k"] = m.k();
    if (family_uses_sigma(m.family())) params["sigma"] = m.sigma();
    out.push_back({{"id", m.id()},
                   {"family", to_string(m.family())},
                   {"params", params},
                   {"category", to_string(m.category())},
                   {"orientation", to_string(m.orientation())}});
  }
  return out.dump(2) + "\n";
}

}  // namespace dreval
