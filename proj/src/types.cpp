#include "dreval/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace dreval {

int DatasetTable::class_count() const {
  return static_cast<int>(std::set<int>(labels.begin(), labels.end()).size());
}

void DatasetTable::validate() const {
  const std::string who = "dataset '" + id + "': ";
  if (n() < 4) throw DataError(who + "need at least 4 points, found " + std::to_string(n()));
  if (d() < 2) throw DataError(who + "need at least 2 features, found " + std::to_string(d()));
  if (static_cast<Index>(labels.size()) != n())
    throw DataError(who + "label count " + std::to_string(labels.size()) + " != point count " + std::to_string(n()));
  if (std::any_of(labels.begin(), labels.end(), [](int l) { return l < 0; }))
    throw DataError(who + "labels must be non-negative");
  for (Index r = 0; r < n(); ++r)
    for (Index c = 0; c < d(); ++c)
      if (!std::isfinite(points(r, c)))
        throw DataError(who + "non-finite feature at row " + std::to_string(r) + ", column " + std::to_string(c));
}

void ProjectionSet::validate(Index expected_rows) const {
  for (std::size_t i = 0; i < projections.size(); ++i) {
    const auto& p = projections[i];
    const std::string who = "projection " + std::to_string(p.index) + " of '" + dataset_id + "': ";
    if (p.index != static_cast<Index>(i)) throw DataError(who + "non-contiguous index, expected " + std::to_string(i));
    if (expected_rows > 0 && p.coords.rows() != expected_rows)
      throw DataError(who + "has " + std::to_string(p.coords.rows()) + " rows, dataset has " +
                      std::to_string(expected_rows));
    if (!p.coords.allFinite()) throw DataError(who + "non-finite coordinate");
  }
}

std::string to_string(Category c) {
  switch (c) {
    case Category::local: return "local";
    case Category::cluster_level: return "cluster_level";
    case Category::global: return "global";
  }
  return "?";
}

std::string to_string(Orientation o) {
  return o == Orientation::higher_better ? "higher_better" : "lower_better";
}

Category category_from_string(const std::string& s) {
  if (s == "local") return Category::local;
  if (s == "cluster_level") return Category::cluster_level;
  if (s == "global") return Category::global;
  throw InvalidArgument("unknown category '" + s + "'");
}

Orientation orientation_from_string(const std::string& s) {
  if (s == "higher_better") return Orientation::higher_better;
  if (s == "lower_better") return Orientation::lower_better;
  throw InvalidArgument("unknown orientation '" + s + "'");
}

std::size_t ScoreTensor::metric_index(const std::string& id) const {
  for (std::size_t i = 0; i < metrics.size(); ++i)
    if (metrics[i].id == id) return i;
  throw InvalidArgument("unknown metric '" + id + "'");
}

std::vector<std::string> ScoreTensor::metric_ids() const {
  std::vector<std::string> ids;
  ids.reserve(metrics.size());
  for (const auto& m : metrics) ids.push_back(m.id);
  return ids;
}

void ScoreTensor::validate() const {
  if (scores.size() != datasets.size()) throw DataError("score tensor: dataset count mismatch");
  for (std::size_t d = 0; d < scores.size(); ++d) {
    if (scores[d].cols() != static_cast<Index>(metrics.size()))
      throw DataError("score tensor: dataset '" + datasets[d] + "' has wrong metric count");
    for (Index p = 0; p < scores[d].rows(); ++p)
      for (Index m = 0; m < scores[d].cols(); ++m)
        if (!std::isfinite(scores[d](p, m)))
          throw DataError("score tensor: non-finite score at (" + datasets[d] + ", " + std::to_string(p) + ", " +
                          metrics[static_cast<std::size_t>(m)].id + ")");
  }
}

}  // namespace dreval
