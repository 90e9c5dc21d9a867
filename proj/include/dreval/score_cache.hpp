#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "dreval/types.hpp"

namespace dreval {

struct ScoreKey {
  std::string dataset_id;
  Index projection = 0;
  std::string metric_id;
  /// Content hash of the (dataset, projection) inputs; a stored score is only
  /// returned when the fingerprint matches, so regenerated identical
  /// projections hit and changed ones miss.
  std::string fingerprint;
};

/// 64-bit FNV-1a over dataset features, labels and projection coordinates, as hex.
std::string fingerprint(const DatasetTable& data, const Projection& projection);

/// On-disk score cache laid out as `<root>/<dataset_id>/<metric_id>.json`,
/// one record file per (dataset, metric) holding every projection's score.
///
/// Records are loaded lazily and written back on flush() (and destruction).
/// Concurrent get/put calls are serialized internally. Unreadable record files
/// are reported through the warning sink and treated as empty.
class ScoreCache {
 public:
  using WarningSink = std::function<void(const std::string&)>;

  explicit ScoreCache(std::filesystem::path root, WarningSink warn = {});
  ~ScoreCache();
  ScoreCache(const ScoreCache&) = delete;
  ScoreCache& operator=(const ScoreCache&) = delete;

  std::optional<double> get(const ScoreKey& key);
  void put(const ScoreKey& key, double value);
  void flush();

  const std::filesystem::path& root() const { return root_; }

 private:
  struct Entry {
    std::string fingerprint;
    double value = 0.0;
  };
  using Record = std::map<Index, Entry>;
  using RecordId = std::pair<std::string, std::string>;

  Record& record(const RecordId& id);
  std::filesystem::path record_path(const RecordId& id) const;

  std::filesystem::path root_;
  WarningSink warn_;
  std::mutex mutex_;
  std::map<RecordId, Record> records_;
  std::map<RecordId, bool> dirty_;
};

}  // namespace dreval
