#include "dreval/score_cache.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstring>

#include "dreval/io.hpp"

namespace dreval {

namespace {

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  template <typename T>
  void value(const T& v) {
    bytes(&v, sizeof v);
  }
  std::uint64_t digest() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace

std::string fingerprint(const DatasetTable& data, const Projection& projection) {
  Fnv1a h;
  h.value(data.n());
  h.value(data.d());
  h.bytes(data.points.data(), sizeof(double) * static_cast<std::size_t>(data.points.size()));
  h.bytes(data.labels.data(), sizeof(int) * data.labels.size());
  h.value(projection.coords.rows());
  h.bytes(projection.coords.data(), sizeof(double) * static_cast<std::size_t>(projection.coords.size()));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.digest()));
  return buf;
}

ScoreCache::ScoreCache(std::filesystem::path root, WarningSink warn) : root_(std::move(root)), warn_(std::move(warn)) {}

ScoreCache::~ScoreCache() {
  try {
    flush();
  } catch (const std::exception& e) {
    if (warn_) warn_(std::string("score cache flush failed: ") + e.what());
  }
}

std::filesystem::path ScoreCache::record_path(const RecordId& id) const {
  return root_ / id.first / (id.second + ".json");
}

ScoreCache::Record& ScoreCache::record(const RecordId& id) {
  auto it = records_.find(id);
  if (it != records_.end()) return it->second;

  Record rec;
  const auto path = record_path(id);
  if (std::filesystem::exists(path)) {
    try {
      const auto doc = nlohmann::json::parse(read_file(path));
      for (const auto& s : doc.at("scores"))
        rec[s.at("index").get<Index>()] = Entry{s.at("fingerprint").get<std::string>(), s.at("value").get<double>()};
    } catch (const std::exception& e) {
      rec.clear();
      if (warn_) warn_("ignoring corrupt cache file " + path.string() + ": " + e.what());
    }
  }
  return records_.emplace(id, std::move(rec)).first->second;
}

std::optional<double> ScoreCache::get(const ScoreKey& key) {
  std::lock_guard lock(mutex_);
  const auto& rec = record({key.dataset_id, key.metric_id});
  const auto it = rec.find(key.projection);
  if (it == rec.end() || it->second.fingerprint != key.fingerprint) return std::nullopt;
  return it->second.value;
}

void ScoreCache::put(const ScoreKey& key, double value) {
  std::lock_guard lock(mutex_);
  const RecordId id{key.dataset_id, key.metric_id};
  record(id)[key.projection] = Entry{key.fingerprint, value};
  dirty_[id] = true;
}

void ScoreCache::flush() {
  std::lock_guard lock(mutex_);
  for (auto& [id, dirty] : dirty_) {
    if (!dirty) continue;
    nlohmann::json doc;
    doc["dataset_id"] = id.first;
    doc["metric_id"] = id.second;
    doc["scores"] = nlohmann::json::array();
    for (const auto& [index, entry] : records_.at(id))
      doc["scores"].push_back({{"index", index}, {"fingerprint", entry.fingerprint}, {"value", entry.value}});
    write_file_atomic(record_path(id), doc.dump() + "\n");
    dirty = false;
  }
}

}  // namespace dreval
