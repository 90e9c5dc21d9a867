#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "dreval/types.hpp"

namespace dreval {

namespace fs = std::filesystem;

/// Shortest decimal text at 17 significant digits; round-trips exactly.
std::string format_double(double value);

/// Writes through a sibling temp file and renames into place.
void write_file_atomic(const fs::path& path, std::string_view contents);

std::string read_file(const fs::path& path);

/// CSV with a header row, one `label` column and numeric feature columns.
/// The dataset id is the file stem.
DatasetTable load_dataset(const fs::path& path);
void write_dataset(const DatasetTable& data, const fs::path& path);

/// Directory of `proj_<index>.csv` files plus `manifest.json`.
/// When `expected_rows` is positive every projection must have that many rows.
ProjectionSet load_projection_set(const fs::path& dir, Index expected_rows = 0);
void write_projection_set(const ProjectionSet& set, const fs::path& dir);

/// Long format: dataset,projection,metric,value.
void write_scores_csv(const ScoreTensor& tensor, const fs::path& path);
/// Metric categories and orientations are recovered from canonical metric ids.
ScoreTensor load_scores_csv(const fs::path& path);

}  // namespace dreval
