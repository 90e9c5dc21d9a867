#include "dreval/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "dreval/metric_catalog.hpp"

namespace dreval {

using json = nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(first, last - first + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    lines.push_back(line);
  }
  return lines;
}

bool parse_double(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool parse_int(const std::string& cell, long long& out) {
  if (cell.empty()) return false;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

std::string location(const fs::path& path, std::size_t line, const std::string& column) {
  return path.filename().string() + ": line " + std::to_string(line) + ", column '" + column + "'";
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw DataError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DatasetTable load_dataset(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw DataError(path.filename().string() + ": empty file");
  const auto header = split_csv_line(lines.front());
  const auto label_it = std::find(header.begin(), header.end(), "label");
  if (label_it == header.end()) throw DataError(path.filename().string() + ": missing 'label' column");
  const std::size_t label_col = static_cast<std::size_t>(label_it - header.begin());
  const std::size_t width = header.size();
  const Index n = static_cast<Index>(lines.size() - 1);
  const Index d = static_cast<Index>(width - 1);
  if (n < 4) throw DataError(path.filename().string() + ": need at least 4 rows, found " + std::to_string(n));
  if (d < 2) throw DataError(path.filename().string() + ": need at least 2 feature columns");

  DatasetTable out;
  out.id = path.stem().string();
  out.points.resize(n, d);
  out.labels.resize(static_cast<std::size_t>(n));
  for (Index r = 0; r < n; ++r) {
    const std::size_t line_no = static_cast<std::size_t>(r) + 2;
    const auto cells = split_csv_line(lines[static_cast<std::size_t>(r) + 1]);
    if (cells.size() != width)
      throw DataError(path.filename().string() + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " cells, expected " + std::to_string(width));
    Index f = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (c == label_col) {
        long long label = 0;
        if (!parse_int(cells[c], label) || label < 0 || label > 1'000'000'000)
          throw DataError(location(path, line_no, header[c]) + ": label '" + cells[c] +
                          "' is not a non-negative integer");
        out.labels[static_cast<std::size_t>(r)] = static_cast<int>(label);
        continue;
      }
      double v = 0.0;
      if (!parse_double(cells[c], v))
        throw DataError(location(path, line_no, header[c]) + ": non-numeric value '" + cells[c] + "'");
      if (!std::isfinite(v))
        throw DataError(location(path, line_no, header[c]) + ": non-finite value '" + cells[c] + "'");
      out.points(r, f++) = v;
    }
  }
  out.validate();
  return out;
}

void write_dataset(const DatasetTable& data, const fs::path& path) {
  std::string s;
  for (Index c = 0; c < data.d(); ++c) s += "f" + std::to_string(c) + ",";
  s += "label\n";
  for (Index r = 0; r < data.n(); ++r) {
    for (Index c = 0; c < data.d(); ++c) s += format_double(data.points(r, c)) + ",";
    s += std::to_string(data.labels[static_cast<std::size_t>(r)]) + "\n";
  }
  write_file_atomic(path, s);
}

namespace {

Eigen::Matrix<double, Eigen::Dynamic, 2> load_coords(const fs::path& path, Index index) {
  auto lines = read_lines(path);
  const std::string name = "projection " + std::to_string(index);
  std::vector<std::array<double, 2>> rows;
  for (std::size_t l = 0; l < lines.size(); ++l) {
    const auto cells = split_csv_line(lines[l]);
    std::array<double, 2> xy{};
    const bool numeric = cells.size() == 2 && parse_double(cells[0], xy[0]) && parse_double(cells[1], xy[1]);
    if (!numeric) {
      if (l == 0) continue;  // header line
      throw DataError(name + ": line " + std::to_string(l + 1) + " is not two numeric columns");
    }
    if (!std::isfinite(xy[0]) || !std::isfinite(xy[1]))
      throw DataError(name + ": non-finite coordinate on line " + std::to_string(l + 1));
    rows.push_back(xy);
  }
  Eigen::Matrix<double, Eigen::Dynamic, 2> coords(static_cast<Index>(rows.size()), 2);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    coords(static_cast<Index>(r), 0) = rows[r][0];
    coords(static_cast<Index>(r), 1) = rows[r][1];
  }
  return coords;
}

}  // namespace

ProjectionSet load_projection_set(const fs::path& dir, Index expected_rows) {
  if (!fs::is_directory(dir)) throw DataError("projection directory not found: " + dir.string());
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw DataError(dir.string() + ": missing manifest.json");

  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }

  static const std::regex proj_re(R"(proj_(\d+)\.csv)");
  std::set<Index> indices;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, proj_re)) indices.insert(std::stoll(m[1].str()));
  }
  if (indices.empty()) throw DataError(dir.string() + ": no proj_<index>.csv files");
  Index expect = 0;
  for (Index idx : indices) {
    if (idx != expect)
      throw DataError(dir.string() + ": non-contiguous projection indices (missing " + std::to_string(expect) + ")");
    ++expect;
  }

  std::map<Index, Provenance> provenance;
  try {
    for (const auto& p : manifest.at("projections")) {
      Provenance prov;
      prov.generator = p.at("generator").get<std::string>();
      for (const auto& [k, v] : p.at("hyperparameters").items()) prov.hyperparameters[k] = v.get<double>();
      prov.seed = p.at("seed").get<std::uint64_t>();
      provenance[p.at("index").get<Index>()] = prov;
    }
  } catch (const json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }

  ProjectionSet set;
  set.dataset_id = manifest.value("dataset_id", dir.filename().string());
  for (Index idx : indices) {
    const auto prov = provenance.find(idx);
    if (prov == provenance.end())
      throw DataError(dir.string() + ": manifest has no entry for projection " + std::to_string(idx));
    Projection p;
    p.dataset_id = set.dataset_id;
    p.index = idx;
    p.coords = load_coords(dir / ("proj_" + std::to_string(idx) + ".csv"), idx);
    p.provenance = prov->second;
    set.projections.push_back(std::move(p));
  }
  set.validate(expected_rows);
  return set;
}

void write_projection_set(const ProjectionSet& set, const fs::path& dir) {
  fs::create_directories(dir);
  json manifest;
  manifest["dataset_id"] = set.dataset_id;
  manifest["projections"] = json::array();
  for (const auto& p : set.projections) {
    std::string s = "x,y\n";
    for (Index r = 0; r < p.coords.rows(); ++r)
      s += format_double(p.coords(r, 0)) + "," + format_double(p.coords(r, 1)) + "\n";
    write_file_atomic(dir / ("proj_" + std::to_string(p.index) + ".csv"), s);
    json hyper = json::object();
    for (const auto& [k, v] : p.provenance.hyperparameters) hyper[k] = v;
    manifest["projections"].push_back(
        {{"index", p.index}, {"generator", p.provenance.generator}, {"hyperparameters", hyper},
         {"seed", p.provenance.seed}});
  }
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

void write_scores_csv(const ScoreTensor& tensor, const fs::path& path) {
  std::string s = "dataset,projection,metric,value\n";
  for (std::size_t d = 0; d < tensor.dataset_count(); ++d)
    for (Index p = 0; p < tensor.projection_count(d); ++p)
      for (std::size_t m = 0; m < tensor.metric_count(); ++m)
        s += tensor.datasets[d] + "," + std::to_string(p) + "," + tensor.metrics[m].id + "," +
             format_double(tensor.at(d, p, m)) + "\n";
  write_file_atomic(path, s);
}

ScoreTensor load_scores_csv(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw DataError(path.string() + ": empty scores file");
  if (split_csv_line(lines[0]) != std::vector<std::string>{"dataset", "projection", "metric", "value"})
    throw DataError(path.string() + ": expected header dataset,projection,metric,value");

  ScoreTensor t;
  std::map<std::string, std::size_t> ds_index, metric_index;
  std::vector<std::map<std::pair<Index, std::size_t>, double>> cells;
  std::vector<Index> proj_count;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    const auto c = split_csv_line(lines[l]);
    long long proj = 0;
    double value = 0.0;
    if (c.size() != 4 || !parse_int(c[1], proj) || proj < 0 || !parse_double(c[3], value))
      throw DataError(path.string() + ": malformed line " + std::to_string(l + 1));
    auto [dit, dnew] = ds_index.try_emplace(c[0], t.datasets.size());
    if (dnew) {
      t.datasets.push_back(c[0]);
      cells.emplace_back();
      proj_count.push_back(0);
    }
    auto [mit, mnew] = metric_index.try_emplace(c[2], t.metrics.size());
    if (mnew) {
      try {
        t.metrics.push_back(MetricInstance::parse(c[2]).info());
      } catch (const InvalidArgument& e) {
        throw DataError(path.string() + ": line " + std::to_string(l + 1) + ": " + e.what());
      }
    }
    cells[dit->second][{proj, mit->second}] = value;
    proj_count[dit->second] = std::max(proj_count[dit->second], static_cast<Index>(proj) + 1);
  }
  for (std::size_t d = 0; d < t.datasets.size(); ++d) {
    MatrixXd m(proj_count[d], static_cast<Index>(t.metrics.size()));
    for (Index p = 0; p < m.rows(); ++p)
      for (std::size_t k = 0; k < t.metrics.size(); ++k) {
        const auto it = cells[d].find({p, k});
        if (it == cells[d].end())
          throw DataError(path.string() + ": missing score for (" + t.datasets[d] + ", " + std::to_string(p) + ", " +
                          t.metrics[k].id + ")");
        m(p, static_cast<Index>(k)) = it->second;
      }
    t.scores.push_back(std::move(m));
  }
  t.validate();
  return t;
}

}  // namespace dreval
