#include "dreval/ensemble.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dreval/neighbors.hpp"
#include "dreval/parallel.hpp"

namespace dreval {

using Coords = Eigen::Matrix<double, Eigen::Dynamic, 2>;

DatasetTable synth_dataset(const SynthSpec& spec) {
  require(spec.clusters >= 1, "synth_dataset: need at least one cluster");
  require(spec.n >= 4 * spec.clusters, "synth_dataset: n must be >= 4 * clusters");
  require(spec.d >= 2, "synth_dataset: d must be >= 2");
  require(spec.spread > 0, "synth_dataset: spread must be positive");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, spec.spread);

  MatrixXd centers(spec.clusters, spec.d);
  for (Index c = 0; c < centers.rows(); ++c)
    for (Index j = 0; j < spec.d; ++j) centers(c, j) = unit(rng);

  DatasetTable out;
  out.id = spec.id;
  out.points.resize(spec.n, spec.d);
  out.labels.resize(static_cast<std::size_t>(spec.n));
  for (Index i = 0; i < spec.n; ++i) {
    const int c = static_cast<int>(i % spec.clusters);
    out.labels[static_cast<std::size_t>(i)] = c;
    for (Index j = 0; j < spec.d; ++j) out.points(i, j) = centers(c, j) + noise(rng);
  }
  return out;
}

std::string to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::pca: return "pca";
    case GeneratorKind::random_linear: return "random_linear";
    case GeneratorKind::classical_mds: return "classical_mds";
    case GeneratorKind::pca_jitter: return "pca_jitter";
    case GeneratorKind::spring_layout: return "spring_layout";
    case GeneratorKind::shuffled_pca: return "shuffled_pca";
    case GeneratorKind::nonlinear_squash: return "nonlinear_squash";
  }
  return "?";
}

std::optional<GeneratorKind> generator_from_string(const std::string& name) {
  for (auto k : {GeneratorKind::pca, GeneratorKind::random_linear, GeneratorKind::classical_mds,
                 GeneratorKind::pca_jitter, GeneratorKind::spring_layout, GeneratorKind::shuffled_pca,
                 GeneratorKind::nonlinear_squash})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

void GeneratorSpec::validate() const {
  const auto defaults = default_generator_spec(kind);
  for (const auto& [name, range] : ranges) {
    if (!defaults.ranges.count(name))
      throw InvalidArgument(to_string(kind) + ": unknown hyperparameter '" + name + "'");
    if (!(range.first <= range.second) || !std::isfinite(range.first) || !std::isfinite(range.second))
      throw InvalidArgument(to_string(kind) + ": empty range for '" + name + "'");
  }
  for (const auto& [name, range] : defaults.ranges)
    if (!ranges.count(name)) throw InvalidArgument(to_string(kind) + ": missing range for '" + name + "'");
}

GeneratorSpec default_generator_spec(GeneratorKind kind) {
  GeneratorSpec s{kind, {}};
  switch (kind) {
    case GeneratorKind::pca:
    case GeneratorKind::random_linear:
      break;
    case GeneratorKind::classical_mds:
      s.ranges["exponent"] = {0.5, 1.5};
      break;
    case GeneratorKind::pca_jitter:
      s.ranges["noise"] = {0.05, 1.0};
      break;
    case GeneratorKind::spring_layout:
      s.ranges["iterations"] = {10, 200};
      s.ranges["neighbors"] = {3, 15};
      break;
    case GeneratorKind::shuffled_pca:
      s.ranges["fraction"] = {0.05, 1.0};
      break;
    case GeneratorKind::nonlinear_squash:
      s.ranges["gain"] = {0.5, 5.0};
      break;
  }
  return s;
}

std::vector<GeneratorSpec> default_generator_specs() {
  std::vector<GeneratorSpec> specs;
  for (auto k : {GeneratorKind::pca, GeneratorKind::random_linear, GeneratorKind::classical_mds,
                 GeneratorKind::pca_jitter, GeneratorKind::spring_layout, GeneratorKind::shuffled_pca,
                 GeneratorKind::nonlinear_squash})
    specs.push_back(default_generator_spec(k));
  return specs;
}

namespace {

double hyper(const std::map<std::string, double>& h, const std::string& name) {
  const auto it = h.find(name);
  if (it == h.end()) throw InvalidArgument("missing hyperparameter '" + name + "'");
  return it->second;
}

bool integer_hyper(const std::string& name) { return name == "iterations" || name == "neighbors"; }

/// Largest two eigenpairs of a symmetric matrix, descending, with a
/// deterministic sign (largest-magnitude entry positive).
void top_two(const MatrixXd& sym, Eigen::Vector2d& values, Eigen::Matrix<double, Eigen::Dynamic, 2>& vectors) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw DataError("eigendecomposition failed");
  const Index m = sym.rows();
  vectors.resize(m, 2);
  for (int c = 0; c < 2; ++c) {
    values(c) = es.eigenvalues()(m - 1 - c);
    Eigen::VectorXd v = es.eigenvectors().col(m - 1 - c);
    Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    vectors.col(c) = v;
  }
}

/// Data-derived inputs shared by all slots of one ensemble.
struct Prepared {
  const DatasetTable* data = nullptr;
  MatrixXd centered;
  std::optional<Coords> pca;
  std::string pca_error;
  std::optional<DistanceMatrix<double>> dist;
  std::optional<RankMatrix> rank;

  Prepared(const DatasetTable& d, bool need_distances) : data(&d) {
    centered = d.points.rowwise() - d.points.colwise().mean();
    try {
      const MatrixXd cov = centered.transpose() * centered / double(d.n() - 1);
      Eigen::Vector2d values;
      Eigen::Matrix<double, Eigen::Dynamic, 2> vectors;
      top_two(cov, values, vectors);
      if (!(values(0) > 0) || !(values(1) > 1e-12 * values(0)))
        throw DataError("pca: fewer than two directions with non-zero variance");
      pca = centered * vectors;
    } catch (const DataError& e) {
      pca_error = e.what();
    }
    if (need_distances) {
      dist = pairwise_distances(d.points);
      rank = rank_matrix(*dist);
    }
  }

  const Coords& pca_coords() const {
    if (!pca) throw DataError(pca_error);
    return *pca;
  }
  const DistanceMatrix<double>& distances() {
    if (!dist) {
      dist = pairwise_distances(data->points);
      rank = rank_matrix(*dist);
    }
    return *dist;
  }
};

void require_spread(const Coords& c, const char* who) {
  if (!c.allFinite()) throw DataError(std::string(who) + ": non-finite output");
  const Coords centered = c.rowwise() - c.colwise().mean();
  if (!(centered.squaredNorm() > 0)) throw DataError(std::string(who) + ": collapsed output");
}

double rms(const Coords& c) {
  const Coords centered = c.rowwise() - c.colwise().mean();
  return std::sqrt(centered.squaredNorm() / double(c.rows()));
}

// One iteration budget of Fruchterman-Reingold style forces: attraction
// d^2/K along data-space k-NN edges, repulsion K^2/d between all pairs.
Coords spring_layout(const RankMatrix& rank, int iterations, int neighbors, std::mt19937_64& rng) {
  const Index n = rank.size();
  neighbors = std::clamp<int>(neighbors, 1, static_cast<int>(n - 2));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Coords pos(n, 2);
  for (Index i = 0; i < n; ++i) pos.row(i) << unit(rng), unit(rng);

  const double k_len = 1.0 / std::sqrt(double(n));
  Coords disp(n, 2);
  for (int it = 0; it < iterations; ++it) {
    disp.setZero();
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        Eigen::RowVector2d delta = pos.row(i) - pos.row(j);
        const double dist = std::max(delta.norm(), 1e-9);
        const Eigen::RowVector2d f = delta / dist * (k_len * k_len / dist);
        disp.row(i) += f;
        disp.row(j) -= f;
      }
    }
    for (Index i = 0; i < n; ++i) {
      for (int r = 0; r < neighbors; ++r) {
        const Index j = rank.order(i, r);
        Eigen::RowVector2d delta = pos.row(i) - pos.row(j);
        const double dist = std::max(delta.norm(), 1e-9);
        const Eigen::RowVector2d f = delta / dist * (dist * dist / k_len);
        disp.row(i) -= f;
        disp.row(j) += f;
      }
    }
    const double temperature = 0.1 * (1.0 - double(it) / double(iterations));
    for (Index i = 0; i < n; ++i) {
      const double len = disp.row(i).norm();
      if (len > 0) pos.row(i) += disp.row(i) / len * std::min(len, temperature);
    }
  }
  return pos;
}

Coords run_prepared(GeneratorKind kind, Prepared& prep, const std::map<std::string, double>& h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const DatasetTable& data = *prep.data;
  const Index n = data.n();
  Coords out;
  switch (kind) {
    case GeneratorKind::pca:
      out = prep.pca_coords();
      break;
    case GeneratorKind::random_linear: {
      std::normal_distribution<double> normal(0.0, 1.0);
      Eigen::Matrix<double, Eigen::Dynamic, 2> w(data.d(), 2);
      for (Index r = 0; r < w.rows(); ++r) w.row(r) << normal(rng), normal(rng);
      out = prep.centered * w;
      break;
    }
    case GeneratorKind::classical_mds: {
      const double exponent = hyper(h, "exponent");
      const MatrixXd sq = prep.distances().values.array().pow(2.0 * exponent).matrix();
      // B = -1/2 J D^2 J with J the centering matrix.
      const MatrixXd rows_centered = sq.rowwise() - sq.colwise().mean();
      const MatrixXd b = -0.5 * (rows_centered.colwise() - rows_centered.rowwise().mean());
      Eigen::Vector2d values;
      Eigen::Matrix<double, Eigen::Dynamic, 2> vectors;
      top_two(0.5 * (b + b.transpose()), values, vectors);
      if (!(values(1) > 0)) throw DataError("classical_mds: fewer than two positive eigenvalues");
      out = vectors * values.cwiseSqrt().asDiagonal();
      break;
    }
    case GeneratorKind::pca_jitter: {
      out = prep.pca_coords();
      std::normal_distribution<double> normal(0.0, hyper(h, "noise") * rms(out));
      for (Index i = 0; i < n; ++i) out.row(i) += Eigen::RowVector2d(normal(rng), normal(rng));
      break;
    }
    case GeneratorKind::spring_layout: {
      prep.distances();
      out = spring_layout(*prep.rank, static_cast<int>(std::lround(hyper(h, "iterations"))),
                          static_cast<int>(std::lround(hyper(h, "neighbors"))), rng);
      break;
    }
    case GeneratorKind::shuffled_pca: {
      out = prep.pca_coords();
      std::vector<Index> rows(static_cast<std::size_t>(n));
      std::iota(rows.begin(), rows.end(), Index{0});
      std::shuffle(rows.begin(), rows.end(), rng);
      const auto moved = static_cast<std::size_t>(std::lround(hyper(h, "fraction") * double(n)));
      std::vector<Index> chosen(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(moved));
      std::vector<Index> targets = chosen;
      std::shuffle(targets.begin(), targets.end(), rng);
      const Coords source = out;
      for (std::size_t i = 0; i < chosen.size(); ++i) out.row(targets[i]) = source.row(chosen[i]);
      break;
    }
    case GeneratorKind::nonlinear_squash: {
      out = prep.pca_coords();
      const double scale = rms(out);
      const double gain = hyper(h, "gain");
      out = (out.array() * (gain / scale)).tanh().matrix();
      break;
    }
  }
  require_spread(out, to_string(kind).c_str());
  return out;
}

bool needs_distances(const std::vector<GeneratorSpec>& specs) {
  return std::any_of(specs.begin(), specs.end(), [](const GeneratorSpec& s) {
    return s.kind == GeneratorKind::classical_mds || s.kind == GeneratorKind::spring_layout;
  });
}

}  // namespace

Coords run_generator(GeneratorKind kind, const DatasetTable& data, const std::map<std::string, double>& hyper,
                     std::uint64_t seed) {
  Prepared prep(data, kind == GeneratorKind::classical_mds || kind == GeneratorKind::spring_layout);
  return run_prepared(kind, prep, hyper, seed);
}

ProjectionSet generate_projections(const DatasetTable& data, Index count, const std::vector<GeneratorSpec>& specs,
                                   std::uint64_t seed, int threads) {
  require(count >= 2, "generate_projections: count must be >= 2");
  require(!specs.empty(), "generate_projections: no generator specs");
  for (const auto& s : specs) s.validate();
  data.validate();

  Prepared prep(data, needs_distances(specs));
  constexpr int kMaxAttempts = 10;

  ProjectionSet set;
  set.dataset_id = data.id;
  set.projections.resize(static_cast<std::size_t>(count));
  parallel_for(static_cast<std::size_t>(count), threads, [&](std::size_t slot) {
    std::string last_error;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      std::mt19937_64 rng(derive_seed(seed, slot, static_cast<std::uint64_t>(attempt)));
      const auto& spec = specs[std::uniform_int_distribution<std::size_t>(0, specs.size() - 1)(rng)];
      std::map<std::string, double> h;
      for (const auto& [name, range] : spec.ranges) {
        double v = std::uniform_real_distribution<double>(range.first, range.second)(rng);
        if (range.first == range.second) v = range.first;
        h[name] = integer_hyper(name) ? std::round(v) : v;
      }
      const std::uint64_t gen_seed = rng();
      try {
        Projection& p = set.projections[slot];
        p.coords = run_prepared(spec.kind, prep, h, gen_seed);
        p.dataset_id = data.id;
        p.index = static_cast<Index>(slot);
        p.provenance = {to_string(spec.kind), h, gen_seed};
        return;
      } catch (const DataError& e) {
        last_error = e.what();
      }
    }
    throw DataError("generate_projections: slot " + std::to_string(slot) + " failed " +
                    std::to_string(kMaxAttempts) + " times; last error: " + last_error);
  });
  return set;
}

}  // namespace dreval
