#include "dreval/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dreval/parallel.hpp"
#include "dreval/ranking.hpp"

namespace dreval {

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::random: return "random";
    case StrategyKind::class_based: return "class_based";
    case StrategyKind::cluster_based: return "cluster_based";
  }
  return "?";
}

StrategyKind strategy_from_string(const std::string& name) {
  for (auto k : {StrategyKind::random, StrategyKind::class_based, StrategyKind::cluster_based})
    if (to_string(k) == name) return k;
  throw InvalidArgument("unknown strategy '" + name + "'");
}

std::string to_string(Aggregation a) {
  return a == Aggregation::mean_rank ? "mean_rank" : "mean_normalized_score";
}

Aggregation aggregation_from_string(const std::string& name) {
  if (name == "mean_rank") return Aggregation::mean_rank;
  if (name == "mean_normalized_score") return Aggregation::mean_normalized_score;
  throw InvalidArgument("unknown aggregation '" + name + "'");
}

namespace {

/// k distinct draws from [0, n), ascending.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

constexpr Category kCategories[] = {Category::local, Category::cluster_level, Category::global};

}  // namespace

std::vector<int> class_slot_counts(int k, const std::vector<int>& capacities, std::mt19937_64& rng) {
  require(k >= 0, "class_slot_counts: negative k");
  const int total = std::accumulate(capacities.begin(), capacities.end(), 0);
  if (k > total)
    throw InvalidArgument("class_based: category exhausted (" + std::to_string(k) + " slots, " +
                          std::to_string(total) + " metrics)");
  std::vector<int> counts(capacities.size(), 0);
  int remaining = k;
  while (remaining > 0) {
    std::vector<std::size_t> open;
    for (std::size_t c = 0; c < capacities.size(); ++c)
      if (counts[c] < capacities[c]) open.push_back(c);
    const int width = static_cast<int>(open.size());
    if (remaining < width) {
      for (std::size_t i : sample_without_replacement(open.size(), static_cast<std::size_t>(remaining), rng))
        ++counts[open[i]];
      break;
    }
    const int share = remaining / width;
    for (std::size_t c : open) {
      const int add = std::min(share, capacities[c] - counts[c]);
      counts[c] += add;
      remaining -= add;
    }
  }
  return counts;
}

std::vector<std::size_t> draw_metric_set(StrategyKind kind, int k, std::span<const MetricInfo> catalog,
                                         const MetricClustering* clustering, std::mt19937_64& rng) {
  require(k >= 1, "draw_metric_set: k must be >= 1");
  require(static_cast<std::size_t>(k) <= catalog.size(), "draw_metric_set: k exceeds catalog size");

  switch (kind) {
    case StrategyKind::random:
      return sample_without_replacement(catalog.size(), static_cast<std::size_t>(k), rng);

    case StrategyKind::class_based: {
      std::vector<std::vector<std::size_t>> by_category(3);
      for (std::size_t i = 0; i < catalog.size(); ++i)
        by_category[static_cast<std::size_t>(catalog[i].category)].push_back(i);
      std::vector<int> capacities;
      for (const auto& members : by_category) {
        require(!members.empty(), "class_based: catalog must contain all three categories");
        capacities.push_back(static_cast<int>(members.size()));
      }
      const auto counts = class_slot_counts(k, capacities, rng);
      std::vector<std::size_t> set;
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i : sample_without_replacement(by_category[c].size(), static_cast<std::size_t>(counts[c]), rng))
          set.push_back(by_category[c][i]);
      std::sort(set.begin(), set.end());
      return set;
    }

    case StrategyKind::cluster_based: {
      require(clustering != nullptr, "cluster_based: clustering required");
      require(clustering->effective_count() == static_cast<std::size_t>(k),
              "cluster_based: clustering has " + std::to_string(clustering->effective_count()) +
                  " clusters, expected " + std::to_string(k));
      std::vector<std::size_t> set;
      for (const auto& cluster : clustering->clusters) {
        std::uniform_int_distribution<std::size_t> pick(0, cluster.size() - 1);
        const std::string& id = clustering->metric_ids[cluster[pick(rng)]];
        const auto it = std::find_if(catalog.begin(), catalog.end(), [&](const MetricInfo& m) { return m.id == id; });
        require(it != catalog.end(), "cluster_based: clustered metric '" + id + "' missing from catalog");
        set.push_back(static_cast<std::size_t>(it - catalog.begin()));
      }
      std::sort(set.begin(), set.end());
      return set;
    }
  }
  throw InvalidArgument("unknown strategy");
}

std::vector<std::size_t> draw_metric_set(const SelectionStrategy& strategy, std::span<const MetricInfo> catalog,
                                         const MetricClustering* clustering) {
  std::mt19937_64 rng(strategy.seed);
  return draw_metric_set(strategy.kind, strategy.k, catalog, clustering, rng);
}

QualityRanking aggregate_ranking(const ScoreTensor& tensor, std::size_t dataset, std::span<const std::size_t> set,
                                 Aggregation aggregation) {
  require(!set.empty(), "aggregate_ranking: empty metric set");
  const MatrixXd& scores = tensor.scores.at(dataset);
  VectorXd acc = VectorXd::Zero(scores.rows());
  std::string id;
  for (std::size_t m : set) {
    const auto& info = tensor.metrics.at(m);
    id += (id.empty() ? "" : "+") + info.id;
    const VectorXd col = scores.col(static_cast<Index>(m));
    if (aggregation == Aggregation::mean_rank) {
      acc += quality_ranks(col, info.orientation);
    } else {
      const VectorXd oriented = info.orientation == Orientation::higher_better ? col : VectorXd(-col);
      const double lo = oriented.minCoeff(), hi = oriented.maxCoeff();
      if (hi > lo)
        acc += ((oriented.array() - lo) / (hi - lo)).matrix();
      else
        acc.array() += 0.5;
    }
  }
  acc /= double(set.size());
  // Mean rank: smaller is better. Mean normalized score: larger is better.
  VectorXd ranks = aggregation == Aggregation::mean_rank ? fractional_rank(acc) : fractional_rank(-acc);
  return {tensor.datasets.at(dataset), id, std::move(ranks)};
}

double rank_stability(std::span<const VectorXd> rankings, std::uint64_t seed) {
  const std::size_t r = rankings.size();
  require(r >= 2, "rank_stability: need at least 2 rankings");
  double sum = 0.0;
  std::size_t pairs = 0;
  if (r <= 200) {
    for (std::size_t a = 0; a < r; ++a)
      for (std::size_t b = a + 1; b < r; ++b, ++pairs) sum += spearman_of_ranks(rankings[a], rankings[b]).rho;
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, r - 1);
    for (; pairs < 5000; ++pairs) {
      std::size_t a = pick(rng), b = pick(rng);
      while (b == a) b = pick(rng);
      sum += spearman_of_ranks(rankings[a], rankings[b]).rho;
    }
  }
  return sum / double(pairs);
}

namespace {

double resampled_stability(const MatrixXd& pairwise, const std::vector<Index>& idx) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t u = 0; u < idx.size(); ++u)
    for (std::size_t v = u + 1; v < idx.size(); ++v) {
      if (idx[u] == idx[v]) continue;
      sum += pairwise(idx[u], idx[v]);
      ++count;
    }
  return count ? sum / double(count) : 1.0;
}

std::vector<Index> resample(Index n, std::mt19937_64& rng) {
  std::uniform_int_distribution<Index> pick(0, n - 1);
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Interval percentile_interval(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const auto at = [&](double q) {
    const double pos = q * double(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - double(lo)) * (values[hi] - values[lo]);
  };
  return {at(0.025), at(0.975)};
}

}  // namespace

Interval bootstrap_interval(const MatrixXd& pairwise, int replicates, std::uint64_t seed) {
  require(replicates >= 1, "bootstrap: need at least one replicate");
  require(pairwise.rows() >= 2, "bootstrap: need at least 2 repeats");
  std::mt19937_64 rng(seed);
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(replicates));
  for (int b = 0; b < replicates; ++b) stats.push_back(resampled_stability(pairwise, resample(pairwise.rows(), rng)));
  return percentile_interval(std::move(stats));
}

Interval bootstrap_difference(const StabilityReport& a, const StabilityReport& b, int replicates, std::uint64_t seed) {
  require(replicates >= 1, "bootstrap: need at least one replicate");
  std::mt19937_64 rng(seed);
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(replicates));
  for (int r = 0; r < replicates; ++r) {
    const double sa = resampled_stability(a.pairwise, resample(a.pairwise.rows(), rng));
    const double sb = resampled_stability(b.pairwise, resample(b.pairwise.rows(), rng));
    stats.push_back(sa - sb);
  }
  return percentile_interval(std::move(stats));
}

std::vector<StabilityReport> stability_sweep(const ScoreTensor& tensor, const Dendrogram& dend,
                                             const SweepOptions& options) {
  require(options.repeats >= 2 && options.repeats <= 200, "stability_sweep: repeats must lie in [2, 200]");
  require(options.k_min >= 1 && options.k_min <= options.k_max, "stability_sweep: empty k range");
  require(static_cast<std::size_t>(options.k_max) <= tensor.metric_count(),
          "stability_sweep: k_max exceeds the metric catalog");
  require(dend.leaf_ids == tensor.metric_ids(), "stability_sweep: dendrogram does not match tensor metrics");
  tensor.validate();

  struct Cell {
    int k;
    std::size_t strategy;
  };
  std::vector<Cell> cells;
  for (int k = options.k_min; k <= options.k_max; ++k)
    for (std::size_t s = 0; s < options.strategies.size(); ++s) cells.push_back({k, s});

  std::vector<StabilityReport> reports(cells.size());
  parallel_for(cells.size(), options.threads, [&](std::size_t c) {
    const auto [k, s] = cells[c];
    const StrategyKind kind = options.strategies[s];
    const std::uint64_t cell_seed =
        derive_seed(options.seed, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(kind));

    std::optional<MetricClustering> clustering;
    if (kind == StrategyKind::cluster_based) clustering = cut_to_k(dend, k);

    std::vector<std::vector<std::size_t>> sets;
    for (int r = 0; r < options.repeats; ++r) {
      std::mt19937_64 rng(derive_seed(cell_seed, static_cast<std::uint64_t>(r)));
      try {
        sets.push_back(draw_metric_set(kind, k, tensor.metrics, clustering ? &*clustering : nullptr, rng));
      } catch (const std::exception& e) {
        throw InvalidArgument("stability_sweep (" + to_string(kind) + ", k=" + std::to_string(k) + "): " + e.what());
      }
    }

    StabilityReport rep;
    rep.strategy = kind;
    rep.k = k;
    rep.repeats = options.repeats;
    rep.seed = cell_seed;
    const Index r = options.repeats;
    rep.pairwise = MatrixXd::Ones(r, r);
    MatrixXd acc = MatrixXd::Zero(r, r);
    for (std::size_t d = 0; d < tensor.dataset_count(); ++d) {
      std::vector<VectorXd> rankings;
      for (const auto& set : sets) rankings.push_back(aggregate_ranking(tensor, d, set, options.aggregation).ranks);
      double sum = 0.0;
      for (Index a = 0; a < r; ++a)
        for (Index b = a + 1; b < r; ++b) {
          const double rho = spearman_of_ranks(rankings[static_cast<std::size_t>(a)],
                                               rankings[static_cast<std::size_t>(b)]).rho;
          acc(a, b) += rho;
          sum += rho;
        }
      rep.per_dataset.push_back(sum / (double(r) * double(r - 1) / 2.0));
    }
    for (Index a = 0; a < r; ++a)
      for (Index b = a + 1; b < r; ++b) {
        rep.pairwise(a, b) = acc(a, b) / double(tensor.dataset_count());
        rep.pairwise(b, a) = rep.pairwise(a, b);
      }
    rep.stability = std::accumulate(rep.per_dataset.begin(), rep.per_dataset.end(), 0.0) /
                    double(rep.per_dataset.size());
    const Interval ci = bootstrap_interval(rep.pairwise, options.bootstrap, derive_seed(cell_seed, 0xB007));
    rep.ci_low = ci.low;
    rep.ci_high = ci.high;
    reports[c] = std::move(rep);
  });
  return reports;
}

}  // namespace dreval
