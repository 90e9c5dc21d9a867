#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dreval/metric_catalog.hpp"
#include "dreval/pipeline.hpp"

namespace {

// Exit codes: 0 ok, 1 internal failure, 2 configuration error, 3 data error.
int run(const std::string& command, const std::string& config_path, const std::string& out,
        std::optional<std::uint64_t> seed, std::optional<int> threads, const std::string& scores) {
  dreval::RunConfig config = dreval::load_config(config_path);
  if (!out.empty()) config.output_dir = out;
  if (seed) config.set_seed(*seed);
  if (threads) {
    if (*threads < 1) throw dreval::ConfigError("--threads must be >= 1");
    config.threads = *threads;
    config.experiments.threads = *threads;
  }
  if (!scores.empty() && !std::filesystem::is_regular_file(scores))
    throw dreval::ConfigError("--scores: no such file '" + scores + "'");

  if (command == "score") dreval::cmd_score(config, std::cout);
  else if (command == "analyze") dreval::cmd_analyze(config, std::cout, scores);
  else if (command == "stability") dreval::cmd_stability(config, std::cout, scores);
  else dreval::cmd_recommend(config, std::cout, scores);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluate dimensionality-reduction quality metrics and recommend a representative subset"};
  app.require_subcommand(1);

  std::string config_path, out, scores;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;

  for (const char* name : {"score", "analyze", "stability", "recommend"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--out", out, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--threads", threads, "worker threads");
    if (std::string(name) != "score") sub->add_option("--scores", scores, "existing scores.csv to analyze");
  }
  app.add_subcommand("catalog", "print the default metric grid as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  try {
    if (command == "catalog") {
      std::cout << dreval::catalog_json(dreval::default_metric_grid());
      return 0;
    }
    return run(command, config_path, out, seed, threads, scores);
  } catch (const dreval::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const dreval::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const dreval::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
