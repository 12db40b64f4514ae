#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "msolver/bench.hpp"
#include "msolver/models.hpp"
#include "msolver/service.hpp"
#include "msolver/training.hpp"

using namespace msolver;

namespace {

std::vector<policy::VersionId> parse_versions(const std::string& text) {
  std::vector<policy::VersionId> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(policy::parse_version(item));
  }
  return out;
}

bench::GroupBy parse_group(const std::string& s) {
  if (s == "mine-ratio") return bench::GroupBy::MineRatio;
  if (s == "blocks") return bench::GroupBy::Blocks;
  if (s == "dim-ratio") return bench::GroupBy::DimRatio;
  throw std::invalid_argument("group must be mine-ratio, blocks or dim-ratio");
}

void print_rows(const std::vector<bench::BenchRow>& rows) {
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      std::cerr << r.version << " " << r.p << "x" << r.q << "/" << r.n << ": skipped (" << r.error << ")\n";
    }
  }
}

training::SweepGrid grid_from(const std::vector<int>& sizes, const std::vector<double>& dims,
                              const std::vector<double>& ratios, int games, std::uint64_t seed) {
  training::SweepGrid g;
  g.boardSizes = sizes;
  g.dimensionRatios = dims;
  g.mineRatios = ratios;
  g.gamesPerCell = games;
  g.seedBase = seed;
  return g;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minesweeper CSP solver suite"};
  app.require_subcommand(1);

  // bench
  auto* benchCmd = app.add_subcommand("bench", "Benchmark solver versions");
  benchCmd->require_subcommand(1);

  auto* run = benchCmd->add_subcommand("run", "Play a configuration sweep and write a CSV");
  std::string specPath, presetName, versionsText, outPath, modelDir, groupText, groupOut;
  int games = 0;
  long long timeoutMs = 0;
  std::uint64_t seed = 1;
  unsigned workers = default_workers();
  bool noTiming = false;
  auto* specOpt = run->add_option("--spec", specPath, "Key-value spec file");
  run->add_option("--preset", presetName, "beginner or paper53")->excludes(specOpt);
  run->add_option("--versions", versionsText, "Comma-separated versions, e.g. 3.0,4.0,6.5");
  run->add_option("--games", games, "Games per configuration");
  run->add_option("--timeout", timeoutMs, "Per-game timeout in ms");
  auto* seedOpt = run->add_option("--seed", seed, "Seed base");
  run->add_option("--out", outPath, "CSV output path");
  run->add_option("--model-dir", modelDir, "Directory holding trained models");
  auto* workersOpt = run->add_option("--workers", workers, "Worker threads");
  run->add_flag("--no-timing", noTiming, "Write 0 for elapsed times");
  run->add_option("--group", groupText, "Also summarize by mine-ratio, blocks or dim-ratio");
  run->add_option("--group-out", groupOut, "Summary CSV path (default stdout)");
  run->callback([&] {
    bench::BenchSpec spec = !specPath.empty() ? bench::load_spec(specPath)
                            : !presetName.empty() ? bench::preset(presetName)
                                                  : bench::preset_beginner();
    if (!versionsText.empty()) spec.versions = parse_versions(versionsText);
    if (games > 0) spec.gamesPerCell = games;
    if (timeoutMs > 0) spec.timeout = std::chrono::milliseconds{timeoutMs};
    if (seedOpt->count() > 0) spec.seedBase = seed;
    if (!outPath.empty()) spec.outputPath = outPath;
    if (workersOpt->count() > 0) spec.workers = std::max(1u, workers);
    if (noTiming) spec.recordTiming = false;
    const auto models = modelDir.empty() ? bench::ModelSet{} : bench::ModelSet::load(modelDir);
    const auto rows = bench::run_bench(spec, models);
    print_rows(rows);
    if (!spec.outputPath) bench::write_csv(std::cout, rows);
    if (!groupText.empty()) {
      const auto by = parse_group(groupText);
      const auto groups = bench::aggregate(rows, by);
      if (groupOut.empty()) {
        bench::write_summary_csv(std::cout, groups, by);
      } else {
        std::ofstream out(groupOut);
        bench::write_summary_csv(out, groups, by);
      }
    }
  });

  auto* t4 = benchCmd->add_subcommand("table4", "Beginner board across versions 2.0 to 6.5");
  int t4Games = 2000;
  std::string t4Out, t4Models;
  std::uint64_t t4Seed = 1;
  t4->add_option("--games", t4Games, "Games per version");
  t4->add_option("--model-dir", t4Models, "Directory holding trained models");
  t4->add_option("--seed", t4Seed, "Seed base");
  t4->add_option("--out", t4Out, "CSV output path (default stdout)");
  t4->add_option("--workers", workers, "Worker threads");
  t4->callback([&] {
    const auto models = t4Models.empty() ? bench::ModelSet{} : bench::ModelSet::load(t4Models);
    const auto rows = bench::table4(t4Games, models, t4Seed, std::max(1u, workers));
    print_rows(rows);
    if (t4Out.empty()) {
      bench::write_csv(std::cout, rows);
    } else {
      std::ofstream out(t4Out);
      bench::write_csv(out, rows);
    }
  });

  // train
  auto* trainCmd = app.add_subcommand("train", "Train learned models");
  trainCmd->require_subcommand(1);
  std::vector<int> sizes{6, 8, 9, 10, 12};
  std::vector<double> dims{0.75, 1.0};
  std::vector<double> ratios{0.08, 0.12, 0.16, 0.20};
  int dataGames = 200, episodes = 0, epochs = 20;
  std::string modelOut, initPath, alphaPath, corpusOut;

  auto add_grid = [&](CLI::App* cmd) {
    cmd->add_option("--sizes", sizes, "Board sizes p");
    cmd->add_option("--dim-ratios", dims, "q/p ratios");
    cmd->add_option("--mine-ratios", ratios, "Mine ratios");
    cmd->add_option("--games", dataGames, "Games per configuration for the corpus");
    cmd->add_option("--epochs", epochs, "Passes over the corpus");
    cmd->add_option("--episodes", episodes, "Iterative episodes after the corpus pass (0 = none)");
    cmd->add_option("--out", modelOut, "Model output path")->required();
    cmd->add_option("--init", initPath, "Start from this model instead of a fresh one");
    cmd->add_option("--corpus-out", corpusOut, "Also write the collected corpus");
    cmd->add_option("--seed", seed, "Seed");
    cmd->add_option("--workers", workers, "Worker threads");
  };

  auto* trainClf = trainCmd->add_subcommand("classifier", "Safe-cell classifier (5.x)");
  add_grid(trainClf);
  trainClf->callback([&] {
    auto model = initPath.empty() ? nn::build_classifier(static_cast<int>(heuristics::FeatureVector::kWidth), seed)
                                  : nn::load_model(initPath);
    if (initPath.empty() || episodes == 0) {
      training::CollectOptions collect;
      collect.workers = std::max(1u, workers);
      const auto corpus = training::collect_classification_data(grid_from(sizes, dims, ratios, dataGames, seed), collect);
      if (!corpusOut.empty()) {
        std::ofstream out(corpusOut);
        training::write_corpus(out, corpus);
      }
      training::TrainOptions opts;
      opts.seed = seed;
      opts.epochs = epochs;
      const auto r = training::train_classifier_single_pass(corpus, model, opts);
      std::cout << "samples " << corpus.size() << ", held-out accuracy " << r.heldOutAccuracy
                << ", majority baseline " << r.majorityBaseline << "\n";
    }
    if (episodes > 0) {
      training::IterativeOptions it;
      it.episodes = episodes;
      it.grid = grid_from(sizes, dims, ratios, 1, seed + 1);
      it.train.seed = seed;
      it.collect.workers = std::max(1u, workers);
      it.progress = [](int e, std::size_t n, double loss) {
        std::cout << "episode " << e << ": " << n << " samples, loss " << loss << "\n";
      };
      training::train_classifier_iterative(model, it);
    }
    nn::save_model(model, modelOut);
  });

  auto* trainQ = trainCmd->add_subcommand("qnet", "Sub-state Q-network (6.x)");
  add_grid(trainQ);
  trainQ->add_option("--alpha", alphaPath, "Alpha model file")->required();
  trainQ->callback([&] {
    const auto alpha = heuristics::load_alpha_model(alphaPath);
    auto model = initPath.empty() ? nn::build_qnet(3, seed) : nn::load_model(initPath);
    if (initPath.empty() || episodes == 0) {
      training::QCollectOptions collect;
      collect.workers = std::max(1u, workers);
      const auto corpus = training::collect_q_data(grid_from(sizes, dims, ratios, dataGames, seed), alpha, collect);
      if (!corpusOut.empty()) {
        std::ofstream out(corpusOut);
        training::write_q_corpus(out, corpus);
      }
      training::TrainOptions opts;
      opts.seed = seed;
      opts.epochs = epochs;
      const auto r = training::train_qnet(corpus, model, opts);
      std::cout << "samples " << corpus.size() << ", held-out mse " << r.heldOutMse
                << ", mean predictor mse " << r.meanPredictorMse << "\n";
    }
    if (episodes > 0) {
      training::QIterativeOptions it;
      it.episodes = episodes;
      it.grid = grid_from(sizes, dims, ratios, 1, seed + 1);
      it.alpha = alpha;
      it.train.seed = seed;
      it.collect.workers = std::max(1u, workers);
      it.progress = [](int e, std::size_t n, double loss) {
        std::cout << "episode " << e << ": " << n << " samples, loss " << loss << "\n";
      };
      training::train_qnet_iterative(model, it);
    }
    nn::save_model(model, modelOut);
  });

  auto* trainAll = trainCmd->add_subcommand("all", "Every learned model into one directory");
  std::string allDir;
  trainAll->add_option("--model-dir", allDir, "Output directory")->required();
  trainAll->add_option("--seed", seed, "Seed");
  trainAll->add_option("--workers", workers, "Worker threads");
  trainAll->callback([&] {
    auto opts = models::RecipeOptions::desk();
    opts.seed = seed;
    opts.workers = std::max(1u, workers);
    opts.outDir = allDir;
    opts.log = [](const std::string& m) { std::cout << m << "\n"; };
    models::train_all(opts);
  });

  // alpha
  auto* alphaCmd = app.add_subcommand("alpha", "Alpha sweep and regression");
  alphaCmd->require_subcommand(1);
  auto* sweepCmd = alphaCmd->add_subcommand("sweep", "Best alpha per configuration");
  std::string tableOut, modelPath;
  std::vector<int> aSizes{6, 9, 12};
  std::vector<double> aDims{0.75, 1.0};
  std::vector<double> aRatios{0.10, 0.15, 0.20};
  int aGames = 20;
  sweepCmd->add_option("--out", tableOut, "Alpha table CSV")->required();
  sweepCmd->add_option("--model-out", modelPath, "Also fit and save the alpha model");
  sweepCmd->add_option("--sizes", aSizes, "Board sizes p");
  sweepCmd->add_option("--dim-ratios", aDims, "q/p ratios");
  sweepCmd->add_option("--mine-ratios", aRatios, "Mine ratios");
  sweepCmd->add_option("--games", aGames, "Games per configuration and alpha");
  sweepCmd->add_option("--seed", seed, "Seed");
  sweepCmd->add_option("--workers", workers, "Worker threads");
  sweepCmd->callback([&] {
    training::AlphaSweepOptions opts;
    opts.workers = std::max(1u, workers);
    const auto table = training::alpha_sweep(grid_from(aSizes, aDims, aRatios, aGames, seed),
                                             training::default_alphas(), opts);
    std::ofstream out(tableOut);
    training::write_alpha_table(out, table);
    if (!modelPath.empty()) {
      const auto m = training::fit_alpha(table);
      heuristics::save_alpha_model(m, modelPath);
      std::cout << "theta " << m.theta[0] << " " << m.theta[1] << " " << m.theta[2] << " "
                << m.theta[3] << ", r2 " << m.r2 << "\n";
    }
  });
  auto* fitCmd = alphaCmd->add_subcommand("fit", "Fit the alpha model from a table");
  std::string tableIn;
  fitCmd->add_option("--table", tableIn, "Alpha table CSV")->required();
  fitCmd->add_option("--out", modelPath, "Alpha model output")->required();
  fitCmd->callback([&] {
    std::ifstream in(tableIn);
    if (!in) throw std::runtime_error("cannot open " + tableIn);
    const auto m = training::fit_alpha(training::read_alpha_table(in));
    heuristics::save_alpha_model(m, modelPath);
    std::cout << "r2 " << m.r2 << "\n";
  });

  // serve
  auto* serveCmd = app.add_subcommand("serve", "HTTP/JSON assisted-play service");
  int port = 8080;
  std::string host = "127.0.0.1", defaultVersion = "6.5", serveModels;
  serveCmd->add_option("--port", port, "TCP port");
  serveCmd->add_option("--host", host, "Bind address");
  serveCmd->add_option("--default-version", defaultVersion, "Version for new sessions");
  serveCmd->add_option("--model-dir", serveModels, "Directory holding trained models");
  serveCmd->callback([&] {
    service::ServiceOptions opts;
    opts.defaultVersion = policy::parse_version(defaultVersion);
    if (!serveModels.empty()) opts.models = bench::ModelSet::load(serveModels);
    service::SessionStore store(opts);
    if (store.default_version() != opts.defaultVersion) {
      std::cerr << "version " << defaultVersion << " has no models; defaulting to "
                << policy::to_string(store.default_version()) << "\n";
    }
    std::cout << "listening on " << host << ":" << port << "\n";
    service::serve(store, host, port);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
