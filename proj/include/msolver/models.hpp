#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "msolver/bench.hpp"
#include "msolver/training.hpp"

namespace msolver::models {

/// End-to-end recipe producing every learned artifact: single-pass and
/// iterative classifiers, the alpha table and regression, single-pass and
/// iterative Q-networks.
struct RecipeOptions {
  training::SweepGrid dataGrid;   // corpus for the single-pass models
  training::SweepGrid alphaGrid;  // alpha sweep configurations
  training::SweepGrid iterGrid;   // configurations cycled by the episodes
  int classifierEpochs = 20;
  int qnetEpochs = 20;
  int classifierEpisodes = 20;
  int episodeGames = 10;
  int qnetEpisodes = 10;
  std::vector<double> alphas = training::default_alphas();
  std::uint64_t seed = 1;
  unsigned workers = default_workers();
  std::optional<std::filesystem::path> outDir;
  std::function<void(const std::string&)> log;

  /// Desk-scale defaults: boards 6 to 12, mine ratios 8 to 20 percent.
  static RecipeOptions desk();
};

struct RecipeResult {
  bench::ModelSet models;
  training::ClassifierReport classifier;
  training::QReport qnet;
  std::vector<training::AlphaRow> alphaTable;
};

RecipeResult train_all(const RecipeOptions& options);

}  // namespace msolver::models
