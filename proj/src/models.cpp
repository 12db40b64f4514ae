#include "msolver/models.hpp"

#include <fstream>
#include <memory>
#include <sstream>

namespace msolver::models {

RecipeOptions RecipeOptions::desk() {
  RecipeOptions o;
  o.dataGrid.boardSizes = {6, 8, 9, 10, 12};
  o.dataGrid.dimensionRatios = {0.75, 1.0};
  o.dataGrid.mineRatios = {0.08, 0.12, 0.16, 0.20};
  o.dataGrid.gamesPerCell = 200;
  o.alphaGrid.boardSizes = {6, 9, 12};
  o.alphaGrid.dimensionRatios = {0.75, 1.0};
  o.alphaGrid.mineRatios = {0.10, 0.15, 0.20};
  o.alphaGrid.gamesPerCell = 20;
  o.iterGrid = o.dataGrid;
  o.iterGrid.gamesPerCell = 1;
  return o;
}

RecipeResult train_all(const RecipeOptions& o) {
  auto log = [&](const std::string& msg) {
    if (o.log) o.log(msg);
  };
  auto save = [&](const nn::MlpModel& m, const char* name) {
    if (o.outDir) nn::save_model(m, *o.outDir / name);
  };
  if (o.outDir) std::filesystem::create_directories(*o.outDir);

  RecipeResult out;
  training::SweepGrid data = o.dataGrid;
  data.seedBase = derive_seed(o.seed, 1);

  training::CollectOptions collect;
  collect.workers = o.workers;
  const auto corpus = training::collect_classification_data(data, collect);
  log("classifier corpus: " + std::to_string(corpus.size()) + " samples");

  auto classifier = nn::build_classifier(static_cast<int>(heuristics::FeatureVector::kWidth),
                                         derive_seed(o.seed, 2));
  training::TrainOptions train;
  train.seed = derive_seed(o.seed, 3);
  train.epochs = o.classifierEpochs;
  out.classifier = training::train_classifier_single_pass(corpus, classifier, train);
  {
    std::ostringstream ss;
    ss << "classifier held-out accuracy " << out.classifier.heldOutAccuracy << " (majority "
       << out.classifier.majorityBaseline << ")";
    log(ss.str());
  }
  out.models.classifierSingle = std::make_shared<const nn::MlpModel>(classifier);
  save(classifier, bench::kClassifierSingleFile);

  training::IterativeOptions iter;
  iter.episodes = o.classifierEpisodes;
  iter.batchGames = o.episodeGames;
  iter.grid = o.iterGrid;
  iter.grid.seedBase = derive_seed(o.seed, 4);
  iter.train.seed = derive_seed(o.seed, 5);
  iter.collect = collect;
  training::train_classifier_iterative(classifier, iter);
  out.models.classifierIter = std::make_shared<const nn::MlpModel>(classifier);
  save(classifier, bench::kClassifierIterFile);
  log("iterative classifier done");

  training::SweepGrid alphaGrid = o.alphaGrid;
  alphaGrid.seedBase = derive_seed(o.seed, 6);
  training::AlphaSweepOptions sweep;
  sweep.workers = o.workers;
  out.alphaTable = training::alpha_sweep(alphaGrid, o.alphas, sweep);
  const auto alpha = training::fit_alpha(out.alphaTable);
  out.models.alpha = alpha;
  if (o.outDir) {
    heuristics::save_alpha_model(alpha, *o.outDir / bench::kAlphaFile);
    std::ofstream table(*o.outDir / "alpha_table.csv");
    training::write_alpha_table(table, out.alphaTable);
  }
  {
    std::ostringstream ss;
    ss << "alpha fit r2 " << alpha.r2;
    log(ss.str());
  }

  training::QCollectOptions qcollect;
  qcollect.workers = o.workers;
  training::SweepGrid qdata = o.dataGrid;
  qdata.seedBase = derive_seed(o.seed, 7);
  const auto qcorpus = training::collect_q_data(qdata, alpha, qcollect);
  log("Q corpus: " + std::to_string(qcorpus.size()) + " samples");
  auto qnet = nn::build_qnet(qcollect.sub, derive_seed(o.seed, 8));
  training::TrainOptions qtrain;
  qtrain.seed = derive_seed(o.seed, 9);
  qtrain.epochs = o.qnetEpochs;
  out.qnet = training::train_qnet(qcorpus, qnet, qtrain);
  {
    std::ostringstream ss;
    ss << "Q-net held-out mse " << out.qnet.heldOutMse << " (mean predictor "
       << out.qnet.meanPredictorMse << ")";
    log(ss.str());
  }
  out.models.qnetSingle = std::make_shared<const nn::MlpModel>(qnet);
  save(qnet, bench::kQnetSingleFile);

  training::QIterativeOptions qiter;
  qiter.episodes = o.qnetEpisodes;
  qiter.grid = o.iterGrid;
  qiter.grid.seedBase = derive_seed(o.seed, 10);
  qiter.alpha = alpha;
  qiter.train.seed = derive_seed(o.seed, 11);
  qiter.collect = qcollect;
  training::train_qnet_iterative(qnet, qiter);
  out.models.qnetIter = std::make_shared<const nn::MlpModel>(qnet);
  save(qnet, bench::kQnetIterFile);
  log("iterative Q-net done");
  return out;
}

}  // namespace msolver::models
