#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "msolver/heuristics.hpp"
#include "msolver/neural.hpp"
#include "msolver/parallel.hpp"
#include "msolver/policies.hpp"

namespace msolver::training {

/// Board configurations swept by data collection, the alpha sweep and the
/// benchmark. q = round(ratio * p), n = round(mineRatio * p * q), both
/// clamped to legal values.
struct SweepGrid {
  std::vector<int> boardSizes{9};
  std::vector<double> dimensionRatios{1.0};
  std::vector<double> mineRatios{0.12};
  int gamesPerCell = 10;
  std::uint64_t seedBase = 1;

  struct Cell {
    int rows = 0;
    int cols = 0;
    int mines = 0;
    double dimensionRatio = 1.0;
    double mineRatio = 0.0;
  };
  std::vector<Cell> cells() const;
};

/// Seeds are pure functions of their indices so any single game can be
/// replayed in isolation.
std::uint64_t board_seed(std::uint64_t seedBase, std::size_t cell, std::size_t game);
std::uint64_t policy_seed(std::uint64_t seedBase, std::size_t cell, std::size_t game,
                          std::uint64_t salt = 0);

using ContextFactory = std::function<policy::PolicyContext(std::uint64_t seed)>;

// ---------------------------------------------------------------- classifier

struct LabeledSample {
  std::vector<double> features;
  int label = 0;  // 1 iff the cell was safe
};

struct CollectOptions {
  int randomExtras = 3;  // extra covered cells featurized per probabilistic move
  unsigned workers = default_workers();
  std::chrono::milliseconds timeout{5000};
};

/// Plays every grid game with `factory`'s policy and emits one sample per
/// probabilistic move (plus randomExtras random covered cells).
std::vector<LabeledSample> collect_classifier_samples(const SweepGrid& grid,
                                                      const ContextFactory& factory,
                                                      const CollectOptions& options = {});

/// The same with the 4.0 policy.
std::vector<LabeledSample> collect_classification_data(const SweepGrid& grid,
                                                       const CollectOptions& options = {});

void write_corpus(std::ostream& out, const std::vector<LabeledSample>& samples);
std::vector<LabeledSample> read_corpus(std::istream& in);

struct TrainOptions {
  int batchSize = 32;
  int epochs = 1;
  std::uint64_t seed = 1;
  double heldOutFraction = 0.1;
};

struct ClassifierReport {
  double trainLoss = 0.0;  // mean over the pass
  double heldOutLoss = 0.0;
  double heldOutAccuracy = 0.0;
  double majorityBaseline = 0.0;
  std::size_t trainSize = 0;
  std::size_t heldOutSize = 0;
};

/// Mini-batch training over the corpus minus the held-out tail.
ClassifierReport train_classifier_single_pass(const std::vector<LabeledSample>& samples,
                                              nn::MlpModel& model, const TrainOptions& options = {});

ClassifierReport evaluate_classifier(const nn::MlpModel& model,
                                     const std::vector<LabeledSample>& samples);

struct IterativeOptions {
  int episodes = 20;
  int batchGames = 10;  // games simulated per episode
  SweepGrid grid;       // configurations cycled through by the episodes
  TrainOptions train;
  CollectOptions collect;
  std::optional<std::filesystem::path> checkpoint;  // saved after every episode
  std::function<void(int episode, std::size_t samples, double loss)> progress;
};

/// Each episode plays batchGames games with the current model as the 5.5
/// policy, then trains one pass on the samples those games produced.
void train_classifier_iterative(nn::MlpModel& model, const IterativeOptions& options);

// ---------------------------------------------------------------- alpha

struct AlphaRow {
  int rows = 0;
  int cols = 0;
  double mineRatio = 0.0;
  double bestAlpha = 0.0;
  double winRatio = 0.0;
};

struct AlphaSweepOptions {
  unsigned workers = default_workers();
  std::chrono::milliseconds timeout{5000};
};

std::vector<double> default_alphas();  // 0, 1/30, ..., 1

/// For every grid cell and alpha, plays gamesPerCell games choosing by the
/// edge-distance rule on combined scores; keeps the alpha with the highest
/// win ratio (first one on ties).
std::vector<AlphaRow> alpha_sweep(const SweepGrid& grid, const std::vector<double>& alphas,
                                  const AlphaSweepOptions& options = {});

/// Ordinary least squares of bestAlpha on (p, q, mineRatio, 1). Throws
/// std::domain_error on fewer than 4 rows or a rank-deficient design.
heuristics::AlphaModel fit_alpha(const std::vector<AlphaRow>& table);

void write_alpha_table(std::ostream& out, const std::vector<AlphaRow>& table);
std::vector<AlphaRow> read_alpha_table(std::istream& in);

// ---------------------------------------------------------------- Q-learning

/// Newly opened cells over the number of safe cells.
double immediate_reward(int opened, int rows, int cols, int mines);

/// return[t] = sum_{k >= t} r[k] / (1 + c * (k - t)).
std::vector<double> discounted_returns(const std::vector<double>& rewards, double c = 1.0);

/// r + gamma * maxNextQ.
double q_target(double reward, double gamma, double maxNextQ);

struct QSample {
  std::vector<double> substate;
  double discountedReward = 0.0;
};

struct QCollectOptions {
  int sub = 3;
  double discount = 1.0;
  unsigned workers = default_workers();
  std::chrono::milliseconds timeout{5000};
};

/// Plays the grid with `factory`'s policy; every probabilistic move yields
/// (sub-state around the chosen cell, discounted return from that move).
std::vector<QSample> collect_q_samples(const SweepGrid& grid, const ContextFactory& factory,
                                       const QCollectOptions& options = {});

/// The same with edge-distance selection on combined scores.
std::vector<QSample> collect_q_data(const SweepGrid& grid, const heuristics::AlphaModel& alpha,
                                    const QCollectOptions& options = {});

void write_q_corpus(std::ostream& out, const std::vector<QSample>& samples);
std::vector<QSample> read_q_corpus(std::istream& in);

inline constexpr double kTargetClip = 0.999;

struct QReport {
  double trainLoss = 0.0;
  double heldOutMse = 0.0;
  double meanPredictorMse = 0.0;
  std::size_t trainSize = 0;
  std::size_t heldOutSize = 0;
};

/// One pass (or options.epochs passes) over the corpus; targets are clipped
/// into (-0.999, 0.999) to stay inside the tanh output range.
QReport train_qnet(const std::vector<QSample>& samples, nn::MlpModel& model,
                   const TrainOptions& options = {});

QReport evaluate_qnet(const nn::MlpModel& model, const std::vector<QSample>& samples);

struct QIterativeOptions {
  int episodes = 10;
  SweepGrid grid;
  heuristics::AlphaModel alpha;
  TrainOptions train;
  QCollectOptions collect;
  std::optional<std::filesystem::path> checkpoint;
  std::function<void(int episode, std::size_t samples, double loss)> progress;
};

/// Each episode regenerates samples with the current Q-network driving the
/// 6.x policy and trains one pass on them.
void train_qnet_iterative(nn::MlpModel& model, const QIterativeOptions& options);

}  // namespace msolver::training
