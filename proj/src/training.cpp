#include "msolver/training.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <istream>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace msolver::training {

std::vector<SweepGrid::Cell> SweepGrid::cells() const {
  std::vector<Cell> out;
  for (int p : boardSizes) {
    for (double dim : dimensionRatios) {
      const int q = std::max(1, static_cast<int>(std::lround(dim * p)));
      const int total = p * q;
      if (total < 2) continue;
      for (double ratio : mineRatios) {
        const int n = std::clamp(static_cast<int>(std::lround(ratio * total)), 1, total - 1);
        out.push_back({p, q, n, dim, ratio});
      }
    }
  }
  return out;
}

std::uint64_t board_seed(std::uint64_t seedBase, std::size_t cell, std::size_t game) {
  return derive_seed(seedBase, 0xB0A2D, cell, game);
}

std::uint64_t policy_seed(std::uint64_t seedBase, std::size_t cell, std::size_t game,
                          std::uint64_t salt) {
  return derive_seed(seedBase ^ (salt * 0x9E3779B97F4A7C15ULL), 0x9011C7, cell, game);
}

namespace {

struct Job {
  SweepGrid::Cell cell;
  std::size_t cellIndex = 0;
  std::size_t gameIndex = 0;
  std::uint64_t seedBase = 0;
};

std::vector<Job> grid_jobs(const SweepGrid& grid) {
  std::vector<Job> jobs;
  const auto cells = grid.cells();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (int g = 0; g < grid.gamesPerCell; ++g) {
      jobs.push_back({cells[c], c, static_cast<std::size_t>(g), grid.seedBase});
    }
  }
  return jobs;
}

engine::BoardConfig config_of(const Job& job) {
  return {job.cell.rows, job.cell.cols, job.cell.mines,
          board_seed(job.seedBase, job.cellIndex, job.gameIndex)};
}

template <typename T, typename PerGame>
std::vector<T> run_jobs(const std::vector<Job>& jobs, unsigned workers, PerGame&& perGame) {
  std::vector<std::vector<T>> slots(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) { slots[i] = perGame(jobs[i]); });
  std::vector<T> out;
  for (auto& s : slots) {
    out.insert(out.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  }
  return out;
}

std::vector<LabeledSample> classifier_samples_for(const std::vector<Job>& jobs,
                                                  const ContextFactory& factory,
                                                  const CollectOptions& options) {
  return run_jobs<LabeledSample>(jobs, options.workers, [&](const Job& job) {
    std::vector<LabeledSample> out;
    const auto config = config_of(job);
    auto ctx = factory(policy_seed(job.seedBase, job.cellIndex, job.gameIndex));
    Rng extras(derive_seed(config.seed, 0xE77A));
    policy::PlayOptions play;
    play.timeout = options.timeout;
    play.observer = [&](const policy::StepInfo& step) {
      if (!step.decision.probabilistic() || !step.decision.snapshot) return;
      const auto& snap = *step.decision.snapshot;
      const auto chosen = step.decision.uncovers.front();
      auto emit = [&](engine::Coord c) {
        out.push_back({heuristics::featurize(step.before, snap.system, snap.P, c).to_input(),
                       step.game.is_mine(c) ? 0 : 1});
      };
      emit(chosen);
      if (options.randomExtras <= 0) return;
      std::vector<engine::Coord> pool;
      for (int i = 0; i < step.before.rows * step.before.cols; ++i) {
        const auto c = step.before.coord(i);
        if (step.before.at(c).covered() && c != chosen) pool.push_back(c);
      }
      extras.shuffle(std::span<engine::Coord>(pool));
      const auto k = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(options.randomExtras));
      for (std::size_t i = 0; i < k; ++i) emit(pool[i]);
    };
    policy::play_game(config, ctx, play);
    return out;
  });
}

template <typename Loss>
double train_pass(nn::MlpModel& model, const std::vector<const std::vector<double>*>& inputs,
                  const std::vector<double>& targets, int batchSize, Rng& rng, Loss lossKind,
                  nn::Optimizer optimizer) {
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<std::size_t>(order));
  double total = 0.0;
  std::size_t batches = 0;
  nn::TrainBatch batch;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batchSize)) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batchSize));
    batch.inputs.clear();
    batch.targets.clear();
    for (std::size_t k = start; k < end; ++k) {
      batch.inputs.push_back(*inputs[order[k]]);
      batch.targets.push_back(targets[order[k]]);
    }
    total += nn::train_step(model, batch, lossKind, optimizer);
    ++batches;
  }
  return batches ? total / static_cast<double>(batches) : 0.0;
}

std::size_t held_out_start(std::size_t n, double fraction) {
  const auto held = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction));
  return n - std::min(held, n > 0 ? n - 1 : 0);
}

}  // namespace

std::vector<LabeledSample> collect_classifier_samples(const SweepGrid& grid,
                                                      const ContextFactory& factory,
                                                      const CollectOptions& options) {
  return classifier_samples_for(grid_jobs(grid), factory, options);
}

std::vector<LabeledSample> collect_classification_data(const SweepGrid& grid,
                                                       const CollectOptions& options) {
  return collect_classifier_samples(
      grid,
      [](std::uint64_t seed) { return policy::PolicyContext::make(policy::VersionId::V4_0, {}, seed); },
      options);
}

void write_corpus(std::ostream& out, const std::vector<LabeledSample>& samples) {
  out << "# msolver classifier corpus v1: label then " << heuristics::FeatureVector::kWidth
      << " features\n";
  out.precision(17);
  for (const auto& s : samples) {
    out << s.label;
    for (double f : s.features) out << ' ' << f;
    out << '\n';
  }
}

std::vector<LabeledSample> read_corpus(std::istream& in) {
  std::vector<LabeledSample> out;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    LabeledSample s;
    if (!(ss >> s.label) || (s.label != 0 && s.label != 1)) {
      throw std::runtime_error("corpus line " + std::to_string(lineNo) + ": bad label");
    }
    double f;
    while (ss >> f) s.features.push_back(f);
    if (s.features.size() != heuristics::FeatureVector::kWidth) {
      throw std::runtime_error("corpus line " + std::to_string(lineNo) + ": expected " +
                               std::to_string(heuristics::FeatureVector::kWidth) + " features");
    }
    out.push_back(std::move(s));
  }
  return out;
}

ClassifierReport evaluate_classifier(const nn::MlpModel& model,
                                     const std::vector<LabeledSample>& samples) {
  ClassifierReport r;
  r.heldOutSize = samples.size();
  if (samples.empty()) return r;
  double loss = 0.0;
  std::size_t correct = 0, ones = 0;
  for (const auto& s : samples) {
    const double y = model.forward(s.features);
    const double p = std::clamp(y, 1e-12, 1.0 - 1e-12);
    loss -= s.label ? std::log(p) : std::log(1.0 - p);
    correct += (y >= 0.5) == (s.label == 1);
    ones += static_cast<std::size_t>(s.label);
  }
  const auto n = static_cast<double>(samples.size());
  r.heldOutLoss = loss / n;
  r.heldOutAccuracy = static_cast<double>(correct) / n;
  r.majorityBaseline = std::max(static_cast<double>(ones), n - static_cast<double>(ones)) / n;
  return r;
}

ClassifierReport train_classifier_single_pass(const std::vector<LabeledSample>& samples,
                                              nn::MlpModel& model, const TrainOptions& options) {
  if (samples.empty()) throw std::invalid_argument("empty classifier corpus");
  const std::size_t split = held_out_start(samples.size(), options.heldOutFraction);
  std::vector<const std::vector<double>*> inputs;
  std::vector<double> targets;
  std::size_t trainOnes = 0;
  for (std::size_t i = 0; i < split; ++i) {
    inputs.push_back(&samples[i].features);
    targets.push_back(samples[i].label);
    trainOnes += static_cast<std::size_t>(samples[i].label);
  }
  Rng rng(options.seed);
  double trainLoss = 0.0;
  for (int e = 0; e < options.epochs; ++e) {
    trainLoss = train_pass(model, inputs, targets, options.batchSize, rng,
                           nn::Loss::BinaryCrossEntropy, nn::Optimizer::Adam);
  }
  std::vector<LabeledSample> held(samples.begin() + static_cast<std::ptrdiff_t>(split), samples.end());
  ClassifierReport r = evaluate_classifier(model, held);
  const int majority = 2 * trainOnes >= split ? 1 : 0;
  std::size_t agree = 0;
  for (const auto& s : held) agree += s.label == majority;
  r.majorityBaseline = held.empty() ? 0.0 : static_cast<double>(agree) / static_cast<double>(held.size());
  r.trainLoss = trainLoss;
  r.trainSize = split;
  return r;
}

namespace {

std::vector<Job> episode_jobs(const SweepGrid& grid, int episode, int games) {
  const auto cells = grid.cells();
  if (cells.empty()) throw std::invalid_argument("training grid has no cells");
  std::vector<Job> jobs;
  const std::uint64_t base = derive_seed(grid.seedBase, 0xE915DE, static_cast<std::uint64_t>(episode));
  for (int g = 0; g < games; ++g) {
    const std::size_t c = static_cast<std::size_t>(episode * games + g) % cells.size();
    jobs.push_back({cells[c], c, static_cast<std::size_t>(g), base});
  }
  return jobs;
}

}  // namespace

void train_classifier_iterative(nn::MlpModel& model, const IterativeOptions& options) {
  if (options.episodes < 1) throw std::invalid_argument("episodes must be at least 1");
  for (int e = 0; e < options.episodes; ++e) {
    auto snapshot = std::make_shared<const nn::MlpModel>(model);
    const ContextFactory factory = [snapshot](std::uint64_t seed) {
      policy::Models models;
      models.classifier = snapshot;
      return policy::PolicyContext::make(policy::VersionId::V5_5, models, seed);
    };
    const auto samples =
        classifier_samples_for(episode_jobs(options.grid, e, options.batchGames), factory, options.collect);
    double loss = 0.0;
    if (!samples.empty()) {
      std::vector<const std::vector<double>*> inputs;
      std::vector<double> targets;
      for (const auto& s : samples) {
        inputs.push_back(&s.features);
        targets.push_back(s.label);
      }
      Rng rng(derive_seed(options.train.seed, static_cast<std::uint64_t>(e)));
      loss = train_pass(model, inputs, targets, options.train.batchSize, rng,
                        nn::Loss::BinaryCrossEntropy, nn::Optimizer::Adam);
    }
    if (options.checkpoint) nn::save_model(model, *options.checkpoint);
    if (options.progress) options.progress(e, samples.size(), loss);
  }
}

std::vector<double> default_alphas() {
  std::vector<double> a;
  for (int k = 0; k <= 30; ++k) a.push_back(k / 30.0);
  return a;
}

std::vector<AlphaRow> alpha_sweep(const SweepGrid& grid, const std::vector<double>& alphas,
                                  const AlphaSweepOptions& options) {
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("alpha values must lie in [0, 1]");
  }
  if (alphas.empty()) throw std::invalid_argument("no alpha values to sweep");
  const auto cells = grid.cells();
  const std::size_t games = static_cast<std::size_t>(grid.gamesPerCell);
  const std::size_t perCell = alphas.size() * games;
  std::vector<std::uint8_t> won(cells.size() * perCell, 0);
  parallel_for(won.size(), options.workers, [&](std::size_t i) {
    const std::size_t c = i / perCell;
    const std::size_t a = (i % perCell) / games;
    const std::size_t g = i % games;
    const engine::BoardConfig config{cells[c].rows, cells[c].cols, cells[c].mines,
                                     board_seed(grid.seedBase, c, g)};
    auto ctx = policy::PolicyContext::score_manhattan(alphas[a], policy_seed(grid.seedBase, c, g));
    policy::PlayOptions play;
    play.timeout = options.timeout;
    won[i] = policy::play_game(config, ctx, play).won ? 1 : 0;
  });

  std::vector<AlphaRow> table;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    AlphaRow row{cells[c].rows, cells[c].cols, cells[c].mineRatio, alphas.front(), -1.0};
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      std::size_t wins = 0;
      for (std::size_t g = 0; g < games; ++g) wins += won[c * perCell + a * games + g];
      const double ratio = games ? static_cast<double>(wins) / static_cast<double>(games) : 0.0;
      if (ratio > row.winRatio) {
        row.winRatio = ratio;
        row.bestAlpha = alphas[a];
      }
    }
    row.winRatio = std::max(row.winRatio, 0.0);
    table.push_back(row);
  }
  return table;
}

heuristics::AlphaModel fit_alpha(const std::vector<AlphaRow>& table) {
  if (table.size() < 4) throw std::domain_error("alpha regression needs at least 4 rows");
  const auto n = static_cast<Eigen::Index>(table.size());
  Eigen::MatrixXd X(n, 4);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = table[static_cast<std::size_t>(i)];
    X(i, 0) = r.rows;
    X(i, 1) = r.cols;
    X(i, 2) = r.mineRatio;
    X(i, 3) = 1.0;
    y(i) = r.bestAlpha;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < 4) {
    throw std::domain_error("alpha regression design matrix is singular (vary p, q and mine ratio)");
  }
  const Eigen::VectorXd theta = qr.solve(y);
  heuristics::AlphaModel m;
  for (int k = 0; k < 4; ++k) m.theta[static_cast<std::size_t>(k)] = theta(k);
  const double ssRes = (X * theta - y).squaredNorm();
  const double ssTot = (y.array() - y.mean()).square().sum();
  m.r2 = ssTot > 1e-300 ? 1.0 - ssRes / ssTot : (ssRes < 1e-18 ? 1.0 : 0.0);
  return m;
}

void write_alpha_table(std::ostream& out, const std::vector<AlphaRow>& table) {
  out << "p,q,mine_ratio,best_alpha,win_ratio\n";
  out.precision(17);
  for (const auto& r : table) {
    out << r.rows << ',' << r.cols << ',' << r.mineRatio << ',' << r.bestAlpha << ',' << r.winRatio
        << '\n';
  }
}

std::vector<AlphaRow> read_alpha_table(std::istream& in) {
  std::vector<AlphaRow> out;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (lineNo == 1 || line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    AlphaRow r;
    if (!(ss >> r.rows >> r.cols >> r.mineRatio >> r.bestAlpha >> r.winRatio)) {
      throw std::runtime_error("alpha table line " + std::to_string(lineNo) + " is malformed");
    }
    out.push_back(r);
  }
  return out;
}

double immediate_reward(int opened, int rows, int cols, int mines) {
  const int safe = rows * cols - mines;
  if (opened < 0 || opened > safe) throw std::invalid_argument("opened count out of range");
  return static_cast<double>(opened) / safe;
}

std::vector<double> discounted_returns(const std::vector<double>& rewards, double c) {
  std::vector<double> out(rewards.size(), 0.0);
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    double sum = 0.0;
    for (std::size_t k = t; k < rewards.size(); ++k) {
      sum += rewards[k] / (1.0 + c * static_cast<double>(k - t));
    }
    out[t] = sum;
  }
  return out;
}

double q_target(double reward, double gamma, double maxNextQ) { return reward + gamma * maxNextQ; }

namespace {

std::vector<QSample> q_samples_for(const std::vector<Job>& jobs, const ContextFactory& factory,
                                   const QCollectOptions& options) {
  return run_jobs<QSample>(jobs, options.workers, [&](const Job& job) {
    const auto config = config_of(job);
    auto ctx = factory(policy_seed(job.seedBase, job.cellIndex, job.gameIndex));
    ctx.sub = options.sub;
    std::vector<double> rewards;
    std::vector<std::pair<std::size_t, std::vector<double>>> pending;
    policy::PlayOptions play;
    play.timeout = options.timeout;
    play.observer = [&](const policy::StepInfo& step) {
      if (step.decision.probabilistic() && step.decision.snapshot) {
        const auto& snap = *step.decision.snapshot;
        const auto field = heuristics::score_field(step.before, snap.system, snap.P,
                                                   ctx.alpha_for(step.before), ctx.scoreOptions);
        pending.emplace_back(
            rewards.size(),
            heuristics::extract_substate(field, step.decision.uncovers.front(), options.sub).window);
      }
      rewards.push_back(immediate_reward(step.opened, config.rows, config.cols, config.mines));
    };
    policy::play_game(config, ctx, play);
    const auto returns = discounted_returns(rewards, options.discount);
    std::vector<QSample> out;
    for (auto& [t, window] : pending) out.push_back({std::move(window), returns[t]});
    return out;
  });
}

}  // namespace

std::vector<QSample> collect_q_samples(const SweepGrid& grid, const ContextFactory& factory,
                                       const QCollectOptions& options) {
  return q_samples_for(grid_jobs(grid), factory, options);
}

std::vector<QSample> collect_q_data(const SweepGrid& grid, const heuristics::AlphaModel& alpha,
                                    const QCollectOptions& options) {
  return collect_q_samples(
      grid,
      [alpha](std::uint64_t seed) { return policy::PolicyContext::score_manhattan(alpha, seed); },
      options);
}

void write_q_corpus(std::ostream& out, const std::vector<QSample>& samples) {
  out << "# msolver q corpus v1: discounted return then sub-state values\n";
  out.precision(17);
  for (const auto& s : samples) {
    out << s.discountedReward;
    for (double v : s.substate) out << ' ' << v;
    out << '\n';
  }
}

std::vector<QSample> read_q_corpus(std::istream& in) {
  std::vector<QSample> out;
  std::string line;
  std::size_t lineNo = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    QSample s;
    if (!(ss >> s.discountedReward)) {
      throw std::runtime_error("q corpus line " + std::to_string(lineNo) + ": bad reward");
    }
    double v;
    while (ss >> v) s.substate.push_back(v);
    if (width == 0) width = s.substate.size();
    if (s.substate.empty() || s.substate.size() != width) {
      throw std::runtime_error("q corpus line " + std::to_string(lineNo) + ": inconsistent width");
    }
    out.push_back(std::move(s));
  }
  return out;
}

QReport evaluate_qnet(const nn::MlpModel& model, const std::vector<QSample>& samples) {
  QReport r;
  r.heldOutSize = samples.size();
  if (samples.empty()) return r;
  double mean = 0.0;
  for (const auto& s : samples) mean += std::clamp(s.discountedReward, -kTargetClip, kTargetClip);
  mean /= static_cast<double>(samples.size());
  double mse = 0.0, base = 0.0;
  for (const auto& s : samples) {
    const double t = std::clamp(s.discountedReward, -kTargetClip, kTargetClip);
    const double y = model.forward(s.substate);
    mse += (y - t) * (y - t);
    base += (mean - t) * (mean - t);
  }
  r.heldOutMse = mse / static_cast<double>(samples.size());
  r.meanPredictorMse = base / static_cast<double>(samples.size());
  return r;
}

QReport train_qnet(const std::vector<QSample>& samples, nn::MlpModel& model,
                   const TrainOptions& options) {
  if (samples.empty()) throw std::invalid_argument("empty Q corpus");
  const std::size_t split = held_out_start(samples.size(), options.heldOutFraction);
  std::vector<const std::vector<double>*> inputs;
  std::vector<double> targets;
  double trainMean = 0.0;
  for (std::size_t i = 0; i < split; ++i) {
    inputs.push_back(&samples[i].substate);
    targets.push_back(std::clamp(samples[i].discountedReward, -kTargetClip, kTargetClip));
    trainMean += targets.back();
  }
  trainMean /= static_cast<double>(split);
  Rng rng(options.seed);
  double trainLoss = 0.0;
  for (int e = 0; e < options.epochs; ++e) {
    trainLoss = train_pass(model, inputs, targets, options.batchSize, rng,
                           nn::Loss::MeanSquaredError, nn::Optimizer::RmsProp);
  }
  std::vector<QSample> held(samples.begin() + static_cast<std::ptrdiff_t>(split), samples.end());
  QReport r = evaluate_qnet(model, held);
  // The constant baseline is fitted on the training part only.
  double base = 0.0;
  for (const auto& s : held) {
    const double t = std::clamp(s.discountedReward, -kTargetClip, kTargetClip);
    base += (trainMean - t) * (trainMean - t);
  }
  if (!held.empty()) r.meanPredictorMse = base / static_cast<double>(held.size());
  r.trainLoss = trainLoss;
  r.trainSize = split;
  return r;
}

void train_qnet_iterative(nn::MlpModel& model, const QIterativeOptions& options) {
  if (options.episodes < 1) throw std::invalid_argument("episodes must be at least 1");
  for (int e = 0; e < options.episodes; ++e) {
    auto snapshot = std::make_shared<const nn::MlpModel>(model);
    const auto alpha = options.alpha;
    const ContextFactory factory = [snapshot, alpha](std::uint64_t seed) {
      policy::Models models;
      models.qnet = snapshot;
      models.alpha = alpha;
      return policy::PolicyContext::make(policy::VersionId::V6_0, models, seed);
    };
    SweepGrid grid = options.grid;
    grid.seedBase = derive_seed(options.grid.seedBase, 0xE915DE, static_cast<std::uint64_t>(e));
    const auto samples = collect_q_samples(grid, factory, options.collect);
    double loss = 0.0;
    if (!samples.empty()) {
      std::vector<const std::vector<double>*> inputs;
      std::vector<double> targets;
      for (const auto& s : samples) {
        inputs.push_back(&s.substate);
        targets.push_back(std::clamp(s.discountedReward, -kTargetClip, kTargetClip));
      }
      Rng rng(derive_seed(options.train.seed, static_cast<std::uint64_t>(e)));
      loss = train_pass(model, inputs, targets, options.train.batchSize, rng,
                        nn::Loss::MeanSquaredError, nn::Optimizer::RmsProp);
    }
    if (options.checkpoint) nn::save_model(model, *options.checkpoint);
    if (options.progress) options.progress(e, samples.size(), loss);
  }
}

}  // namespace msolver::training
