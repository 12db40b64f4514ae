#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msolver/parallel.hpp"
#include "msolver/policies.hpp"
#include "msolver/training.hpp"

namespace msolver::bench {

using policy::VersionId;

struct BenchSpec {
  std::vector<VersionId> versions{VersionId::V3_0};
  std::vector<int> boardSizes{9};
  std::vector<double> dimensionRatios{1.0};
  std::vector<double> mineRatios{10.0 / 81.0};
  int gamesPerCell = 100;
  std::chrono::milliseconds timeout{5000};
  std::uint64_t seedBase = 1;
  std::optional<std::filesystem::path> outputPath;
  unsigned workers = default_workers();
  // When false, elapsed times are written as 0 so the CSV depends on seeds only.
  bool recordTiming = true;

  /// Throws std::invalid_argument.
  void validate() const;
  training::SweepGrid grid() const;
};

BenchSpec preset_beginner();
BenchSpec preset_paper53();
/// "beginner" or "paper53"; throws std::invalid_argument otherwise.
BenchSpec preset(const std::string& name);

/// Plain key = value text, '#' comments. Keys: versions, board_sizes,
/// dimension_ratios, mine_ratios, games, timeout_ms, seed, out, workers,
/// timing (on/off). Unknown keys are an error.
BenchSpec parse_spec(std::istream& in);
BenchSpec load_spec(const std::filesystem::path& path);

struct BenchRow {
  std::string version;
  int p = 0;
  int q = 0;
  int n = 0;
  int games = 0;
  int wins = 0;
  int timeouts = 0;
  double meanMoves = 0.0;
  double meanElapsedMs = 0.0;
  double winRatio = 0.0;
  // Not part of the CSV.
  double dimensionRatio = 1.0;
  double mineRatio = 0.0;
  std::string error;  // non-empty on a skipped cell
};

inline constexpr const char* kCsvHeader =
    "version,p,q,n,games,wins,timeouts,mean_moves,mean_elapsed_ms,win_ratio";

/// Models looked up by the learned versions. Missing entries make the
/// corresponding cells error rows.
struct ModelSet {
  std::shared_ptr<const nn::MlpModel> classifierSingle;  // 5.0
  std::shared_ptr<const nn::MlpModel> classifierIter;    // 5.5
  std::shared_ptr<const nn::MlpModel> qnetSingle;        // 6.5
  std::shared_ptr<const nn::MlpModel> qnetIter;          // 6.0
  std::optional<heuristics::AlphaModel> alpha;

  /// Loads whichever of classifier_single.mlp, classifier_iter.mlp,
  /// qnet_single.mlp, qnet_iter.mlp and alpha.bin exist in `dir`.
  static ModelSet load(const std::filesystem::path& dir);
  /// Throws policy::MissingModelError when `v` lacks a model.
  policy::Models for_version(VersionId v) const;
};

inline constexpr const char* kClassifierSingleFile = "classifier_single.mlp";
inline constexpr const char* kClassifierIterFile = "classifier_iter.mlp";
inline constexpr const char* kQnetSingleFile = "qnet_single.mlp";
inline constexpr const char* kQnetIterFile = "qnet_iter.mlp";
inline constexpr const char* kAlphaFile = "alpha.bin";

/// Plays `games` seeded games of one version on one board. Boards depend on
/// (seedBase, cellIndex, game) only, so versions see the same boards.
std::vector<policy::GameResult> play_cell(VersionId version, const policy::Models& models,
                                          const training::SweepGrid::Cell& cell,
                                          std::size_t cellIndex, int games,
                                          std::uint64_t seedBase,
                                          std::chrono::milliseconds timeout, unsigned workers);

BenchRow summarize(VersionId version, const training::SweepGrid::Cell& cell,
                   const std::vector<policy::GameResult>& results, bool recordTiming = true);

/// Rows ordered by version then cell. Writes the CSV when outputPath is set.
std::vector<BenchRow> run_bench(const BenchSpec& spec, const ModelSet& models);

void write_csv(std::ostream& out, const std::vector<BenchRow>& rows);
std::string to_csv(const std::vector<BenchRow>& rows);
/// Throws std::runtime_error on a bad header or malformed line.
std::vector<BenchRow> read_csv(std::istream& in);

enum class GroupBy { MineRatio, Blocks, DimRatio };

struct GroupSummary {
  std::string version;
  double key = 0.0;
  int rows = 0;
  int games = 0;
  int wins = 0;
  double meanWinRatio = 0.0;  // unweighted mean over rows
};

/// Groups by (version, key); error rows are ignored. Throws
/// std::invalid_argument on empty input.
std::vector<GroupSummary> aggregate(const std::vector<BenchRow>& rows, GroupBy by);
void write_summary_csv(std::ostream& out, const std::vector<GroupSummary>& groups, GroupBy by);

/// Versions 2.0 to 6.5 on 9x9 with 10 mines.
std::vector<BenchRow> table4(int games, const ModelSet& models, std::uint64_t seedBase = 1,
                             unsigned workers = default_workers(),
                             std::chrono::milliseconds timeout = std::chrono::milliseconds{5000});

}  // namespace msolver::bench
