#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "msolver/csp.hpp"
#include "msolver/engine.hpp"
#include "msolver/rng.hpp"

namespace msolver::heuristics {

using engine::Coord;

inline constexpr double kBandWidth = 0.05;
// Absorbs rounding when the band is evaluated on transformed values.
inline constexpr double kBandSlack = 1e-9;
inline constexpr double kSentinel = -1.0;
inline constexpr double kUnknownProbability = 0.5;

int manhattan_edge_distance(Coord cell, int rows, int cols);

struct BandMember {
  std::size_t index = 0;  // position in the input vectors
  Coord cell;
  double value = 0.0;
};
using CandidateBand = std::vector<BandMember>;

/// Members whose value is within kBandWidth of the minimum.
CandidateBand candidate_band(std::span<const double> values, std::span<const Coord> coords);

/// Index of the band member closest to the board edge; ties are broken
/// uniformly with rng. `values` are lower-is-better (mine probabilities).
std::size_t pick_manhattan_index(std::span<const double> values, std::span<const Coord> coords,
                                 int rows, int cols, Rng& rng);

Coord pick_manhattan(std::span<const double> mineProbabilities, std::span<const Coord> coords,
                     int rows, int cols, Rng& rng);

enum class Position { Corner, Edge, Interior };
Position classify(Coord cell, int rows, int cols);

/// Chance that a freshly opened cell has no mined neighbour:
/// 1 - ((mines - flags) / coveredLeft)^e with e = 4, 6, 8 for corner, edge
/// and interior cells. Throws std::invalid_argument when coveredLeft is 0.
double location_score(Coord cell, int rows, int cols, int mines, int flags, int coveredLeft);

/// alpha * (1 - P_mine) + (1 - alpha) * locScore. Higher is better.
double combined_score(double mineProbability, double locScore, double alpha);

/// alpha = theta1*p + theta2*q + theta3*(n/(p*q)) + theta4, clamped to [0, 1].
struct AlphaModel {
  std::array<double, 4> theta{0.0, 0.0, 0.0, 1.0};
  double r2 = 0.0;

  double predict(int rows, int cols, double mineRatio) const;
};

double predict_alpha(const AlphaModel& model, int rows, int cols, double mineRatio);

void save_alpha_model(const AlphaModel& model, const std::filesystem::path& path);
AlphaModel load_alpha_model(const std::filesystem::path& path);

struct ScoreOptions {
  // Off-frontier cells use the remaining mine density instead of 0.5.
  bool globalDensity = false;
};

/// Per-cell mine probability for every board cell: frontier cells take
/// their entry of P, other covered cells 0.5 (or the remaining density),
/// non-covered cells the sentinel.
std::vector<double> cell_probabilities(const engine::BoardView& view,
                                       const csp::ConstraintSystem& system,
                                       std::span<const double> P, ScoreOptions options = {});

struct ScoreField {
  int rows = 0;
  int cols = 0;
  double alpha = 1.0;
  std::vector<double> scores;

  double at(Coord c) const { return scores[static_cast<std::size_t>(c.row * cols + c.col)]; }
};

ScoreField score_field(const engine::BoardView& view, const csp::ConstraintSystem& system,
                       std::span<const double> P, double alpha, ScoreOptions options = {});

struct SubState {
  int sub = 3;
  std::vector<double> window;  // row-major sub x sub
};

/// sub x sub window of scores centred on `action`; off-board positions
/// carry the sentinel. sub must be odd.
SubState extract_substate(const ScoreField& field, Coord action, int sub = 3);

struct FeatureVector {
  int boardRows = 0;
  int boardCols = 0;
  int mineCount = 0;
  Coord cell;
  double mineProbability = kUnknownProbability;
  int frontierSize = 0;
  int minProbIndex = -1;
  double locationScore = 0.0;

  static constexpr std::size_t kWidth = 9;
  /// Flattened, fixed-scale network input.
  std::vector<double> to_input() const;
};

FeatureVector featurize(const engine::BoardView& view, const csp::ConstraintSystem& system,
                        std::span<const double> P, Coord action);

}  // namespace msolver::heuristics
