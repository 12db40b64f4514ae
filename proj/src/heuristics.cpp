#include "msolver/heuristics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "msolver/binary_io.hpp"

namespace msolver::heuristics {

int manhattan_edge_distance(Coord cell, int rows, int cols) {
  return std::min({cell.row, cell.col, rows - 1 - cell.row, cols - 1 - cell.col});
}

CandidateBand candidate_band(std::span<const double> values, std::span<const Coord> coords) {
  CandidateBand band;
  if (values.empty()) return band;
  const double lo = *std::min_element(values.begin(), values.end());
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k] <= lo + kBandWidth + kBandSlack) band.push_back({k, coords[k], values[k]});
  }
  return band;
}

std::size_t pick_manhattan_index(std::span<const double> values, std::span<const Coord> coords,
                                 int rows, int cols, Rng& rng) {
  if (values.empty()) throw std::invalid_argument("pick_manhattan: empty probability vector");
  const auto band = candidate_band(values, coords);
  int best = std::numeric_limits<int>::max();
  std::vector<std::size_t> ties;
  for (const auto& m : band) {
    const int d = manhattan_edge_distance(m.cell, rows, cols);
    if (d < best) {
      best = d;
      ties.clear();
    }
    if (d == best) ties.push_back(m.index);
  }
  if (ties.size() == 1) return ties.front();
  return ties[static_cast<std::size_t>(rng.below(ties.size()))];
}

Coord pick_manhattan(std::span<const double> mineProbabilities, std::span<const Coord> coords,
                     int rows, int cols, Rng& rng) {
  return coords[pick_manhattan_index(mineProbabilities, coords, rows, cols, rng)];
}

Position classify(Coord cell, int rows, int cols) {
  const bool rowBorder = cell.row == 0 || cell.row == rows - 1;
  const bool colBorder = cell.col == 0 || cell.col == cols - 1;
  if (rowBorder && colBorder) return Position::Corner;
  if (rowBorder || colBorder) return Position::Edge;
  return Position::Interior;
}

double location_score(Coord cell, int rows, int cols, int mines, int flags, int coveredLeft) {
  if (coveredLeft <= 0) throw std::invalid_argument("location_score: no covered cells left");
  const double density = static_cast<double>(mines - flags) / coveredLeft;
  int exponent = 8;
  switch (classify(cell, rows, cols)) {
    case Position::Corner: exponent = 4; break;
    case Position::Edge: exponent = 6; break;
    case Position::Interior: exponent = 8; break;
  }
  return 1.0 - std::pow(density, exponent);
}

double combined_score(double mineProbability, double locScore, double alpha) {
  return alpha * (1.0 - mineProbability) + (1.0 - alpha) * locScore;
}

double AlphaModel::predict(int rows, int cols, double mineRatio) const {
  const double raw = theta[0] * rows + theta[1] * cols + theta[2] * mineRatio + theta[3];
  return std::clamp(raw, 0.0, 1.0);
}

double predict_alpha(const AlphaModel& model, int rows, int cols, double mineRatio) {
  return model.predict(rows, cols, mineRatio);
}

namespace {
constexpr std::string_view kAlphaMagic = "MSAL";
constexpr std::uint32_t kAlphaVersion = 1;
constexpr std::array<std::string_view, 5> kAlphaNames{"theta1", "theta2", "theta3", "theta4", "r2"};
}  // namespace

void save_alpha_model(const AlphaModel& model, const std::filesystem::path& path) {
  ByteWriter w;
  w.bytes(kAlphaMagic);
  w.u32(kAlphaVersion);
  w.u32(static_cast<std::uint32_t>(kAlphaNames.size()));
  for (std::size_t k = 0; k < kAlphaNames.size(); ++k) {
    w.u32(static_cast<std::uint32_t>(kAlphaNames[k].size()));
    w.bytes(kAlphaNames[k]);
    w.f64(k < 4 ? model.theta[k] : model.r2);
  }
  write_file(path, w.data());
}

AlphaModel load_alpha_model(const std::filesystem::path& path) {
  ByteReader r(read_file(path));
  if (r.bytes(kAlphaMagic.size()) != kAlphaMagic) throw FormatError("bad alpha-model magic", 0);
  const std::size_t versionAt = r.offset();
  if (const auto v = r.u32(); v != kAlphaVersion) {
    throw UnsupportedVersionError("unsupported alpha-model version " + std::to_string(v), versionAt);
  }
  const std::size_t countAt = r.offset();
  if (r.u32() != kAlphaNames.size()) throw FormatError("unexpected coefficient count", countAt);
  AlphaModel m;
  for (std::size_t k = 0; k < kAlphaNames.size(); ++k) {
    const std::size_t at = r.offset();
    const auto len = r.u32();
    if (r.bytes(len) != kAlphaNames[k]) throw FormatError("unexpected coefficient name", at);
    const double v = r.f64();
    if (k < 4) m.theta[k] = v;
    else m.r2 = v;
  }
  if (!r.at_end()) throw FormatError("trailing bytes", r.offset());
  return m;
}

std::vector<double> cell_probabilities(const engine::BoardView& view,
                                       const csp::ConstraintSystem& system,
                                       std::span<const double> P, ScoreOptions options) {
  const auto total = static_cast<std::size_t>(view.rows * view.cols);
  std::vector<double> prob(total, kSentinel);
  std::vector<std::uint8_t> onFrontier(total, 0);
  double frontierMines = 0.0;
  for (std::size_t k = 0; k < system.cols(); ++k) {
    const auto idx = static_cast<std::size_t>(view.index(system.variables[k].cell));
    prob[idx] = P[k];
    onFrontier[idx] = 1;
    frontierMines += P[k];
  }
  double offValue = kUnknownProbability;
  if (options.globalDensity) {
    int offCount = 0;
    for (std::size_t i = 0; i < total; ++i) offCount += view.cells[i].covered() && !onFrontier[i];
    if (offCount > 0) {
      const double left = view.mines - view.flagsUsed - frontierMines;
      offValue = std::clamp(left / offCount, 0.0, 1.0);
    }
  }
  for (std::size_t i = 0; i < total; ++i) {
    if (view.cells[i].covered() && !onFrontier[i]) prob[i] = offValue;
  }
  return prob;
}

ScoreField score_field(const engine::BoardView& view, const csp::ConstraintSystem& system,
                       std::span<const double> P, double alpha, ScoreOptions options) {
  ScoreField field{view.rows, view.cols, alpha, cell_probabilities(view, system, P, options)};
  for (std::size_t i = 0; i < field.scores.size(); ++i) {
    if (!view.cells[i].covered()) {
      field.scores[i] = kSentinel;
      continue;
    }
    const Coord c = view.coord(static_cast<int>(i));
    const double loc =
        location_score(c, view.rows, view.cols, view.mines, view.flagsUsed, view.coveredLeft);
    field.scores[i] = combined_score(field.scores[i], loc, alpha);
  }
  return field;
}

SubState extract_substate(const ScoreField& field, Coord action, int sub) {
  if (sub < 1 || sub % 2 == 0) throw std::invalid_argument("sub-state size must be odd");
  SubState s{sub, {}};
  s.window.reserve(static_cast<std::size_t>(sub * sub));
  const int half = sub / 2;
  for (int dr = -half; dr <= half; ++dr) {
    for (int dc = -half; dc <= half; ++dc) {
      const Coord c{action.row + dr, action.col + dc};
      const bool on = c.row >= 0 && c.col >= 0 && c.row < field.rows && c.col < field.cols;
      s.window.push_back(on ? field.at(c) : kSentinel);
    }
  }
  return s;
}

std::vector<double> FeatureVector::to_input() const {
  return {boardRows / 10.0,
          boardCols / 10.0,
          mineCount / 100.0,
          cell.row / 10.0,
          cell.col / 10.0,
          mineProbability,
          frontierSize / 50.0,
          (minProbIndex + 1) / 50.0,
          locationScore};
}

FeatureVector featurize(const engine::BoardView& view, const csp::ConstraintSystem& system,
                        std::span<const double> P, Coord action) {
  FeatureVector f;
  f.boardRows = view.rows;
  f.boardCols = view.cols;
  f.mineCount = view.mines;
  f.cell = action;
  f.frontierSize = static_cast<int>(system.cols());
  for (std::size_t k = 0; k < system.cols(); ++k) {
    if (system.variables[k].cell == action) f.mineProbability = P[k];
    if (f.minProbIndex == -1 || P[k] < P[static_cast<std::size_t>(f.minProbIndex)]) {
      f.minProbIndex = static_cast<int>(k);
    }
  }
  f.locationScore =
      location_score(action, view.rows, view.cols, view.mines, view.flagsUsed, view.coveredLeft);
  return f;
}

}  // namespace msolver::heuristics
