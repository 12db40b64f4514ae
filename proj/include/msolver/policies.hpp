#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "msolver/csp.hpp"
#include "msolver/engine.hpp"
#include "msolver/heuristics.hpp"
#include "msolver/neural.hpp"
#include "msolver/rng.hpp"

namespace msolver::policy {

using engine::Coord;

enum class VersionId { V1_0, V2_0, V2_5, V3_0, V3_5, V4_0, V4_5, V5_0, V5_5, V6_0, V6_5 };

std::string to_string(VersionId v);
/// Accepts "3.0", "v3.0" or "V3_0". Throws std::invalid_argument.
VersionId parse_version(std::string_view text);
const std::vector<VersionId>& all_versions();

enum class Enumerator { Backtracking, DssCsp };
enum class Selector { ArgminP, Manhattan, Classifier, QValue, ScoreManhattan };

/// How a version turns a board into a move.
struct Pipeline {
  bool dssFirst = true;
  Enumerator enumerator = Enumerator::DssCsp;
  bool capped = false;
  Selector selector = Selector::ArgminP;
};

Pipeline pipeline_for(VersionId v);
csp::TraversalLimits limits_for(const Pipeline& p);
bool needs_classifier(VersionId v);
bool needs_qnet(VersionId v);

enum class Rationale { Deterministic, ProbabilityMin, Manhattan, Classifier, QValue, FirstMove };
std::string to_string(Rationale r);

struct ProbabilitySnapshot {
  csp::ConstraintSystem system;  // as extracted, before DSS
  std::vector<double> P;         // one entry per system variable
};

struct MoveDecision {
  std::vector<Coord> flags;
  std::vector<Coord> uncovers;
  std::vector<Coord> unflags;  // only when the flags contradict the numbers
  Rationale rationale = Rationale::FirstMove;
  std::optional<ProbabilitySnapshot> snapshot;
  bool truncated = false;  // enumeration stopped at a cap or deadline

  bool probabilistic() const {
    return rationale != Rationale::Deterministic && rationale != Rationale::FirstMove;
  }
};

struct Models {
  std::shared_ptr<const nn::MlpModel> classifier;
  std::shared_ptr<const nn::MlpModel> qnet;
  std::optional<heuristics::AlphaModel> alpha;
};

class MissingModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PolicyContext {
  VersionId version = VersionId::V3_0;
  Pipeline pipeline;
  csp::TraversalLimits limits;
  Models models;
  Rng rng;
  std::chrono::milliseconds moveTimeout{0};  // 0 = none
  std::optional<double> fixedAlpha;          // overrides models.alpha
  int sub = 3;
  heuristics::ScoreOptions scoreOptions;

  /// Validates that learned versions have their models.
  static PolicyContext make(VersionId version, Models models, std::uint64_t seed);
  /// Manhattan selection over combined scores, the base policy for the
  /// alpha sweep and Q-data collection. Uses the limited DSScsp traversal.
  static PolicyContext score_manhattan(double alpha, std::uint64_t seed);
  static PolicyContext score_manhattan(const heuristics::AlphaModel& alpha, std::uint64_t seed);

  double alpha_for(const engine::BoardView& view) const;
};

/// One move from the visible board only.
MoveDecision decide(const engine::BoardView& view, PolicyContext& ctx,
                    std::optional<std::chrono::steady_clock::time_point> deadline = std::nullopt);

struct StepInfo {
  const engine::BoardView& before;
  const MoveDecision& decision;
  const engine::Game& game;  // after the move
  int opened = 0;
  double elapsedMs = 0.0;
};
using StepObserver = std::function<void(const StepInfo&)>;

struct MoveTiming {
  Rationale rationale;
  double ms = 0.0;
};

struct GameResult {
  bool won = false;
  int moves = 0;
  double elapsedMs = 0.0;
  bool timedOut = false;
  std::vector<MoveTiming> timings;
};

struct PlayOptions {
  std::chrono::milliseconds timeout{5000};  // 0 = none
  StepObserver observer;
};

/// Applies a decision; returns the number of cells opened.
int apply(engine::Game& game, const MoveDecision& decision);

GameResult play_game(const engine::BoardConfig& config, PolicyContext& ctx,
                     const PlayOptions& options = {});

}  // namespace msolver::policy
