#include "msolver/policies.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <stdexcept>

namespace msolver::policy {

namespace {

struct VersionInfo {
  VersionId id;
  const char* name;
  Pipeline pipeline;
};

constexpr std::array<VersionInfo, 11> kRegistry{{
    {VersionId::V1_0, "1.0", {false, Enumerator::Backtracking, false, Selector::ArgminP}},
    {VersionId::V2_0, "2.0", {true, Enumerator::Backtracking, false, Selector::ArgminP}},
    {VersionId::V2_5, "2.5", {true, Enumerator::Backtracking, true, Selector::ArgminP}},
    {VersionId::V3_0, "3.0", {true, Enumerator::DssCsp, false, Selector::ArgminP}},
    {VersionId::V3_5, "3.5", {true, Enumerator::DssCsp, true, Selector::ArgminP}},
    {VersionId::V4_0, "4.0", {true, Enumerator::DssCsp, false, Selector::Manhattan}},
    {VersionId::V4_5, "4.5", {true, Enumerator::DssCsp, true, Selector::Manhattan}},
    {VersionId::V5_0, "5.0", {true, Enumerator::DssCsp, true, Selector::Classifier}},
    {VersionId::V5_5, "5.5", {true, Enumerator::DssCsp, true, Selector::Classifier}},
    {VersionId::V6_0, "6.0", {true, Enumerator::DssCsp, true, Selector::QValue}},
    {VersionId::V6_5, "6.5", {true, Enumerator::DssCsp, true, Selector::QValue}},
}};

const VersionInfo& info(VersionId v) {
  for (const auto& e : kRegistry) {
    if (e.id == v) return e;
  }
  throw std::invalid_argument("unknown version");
}

}  // namespace

std::string to_string(VersionId v) { return info(v).name; }

VersionId parse_version(std::string_view text) {
  std::string s(text);
  if (!s.empty() && (s[0] == 'v' || s[0] == 'V')) s.erase(0, 1);
  std::replace(s.begin(), s.end(), '_', '.');
  for (const auto& e : kRegistry) {
    if (s == e.name) return e.id;
  }
  throw std::invalid_argument("unknown solver version '" + std::string(text) + "'");
}

const std::vector<VersionId>& all_versions() {
  static const std::vector<VersionId> all = [] {
    std::vector<VersionId> v;
    for (const auto& e : kRegistry) v.push_back(e.id);
    return v;
  }();
  return all;
}

Pipeline pipeline_for(VersionId v) { return info(v).pipeline; }

csp::TraversalLimits limits_for(const Pipeline& p) {
  if (!p.capped) return csp::TraversalLimits::uncapped();
  return p.enumerator == Enumerator::DssCsp ? csp::TraversalLimits::dsscsp_capped()
                                            : csp::TraversalLimits::backtracking_capped();
}

bool needs_classifier(VersionId v) { return pipeline_for(v).selector == Selector::Classifier; }
bool needs_qnet(VersionId v) { return pipeline_for(v).selector == Selector::QValue; }

std::string to_string(Rationale r) {
  switch (r) {
    case Rationale::Deterministic: return "Deterministic";
    case Rationale::ProbabilityMin: return "ProbabilityMin";
    case Rationale::Manhattan: return "Manhattan";
    case Rationale::Classifier: return "Classifier";
    case Rationale::QValue: return "QValue";
    case Rationale::FirstMove: return "FirstMove";
  }
  return "?";
}

PolicyContext PolicyContext::make(VersionId version, Models models, std::uint64_t seed) {
  if (needs_classifier(version) && !models.classifier) {
    throw MissingModelError("version " + to_string(version) + " needs a classifier model");
  }
  if (needs_qnet(version) && (!models.qnet || !models.alpha)) {
    throw MissingModelError("version " + to_string(version) + " needs a Q-network and alpha model");
  }
  PolicyContext ctx;
  ctx.version = version;
  ctx.pipeline = pipeline_for(version);
  ctx.limits = limits_for(ctx.pipeline);
  ctx.models = std::move(models);
  ctx.rng = Rng(seed);
  return ctx;
}

PolicyContext PolicyContext::score_manhattan(double alpha, std::uint64_t seed) {
  PolicyContext ctx = make(VersionId::V4_5, {}, seed);
  ctx.pipeline.selector = Selector::ScoreManhattan;
  ctx.fixedAlpha = alpha;
  return ctx;
}

PolicyContext PolicyContext::score_manhattan(const heuristics::AlphaModel& alpha,
                                             std::uint64_t seed) {
  PolicyContext ctx = make(VersionId::V4_5, {}, seed);
  ctx.pipeline.selector = Selector::ScoreManhattan;
  ctx.models.alpha = alpha;
  return ctx;
}

double PolicyContext::alpha_for(const engine::BoardView& view) const {
  if (fixedAlpha) return *fixedAlpha;
  if (!models.alpha) throw MissingModelError("no alpha model");
  const double ratio = static_cast<double>(view.mines) / (view.rows * view.cols);
  return models.alpha->predict(view.rows, view.cols, ratio);
}

namespace {

MoveDecision unflag_latest(const engine::BoardView& view, const csp::ContradictionError& why) {
  if (view.flagOrder.empty()) throw why;
  MoveDecision d;
  d.unflags.push_back(view.flagOrder.back());
  d.rationale = Rationale::Deterministic;
  return d;
}

std::vector<Coord> coords_of(const csp::ConstraintSystem& s) {
  std::vector<Coord> c;
  c.reserve(s.cols());
  for (const auto& v : s.variables) c.push_back(v.cell);
  return c;
}

Coord first_covered(const engine::BoardView& view) {
  for (int i = 0; i < view.rows * view.cols; ++i) {
    if (view.cells[static_cast<std::size_t>(i)].covered()) return view.coord(i);
  }
  throw std::logic_error("no covered cell left to choose");
}

Coord classifier_choice(const engine::BoardView& view, const csp::ConstraintSystem& system,
                        std::span<const double> P, const nn::MlpModel& model) {
  double best = -std::numeric_limits<double>::infinity();
  Coord choice{-1, -1};
  for (int i = 0; i < view.rows * view.cols; ++i) {
    if (!view.cells[static_cast<std::size_t>(i)].covered()) continue;
    const Coord c = view.coord(i);
    const double y = model.forward(heuristics::featurize(view, system, P, c).to_input());
    if (y > best) {
      best = y;
      choice = c;
    }
  }
  return choice;
}

}  // namespace

MoveDecision decide(const engine::BoardView& view, PolicyContext& ctx,
                    std::optional<std::chrono::steady_clock::time_point> deadline) {
  if (view.status != engine::GameStatus::InProgress) {
    throw std::logic_error("decide called on a finished game");
  }
  MoveDecision d;
  if (!view.firstMoveDone) {
    d.uncovers.push_back({(view.rows - 1) / 2, (view.cols - 1) / 2});
    d.rationale = Rationale::FirstMove;
    return d;
  }
  if (ctx.moveTimeout.count() > 0) {
    const auto moveDeadline = std::chrono::steady_clock::now() + ctx.moveTimeout;
    deadline = deadline ? std::min(*deadline, moveDeadline) : moveDeadline;
  }

  csp::ConstraintSystem system;
  try {
    system = csp::extract_constraints(view);
  } catch (const csp::ContradictionError& e) {
    return unflag_latest(view, e);
  }
  const Pipeline& pipe = ctx.pipeline;

  if (system.empty()) {
    d.snapshot = ProbabilitySnapshot{system, {}};
    if (pipe.selector == Selector::Classifier) {
      d.uncovers.push_back(classifier_choice(view, system, {}, *ctx.models.classifier));
      d.rationale = Rationale::Classifier;
    } else {
      d.uncovers.push_back(first_covered(view));
      d.rationale = Rationale::ProbabilityMin;
    }
    return d;
  }

  if (pipe.dssFirst) {
    auto reduced = system;
    csp::DeterminedList determined;
    try {
      determined = csp::dss(reduced);
    } catch (const csp::ContradictionError& e) {
      return unflag_latest(view, e);
    }
    if (!determined.empty()) {
      for (const auto& det : determined) {
        const Coord c = system.variables[static_cast<std::size_t>(det.variable)].cell;
        (det.value == 0 ? d.uncovers : d.flags).push_back(c);
      }
      d.rationale = Rationale::Deterministic;
      return d;
    }
  }

  auto limits = ctx.limits;
  limits.deadline = deadline;
  const csp::SolutionSet solutions = pipe.enumerator == Enumerator::DssCsp
                                         ? csp::enumerate_dsscsp(system, limits, ctx.rng)
                                         : csp::enumerate_backtracking(system, limits);
  d.truncated = solutions.truncated;
  std::vector<double> P;
  if (solutions.count() > 0) {
    P = csp::probabilities(solutions);
  } else if (solutions.truncated) {
    P.assign(system.cols(), heuristics::kUnknownProbability);
  } else {
    return unflag_latest(view, csp::ContradictionError("frontier has no consistent assignment"));
  }
  const auto coords = coords_of(system);

  switch (pipe.selector) {
    case Selector::ArgminP: {
      const auto it = std::min_element(P.begin(), P.end());
      d.uncovers.push_back(coords[static_cast<std::size_t>(it - P.begin())]);
      d.rationale = Rationale::ProbabilityMin;
      break;
    }
    case Selector::Manhattan: {
      d.uncovers.push_back(heuristics::pick_manhattan(P, coords, view.rows, view.cols, ctx.rng));
      d.rationale = Rationale::Manhattan;
      break;
    }
    case Selector::Classifier: {
      d.uncovers.push_back(classifier_choice(view, system, P, *ctx.models.classifier));
      d.rationale = Rationale::Classifier;
      break;
    }
    case Selector::ScoreManhattan:
    case Selector::QValue: {
      const auto field =
          heuristics::score_field(view, system, P, ctx.alpha_for(view), ctx.scoreOptions);
      std::vector<double> badness(coords.size());
      for (std::size_t k = 0; k < coords.size(); ++k) badness[k] = -field.at(coords[k]);
      if (pipe.selector == Selector::ScoreManhattan) {
        d.uncovers.push_back(
            coords[heuristics::pick_manhattan_index(badness, coords, view.rows, view.cols, ctx.rng)]);
        d.rationale = Rationale::Manhattan;
        break;
      }
      double best = -std::numeric_limits<double>::infinity();
      Coord choice = coords.front();
      for (const auto& member : heuristics::candidate_band(badness, coords)) {
        const auto s = heuristics::extract_substate(field, member.cell, ctx.sub);
        const double q = ctx.models.qnet->forward(s.window);
        if (q > best) {
          best = q;
          choice = member.cell;
        }
      }
      d.uncovers.push_back(choice);
      d.rationale = Rationale::QValue;
      break;
    }
  }
  d.snapshot = ProbabilitySnapshot{std::move(system), std::move(P)};
  return d;
}

int apply(engine::Game& game, const MoveDecision& decision) {
  for (const auto& c : decision.unflags) {
    if (game.view().at(c).flagged()) game.toggle_flag(c);
  }
  for (const auto& c : decision.flags) {
    if (game.view().at(c).covered()) game.toggle_flag(c);
  }
  int opened = 0;
  for (const auto& c : decision.uncovers) {
    if (game.finished()) break;
    if (game.view().at(c).covered()) opened += game.uncover(c);
  }
  return opened;
}

GameResult play_game(const engine::BoardConfig& config, PolicyContext& ctx,
                     const PlayOptions& options) {
  using Clock = std::chrono::steady_clock;
  engine::Game game(config);
  GameResult result;
  const auto start = Clock::now();
  std::optional<Clock::time_point> deadline;
  if (options.timeout.count() > 0) deadline = start + options.timeout;

  while (!game.finished()) {
    if (deadline && Clock::now() >= *deadline) {
      result.timedOut = true;
      break;
    }
    const auto moveStart = Clock::now();
    const engine::BoardView before = game.view();
    const MoveDecision decision = decide(before, ctx, deadline);
    const int opened = apply(game, decision);
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - moveStart).count();
    ++result.moves;
    result.timings.push_back({decision.rationale, ms});
    if (options.observer) options.observer(StepInfo{before, decision, game, opened, ms});
  }
  result.elapsedMs = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  result.won = game.status() == engine::GameStatus::Won && !result.timedOut;
  return result;
}

}  // namespace msolver::policy
