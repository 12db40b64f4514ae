#include <doctest.h>

#include <memory>

#include "msolver/policies.hpp"

using namespace msolver;
using namespace msolver::policy;
using engine::Coord;
using engine::Game;

namespace {

PolicyContext ctx_for(VersionId v, std::uint64_t seed = 1) { return PolicyContext::make(v, {}, seed); }

Models toy_models() {
  Models m;
  m.classifier = std::make_shared<const nn::MlpModel>(nn::build_classifier(9, 1));
  m.qnet = std::make_shared<const nn::MlpModel>(nn::build_qnet(3, 1));
  m.alpha = heuristics::AlphaModel{};
  return m;
}

}  // namespace

TEST_SUITE("policies") {

TEST_CASE("registry") {
  CHECK(all_versions().size() == 11);
  CHECK(parse_version("3.0") == VersionId::V3_0);
  CHECK(parse_version("v6.5") == VersionId::V6_5);
  CHECK(parse_version("V2_5") == VersionId::V2_5);
  CHECK_THROWS_AS(parse_version("7.0"), std::invalid_argument);
  for (auto v : all_versions()) CHECK(parse_version(to_string(v)) == v);

  CHECK_FALSE(pipeline_for(VersionId::V1_0).dssFirst);
  CHECK(pipeline_for(VersionId::V2_0).enumerator == Enumerator::Backtracking);
  CHECK(pipeline_for(VersionId::V2_5).capped);
  CHECK(pipeline_for(VersionId::V3_0).enumerator == Enumerator::DssCsp);
  CHECK_FALSE(pipeline_for(VersionId::V3_0).capped);
  CHECK(pipeline_for(VersionId::V3_5).capped);
  CHECK(pipeline_for(VersionId::V4_0).selector == Selector::Manhattan);
  CHECK(pipeline_for(VersionId::V5_5).selector == Selector::Classifier);
  CHECK(pipeline_for(VersionId::V6_0).selector == Selector::QValue);
  CHECK(limits_for(pipeline_for(VersionId::V3_5)).maxDepth == 300);
  CHECK(limits_for(pipeline_for(VersionId::V2_5)).maxDepth == 1000);
  CHECK(limits_for(pipeline_for(VersionId::V3_5)).maxSolutions == 100);
}

TEST_CASE("learned versions need their models") {
  CHECK_THROWS_AS(ctx_for(VersionId::V5_0), MissingModelError);
  CHECK_THROWS_AS(ctx_for(VersionId::V6_5), MissingModelError);
  Models qOnly;
  qOnly.qnet = std::make_shared<const nn::MlpModel>(nn::build_qnet(3));
  CHECK_THROWS_AS(PolicyContext::make(VersionId::V6_0, qOnly, 1), MissingModelError);
  CHECK_NOTHROW(PolicyContext::make(VersionId::V6_0, toy_models(), 1));
}

TEST_CASE("first move opens the centre") {
  auto ctx = ctx_for(VersionId::V3_0);
  Game g({9, 9, 10, 1});
  const auto d = decide(g.view(), ctx);
  CHECK(d.rationale == Rationale::FirstMove);
  CHECK(d.uncovers == std::vector<Coord>{{4, 4}});
  Game h({4, 6, 3, 1});
  CHECK(decide(h.view(), ctx).uncovers == std::vector<Coord>{{1, 2}});
}

TEST_CASE("deterministic safe cells are uncovered together") {
  // (0,0) shows 1 and its mine (1,1) is flagged: A=[[1,1]], N=[0].
  auto g = Game::from_layout(2, 2, {0, 0, 0, 1});
  g.uncover({0, 0});
  g.toggle_flag({1, 1});
  auto ctx = ctx_for(VersionId::V3_0);
  const auto d = decide(g.view(), ctx);
  CHECK(d.rationale == Rationale::Deterministic);
  CHECK(d.uncovers == std::vector<Coord>{{0, 1}, {1, 0}});
  CHECK(d.flags.empty());
  apply(g, d);
  CHECK(g.status() == engine::GameStatus::Won);
}

TEST_CASE("deterministic mines are flagged") {
  auto g = Game::from_layout(2, 3, {0, 1, 0, 1, 1, 0});
  g.uncover({0, 0});
  auto ctx = ctx_for(VersionId::V4_5);
  const auto d = decide(g.view(), ctx);
  CHECK(d.rationale == Rationale::Deterministic);
  CHECK(d.flags.size() == 3);
  CHECK(d.uncovers.empty());
}

TEST_CASE("contradicting flags are withdrawn newest first") {
  auto g = Game::from_layout(2, 2, {0, 0, 0, 1});
  g.uncover({0, 0});
  g.toggle_flag({0, 1});
  g.toggle_flag({1, 0});
  auto ctx = ctx_for(VersionId::V3_0);
  const auto d = decide(g.view(), ctx);
  CHECK(d.unflags == std::vector<Coord>{{1, 0}});
  apply(g, d);
  CHECK(g.view().flagsUsed == 1);
}

TEST_CASE("probabilistic choice on a 50/50 frontier") {
  // 1x3 with a centre 1: both ends at 0.5; argmin takes the first.
  auto g = Game::from_layout(1, 3, {0, 0, 1});
  g.uncover({0, 1});
  auto ctx = ctx_for(VersionId::V3_0);
  const auto d = decide(g.view(), ctx);
  CHECK(d.rationale == Rationale::ProbabilityMin);
  CHECK(d.uncovers == std::vector<Coord>{{0, 0}});
  REQUIRE(d.snapshot);
  CHECK(d.snapshot->P == std::vector<double>{0.5, 0.5});
}

TEST_CASE("4.0 prefers the edge inside the band") {
  // 5x5, mines at (0,0),(0,2),(2,0): opening (4,4) floods the lower right.
  std::vector<std::uint8_t> layout(25, 0);
  layout[0] = layout[2] = layout[10] = 1;
  auto g = Game::from_layout(5, 5, layout);
  g.uncover({4, 4});
  auto ctx = ctx_for(VersionId::V4_0, 3);
  const auto d = decide(g.view(), ctx);
  if (d.rationale == Rationale::Manhattan) {
    const auto& snap = *d.snapshot;
    const double lo = *std::min_element(snap.P.begin(), snap.P.end());
    const auto c = d.uncovers.front();
    for (std::size_t k = 0; k < snap.P.size(); ++k) {
      if (snap.P[k] <= lo + heuristics::kBandWidth) {
        CHECK(heuristics::manhattan_edge_distance(c, 5, 5) <=
              heuristics::manhattan_edge_distance(snap.system.variables[k].cell, 5, 5));
      }
      if (snap.system.variables[k].cell == c) CHECK(snap.P[k] <= lo + heuristics::kBandWidth + 1e-9);
    }
  }
}

TEST_CASE("trivial boards always win") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto ctx = ctx_for(VersionId::V3_0, seed);
    const auto r = play_game({1, 2, 1, seed}, ctx);
    CHECK(r.won);
    CHECK(r.moves == 1);
    auto ctx2 = ctx_for(VersionId::V4_0, seed);
    CHECK(play_game({3, 3, 8, seed}, ctx2).won);
  }
}

TEST_CASE("self-play invariants") {
  for (auto v : {VersionId::V2_5, VersionId::V3_0, VersionId::V3_5, VersionId::V4_0, VersionId::V4_5}) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      auto ctx = ctx_for(v, seed);
      const engine::BoardConfig cfg{9, 9, 10, seed};
      PlayOptions opts;
      opts.observer = [&](const StepInfo& s) {
        for (const auto& c : s.decision.uncovers) CHECK(s.before.at(c).covered());
        for (const auto& c : s.decision.flags) {
          CHECK(s.before.at(c).covered());
          CHECK(s.game.is_mine(c));
        }
        if (s.decision.rationale == Rationale::Deterministic) {
          for (const auto& c : s.decision.uncovers) CHECK_FALSE(s.game.is_mine(c));
        }
      };
      const auto r = play_game(cfg, ctx, opts);
      CHECK(r.moves <= 81);
      CHECK_FALSE(r.timedOut);
      CHECK(r.timings.size() == static_cast<std::size_t>(r.moves));
    }
  }
}

TEST_CASE("2.0 and 3.0 play identical games") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    auto a = ctx_for(VersionId::V2_0, seed);
    auto b = ctx_for(VersionId::V3_0, seed + 1000);
    std::vector<Coord> movesA, movesB;
    PlayOptions oa, ob;
    bool truncated = false;
    oa.observer = [&](const StepInfo& s) {
      truncated = truncated || s.decision.truncated;
      movesA.insert(movesA.end(), s.decision.uncovers.begin(), s.decision.uncovers.end());
    };
    ob.observer = [&](const StepInfo& s) {
      truncated = truncated || s.decision.truncated;
      movesB.insert(movesB.end(), s.decision.uncovers.begin(), s.decision.uncovers.end());
    };
    const auto ra = play_game({9, 9, 10, seed}, a, oa);
    const auto rb = play_game({9, 9, 10, seed}, b, ob);
    if (truncated || ra.timedOut || rb.timedOut) continue;
    CHECK(ra.won == rb.won);
    CHECK(movesA == movesB);
  }
}

TEST_CASE("learned versions play complete games") {
  for (auto v : {VersionId::V5_0, VersionId::V6_5}) {
    auto ctx = PolicyContext::make(v, toy_models(), 4);
    const auto r = play_game({9, 9, 10, 4}, ctx);
    CHECK(r.moves >= 1);
  }
}

TEST_CASE("alpha 1 score selection mirrors 4.5") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto a = ctx_for(VersionId::V4_5, seed);
    auto b = PolicyContext::score_manhattan(1.0, seed);
    std::vector<Coord> ma, mb;
    PlayOptions oa, ob;
    oa.observer = [&](const StepInfo& s) { ma.insert(ma.end(), s.decision.uncovers.begin(), s.decision.uncovers.end()); };
    ob.observer = [&](const StepInfo& s) { mb.insert(mb.end(), s.decision.uncovers.begin(), s.decision.uncovers.end()); };
    CHECK(play_game({9, 9, 10, seed}, a, oa).won == play_game({9, 9, 10, seed}, b, ob).won);
    CHECK(ma == mb);
  }
}

TEST_CASE("game timeout counts as a loss") {
  auto ctx = ctx_for(VersionId::V2_0);
  PlayOptions opts;
  opts.timeout = std::chrono::milliseconds{1};
  const auto r = play_game({60, 60, 700, 3}, ctx, opts);
  CHECK(r.timedOut);
  CHECK_FALSE(r.won);
  CHECK(r.elapsedMs >= 1.0);
}

TEST_CASE("decide refuses finished games") {
  auto g = Game::from_layout(2, 2, {0, 0, 0, 1});
  g.uncover({1, 1});
  auto ctx = ctx_for(VersionId::V3_0);
  CHECK_THROWS(decide(g.view(), ctx));
}

}  // TEST_SUITE
