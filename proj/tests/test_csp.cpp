#include <doctest.h>

#include <sstream>

#include "msolver/csp.hpp"
#include "oracle.hpp"

using namespace msolver;
using namespace msolver::csp;
using engine::Coord;
using engine::Game;

namespace {

ConstraintSystem sys(std::vector<std::vector<std::uint8_t>> a, std::vector<int> n) {
  return ConstraintSystem::from_matrix(std::move(a), std::move(n));
}

std::vector<Assignment> all(const SolutionSet& s) { return oracle::sorted(s.solutions); }

}  // namespace

TEST_SUITE("csp") {

TEST_CASE("extract: 1x3 with a centre 1") {
  auto g = Game::from_layout(1, 3, {1, 0, 0});
  g.uncover({0, 1});
  const auto s = extract_constraints(g.view());
  REQUIRE(s.rows() == 1);
  CHECK(s.A[0] == std::vector<std::uint8_t>{1, 1});
  CHECK(s.targets == std::vector<int>{1});
  CHECK(s.variables[0].cell == Coord{0, 0});
  CHECK(s.variables[1].cell == Coord{0, 2});
}

TEST_CASE("extract: fresh and fully open boards give empty systems") {
  Game fresh({9, 9, 10, 1});
  CHECK(extract_constraints(fresh.view()).rows() == 0);
  auto g = Game::from_layout(3, 3, std::vector<std::uint8_t>(9, 0));
  g.uncover({0, 0});
  CHECK(extract_constraints(g.view()).empty());
}

TEST_CASE("extract: flags lower the target") {
  // M . M
  // . 2 .      centre shows 2; flag (0,0); the others stay covered.
  auto g = Game::from_layout(2, 3, {1, 0, 1, 0, 0, 0});
  g.uncover({1, 1});
  g.toggle_flag({0, 0});
  g.uncover({0, 1});
  g.uncover({1, 0});
  const auto s = extract_constraints(g.view());
  // Rows: (0,1) count 2, (1,0) count 1, (1,1) count 2; variables (0,2), (1,2).
  REQUIRE(s.cols() == 2);
  CHECK(s.variables[0].cell == Coord{0, 2});
  CHECK(s.variables[1].cell == Coord{1, 2});
  bool sawCentre = false;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    if (s.A[i] == std::vector<std::uint8_t>{1, 1}) {
      CHECK(s.targets[i] == 1);
      sawCentre = true;
    }
  }
  CHECK(sawCentre);
}

TEST_CASE("extract: wrong flags are a contradiction") {
  auto g = Game::from_layout(1, 4, {0, 0, 1, 0});
  g.uncover({0, 0});  // shows 0 -> opens (0,1) which shows 1
  REQUIRE(g.view().at({0, 1}).count == 1);
  g.toggle_flag({0, 2});
  CHECK_NOTHROW(extract_constraints(g.view()));
  auto h = Game::from_layout(2, 2, {0, 0, 0, 1});
  h.uncover({0, 0});
  h.toggle_flag({0, 1});
  h.toggle_flag({1, 0});
  CHECK_THROWS_AS(extract_constraints(h.view()), ContradictionError);
}

TEST_CASE("reduce") {
  auto a = reduce(sys({{1, 1}}, {1}), 0, 1);
  CHECK(a.A[0] == std::vector<std::uint8_t>{0, 1});
  CHECK(a.targets[0] == 0);
  CHECK(a.variables[0].value == VarValue::One);
  auto b = reduce(sys({{1, 1}}, {1}), 0, 0);
  CHECK(b.A[0] == std::vector<std::uint8_t>{0, 1});
  CHECK(b.targets[0] == 1);
  auto c = reduce(sys({{0, 1}}, {1}), 0, 1);
  CHECK(c.targets[0] == 1);
}

TEST_CASE("feasible") {
  CHECK(feasible(sys({{1, 1}}, {1})));
  CHECK_FALSE(feasible(sys({{1, 1}}, {3})));
  CHECK_FALSE(feasible(sys({{0, 0}}, {1})));
  CHECK_FALSE(feasible(sys({{1, 1}}, {-1})));
}

TEST_CASE("dss rules") {
  auto a = sys({{1, 1, 1}}, {3});
  CHECK(dss(a) == DeterminedList{{0, 1}, {1, 1}, {2, 1}});
  auto b = sys({{1, 1}}, {0});
  CHECK(dss(b) == DeterminedList{{0, 0}, {1, 0}});
  auto c = sys({{1, 1, 0}, {0, 1, 1}, {1, 1, 1}}, {1, 1, 1});
  CHECK(dss(c).empty());
  auto bad = sys({{1, 1}, {1, 1}}, {0, 2});
  CHECK_THROWS_AS(dss(bad), ContradictionError);
}

TEST_CASE("dss chains through reductions") {
  // x0 = 1 from row 0, then row 1 (x0 + x1 = 1) forces x1 = 0.
  auto s = sys({{1, 0}, {1, 1}}, {1, 1});
  const auto d = dss(s);
  CHECK(d == DeterminedList{{0, 1}, {1, 0}});
  CHECK(s.rows() == 0);
}

TEST_CASE("enumeration examples") {
  const auto s = sys({{1, 1}}, {1});
  const std::vector<Assignment> two{{0, 1}, {1, 0}};
  CHECK(all(enumerate_backtracking(s, TraversalLimits::uncapped())) == two);
  Rng rng(1);
  CHECK(all(enumerate_dsscsp(s, TraversalLimits::uncapped(), rng)) == two);
  CHECK(enumerate_backtracking(sys({{1, 1}}, {3}), TraversalLimits::uncapped()).count() == 0);
  CHECK(enumerate_dsscsp(sys({{1, 1}}, {3}), TraversalLimits::uncapped(), rng).count() == 0);

  const auto hard = sys({{1, 1, 0}, {0, 1, 1}, {1, 1, 1}}, {1, 1, 1});
  const auto bt = enumerate_backtracking(hard, TraversalLimits::uncapped());
  const auto dc = enumerate_dsscsp(hard, TraversalLimits::uncapped(), rng);
  CHECK(all(bt) == std::vector<Assignment>{{0, 1, 0}});
  CHECK(all(dc) == std::vector<Assignment>{{0, 1, 0}});
  CHECK(dc.stats.branchNodes < bt.stats.branchNodes);
}

TEST_CASE("dss-closed system: one solution, no branching") {
  Rng rng(2);
  const auto r = enumerate_dsscsp(sys({{1, 1, 1}, {1, 0, 0}}, {2, 0}), TraversalLimits::uncapped(), rng);
  CHECK(r.count() == 1);
  CHECK(r.stats.branchNodes == 0);
}

TEST_CASE("probabilities") {
  SolutionSet s;
  s.solutions = {{0, 1}, {1, 0}};
  CHECK(probabilities(s) == std::vector<double>{0.5, 0.5});
  s.solutions = {{0, 1, 0}};
  CHECK(probabilities(s) == std::vector<double>{0.0, 1.0, 0.0});
  CHECK_THROWS_AS(probabilities(SolutionSet{}), ContradictionError);
}

TEST_CASE("oracle agreement on 200 random frontiers") {
  Rng gen(2024);
  for (int t = 0; t < 200; ++t) {
    const auto s = oracle::random_frontier(gen, 16);
    CAPTURE(t);
    const auto truth = oracle::sorted(oracle::brute_force(s));
    REQUIRE_FALSE(truth.empty());

    auto copy = s;
    const auto determined = dss(copy);
    const auto bb = oracle::backbone(truth, s.cols());
    for (const auto& d : determined) CHECK(bb[static_cast<std::size_t>(d.variable)] == d.value);

    const auto bt = enumerate_backtracking(s, TraversalLimits::uncapped());
    Rng rng(derive_seed(7, static_cast<std::uint64_t>(t)));
    const auto dc = enumerate_dsscsp(s, TraversalLimits::uncapped(), rng);
    CHECK_FALSE(bt.truncated);
    CHECK_FALSE(dc.truncated);
    CHECK(all(bt) == truth);
    CHECK(all(dc) == truth);

    const auto P = probabilities(dc);
    for (std::size_t j = 0; j < s.cols(); ++j) {
      int ones = 0;
      for (const auto& a : truth) ones += a[j];
      CHECK(P[j] == static_cast<double>(ones) / static_cast<double>(truth.size()));
    }
  }
}

TEST_CASE("caps are respected and samples are solutions") {
  Rng gen(5);
  for (int t = 0; t < 60; ++t) {
    const auto s = oracle::random_frontier(gen, 16);
    const auto truth = oracle::sorted(oracle::brute_force(s));
    TraversalLimits lim = TraversalLimits::dsscsp_capped();
    lim.maxSolutions = 3;
    Rng rng(static_cast<std::uint64_t>(t));
    for (const auto& set : {enumerate_dsscsp(s, lim, rng), enumerate_backtracking(s, lim)}) {
      CHECK(set.count() <= 3);
      if (truth.size() > 3) CHECK(set.truncated);
      for (const auto& a : set.solutions) CHECK(std::binary_search(truth.begin(), truth.end(), a));
    }
  }
}

TEST_CASE("depth and iteration caps truncate") {
  const auto s = sys({{1, 1, 1, 1, 1, 1}}, {3});
  TraversalLimits lim;
  lim.maxDepth = 2;
  const auto r = enumerate_backtracking(s, lim);
  CHECK(r.truncated);
  CHECK(r.count() == 0);
  TraversalLimits it;
  it.maxIterations = 5;
  Rng rng(1);
  CHECK(enumerate_dsscsp(s, it, rng).truncated);
}

TEST_CASE("text format round trip") {
  const auto s = sys({{1, 1, 0}, {0, 1, 1}}, {1, 2});
  std::stringstream ss;
  write_system(ss, s);
  const auto back = read_system(ss);
  CHECK(back.A == s.A);
  CHECK(back.targets == s.targets);

  std::istringstream commented("# fixture\n2 2\n1 1\n0 1  # second row\n1 0\n");
  const auto c = read_system(commented);
  CHECK(c.A == std::vector<std::vector<std::uint8_t>>{{1, 1}, {0, 1}});
  CHECK(c.targets == std::vector<int>{1, 0});

  std::istringstream bad("2 2\n1 1\n");
  CHECK_THROWS(read_system(bad));
  std::istringstream nonbinary("1 2\n1 2\n1\n");
  CHECK_THROWS(read_system(nonbinary));
}

}  // TEST_SUITE
