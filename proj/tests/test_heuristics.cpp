#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <filesystem>

#include "msolver/binary_io.hpp"
#include "msolver/heuristics.hpp"

using namespace msolver;
using namespace msolver::heuristics;
using engine::Coord;
using engine::Game;

TEST_SUITE("heuristics") {

TEST_CASE("edge distance") {
  CHECK(manhattan_edge_distance({0, 3}, 9, 9) == 0);
  CHECK(manhattan_edge_distance({4, 4}, 9, 9) == 4);
  CHECK(manhattan_edge_distance({1, 5}, 9, 9) == 1);
}

TEST_CASE("pick_manhattan examples") {
  Rng rng(1);
  const std::vector<double> P{0.2, 0.21, 0.5};
  const std::vector<Coord> coords{{0, 0}, {4, 4}, {2, 2}};
  CHECK(pick_manhattan(P, coords, 9, 9, rng) == Coord{0, 0});
  CHECK(candidate_band(P, coords).size() == 2);
  const std::vector<double> one{0.7};
  const std::vector<Coord> c1{{4, 4}};
  CHECK(pick_manhattan(one, c1, 9, 9, rng) == Coord{4, 4});
  const std::vector<double> P2{0.3, 0.1};
  const std::vector<Coord> c2{{0, 0}, {4, 4}};
  CHECK(pick_manhattan(P2, c2, 9, 9, rng) == Coord{4, 4});
  CHECK_THROWS(pick_manhattan(std::vector<double>{}, std::vector<Coord>{}, 9, 9, rng));
}

TEST_CASE("pick_manhattan always stays in the band and breaks ties randomly") {
  Rng rng(9);
  std::set<std::size_t> seen;
  for (int t = 0; t < 500; ++t) {
    std::vector<double> P;
    std::vector<Coord> coords;
    for (int k = 0; k < 8; ++k) {
      P.push_back(rng.unit());
      coords.push_back({static_cast<int>(rng.below(9)), static_cast<int>(rng.below(9))});
    }
    const auto i = pick_manhattan_index(P, coords, 9, 9, rng);
    CHECK(P[i] <= *std::min_element(P.begin(), P.end()) + kBandWidth + kBandSlack);
  }
  const std::vector<double> flat{0.3, 0.3, 0.3};
  const std::vector<Coord> edges{{0, 1}, {0, 5}, {8, 3}};
  for (int t = 0; t < 100; ++t) seen.insert(pick_manhattan_index(flat, edges, 9, 9, rng));
  CHECK(seen.size() == 3);
}

TEST_CASE("location score") {
  CHECK(location_score({0, 0}, 9, 9, 10, 0, 71) == doctest::Approx(1.0 - std::pow(10.0 / 71.0, 4)));
  CHECK(location_score({0, 0}, 9, 9, 10, 0, 71) == doctest::Approx(0.999607).epsilon(1e-6));
  CHECK(location_score({4, 4}, 9, 9, 5, 0, 5) == 0.0);
  CHECK(location_score({0, 0}, 9, 9, 12, 2, 20) == doctest::Approx(0.9375));
  CHECK(location_score({4, 4}, 9, 9, 10, 0, 20) == doctest::Approx(1.0 - std::pow(0.5, 8)));
  CHECK(location_score({0, 4}, 9, 9, 10, 0, 20) == doctest::Approx(1.0 - std::pow(0.5, 6)));
  CHECK_THROWS(location_score({0, 0}, 9, 9, 1, 0, 0));
  CHECK(classify({0, 8}, 9, 9) == Position::Corner);
  CHECK(classify({0, 4}, 9, 9) == Position::Edge);
  CHECK(classify({3, 4}, 9, 9) == Position::Interior);
}

TEST_CASE("combined score") {
  CHECK(combined_score(0.3, 0.9, 1.0) == doctest::Approx(0.7));
  CHECK(combined_score(0.3, 0.9, 0.0) == doctest::Approx(0.9));
  CHECK(combined_score(0.2, 0.9, 0.6) == doctest::Approx(0.84));
  CHECK(combined_score(0.25, location_score({4, 4}, 9, 9, 10, 0, 40), 0.5) ==
        doctest::Approx(0.87499).epsilon(1e-5));
  for (double a : {0.2, 0.5, 0.8}) {
    CHECK(combined_score(0.1, 0.5, a) > combined_score(0.2, 0.5, a));
    CHECK(combined_score(0.1, 0.6, a) > combined_score(0.1, 0.5, a));
  }
}

TEST_CASE("alpha model") {
  AlphaModel m;
  m.theta = {0, 0, 0, 0.5};
  CHECK(predict_alpha(m, 9, 9, 0.12) == 0.5);
  m.theta = {0, 0, 1, 0};
  CHECK(predict_alpha(m, 9, 9, 0.2) == doctest::Approx(0.2));
  m.theta = {1, 0, 0, 0};
  CHECK(predict_alpha(m, 9, 9, 0.2) == 1.0);
  m.theta = {-1, 0, 0, 0};
  CHECK(predict_alpha(m, 9, 9, 0.2) == 0.0);
}

TEST_CASE("alpha model file round trip and errors") {
  const auto dir = std::filesystem::temp_directory_path() / "msolver_alpha_test";
  std::filesystem::create_directories(dir);
  AlphaModel m;
  m.theta = {0.01, -0.02, 0.7, 0.3};
  m.r2 = 0.27;
  save_alpha_model(m, dir / "a.bin");
  const auto back = load_alpha_model(dir / "a.bin");
  CHECK(back.theta == m.theta);
  CHECK(back.r2 == m.r2);
  auto bytes = read_file(dir / "a.bin");
  write_file(dir / "t.bin", bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(load_alpha_model(dir / "t.bin"), FormatError);
  bytes[4] = 9;
  write_file(dir / "v.bin", bytes);
  CHECK_THROWS_AS(load_alpha_model(dir / "v.bin"), UnsupportedVersionError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("score field") {
  Game fresh({9, 9, 10, 1});
  const csp::ConstraintSystem empty;
  const auto f = score_field(fresh.view(), empty, {}, 1.0);
  for (double s : f.scores) CHECK(s == 0.5);

  // 1x3 with a centre 1; pretend the enumeration settled both ends.
  auto g = Game::from_layout(1, 3, {1, 0, 0});
  g.uncover({0, 1});
  const auto sys = csp::extract_constraints(g.view());
  REQUIRE(sys.cols() == 2);
  const std::vector<double> P{0.0, 1.0};
  const auto field = score_field(g.view(), sys, P, 1.0);
  CHECK(field.at(sys.variables[0].cell) == 1.0);
  CHECK(field.at(sys.variables[1].cell) == 0.0);
  for (int c = 0; c < 3; ++c) {
    const bool covered = g.view().at({0, c}).covered();
    CHECK((field.at({0, c}) == kSentinel) == !covered);
  }
}

TEST_CASE("global density option") {
  // 1x5, (0,0) opened showing 1: frontier {(0,1)}, off-frontier (0,2..4).
  auto g = Game::from_layout(1, 5, {0, 1, 0, 0, 1});
  g.uncover({0, 0});
  const auto sys = csp::extract_constraints(g.view());
  const std::vector<double> P{1.0};
  const auto plain = cell_probabilities(g.view(), sys, P);
  CHECK(plain[2] == 0.5);
  ScoreOptions opt;
  opt.globalDensity = true;
  const auto dense = cell_probabilities(g.view(), sys, P, opt);
  CHECK(dense[2] == doctest::Approx(1.0 / 3.0));
  CHECK(dense[0] == kSentinel);
}

TEST_CASE("sub-state extraction") {
  ScoreField f{5, 5, 1.0, std::vector<double>(25, 0.7)};
  const auto corner = extract_substate(f, {0, 0}, 3);
  CHECK(std::count(corner.window.begin(), corner.window.end(), kSentinel) == 5);
  const auto a = extract_substate(f, {2, 2}, 3);
  const auto b = extract_substate(f, {1, 3}, 3);
  CHECK(a.window == b.window);
  for (double v : a.window) CHECK(v == 0.7);
  f.scores[12] = 0.9;
  CHECK(extract_substate(f, {2, 2}, 3).window[4] == 0.9);
  CHECK(extract_substate(f, {2, 2}, 5).window.size() == 25);
  CHECK_THROWS(extract_substate(f, {2, 2}, 2));
}

TEST_CASE("featurize") {
  Game fresh({9, 9, 10, 1});
  const csp::ConstraintSystem empty;
  const auto fv = featurize(fresh.view(), empty, {}, {3, 3});
  CHECK(fv.mineProbability == 0.5);
  CHECK(fv.frontierSize == 0);
  CHECK(fv.minProbIndex == -1);
  CHECK(fv.to_input().size() == FeatureVector::kWidth);

  auto g = Game::from_layout(1, 5, {0, 1, 0, 0, 1});
  g.uncover({0, 0});
  const auto sys = csp::extract_constraints(g.view());
  const std::vector<double> P{0.4};
  const auto on = featurize(g.view(), sys, P, {0, 1});
  CHECK(on.mineProbability == 0.4);
  CHECK(on.frontierSize == 1);
  CHECK(on.minProbIndex == 0);
  const auto off = featurize(g.view(), sys, P, {0, 3});
  CHECK(off.mineProbability == 0.5);
  CHECK(featurize(g.view(), sys, P, {0, 3}).to_input() == off.to_input());
}

TEST_CASE("featurize: first argmin") {
  auto g = Game::from_layout(3, 3, {1, 0, 1, 0, 0, 0, 0, 0, 0});
  g.uncover({2, 1});
  const auto sys = csp::extract_constraints(g.view());
  std::vector<double> P(sys.cols(), 0.5);
  REQUIRE(P.size() >= 2);
  P[1] = 0.1;
  P.back() = 0.1;
  CHECK(featurize(g.view(), sys, P, sys.variables[0].cell).minProbIndex == 1);
}

}  // TEST_SUITE
