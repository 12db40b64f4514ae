#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "msolver/bench.hpp"

using namespace msolver;
using namespace msolver::bench;

namespace {

BenchSpec tiny() {
  BenchSpec s;
  s.versions = {VersionId::V3_0, VersionId::V4_5};
  s.boardSizes = {6};
  s.dimensionRatios = {1.0};
  s.mineRatios = {0.15};
  s.gamesPerCell = 8;
  s.seedBase = 42;
  return s;
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("presets") {
  const auto b = preset_beginner();
  const auto cells = b.grid().cells();
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].rows == 9);
  CHECK(cells[0].cols == 9);
  CHECK(cells[0].mines == 10);
  const auto p = preset_paper53();
  CHECK(p.grid().cells().size() == 11 * 3 * 5);
  CHECK(p.gamesPerCell == 100);
  CHECK(p.timeout == std::chrono::milliseconds{5000});
  CHECK_THROWS(preset("expert"));
}

TEST_CASE("spec file") {
  std::istringstream in(
      "# sweep\n"
      "versions = 3.0, 4.0\n"
      "board_sizes = 5, 7\n"
      "dimension_ratios = 1\n"
      "mine_ratios = 0.1,0.2\n"
      "games = 3\n"
      "timeout_ms = 1000\n"
      "seed = 9\n"
      "timing = off\n");
  const auto s = parse_spec(in);
  CHECK(s.versions.size() == 2);
  CHECK(s.boardSizes == std::vector<int>{5, 7});
  CHECK(s.mineRatios.size() == 2);
  CHECK(s.gamesPerCell == 3);
  CHECK(s.timeout == std::chrono::milliseconds{1000});
  CHECK(s.seedBase == 9);
  CHECK_FALSE(s.recordTiming);
  std::istringstream unknown("colour = red\n");
  CHECK_THROWS(parse_spec(unknown));
  std::istringstream zero("games = 0\n");
  CHECK_THROWS(parse_spec(zero));
  std::istringstream noTimeout("timeout_ms = 0\n");
  CHECK_THROWS(parse_spec(noTimeout));
}

TEST_CASE("run produces one row per version and cell") {
  auto spec = tiny();
  spec.mineRatios = {0.1, 0.2};
  const auto rows = run_bench(spec, {});
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].version == "3.0");
  CHECK(rows[2].version == "4.5");
  for (const auto& r : rows) {
    CHECK(r.games == 8);
    CHECK(r.wins <= r.games);
    CHECK(r.winRatio == doctest::Approx(static_cast<double>(r.wins) / r.games));
    CHECK(r.meanMoves >= 1.0);
  }
}

TEST_CASE("csv schema and determinism") {
  auto spec = tiny();
  spec.recordTiming = false;
  const auto a = to_csv(run_bench(spec, {}));
  spec.workers = 1;
  const auto b = to_csv(run_bench(spec, {}));
  CHECK(a == b);
  CHECK(a.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
  std::istringstream in(a);
  const auto rows = read_csv(in);
  CHECK(rows.size() == 2);

  auto single = tiny();
  single.versions = {VersionId::V3_0};
  single.gamesPerCell = 1;
  single.recordTiming = false;
  CHECK(to_csv(run_bench(single, {})) == to_csv(run_bench(single, {})));
}

TEST_CASE("a cell can be replayed alone") {
  auto spec = tiny();
  const auto rows = run_bench(spec, {});
  const auto cell = spec.grid().cells()[0];
  const auto games = play_cell(VersionId::V4_5, {}, cell, 0, spec.gamesPerCell, spec.seedBase,
                               spec.timeout, 1);
  CHECK(summarize(VersionId::V4_5, cell, games).wins == rows[1].wins);
}

TEST_CASE("missing models give error rows") {
  auto spec = tiny();
  spec.versions = {VersionId::V3_0, VersionId::V5_5};
  const auto rows = run_bench(spec, {});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].error.empty());
  CHECK_FALSE(rows[1].error.empty());
  CHECK(rows[1].games == 0);
  const auto csv = to_csv(rows);
  CHECK(csv.find("5.5,6,6,5,0,0,0,,,") != std::string::npos);
  std::istringstream in(csv);
  CHECK_FALSE(read_csv(in)[1].error.empty());
}

TEST_CASE("csv file output") {
  auto spec = tiny();
  const auto dir = std::filesystem::temp_directory_path() / "msolver_bench_test";
  spec.outputPath = dir / "out" / "bench.csv";
  const auto rows = run_bench(spec, {});
  std::ifstream in(*spec.outputPath);
  REQUIRE(in);
  CHECK(read_csv(in).size() == rows.size());
  std::filesystem::remove_all(dir);
  std::istringstream badHeader("version,p\n");
  CHECK_THROWS(read_csv(badHeader));
}

TEST_CASE("aggregation") {
  BenchRow r;
  r.version = "3.0";
  r.p = r.q = 5;
  r.n = 3;
  r.games = 10;
  r.wins = 7;
  r.winRatio = 0.7;
  r.mineRatio = 0.12;
  const auto one = aggregate({r}, GroupBy::MineRatio);
  REQUIRE(one.size() == 1);
  CHECK(one[0].meanWinRatio == doctest::Approx(0.7));
  CHECK(one[0].games == 10);

  std::vector<BenchRow> rows;
  for (int p : {5, 10, 15}) {
    for (double d : {0.5, 1.0}) {
      BenchRow x = r;
      x.p = p;
      x.q = p;  // keeps p*q at three values
      x.dimensionRatio = d;
      rows.push_back(x);
    }
  }
  CHECK(aggregate(rows, GroupBy::Blocks).size() == 3);
  CHECK(aggregate(rows, GroupBy::DimRatio).size() == 2);
  CHECK_THROWS(aggregate({}, GroupBy::Blocks));
  std::ostringstream out;
  write_summary_csv(out, aggregate(rows, GroupBy::Blocks), GroupBy::Blocks);
  CHECK(out.str().rfind("version,blocks,rows,games,wins,mean_win_ratio\n", 0) == 0);
}

TEST_CASE("model directory lookup") {
  const auto dir = std::filesystem::temp_directory_path() / "msolver_models_test";
  std::filesystem::create_directories(dir);
  nn::save_model(nn::build_classifier(9, 1), dir / kClassifierIterFile);
  const auto set = ModelSet::load(dir);
  CHECK(set.classifierIter);
  CHECK_FALSE(set.classifierSingle);
  CHECK_NOTHROW(set.for_version(VersionId::V5_5));
  CHECK_THROWS_AS(set.for_version(VersionId::V5_0), policy::MissingModelError);
  CHECK_THROWS_AS(set.for_version(VersionId::V6_0), policy::MissingModelError);
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
