#include "msolver/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace msolver::bench {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream ss(text);
  T v{};
  if (!(ss >> v) || !(ss >> std::ws).eof()) {
    throw std::invalid_argument("bad value for '" + key + "': " + text);
  }
  return v;
}

std::uint64_t version_salt(VersionId v) { return static_cast<std::uint64_t>(v) + 1; }

}  // namespace

void BenchSpec::validate() const {
  if (versions.empty()) throw std::invalid_argument("no versions to benchmark");
  if (boardSizes.empty() || dimensionRatios.empty() || mineRatios.empty()) {
    throw std::invalid_argument("board sizes, dimension ratios and mine ratios must be non-empty");
  }
  for (int p : boardSizes) {
    if (p < 1) throw std::invalid_argument("board sizes must be positive");
  }
  for (double d : dimensionRatios) {
    if (!(d > 0.0)) throw std::invalid_argument("dimension ratios must be positive");
  }
  for (double r : mineRatios) {
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("mine ratios must lie in (0, 1)");
  }
  if (gamesPerCell < 1) throw std::invalid_argument("games per cell must be at least 1");
  if (timeout.count() <= 0) throw std::invalid_argument("timeout must be positive");
  if (grid().cells().empty()) throw std::invalid_argument("spec yields no playable board");
}

training::SweepGrid BenchSpec::grid() const {
  training::SweepGrid g;
  g.boardSizes = boardSizes;
  g.dimensionRatios = dimensionRatios;
  g.mineRatios = mineRatios;
  g.gamesPerCell = gamesPerCell;
  g.seedBase = seedBase;
  return g;
}

BenchSpec preset_beginner() {
  BenchSpec s;
  s.versions = {VersionId::V3_0, VersionId::V4_0};
  return s;
}

BenchSpec preset_paper53() {
  BenchSpec s;
  s.versions = {VersionId::V3_0, VersionId::V4_0};
  s.boardSizes.clear();
  for (int p = 5; p <= 15; ++p) s.boardSizes.push_back(p);
  s.dimensionRatios = {0.5, 0.75, 1.0};
  s.mineRatios = {0.05, 0.10, 0.15, 0.20, 0.25};
  return s;
}

BenchSpec preset(const std::string& name) {
  if (name == "beginner") return preset_beginner();
  if (name == "paper53") return preset_paper53();
  throw std::invalid_argument("unknown preset '" + name + "' (beginner, paper53)");
}

BenchSpec parse_spec(std::istream& in) {
  BenchSpec s;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("spec line " + std::to_string(lineNo) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "versions") {
      s.versions.clear();
      for (const auto& v : split_list(value)) s.versions.push_back(policy::parse_version(v));
    } else if (key == "board_sizes") {
      s.boardSizes.clear();
      for (const auto& v : split_list(value)) s.boardSizes.push_back(parse_number<int>(key, v));
    } else if (key == "dimension_ratios") {
      s.dimensionRatios.clear();
      for (const auto& v : split_list(value)) s.dimensionRatios.push_back(parse_number<double>(key, v));
    } else if (key == "mine_ratios") {
      s.mineRatios.clear();
      for (const auto& v : split_list(value)) s.mineRatios.push_back(parse_number<double>(key, v));
    } else if (key == "games") {
      s.gamesPerCell = parse_number<int>(key, value);
    } else if (key == "timeout_ms") {
      s.timeout = std::chrono::milliseconds{parse_number<long long>(key, value)};
    } else if (key == "seed") {
      s.seedBase = parse_number<std::uint64_t>(key, value);
    } else if (key == "out") {
      s.outputPath = value;
    } else if (key == "workers") {
      s.workers = std::max(1u, parse_number<unsigned>(key, value));
    } else if (key == "timing") {
      if (value == "on") {
        s.recordTiming = true;
      } else if (value == "off") {
        s.recordTiming = false;
      } else {
        throw std::invalid_argument("timing must be on or off");
      }
    } else {
      throw std::invalid_argument("spec line " + std::to_string(lineNo) + ": unknown key '" + key + "'");
    }
  }
  s.validate();
  return s;
}

BenchSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open spec file " + path.string());
  return parse_spec(in);
}

ModelSet ModelSet::load(const std::filesystem::path& dir) {
  ModelSet m;
  auto mlp = [&](const char* name) -> std::shared_ptr<const nn::MlpModel> {
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) return nullptr;
    return std::make_shared<const nn::MlpModel>(nn::load_model(path));
  };
  m.classifierSingle = mlp(kClassifierSingleFile);
  m.classifierIter = mlp(kClassifierIterFile);
  m.qnetSingle = mlp(kQnetSingleFile);
  m.qnetIter = mlp(kQnetIterFile);
  if (std::filesystem::exists(dir / kAlphaFile)) m.alpha = heuristics::load_alpha_model(dir / kAlphaFile);
  return m;
}

policy::Models ModelSet::for_version(VersionId v) const {
  policy::Models out;
  const std::string name = policy::to_string(v);
  switch (v) {
    case VersionId::V5_0: out.classifier = classifierSingle; break;
    case VersionId::V5_5: out.classifier = classifierIter; break;
    case VersionId::V6_0: out.qnet = qnetIter; break;
    case VersionId::V6_5: out.qnet = qnetSingle; break;
    default: break;
  }
  if (policy::needs_qnet(v)) out.alpha = alpha;
  if (policy::needs_classifier(v) && !out.classifier) {
    throw policy::MissingModelError("version " + name + " needs a classifier model");
  }
  if (policy::needs_qnet(v) && (!out.qnet || !out.alpha)) {
    throw policy::MissingModelError("version " + name + " needs a Q-network and an alpha model");
  }
  return out;
}

std::vector<policy::GameResult> play_cell(VersionId version, const policy::Models& models,
                                          const training::SweepGrid::Cell& cell,
                                          std::size_t cellIndex, int games,
                                          std::uint64_t seedBase,
                                          std::chrono::milliseconds timeout, unsigned workers) {
  std::vector<policy::GameResult> out(static_cast<std::size_t>(std::max(games, 0)));
  parallel_for(out.size(), workers, [&](std::size_t g) {
    const engine::BoardConfig config{cell.rows, cell.cols, cell.mines,
                                     training::board_seed(seedBase, cellIndex, g)};
    auto ctx = policy::PolicyContext::make(
        version, models, training::policy_seed(seedBase, cellIndex, g, version_salt(version)));
    policy::PlayOptions play;
    play.timeout = timeout;
    out[g] = policy::play_game(config, ctx, play);
  });
  return out;
}

BenchRow summarize(VersionId version, const training::SweepGrid::Cell& cell,
                   const std::vector<policy::GameResult>& results, bool recordTiming) {
  BenchRow row;
  row.version = policy::to_string(version);
  row.p = cell.rows;
  row.q = cell.cols;
  row.n = cell.mines;
  row.dimensionRatio = cell.dimensionRatio;
  row.mineRatio = cell.mineRatio;
  row.games = static_cast<int>(results.size());
  double moves = 0.0, elapsed = 0.0;
  for (const auto& r : results) {
    row.wins += r.won ? 1 : 0;
    row.timeouts += r.timedOut ? 1 : 0;
    moves += r.moves;
    elapsed += r.elapsedMs;
  }
  if (row.games > 0) {
    row.meanMoves = moves / row.games;
    row.meanElapsedMs = recordTiming ? elapsed / row.games : 0.0;
    row.winRatio = static_cast<double>(row.wins) / row.games;
  }
  return row;
}

std::vector<BenchRow> run_bench(const BenchSpec& spec, const ModelSet& models) {
  spec.validate();
  const auto grid = spec.grid();
  const auto cells = grid.cells();
  const std::size_t games = static_cast<std::size_t>(spec.gamesPerCell);

  struct Block {
    VersionId version;
    std::optional<policy::Models> models;
    std::string error;
  };
  std::vector<Block> blocks;
  for (auto v : spec.versions) {
    Block b{v, std::nullopt, {}};
    try {
      b.models = models.for_version(v);
    } catch (const policy::MissingModelError& e) {
      b.error = e.what();
    }
    blocks.push_back(std::move(b));
  }

  // One flat job list so the worker pool stays busy across cells; the
  // results land in fixed slots and are summarized in (version, cell) order.
  std::vector<policy::GameResult> results(blocks.size() * cells.size() * games);
  parallel_for(results.size(), spec.workers, [&](std::size_t i) {
    const std::size_t b = i / (cells.size() * games);
    const std::size_t c = (i / games) % cells.size();
    const std::size_t g = i % games;
    if (!blocks[b].models) return;
    const auto& cell = cells[c];
    const engine::BoardConfig config{cell.rows, cell.cols, cell.mines,
                                     training::board_seed(spec.seedBase, c, g)};
    auto ctx = policy::PolicyContext::make(
        blocks[b].version, *blocks[b].models,
        training::policy_seed(spec.seedBase, c, g, version_salt(blocks[b].version)));
    policy::PlayOptions play;
    play.timeout = spec.timeout;
    results[i] = policy::play_game(config, ctx, play);
  });

  std::vector<BenchRow> rows;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!blocks[b].models) {
        BenchRow row;
        row.version = policy::to_string(blocks[b].version);
        row.p = cells[c].rows;
        row.q = cells[c].cols;
        row.n = cells[c].mines;
        row.dimensionRatio = cells[c].dimensionRatio;
        row.mineRatio = cells[c].mineRatio;
        row.error = blocks[b].error;
        rows.push_back(std::move(row));
        continue;
      }
      const auto first = results.begin() + static_cast<std::ptrdiff_t>((b * cells.size() + c) * games);
      std::vector<policy::GameResult> slice(first, first + static_cast<std::ptrdiff_t>(games));
      for (auto& r : slice) r.timings.clear();
      rows.push_back(summarize(blocks[b].version, cells[c], slice, spec.recordTiming));
    }
  }

  if (spec.outputPath) {
    if (spec.outputPath->has_parent_path()) std::filesystem::create_directories(spec.outputPath->parent_path());
    std::ofstream out(*spec.outputPath, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + spec.outputPath->string());
    write_csv(out, rows);
  }
  return rows;
}

void write_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.version << ',' << r.p << ',' << r.q << ',' << r.n << ',' << r.games << ',' << r.wins
        << ',' << r.timeouts << ',';
    if (!r.error.empty()) {
      out << ",,\n";
      continue;
    }
    out << std::fixed << std::setprecision(4) << r.meanMoves << ',' << std::setprecision(4)
        << r.meanElapsedMs << ',' << std::setprecision(6) << r.winRatio << '\n';
    out.unsetf(std::ios::floatfield);
  }
}

std::string to_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream ss;
  write_csv(ss, rows);
  return ss.str();
}

std::vector<BenchRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCsvHeader) {
    throw std::runtime_error("bench CSV: unexpected header");
  }
  std::vector<BenchRow> rows;
  std::size_t lineNo = 1;
  while (std::getline(in, line)) {
    ++lineNo;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string item;
    std::istringstream ss(line);
    while (std::getline(ss, item, ',')) f.push_back(item);
    while (f.size() < 10) f.emplace_back();
    if (f.size() != 10) throw std::runtime_error("bench CSV line " + std::to_string(lineNo) + ": expected 10 fields");
    try {
      BenchRow r;
      r.version = f[0];
      r.p = std::stoi(f[1]);
      r.q = std::stoi(f[2]);
      r.n = std::stoi(f[3]);
      r.games = std::stoi(f[4]);
      r.wins = std::stoi(f[5]);
      r.timeouts = std::stoi(f[6]);
      r.dimensionRatio = static_cast<double>(r.q) / r.p;
      r.mineRatio = static_cast<double>(r.n) / (r.p * r.q);
      if (f[7].empty()) {
        r.error = "skipped";
      } else {
        r.meanMoves = std::stod(f[7]);
        r.meanElapsedMs = std::stod(f[8]);
        r.winRatio = std::stod(f[9]);
      }
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw std::runtime_error("bench CSV line " + std::to_string(lineNo) + " is malformed");
    }
  }
  return rows;
}

std::vector<GroupSummary> aggregate(const std::vector<BenchRow>& rows, GroupBy by) {
  if (rows.empty()) throw std::invalid_argument("nothing to aggregate");
  std::map<std::pair<std::string, double>, GroupSummary> groups;
  for (const auto& r : rows) {
    if (!r.error.empty()) continue;
    double key = 0.0;
    switch (by) {
      case GroupBy::MineRatio: key = std::round(r.mineRatio * 1e6) / 1e6; break;
      case GroupBy::Blocks: key = static_cast<double>(r.p) * r.q; break;
      case GroupBy::DimRatio: key = std::round(r.dimensionRatio * 1e6) / 1e6; break;
    }
    auto& g = groups[{r.version, key}];
    g.version = r.version;
    g.key = key;
    g.rows += 1;
    g.games += r.games;
    g.wins += r.wins;
    g.meanWinRatio += r.winRatio;
  }
  std::vector<GroupSummary> out;
  for (auto& [k, g] : groups) {
    g.meanWinRatio /= g.rows;
    out.push_back(g);
  }
  return out;
}

void write_summary_csv(std::ostream& out, const std::vector<GroupSummary>& groups, GroupBy by) {
  const char* key = by == GroupBy::MineRatio ? "mine_ratio" : by == GroupBy::Blocks ? "blocks" : "dim_ratio";
  out << "version," << key << ",rows,games,wins,mean_win_ratio\n";
  for (const auto& g : groups) {
    out << g.version << ',' << g.key << ',' << g.rows << ',' << g.games << ',' << g.wins << ','
        << std::fixed << std::setprecision(6) << g.meanWinRatio << '\n';
    out.unsetf(std::ios::floatfield);
  }
}

std::vector<BenchRow> table4(int games, const ModelSet& models, std::uint64_t seedBase,
                             unsigned workers, std::chrono::milliseconds timeout) {
  BenchSpec spec = preset_beginner();
  spec.versions.clear();
  for (auto v : policy::all_versions()) {
    if (v != VersionId::V1_0) spec.versions.push_back(v);
  }
  spec.gamesPerCell = games;
  spec.seedBase = seedBase;
  spec.workers = workers;
  spec.timeout = timeout;
  return run_bench(spec, models);
}

}  // namespace msolver::bench
