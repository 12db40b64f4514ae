#include "msolver/engine.hpp"

#include <algorithm>
#include <numeric>

#include "msolver/rng.hpp"

namespace msolver::engine {

std::string to_string(Coord c) {
  return "(" + std::to_string(c.row) + "," + std::to_string(c.col) + ")";
}

std::string to_string(GameStatus s) {
  switch (s) {
    case GameStatus::InProgress: return "in_progress";
    case GameStatus::Won: return "won";
    case GameStatus::Lost: return "lost";
  }
  return "unknown";
}

void BoardConfig::validate() const {
  if (rows < 1 || cols < 1) {
    throw ConfigError("board dimensions must be positive, got " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  }
  const long long total = static_cast<long long>(rows) * cols;
  if (mines < 1 || mines > total - 1) {
    throw ConfigError("mine count " + std::to_string(mines) + " outside [1, " +
                      std::to_string(total - 1) + "] for a " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " board");
  }
}

Game::Game(const BoardConfig& config) : config_(config) {
  config_.validate();
  view_.rows = config.rows;
  view_.cols = config.cols;
  view_.mines = config.mines;
  view_.cells.assign(static_cast<std::size_t>(config.cells()), CellView{});
  view_.coveredLeft = config.cells();
  safeLeft_ = config.cells() - config.mines;
}

Game Game::from_layout(int rows, int cols, std::vector<std::uint8_t> mines) {
  if (rows < 1 || cols < 1 || mines.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw ConfigError("layout does not match the board dimensions");
  }
  if (rows * cols < 2) throw ConfigError("layout boards need at least 2 cells");
  const int count = static_cast<int>(std::count_if(mines.begin(), mines.end(), [](auto m) { return m != 0; }));
  Game g(BoardConfig{rows, cols, 1, 0});
  g.config_.mines = count;
  g.view_.mines = count;
  g.safeLeft_ = rows * cols - count;
  for (auto& m : mines) m = m ? 1 : 0;
  g.mines_ = std::move(mines);
  return g;
}

void Game::check_move(Coord cell) const {
  if (finished()) throw IllegalMoveError("game is already " + to_string(view_.status));
  if (!view_.in_bounds(cell)) throw IllegalMoveError("cell " + to_string(cell) + " is off the board");
}

bool Game::is_mine(Coord cell) const {
  if (!mines_placed()) throw std::logic_error("mines are placed on the first uncover");
  return mines_[static_cast<std::size_t>(view_.index(cell))] != 0;
}

void Game::place_mines(Coord first) {
  const int total = config_.cells();
  const int excluded = view_.index(first);
  std::vector<int> eligible;
  eligible.reserve(static_cast<std::size_t>(total - 1));
  for (int i = 0; i < total; ++i) {
    if (i != excluded) eligible.push_back(i);
  }
  Rng rng(config_.seed);
  rng.shuffle(std::span<int>(eligible));
  mines_.assign(static_cast<std::size_t>(total), 0);
  for (int k = 0; k < config_.mines; ++k) mines_[static_cast<std::size_t>(eligible[k])] = 1;
}

int Game::open(Coord start) {
  int opened = 0;
  std::vector<Coord> stack{start};
  auto reveal = [&](Coord c) {
    auto& cell = view_.cells[static_cast<std::size_t>(view_.index(c))];
    int count = 0;
    for_each_neighbor(c, view_.rows, view_.cols,
                      [&](Coord n) { count += mines_[static_cast<std::size_t>(view_.index(n))]; });
    cell = CellView{CellState::Uncovered, count};
    --view_.coveredLeft;
    --safeLeft_;
    ++opened;
    return count;
  };
  if (reveal(start) != 0) return opened;
  while (!stack.empty()) {
    const Coord c = stack.back();
    stack.pop_back();
    for_each_neighbor(c, view_.rows, view_.cols, [&](Coord n) {
      if (!view_.at(n).covered()) return;
      if (reveal(n) == 0) stack.push_back(n);
    });
  }
  return opened;
}

int Game::uncover(Coord cell) {
  check_move(cell);
  const auto& target = view_.at(cell);
  if (target.flagged()) throw IllegalMoveError("cell " + to_string(cell) + " is flagged");
  if (target.uncovered()) throw IllegalMoveError("cell " + to_string(cell) + " is already uncovered");

  if (!mines_placed()) place_mines(cell);
  view_.firstMoveDone = true;

  if (is_mine(cell)) {
    auto& c = view_.cells[static_cast<std::size_t>(view_.index(cell))];
    c = CellView{CellState::Uncovered, 0};
    --view_.coveredLeft;
    view_.status = GameStatus::Lost;
    return 0;
  }
  const int opened = open(cell);
  if (safeLeft_ == 0) view_.status = GameStatus::Won;
  return opened;
}

void Game::toggle_flag(Coord cell) {
  check_move(cell);
  auto& c = view_.cells[static_cast<std::size_t>(view_.index(cell))];
  if (c.uncovered()) throw IllegalMoveError("cannot flag uncovered cell " + to_string(cell));
  if (c.covered()) {
    c.state = CellState::Flagged;
    ++view_.flagsUsed;
    view_.flagOrder.push_back(cell);
  } else {
    c.state = CellState::Covered;
    --view_.flagsUsed;
    std::erase(view_.flagOrder, cell);
  }
}

}  // namespace msolver::engine
