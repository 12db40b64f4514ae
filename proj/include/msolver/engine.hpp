#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace msolver::engine {

struct Coord {
  int row = 0;
  int col = 0;
  auto operator<=>(const Coord&) const = default;
};

std::string to_string(Coord c);

struct BoardConfig {
  int rows = 9;
  int cols = 9;
  int mines = 10;
  std::uint64_t seed = 0;

  int cells() const { return rows * cols; }
  /// Throws ConfigError unless rows, cols >= 1 and 1 <= mines <= rows*cols-1.
  void validate() const;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IllegalMoveError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class CellState : std::uint8_t { Covered, Flagged, Uncovered };

struct CellView {
  CellState state = CellState::Covered;
  int count = 0;  // meaningful only when Uncovered

  bool covered() const { return state == CellState::Covered; }
  bool flagged() const { return state == CellState::Flagged; }
  bool uncovered() const { return state == CellState::Uncovered; }
  bool operator==(const CellView&) const = default;
};

enum class GameStatus : std::uint8_t { InProgress, Won, Lost };

std::string to_string(GameStatus s);

/// Everything a player can see. Solvers only ever receive this.
struct BoardView {
  int rows = 0;
  int cols = 0;
  int mines = 0;
  std::vector<CellView> cells;
  std::vector<Coord> flagOrder;  // flagged cells, oldest first
  int flagsUsed = 0;
  int coveredLeft = 0;  // cells not Uncovered (flagged ones included)
  GameStatus status = GameStatus::InProgress;
  bool firstMoveDone = false;

  bool in_bounds(Coord c) const {
    return c.row >= 0 && c.col >= 0 && c.row < rows && c.col < cols;
  }
  int index(Coord c) const { return c.row * cols + c.col; }
  Coord coord(int index) const { return {index / cols, index % cols}; }
  const CellView& at(Coord c) const { return cells[static_cast<std::size_t>(index(c))]; }

  bool operator==(const BoardView&) const = default;
};

/// Calls fn(Coord) for each on-board 8-neighbour of c.
template <typename Fn>
void for_each_neighbor(Coord c, int rows, int cols, Fn&& fn) {
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const Coord n{c.row + dr, c.col + dc};
      if (n.row >= 0 && n.col >= 0 && n.row < rows && n.col < cols) fn(n);
    }
  }
}

/// A single game: hidden layout plus the visible board.
///
/// Mines are placed lazily on the first uncover, uniformly among all cells
/// except the one clicked, by a Fisher-Yates shuffle driven by config.seed.
/// The same config and move sequence always produce the same game.
class Game {
 public:
  explicit Game(const BoardConfig& config);

  /// Fixture boards with a fixed layout (row-major, 1 = mine). The layout
  /// may hold any number of mines; no first-move relocation happens.
  static Game from_layout(int rows, int cols, std::vector<std::uint8_t> mines);

  /// Opens a Covered cell. Returns the number of cells newly uncovered
  /// (0 when the cell was a mine). Zero-count cells flood-fill their
  /// region and its numbered fringe; flagged cells are never opened.
  int uncover(Coord cell);

  /// Covered <-> Flagged.
  void toggle_flag(Coord cell);

  const BoardConfig& config() const { return config_; }
  const BoardView& view() const { return view_; }
  GameStatus status() const { return view_.status; }
  bool finished() const { return view_.status != GameStatus::InProgress; }

  bool mines_placed() const { return !mines_.empty(); }
  /// Hidden information; throws std::logic_error before the first uncover.
  bool is_mine(Coord cell) const;
  const std::vector<std::uint8_t>& mine_layout() const { return mines_; }

  /// Safe cells still covered; the game is won when this reaches zero.
  int safe_cells_left() const { return safeLeft_; }

 private:
  void place_mines(Coord first);
  int open(Coord start);
  void check_move(Coord cell) const;

  BoardConfig config_;
  BoardView view_;
  std::vector<std::uint8_t> mines_;
  int safeLeft_ = 0;
};

}  // namespace msolver::engine
