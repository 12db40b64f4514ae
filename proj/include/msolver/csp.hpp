#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "msolver/engine.hpp"
#include "msolver/rng.hpp"

namespace msolver::csp {

enum class VarValue : std::int8_t { Unassigned = -1, Zero = 0, One = 1 };

struct Variable {
  engine::Coord cell;
  VarValue value = VarValue::Unassigned;
};

/// Raised when the visible numbers and flags admit no mine assignment.
class ContradictionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The linear system A·M = N over the frontier cells.
///
/// Rows are numbered cells with at least one covered, unflagged neighbour;
/// columns are those neighbours in row-major board order. A holds 0/1
/// coefficients and N the flag-adjusted counts.
struct ConstraintSystem {
  std::vector<std::vector<std::uint8_t>> A;
  std::vector<Variable> variables;
  std::vector<int> targets;

  std::size_t rows() const { return targets.size(); }
  std::size_t cols() const { return variables.size(); }
  bool empty() const { return variables.empty(); }

  /// Number of nonzero coefficients in row i.
  int row_variable_count(std::size_t i) const;

  /// Fixes variable j in place: a 1 decrements the target of every row that
  /// contains j, then column j is zeroed either way.
  void reduce(std::size_t j, int value);

  /// Builds a system from a bare matrix; variable j gets coordinate (0, j).
  static ConstraintSystem from_matrix(std::vector<std::vector<std::uint8_t>> a,
                                      std::vector<int> n);
};

ConstraintSystem extract_constraints(const engine::BoardView& view);

ConstraintSystem reduce(ConstraintSystem system, std::size_t j, int value);

/// True iff every row satisfies 0 <= N_i <= (unassigned variables in row i).
bool feasible(const ConstraintSystem& system);

struct Determined {
  int variable = 0;
  int value = 0;
  bool operator==(const Determined&) const = default;
};
using DeterminedList = std::vector<Determined>;

inline constexpr int kDssPasses = 10;

/// Deterministic solution search. Repeatedly applies the two row rules
/// (target 0 -> every row variable is 0; target equal to the row's variable
/// count -> every row variable is 1) for at most `passes` sweeps, stopping
/// early once a sweep fires nothing. Reduces `system` in place and drops
/// rows that become empty. Throws ContradictionError on an impossible row.
DeterminedList dss(ConstraintSystem& system, int passes = kDssPasses);

struct TraversalLimits {
  static constexpr std::int64_t kNoCap = std::numeric_limits<std::int64_t>::max();

  std::int64_t maxSolutions = kNoCap;
  std::int64_t maxDepth = kNoCap;
  std::int64_t maxIterations = 1'000'000;
  std::optional<std::chrono::steady_clock::time_point> deadline;

  /// Exhaustive search with only the iteration safety net.
  static TraversalLimits uncapped() { return {}; }
  /// Limited DSScsp traversal: 100 solutions, depth 300.
  static TraversalLimits dsscsp_capped() { return {100, 300, 1'000'000, std::nullopt}; }
  /// Limited backtracking traversal: 100 solutions, depth 1000.
  static TraversalLimits backtracking_capped() { return {100, 1000, 1'000'000, std::nullopt}; }
};

struct SearchStats {
  std::int64_t visitedNodes = 0;
  std::int64_t branchNodes = 0;  // nodes that split on a variable
};

using Assignment = std::vector<std::uint8_t>;

struct SolutionSet {
  std::vector<Assignment> solutions;
  bool truncated = false;
  SearchStats stats;

  std::size_t count() const { return solutions.size(); }
};

/// Plain depth-first search over variables in index order, 0 before 1,
/// pruning any branch that makes a row infeasible.
SolutionSet enumerate_backtracking(const ConstraintSystem& system, const TraversalLimits& limits);

/// Depth-first search that runs DSS at every node. Branches on the
/// unassigned variable appearing in the most rows and tries its two values
/// in random order.
SolutionSet enumerate_dsscsp(const ConstraintSystem& system, const TraversalLimits& limits,
                             Rng& rng);

/// Mine probability per variable: fraction of solutions in which it is 1.
/// Throws ContradictionError on an empty set.
std::vector<double> probabilities(const SolutionSet& solutions);

/// Text fixture format, see docs/formats.md.
ConstraintSystem read_system(std::istream& in);
void write_system(std::ostream& out, const ConstraintSystem& system);

}  // namespace msolver::csp
