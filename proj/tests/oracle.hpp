#pragma once

// Independent reference implementations used by the tests.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "msolver/csp.hpp"
#include "msolver/engine.hpp"
#include "msolver/policies.hpp"
#include "msolver/rng.hpp"

namespace oracle {

using msolver::csp::Assignment;
using msolver::csp::ConstraintSystem;

/// Every 0/1 vector x with A x = N, by trying all 2^m of them.
inline std::vector<Assignment> brute_force(const ConstraintSystem& sys) {
  const std::size_t m = sys.cols();
  std::vector<Assignment> out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    bool ok = true;
    for (std::size_t i = 0; i < sys.rows() && ok; ++i) {
      int sum = 0;
      for (std::size_t j = 0; j < m; ++j) sum += sys.A[i][j] * static_cast<int>((mask >> j) & 1);
      ok = sum == sys.targets[i];
    }
    if (!ok) continue;
    Assignment a(m);
    for (std::size_t j = 0; j < m; ++j) a[j] = static_cast<std::uint8_t>((mask >> j) & 1);
    out.push_back(std::move(a));
  }
  return out;
}

inline std::vector<Assignment> sorted(std::vector<Assignment> v) {
  std::sort(v.begin(), v.end());
  return v;
}

/// Variables that take one value in every solution: -1 if they vary.
inline std::vector<int> backbone(const std::vector<Assignment>& sols, std::size_t m) {
  std::vector<int> out(m, -1);
  if (sols.empty()) return out;
  for (std::size_t j = 0; j < m; ++j) {
    const int v = sols.front()[j];
    bool fixed = std::all_of(sols.begin(), sols.end(), [&](const Assignment& a) { return a[j] == v; });
    out[j] = fixed ? v : -1;
  }
  return out;
}

/// A consistent system shaped like a Minesweeper frontier: variables laid
/// on a strip, each row covering a short window of neighbours, targets
/// taken from a hidden mine assignment.
inline ConstraintSystem random_frontier(msolver::Rng& rng, int maxVars = 16) {
  const int m = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(maxVars)));
  const int rows = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(m + 2)));
  std::vector<std::uint8_t> hidden(static_cast<std::size_t>(m));
  const double density = 0.15 + 0.5 * rng.unit();
  for (auto& h : hidden) h = rng.unit() < density ? 1 : 0;
  std::vector<std::vector<std::uint8_t>> A;
  std::vector<int> N;
  for (int i = 0; i < rows; ++i) {
    std::vector<std::uint8_t> row(static_cast<std::size_t>(m), 0);
    const int centre = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
    const int width = 1 + static_cast<int>(rng.below(3));
    for (int j = std::max(0, centre - width); j <= std::min(m - 1, centre + width); ++j) {
      if (rng.unit() < 0.8 || j == centre) row[static_cast<std::size_t>(j)] = 1;
    }
    int n = 0;
    for (int j = 0; j < m; ++j) n += row[static_cast<std::size_t>(j)] * hidden[static_cast<std::size_t>(j)];
    A.push_back(std::move(row));
    N.push_back(n);
  }
  return ConstraintSystem::from_matrix(std::move(A), std::move(N));
}

/// Frontiers taken from real games: plays 3.0 on the given board and keeps
/// the extracted system at every probabilistic move whose size lies in
/// [minVars, maxVars].
inline std::vector<ConstraintSystem> game_frontiers(int rows, int cols, int mines, int games,
                                                    int minVars, int maxVars, std::uint64_t seed) {
  using namespace msolver;
  std::vector<ConstraintSystem> out;
  for (int g = 0; g < games; ++g) {
    engine::BoardConfig config{rows, cols, mines, derive_seed(seed, static_cast<std::uint64_t>(g))};
    auto ctx = policy::PolicyContext::make(policy::VersionId::V3_5, {}, derive_seed(seed, 77, static_cast<std::uint64_t>(g)));
    policy::PlayOptions play;
    play.observer = [&](const policy::StepInfo& step) {
      if (!step.decision.snapshot) return;
      const auto& sys = step.decision.snapshot->system;
      const int m = static_cast<int>(sys.cols());
      if (m >= minVars && m <= maxVars) out.push_back(sys);
    };
    policy::play_game(config, ctx, play);
  }
  return out;
}

}  // namespace oracle
