#include "msolver/csp.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>

namespace msolver::csp {

int ConstraintSystem::row_variable_count(std::size_t i) const {
  int count = 0;
  for (auto a : A[i]) count += a != 0;
  return count;
}

void ConstraintSystem::reduce(std::size_t j, int value) {
  for (std::size_t i = 0; i < A.size(); ++i) {
    if (A[i][j] == 0) continue;
    if (value == 1) --targets[i];
    A[i][j] = 0;
  }
  variables[j].value = value == 1 ? VarValue::One : VarValue::Zero;
}

ConstraintSystem ConstraintSystem::from_matrix(std::vector<std::vector<std::uint8_t>> a,
                                               std::vector<int> n) {
  if (a.size() != n.size()) throw std::invalid_argument("A and N row counts differ");
  const std::size_t cols = a.empty() ? 0 : a.front().size();
  for (const auto& row : a) {
    if (row.size() != cols) throw std::invalid_argument("ragged coefficient matrix");
  }
  ConstraintSystem s;
  s.A = std::move(a);
  s.targets = std::move(n);
  s.variables.resize(cols);
  for (std::size_t j = 0; j < cols; ++j) s.variables[j].cell = {0, static_cast<int>(j)};
  return s;
}

ConstraintSystem extract_constraints(const engine::BoardView& view) {
  using engine::Coord;
  std::map<int, std::size_t> column;  // board index -> variable column
  struct Row {
    std::vector<int> cells;
    int target;
    Coord at;
  };
  std::vector<Row> rows;

  for (int idx = 0; idx < view.rows * view.cols; ++idx) {
    const auto& cell = view.cells[static_cast<std::size_t>(idx)];
    if (!cell.uncovered() || cell.count == 0) continue;
    const Coord c = view.coord(idx);
    Row row{{}, cell.count, c};
    for_each_neighbor(c, view.rows, view.cols, [&](Coord n) {
      const auto& nb = view.at(n);
      if (nb.flagged()) --row.target;
      else if (nb.covered()) row.cells.push_back(view.index(n));
    });
    if (row.cells.empty()) {
      if (row.target != 0) {
        throw ContradictionError("cell " + engine::to_string(c) + " has an unsatisfiable target");
      }
      continue;
    }
    for (int v : row.cells) column.emplace(v, 0);
    rows.push_back(std::move(row));
  }

  ConstraintSystem s;
  s.variables.reserve(column.size());
  for (auto& [idx, col] : column) {
    col = s.variables.size();
    s.variables.push_back({view.coord(idx), VarValue::Unassigned});
  }
  s.A.assign(rows.size(), std::vector<std::uint8_t>(column.size(), 0));
  s.targets.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.target < 0 || row.target > static_cast<int>(row.cells.size())) {
      throw ContradictionError("cell " + engine::to_string(row.at) + " needs " +
                               std::to_string(row.target) + " mines among " +
                               std::to_string(row.cells.size()) + " covered neighbours");
    }
    for (int v : row.cells) s.A[i][column.at(v)] = 1;
    s.targets.push_back(row.target);
  }
  return s;
}

ConstraintSystem reduce(ConstraintSystem system, std::size_t j, int value) {
  system.reduce(j, value);
  return system;
}

bool feasible(const ConstraintSystem& system) {
  for (std::size_t i = 0; i < system.rows(); ++i) {
    const int t = system.targets[i];
    if (t < 0 || t > system.row_variable_count(i)) return false;
  }
  return true;
}

namespace {

// Sparse view of A used by both enumerators and DSS.
struct Layout {
  std::vector<std::vector<int>> rowVars;
  std::vector<std::vector<int>> varRows;
  std::vector<int> weight;  // rows containing each variable

  explicit Layout(const ConstraintSystem& s)
      : rowVars(s.rows()), varRows(s.cols()), weight(s.cols(), 0) {
    for (std::size_t i = 0; i < s.rows(); ++i) {
      for (std::size_t j = 0; j < s.cols(); ++j) {
        if (s.A[i][j] == 0) continue;
        rowVars[i].push_back(static_cast<int>(j));
        varRows[j].push_back(static_cast<int>(i));
        ++weight[j];
      }
    }
  }
};

struct Node {
  std::vector<std::int8_t> value;
  std::vector<int> target;
  std::vector<int> free;
  int assigned = 0;
  std::int64_t depth = 0;
};

Node root_node(const ConstraintSystem& s, const Layout& layout) {
  Node n;
  n.value.assign(s.cols(), -1);
  n.target = s.targets;
  n.free.resize(s.rows());
  for (std::size_t i = 0; i < s.rows(); ++i) n.free[i] = static_cast<int>(layout.rowVars[i].size());
  for (std::size_t j = 0; j < s.cols(); ++j) {
    if (s.variables[j].value == VarValue::Unassigned) continue;
    // Already reduced: the column is zero, so only the record changes.
    n.value[j] = static_cast<std::int8_t>(s.variables[j].value);
    ++n.assigned;
  }
  return n;
}

bool row_ok(const Node& n, int r) { return n.target[r] >= 0 && n.target[r] <= n.free[r]; }

// Assigns v and reports whether every row touching v stays satisfiable.
bool assign(Node& n, const Layout& layout, int v, int value) {
  n.value[v] = static_cast<std::int8_t>(value);
  ++n.assigned;
  bool ok = true;
  for (int r : layout.varRows[v]) {
    --n.free[r];
    n.target[r] -= value;
    ok = ok && row_ok(n, r);
  }
  return ok;
}

// The DSS row rules on a search node. Returns false on contradiction.
bool propagate(Node& n, const Layout& layout, int passes, DeterminedList* out) {
  const int rows = static_cast<int>(layout.rowVars.size());
  for (int pass = 0; pass < passes; ++pass) {
    bool fired = false;
    for (int r = 0; r < rows; ++r) {
      const int free = n.free[r];
      const int target = n.target[r];
      if (target < 0 || target > free) return false;
      if (free == 0) continue;
      int value;
      if (target == 0) value = 0;
      else if (target == free) value = 1;
      else continue;
      fired = true;
      for (int v : layout.rowVars[r]) {
        if (n.value[v] != -1) continue;
        if (!assign(n, layout, v, value)) return false;
        if (out) out->push_back({v, value});
      }
    }
    if (!fired) break;
  }
  return true;
}

void throw_on_bad_rows(const ConstraintSystem& s) {
  for (std::size_t i = 0; i < s.rows(); ++i) {
    if (s.targets[i] < 0 || s.targets[i] > s.row_variable_count(i)) {
      throw ContradictionError("row " + std::to_string(i) + " is unsatisfiable");
    }
  }
}

struct KeyHash {
  std::size_t operator()(const Assignment& a) const noexcept {
    std::size_t h = 1469598103934665603ULL;
    for (auto b : a) h = (h ^ b) * 1099511628211ULL;
    return h;
  }
};

SolutionSet search(const ConstraintSystem& system, const TraversalLimits& limits, Rng* rng,
                   bool withDss) {
  const Layout layout(system);
  SolutionSet result;
  Node root = root_node(system, layout);
  bool ok = true;
  for (std::size_t r = 0; r < system.rows() && ok; ++r) ok = row_ok(root, static_cast<int>(r));
  if (ok && withDss) ok = propagate(root, layout, kDssPasses, nullptr);
  if (!ok) return result;

  const int m = static_cast<int>(system.cols());
  std::unordered_set<Assignment, KeyHash> seen;
  std::vector<Node> stack;
  stack.push_back(std::move(root));

  while (!stack.empty()) {
    if (result.stats.visitedNodes >= limits.maxIterations) {
      result.truncated = true;
      break;
    }
    if (limits.deadline && (result.stats.visitedNodes & 63) == 0 &&
        std::chrono::steady_clock::now() >= *limits.deadline) {
      result.truncated = true;
      break;
    }
    Node node = std::move(stack.back());
    stack.pop_back();
    ++result.stats.visitedNodes;

    if (node.assigned == m) {
      Assignment a(node.value.begin(), node.value.end());
      if (seen.insert(a).second) result.solutions.push_back(std::move(a));
      if (static_cast<std::int64_t>(result.solutions.size()) >= limits.maxSolutions) {
        result.truncated = !stack.empty();
        break;
      }
      continue;
    }
    if (node.depth >= limits.maxDepth) {
      result.truncated = true;
      continue;
    }

    int var = -1;
    if (withDss) {
      for (int j = 0; j < m; ++j) {
        if (node.value[j] == -1 && (var == -1 || layout.weight[j] > layout.weight[var])) var = j;
      }
    } else {
      for (int j = 0; j < m && var == -1; ++j) {
        if (node.value[j] == -1) var = j;
      }
    }
    ++result.stats.branchNodes;

    int first = 0;
    if (withDss && rng != nullptr && rng->coin()) first = 1;
    // Push the second branch first so the first is explored next.
    for (int value : {1 - first, first}) {
      Node child = node;
      bool good = assign(child, layout, var, value);
      if (good && withDss) good = propagate(child, layout, kDssPasses, nullptr);
      if (!good) continue;
      ++child.depth;
      stack.push_back(std::move(child));
    }
  }
  return result;
}

}  // namespace

DeterminedList dss(ConstraintSystem& system, int passes) {
  throw_on_bad_rows(system);
  const Layout layout(system);
  Node node = root_node(system, layout);
  DeterminedList found;
  if (!propagate(node, layout, passes, &found)) {
    throw ContradictionError("deterministic search reached an unsatisfiable row");
  }
  for (const auto& d : found) system.reduce(static_cast<std::size_t>(d.variable), d.value);

  std::vector<std::vector<std::uint8_t>> keptA;
  std::vector<int> keptN;
  for (std::size_t i = 0; i < system.rows(); ++i) {
    if (system.row_variable_count(i) == 0) {
      if (system.targets[i] != 0) throw ContradictionError("empty row with nonzero target");
      continue;
    }
    keptA.push_back(std::move(system.A[i]));
    keptN.push_back(system.targets[i]);
  }
  system.A = std::move(keptA);
  system.targets = std::move(keptN);
  return found;
}

SolutionSet enumerate_backtracking(const ConstraintSystem& system, const TraversalLimits& limits) {
  return search(system, limits, nullptr, false);
}

SolutionSet enumerate_dsscsp(const ConstraintSystem& system, const TraversalLimits& limits,
                             Rng& rng) {
  return search(system, limits, &rng, true);
}

std::vector<double> probabilities(const SolutionSet& solutions) {
  if (solutions.solutions.empty()) throw ContradictionError("no solutions to average");
  const std::size_t m = solutions.solutions.front().size();
  std::vector<std::int64_t> ones(m, 0);
  for (const auto& s : solutions.solutions) {
    for (std::size_t j = 0; j < m; ++j) ones[j] += s[j];
  }
  const auto total = static_cast<double>(solutions.solutions.size());
  std::vector<double> p(m);
  for (std::size_t j = 0; j < m; ++j) p[j] = static_cast<double>(ones[j]) / total;
  return p;
}

namespace {

std::string next_data_line(std::istream& in, std::size_t& lineNo) {
  std::string line;
  while (std::getline(in, line)) {
    ++lineNo;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) return line;
  }
  throw std::runtime_error("constraint system: unexpected end of input after line " +
                           std::to_string(lineNo));
}

template <typename T>
std::vector<T> parse_ints(const std::string& line, std::size_t expected, std::size_t lineNo) {
  std::istringstream ss(line);
  std::vector<T> out;
  long long v;
  while (ss >> v) out.push_back(static_cast<T>(v));
  if (!ss.eof() || out.size() != expected) {
    throw std::runtime_error("constraint system: line " + std::to_string(lineNo) + " expected " +
                             std::to_string(expected) + " integers");
  }
  return out;
}

}  // namespace

ConstraintSystem read_system(std::istream& in) {
  std::size_t lineNo = 0;
  auto header = parse_ints<long long>(next_data_line(in, lineNo), 2, lineNo);
  if (header[0] < 0 || header[1] < 0) throw std::runtime_error("constraint system: negative size");
  const auto rows = static_cast<std::size_t>(header[0]);
  const auto cols = static_cast<std::size_t>(header[1]);
  std::vector<std::vector<std::uint8_t>> a;
  for (std::size_t i = 0; i < rows; ++i) {
    auto row = parse_ints<std::uint8_t>(next_data_line(in, lineNo), cols, lineNo);
    for (auto x : row) {
      if (x > 1) throw std::runtime_error("constraint system: line " + std::to_string(lineNo) +
                                          " has a coefficient outside {0,1}");
    }
    a.push_back(std::move(row));
  }
  std::vector<int> n;
  if (rows > 0) n = parse_ints<int>(next_data_line(in, lineNo), rows, lineNo);
  auto s = ConstraintSystem::from_matrix(std::move(a), std::move(n));
  if (rows == 0) s.variables.resize(cols);
  for (std::size_t j = 0; j < cols; ++j) s.variables[j].cell = {0, static_cast<int>(j)};
  return s;
}

void write_system(std::ostream& out, const ConstraintSystem& system) {
  out << system.rows() << ' ' << system.cols() << '\n';
  for (const auto& row : system.A) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << int(row[j]);
    out << '\n';
  }
  if (system.rows() > 0) {
    for (std::size_t i = 0; i < system.rows(); ++i) out << (i ? " " : "") << system.targets[i];
    out << '\n';
  }
}

}  // namespace msolver::csp
