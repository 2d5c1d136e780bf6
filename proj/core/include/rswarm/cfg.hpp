#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rswarm/ast.hpp"

namespace rswarm {

struct CfgNode {
  enum class Kind { Entry, Exit, Statement, Branch, Merge };
  Kind kind = Kind::Statement;
  std::string label;
  std::optional<SourceSpan> span;
};

// Single-entry/single-exit per function. E, N, P are derived from the stored
// lists so they cannot drift out of sync.
struct ControlFlowGraph {
  std::vector<CfgNode> nodes;
  std::vector<std::pair<int, int>> edges;
  int entry_node = -1;
  int exit_node = -1;

  int n() const { return static_cast<int>(nodes.size()); }
  int e() const { return static_cast<int>(edges.size()); }
  int p() const;  // connected components, edges taken as undirected
};

// Maps Haskell constructs onto branch/merge nodes: if, case alternatives,
// guard chains, multi-clause dispatch, short-circuit &&/||, and list
// comprehension qualifiers all branch; everything else chains linearly.
// Where/let-bound local definitions and lambdas are inlined into the graph
// of the enclosing function.
ControlFlowGraph build_cfg(const FunctionDef& fn);

// E - N + 2P. Throws InvalidCfg when the graph is empty (P = 0) or an edge
// references a node that does not exist.
int cyclomatic_complexity(const ControlFlowGraph& cfg);

}  // namespace rswarm
