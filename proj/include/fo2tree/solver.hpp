#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fo2tree/automaton.hpp"
#include "fo2tree/formula.hpp"
#include "fo2tree/modal.hpp"
#include "fo2tree/tree.hpp"

namespace fo2tree {

enum class SolveStatus : uint8_t { Sat, Unsat, BoundedUnsat };

struct Verdict {
  SolveStatus status = SolveStatus::BoundedUnsat;
  bool complete = false;                 // Unsat only: refutation covers all trees
  std::optional<TreeDag> witness;        // Sat only, re-checked
  unsigned long long depth_explored = 0;
  unsigned long long branching_explored = 0;
  unsigned long long nodes_created = 0;
  bool depth_cut = false;       // a live branch hit the depth limit
  bool branching_cut = false;   // a node hit the branching limit
};

struct SolveOptions {
  VocabTag vocabulary = VocabTag::Full;
  bool uar = false;
  std::optional<int> rank;
  const TreeAutomaton* schema = nullptr;
  std::optional<unsigned long long> depth_limit;      // max nodes on a path
  std::optional<unsigned long long> branching_limit;  // max children per node
  unsigned long long node_budget = 200000;            // search nodes created
  double time_budget_seconds = 30.0;
  uint64_t seed = 0;
  std::vector<std::string> extra_signature;  // predicates beyond the formula's
};

struct Bounds {
  unsigned long long depth = 0;
  unsigned long long branching = 0;
  bool saturated = false;  // closed form overflowed and was clamped
};

struct BoundContext {
  VocabTag vocabulary = VocabTag::Full;
  bool uar = false;
  size_t signature_size = 0;
  size_t formula_size = 0;
};

// Closed-form witness bounds per vocabulary variant: with T = 2^basis_size,
// depth = branching = (3T+1)T + 1 node levels; under V_ancOf with the UAR,
// depth = 2 * |Sigma| * |phi|^2 + 2. Values are nondecreasing in the basis
// size and clamp on overflow.
Bounds depth_bound(size_t basis_size, const BoundContext& ctx);

// Bounded-depth satisfiability of a tree-logic formula by depth-first
// construction that materializes only the rightmost branch: the open branch
// is a stack of node types plus pending child obligations; downward, sibling
// and closing transitions enforce the step/eventually consistency rules, and
// failed (type, remaining-depth) subproblems memoize.
Verdict solve_bounded(const ModalFormula& m, unsigned long long depth,
                      unsigned long long branching, const SolveOptions& opts = {});

// Full pipeline: closure -> bounds -> modal translation -> bounded search;
// Sat witnesses are re-model-checked (tree and DAG) before they are returned.
Verdict decide(const FoFormula& f, const SolveOptions& opts = {});

// Exhaustive enumeration of ordered labelled trees within the bounds, in a
// canonical order (node count, then shape and labels); returns the first
// model found. Oracle-grade: no sharing with the bounded search.
std::optional<Tree> brute_force(const FoFormula& f, int max_nodes, int max_depth,
                                const SolveOptions& opts = {});

// Enumerates all trees within the bounds (testing hook used by the oracles).
void enumerate_trees(const std::vector<std::string>& signature, int max_nodes,
                     int max_depth, bool uar, std::optional<int> rank,
                     const std::function<bool(const Tree&)>& visit);

}  // namespace fo2tree
