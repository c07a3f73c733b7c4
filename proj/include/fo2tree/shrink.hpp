#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "fo2tree/automaton.hpp"
#include "fo2tree/formula.hpp"
#include "fo2tree/modal.hpp"
#include "fo2tree/model_check.hpp"
#include "fo2tree/tree.hpp"

namespace fo2tree {

// Relation from source-tree nodes to their copies in the overwritten tree:
// zero copies for the overwritten region, two when the replacement subtree
// lies outside it, one otherwise.
struct CopyMap {
  std::map<NodePath, std::vector<NodePath>> images;
};

// t(n1 -> n0): replace the subtree at n0 by a copy of the subtree at n1.
// n1 must not be a proper ancestor of n0.
std::pair<Tree, CopyMap> overwrite(const Tree& t, const NodePath& n0,
                                   const NodePath& n1);

// Partition of nodes by (phi-type, DescTypes, AncTypes, IncompTypes):
// class id per node.
std::vector<int> equiv_full(const Tree& t, const ClosureBasis& basis);

struct ShrinkOptions {
  int depth_target = 0;      // collapse paths longer than this (node count)
  int branching_target = 0;  // shrink child lists longer than this
  bool verify = true;        // assert the per-step preservation lemmas
  const TreeAutomaton* schema = nullptr;
  uint64_t seed = 0;
  int* steps_out = nullptr;
};

// Repeated single-path overwrites between equivalent comparable nodes; every
// surviving node keeps its phi-type (checked per step when verify is set).
Tree collapse_vertical(const Tree& t, const ClosureBasis& basis,
                       const ShrinkOptions& opts = {});

// Sibling-list pruning between equivalent children; survivors keep their
// phi-types and order.
Tree collapse_horizontal(const Tree& t, const ClosureBasis& basis,
                         const ShrinkOptions& opts = {});

// Collapses maximal constant-vertical-type intervals on root-to-leaf paths;
// m must be a TL_tree formula.
Tree collapse_stutter(const Tree& t, const ModalFormula& m,
                      const ShrinkOptions& opts = {});

// Promotion surgery for satisfied V_ancOf formulas on UAR trees: interval
// endpoints stay, interior path nodes are removed and their off-path
// children reattach to the closest surviving ancestor.
Tree promote_shrink(const Tree& t, const FoFormula& f,
                    const ShrinkOptions& opts = {});

enum class UpdateVariant { AncOf, NoAncOf };

struct UpdateStats {
  int steps = 0;
  size_t witness_set_size = 0;
};

// The witness-protected Update iteration: repeatedly replace the subtree of a
// non-protected node by a precedence-smaller subtree of a node with matching
// type conditions, then share subtrees into a DAG. The unfolded result still
// satisfies phi.
TreeDag update_to_dag(const Tree& t, const FoFormula& phi, UpdateVariant variant,
                      const ShrinkOptions& opts = {}, UpdateStats* stats = nullptr);

// Protected witness paths for a satisfying tree, exposed for inspection.
std::set<NodePath> update_witness_set(const Tree& t, const ClosureBasis& basis,
                                      UpdateVariant variant, uint64_t seed = 0);

}  // namespace fo2tree
