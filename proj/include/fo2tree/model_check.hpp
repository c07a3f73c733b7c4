#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fo2tree/formula.hpp"
#include "fo2tree/modal.hpp"
#include "fo2tree/tree.hpp"

namespace fo2tree {

// phi-types: the set of one-variable subformulas of a fixed sentence true at
// a node, as membership bits over a ClosureBasis.

using TypeBits = std::vector<char>;

struct PhiType {
  TypeBits bits;
  bool operator==(const PhiType& o) const { return bits == o.bits; }
  bool operator<(const PhiType& o) const { return bits < o.bits; }
};

// Truth of every basis entry at every node: bits[entry][node].
struct TypeTable {
  std::vector<std::vector<char>> bits;
  bool bit(int entry, int node) const { return bits[entry][node] != 0; }
  PhiType type_of(int node) const;
};

TypeTable compute_type_table(const Tree& t, const ClosureBasis& basis);

struct Assignment {
  std::optional<NodePath> x;
  std::optional<NodePath> y;
};

// Standard FO2 truth. Free variables of f must be covered by the assignment.
bool eval_fo2(const Tree& t, const FoFormula& f, const Assignment& a = {});

// Equals eval_fo2(unfold(d), f) without unfolding; polynomial in the DAG
// entry count for a fixed sentence.
bool eval_fo2_dag(const TreeDag& d, const FoFormula& f);

PhiType phi_type(const Tree& t, const NodePath& n, const ClosureBasis& basis);

// Per-node sets of phi-types of proper ancestors, proper descendants and
// incomparable nodes (the node itself excluded), plus the selected descendant
// types used by the Update machinery: for each type realized by a proper
// ancestor m' and each existential basis entry, if some proper descendant w
// of m witnesses the body for (m', w), the type of one deterministically
// chosen such w is included.
struct TypeSets {
  std::vector<PhiType> distinct_types;       // id -> bits
  std::vector<int> type_id;                  // node -> id
  std::vector<std::set<int>> anc_types;      // node -> ids
  std::vector<std::set<int>> desc_types;
  std::vector<std::set<int>> incomp_types;
  std::vector<std::set<int>> selected_desc_types;
};

TypeSets type_sets(const Tree& t, const ClosureBasis& basis,
                   uint64_t witness_selection = 0);

// Minimal number of a-intervals covering {i : psi and a hold at p_i} along
// the root-to-leaf path ending at `leaf`. Requires a UAR tree and a V_ancOf
// formula; Lemma-style checkers assert the result against |psi|^2.
int interval_profile(const Tree& t, const NodePath& leaf, const FoFormula& psi,
                     const std::string& a);

// For each DiaDown / DiaUp subformula of a TL_tree formula, the number of
// truth-value flips along the root-to-leaf path ending at `leaf`, top-down.
std::vector<std::pair<ModalFormula, int>> vertical_type_changes(
    const Tree& t, const NodePath& leaf, const ModalFormula& m);

// Relative position of two distinct nodes, as seen from u toward v.
enum class PairConfig : uint8_t {
  Equal,
  Parent,         // v is the parent of u
  AncestorFar,    // v is a proper ancestor of u but not the parent
  Child,          // v is a child of u
  DescendantFar,  // v is a proper descendant of u but not a child
  NextSib,        // v is the immediate right sibling of u
  RightFar,       // v is a later sibling of u but not adjacent
  PrevSib,        // v is the immediate left sibling of u
  LeftFar,        // v is an earlier sibling of u but not adjacent
  IncompOther,    // incomparable and not a sibling
};

PairConfig pair_config(const Tree& t, int u, int v);

// Reusable evaluator for bodies with free variables among {x, y} against a
// fixed tree and basis; amortizes the type table across many pair queries.
class PairEvaluator {
 public:
  PairEvaluator(const Tree& t, const ClosureBasis& basis);
  ~PairEvaluator();
  PairEvaluator(PairEvaluator&&) noexcept;

  bool eval(const FoFormula& body, int u, int v) const;
  bool entry_bit(int entry, int node) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fo2tree
