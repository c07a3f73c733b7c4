#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fo2tree {

// Finite ordered labelled tree. Node labels are sets of predicate names from
// a declared signature; nodes are stored in preorder with node 0 the root.
// Trees are immutable values: operations that change a tree return a new one.

using NodePath = std::vector<int>;  // child indices from the root

std::string path_to_string(const NodePath& p);

class Tree {
 public:
  struct Node {
    std::vector<int> labels;  // sorted signature indices
    int parent = -1;
    std::vector<int> children;
  };

  std::vector<std::string> signature;  // sorted, duplicate-free
  std::vector<Node> nodes;             // preorder, nodes[0] is the root

  size_t size() const { return nodes.size(); }

  int node_at(const NodePath& p) const;      // throws on invalid path
  NodePath path_of(int node) const;
  int depth_nodes() const;                   // max root-to-leaf node count
  int depth_of(int node) const;              // edges from the root
  bool has_label(int node, int pred) const;
  bool has_label(int node, std::string_view pred) const;
  int pred_index(std::string_view name) const;  // -1 if absent

  std::vector<int> preorder() const;         // identity permutation, for clarity
  std::vector<NodePath> leaf_paths() const;  // in DFS order

  bool operator==(const Tree& other) const;
};

enum class Axis : uint8_t {
  ParentOf,
  ChildOf,
  AncOf,
  DescOf,
  LeftSibOf,
  NextSib,
  LeftOf,
  RightOf,
  Incomparable,
};

std::optional<Axis> axis_from_name(std::string_view s);

// Exact axis relation as a set of (node, node) index pairs.
// Incomparable(u,v) iff u != v and neither is an ancestor of the other.
std::set<std::pair<int, int>> axis_pairs(const Tree& t, Axis axis);

// True iff every node carries exactly one predicate.
bool is_uar(const Tree& t);

struct TreeParseError : std::runtime_error {
  size_t position;
  TreeParseError(std::string msg, size_t pos)
      : std::runtime_error(std::move(msg)), position(pos) {}
};

// Canonical text format: node ::= `(` label* `;` node* `)`, children in
// sibling order. With a supplied signature, labels outside it are rejected;
// otherwise the signature is the sorted set of labels that occur.
Tree parse_tree(std::string_view text,
                const std::vector<std::string>* signature = nullptr);
std::string render_tree(const Tree& t);

// Convenience for building trees in code.
Tree make_tree(const std::vector<std::string>& signature,
               const std::string& text);

// Hash-consed DAG of distinct subtrees: one entry per structurally distinct
// subtree, children refer to entry ids.
class TreeDag {
 public:
  struct Entry {
    std::vector<int> labels;    // sorted signature indices
    std::vector<int> children;  // entry ids
    bool operator==(const Entry& o) const {
      return labels == o.labels && children == o.children;
    }
  };

  std::vector<std::string> signature;
  std::vector<Entry> entries;
  int root = -1;

  size_t entry_count() const { return entries.size(); }
  // Node count of the unfolding (saturating at the guard ceiling).
  unsigned long long unfold_size() const;
};

TreeDag to_dag(const Tree& t);

inline constexpr unsigned long long kDefaultUnfoldGuard = 1000000ULL;

// Rebuilds the tree; throws std::length_error when the unfolding exceeds the
// guard.
Tree unfold(const TreeDag& d, unsigned long long guard = kDefaultUnfoldGuard);

// Entry table serialization: lines `#k = (labels ; #i #j ...)` and `root #r`.
std::string render_dag(const TreeDag& d);
TreeDag parse_dag(std::string_view text,
                  const std::vector<std::string>* signature = nullptr);

// Total, well-founded order on trees over a common signature:
// (node count, canonical serialization length, serialization bytes).
// A proper subtree always precedes its whole tree, and the order is monotone
// under substitution into a fixed context.
std::strong_ordering subtree_order(const Tree& a, const Tree& b);

Tree subtree_at(const Tree& t, const NodePath& p);

// DOT rendering for figures.
std::string tree_to_dot(const Tree& t);

}  // namespace fo2tree
