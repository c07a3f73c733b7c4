#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fo2tree/formula.hpp"
#include "fo2tree/tree.hpp"

namespace fo2tree {

// Unary temporal logic on trees: eventually / next along the vertical axis
// (CH) and the sibling axis (NS). The diamonds are strict: DiaDown holds via
// a proper descendant, DiaUp via a proper ancestor, DiaRight / DiaLeft via a
// proper following / preceding sibling. NextChild is "some child", NextParent
// "the parent", NextRight / NextLeft the adjacent siblings.

enum class ModalKind : uint8_t {
  True,
  False,
  Atom,
  Not,
  And,
  Or,
  DiaDown,     // <CH>
  DiaUp,       // <-CH>
  NextChild,   // (X CH)
  NextParent,  // (X -CH)
  DiaRight,    // <NS>
  DiaLeft,     // <-NS>
  NextRight,   // (X NS)
  NextLeft,    // (X -NS)
};

class ModalNode;
using ModalFormula = std::shared_ptr<const ModalNode>;

class ModalNode {
 public:
  ModalKind kind;
  std::string atom;  // Atom only
  ModalFormula lhs;
  ModalFormula rhs;  // And / Or only
  explicit ModalNode(ModalKind k) : kind(k) {}
};

ModalFormula m_true();
ModalFormula m_false();
ModalFormula m_atom(std::string name);
ModalFormula m_not(ModalFormula f);
ModalFormula m_and(ModalFormula a, ModalFormula b);
ModalFormula m_or(ModalFormula a, ModalFormula b);
ModalFormula m_modal(ModalKind k, ModalFormula f);

bool is_modal_operator(ModalKind k);

// Maximal structural sharing: structurally equal subformulas of the result
// are pointer-equal.
ModalFormula modal_intern(const ModalFormula& f);

// Number of distinct subformula nodes (shared subterms counted once).
size_t modal_dag_size(const ModalFormula& f);
// Distinct subformulas, children before parents.
std::vector<ModalFormula> modal_subformulas(const ModalFormula& f);
std::vector<std::string> modal_atoms(const ModalFormula& f);

std::string render_modal(const ModalFormula& f);
ModalFormula parse_modal(std::string_view text);

// Truth of every distinct subformula at every node.
struct ModalTable {
  std::vector<ModalFormula> subformulas;  // children-first order
  std::vector<std::vector<char>> bits;    // [subformula][node]
  int index_of(const ModalFormula& f) const;
};
ModalTable eval_modal_table(const Tree& t, const ModalFormula& m);

bool eval_modal(const Tree& t, const ModalFormula& m, const NodePath& n);
bool eval_modal_at_root(const Tree& t, const ModalFormula& m);

// TL_tree: the fragment without the child / parent step modalities.
bool is_tl_tree(const ModalFormula& f);

// ---------------------------------------------------------------------------
// NavXP: navigational XPath core over the fixed axis list of the tree logic.

enum class NavAxis : uint8_t {
  Self,
  Child,
  Descendant,
  DescendantOrSelf,
  AncestorOrSelf,
  NextSibling,
  FollowingSibling,
  PrecedingSibling,
  PreviousSibling,
};

const char* nav_axis_name(NavAxis a);
std::optional<NavAxis> nav_axis_from_name(std::string_view s);

class NavPathNode;
class NavFilterNode;
using NavPath = std::shared_ptr<const NavPathNode>;
using NavFilter = std::shared_ptr<const NavFilterNode>;

enum class NavPathKind : uint8_t { Axis, Seq, Union, Predicate };
enum class NavFilterKind : uint8_t { PathExists, Lab, FAnd, FOr, FNot };

class NavPathNode {
 public:
  NavPathKind kind;
  NavAxis axis = NavAxis::Self;  // Axis
  NavPath p1, p2;                // Seq / Union; Predicate uses p1
  NavFilter filter;              // Predicate
  explicit NavPathNode(NavPathKind k) : kind(k) {}
};

class NavFilterNode {
 public:
  NavFilterKind kind;
  NavPath path;          // PathExists
  std::string label;     // Lab
  NavFilter q1, q2;      // FAnd / FOr; FNot uses q1
  explicit NavFilterNode(NavFilterKind k) : kind(k) {}
};

NavPath nav_axis(NavAxis a);
NavPath nav_seq(NavPath a, NavPath b);
NavPath nav_union(NavPath a, NavPath b);
NavPath nav_pred(NavPath p, NavFilter q);
NavFilter nav_exists(NavPath p);
NavFilter nav_lab(std::string label);
NavFilter nav_and(NavFilter a, NavFilter b);
NavFilter nav_or(NavFilter a, NavFilter b);
NavFilter nav_not(NavFilter q);

// Concrete syntax: axes by name, `p1/p2` composition, `p1 | p2` union,
// `step[q]` predicates, filters `lab()=P`, `q and q`, `q or q`, `not q`.
NavFilter parse_navxp(std::string_view text);
std::string render_navxp(const NavFilter& q);

std::set<std::pair<int, int>> navxp_pairs(const Tree& t, const NavPath& p);
std::set<int> eval_navxp(const Tree& t, const NavFilter& q);
bool navxp_holds(const Tree& t, const NavFilter& q);

// Polynomial translation to the tree logic: for every tree,
// navxp_holds(t, q) == eval_modal at the root of the result. Output measured
// as a shared DAG stays linear in |q|.
ModalFormula navxp_to_modal(const NavFilter& q);

// Equivalence-preserving translation from FO2 sentences: for every tree,
// eval_fo2(t, f) == eval_modal at the root of the result. Output may be
// exponentially larger than f. Sentences whose existentials only ever need
// equal / ancestor / descendant / everywhere witnesses compile to the
// vertical fragment (no sibling or step modalities).
ModalFormula fo2_to_modal(const FoFormula& f);

size_t modal_tree_size(const ModalFormula& f);
size_t navxp_size(const NavFilter& q);

}  // namespace fo2tree
