#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fo2tree {

// Two-variable first-order logic over finite ordered labelled trees.
// Variables range over exactly the two names x and y. Binary atoms read
// top-down / left-to-right: ParentOf(u,v) says u is the parent of v,
// AncOf(u,v) says u is a proper ancestor of v, LeftSibOf(u,v) says u is the
// immediate left sibling of v and LeftOf is its transitive closure.

enum class Var : uint8_t { X = 0, Y = 1 };

inline Var other(Var v) { return v == Var::X ? Var::Y : Var::X; }
inline const char* var_name(Var v) { return v == Var::X ? "x" : "y"; }

enum class BinRel : uint8_t { ParentOf, AncOf, LeftSibOf, LeftOf };

const char* bin_rel_name(BinRel r);

enum class FoKind : uint8_t {
  Pred,
  Eq,
  Bin,
  Not,
  And,
  Or,
  Implies,
  Iff,
  Exists,
  Forall,
};

class FoNode;
using FoFormula = std::shared_ptr<const FoNode>;

class FoNode {
 public:
  FoKind kind;
  std::string pred;    // Pred only
  Var v1 = Var::X;     // Pred / Eq / Bin argument 1; quantifiers: bound var
  Var v2 = Var::X;     // Eq / Bin argument 2
  BinRel rel = BinRel::ParentOf;
  FoFormula lhs;       // unary + binary connectives, quantifier body
  FoFormula rhs;       // binary connectives only

  FoNode(FoKind k) : kind(k) {}
};

FoFormula fo_pred(std::string name, Var v);
FoFormula fo_eq(Var a, Var b);
FoFormula fo_bin(BinRel r, Var a, Var b);
FoFormula fo_not(FoFormula f);
FoFormula fo_and(FoFormula a, FoFormula b);
FoFormula fo_or(FoFormula a, FoFormula b);
FoFormula fo_implies(FoFormula a, FoFormula b);
FoFormula fo_iff(FoFormula a, FoFormula b);
FoFormula fo_exists(Var v, FoFormula body);
FoFormula fo_forall(Var v, FoFormula body);

// Conjunction / disjunction of a list; empty list is an error for callers that
// cannot supply a neutral element, so these require a non-empty input.
FoFormula fo_and_all(const std::vector<FoFormula>& fs);
FoFormula fo_or_all(const std::vector<FoFormula>& fs);

struct ParseError : std::runtime_error {
  size_t position;
  ParseError(std::string msg, size_t pos)
      : std::runtime_error(std::move(msg)), position(pos) {}
};

// Parses the concrete grammar: atoms `P(x)`, `x = y`, `ParentOf(x,y)`,
// `ChildOf(x,y)`, `AncOf(x,y)`, `DescOf(x,y)`, `LeftSibOf(x,y)`,
// `LeftOf(x,y)`; connectives `!` `&` `|` `->` `<->` with precedence
// `!` > `&` > `|` > `->` > `<->` (`->` right associative); quantifiers
// `exists x.` / `forall y.` scoping to the end of the enclosing parenthesis.
// ChildOf / DescOf are surface sugar, normalized by argument swap.
// If a signature is supplied, predicates outside it are rejected.
FoFormula parse_fo2(std::string_view text,
                    const std::vector<std::string>* signature = nullptr);

// Fully parenthesized rendering; parse(render(f)) is structurally f.
std::string render(const FoFormula& f);

bool structurally_equal(const FoFormula& a, const FoFormula& b);
size_t formula_size(const FoFormula& f);  // AST node count
std::set<Var> free_vars(const FoFormula& f);
bool is_sentence(const FoFormula& f);

// Sorted list of predicate names occurring in f.
std::vector<std::string> predicates_of(const FoFormula& f);

enum class VocabTag : uint8_t { Full, NoAncOf, ParOf, NoParOf, AncOf };

const char* vocab_tag_name(VocabTag t);
std::optional<VocabTag> vocab_tag_from_name(std::string_view s);

// Set of vocabulary tags whose binary-atom budget covers every binary atom of
// f. Equality never counts against a vocabulary. A formula with no binary
// atoms is admitted by all five tags.
std::set<VocabTag> vocabulary_of(const FoFormula& f);
bool vocab_allows(VocabTag tag, BinRel rel);

// Swaps the two variable names throughout (capture-free because the rename is
// a bijection on {x, y}).
FoFormula swap_vars(const FoFormula& f);

// Canonical form for formulas with at most one free variable: the free
// variable is renamed to x and bound variables get a deterministic name
// (a closed quantified subformula binds x; one binding over a free w binds
// the other name than w's image).
FoFormula canon_one_var(const FoFormula& f);

// Ordered, duplicate-free list of the one-variable subformulas of f,
// normalized to free variable x, subformulas before superformulas.
class ClosureBasis {
 public:
  std::vector<FoFormula> entries;

  // Index of a canonical one-variable formula, or -1.
  int index_of(const FoFormula& canonical) const;
  size_t size() const { return entries.size(); }

  void push(FoFormula canonical);

 private:
  std::unordered_map<std::string, int> index_;
};

ClosureBasis one_var_closure(const FoFormula& f);

}  // namespace fo2tree
