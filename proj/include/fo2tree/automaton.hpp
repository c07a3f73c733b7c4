#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fo2tree/tree.hpp"

namespace fo2tree {

// Ranked bottom-up tree automaton used as a schema. The alphabet consists of
// predicate names and accepted trees satisfy the UAR; transitions map a
// symbol and a tuple of at most `rank` child states to a set of states.

class TreeAutomaton {
 public:
  int rank = 1;
  std::vector<std::string> alphabet;  // sorted
  std::vector<std::string> states;    // declaration order
  std::set<int> accepting;
  // (symbol index, child state tuple) -> possible states
  std::map<std::pair<int, std::vector<int>>, std::set<int>> transitions;

  int symbol_index(std::string_view name) const;  // -1 if absent
  int state_index(std::string_view name) const;   // -1 if absent

  void add_transition(std::string_view symbol, const std::vector<std::string>& child_states,
                      std::string_view target);
};

struct AutomatonRun {
  bool accepted = false;
  std::vector<std::set<int>> reachable;  // per node
};

// Bottom-up reachable state sets. Errors on non-UAR trees, outdegree beyond
// the rank, or symbols outside the alphabet.
AutomatonRun run_automaton(const Tree& t, const TreeAutomaton& a);

// One accepting run, fixed deterministically: the least accepting state at
// the root, then per node the lexicographically least child-state tuple that
// supports the chosen state. Errors when no accepting run exists.
std::vector<int> state_abstraction(const Tree& t, const TreeAutomaton& a);

// Text format: `rank k`, `states q0 q1 ...`, `accept q0 ...`, transition
// lines `sym(q_a, q_b) -> q_c` with `sym() -> q` for leaves.
TreeAutomaton parse_automaton(std::string_view text);
std::string render_automaton(const TreeAutomaton& a);

// Universal schema: accepts every UAR tree over the alphabet with outdegree
// at most `rank`.
TreeAutomaton universal_automaton(const std::vector<std::string>& alphabet, int rank);

}  // namespace fo2tree
