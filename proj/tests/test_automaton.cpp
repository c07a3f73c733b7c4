#include <random>

#include "doctest.h"
#include "fo2tree/automaton.hpp"
#include "support/test_support.hpp"

using namespace fo2tree;

namespace {

// Two-state parity automaton over {P, Q} counting P-leaves mod 2 on binary
// trees; accepts when the count is even.
TreeAutomaton parity_automaton() {
  TreeAutomaton a;
  a.rank = 2;
  a.alphabet = {"P", "Q"};
  a.states = {"even", "odd"};
  a.accepting = {0};
  a.add_transition("P", {}, "odd");
  a.add_transition("Q", {}, "even");
  for (const std::string& sym : {"P", "Q"})
    for (const std::string& l : {"even", "odd"})
      for (const std::string& r : {"even", "odd"}) {
        bool lodd = l == "odd", rodd = r == "odd";
        a.add_transition(sym, {l, r}, (lodd != rodd) ? "odd" : "even");
        a.add_transition(sym, {l}, l);
      }
  return a;
}

// Reference run: recursive, no reuse of the production evaluator.
std::set<int> naive_reach(const Tree& t, const TreeAutomaton& a, int node) {
  const std::string& sym = t.signature[t.nodes[node].labels.at(0)];
  int s = a.symbol_index(sym);
  std::vector<std::set<int>> kids;
  for (int c : t.nodes[node].children) kids.push_back(naive_reach(t, a, c));
  std::set<int> out;
  std::vector<int> tuple(kids.size());
  std::function<void(size_t)> rec = [&](size_t k) {
    if (k == kids.size()) {
      auto it = a.transitions.find({s, tuple});
      if (it != a.transitions.end()) out.insert(it->second.begin(), it->second.end());
      return;
    }
    for (int q : kids[k]) {
      tuple[k] = q;
      rec(k + 1);
    }
  };
  rec(0);
  return out;
}

TreeAutomaton random_automaton(std::mt19937_64& rng) {
  TreeAutomaton a;
  a.rank = 2;
  a.alphabet = {"P", "Q"};
  int nstates = 2 + static_cast<int>(rng() % 2);
  for (int q = 0; q < nstates; ++q) a.states.push_back("q" + std::to_string(q));
  a.accepting.insert(static_cast<int>(rng() % nstates));
  auto st = [&](int q) { return a.states[q]; };
  for (const std::string& sym : {"P", "Q"}) {
    for (int q = 0; q < nstates; ++q)
      if (rng() % 2) a.add_transition(sym, {}, st(q));
    for (int q1 = 0; q1 < nstates; ++q1) {
      for (int q = 0; q < nstates; ++q)
        if (rng() % 3 == 0) a.add_transition(sym, {st(q1)}, st(q));
      for (int q2 = 0; q2 < nstates; ++q2)
        for (int q = 0; q < nstates; ++q)
          if (rng() % 3 == 0) a.add_transition(sym, {st(q1), st(q2)}, st(q));
    }
  }
  return a;
}

bool within_rank(const Tree& t, int rank) {
  for (const auto& node : t.nodes)
    if (static_cast<int>(node.children.size()) > rank) return false;
  return true;
}

}  // namespace

TEST_CASE("a one-state universal automaton accepts admissible trees") {
  TreeAutomaton a = universal_automaton({"P", "Q"}, 2);
  CHECK(run_automaton(parse_tree("(P ; (Q ;) (P ;))"), a).accepted);
  CHECK(run_automaton(parse_tree("(Q ;)"), a).accepted);
}

TEST_CASE("parity automaton on small trees") {
  TreeAutomaton a = parity_automaton();
  CHECK_FALSE(run_automaton(parse_tree("(P ;)"), a).accepted);
  CHECK(run_automaton(parse_tree("(Q ; (P ;) (P ;))"), a).accepted);
  CHECK_FALSE(run_automaton(parse_tree("(Q ; (P ;) (Q ;))"), a).accepted);
}

TEST_CASE("automaton input validation") {
  TreeAutomaton a = parity_automaton();
  CHECK_THROWS_AS(run_automaton(parse_tree("(P Q ;)"), a), std::invalid_argument);
  CHECK_THROWS_AS(run_automaton(parse_tree("(R ;)"), a), std::invalid_argument);
  CHECK_THROWS_AS(run_automaton(parse_tree("(Q ; (P ;) (P ;) (P ;))"), a),
                  std::invalid_argument);
}

TEST_CASE("automaton text format round trip") {
  TreeAutomaton a = parity_automaton();
  TreeAutomaton b = parse_automaton(render_automaton(a));
  CHECK(b.rank == a.rank);
  CHECK(b.states == a.states);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    Tree t = testing::random_tree(rng, {"P", "Q"}, 7, true);
    if (!within_rank(t, 2)) continue;
    CHECK(run_automaton(t, a).accepted == run_automaton(t, b).accepted);
  }
}

TEST_CASE("runs agree with a naive recursive evaluator") {
  std::mt19937_64 rng(9);
  for (int k = 0; k < 20; ++k) {
    TreeAutomaton a = random_automaton(rng);
    for (int i = 0; i < 40; ++i) {
      Tree t = testing::random_tree(rng, {"P", "Q"}, 7, true);
      if (!within_rank(t, 2)) continue;
      AutomatonRun run = run_automaton(t, a);
      for (size_t u = 0; u < t.size(); ++u)
        CHECK(run.reachable[u] == naive_reach(t, a, static_cast<int>(u)));
    }
  }
}

TEST_CASE("state abstraction is deterministic and validates bottom-up") {
  std::mt19937_64 rng(15);
  int validated = 0;
  for (int k = 0; k < 30; ++k) {
    TreeAutomaton a = random_automaton(rng);
    for (int i = 0; i < 30; ++i) {
      Tree t = testing::random_tree(rng, {"P", "Q"}, 7, true);
      if (!within_rank(t, 2)) continue;
      AutomatonRun run = run_automaton(t, a);
      if (!run.accepted) {
        CHECK_THROWS_AS(state_abstraction(t, a), std::invalid_argument);
        continue;
      }
      std::vector<int> chosen = state_abstraction(t, a);
      CHECK(chosen == state_abstraction(t, a));  // stable across calls
      // The chosen run is a genuine run: every transition present.
      for (size_t u = 0; u < t.size(); ++u) {
        std::vector<int> tuple;
        for (int c : t.nodes[u].children) tuple.push_back(chosen[c]);
        int sym = a.symbol_index(t.signature[t.nodes[u].labels[0]]);
        auto it = a.transitions.find({sym, tuple});
        REQUIRE(it != a.transitions.end());
        CHECK(it->second.count(chosen[u]) == 1);
      }
      CHECK(a.accepting.count(chosen[0]) == 1);
      ++validated;
    }
  }
  CHECK(validated > 50);
}

TEST_CASE("deterministic automaton abstraction equals the unique run") {
  TreeAutomaton a = parity_automaton();
  Tree t = parse_tree("(Q ; (P ;) (P ;))");
  AutomatonRun run = run_automaton(t, a);
  std::vector<int> chosen = state_abstraction(t, a);
  for (size_t u = 0; u < t.size(); ++u) {
    REQUIRE(run.reachable[u].size() == 1);
    CHECK(chosen[u] == *run.reachable[u].begin());
  }
}
