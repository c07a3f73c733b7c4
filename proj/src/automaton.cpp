#include "fo2tree/automaton.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace fo2tree {

int TreeAutomaton::symbol_index(std::string_view name) const {
  auto it = std::lower_bound(alphabet.begin(), alphabet.end(), name);
  if (it == alphabet.end() || *it != name) return -1;
  return static_cast<int>(it - alphabet.begin());
}

int TreeAutomaton::state_index(std::string_view name) const {
  auto it = std::find(states.begin(), states.end(), name);
  if (it == states.end()) return -1;
  return static_cast<int>(it - states.begin());
}

void TreeAutomaton::add_transition(std::string_view symbol,
                                   const std::vector<std::string>& child_states,
                                   std::string_view target) {
  int sym = symbol_index(symbol);
  if (sym < 0) throw std::invalid_argument("add_transition: unknown symbol");
  if (static_cast<int>(child_states.size()) > rank)
    throw std::invalid_argument("add_transition: tuple longer than rank");
  std::vector<int> tuple;
  for (const auto& s : child_states) {
    int q = state_index(s);
    if (q < 0) throw std::invalid_argument("add_transition: unknown state");
    tuple.push_back(q);
  }
  int tq = state_index(target);
  if (tq < 0) throw std::invalid_argument("add_transition: unknown target state");
  transitions[{sym, tuple}].insert(tq);
}

namespace {

int node_symbol(const Tree& t, const TreeAutomaton& a, int node) {
  if (t.nodes[node].labels.size() != 1)
    throw std::invalid_argument("run_automaton: tree violates the UAR");
  const std::string& name = t.signature[t.nodes[node].labels[0]];
  int sym = a.symbol_index(name);
  if (sym < 0)
    throw std::invalid_argument("run_automaton: symbol '" + name + "' outside alphabet");
  return sym;
}

}  // namespace

AutomatonRun run_automaton(const Tree& t, const TreeAutomaton& a) {
  AutomatonRun run;
  int n = static_cast<int>(t.size());
  run.reachable.assign(n, {});

  // Children come after parents in preorder storage; sweep backwards.
  for (int u = n - 1; u >= 0; --u) {
    const auto& ch = t.nodes[u].children;
    if (static_cast<int>(ch.size()) > a.rank)
      throw std::invalid_argument("run_automaton: outdegree exceeds rank");
    int sym = node_symbol(t, a, u);
    std::set<int>& out = run.reachable[u];
    // All combinations of child reachable states.
    std::vector<int> tuple(ch.size());
    std::function<void(size_t)> combine = [&](size_t k) {
      if (k == ch.size()) {
        auto it = a.transitions.find({sym, tuple});
        if (it != a.transitions.end()) out.insert(it->second.begin(), it->second.end());
        return;
      }
      for (int q : run.reachable[ch[k]]) {
        tuple[k] = q;
        combine(k + 1);
      }
    };
    combine(0);
  }

  for (int q : run.reachable.empty() ? std::set<int>{} : run.reachable[0])
    if (a.accepting.count(q)) {
      run.accepted = true;
      break;
    }
  return run;
}

std::vector<int> state_abstraction(const Tree& t, const TreeAutomaton& a) {
  AutomatonRun run = run_automaton(t, a);
  if (!run.accepted)
    throw std::invalid_argument("state_abstraction: no accepting run");

  // State order for "least" is the name order.
  auto state_less = [&a](int p, int q) { return a.states[p] < a.states[q]; };

  int n = static_cast<int>(t.size());
  std::vector<int> chosen(n, -1);
  int root_state = -1;
  for (int q : run.reachable[0]) {
    if (!a.accepting.count(q)) continue;
    if (root_state < 0 || state_less(q, root_state)) root_state = q;
  }
  chosen[0] = root_state;

  std::function<void(int)> assign = [&](int u) {
    const auto& ch = t.nodes[u].children;
    if (ch.empty()) return;
    int sym = node_symbol(t, a, u);
    // Lexicographically least (by state name) child tuple supporting chosen[u].
    std::vector<int> best;
    std::vector<int> tuple(ch.size());
    std::function<void(size_t)> search = [&](size_t k) {
      if (k == ch.size()) {
        auto it = a.transitions.find({sym, tuple});
        if (it == a.transitions.end() || !it->second.count(chosen[u])) return;
        if (best.empty()) {
          best = tuple;
          return;
        }
        for (size_t i = 0; i < tuple.size(); ++i) {
          if (state_less(tuple[i], best[i])) { best = tuple; return; }
          if (state_less(best[i], tuple[i])) return;
        }
        return;
      }
      std::vector<int> opts(run.reachable[ch[k]].begin(), run.reachable[ch[k]].end());
      std::sort(opts.begin(), opts.end(), state_less);
      for (int q : opts) {
        tuple[k] = q;
        search(k + 1);
      }
    };
    search(0);
    if (best.empty())
      throw std::logic_error("state_abstraction: inconsistent reachable sets");
    for (size_t i = 0; i < ch.size(); ++i) chosen[ch[i]] = best[i];
    for (int c : ch) assign(c);
  };
  assign(0);
  return chosen;
}

TreeAutomaton parse_automaton(std::string_view text) {
  TreeAutomaton a;
  std::istringstream in{std::string(text)};
  std::string line;
  std::set<std::string> alphabet_seen;
  struct RawTrans {
    std::string sym;
    std::vector<std::string> tuple;
    std::string target;
  };
  std::vector<RawTrans> raw;
  bool have_rank = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok == "rank") {
      ls >> a.rank;
      have_rank = true;
    } else if (tok == "states") {
      std::string s;
      while (ls >> s) a.states.push_back(s);
    } else if (tok == "accept") {
      std::string s;
      while (ls >> s) {
        int q = a.state_index(s);
        if (q < 0) throw std::invalid_argument("parse_automaton: unknown accept state " + s);
        a.accepting.insert(q);
      }
    } else {
      // sym(q_a, q_b) -> q_c
      std::string rest = tok;
      std::string tail;
      std::getline(ls, tail);
      rest += tail;
      size_t open = rest.find('(');
      size_t close = rest.find(')');
      size_t arrow = rest.find("->");
      if (open == std::string::npos || close == std::string::npos ||
          arrow == std::string::npos || close < open || arrow < close)
        throw std::invalid_argument("parse_automaton: bad transition line: " + line);
      RawTrans r;
      r.sym = rest.substr(0, open);
      std::string args = rest.substr(open + 1, close - open - 1);
      std::string cur;
      for (char c : args) {
        if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
          if (!cur.empty()) r.tuple.push_back(cur);
          cur.clear();
        } else {
          cur += c;
        }
      }
      if (!cur.empty()) r.tuple.push_back(cur);
      std::string target = rest.substr(arrow + 2);
      target.erase(std::remove_if(target.begin(), target.end(),
                                  [](unsigned char c) { return std::isspace(c); }),
                   target.end());
      r.target = target;
      alphabet_seen.insert(r.sym);
      raw.push_back(std::move(r));
    }
  }
  if (!have_rank) throw std::invalid_argument("parse_automaton: missing rank");
  if (a.states.empty()) throw std::invalid_argument("parse_automaton: no states");
  a.alphabet.assign(alphabet_seen.begin(), alphabet_seen.end());
  for (const auto& r : raw) a.add_transition(r.sym, r.tuple, r.target);
  if (a.alphabet.empty()) throw std::invalid_argument("parse_automaton: empty alphabet");
  return a;
}

std::string render_automaton(const TreeAutomaton& a) {
  std::ostringstream out;
  out << "rank " << a.rank << "\n";
  out << "states";
  for (const auto& s : a.states) out << ' ' << s;
  out << "\naccept";
  for (int q : a.accepting) out << ' ' << a.states[q];
  out << "\n";
  for (const auto& [key, targets] : a.transitions) {
    for (int tq : targets) {
      out << a.alphabet[key.first] << '(';
      for (size_t i = 0; i < key.second.size(); ++i) {
        if (i) out << ", ";
        out << a.states[key.second[i]];
      }
      out << ") -> " << a.states[tq] << "\n";
    }
  }
  return out.str();
}

TreeAutomaton universal_automaton(const std::vector<std::string>& alphabet, int rank) {
  TreeAutomaton a;
  a.rank = rank;
  a.alphabet = alphabet;
  std::sort(a.alphabet.begin(), a.alphabet.end());
  a.states = {"q"};
  a.accepting = {0};
  for (size_t s = 0; s < a.alphabet.size(); ++s)
    for (int k = 0; k <= rank; ++k)
      a.transitions[{static_cast<int>(s), std::vector<int>(k, 0)}] = {0};
  return a;
}

}  // namespace fo2tree
