#pragma once

// Shared helpers for the test suites: an independent reference evaluator used
// as the oracle for the main evaluation path, plus random generators for
// trees and FO2 sentences.

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fo2tree/formula.hpp"
#include "fo2tree/solver.hpp"
#include "fo2tree/tree.hpp"

namespace fo2tree::testing {

// Reference semantics by direct recursion over assignments. Shares nothing
// with the table-based evaluator.
inline bool eval_naive(const Tree& t, const FoFormula& f,
                       std::map<Var, int> asg) {
  auto anc = [&](int u, int v) {  // u proper ancestor of v
    int cur = t.nodes[v].parent;
    while (cur != -1) {
      if (cur == u) return true;
      cur = t.nodes[cur].parent;
    }
    return false;
  };
  auto sib_index = [&](int u) {
    int p = t.nodes[u].parent;
    if (p == -1) return -1;
    const auto& ch = t.nodes[p].children;
    for (size_t i = 0; i < ch.size(); ++i)
      if (ch[i] == u) return static_cast<int>(i);
    return -1;
  };
  switch (f->kind) {
    case FoKind::Pred:
      return t.has_label(asg.at(f->v1), f->pred);
    case FoKind::Eq:
      return asg.at(f->v1) == asg.at(f->v2);
    case FoKind::Bin: {
      int u = asg.at(f->v1), v = asg.at(f->v2);
      switch (f->rel) {
        case BinRel::ParentOf: return t.nodes[v].parent == u;
        case BinRel::AncOf: return anc(u, v);
        case BinRel::LeftSibOf:
          return t.nodes[u].parent != -1 && t.nodes[u].parent == t.nodes[v].parent &&
                 sib_index(v) == sib_index(u) + 1;
        case BinRel::LeftOf:
          return t.nodes[u].parent != -1 && t.nodes[u].parent == t.nodes[v].parent &&
                 sib_index(u) < sib_index(v);
      }
      return false;
    }
    case FoKind::Not:
      return !eval_naive(t, f->lhs, asg);
    case FoKind::And:
      return eval_naive(t, f->lhs, asg) && eval_naive(t, f->rhs, asg);
    case FoKind::Or:
      return eval_naive(t, f->lhs, asg) || eval_naive(t, f->rhs, asg);
    case FoKind::Implies:
      return !eval_naive(t, f->lhs, asg) || eval_naive(t, f->rhs, asg);
    case FoKind::Iff:
      return eval_naive(t, f->lhs, asg) == eval_naive(t, f->rhs, asg);
    case FoKind::Exists: {
      for (size_t u = 0; u < t.size(); ++u) {
        asg[f->v1] = static_cast<int>(u);
        if (eval_naive(t, f->lhs, asg)) return true;
      }
      return false;
    }
    case FoKind::Forall: {
      for (size_t u = 0; u < t.size(); ++u) {
        asg[f->v1] = static_cast<int>(u);
        if (!eval_naive(t, f->lhs, asg)) return false;
      }
      return true;
    }
  }
  return false;
}

inline Tree random_tree(std::mt19937_64& rng, const std::vector<std::string>& signature,
                        int max_nodes, bool uar) {
  std::uniform_int_distribution<int> size_dist(1, max_nodes);
  int n = size_dist(rng);
  Tree t;
  t.signature = signature;
  std::sort(t.signature.begin(), t.signature.end());
  t.nodes.resize(1);
  t.nodes[0].parent = -1;
  // Attach each new node under a random existing one, then relabel.
  for (int i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> parent_dist(0, static_cast<int>(t.nodes.size()) - 1);
    int p = parent_dist(rng);
    int id = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    t.nodes[id].parent = p;
    t.nodes[p].children.push_back(id);
  }
  int nsig = static_cast<int>(t.signature.size());
  for (auto& node : t.nodes) {
    node.labels.clear();
    if (uar) {
      std::uniform_int_distribution<int> lab(0, nsig - 1);
      node.labels = {lab(rng)};
    } else {
      for (int s = 0; s < nsig; ++s)
        if (rng() & 1) node.labels.push_back(s);
    }
  }
  // Children lists were appended in creation order; renumber into preorder so
  // the invariant (node 0 root, parents before children) holds.
  Tree out;
  out.signature = t.signature;
  std::function<void(int, int)> rebuild = [&](int src, int parent) {
    int id = static_cast<int>(out.nodes.size());
    out.nodes.emplace_back();
    out.nodes[id].parent = parent;
    out.nodes[id].labels = t.nodes[src].labels;
    if (parent != -1) out.nodes[parent].children.push_back(id);
    for (int c : t.nodes[src].children) rebuild(c, id);
  };
  rebuild(0, -1);
  return out;
}

struct FormulaGenOptions {
  std::vector<std::string> signature{"P", "Q"};
  std::vector<BinRel> relations{BinRel::ParentOf, BinRel::AncOf, BinRel::LeftSibOf,
                                BinRel::LeftOf};
  bool allow_equality = true;
  int max_depth = 4;
  size_t max_closure = 12;
};

// Random FO2 sentence; retries until the closure stays within the limit.
inline FoFormula random_sentence(std::mt19937_64& rng, const FormulaGenOptions& opts) {
  std::function<FoFormula(int, bool, bool)> gen = [&](int depth, bool x_free,
                                                      bool y_free) -> FoFormula {
    std::uniform_int_distribution<int> pick(0, 9);
    auto var_in_scope = [&]() {
      if (x_free && y_free) return (rng() & 1) ? Var::X : Var::Y;
      return x_free ? Var::X : Var::Y;
    };
    int choice = pick(rng);
    if (depth <= 0 || choice <= 2) {
      // Atom.
      if (x_free && y_free && !opts.relations.empty() && (rng() % 3) != 0) {
        std::uniform_int_distribution<size_t> rel(0, opts.relations.size() - 1);
        Var a = (rng() & 1) ? Var::X : Var::Y;
        return fo_bin(opts.relations[rel(rng)], a, other(a));
      }
      if (x_free && y_free && opts.allow_equality && (rng() % 4) == 0)
        return fo_eq(Var::X, Var::Y);
      std::uniform_int_distribution<size_t> p(0, opts.signature.size() - 1);
      return fo_pred(opts.signature[p(rng)], var_in_scope());
    }
    if (choice == 3) return fo_not(gen(depth - 1, x_free, y_free));
    if (choice <= 6) {
      FoFormula a = gen(depth - 1, x_free, y_free);
      FoFormula b = gen(depth - 1, x_free, y_free);
      switch (choice) {
        case 4: return fo_and(a, b);
        case 5: return fo_or(a, b);
        default: return fo_implies(a, b);
      }
    }
    // Quantifier over the variable that is not already pinned free outside.
    Var v = (x_free && !y_free) ? Var::Y : (!x_free && y_free) ? Var::X : var_in_scope();
    FoFormula body = gen(depth - 1, x_free || v == Var::X, y_free || v == Var::Y);
    return (rng() & 1) ? fo_exists(v, body) : fo_forall(v, body);
  };

  for (int attempt = 0; attempt < 200; ++attempt) {
    Var v = (rng() & 1) ? Var::X : Var::Y;
    FoFormula body = gen(opts.max_depth, v == Var::X, v == Var::Y);
    FoFormula sentence = (rng() & 1) ? fo_exists(v, body) : fo_forall(v, body);
    if (!is_sentence(sentence)) continue;
    if (one_var_closure(sentence).size() <= opts.max_closure) return sentence;
  }
  // Fallback: a tiny sentence.
  return fo_exists(Var::X, fo_pred(opts.signature.front(), Var::X));
}

// All trees over the signature with at most max_nodes nodes, labelings
// included; the visitor returns true to stop.
inline void for_all_trees(const std::vector<std::string>& signature, int max_nodes,
                          const std::function<bool(const Tree&)>& visit) {
  enumerate_trees(signature, max_nodes, max_nodes, false, std::nullopt, visit);
}

}  // namespace fo2tree::testing
