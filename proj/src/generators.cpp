#include "fo2tree/generators.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace fo2tree {

namespace {

FoFormula px(const std::string& name) { return fo_pred(name, Var::X); }
FoFormula py(const std::string& name) { return fo_pred(name, Var::Y); }

// Exactly one of the given predicates holds of v.
FoFormula exactly_one(Var v, const std::vector<std::string>& preds) {
  std::vector<FoFormula> alts;
  for (size_t i = 0; i < preds.size(); ++i) {
    std::vector<FoFormula> parts{fo_pred(preds[i], v)};
    for (size_t j = 0; j < preds.size(); ++j)
      if (j != i) parts.push_back(fo_not(fo_pred(preds[j], v)));
    alts.push_back(fo_and_all(parts));
  }
  return fo_or_all(alts);
}

std::string zero_x(int i) { return "ZeroX" + std::to_string(i); }
std::string one_x(int i) { return "OneX" + std::to_string(i); }
std::string zero_y(int i) { return "ZeroY" + std::to_string(i); }
std::string one_y(int i) { return "OneY" + std::to_string(i); }
std::string color_pred(const std::string& c) { return "T_" + c; }

}  // namespace

std::vector<std::string> tiling_signature(int n, const std::set<std::string>& colors) {
  std::vector<std::string> sig;
  for (int i = 1; i <= n; ++i) {
    sig.push_back(zero_x(i));
    sig.push_back(one_x(i));
    sig.push_back(zero_y(i));
    sig.push_back(one_y(i));
  }
  for (const auto& c : colors) sig.push_back(color_pred(c));
  std::sort(sig.begin(), sig.end());
  return sig;
}

std::vector<std::string> tiling_ancof_signature(int n, const std::set<std::string>& colors) {
  std::vector<std::string> sig = tiling_signature(n, colors);
  sig.push_back("r");
  std::sort(sig.begin(), sig.end());
  return sig;
}

std::vector<std::string> counter_signature(int n) {
  std::vector<std::string> sig{"b", "s"};
  for (int i = 1; i <= n; ++i) sig.push_back("a" + std::to_string(i));
  std::sort(sig.begin(), sig.end());
  return sig;
}

// ---------------------------------------------------------------------------
// Parent-vocabulary tiling: one node per grid cell, addresses and colors as
// labels, all comparisons unary.

FoFormula gen_tiling_parof(int n, const std::set<std::string>& colors,
                           const std::set<ColorPair>& h, const std::set<ColorPair>& v) {
  if (n < 1) throw std::invalid_argument("gen_tiling_parof: n must be >= 1");
  if (colors.empty()) throw std::invalid_argument("gen_tiling_parof: empty color set");

  std::vector<std::string> color_list(colors.begin(), colors.end());

  auto bit = [&](Var var, bool xcoord, int i) {
    return fo_pred(xcoord ? one_x(i) : one_y(i), var);
  };

  // Cell well-formedness: one bit value per coordinate position, one color.
  std::vector<FoFormula> wf;
  for (int i = 1; i <= n; ++i) {
    wf.push_back(exactly_one(Var::X, {zero_x(i), one_x(i)}));
    wf.push_back(exactly_one(Var::X, {zero_y(i), one_y(i)}));
  }
  std::vector<std::string> color_preds;
  for (const auto& c : color_list) color_preds.push_back(color_pred(c));
  wf.push_back(exactly_one(Var::X, color_preds));
  FoFormula cell_wf = fo_and_all(wf);

  auto all_zero = [&](Var var) {
    std::vector<FoFormula> parts;
    for (int i = 1; i <= n; ++i) {
      parts.push_back(fo_not(bit(var, true, i)));
      parts.push_back(fo_not(bit(var, false, i)));
    }
    return fo_and_all(parts);
  };
  auto all_ones = [&](Var var, bool xcoord) {
    std::vector<FoFormula> parts;
    for (int i = 1; i <= n; ++i) parts.push_back(bit(var, xcoord, i));
    return fo_and_all(parts);
  };
  auto same_coord = [&](bool xcoord) {
    std::vector<FoFormula> parts;
    for (int i = 1; i <= n; ++i)
      parts.push_back(fo_iff(bit(Var::X, xcoord, i), bit(Var::Y, xcoord, i)));
    return fo_and_all(parts);
  };
  // Binary increment from x to y on the chosen coordinate, bit 1 least
  // significant.
  auto succ_coord = [&](bool xcoord) {
    std::vector<FoFormula> alts;
    for (int j = 1; j <= n; ++j) {
      std::vector<FoFormula> parts{fo_not(bit(Var::X, xcoord, j)), bit(Var::Y, xcoord, j)};
      for (int i = 1; i < j; ++i) {
        parts.push_back(bit(Var::X, xcoord, i));
        parts.push_back(fo_not(bit(Var::Y, xcoord, i)));
      }
      for (int i = j + 1; i <= n; ++i)
        parts.push_back(fo_iff(bit(Var::X, xcoord, i), bit(Var::Y, xcoord, i)));
      alts.push_back(fo_and_all(parts));
    }
    return fo_or_all(alts);
  };
  auto compat = [&](const std::set<ColorPair>& constraint) {
    std::vector<FoFormula> alts;
    for (const auto& [c1, c2] : constraint) {
      if (!colors.count(c1) || !colors.count(c2))
        throw std::invalid_argument("gen_tiling_parof: constraint uses unknown color");
      alts.push_back(fo_and(px(color_pred(c1)), py(color_pred(c2))));
    }
    if (alts.empty()) {
      const std::string& c = color_preds.front();
      return fo_and(px(c), fo_not(px(c)));  // unsatisfiable step
    }
    return fo_or_all(alts);
  };

  std::vector<FoFormula> conjuncts;
  conjuncts.push_back(fo_forall(Var::X, cell_wf));
  conjuncts.push_back(fo_exists(Var::X, all_zero(Var::X)));
  conjuncts.push_back(fo_forall(
      Var::X, fo_implies(fo_not(all_ones(Var::X, true)),
                         fo_exists(Var::Y, fo_and_all({same_coord(false),
                                                       succ_coord(true), compat(h)})))));
  conjuncts.push_back(fo_forall(
      Var::X, fo_implies(fo_not(all_ones(Var::X, false)),
                         fo_exists(Var::Y, fo_and_all({same_coord(true),
                                                       succ_coord(false), compat(v)})))));
  // Equal addresses carry equal colors.
  std::vector<FoFormula> same_color;
  for (const auto& c : color_list)
    same_color.push_back(fo_implies(px(color_pred(c)), py(color_pred(c))));
  conjuncts.push_back(fo_forall(
      Var::X, fo_forall(Var::Y, fo_implies(fo_and(same_coord(true), same_coord(false)),
                                           fo_and_all(same_color)))));
  return fo_and_all(conjuncts);
}

// ---------------------------------------------------------------------------
// Ancestor-vocabulary tiling: one branch per cell over UAR trees.

FoFormula gen_tiling_ancof(int n, const std::set<std::string>& colors,
                           const std::set<ColorPair>& h, const std::set<ColorPair>& v) {
  if (n < 1) throw std::invalid_argument("gen_tiling_ancof: n must be >= 1");
  if (colors.empty()) throw std::invalid_argument("gen_tiling_ancof: empty color set");

  std::vector<std::string> sig = tiling_ancof_signature(n, colors);
  std::vector<std::string> color_preds;
  for (const auto& c : colors) color_preds.push_back(color_pred(c));

  auto has_anc = [&](Var var, const FoFormula& pred_of_other) {
    // Some proper ancestor of `var` satisfies the predicate (stated on the
    // other variable, which the quantifier rebinds).
    Var o = other(var);
    return fo_exists(o, fo_and(fo_bin(BinRel::AncOf, o, var), pred_of_other));
  };
  auto has_desc = [&](Var var, const FoFormula& pred_of_other) {
    Var o = other(var);
    return fo_exists(o, fo_and(fo_bin(BinRel::AncOf, var, o), pred_of_other));
  };
  auto lev_x = [&](Var var, int i) {
    return fo_or(fo_pred(zero_x(i), var), fo_pred(one_x(i), var));
  };
  auto lev_y = [&](Var var, int i) {
    return fo_or(fo_pred(zero_y(i), var), fo_pred(one_y(i), var));
  };
  auto leaf = [&](Var var) {
    std::vector<FoFormula> alts;
    for (const auto& cp : color_preds) alts.push_back(fo_pred(cp, var));
    return fo_or_all(alts);
  };

  std::vector<FoFormula> conjuncts;
  conjuncts.push_back(fo_forall(Var::X, exactly_one(Var::X, sig)));
  // r marks exactly the parentless node.
  conjuncts.push_back(fo_forall(
      Var::X, fo_iff(px("r"), fo_not(fo_exists(Var::Y, fo_bin(BinRel::AncOf, Var::Y, Var::X))))));
  // Branching completeness down the levels.
  auto both_desc = [&](const FoFormula& guard, const std::string& zero_p,
                       const std::string& one_p) {
    return fo_forall(Var::X,
                     fo_implies(guard, fo_and(has_desc(Var::X, py(zero_p)),
                                              has_desc(Var::X, py(one_p)))));
  };
  conjuncts.push_back(both_desc(px("r"), zero_x(1), one_x(1)));
  for (int i = 1; i < n; ++i)
    conjuncts.push_back(both_desc(lev_x(Var::X, i), zero_x(i + 1), one_x(i + 1)));
  conjuncts.push_back(both_desc(lev_x(Var::X, n), zero_y(1), one_y(1)));
  for (int i = 1; i < n; ++i)
    conjuncts.push_back(both_desc(lev_y(Var::X, i), zero_y(i + 1), one_y(i + 1)));
  // Below an innermost Y node a single color occurs.
  {
    std::vector<FoFormula> alts;
    for (const auto& cp : color_preds) {
      std::vector<FoFormula> parts{has_desc(Var::X, py(cp))};
      for (const auto& lab : sig)
        if (lab != cp) parts.push_back(fo_not(has_desc(Var::X, py(lab))));
      alts.push_back(fo_and_all(parts));
    }
    conjuncts.push_back(fo_forall(Var::X, fo_implies(lev_y(Var::X, n), fo_or_all(alts))));
  }
  // Colors label leaves only.
  conjuncts.push_back(fo_forall(
      Var::X, fo_implies(leaf(Var::X),
                         fo_not(fo_exists(Var::Y, fo_bin(BinRel::AncOf, Var::X, Var::Y))))));
  // Levels strictly descend: ancestry requirements plus no repeats below.
  conjuncts.push_back(fo_forall(Var::X, fo_implies(lev_x(Var::X, 1), has_anc(Var::X, py("r")))));
  for (int i = 1; i < n; ++i)
    conjuncts.push_back(fo_forall(
        Var::X, fo_implies(lev_x(Var::X, i + 1), has_anc(Var::X, lev_x(Var::Y, i)))));
  conjuncts.push_back(
      fo_forall(Var::X, fo_implies(lev_y(Var::X, 1), has_anc(Var::X, lev_x(Var::Y, n)))));
  for (int i = 1; i < n; ++i)
    conjuncts.push_back(fo_forall(
        Var::X, fo_implies(lev_y(Var::X, i + 1), has_anc(Var::X, lev_y(Var::Y, i)))));
  conjuncts.push_back(
      fo_forall(Var::X, fo_implies(leaf(Var::X), has_anc(Var::X, lev_y(Var::Y, n)))));
  {
    conjuncts.push_back(
        fo_forall(Var::X, fo_implies(px("r"), fo_not(has_desc(Var::X, py("r"))))));
    for (int i = 1; i <= n; ++i) {
      std::vector<FoFormula> no_desc{fo_not(has_desc(Var::X, py("r")))};
      for (int j = 1; j <= i; ++j)
        no_desc.push_back(fo_not(has_desc(Var::X, lev_x(Var::Y, j))));
      conjuncts.push_back(
          fo_forall(Var::X, fo_implies(lev_x(Var::X, i), fo_and_all(no_desc))));
    }
    for (int i = 1; i <= n; ++i) {
      std::vector<FoFormula> no_desc{fo_not(has_desc(Var::X, py("r")))};
      for (int j = 1; j <= n; ++j)
        no_desc.push_back(fo_not(has_desc(Var::X, lev_x(Var::Y, j))));
      for (int j = 1; j <= i; ++j)
        no_desc.push_back(fo_not(has_desc(Var::X, lev_y(Var::Y, j))));
      conjuncts.push_back(
          fo_forall(Var::X, fo_implies(lev_y(Var::X, i), fo_and_all(no_desc))));
    }
  }

  // Address comparisons through ancestor labels.
  auto xbit = [&](Var var, int i) {
    return has_anc(var, fo_pred(one_x(i), other(var)));
  };
  auto ybit = [&](Var var, int i) {
    return has_anc(var, fo_pred(one_y(i), other(var)));
  };
  auto same_bits = [&](const std::function<FoFormula(Var, int)>& b) {
    std::vector<FoFormula> parts;
    for (int i = 1; i <= n; ++i) parts.push_back(fo_iff(b(Var::X, i), b(Var::Y, i)));
    return fo_and_all(parts);
  };
  auto plus_bits = [&](const std::function<FoFormula(Var, int)>& b) {
    std::vector<FoFormula> alts;
    for (int j = 1; j <= n; ++j) {
      std::vector<FoFormula> parts{fo_not(b(Var::X, j)), b(Var::Y, j)};
      for (int i = 1; i < j; ++i) {
        parts.push_back(b(Var::X, i));
        parts.push_back(fo_not(b(Var::Y, i)));
      }
      for (int i = j + 1; i <= n; ++i) parts.push_back(fo_iff(b(Var::X, i), b(Var::Y, i)));
      alts.push_back(fo_and_all(parts));
    }
    return fo_or_all(alts);
  };
  FoFormula same_x = same_bits(xbit);
  FoFormula same_y = same_bits(ybit);
  FoFormula plus_x = plus_bits(xbit);
  FoFormula plus_y = plus_bits(ybit);
  FoFormula both_leaves = fo_and(leaf(Var::X), leaf(Var::Y));

  // Same coordinates carry the same color.
  for (const auto& cp : color_preds)
    conjuncts.push_back(fo_forall(
        Var::X,
        fo_forall(Var::Y, fo_implies(fo_and_all({both_leaves, same_x, same_y, px(cp)}),
                                     py(cp)))));
  auto constraint_clauses = [&](const FoFormula& adjacency,
                                const std::set<ColorPair>& constraint) {
    for (const auto& c : colors) {
      std::vector<FoFormula> allowed;
      for (const auto& [c1, c2] : constraint) {
        if (!colors.count(c1) || !colors.count(c2))
          throw std::invalid_argument("gen_tiling_ancof: constraint uses unknown color");
        if (c1 == c) allowed.push_back(py(color_pred(c2)));
      }
      FoFormula rhs = allowed.empty()
                          ? fo_and(py(color_preds.front()), fo_not(py(color_preds.front())))
                          : fo_or_all(allowed);
      conjuncts.push_back(fo_forall(
          Var::X,
          fo_forall(Var::Y,
                    fo_implies(fo_and_all({both_leaves, adjacency, px(color_pred(c))}),
                               rhs))));
    }
  };
  constraint_clauses(fo_and(same_y, plus_x), h);
  constraint_clauses(fo_and(same_x, plus_y), v);

  return fo_and_all(conjuncts);
}

// ---------------------------------------------------------------------------
// Exponential-depth family

FoFormula gen_counter_depth(int n) {
  if (n < 1) throw std::invalid_argument("gen_counter_depth: n must be >= 1");
  std::vector<std::string> sig = counter_signature(n);

  auto anc = [](Var a, Var b) { return fo_bin(BinRel::AncOf, a, b); };
  auto a_pred = [](int i) { return "a" + std::to_string(i); };
  // x has an a_i descendant; the address bit of an s-node.
  auto psi = [&](Var var, int i) {
    Var o = other(var);
    return fo_exists(o, fo_and(anc(var, o), fo_pred(a_pred(i), o)));
  };

  std::vector<FoFormula> conjuncts;
  conjuncts.push_back(fo_forall(Var::X, exactly_one(Var::X, sig)));
  // The parentless node is b.
  conjuncts.push_back(fo_forall(
      Var::X, fo_implies(fo_not(fo_exists(Var::Y, anc(Var::Y, Var::X))), px("b"))));
  // b-nodes are pairwise comparable.
  conjuncts.push_back(fo_forall(
      Var::X,
      fo_forall(Var::Y, fo_implies(fo_and(px("b"), py("b")),
                                   fo_or_all({fo_eq(Var::X, Var::Y), anc(Var::X, Var::Y),
                                              anc(Var::Y, Var::X)})))));
  // s-nodes are pairwise incomparable.
  conjuncts.push_back(fo_forall(
      Var::X,
      fo_forall(Var::Y,
                fo_implies(fo_and(px("s"), py("s")),
                           fo_or(fo_eq(Var::X, Var::Y),
                                 fo_and(fo_not(anc(Var::X, Var::Y)),
                                        fo_not(anc(Var::Y, Var::X))))))));
  // Ancestors of b-nodes and of s-nodes are b.
  conjuncts.push_back(fo_forall(
      Var::X, fo_forall(Var::Y, fo_implies(fo_and(px("b"), anc(Var::Y, Var::X)), py("b")))));
  conjuncts.push_back(fo_forall(
      Var::X, fo_forall(Var::Y, fo_implies(fo_and(px("s"), anc(Var::Y, Var::X)), py("b")))));
  // Descendants of s-nodes are address marks, and marks sit below some s.
  {
    std::vector<FoFormula> marks;
    for (int i = 1; i <= n; ++i) marks.push_back(py(a_pred(i)));
    conjuncts.push_back(fo_forall(
        Var::X,
        fo_forall(Var::Y, fo_implies(fo_and(px("s"), anc(Var::X, Var::Y)), fo_or_all(marks)))));
    std::vector<FoFormula> marks_x;
    for (int i = 1; i <= n; ++i) marks_x.push_back(px(a_pred(i)));
    conjuncts.push_back(fo_forall(
        Var::X, fo_implies(fo_or_all(marks_x),
                           fo_exists(Var::Y, fo_and(anc(Var::Y, Var::X), py("s"))))));
  }
  // Address zero exists.
  {
    std::vector<FoFormula> parts{px("s")};
    for (int i = 1; i <= n; ++i) parts.push_back(fo_not(psi(Var::X, i)));
    conjuncts.push_back(fo_exists(Var::X, fo_and_all(parts)));
  }
  // Every address below all-ones has a successor address.
  {
    std::vector<FoFormula> all_ones;
    for (int i = 1; i <= n; ++i) all_ones.push_back(psi(Var::X, i));
    std::vector<FoFormula> succ_alts;
    for (int j = 1; j <= n; ++j) {
      std::vector<FoFormula> parts{fo_not(psi(Var::X, j)), psi(Var::Y, j)};
      for (int i = 1; i < j; ++i) {
        parts.push_back(psi(Var::X, i));
        parts.push_back(fo_not(psi(Var::Y, i)));
      }
      for (int i = j + 1; i <= n; ++i)
        parts.push_back(fo_iff(psi(Var::X, i), psi(Var::Y, i)));
      succ_alts.push_back(fo_and_all(parts));
    }
    conjuncts.push_back(fo_forall(
        Var::X,
        fo_implies(fo_and(px("s"), fo_not(fo_and_all(all_ones))),
                   fo_exists(Var::Y, fo_and(py("s"), fo_or_all(succ_alts))))));
  }
  return fo_and_all(conjuncts);
}

// ---------------------------------------------------------------------------
// Tiling oracle

bool solve_tiling_brute(int n, const std::set<std::string>& colors,
                        const std::set<ColorPair>& h, const std::set<ColorPair>& v) {
  if (n < 1 || (1 << n) > 4)
    throw std::invalid_argument("solve_tiling_brute: guard 2^n <= 4 exceeded");
  if (colors.empty()) return false;
  int side = 1 << n;
  std::vector<std::string> color_list(colors.begin(), colors.end());
  std::vector<std::vector<int>> grid(side, std::vector<int>(side, -1));

  auto ok_h = [&](int c1, int c2) {
    return h.count({color_list[c1], color_list[c2]}) > 0;
  };
  auto ok_v = [&](int c1, int c2) {
    return v.count({color_list[c1], color_list[c2]}) > 0;
  };

  std::function<bool(int)> fill = [&](int cell) -> bool {
    if (cell == side * side) return true;
    int x = cell % side, y = cell / side;
    for (size_t c = 0; c < color_list.size(); ++c) {
      grid[x][y] = static_cast<int>(c);
      bool ok = true;
      if (x > 0 && !ok_h(grid[x - 1][y], grid[x][y])) ok = false;
      if (ok && y > 0 && !ok_v(grid[x][y - 1], grid[x][y])) ok = false;
      if (ok && fill(cell + 1)) return true;
      grid[x][y] = -1;
    }
    return false;
  };
  return fill(0);
}

}  // namespace fo2tree
