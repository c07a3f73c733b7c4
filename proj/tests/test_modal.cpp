#include <random>

#include "doctest.h"
#include "fo2tree/modal.hpp"
#include "fo2tree/model_check.hpp"
#include "support/test_support.hpp"

using namespace fo2tree;

TEST_CASE("modal evaluation basics") {
  Tree t = parse_tree("(P ; (Q ;))");
  CHECK(eval_modal(t, m_modal(ModalKind::NextChild, m_atom("Q")), {}));
  CHECK(eval_modal(t, m_modal(ModalKind::DiaUp, m_atom("P")), {0}));
  CHECK_FALSE(eval_modal(parse_tree("(P ;)"),
                         m_modal(ModalKind::DiaDown, m_true()), {}));
}

TEST_CASE("diamonds are strict") {
  Tree t = parse_tree("(P ; (Q ;))");
  // DiaDown at the root sees only the child, not itself.
  CHECK_FALSE(eval_modal(t, m_modal(ModalKind::DiaDown, m_atom("P")), {}));
  CHECK(eval_modal(t, m_modal(ModalKind::DiaDown, m_atom("Q")), {}));
  // Sibling diamonds are strict too.
  Tree t2 = parse_tree("(R ; (P ;) (P ;))");
  CHECK_FALSE(eval_modal(t2, m_modal(ModalKind::DiaRight, m_atom("P")), {1}));
  CHECK(eval_modal(t2, m_modal(ModalKind::DiaRight, m_atom("P")), {0}));
}

TEST_CASE("modal text round trip") {
  ModalFormula m = m_or(m_modal(ModalKind::DiaDown, m_atom("P")),
                        m_not(m_modal(ModalKind::NextParent, m_atom("Q"))));
  ModalFormula back = parse_modal(render_modal(m));
  CHECK(render_modal(back) == render_modal(m));
  CHECK(render_modal(parse_modal("<CH>P & (X -NS)Q")) == "(<CH>P & (X -NS)Q)");
  CHECK(render_modal(parse_modal("true | !false")) == "true");  // folded
}

TEST_CASE("navxp evaluation on fixed trees") {
  Tree t = parse_tree("(Q ; (P ;))");
  CHECK(navxp_holds(t, parse_navxp("descendant[lab()=P]")));
  CHECK_FALSE(navxp_holds(t, parse_navxp("descendant[lab()=Q]")));
  auto nodes = eval_navxp(t, parse_navxp("self[lab()=Q]"));
  CHECK(nodes == std::set<int>{0});
  CHECK_THROWS(parse_navxp("parent[lab()=P]"));  // axis outside the list
}

TEST_CASE("path union denotes the union of denotations") {
  std::mt19937_64 rng(71);
  for (int i = 0; i < 200; ++i) {
    Tree t = testing::random_tree(rng, {"P", "Q"}, 10, false);
    NavPath p1 = nav_seq(nav_axis(NavAxis::Child),
                         nav_pred(nav_axis(NavAxis::DescendantOrSelf), nav_lab("P")));
    NavPath p2 = nav_pred(nav_axis(NavAxis::FollowingSibling), nav_lab("Q"));
    auto u = navxp_pairs(t, nav_union(p1, p2));
    auto a = navxp_pairs(t, p1);
    auto b = navxp_pairs(t, p2);
    std::set<std::pair<int, int>> expected = a;
    expected.insert(b.begin(), b.end());
    CHECK(u == expected);
  }
}

TEST_CASE("navxp_to_modal co-evaluates on all small trees") {
  NavFilter q = parse_navxp("child[lab()=P]");
  ModalFormula m = navxp_to_modal(q);
  testing::for_all_trees({"P"}, 4, [&](const Tree& t) {
    CHECK(navxp_holds(t, q) == eval_modal_at_root(t, m));
    return false;
  });

  CHECK(render_modal(navxp_to_modal(parse_navxp("self[lab()=P]"))) == "P");
}

TEST_CASE("navxp_to_modal co-evaluates on random trees") {
  std::vector<std::string> filters = {
      "descendant[lab()=P]/child[lab()=Q]",
      "child[lab()=P][following-sibling[lab()=Q]]",
      "(child | descendant[lab()=Q])/next-sibling",
      "ancestor-or-self[not lab()=P]",
      "descendant[lab()=P and (child[lab()=Q] | previous-sibling)]",
      "preceding-sibling[lab()=Q]/descendant-or-self[lab()=P]",
  };
  std::mt19937_64 rng(73);
  for (const auto& text : filters) {
    NavFilter q = parse_navxp(text);
    ModalFormula m = navxp_to_modal(q);
    for (int i = 0; i < 500 / static_cast<int>(filters.size()) + 1; ++i) {
      Tree t = testing::random_tree(rng, {"P", "Q"}, 12, false);
      CAPTURE(text);
      CAPTURE(render_tree(t));
      CHECK(navxp_holds(t, q) == eval_modal_at_root(t, m));
    }
  }
}

TEST_CASE("navxp_to_modal output stays linear as a shared term graph") {
  std::vector<std::string> filters = {
      "child[lab()=P]",
      "descendant[lab()=P]/child[lab()=Q]",
      "(child | descendant)/(next-sibling | previous-sibling)/self[lab()=P]",
      "descendant[child[lab()=P] or not lab()=Q]/following-sibling",
      "(child/child/child | descendant)/((child | next-sibling)/(self[lab()=P]))",
  };
  for (const auto& text : filters) {
    NavFilter q = parse_navxp(text);
    size_t in = navxp_size(q);
    size_t out = modal_dag_size(navxp_to_modal(q));
    CAPTURE(text);
    CHECK(out <= 4 * in);
  }
}

TEST_CASE("fo2_to_modal on the stated examples") {
  // exists x. P(x) is equivalent to P | <CH>P at the root.
  FoFormula f = parse_fo2("exists x. P(x)");
  ModalFormula m = fo2_to_modal(f);
  ModalFormula expect = m_or(m_atom("P"), m_modal(ModalKind::DiaDown, m_atom("P")));
  testing::for_all_trees({"P"}, 4, [&](const Tree& t) {
    bool fo = eval_fo2(t, f);
    CHECK(fo == eval_modal_at_root(t, m));
    CHECK(fo == eval_modal_at_root(t, expect));
    return false;
  });

  FoFormula g = parse_fo2("forall x. P(x)");
  ModalFormula mg = fo2_to_modal(g);
  ModalFormula expect_g =
      m_not(m_or(m_not(m_atom("P")),
                 m_modal(ModalKind::DiaDown, m_not(m_atom("P")))));
  testing::for_all_trees({"P"}, 4, [&](const Tree& t) {
    bool fo = eval_fo2(t, g);
    CHECK(fo == eval_modal_at_root(t, mg));
    CHECK(fo == eval_modal_at_root(t, expect_g));
    return false;
  });
}

TEST_CASE("vertical fragment output for ancestor-descendant sentences") {
  // Sentences whose existentials always have a vertical or everywhere
  // residue compile without sibling or step modalities.
  std::vector<std::string> sentences = {
      "exists x. P(x)",
      "forall x. P(x)",
      "exists x. (P(x) & exists y. (AncOf(y,x) & Q(y)))",
      "forall x. (Q(x) -> exists y. (AncOf(x,y) & P(y)))",
  };
  for (const auto& text : sentences) {
    ModalFormula m = fo2_to_modal(parse_fo2(text));
    CAPTURE(text);
    for (const auto& sub : modal_subformulas(m)) {
      bool vertical = sub->kind != ModalKind::NextChild &&
                      sub->kind != ModalKind::NextParent &&
                      sub->kind != ModalKind::NextRight &&
                      sub->kind != ModalKind::NextLeft &&
                      sub->kind != ModalKind::DiaRight &&
                      sub->kind != ModalKind::DiaLeft;
      CHECK(vertical);
    }
  }
}

TEST_CASE("translation coherence on random sentences and all small trees") {
  // The module's central contract: eval_fo2 agrees with the translation on
  // every tree with at most 5 nodes over two predicates.
  std::mt19937_64 rng(79);
  testing::FormulaGenOptions opts;
  opts.max_closure = 12;

  std::vector<Tree> trees;
  testing::for_all_trees({"P", "Q"}, 5, [&](const Tree& t) {
    trees.push_back(t);
    return false;
  });

  for (int i = 0; i < 200; ++i) {
    FoFormula f = testing::random_sentence(rng, opts);
    ModalFormula m = fo2_to_modal(f);
    for (const Tree& t : trees) {
      bool fo = eval_fo2(t, f);
      bool mo = eval_modal_at_root(t, m);
      if (fo != mo) {
        CAPTURE(render(f));
        CAPTURE(render_tree(t));
        REQUIRE(fo == mo);
      }
    }
  }
}
