#include <random>

#include "doctest.h"
#include "fo2tree/tree.hpp"
#include "support/test_support.hpp"

using namespace fo2tree;

namespace {
Tree chain(const std::vector<std::string>& labels) {
  std::string text;
  for (const auto& l : labels) text += "(" + l + " ; ";
  for (size_t i = 0; i < labels.size(); ++i) text += ")";
  return parse_tree(text);
}
}  // namespace

TEST_CASE("tree text format round trip") {
  Tree t = parse_tree("(P ; (Q ;) (P Q ;))");
  REQUIRE(t.size() == 3);
  CHECK(t.signature == std::vector<std::string>{"P", "Q"});
  CHECK(t.nodes[0].labels == std::vector<int>{0});
  CHECK(t.nodes[2].labels == std::vector<int>{0, 1});
  CHECK(render_tree(t) == "(P ; (Q ;) (P Q ;))");
  CHECK(parse_tree(render_tree(t)) == t);

  CHECK_THROWS_AS(parse_tree("(P ; (Q ;)"), TreeParseError);
  std::vector<std::string> sig{"P"};
  CHECK_THROWS_AS(parse_tree("(Q ;)", &sig), TreeParseError);
}

TEST_CASE("axis relations on a chain") {
  Tree t = chain({"R", "A", "B"});
  auto anc = axis_pairs(t, Axis::AncOf);
  CHECK(anc == std::set<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}});
  CHECK(axis_pairs(t, Axis::DescOf) ==
        std::set<std::pair<int, int>>{{1, 0}, {2, 0}, {2, 1}});
  CHECK(axis_pairs(t, Axis::LeftSibOf).empty());
  CHECK(axis_pairs(t, Axis::Incomparable).empty());
}

TEST_CASE("axis relations on siblings") {
  Tree t = parse_tree("(R ; (C1 ;) (C2 ;))");
  CHECK(axis_pairs(t, Axis::LeftSibOf) == std::set<std::pair<int, int>>{{1, 2}});
  CHECK(axis_pairs(t, Axis::NextSib) == std::set<std::pair<int, int>>{{1, 2}});
  CHECK(axis_pairs(t, Axis::Incomparable) ==
        std::set<std::pair<int, int>>{{1, 2}, {2, 1}});
}

TEST_CASE("single node has empty axes") {
  Tree t = parse_tree("(P ;)");
  for (Axis a : {Axis::ParentOf, Axis::ChildOf, Axis::AncOf, Axis::DescOf,
                 Axis::LeftSibOf, Axis::LeftOf, Axis::RightOf, Axis::Incomparable})
    CHECK(axis_pairs(t, a).empty());
}

TEST_CASE("transitive closures agree with an independent computation") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    Tree t = testing::random_tree(rng, {"P", "Q"}, 12, false);
    // Closure of ParentOf by iterated squaring.
    auto parent = axis_pairs(t, Axis::ParentOf);
    std::set<std::pair<int, int>> closure = parent;
    bool grew = true;
    while (grew) {
      grew = false;
      for (auto [a, b] : closure)
        for (auto [c, d] : parent)
          if (b == c && !closure.count({a, d})) {
            closure.insert({a, d});
            grew = true;
          }
    }
    CHECK(axis_pairs(t, Axis::AncOf) == closure);

    auto leftsib = axis_pairs(t, Axis::LeftSibOf);
    std::set<std::pair<int, int>> lclosure = leftsib;
    grew = true;
    while (grew) {
      grew = false;
      for (auto [a, b] : lclosure)
        for (auto [c, d] : leftsib)
          if (b == c && !lclosure.count({a, d})) {
            lclosure.insert({a, d});
            grew = true;
          }
    }
    CHECK(axis_pairs(t, Axis::LeftOf) == lclosure);
  }
}

TEST_CASE("is_uar") {
  CHECK(is_uar(parse_tree("(P ; (Q ;))")));
  CHECK_FALSE(is_uar(parse_tree("(P Q ; (Q ;))")));
  std::vector<std::string> sig{"P"};
  CHECK_FALSE(is_uar(parse_tree("( ; (P ;))", &sig)));
}

TEST_CASE("dag of a tree with repeated subtrees") {
  Tree t = parse_tree("(A ; (B ;) (B ;))");
  TreeDag d = to_dag(t);
  CHECK(d.entry_count() == 2);
  CHECK(unfold(d) == t);
}

TEST_CASE("dag of a chain of distinct labels") {
  Tree t = chain({"A", "B", "C", "D"});
  TreeDag d = to_dag(t);
  CHECK(d.entry_count() == 4);
  CHECK(unfold(d) == t);
}

TEST_CASE("complete binary trees share one entry per level") {
  // Entry count d+1 and unfolding size 2^(d+1) - 1, checked by construction.
  for (int depth = 0; depth <= 10; ++depth) {
    std::function<std::string(int)> build = [&](int d) -> std::string {
      if (d == 0) return "(P ;)";
      std::string sub = build(d - 1);
      return "(P ; " + sub + " " + sub + ")";
    };
    Tree t = parse_tree(build(depth));
    CHECK(t.size() == (1ULL << (depth + 1)) - 1);
    TreeDag d = to_dag(t);
    CHECK(d.entry_count() == static_cast<size_t>(depth) + 1);
    CHECK(d.unfold_size() == (1ULL << (depth + 1)) - 1);
  }
}

TEST_CASE("unfold guard") {
  // Doubling DAG far past the guard.
  TreeDag d;
  d.signature = {"P"};
  d.entries.push_back({{0}, {}});
  for (int i = 1; i <= 40; ++i) d.entries.push_back({{0}, {i - 1, i - 1}});
  d.root = 40;
  CHECK_THROWS_AS(unfold(d), std::length_error);
}

TEST_CASE("dag round trips through text and unfolding") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    Tree t = testing::random_tree(rng, {"P", "Q"}, 14, false);
    TreeDag d = to_dag(t);
    CHECK(d.entry_count() <= t.size());
    CHECK(unfold(d) == t);
    TreeDag d2 = to_dag(unfold(d));
    CHECK(d2.entry_count() == d.entry_count());
    TreeDag parsed = parse_dag(render_dag(d), &d.signature);
    CHECK(unfold(parsed) == t);
  }
}

TEST_CASE("node paths address nodes stably") {
  Tree t = parse_tree("(A ; (B ; (C ;)) (D ;))");
  CHECK(t.node_at({0, 0}) == 2);
  CHECK(t.node_at({1}) == 3);
  CHECK(t.path_of(2) == NodePath{0, 0});
  CHECK_THROWS_AS(t.node_at({2}), std::invalid_argument);
}

TEST_CASE("subtree order is total, well founded and context monotone") {
  std::mt19937_64 rng(23);
  // Fewer nodes come first; any proper subtree precedes its whole tree.
  Tree small = parse_tree("(P ;)");
  Tree big = parse_tree("(P ; (P ;))");
  CHECK(subtree_order(small, big) == std::strong_ordering::less);
  for (int i = 0; i < 200; ++i) {
    Tree t = testing::random_tree(rng, {"P", "Q"}, 10, false);
    for (size_t u = 1; u < t.size(); ++u) {
      Tree sub = subtree_at(t, t.path_of(static_cast<int>(u)));
      CHECK(subtree_order(sub, t) == std::strong_ordering::less);
    }
  }
  // Context monotonicity: grafting preserves strict order.
  for (int i = 0; i < 500; ++i) {
    Tree t1 = testing::random_tree(rng, {"P", "Q"}, 6, false);
    Tree t2 = testing::random_tree(rng, {"P", "Q"}, 6, false);
    auto ord = subtree_order(t1, t2);
    if (ord == std::strong_ordering::equal) continue;
    if (ord == std::strong_ordering::greater) std::swap(t1, t2);
    // Context: random tree with a designated leaf to replace.
    Tree c = testing::random_tree(rng, {"P", "Q"}, 6, false);
    std::vector<int> leaves;
    for (size_t u = 0; u < c.size(); ++u)
      if (c.nodes[u].children.empty()) leaves.push_back(static_cast<int>(u));
    int hole = leaves[rng() % leaves.size()];
    auto graft = [&](const Tree& sub) {
      Tree out;
      out.signature = c.signature;
      std::function<void(const Tree&, int, int)> copy_into =
          [&](const Tree& src, int node, int parent) {
            int id = static_cast<int>(out.nodes.size());
            out.nodes.emplace_back();
            out.nodes[id].parent = parent;
            out.nodes[id].labels = src.nodes[node].labels;
            if (parent != -1) out.nodes[parent].children.push_back(id);
            for (int ch : src.nodes[node].children) copy_into(src, ch, id);
          };
      std::function<void(int, int)> walk = [&](int node, int parent) {
        if (node == hole) {
          copy_into(sub, 0, parent);
          return;
        }
        int id = static_cast<int>(out.nodes.size());
        out.nodes.emplace_back();
        out.nodes[id].parent = parent;
        out.nodes[id].labels = c.nodes[node].labels;
        if (parent != -1) out.nodes[parent].children.push_back(id);
        for (int ch : c.nodes[node].children) walk(ch, id);
      };
      walk(0, -1);
      return out;
    };
    // Same signature for byte comparability.
    if (t1.signature != c.signature || t2.signature != c.signature) continue;
    CHECK(subtree_order(graft(t1), graft(t2)) == std::strong_ordering::less);
  }
}
