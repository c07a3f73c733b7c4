#include <random>

#include "doctest.h"
#include "fo2tree/formula.hpp"
#include "support/test_support.hpp"

using namespace fo2tree;

TEST_CASE("parse basic forms") {
  FoFormula f = parse_fo2("exists x. P(x)");
  CHECK(f->kind == FoKind::Exists);
  CHECK(f->v1 == Var::X);
  CHECK(f->lhs->kind == FoKind::Pred);
  CHECK(render(f) == "exists x. P(x)");

  FoFormula g = parse_fo2("forall x. exists y. (ParentOf(y,x) -> Q(y))");
  CHECK(g->kind == FoKind::Forall);
  CHECK(render(parse_fo2(render(g))) == render(g));
}

TEST_CASE("third variable and malformed input are rejected") {
  CHECK_THROWS_AS(parse_fo2("exists z. P(z)"), ParseError);
  CHECK_THROWS_AS(parse_fo2("exists x. P(w)"), ParseError);
  CHECK_THROWS_AS(parse_fo2("exists x. P(x"), ParseError);
  CHECK_THROWS_AS(parse_fo2("exists x. P(x) &"), ParseError);
  std::vector<std::string> sig{"P"};
  CHECK_THROWS_AS(parse_fo2("exists x. Q(x)", &sig), ParseError);
  CHECK_NOTHROW(parse_fo2("exists x. P(x)", &sig));
}

TEST_CASE("surface sugar normalizes by argument swap") {
  FoFormula f = parse_fo2("exists x. exists y. ChildOf(x,y)");
  const FoNode* atom = f->lhs->lhs.get();
  CHECK(atom->kind == FoKind::Bin);
  CHECK(atom->rel == BinRel::ParentOf);
  CHECK(atom->v1 == Var::Y);
  CHECK(atom->v2 == Var::X);
  FoFormula g = parse_fo2("exists x. exists y. DescOf(x,y)");
  CHECK(g->lhs->lhs->rel == BinRel::AncOf);
}

TEST_CASE("precedence: ! over & over | over -> over <->") {
  FoFormula f = parse_fo2("exists x. P(x) <-> Q(x) -> P(x) | Q(x) & !P(x)");
  // exists binds to the end of input, so the sentence is exists x. (...)
  CHECK(f->kind == FoKind::Exists);
  const FoNode* body = f->lhs.get();
  CHECK(body->kind == FoKind::Iff);
  CHECK(body->rhs->kind == FoKind::Implies);
  CHECK(body->rhs->rhs->kind == FoKind::Or);
  CHECK(body->rhs->rhs->rhs->kind == FoKind::And);
  CHECK(body->rhs->rhs->rhs->rhs->kind == FoKind::Not);
}

TEST_CASE("implication is right associative") {
  FoFormula f = parse_fo2("forall x. P(x) -> Q(x) -> P(x)");
  CHECK(f->lhs->kind == FoKind::Implies);
  CHECK(f->lhs->rhs->kind == FoKind::Implies);
}

TEST_CASE("render is fully parenthesized and parse-stable") {
  FoFormula f = parse_fo2("forall x. (P(x) & Q(x)) | !P(x)");
  std::string text = render(f);
  CHECK(structurally_equal(parse_fo2(text), f));
}

TEST_CASE("parse-render round trip on random formulas") {
  std::mt19937_64 rng(7);
  testing::FormulaGenOptions opts;
  for (int i = 0; i < 1000; ++i) {
    FoFormula f = testing::random_sentence(rng, opts);
    CAPTURE(render(f));
    CHECK(structurally_equal(parse_fo2(render(f)), f));
  }
}

TEST_CASE("vocabulary classification") {
  auto tags = vocabulary_of(parse_fo2("exists x. exists y. ParentOf(x,y)"));
  CHECK(tags == std::set<VocabTag>{VocabTag::ParOf, VocabTag::NoAncOf, VocabTag::Full});

  tags = vocabulary_of(parse_fo2("exists x. exists y. AncOf(x,y)"));
  CHECK(tags == std::set<VocabTag>{VocabTag::AncOf, VocabTag::NoParOf, VocabTag::Full});

  tags = vocabulary_of(parse_fo2("exists x. P(x)"));
  CHECK(tags.size() == 5);

  // Equality never counts against a vocabulary.
  tags = vocabulary_of(parse_fo2("exists x. exists y. x = y"));
  CHECK(tags.size() == 5);
}

TEST_CASE("vocabulary of a conjunction is the intersection") {
  std::mt19937_64 rng(11);
  testing::FormulaGenOptions opts;
  for (int i = 0; i < 200; ++i) {
    FoFormula a = testing::random_sentence(rng, opts);
    FoFormula b = testing::random_sentence(rng, opts);
    auto ta = vocabulary_of(a);
    auto tb = vocabulary_of(b);
    std::set<VocabTag> expected;
    for (VocabTag t : ta)
      if (tb.count(t)) expected.insert(t);
    CHECK(vocabulary_of(fo_and(a, b)) == expected);
  }
}

TEST_CASE("one_var_closure of the running example") {
  FoFormula f = parse_fo2("exists x. (P(x) & exists y. AncOf(y,x))");
  ClosureBasis basis = one_var_closure(f);
  REQUIRE(basis.size() == 4);
  CHECK(render(basis.entries[0]) == "P(x)");
  CHECK(render(basis.entries[1]) == "exists y. AncOf(y,x)");
  CHECK(render(basis.entries[2]) == "(P(x) & (exists y. AncOf(y,x)))");
  CHECK(basis.entries[3]->kind == FoKind::Exists);
}

TEST_CASE("one_var_closure simple cases") {
  FoFormula f = parse_fo2("forall x. P(x)");
  ClosureBasis basis = one_var_closure(f);
  REQUIRE(basis.size() == 2);
  CHECK(render(basis.entries[0]) == "P(x)");

  // Duplicate subformulas are listed once.
  FoFormula dup = parse_fo2("exists x. P(x) & P(x)");
  ClosureBasis basis2 = one_var_closure(dup);
  int count = 0;
  for (const auto& e : basis2.entries)
    if (render(e) == "P(x)") ++count;
  CHECK(count == 1);
}

TEST_CASE("closure is closed under one-variable subformulas and bounded by size") {
  std::mt19937_64 rng(13);
  testing::FormulaGenOptions opts;
  opts.max_closure = 64;
  for (int i = 0; i < 300; ++i) {
    FoFormula f = testing::random_sentence(rng, opts);
    ClosureBasis basis = one_var_closure(f);
    CHECK(basis.size() <= formula_size(f));
    // Independent walker: collect canonical one-variable subformulas by hand.
    std::set<std::string> expected;
    std::function<void(const FoFormula&)> walk = [&](const FoFormula& g) {
      if (g->lhs) walk(g->lhs);
      if (g->rhs) walk(g->rhs);
      if (free_vars(g).size() <= 1) expected.insert(render(canon_one_var(g)));
    };
    walk(f);
    std::set<std::string> got;
    for (const auto& e : basis.entries) got.insert(render(e));
    CHECK(got == expected);
    // Membership is closed under one-variable subformulas of members.
    for (const auto& e : basis.entries) {
      std::function<void(const FoFormula&)> check_sub = [&](const FoFormula& g) {
        if (g->lhs) check_sub(g->lhs);
        if (g->rhs) check_sub(g->rhs);
        if (free_vars(g).size() <= 1) CHECK(basis.index_of(canon_one_var(g)) >= 0);
      };
      check_sub(e);
    }
  }
}
