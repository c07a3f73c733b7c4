#include "fo2tree/formula.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

namespace fo2tree {

const char* bin_rel_name(BinRel r) {
  switch (r) {
    case BinRel::ParentOf: return "ParentOf";
    case BinRel::AncOf: return "AncOf";
    case BinRel::LeftSibOf: return "LeftSibOf";
    case BinRel::LeftOf: return "LeftOf";
  }
  return "?";
}

const char* vocab_tag_name(VocabTag t) {
  switch (t) {
    case VocabTag::Full: return "full";
    case VocabTag::NoAncOf: return "noAncOf";
    case VocabTag::ParOf: return "parOf";
    case VocabTag::NoParOf: return "noParOf";
    case VocabTag::AncOf: return "ancOf";
  }
  return "?";
}

std::optional<VocabTag> vocab_tag_from_name(std::string_view s) {
  std::string k(s);
  std::transform(k.begin(), k.end(), k.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (k == "full") return VocabTag::Full;
  if (k == "noancof") return VocabTag::NoAncOf;
  if (k == "parof") return VocabTag::ParOf;
  if (k == "noparof") return VocabTag::NoParOf;
  if (k == "ancof") return VocabTag::AncOf;
  return std::nullopt;
}

FoFormula fo_pred(std::string name, Var v) {
  auto n = std::make_shared<FoNode>(FoKind::Pred);
  n->pred = std::move(name);
  n->v1 = v;
  return n;
}

FoFormula fo_eq(Var a, Var b) {
  auto n = std::make_shared<FoNode>(FoKind::Eq);
  n->v1 = a;
  n->v2 = b;
  return n;
}

FoFormula fo_bin(BinRel r, Var a, Var b) {
  auto n = std::make_shared<FoNode>(FoKind::Bin);
  n->rel = r;
  n->v1 = a;
  n->v2 = b;
  return n;
}

FoFormula fo_not(FoFormula f) {
  auto n = std::make_shared<FoNode>(FoKind::Not);
  n->lhs = std::move(f);
  return n;
}

namespace {
FoFormula binop(FoKind k, FoFormula a, FoFormula b) {
  auto n = std::make_shared<FoNode>(k);
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}
FoFormula quant(FoKind k, Var v, FoFormula body) {
  auto n = std::make_shared<FoNode>(k);
  n->v1 = v;
  n->lhs = std::move(body);
  return n;
}
}  // namespace

FoFormula fo_and(FoFormula a, FoFormula b) { return binop(FoKind::And, std::move(a), std::move(b)); }
FoFormula fo_or(FoFormula a, FoFormula b) { return binop(FoKind::Or, std::move(a), std::move(b)); }
FoFormula fo_implies(FoFormula a, FoFormula b) { return binop(FoKind::Implies, std::move(a), std::move(b)); }
FoFormula fo_iff(FoFormula a, FoFormula b) { return binop(FoKind::Iff, std::move(a), std::move(b)); }
FoFormula fo_exists(Var v, FoFormula body) { return quant(FoKind::Exists, v, std::move(body)); }
FoFormula fo_forall(Var v, FoFormula body) { return quant(FoKind::Forall, v, std::move(body)); }

FoFormula fo_and_all(const std::vector<FoFormula>& fs) {
  if (fs.empty()) throw std::invalid_argument("fo_and_all: empty list");
  FoFormula acc = fs[0];
  for (size_t i = 1; i < fs.size(); ++i) acc = fo_and(acc, fs[i]);
  return acc;
}

FoFormula fo_or_all(const std::vector<FoFormula>& fs) {
  if (fs.empty()) throw std::invalid_argument("fo_or_all: empty list");
  FoFormula acc = fs[0];
  for (size_t i = 1; i < fs.size(); ++i) acc = fo_or(acc, fs[i]);
  return acc;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Token {
  enum Kind { Ident, LParen, RParen, Comma, EqSign, Bang, Amp, Pipe, Arrow, DArrow, Dot, End } kind;
  std::string text;
  size_t pos;
};

struct Lexer {
  std::string_view src;
  size_t i = 0;
  Token peeked{Token::End, "", 0};
  bool has_peek = false;

  Token next() {
    if (has_peek) {
      has_peek = false;
      return peeked;
    }
    while (i < src.size() && std::isspace(static_cast<unsigned char>(src[i]))) ++i;
    size_t start = i;
    if (i >= src.size()) return {Token::End, "", start};
    char c = src[i];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
        ++j;
      Token t{Token::Ident, std::string(src.substr(i, j - i)), start};
      i = j;
      return t;
    }
    switch (c) {
      case '(': ++i; return {Token::LParen, "(", start};
      case ')': ++i; return {Token::RParen, ")", start};
      case ',': ++i; return {Token::Comma, ",", start};
      case '=': ++i; return {Token::EqSign, "=", start};
      case '!': ++i; return {Token::Bang, "!", start};
      case '&': ++i; return {Token::Amp, "&", start};
      case '|': ++i; return {Token::Pipe, "|", start};
      case '.': ++i; return {Token::Dot, ".", start};
      case '-':
        if (i + 1 < src.size() && src[i + 1] == '>') {
          i += 2;
          return {Token::Arrow, "->", start};
        }
        throw ParseError("unexpected '-'", start);
      case '<':
        if (i + 2 < src.size() && src[i + 1] == '-' && src[i + 2] == '>') {
          i += 3;
          return {Token::DArrow, "<->", start};
        }
        throw ParseError("unexpected '<'", start);
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", start);
    }
  }

  const Token& peek() {
    if (!has_peek) {
      peeked = next();
      has_peek = true;
    }
    return peeked;
  }
};

bool is_keyword(const std::string& s) { return s == "exists" || s == "forall"; }

struct Parser {
  Lexer lex;
  const std::vector<std::string>* signature;

  Var parse_var(const Token& t) {
    if (t.kind != Token::Ident)
      throw ParseError("expected a variable", t.pos);
    if (t.text == "x") return Var::X;
    if (t.text == "y") return Var::Y;
    throw ParseError("third variable name '" + t.text + "' (only x and y are allowed)", t.pos);
  }

  FoFormula parse_formula() { return parse_iff(); }

  FoFormula parse_iff() {
    FoFormula a = parse_implies();
    while (lex.peek().kind == Token::DArrow) {
      lex.next();
      a = fo_iff(a, parse_implies());
    }
    return a;
  }

  FoFormula parse_implies() {
    FoFormula a = parse_or();
    if (lex.peek().kind == Token::Arrow) {
      lex.next();
      return fo_implies(a, parse_implies());  // right associative
    }
    return a;
  }

  FoFormula parse_or() {
    FoFormula a = parse_and();
    while (lex.peek().kind == Token::Pipe) {
      lex.next();
      a = fo_or(a, parse_and());
    }
    return a;
  }

  FoFormula parse_and() {
    FoFormula a = parse_unary();
    while (lex.peek().kind == Token::Amp) {
      lex.next();
      a = fo_and(a, parse_unary());
    }
    return a;
  }

  FoFormula parse_unary() {
    const Token& t = lex.peek();
    if (t.kind == Token::Bang) {
      lex.next();
      return fo_not(parse_unary());
    }
    if (t.kind == Token::Ident && is_keyword(t.text)) {
      Token kw = lex.next();
      Token v = lex.next();
      Var var = parse_var(v);
      Token dot = lex.next();
      if (dot.kind != Token::Dot)
        throw ParseError("expected '.' after quantified variable", dot.pos);
      // Quantifier scopes to the end of the enclosing parenthesis.
      FoFormula body = parse_formula();
      return kw.text == "exists" ? fo_exists(var, body) : fo_forall(var, body);
    }
    return parse_atom();
  }

  FoFormula parse_atom() {
    Token t = lex.next();
    if (t.kind == Token::LParen) {
      FoFormula inner = parse_formula();
      Token close = lex.next();
      if (close.kind != Token::RParen)
        throw ParseError("expected ')'", close.pos);
      return inner;
    }
    if (t.kind != Token::Ident)
      throw ParseError("expected an atom", t.pos);
    if (is_keyword(t.text))
      throw ParseError("unexpected keyword '" + t.text + "'", t.pos);

    // `x = y` style equality.
    if (t.text == "x" || t.text == "y") {
      Var a = parse_var(t);
      Token eq = lex.next();
      if (eq.kind != Token::EqSign)
        throw ParseError("expected '=' after variable", eq.pos);
      Var b = parse_var(lex.next());
      return fo_eq(a, b);
    }

    Token open = lex.next();
    if (open.kind != Token::LParen)
      throw ParseError("expected '(' after predicate name", open.pos);
    Var a = parse_var(lex.next());
    Token sep = lex.next();
    if (sep.kind == Token::RParen) {
      if (signature &&
          std::find(signature->begin(), signature->end(), t.text) == signature->end())
        throw ParseError("unknown predicate '" + t.text + "'", t.pos);
      return fo_pred(t.text, a);
    }
    if (sep.kind != Token::Comma)
      throw ParseError("expected ',' or ')'", sep.pos);
    Var b = parse_var(lex.next());
    Token close = lex.next();
    if (close.kind != Token::RParen)
      throw ParseError("expected ')'", close.pos);

    if (t.text == "ParentOf") return fo_bin(BinRel::ParentOf, a, b);
    if (t.text == "ChildOf") return fo_bin(BinRel::ParentOf, b, a);
    if (t.text == "AncOf") return fo_bin(BinRel::AncOf, a, b);
    if (t.text == "DescOf") return fo_bin(BinRel::AncOf, b, a);
    if (t.text == "LeftSibOf") return fo_bin(BinRel::LeftSibOf, a, b);
    if (t.text == "LeftOf") return fo_bin(BinRel::LeftOf, a, b);
    throw ParseError("binary atom with unknown relation '" + t.text + "'", t.pos);
  }
};

}  // namespace

FoFormula parse_fo2(std::string_view text, const std::vector<std::string>* signature) {
  Parser p{Lexer{text}, signature};
  FoFormula f = p.parse_formula();
  Token end = p.lex.next();
  if (end.kind != Token::End)
    throw ParseError("trailing input", end.pos);
  return f;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

void render_rec(const FoFormula& f, std::string& out, bool top) {
  switch (f->kind) {
    case FoKind::Pred:
      out += f->pred;
      out += '(';
      out += var_name(f->v1);
      out += ')';
      return;
    case FoKind::Eq:
      out += var_name(f->v1);
      out += " = ";
      out += var_name(f->v2);
      return;
    case FoKind::Bin:
      out += bin_rel_name(f->rel);
      out += '(';
      out += var_name(f->v1);
      out += ',';
      out += var_name(f->v2);
      out += ')';
      return;
    case FoKind::Not:
      out += '!';
      render_rec(f->lhs, out, false);
      return;
    case FoKind::And:
    case FoKind::Or:
    case FoKind::Implies:
    case FoKind::Iff: {
      out += '(';
      render_rec(f->lhs, out, false);
      switch (f->kind) {
        case FoKind::And: out += " & "; break;
        case FoKind::Or: out += " | "; break;
        case FoKind::Implies: out += " -> "; break;
        default: out += " <-> "; break;
      }
      render_rec(f->rhs, out, false);
      out += ')';
      return;
    }
    case FoKind::Exists:
    case FoKind::Forall: {
      // The quantifier body runs to the end of the enclosing parenthesis, so
      // a non-toplevel quantifier needs its own pair.
      if (!top) out += '(';
      out += f->kind == FoKind::Exists ? "exists " : "forall ";
      out += var_name(f->v1);
      out += ". ";
      render_rec(f->lhs, out, true);
      if (!top) out += ')';
      return;
    }
  }
}

}  // namespace

std::string render(const FoFormula& f) {
  std::string out;
  render_rec(f, out, true);
  return out;
}

bool structurally_equal(const FoFormula& a, const FoFormula& b) {
  if (a.get() == b.get()) return true;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case FoKind::Pred: return a->pred == b->pred && a->v1 == b->v1;
    case FoKind::Eq: return a->v1 == b->v1 && a->v2 == b->v2;
    case FoKind::Bin: return a->rel == b->rel && a->v1 == b->v1 && a->v2 == b->v2;
    case FoKind::Not: return structurally_equal(a->lhs, b->lhs);
    case FoKind::And:
    case FoKind::Or:
    case FoKind::Implies:
    case FoKind::Iff:
      return structurally_equal(a->lhs, b->lhs) && structurally_equal(a->rhs, b->rhs);
    case FoKind::Exists:
    case FoKind::Forall:
      return a->v1 == b->v1 && structurally_equal(a->lhs, b->lhs);
  }
  return false;
}

size_t formula_size(const FoFormula& f) {
  switch (f->kind) {
    case FoKind::Pred:
    case FoKind::Eq:
    case FoKind::Bin:
      return 1;
    case FoKind::Not:
    case FoKind::Exists:
    case FoKind::Forall:
      return 1 + formula_size(f->lhs);
    default:
      return 1 + formula_size(f->lhs) + formula_size(f->rhs);
  }
}

namespace {
void free_vars_rec(const FoFormula& f, bool bound[2], std::set<Var>& out) {
  switch (f->kind) {
    case FoKind::Pred:
      if (!bound[static_cast<int>(f->v1)]) out.insert(f->v1);
      return;
    case FoKind::Eq:
    case FoKind::Bin:
      if (!bound[static_cast<int>(f->v1)]) out.insert(f->v1);
      if (!bound[static_cast<int>(f->v2)]) out.insert(f->v2);
      return;
    case FoKind::Not:
      free_vars_rec(f->lhs, bound, out);
      return;
    case FoKind::Exists:
    case FoKind::Forall: {
      bool inner[2] = {bound[0], bound[1]};
      inner[static_cast<int>(f->v1)] = true;
      free_vars_rec(f->lhs, inner, out);
      return;
    }
    default:
      free_vars_rec(f->lhs, bound, out);
      free_vars_rec(f->rhs, bound, out);
      return;
  }
}
}  // namespace

std::set<Var> free_vars(const FoFormula& f) {
  std::set<Var> out;
  bool bound[2] = {false, false};
  free_vars_rec(f, bound, out);
  return out;
}

bool is_sentence(const FoFormula& f) { return free_vars(f).empty(); }

namespace {
void predicates_rec(const FoFormula& f, std::set<std::string>& out) {
  switch (f->kind) {
    case FoKind::Pred: out.insert(f->pred); return;
    case FoKind::Eq:
    case FoKind::Bin: return;
    case FoKind::Not:
    case FoKind::Exists:
    case FoKind::Forall:
      predicates_rec(f->lhs, out);
      return;
    default:
      predicates_rec(f->lhs, out);
      predicates_rec(f->rhs, out);
      return;
  }
}
}  // namespace

std::vector<std::string> predicates_of(const FoFormula& f) {
  std::set<std::string> s;
  predicates_rec(f, s);
  return {s.begin(), s.end()};
}

bool vocab_allows(VocabTag tag, BinRel rel) {
  switch (tag) {
    case VocabTag::Full: return true;
    case VocabTag::NoAncOf: return rel != BinRel::AncOf;
    case VocabTag::ParOf: return rel == BinRel::ParentOf;
    case VocabTag::NoParOf: return rel != BinRel::ParentOf;
    case VocabTag::AncOf: return rel == BinRel::AncOf;
  }
  return false;
}

namespace {
void bin_rels_rec(const FoFormula& f, std::set<BinRel>& out) {
  switch (f->kind) {
    case FoKind::Bin: out.insert(f->rel); return;
    case FoKind::Pred:
    case FoKind::Eq: return;
    case FoKind::Not:
    case FoKind::Exists:
    case FoKind::Forall:
      bin_rels_rec(f->lhs, out);
      return;
    default:
      bin_rels_rec(f->lhs, out);
      bin_rels_rec(f->rhs, out);
      return;
  }
}
}  // namespace

std::set<VocabTag> vocabulary_of(const FoFormula& f) {
  std::set<BinRel> used;
  bin_rels_rec(f, used);
  std::set<VocabTag> tags;
  for (VocabTag t : {VocabTag::Full, VocabTag::NoAncOf, VocabTag::ParOf,
                     VocabTag::NoParOf, VocabTag::AncOf}) {
    bool ok = true;
    for (BinRel r : used)
      if (!vocab_allows(t, r)) { ok = false; break; }
    if (ok) tags.insert(t);
  }
  return tags;
}

FoFormula swap_vars(const FoFormula& f) {
  auto n = std::make_shared<FoNode>(*f);
  n->v1 = other(n->v1);
  if (f->kind == FoKind::Eq || f->kind == FoKind::Bin) n->v2 = other(n->v2);
  if (f->kind == FoKind::Pred || f->kind == FoKind::Eq || f->kind == FoKind::Bin)
    return n;
  n->lhs = swap_vars(f->lhs);
  if (f->rhs) n->rhs = swap_vars(f->rhs);
  return n;
}

namespace {

// m maps original free variable names to canonical ones. Every free variable
// of f must be in the domain of m.
FoFormula canon_rec(const FoFormula& f, const std::map<Var, Var>& m) {
  switch (f->kind) {
    case FoKind::Pred:
      return fo_pred(f->pred, m.at(f->v1));
    case FoKind::Eq:
      return fo_eq(m.at(f->v1), m.at(f->v2));
    case FoKind::Bin:
      return fo_bin(f->rel, m.at(f->v1), m.at(f->v2));
    case FoKind::Not:
      return fo_not(canon_rec(f->lhs, m));
    case FoKind::And:
      return fo_and(canon_rec(f->lhs, m), canon_rec(f->rhs, m));
    case FoKind::Or:
      return fo_or(canon_rec(f->lhs, m), canon_rec(f->rhs, m));
    case FoKind::Implies:
      return fo_implies(canon_rec(f->lhs, m), canon_rec(f->rhs, m));
    case FoKind::Iff:
      return fo_iff(canon_rec(f->lhs, m), canon_rec(f->rhs, m));
    case FoKind::Exists:
    case FoKind::Forall: {
      std::set<Var> fv = free_vars(f);
      Var bound_name;
      std::map<Var, Var> inner;
      if (fv.empty()) {
        bound_name = Var::X;
      } else {
        Var w = *fv.begin();
        bound_name = other(m.at(w));
        inner[w] = m.at(w);
      }
      inner[f->v1] = bound_name;
      FoFormula body = canon_rec(f->lhs, inner);
      return f->kind == FoKind::Exists ? fo_exists(bound_name, body)
                                       : fo_forall(bound_name, body);
    }
  }
  throw std::logic_error("canon_rec: bad kind");
}

}  // namespace

FoFormula canon_one_var(const FoFormula& f) {
  std::set<Var> fv = free_vars(f);
  if (fv.size() > 1)
    throw std::invalid_argument("canon_one_var: formula has two free variables");
  std::map<Var, Var> m;
  if (!fv.empty()) m[*fv.begin()] = Var::X;
  return canon_rec(f, m);
}

int ClosureBasis::index_of(const FoFormula& canonical) const {
  auto it = index_.find(render(canonical));
  return it == index_.end() ? -1 : it->second;
}

void ClosureBasis::push(FoFormula canonical) {
  std::string key = render(canonical);
  if (index_.count(key)) return;
  index_[key] = static_cast<int>(entries.size());
  entries.push_back(std::move(canonical));
}

namespace {
void closure_rec(const FoFormula& f, ClosureBasis& basis) {
  switch (f->kind) {
    case FoKind::Pred:
    case FoKind::Eq:
    case FoKind::Bin:
      break;
    case FoKind::Not:
    case FoKind::Exists:
    case FoKind::Forall:
      closure_rec(f->lhs, basis);
      break;
    default:
      closure_rec(f->lhs, basis);
      closure_rec(f->rhs, basis);
      break;
  }
  if (free_vars(f).size() <= 1) basis.push(canon_one_var(f));
}
}  // namespace

ClosureBasis one_var_closure(const FoFormula& f) {
  ClosureBasis basis;
  closure_rec(f, basis);
  return basis;
}

}  // namespace fo2tree
