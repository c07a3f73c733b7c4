#include "fo2tree/modal.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace fo2tree {

namespace {
ModalFormula mk(ModalKind k) { return std::make_shared<ModalNode>(k); }
}  // namespace

ModalFormula m_true() {
  static ModalFormula t = mk(ModalKind::True);
  return t;
}

ModalFormula m_false() {
  static ModalFormula f = mk(ModalKind::False);
  return f;
}

ModalFormula m_atom(std::string name) {
  auto n = std::make_shared<ModalNode>(ModalKind::Atom);
  n->atom = std::move(name);
  return n;
}

ModalFormula m_not(ModalFormula f) {
  if (f->kind == ModalKind::True) return m_false();
  if (f->kind == ModalKind::False) return m_true();
  if (f->kind == ModalKind::Not) return f->lhs;
  auto n = mk(ModalKind::Not);
  const_cast<ModalNode*>(n.get())->lhs = std::move(f);
  return n;
}

ModalFormula m_and(ModalFormula a, ModalFormula b) {
  if (a->kind == ModalKind::False || b->kind == ModalKind::False) return m_false();
  if (a->kind == ModalKind::True) return b;
  if (b->kind == ModalKind::True) return a;
  if (a.get() == b.get()) return a;
  auto n = mk(ModalKind::And);
  auto* m = const_cast<ModalNode*>(n.get());
  m->lhs = std::move(a);
  m->rhs = std::move(b);
  return n;
}

ModalFormula m_or(ModalFormula a, ModalFormula b) {
  if (a->kind == ModalKind::True || b->kind == ModalKind::True) return m_true();
  if (a->kind == ModalKind::False) return b;
  if (b->kind == ModalKind::False) return a;
  if (a.get() == b.get()) return a;
  auto n = mk(ModalKind::Or);
  auto* m = const_cast<ModalNode*>(n.get());
  m->lhs = std::move(a);
  m->rhs = std::move(b);
  return n;
}

ModalFormula m_modal(ModalKind k, ModalFormula f) {
  if (!is_modal_operator(k)) throw std::invalid_argument("m_modal: not a modality");
  // A modality over false never finds a witness.
  if (f->kind == ModalKind::False) return m_false();
  auto n = mk(k);
  const_cast<ModalNode*>(n.get())->lhs = std::move(f);
  return n;
}

bool is_modal_operator(ModalKind k) {
  switch (k) {
    case ModalKind::DiaDown:
    case ModalKind::DiaUp:
    case ModalKind::NextChild:
    case ModalKind::NextParent:
    case ModalKind::DiaRight:
    case ModalKind::DiaLeft:
    case ModalKind::NextRight:
    case ModalKind::NextLeft:
      return true;
    default:
      return false;
  }
}

ModalFormula modal_intern(const ModalFormula& f) {
  std::map<std::tuple<ModalKind, std::string, const ModalNode*, const ModalNode*>,
           ModalFormula>
      table;
  std::unordered_map<const ModalNode*, ModalFormula> done;
  std::function<ModalFormula(const ModalFormula&)> go =
      [&](const ModalFormula& g) -> ModalFormula {
    auto hit = done.find(g.get());
    if (hit != done.end()) return hit->second;
    ModalFormula lhs = g->lhs ? go(g->lhs) : nullptr;
    ModalFormula rhs = g->rhs ? go(g->rhs) : nullptr;
    auto key = std::make_tuple(g->kind, g->atom, lhs.get(), rhs.get());
    auto it = table.find(key);
    ModalFormula out;
    if (it != table.end()) {
      out = it->second;
    } else {
      auto n = std::make_shared<ModalNode>(g->kind);
      auto* m = const_cast<ModalNode*>(n.get());
      m->atom = g->atom;
      m->lhs = std::move(lhs);
      m->rhs = std::move(rhs);
      out = n;
      table.emplace(key, out);
    }
    done.emplace(g.get(), out);
    return out;
  };
  return go(f);
}

std::vector<ModalFormula> modal_subformulas(const ModalFormula& f) {
  std::vector<ModalFormula> out;
  std::unordered_set<const ModalNode*> seen;
  std::function<void(const ModalFormula&)> walk = [&](const ModalFormula& g) {
    if (!g || seen.count(g.get())) return;
    seen.insert(g.get());
    if (g->lhs) walk(g->lhs);
    if (g->rhs) walk(g->rhs);
    out.push_back(g);
  };
  walk(f);
  return out;
}

size_t modal_dag_size(const ModalFormula& f) { return modal_subformulas(f).size(); }

size_t modal_tree_size(const ModalFormula& f) {
  size_t n = 1;
  if (f->lhs) n += modal_tree_size(f->lhs);
  if (f->rhs) n += modal_tree_size(f->rhs);
  return n;
}

std::vector<std::string> modal_atoms(const ModalFormula& f) {
  std::set<std::string> s;
  for (const auto& g : modal_subformulas(f))
    if (g->kind == ModalKind::Atom) s.insert(g->atom);
  return {s.begin(), s.end()};
}

// ---------------------------------------------------------------------------
// Text form

namespace {
const char* modal_op_text(ModalKind k) {
  switch (k) {
    case ModalKind::DiaDown: return "<CH>";
    case ModalKind::DiaUp: return "<-CH>";
    case ModalKind::DiaRight: return "<NS>";
    case ModalKind::DiaLeft: return "<-NS>";
    case ModalKind::NextChild: return "(X CH)";
    case ModalKind::NextParent: return "(X -CH)";
    case ModalKind::NextRight: return "(X NS)";
    case ModalKind::NextLeft: return "(X -NS)";
    default: return "";
  }
}

void render_modal_rec(const ModalFormula& f, std::string& out) {
  switch (f->kind) {
    case ModalKind::True: out += "true"; return;
    case ModalKind::False: out += "false"; return;
    case ModalKind::Atom: out += f->atom; return;
    case ModalKind::Not:
      out += '!';
      render_modal_rec(f->lhs, out);
      return;
    case ModalKind::And:
    case ModalKind::Or:
      out += '(';
      render_modal_rec(f->lhs, out);
      out += f->kind == ModalKind::And ? " & " : " | ";
      render_modal_rec(f->rhs, out);
      out += ')';
      return;
    default:
      out += modal_op_text(f->kind);
      render_modal_rec(f->lhs, out);
      return;
  }
}
}  // namespace

std::string render_modal(const ModalFormula& f) {
  std::string out;
  render_modal_rec(f, out);
  return out;
}

namespace {

struct ModalParser {
  std::string_view src;
  size_t i = 0;

  void ws() {
    while (i < src.size() && std::isspace(static_cast<unsigned char>(src[i]))) ++i;
  }

  bool eat(std::string_view s) {
    ws();
    if (src.substr(i, s.size()) == s) {
      i += s.size();
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw std::runtime_error("modal parse error at " + std::to_string(i) + ": " + msg);
  }

  std::string ident() {
    ws();
    size_t start = i;
    while (i < src.size() &&
           (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_'))
      ++i;
    if (i == start) fail("expected an identifier");
    return std::string(src.substr(start, i - start));
  }

  ModalFormula parse() {
    ModalFormula f = parse_or();
    ws();
    if (i != src.size()) fail("trailing input");
    return f;
  }

  ModalFormula parse_or() {
    ModalFormula a = parse_and();
    while (eat("|")) a = m_or(a, parse_and());
    return a;
  }

  ModalFormula parse_and() {
    ModalFormula a = parse_unary();
    while (eat("&")) a = m_and(a, parse_unary());
    return a;
  }

  ModalFormula parse_unary() {
    ws();
    if (eat("!")) return m_not(parse_unary());
    if (eat("<-CH>")) return m_modal(ModalKind::DiaUp, parse_unary());
    if (eat("<CH>")) return m_modal(ModalKind::DiaDown, parse_unary());
    if (eat("<-NS>")) return m_modal(ModalKind::DiaLeft, parse_unary());
    if (eat("<NS>")) return m_modal(ModalKind::DiaRight, parse_unary());
    ws();
    if (i < src.size() && src[i] == '(') {
      size_t save = i;
      ++i;
      ws();
      if (i < src.size() && src[i] == 'X' &&
          (i + 1 < src.size() && !std::isalnum(static_cast<unsigned char>(src[i + 1])))) {
        ++i;
        ModalKind k;
        if (eat("-CH")) k = ModalKind::NextParent;
        else if (eat("CH")) k = ModalKind::NextChild;
        else if (eat("-NS")) k = ModalKind::NextLeft;
        else if (eat("NS")) k = ModalKind::NextRight;
        else fail("expected CH, -CH, NS or -NS after X");
        if (!eat(")")) fail("expected ')'");
        return m_modal(k, parse_unary());
      }
      i = save;
      ++i;  // consume '('
      ModalFormula inner = parse_or();
      if (!eat(")")) fail("expected ')'");
      return inner;
    }
    std::string name = ident();
    if (name == "true") return m_true();
    if (name == "false") return m_false();
    return m_atom(name);
  }
};

}  // namespace

ModalFormula parse_modal(std::string_view text) {
  ModalParser p{text, 0};
  return p.parse();
}

// ---------------------------------------------------------------------------
// Evaluation

int ModalTable::index_of(const ModalFormula& f) const {
  for (size_t i = 0; i < subformulas.size(); ++i)
    if (subformulas[i].get() == f.get()) return static_cast<int>(i);
  return -1;
}

ModalTable eval_modal_table(const Tree& t, const ModalFormula& m) {
  ModalTable table;
  table.subformulas = modal_subformulas(m);
  int n = static_cast<int>(t.size());
  table.bits.assign(table.subformulas.size(), std::vector<char>(n, 0));

  std::unordered_map<const ModalNode*, int> idx;
  for (size_t i = 0; i < table.subformulas.size(); ++i)
    idx[table.subformulas[i].get()] = static_cast<int>(i);

  // Node order: parents precede children (preorder storage), so reverse
  // iteration visits children first.
  for (size_t i = 0; i < table.subformulas.size(); ++i) {
    const ModalFormula& f = table.subformulas[i];
    auto& row = table.bits[i];
    auto sub = [&](const ModalFormula& g, int node) {
      return table.bits[idx.at(g.get())][node] != 0;
    };
    switch (f->kind) {
      case ModalKind::True:
        std::fill(row.begin(), row.end(), 1);
        break;
      case ModalKind::False:
        break;
      case ModalKind::Atom: {
        int p = t.pred_index(f->atom);
        for (int u = 0; u < n; ++u)
          row[u] = (p >= 0 && t.has_label(u, p)) ? 1 : 0;
        break;
      }
      case ModalKind::Not:
        for (int u = 0; u < n; ++u) row[u] = sub(f->lhs, u) ? 0 : 1;
        break;
      case ModalKind::And:
        for (int u = 0; u < n; ++u) row[u] = (sub(f->lhs, u) && sub(f->rhs, u)) ? 1 : 0;
        break;
      case ModalKind::Or:
        for (int u = 0; u < n; ++u) row[u] = (sub(f->lhs, u) || sub(f->rhs, u)) ? 1 : 0;
        break;
      case ModalKind::NextChild:
        for (int u = n - 1; u >= 0; --u) {
          char v = 0;
          for (int c : t.nodes[u].children)
            if (sub(f->lhs, c)) { v = 1; break; }
          row[u] = v;
        }
        break;
      case ModalKind::DiaDown:
        for (int u = n - 1; u >= 0; --u) {
          char v = 0;
          for (int c : t.nodes[u].children)
            if (sub(f->lhs, c) || row[c]) { v = 1; break; }
          row[u] = v;
        }
        break;
      case ModalKind::NextParent:
        for (int u = 0; u < n; ++u) {
          int p = t.nodes[u].parent;
          row[u] = (p != -1 && sub(f->lhs, p)) ? 1 : 0;
        }
        break;
      case ModalKind::DiaUp:
        for (int u = 0; u < n; ++u) {
          int p = t.nodes[u].parent;
          row[u] = (p != -1 && (sub(f->lhs, p) || row[p])) ? 1 : 0;
        }
        break;
      case ModalKind::NextRight:
      case ModalKind::DiaRight:
        for (int u = 0; u < n; ++u) {
          const auto& ch = t.nodes[u].children;
          for (int k = static_cast<int>(ch.size()) - 2; k >= 0; --k) {
            int cur = ch[k], right = ch[k + 1];
            if (f->kind == ModalKind::NextRight)
              row[cur] = sub(f->lhs, right) ? 1 : 0;
            else
              row[cur] = (sub(f->lhs, right) || row[right]) ? 1 : 0;
          }
        }
        break;
      case ModalKind::NextLeft:
      case ModalKind::DiaLeft:
        for (int u = 0; u < n; ++u) {
          const auto& ch = t.nodes[u].children;
          for (size_t k = 1; k < ch.size(); ++k) {
            int cur = ch[k], left = ch[k - 1];
            if (f->kind == ModalKind::NextLeft)
              row[cur] = sub(f->lhs, left) ? 1 : 0;
            else
              row[cur] = (sub(f->lhs, left) || row[left]) ? 1 : 0;
          }
        }
        break;
    }
  }
  return table;
}

bool eval_modal(const Tree& t, const ModalFormula& m, const NodePath& n) {
  ModalTable table = eval_modal_table(t, m);
  return table.bits.back()[t.node_at(n)] != 0;
}

bool eval_modal_at_root(const Tree& t, const ModalFormula& m) {
  return eval_modal(t, m, {});
}

bool is_tl_tree(const ModalFormula& f) {
  for (const auto& g : modal_subformulas(f))
    if (g->kind == ModalKind::NextChild || g->kind == ModalKind::NextParent)
      return false;
  return true;
}

// ---------------------------------------------------------------------------
// NavXP

const char* nav_axis_name(NavAxis a) {
  switch (a) {
    case NavAxis::Self: return "self";
    case NavAxis::Child: return "child";
    case NavAxis::Descendant: return "descendant";
    case NavAxis::DescendantOrSelf: return "descendant-or-self";
    case NavAxis::AncestorOrSelf: return "ancestor-or-self";
    case NavAxis::NextSibling: return "next-sibling";
    case NavAxis::FollowingSibling: return "following-sibling";
    case NavAxis::PrecedingSibling: return "preceding-sibling";
    case NavAxis::PreviousSibling: return "previous-sibling";
  }
  return "?";
}

std::optional<NavAxis> nav_axis_from_name(std::string_view s) {
  for (NavAxis a : {NavAxis::Self, NavAxis::Child, NavAxis::Descendant,
                    NavAxis::DescendantOrSelf, NavAxis::AncestorOrSelf,
                    NavAxis::NextSibling, NavAxis::FollowingSibling,
                    NavAxis::PrecedingSibling, NavAxis::PreviousSibling})
    if (s == nav_axis_name(a)) return a;
  return std::nullopt;
}

NavPath nav_axis(NavAxis a) {
  auto n = std::make_shared<NavPathNode>(NavPathKind::Axis);
  const_cast<NavPathNode*>(n.get())->axis = a;
  return n;
}
NavPath nav_seq(NavPath a, NavPath b) {
  auto n = std::make_shared<NavPathNode>(NavPathKind::Seq);
  auto* m = const_cast<NavPathNode*>(n.get());
  m->p1 = std::move(a);
  m->p2 = std::move(b);
  return n;
}
NavPath nav_union(NavPath a, NavPath b) {
  auto n = std::make_shared<NavPathNode>(NavPathKind::Union);
  auto* m = const_cast<NavPathNode*>(n.get());
  m->p1 = std::move(a);
  m->p2 = std::move(b);
  return n;
}
NavPath nav_pred(NavPath p, NavFilter q) {
  auto n = std::make_shared<NavPathNode>(NavPathKind::Predicate);
  auto* m = const_cast<NavPathNode*>(n.get());
  m->p1 = std::move(p);
  m->filter = std::move(q);
  return n;
}
NavFilter nav_exists(NavPath p) {
  auto n = std::make_shared<NavFilterNode>(NavFilterKind::PathExists);
  const_cast<NavFilterNode*>(n.get())->path = std::move(p);
  return n;
}
NavFilter nav_lab(std::string label) {
  auto n = std::make_shared<NavFilterNode>(NavFilterKind::Lab);
  const_cast<NavFilterNode*>(n.get())->label = std::move(label);
  return n;
}
NavFilter nav_and(NavFilter a, NavFilter b) {
  auto n = std::make_shared<NavFilterNode>(NavFilterKind::FAnd);
  auto* m = const_cast<NavFilterNode*>(n.get());
  m->q1 = std::move(a);
  m->q2 = std::move(b);
  return n;
}
NavFilter nav_or(NavFilter a, NavFilter b) {
  auto n = std::make_shared<NavFilterNode>(NavFilterKind::FOr);
  auto* m = const_cast<NavFilterNode*>(n.get());
  m->q1 = std::move(a);
  m->q2 = std::move(b);
  return n;
}
NavFilter nav_not(NavFilter q) {
  auto n = std::make_shared<NavFilterNode>(NavFilterKind::FNot);
  const_cast<NavFilterNode*>(n.get())->q1 = std::move(q);
  return n;
}

namespace {

struct NavParser {
  std::string_view src;
  size_t i = 0;

  void ws() {
    while (i < src.size() && std::isspace(static_cast<unsigned char>(src[i]))) ++i;
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw std::runtime_error("navxp parse error at " + std::to_string(i) + ": " + msg);
  }

  bool peek_word(std::string_view w) {
    ws();
    if (src.substr(i, w.size()) != w) return false;
    size_t j = i + w.size();
    if (j < src.size() &&
        (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' || src[j] == '-'))
      return false;
    return true;
  }

  bool eat_word(std::string_view w) {
    if (!peek_word(w)) return false;
    i += w.size();
    return true;
  }

  bool eat(char c) {
    ws();
    if (i < src.size() && src[i] == c) {
      ++i;
      return true;
    }
    return false;
  }

  std::string ident() {
    ws();
    size_t start = i;
    while (i < src.size() &&
           (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_' ||
            src[i] == '-'))
      ++i;
    if (i == start) fail("expected a name");
    return std::string(src.substr(start, i - start));
  }

  NavFilter parse_filter() {
    NavFilter a = parse_filter_and();
    while (eat_word("or")) a = nav_or(a, parse_filter_and());
    return a;
  }

  NavFilter parse_filter_and() {
    NavFilter a = parse_filter_unary();
    while (eat_word("and")) a = nav_and(a, parse_filter_unary());
    return a;
  }

  NavFilter parse_filter_unary() {
    if (eat_word("not") || eat('!')) return nav_not(parse_filter_unary());
    ws();
    if (i < src.size() && src[i] == '(') {
      // A parenthesized group can open a path (continuing with / or [..]) or
      // group a filter; try the path reading first and fall back.
      size_t save = i;
      try {
        return nav_exists(parse_path());
      } catch (const std::runtime_error&) {
        i = save;
      }
      ++i;
      NavFilter q = parse_filter();
      if (!eat(')')) fail("expected ')'");
      return q;
    }
    if (peek_word("lab")) {
      eat_word("lab");
      if (!eat('(') || !eat(')')) fail("expected 'lab()'");
      if (!eat('=')) fail("expected '=' after lab()");
      return nav_lab(ident());
    }
    return nav_exists(parse_path());
  }

  NavPath parse_path() {
    NavPath a = parse_seq();
    while (eat('|')) a = nav_union(a, parse_seq());
    return a;
  }

  NavPath parse_seq() {
    NavPath a = parse_step();
    while (true) {
      ws();
      if (i < src.size() && src[i] == '/') {
        ++i;
        a = nav_seq(a, parse_step());
      } else {
        break;
      }
    }
    return a;
  }

  NavPath parse_step() {
    ws();
    NavPath base;
    if (i < src.size() && src[i] == '(') {
      ++i;
      base = parse_path();
      if (!eat(')')) fail("expected ')'");
    } else {
      std::string name = ident();
      auto axis = nav_axis_from_name(name);
      if (!axis) fail("unsupported axis '" + name + "'");
      base = nav_axis(*axis);
    }
    while (true) {
      ws();
      if (i < src.size() && src[i] == '[') {
        ++i;
        NavFilter q = parse_filter();
        if (!eat(']')) fail("expected ']'");
        base = nav_pred(base, q);
      } else {
        break;
      }
    }
    return base;
  }
};

}  // namespace

NavFilter parse_navxp(std::string_view text) {
  NavParser p{text, 0};
  NavFilter q = p.parse_filter();
  p.ws();
  if (p.i != text.size()) p.fail("trailing input");
  return q;
}

namespace {
void render_path(const NavPath& p, std::string& out);

void render_filter(const NavFilter& q, std::string& out) {
  switch (q->kind) {
    case NavFilterKind::PathExists: render_path(q->path, out); return;
    case NavFilterKind::Lab:
      out += "lab()=";
      out += q->label;
      return;
    case NavFilterKind::FAnd:
    case NavFilterKind::FOr:
      out += '(';
      render_filter(q->q1, out);
      out += q->kind == NavFilterKind::FAnd ? " and " : " or ";
      render_filter(q->q2, out);
      out += ')';
      return;
    case NavFilterKind::FNot:
      out += "not ";
      render_filter(q->q1, out);
      return;
  }
}

void render_path(const NavPath& p, std::string& out) {
  switch (p->kind) {
    case NavPathKind::Axis: out += nav_axis_name(p->axis); return;
    case NavPathKind::Seq:
      render_path(p->p1, out);
      out += '/';
      render_path(p->p2, out);
      return;
    case NavPathKind::Union:
      out += '(';
      render_path(p->p1, out);
      out += " | ";
      render_path(p->p2, out);
      out += ')';
      return;
    case NavPathKind::Predicate:
      render_path(p->p1, out);
      out += '[';
      render_filter(p->filter, out);
      out += ']';
      return;
  }
}
}  // namespace

std::string render_navxp(const NavFilter& q) {
  std::string out;
  render_filter(q, out);
  return out;
}

namespace {

using PairSet = std::set<std::pair<int, int>>;

PairSet axis_relation(const Tree& t, NavAxis a) {
  PairSet out;
  switch (a) {
    case NavAxis::Self:
      for (size_t u = 0; u < t.size(); ++u)
        out.insert({static_cast<int>(u), static_cast<int>(u)});
      return out;
    case NavAxis::Child:
      return axis_pairs(t, Axis::ParentOf);
    case NavAxis::Descendant:
      return axis_pairs(t, Axis::AncOf);
    case NavAxis::DescendantOrSelf: {
      out = axis_pairs(t, Axis::AncOf);
      for (size_t u = 0; u < t.size(); ++u)
        out.insert({static_cast<int>(u), static_cast<int>(u)});
      return out;
    }
    case NavAxis::AncestorOrSelf: {
      for (auto [a2, b] : axis_pairs(t, Axis::AncOf)) out.insert({b, a2});
      for (size_t u = 0; u < t.size(); ++u)
        out.insert({static_cast<int>(u), static_cast<int>(u)});
      return out;
    }
    case NavAxis::NextSibling:
      return axis_pairs(t, Axis::NextSib);
    case NavAxis::FollowingSibling:
      return axis_pairs(t, Axis::LeftOf);
    case NavAxis::PrecedingSibling: {
      for (auto [a2, b] : axis_pairs(t, Axis::LeftOf)) out.insert({b, a2});
      return out;
    }
    case NavAxis::PreviousSibling: {
      for (auto [a2, b] : axis_pairs(t, Axis::NextSib)) out.insert({b, a2});
      return out;
    }
  }
  return out;
}

std::set<int> filter_nodes(const Tree& t, const NavFilter& q);

PairSet path_pairs(const Tree& t, const NavPath& p) {
  switch (p->kind) {
    case NavPathKind::Axis:
      return axis_relation(t, p->axis);
    case NavPathKind::Seq: {
      PairSet a = path_pairs(t, p->p1);
      PairSet b = path_pairs(t, p->p2);
      std::map<int, std::set<int>> by_src;
      for (auto [u, w] : b) by_src[u].insert(w);
      PairSet out;
      for (auto [u, w] : a) {
        auto it = by_src.find(w);
        if (it == by_src.end()) continue;
        for (int v : it->second) out.insert({u, v});
      }
      return out;
    }
    case NavPathKind::Union: {
      PairSet out = path_pairs(t, p->p1);
      PairSet b = path_pairs(t, p->p2);
      out.insert(b.begin(), b.end());
      return out;
    }
    case NavPathKind::Predicate: {
      PairSet base = path_pairs(t, p->p1);
      std::set<int> ok = filter_nodes(t, p->filter);
      PairSet out;
      for (auto [u, v] : base)
        if (ok.count(v)) out.insert({u, v});
      return out;
    }
  }
  return {};
}

std::set<int> filter_nodes(const Tree& t, const NavFilter& q) {
  std::set<int> out;
  switch (q->kind) {
    case NavFilterKind::PathExists: {
      for (auto [u, v] : path_pairs(t, q->path)) out.insert(u);
      return out;
    }
    case NavFilterKind::Lab: {
      int p = t.pred_index(q->label);
      for (size_t u = 0; u < t.size(); ++u)
        if (p >= 0 && t.has_label(static_cast<int>(u), p)) out.insert(static_cast<int>(u));
      return out;
    }
    case NavFilterKind::FAnd: {
      std::set<int> a = filter_nodes(t, q->q1);
      for (int u : filter_nodes(t, q->q2))
        if (a.count(u)) out.insert(u);
      return out;
    }
    case NavFilterKind::FOr: {
      out = filter_nodes(t, q->q1);
      for (int u : filter_nodes(t, q->q2)) out.insert(u);
      return out;
    }
    case NavFilterKind::FNot: {
      std::set<int> a = filter_nodes(t, q->q1);
      for (size_t u = 0; u < t.size(); ++u)
        if (!a.count(static_cast<int>(u))) out.insert(static_cast<int>(u));
      return out;
    }
  }
  return out;
}

}  // namespace

std::set<std::pair<int, int>> navxp_pairs(const Tree& t, const NavPath& p) {
  return path_pairs(t, p);
}

std::set<int> eval_navxp(const Tree& t, const NavFilter& q) {
  return filter_nodes(t, q);
}

bool navxp_holds(const Tree& t, const NavFilter& q) {
  return eval_navxp(t, q).count(0) != 0;
}

// ---------------------------------------------------------------------------
// NavXP -> tree logic, continuation style; subterm sharing keeps the DAG
// output linear in the filter size.

namespace {
ModalFormula nav_filter_tr(const NavFilter& q);

ModalFormula nav_step(NavAxis a, const ModalFormula& cont) {
  switch (a) {
    case NavAxis::Self: return cont;
    case NavAxis::Child: return m_modal(ModalKind::NextChild, cont);
    case NavAxis::Descendant: return m_modal(ModalKind::DiaDown, cont);
    case NavAxis::DescendantOrSelf:
      return m_or(cont, m_modal(ModalKind::DiaDown, cont));
    case NavAxis::AncestorOrSelf:
      return m_or(cont, m_modal(ModalKind::DiaUp, cont));
    case NavAxis::NextSibling: return m_modal(ModalKind::NextRight, cont);
    case NavAxis::FollowingSibling: return m_modal(ModalKind::DiaRight, cont);
    case NavAxis::PrecedingSibling: return m_modal(ModalKind::DiaLeft, cont);
    case NavAxis::PreviousSibling: return m_modal(ModalKind::NextLeft, cont);
  }
  return cont;
}

ModalFormula nav_path_tr(const NavPath& p, const ModalFormula& cont) {
  switch (p->kind) {
    case NavPathKind::Axis:
      return nav_step(p->axis, cont);
    case NavPathKind::Seq:
      return nav_path_tr(p->p1, nav_path_tr(p->p2, cont));
    case NavPathKind::Union:
      return m_or(nav_path_tr(p->p1, cont), nav_path_tr(p->p2, cont));
    case NavPathKind::Predicate:
      return nav_path_tr(p->p1, m_and(nav_filter_tr(p->filter), cont));
  }
  return cont;
}

ModalFormula nav_filter_tr(const NavFilter& q) {
  switch (q->kind) {
    case NavFilterKind::PathExists: return nav_path_tr(q->path, m_true());
    case NavFilterKind::Lab: return m_atom(q->label);
    case NavFilterKind::FAnd: return m_and(nav_filter_tr(q->q1), nav_filter_tr(q->q2));
    case NavFilterKind::FOr: return m_or(nav_filter_tr(q->q1), nav_filter_tr(q->q2));
    case NavFilterKind::FNot: return m_not(nav_filter_tr(q->q1));
  }
  return m_true();
}
}  // namespace

ModalFormula navxp_to_modal(const NavFilter& q) { return nav_filter_tr(q); }

size_t navxp_size(const NavFilter& q) {
  switch (q->kind) {
    case NavFilterKind::PathExists: {
      std::function<size_t(const NavPath&)> psz = [&](const NavPath& p) -> size_t {
        switch (p->kind) {
          case NavPathKind::Axis: return 1;
          case NavPathKind::Seq:
          case NavPathKind::Union:
            return 1 + psz(p->p1) + psz(p->p2);
          case NavPathKind::Predicate:
            return 1 + psz(p->p1) + navxp_size(p->filter);
        }
        return 1;
      };
      return 1 + psz(q->path);
    }
    case NavFilterKind::Lab: return 1;
    case NavFilterKind::FAnd:
    case NavFilterKind::FOr:
      return 1 + navxp_size(q->q1) + navxp_size(q->q2);
    case NavFilterKind::FNot:
      return 1 + navxp_size(q->q1);
  }
  return 1;
}

// ---------------------------------------------------------------------------
// FO2 -> tree logic
//
// Per closure entry, bottom-up. An existential body is split by the relative
// position of the witness; each position class fixes the binary atoms, the
// remaining boolean combination of current-node and witness parts goes to
// disjunctive normal form, and each witness part is pushed under the
// modalities that reach exactly that class. Classes with identical residue
// merge; the everywhere-merge and the ancestor / descendant merges need no
// sibling modalities.

namespace {

// Relative positions of a witness; mirrors PairConfig in model_check.
enum WConfig : int {
  WEqual = 0,
  WParent,
  WAncestorFar,
  WChild,
  WDescendantFar,
  WNextSib,
  WRightFar,
  WPrevSib,
  WLeftFar,
  WIncompOther,
  WConfigCount,
};

bool w_bin_truth(BinRel rel, bool args_xy, WConfig c) {
  auto flip = [](WConfig k) {
    switch (k) {
      case WParent: return WChild;
      case WChild: return WParent;
      case WAncestorFar: return WDescendantFar;
      case WDescendantFar: return WAncestorFar;
      case WNextSib: return WPrevSib;
      case WPrevSib: return WNextSib;
      case WRightFar: return WLeftFar;
      case WLeftFar: return WRightFar;
      default: return k;
    }
  };
  WConfig k = args_xy ? c : flip(c);
  switch (rel) {
    case BinRel::ParentOf: return k == WChild;
    case BinRel::AncOf: return k == WChild || k == WDescendantFar;
    case BinRel::LeftSibOf: return k == WNextSib;
    case BinRel::LeftOf: return k == WNextSib || k == WRightFar;
  }
  return false;
}

// Literal: +(i+1) = entry i positive, -(i+1) = negative.
struct DnfTerm {
  std::vector<int> x, y;
  bool operator<(const DnfTerm& o) const { return std::tie(x, y) < std::tie(o.x, o.y); }
  bool operator==(const DnfTerm& o) const { return x == o.x && y == o.y; }
};
using Dnf = std::vector<DnfTerm>;  // empty = false; term with empty lits = true

constexpr size_t kDnfBudget = 100000;

bool add_lit(std::vector<int>& lits, int lit) {
  for (int l : lits)
    if (l == -lit) return false;  // contradictory term
  if (std::find(lits.begin(), lits.end(), lit) == lits.end()) lits.push_back(lit);
  return true;
}

Dnf dnf_or(Dnf a, const Dnf& b) {
  a.insert(a.end(), b.begin(), b.end());
  if (a.size() > kDnfBudget) throw std::length_error("fo2_to_modal: dnf budget");
  return a;
}

Dnf dnf_and(const Dnf& a, const Dnf& b) {
  Dnf out;
  for (const auto& ta : a)
    for (const auto& tb : b) {
      DnfTerm t = ta;
      bool ok = true;
      for (int l : tb.x)
        if (!add_lit(t.x, l)) { ok = false; break; }
      if (ok)
        for (int l : tb.y)
          if (!add_lit(t.y, l)) { ok = false; break; }
      if (ok) out.push_back(std::move(t));
      if (out.size() > kDnfBudget) throw std::length_error("fo2_to_modal: dnf budget");
    }
  return out;
}

Dnf dnf_const(bool v) {
  if (!v) return {};
  return {DnfTerm{}};
}

// DNF of a quantifier body under a fixed witness position. `witness_is_x`
// covers closed entries, whose single variable is the witness itself.
Dnf body_dnf(const FoFormula& f, WConfig cfg, bool positive,
             const ClosureBasis& basis, bool witness_is_x) {
  // Negation carries no basis entry of its own when synthesized (forall goes
  // through not-exists-not), so peel it before any lookup.
  if (f->kind == FoKind::Not)
    return body_dnf(f->lhs, cfg, !positive, basis, witness_is_x);
  std::set<Var> fv = free_vars(f);
  if (fv.size() <= 1) {
    int idx = basis.index_of(canon_one_var(f));
    bool on_witness = fv.empty()               ? false
                      : *fv.begin() == Var::X ? witness_is_x
                                              : true;
    if (idx < 0) throw std::logic_error("fo2_to_modal: missing basis entry");
    int lit = positive ? idx + 1 : -(idx + 1);
    DnfTerm t;
    // Witness-side literals stay on the witness side even at the equal
    // position (where the witness is the current node); identical residues
    // across positions then merge into witness-anywhere encodings.
    if (on_witness)
      t.y.push_back(lit);
    else
      t.x.push_back(lit);
    return {t};
  }
  switch (f->kind) {
    case FoKind::Eq:
      return dnf_const((cfg == WEqual) == positive);
    case FoKind::Bin:
      return dnf_const(w_bin_truth(f->rel, f->v1 == Var::X, cfg) == positive);
    case FoKind::And: {
      Dnf a = body_dnf(f->lhs, cfg, positive, basis, witness_is_x);
      Dnf b = body_dnf(f->rhs, cfg, positive, basis, witness_is_x);
      return positive ? dnf_and(a, b) : dnf_or(std::move(a), b);
    }
    case FoKind::Or: {
      Dnf a = body_dnf(f->lhs, cfg, positive, basis, witness_is_x);
      Dnf b = body_dnf(f->rhs, cfg, positive, basis, witness_is_x);
      return positive ? dnf_or(std::move(a), b) : dnf_and(a, b);
    }
    case FoKind::Implies: {
      Dnf a = body_dnf(f->lhs, cfg, !positive, basis, witness_is_x);
      Dnf b = body_dnf(f->rhs, cfg, positive, basis, witness_is_x);
      return positive ? dnf_or(std::move(a), b) : dnf_and(a, b);
    }
    case FoKind::Iff: {
      Dnf app = body_dnf(f->lhs, cfg, true, basis, witness_is_x);
      Dnf apn = body_dnf(f->lhs, cfg, false, basis, witness_is_x);
      Dnf bpp = body_dnf(f->rhs, cfg, true, basis, witness_is_x);
      Dnf bpn = body_dnf(f->rhs, cfg, false, basis, witness_is_x);
      if (positive) return dnf_or(dnf_and(app, bpp), dnf_and(apn, bpn));
      return dnf_or(dnf_and(app, bpn), dnf_and(apn, bpp));
    }
    default:
      throw std::logic_error("fo2_to_modal: quantifier with two free variables");
  }
}

Dnf dnf_canonical(Dnf d) {
  for (auto& t : d) {
    std::sort(t.x.begin(), t.x.end());
    std::sort(t.y.begin(), t.y.end());
  }
  std::sort(d.begin(), d.end());
  d.erase(std::unique(d.begin(), d.end()), d.end());
  return d;
}

std::string dnf_key(const Dnf& d) {
  std::string k;
  for (const auto& t : d) {
    for (int l : t.x) k += std::to_string(l) + ",";
    k += "/";
    for (int l : t.y) k += std::to_string(l) + ",";
    k += ";";
  }
  return k;
}

ModalFormula lits_formula(const std::vector<int>& lits,
                          const std::vector<ModalFormula>& entry_tr) {
  ModalFormula acc = m_true();
  for (int l : lits) {
    ModalFormula e = entry_tr[std::abs(l) - 1];
    acc = m_and(acc, l > 0 ? e : m_not(e));
  }
  return acc;
}

// Existential over a set of witness positions carrying witness property w.
ModalFormula encode_positions(const std::set<int>& cfgs, const ModalFormula& w) {
  std::set<int> all;
  for (int c = 0; c < WConfigCount; ++c) all.insert(c);
  auto dia = [&](ModalKind k, ModalFormula f) { return m_modal(k, std::move(f)); };

  if (cfgs == all) {
    // Some node anywhere in the tree.
    ModalFormula down = m_or(w, dia(ModalKind::DiaDown, w));
    return m_or(down, dia(ModalKind::DiaUp, down));
  }

  std::set<int> rest = cfgs;
  auto take = [&rest](std::initializer_list<int> cs) {
    for (int c : cs)
      if (!rest.count(c)) return false;
    for (int c : cs) rest.erase(c);
    return true;
  };

  // The self position comes first: solvers try local satisfaction before
  // deferring witnesses into fresh subtrees.
  ModalFormula acc = m_false();
  if (take({WEqual})) acc = m_or(acc, w);
  if (take({WChild, WDescendantFar})) acc = m_or(acc, dia(ModalKind::DiaDown, w));
  if (take({WParent, WAncestorFar})) acc = m_or(acc, dia(ModalKind::DiaUp, w));
  if (take({WNextSib, WRightFar})) acc = m_or(acc, dia(ModalKind::DiaRight, w));
  if (take({WPrevSib, WLeftFar})) acc = m_or(acc, dia(ModalKind::DiaLeft, w));
  for (int c : rest) {
    switch (c) {
      case WEqual: acc = m_or(acc, w); break;
      case WParent: acc = m_or(acc, dia(ModalKind::NextParent, w)); break;
      case WAncestorFar:
        acc = m_or(acc, dia(ModalKind::NextParent, dia(ModalKind::DiaUp, w)));
        break;
      case WChild: acc = m_or(acc, dia(ModalKind::NextChild, w)); break;
      case WDescendantFar:
        acc = m_or(acc, dia(ModalKind::NextChild, dia(ModalKind::DiaDown, w)));
        break;
      case WNextSib: acc = m_or(acc, dia(ModalKind::NextRight, w)); break;
      case WRightFar:
        acc = m_or(acc, dia(ModalKind::NextRight, dia(ModalKind::DiaRight, w)));
        break;
      case WPrevSib: acc = m_or(acc, dia(ModalKind::NextLeft, w)); break;
      case WLeftFar:
        acc = m_or(acc, dia(ModalKind::NextLeft, dia(ModalKind::DiaLeft, w)));
        break;
      case WIncompOther: {
        // Up zero or more steps, over to a sibling, strictly down when no up
        // step was taken (a sibling itself is a sibling, not incomparable).
        ModalFormula below = m_modal(ModalKind::NextChild, m_or(w, dia(ModalKind::DiaDown, w)));
        auto sib_any = [&](const ModalFormula& f) {
          return m_or(dia(ModalKind::DiaRight, f), dia(ModalKind::DiaLeft, f));
        };
        ModalFormula at_self = sib_any(below);
        ModalFormula higher = dia(ModalKind::DiaUp, sib_any(m_or(w, below)));
        acc = m_or(acc, m_or(at_self, higher));
        break;
      }
      default: break;
    }
  }
  return acc;
}

ModalFormula translate_exists(const FoFormula& body, const ClosureBasis& basis,
                              const std::vector<ModalFormula>& entry_tr,
                              bool witness_is_x) {
  // Group witness positions by the residual boolean shape of the body.
  std::map<std::string, std::pair<Dnf, std::set<int>>> groups;
  for (int c = 0; c < WConfigCount; ++c) {
    Dnf d = dnf_canonical(
        body_dnf(body, static_cast<WConfig>(c), true, basis, witness_is_x));
    if (d.empty()) continue;
    auto& slot = groups[dnf_key(d)];
    if (slot.second.empty()) slot.first = std::move(d);
    slot.second.insert(c);
  }
  ModalFormula acc = m_false();
  for (auto& [key, group] : groups) {
    for (const auto& term : group.first) {
      ModalFormula xpart = lits_formula(term.x, entry_tr);
      ModalFormula ypart = lits_formula(term.y, entry_tr);
      acc = m_or(acc, m_and(xpart, encode_positions(group.second, ypart)));
    }
  }
  return acc;
}

}  // namespace

ModalFormula fo2_to_modal(const FoFormula& f) {
  if (!is_sentence(f))
    throw std::invalid_argument("fo2_to_modal: formula must be a sentence");
  ClosureBasis basis = one_var_closure(f);
  std::vector<ModalFormula> entry_tr;
  entry_tr.reserve(basis.size());
  for (const auto& e : basis.entries) {
    ModalFormula tr;
    switch (e->kind) {
      case FoKind::Pred:
        tr = m_atom(e->pred);
        break;
      case FoKind::Eq:
        tr = m_true();
        break;
      case FoKind::Bin:
        tr = m_false();  // irreflexive relation on a single variable
        break;
      case FoKind::Not:
        tr = m_not(entry_tr[basis.index_of(e->lhs)]);
        break;
      case FoKind::And:
        tr = m_and(entry_tr[basis.index_of(e->lhs)], entry_tr[basis.index_of(e->rhs)]);
        break;
      case FoKind::Or:
        tr = m_or(entry_tr[basis.index_of(e->lhs)], entry_tr[basis.index_of(e->rhs)]);
        break;
      case FoKind::Implies:
        tr = m_or(m_not(entry_tr[basis.index_of(e->lhs)]),
                  entry_tr[basis.index_of(e->rhs)]);
        break;
      case FoKind::Iff: {
        ModalFormula a = entry_tr[basis.index_of(e->lhs)];
        ModalFormula b = entry_tr[basis.index_of(e->rhs)];
        tr = m_or(m_and(a, b), m_and(m_not(a), m_not(b)));
        break;
      }
      case FoKind::Exists:
      case FoKind::Forall: {
        bool closed = free_vars(e).empty();
        if (e->kind == FoKind::Exists) {
          tr = translate_exists(e->lhs, basis, entry_tr, closed);
        } else {
          tr = m_not(translate_exists(fo_not(e->lhs), basis, entry_tr, closed));
        }
        break;
      }
    }
    entry_tr.push_back(std::move(tr));
  }
  return entry_tr[basis.index_of(canon_one_var(f))];
}

}  // namespace fo2tree
