#include "fo2tree/tree.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_map>

namespace fo2tree {

std::string path_to_string(const NodePath& p) {
  std::string s = "/";
  for (size_t i = 0; i < p.size(); ++i) {
    if (i) s += '/';
    s += std::to_string(p[i]);
  }
  return s;
}

int Tree::node_at(const NodePath& p) const {
  if (nodes.empty()) throw std::invalid_argument("node_at: empty tree");
  int cur = 0;
  for (int idx : p) {
    const auto& ch = nodes[cur].children;
    if (idx < 0 || static_cast<size_t>(idx) >= ch.size())
      throw std::invalid_argument("node_at: invalid path " + path_to_string(p));
    cur = ch[idx];
  }
  return cur;
}

NodePath Tree::path_of(int node) const {
  NodePath rev;
  int cur = node;
  while (nodes[cur].parent != -1) {
    int par = nodes[cur].parent;
    const auto& ch = nodes[par].children;
    auto it = std::find(ch.begin(), ch.end(), cur);
    rev.push_back(static_cast<int>(it - ch.begin()));
    cur = par;
  }
  std::reverse(rev.begin(), rev.end());
  return rev;
}

int Tree::depth_of(int node) const {
  int d = 0;
  while (nodes[node].parent != -1) {
    node = nodes[node].parent;
    ++d;
  }
  return d;
}

int Tree::depth_nodes() const {
  int best = 0;
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].children.empty())
      best = std::max(best, depth_of(static_cast<int>(i)) + 1);
  return best;
}

bool Tree::has_label(int node, int pred) const {
  const auto& l = nodes[node].labels;
  return std::binary_search(l.begin(), l.end(), pred);
}

bool Tree::has_label(int node, std::string_view pred) const {
  int idx = pred_index(pred);
  return idx >= 0 && has_label(node, idx);
}

int Tree::pred_index(std::string_view name) const {
  auto it = std::lower_bound(signature.begin(), signature.end(), name);
  if (it == signature.end() || *it != name) return -1;
  return static_cast<int>(it - signature.begin());
}

std::vector<int> Tree::preorder() const {
  std::vector<int> order(nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) order[i] = static_cast<int>(i);
  return order;
}

std::vector<NodePath> Tree::leaf_paths() const {
  std::vector<NodePath> out;
  NodePath cur;
  std::function<void(int)> walk = [&](int n) {
    if (nodes[n].children.empty()) {
      out.push_back(cur);
      return;
    }
    for (size_t i = 0; i < nodes[n].children.size(); ++i) {
      cur.push_back(static_cast<int>(i));
      walk(nodes[n].children[i]);
      cur.pop_back();
    }
  };
  if (!nodes.empty()) walk(0);
  return out;
}

bool Tree::operator==(const Tree& other) const {
  return signature == other.signature && render_tree(*this) == render_tree(other);
}

std::optional<Axis> axis_from_name(std::string_view s) {
  if (s == "ParentOf") return Axis::ParentOf;
  if (s == "ChildOf") return Axis::ChildOf;
  if (s == "AncOf") return Axis::AncOf;
  if (s == "DescOf") return Axis::DescOf;
  if (s == "LeftSibOf") return Axis::LeftSibOf;
  if (s == "NextSib") return Axis::NextSib;
  if (s == "LeftOf") return Axis::LeftOf;
  if (s == "RightOf") return Axis::RightOf;
  if (s == "Incomparable") return Axis::Incomparable;
  return std::nullopt;
}

namespace {

bool is_ancestor(const Tree& t, int u, int v) {
  // u proper ancestor of v
  int cur = t.nodes[v].parent;
  while (cur != -1) {
    if (cur == u) return true;
    cur = t.nodes[cur].parent;
  }
  return false;
}

}  // namespace

std::set<std::pair<int, int>> axis_pairs(const Tree& t, Axis axis) {
  std::set<std::pair<int, int>> out;
  int n = static_cast<int>(t.size());
  switch (axis) {
    case Axis::ParentOf:
      for (int v = 0; v < n; ++v)
        if (t.nodes[v].parent != -1) out.insert({t.nodes[v].parent, v});
      break;
    case Axis::ChildOf:
      for (int v = 0; v < n; ++v)
        if (t.nodes[v].parent != -1) out.insert({v, t.nodes[v].parent});
      break;
    case Axis::AncOf:
      for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v)
          if (is_ancestor(t, u, v)) out.insert({u, v});
      break;
    case Axis::DescOf:
      for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v)
          if (is_ancestor(t, v, u)) out.insert({u, v});
      break;
    case Axis::LeftSibOf:
    case Axis::NextSib:
      for (int u = 0; u < n; ++u) {
        const auto& nd = t.nodes[u];
        for (size_t i = 0; i + 1 < nd.children.size(); ++i)
          out.insert({nd.children[i], nd.children[i + 1]});
      }
      break;
    case Axis::LeftOf:
      for (int u = 0; u < n; ++u) {
        const auto& nd = t.nodes[u];
        for (size_t i = 0; i < nd.children.size(); ++i)
          for (size_t j = i + 1; j < nd.children.size(); ++j)
            out.insert({nd.children[i], nd.children[j]});
      }
      break;
    case Axis::RightOf:
      for (auto [a, b] : axis_pairs(t, Axis::LeftOf)) out.insert({b, a});
      break;
    case Axis::Incomparable:
      for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v)
          if (u != v && !is_ancestor(t, u, v) && !is_ancestor(t, v, u))
            out.insert({u, v});
      break;
  }
  return out;
}

bool is_uar(const Tree& t) {
  for (const auto& nd : t.nodes)
    if (nd.labels.size() != 1) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

struct TreeParser {
  std::string_view src;
  size_t i = 0;
  const std::vector<std::string>* declared;
  std::set<std::string> seen;

  void skip_ws() {
    while (i < src.size() && std::isspace(static_cast<unsigned char>(src[i]))) ++i;
  }

  char peek() {
    skip_ws();
    if (i >= src.size()) throw TreeParseError("unexpected end of input", i);
    return src[i];
  }

  void expect(char c) {
    if (peek() != c)
      throw TreeParseError(std::string("expected '") + c + "'", i);
    ++i;
  }

  std::string ident() {
    skip_ws();
    size_t start = i;
    while (i < src.size() &&
           (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_'))
      ++i;
    if (i == start) throw TreeParseError("expected a label", start);
    return std::string(src.substr(start, i - start));
  }

  struct Raw {
    std::vector<std::string> labels;
    std::vector<Raw> children;
  };

  Raw parse_node() {
    expect('(');
    Raw r;
    while (peek() != ';') {
      std::string lab = ident();
      if (declared &&
          std::find(declared->begin(), declared->end(), lab) == declared->end())
        throw TreeParseError("label '" + lab + "' not in signature", i);
      seen.insert(lab);
      r.labels.push_back(std::move(lab));
    }
    expect(';');
    while (peek() != ')') r.children.push_back(parse_node());
    expect(')');
    return r;
  }
};

void build_nodes(const TreeParser::Raw& raw, int parent, Tree& t) {
  int id = static_cast<int>(t.nodes.size());
  t.nodes.emplace_back();
  t.nodes[id].parent = parent;
  std::vector<int> labels;
  for (const auto& lab : raw.labels) {
    int idx = t.pred_index(lab);
    labels.push_back(idx);
  }
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  t.nodes[id].labels = std::move(labels);
  if (parent != -1) t.nodes[parent].children.push_back(id);
  for (const auto& c : raw.children) build_nodes(c, id, t);
}

}  // namespace

Tree parse_tree(std::string_view text, const std::vector<std::string>* signature) {
  TreeParser p{text, 0, signature, {}};
  TreeParser::Raw raw = p.parse_node();
  p.skip_ws();
  if (p.i != text.size()) throw TreeParseError("trailing input", p.i);
  Tree t;
  if (signature) {
    t.signature = *signature;
    std::sort(t.signature.begin(), t.signature.end());
    t.signature.erase(std::unique(t.signature.begin(), t.signature.end()),
                      t.signature.end());
  } else {
    t.signature.assign(p.seen.begin(), p.seen.end());
  }
  build_nodes(raw, -1, t);
  return t;
}

namespace {
void render_node(const Tree& t, int n, std::string& out) {
  out += '(';
  bool first = true;
  for (int lab : t.nodes[n].labels) {
    if (!first) out += ' ';
    out += t.signature[lab];
    first = false;
  }
  out += " ;";
  for (int c : t.nodes[n].children) {
    out += ' ';
    render_node(t, c, out);
  }
  out += ')';
}
}  // namespace

std::string render_tree(const Tree& t) {
  if (t.nodes.empty()) return "()";
  std::string out;
  render_node(t, 0, out);
  return out;
}

Tree make_tree(const std::vector<std::string>& signature, const std::string& text) {
  return parse_tree(text, &signature);
}

// ---------------------------------------------------------------------------
// DAG

namespace {
struct EntryKey {
  std::string key;
};
}  // namespace

TreeDag to_dag(const Tree& t) {
  TreeDag d;
  d.signature = t.signature;
  std::unordered_map<std::string, int> intern;
  std::function<int(int)> walk = [&](int n) -> int {
    TreeDag::Entry e;
    e.labels = t.nodes[n].labels;
    for (int c : t.nodes[n].children) e.children.push_back(walk(c));
    std::string key;
    for (int l : e.labels) key += std::to_string(l) + ",";
    key += ";";
    for (int c : e.children) key += std::to_string(c) + ",";
    auto it = intern.find(key);
    if (it != intern.end()) return it->second;
    int id = static_cast<int>(d.entries.size());
    d.entries.push_back(std::move(e));
    intern[key] = id;
    return id;
  };
  d.root = walk(0);
  return d;
}

unsigned long long TreeDag::unfold_size() const {
  constexpr unsigned long long kCeil = 1ULL << 62;
  std::vector<unsigned long long> sz(entries.size(), 0);
  // entries are created bottom-up by to_dag, but parse_dag may order freely;
  // resolve with memoized recursion.
  std::function<unsigned long long(int)> go = [&](int e) -> unsigned long long {
    if (sz[e]) return sz[e];
    unsigned long long total = 1;
    for (int c : entries[e].children) {
      unsigned long long s = go(c);
      total = (total > kCeil - s) ? kCeil : total + s;
    }
    return sz[e] = total;
  };
  return root < 0 ? 0 : go(root);
}

Tree unfold(const TreeDag& d, unsigned long long guard) {
  if (d.root < 0) throw std::invalid_argument("unfold: empty dag");
  if (d.unfold_size() > guard)
    throw std::length_error("unfold: size limit exceeded");
  Tree t;
  t.signature = d.signature;
  std::function<void(int, int)> walk = [&](int e, int parent) {
    int id = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    t.nodes[id].parent = parent;
    t.nodes[id].labels = d.entries[e].labels;
    if (parent != -1) t.nodes[parent].children.push_back(id);
    for (int c : d.entries[e].children) walk(c, id);
  };
  walk(d.root, -1);
  return t;
}

std::string render_dag(const TreeDag& d) {
  std::ostringstream out;
  for (size_t k = 0; k < d.entries.size(); ++k) {
    out << "#" << k << " = (";
    bool first = true;
    for (int lab : d.entries[k].labels) {
      if (!first) out << ' ';
      out << d.signature[lab];
      first = false;
    }
    out << " ;";
    for (int c : d.entries[k].children) out << " #" << c;
    out << ")\n";
  }
  out << "root #" << d.root << "\n";
  return out.str();
}

TreeDag parse_dag(std::string_view text, const std::vector<std::string>* signature) {
  TreeDag d;
  std::set<std::string> seen;
  struct RawEntry {
    std::vector<std::string> labels;
    std::vector<int> children;
  };
  std::map<int, RawEntry> raw;
  std::optional<int> root;
  std::istringstream in{std::string(text)};
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok == "root") {
      std::string r;
      ls >> r;
      if (r.size() < 2 || r[0] != '#')
        throw TreeParseError("bad root reference", lineno);
      root = std::stoi(r.substr(1));
      continue;
    }
    if (tok.empty() || tok[0] != '#')
      throw TreeParseError("expected '#k = (...)' line", lineno);
    int id = std::stoi(tok.substr(1));
    std::string eq;
    ls >> eq;
    if (eq != "=") throw TreeParseError("expected '='", lineno);
    std::string rest;
    std::getline(ls, rest);
    // strip parens
    size_t open = rest.find('(');
    size_t close = rest.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
      throw TreeParseError("expected parenthesized entry", lineno);
    std::istringstream body(rest.substr(open + 1, close - open - 1));
    RawEntry e;
    bool after_semi = false;
    while (body >> tok) {
      if (tok == ";") { after_semi = true; continue; }
      if (!after_semi) {
        if (signature &&
            std::find(signature->begin(), signature->end(), tok) == signature->end())
          throw TreeParseError("label '" + tok + "' not in signature", lineno);
        seen.insert(tok);
        e.labels.push_back(tok);
      } else {
        if (tok[0] != '#') throw TreeParseError("expected '#k' child", lineno);
        e.children.push_back(std::stoi(tok.substr(1)));
      }
    }
    raw[id] = std::move(e);
  }
  if (!root) throw TreeParseError("missing root line", lineno);
  if (signature) {
    d.signature = *signature;
    std::sort(d.signature.begin(), d.signature.end());
    d.signature.erase(std::unique(d.signature.begin(), d.signature.end()),
                      d.signature.end());
  } else {
    d.signature.assign(seen.begin(), seen.end());
  }
  int max_id = raw.empty() ? -1 : raw.rbegin()->first;
  d.entries.resize(max_id + 1);
  for (auto& [id, e] : raw) {
    TreeDag::Entry entry;
    for (const auto& lab : e.labels) {
      auto it = std::lower_bound(d.signature.begin(), d.signature.end(), lab);
      entry.labels.push_back(static_cast<int>(it - d.signature.begin()));
    }
    std::sort(entry.labels.begin(), entry.labels.end());
    entry.labels.erase(std::unique(entry.labels.begin(), entry.labels.end()),
                       entry.labels.end());
    for (int c : e.children) {
      if (c < 0 || c > max_id || !raw.count(c))
        throw TreeParseError("dangling child reference #" + std::to_string(c), 0);
      entry.children.push_back(c);
    }
    d.entries[id] = std::move(entry);
  }
  if (*root < 0 || *root > max_id || !raw.count(*root))
    throw TreeParseError("dangling root reference", 0);
  d.root = *root;
  return d;
}

std::strong_ordering subtree_order(const Tree& a, const Tree& b) {
  if (a.size() != b.size()) return a.size() <=> b.size();
  std::string sa = render_tree(a);
  std::string sb = render_tree(b);
  if (sa.size() != sb.size()) return sa.size() <=> sb.size();
  int c = sa.compare(sb);
  return c < 0 ? std::strong_ordering::less
       : c > 0 ? std::strong_ordering::greater
               : std::strong_ordering::equal;
}

Tree subtree_at(const Tree& t, const NodePath& p) {
  int root = t.node_at(p);
  Tree out;
  out.signature = t.signature;
  std::function<void(int, int)> walk = [&](int n, int parent) {
    int id = static_cast<int>(out.nodes.size());
    out.nodes.emplace_back();
    out.nodes[id].parent = parent;
    out.nodes[id].labels = t.nodes[n].labels;
    if (parent != -1) out.nodes[parent].children.push_back(id);
    for (int c : t.nodes[n].children) walk(c, id);
  };
  walk(root, -1);
  return out;
}

std::string tree_to_dot(const Tree& t) {
  std::ostringstream out;
  out << "digraph tree {\n  node [shape=box];\n";
  for (size_t i = 0; i < t.nodes.size(); ++i) {
    out << "  n" << i << " [label=\"";
    bool first = true;
    for (int lab : t.nodes[i].labels) {
      if (!first) out << ' ';
      out << t.signature[lab];
      first = false;
    }
    if (first) out << "{}";
    out << "\"];\n";
  }
  for (size_t i = 0; i < t.nodes.size(); ++i)
    for (int c : t.nodes[i].children) out << "  n" << i << " -> n" << c << ";\n";
  out << "}\n";
  return out.str();
}

}  // namespace fo2tree
