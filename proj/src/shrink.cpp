#include "fo2tree/shrink.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <sstream>

namespace fo2tree {

namespace {

bool path_is_prefix(const NodePath& a, const NodePath& b) {  // a prefix of b
  if (a.size() > b.size()) return false;
  return std::equal(a.begin(), a.end(), b.begin());
}

bool path_proper_prefix(const NodePath& a, const NodePath& b) {
  return a.size() < b.size() && path_is_prefix(a, b);
}

void collect_subtree(const Tree& t, int root, std::vector<int>& out) {
  out.push_back(root);
  for (int c : t.nodes[root].children) collect_subtree(t, c, out);
}

// Appends a copy of src's subtree rooted at src_node under parent in dst.
int append_copy(const Tree& src, int src_node, Tree& dst, int parent) {
  int id = static_cast<int>(dst.nodes.size());
  dst.nodes.emplace_back();
  dst.nodes[id].parent = parent;
  dst.nodes[id].labels = src.nodes[src_node].labels;
  if (parent != -1) dst.nodes[parent].children.push_back(id);
  for (int c : src.nodes[src_node].children) append_copy(src, c, dst, id);
  return id;
}

}  // namespace

std::pair<Tree, CopyMap> overwrite(const Tree& t, const NodePath& n0,
                                   const NodePath& n1) {
  t.node_at(n0);
  t.node_at(n1);
  if (path_proper_prefix(n1, n0))
    throw std::invalid_argument("overwrite: replacement node is an ancestor of the target");

  Tree out;
  out.signature = t.signature;
  std::function<void(int, const NodePath&, int)> build =
      [&](int src, const NodePath& src_path, int parent) {
        if (src_path == n0) {
          append_copy(t, t.node_at(n1), out, parent);
          return;
        }
        int id = static_cast<int>(out.nodes.size());
        out.nodes.emplace_back();
        out.nodes[id].parent = parent;
        out.nodes[id].labels = t.nodes[src].labels;
        if (parent != -1) out.nodes[parent].children.push_back(id);
        NodePath child_path = src_path;
        for (size_t i = 0; i < t.nodes[src].children.size(); ++i) {
          child_path.push_back(static_cast<int>(i));
          build(t.nodes[src].children[i], child_path, id);
          child_path.pop_back();
        }
      };
  if (n0.empty()) {
    append_copy(t, t.node_at(n1), out, -1);
  } else {
    build(0, {}, -1);
  }

  CopyMap map;
  bool n1_inside_n0 = path_is_prefix(n0, n1);
  for (size_t node = 0; node < t.size(); ++node) {
    NodePath p = t.path_of(static_cast<int>(node));
    std::vector<NodePath> images;
    bool inside_n0 = path_is_prefix(n0, p);
    bool inside_n1 = path_is_prefix(n1, p);
    if (inside_n1) {
      NodePath moved = n0;
      moved.insert(moved.end(), p.begin() + n1.size(), p.end());
      if (!n1_inside_n0 && !inside_n0) images.push_back(p);  // original survives
      images.push_back(std::move(moved));
    } else if (!inside_n0) {
      images.push_back(p);
    }
    map.images[p] = std::move(images);
  }
  return {std::move(out), std::move(map)};
}

std::vector<int> equiv_full(const Tree& t, const ClosureBasis& basis) {
  TypeSets ts = type_sets(t, basis);
  std::map<std::tuple<int, std::set<int>, std::set<int>, std::set<int>>, int> classes;
  std::vector<int> out(t.size(), -1);
  for (size_t u = 0; u < t.size(); ++u) {
    auto key = std::make_tuple(ts.type_id[u], ts.desc_types[u], ts.anc_types[u],
                               ts.incomp_types[u]);
    auto [it, fresh] = classes.try_emplace(key, static_cast<int>(classes.size()));
    (void)fresh;
    out[u] = it->second;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vertical collapse

namespace {

std::vector<std::vector<int>> root_to_leaf_node_paths(const Tree& t) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::function<void(int)> walk = [&](int u) {
    cur.push_back(u);
    if (t.nodes[u].children.empty()) out.push_back(cur);
    for (int c : t.nodes[u].children) walk(c);
    cur.pop_back();
  };
  if (t.size()) walk(0);
  // Deepest first, then DFS discovery order.
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  return out;
}

void verify_copy_map_types(const Tree& before, const Tree& after,
                           const ClosureBasis& basis, const CopyMap& map,
                           const char* what) {
  TypeTable tb = compute_type_table(before, basis);
  TypeTable ta = compute_type_table(after, basis);
  for (const auto& [src, images] : map.images) {
    int src_node = before.node_at(src);
    for (const auto& img : images) {
      int dst_node = after.node_at(img);
      for (size_t e = 0; e < basis.size(); ++e) {
        if (tb.bit(static_cast<int>(e), src_node) !=
            ta.bit(static_cast<int>(e), dst_node)) {
          std::ostringstream msg;
          msg << what << ": phi-type not preserved at " << path_to_string(src)
              << " -> " << path_to_string(img) << " (entry "
              << render(basis.entries[e]) << ")";
          throw std::logic_error(msg.str());
        }
      }
    }
  }
}

}  // namespace

Tree collapse_vertical(const Tree& t, const ClosureBasis& basis,
                       const ShrinkOptions& opts) {
  Tree cur = t;
  int steps = 0;
  while (true) {
    std::vector<int> cls = equiv_full(cur, basis);
    std::vector<int> chosen;
    if (opts.schema) chosen = state_abstraction(cur, *opts.schema);
    auto key = [&](int u) {
      return std::make_pair(cls[u], opts.schema ? chosen[u] : 0);
    };

    bool changed = false;
    for (const auto& path : root_to_leaf_node_paths(cur)) {
      if (static_cast<int>(path.size()) <= opts.depth_target) continue;
      for (size_t i = 0; i < path.size() && !changed; ++i) {
        for (size_t j = i + 1; j < path.size(); ++j) {
          if (key(path[i]) != key(path[j])) continue;
          auto [next, map] =
              overwrite(cur, cur.path_of(path[i]), cur.path_of(path[j]));
          if (opts.verify)
            verify_copy_map_types(cur, next, basis, map, "collapse_vertical");
          cur = std::move(next);
          changed = true;
          ++steps;
          break;
        }
      }
      if (changed) break;
    }
    if (!changed) break;
  }
  if (opts.steps_out) *opts.steps_out = steps;
  return cur;
}

// ---------------------------------------------------------------------------
// Horizontal collapse

Tree collapse_horizontal(const Tree& t, const ClosureBasis& basis,
                         const ShrinkOptions& opts) {
  Tree cur = t;
  int steps = 0;
  while (true) {
    TypeTable table = compute_type_table(cur, basis);
    std::map<TypeBits, int> intern;
    std::vector<int> tid(cur.size());
    for (size_t u = 0; u < cur.size(); ++u) {
      TypeBits b = table.type_of(static_cast<int>(u)).bits;
      auto [it, fresh] = intern.try_emplace(b, static_cast<int>(intern.size()));
      (void)fresh;
      tid[u] = it->second;
    }

    bool changed = false;
    for (size_t parent = 0; parent < cur.size() && !changed; ++parent) {
      const auto& ch = cur.nodes[parent].children;
      if (static_cast<int>(ch.size()) <= opts.branching_target) continue;
      if (ch.size() < 2) continue;

      // Per-child equivalence key: left / right sibling types, types of
      // descendants of left / right siblings, own type, adjacent types.
      struct Key {
        std::set<int> left, right, left_desc, right_desc;
        int own, prev, next;
        bool operator==(const Key& o) const {
          return left == o.left && right == o.right && left_desc == o.left_desc &&
                 right_desc == o.right_desc && own == o.own && prev == o.prev &&
                 next == o.next;
        }
      };
      std::vector<Key> keys(ch.size());
      std::vector<std::vector<int>> subtree_nodes(ch.size());
      for (size_t k = 0; k < ch.size(); ++k)
        collect_subtree(cur, ch[k], subtree_nodes[k]);
      for (size_t k = 0; k < ch.size(); ++k) {
        Key& key = keys[k];
        key.own = tid[ch[k]];
        key.prev = k > 0 ? tid[ch[k - 1]] : -1;
        key.next = k + 1 < ch.size() ? tid[ch[k + 1]] : -1;
        for (size_t l = 0; l < ch.size(); ++l) {
          if (l == k) continue;
          auto& sibs = l < k ? key.left : key.right;
          auto& descs = l < k ? key.left_desc : key.right_desc;
          sibs.insert(tid[ch[l]]);
          for (size_t m = 1; m < subtree_nodes[l].size(); ++m)
            descs.insert(tid[subtree_nodes[l][m]]);
        }
      }

      for (size_t k = 0; k < ch.size() && !changed; ++k) {
        for (size_t k2 = k + 1; k2 < ch.size(); ++k2) {
          if (!(keys[k] == keys[k2])) continue;
          // Remove children k+1 .. k2 with their subtrees.
          std::set<int> removed_roots(ch.begin() + k + 1, ch.begin() + k2 + 1);
          Tree next;
          next.signature = cur.signature;
          CopyMap map;
          std::function<int(int, int, NodePath&)> build =
              [&](int src, int parent_id, NodePath& out_path) -> int {
            int id = static_cast<int>(next.nodes.size());
            next.nodes.emplace_back();
            next.nodes[id].parent = parent_id;
            next.nodes[id].labels = cur.nodes[src].labels;
            if (parent_id != -1) next.nodes[parent_id].children.push_back(id);
            map.images[cur.path_of(src)] = {out_path};
            int kept = 0;
            for (int c : cur.nodes[src].children) {
              if (src == static_cast<int>(parent) && removed_roots.count(c)) continue;
              out_path.push_back(kept++);
              build(c, id, out_path);
              out_path.pop_back();
            }
            return id;
          };
          NodePath root_path;
          build(0, -1, root_path);
          for (size_t u = 0; u < cur.size(); ++u) {
            NodePath p = cur.path_of(static_cast<int>(u));
            if (!map.images.count(p)) map.images[p] = {};
          }
          if (opts.verify)
            verify_copy_map_types(cur, next, basis, map, "collapse_horizontal");
          cur = std::move(next);
          changed = true;
          ++steps;
          break;
        }
      }
    }
    if (!changed) break;
  }
  if (opts.steps_out) *opts.steps_out = steps;
  return cur;
}

// ---------------------------------------------------------------------------
// Stutter collapse

namespace {

// Vertical type: the DiaDown / DiaUp subformulas true at the node plus its
// label set.
std::vector<std::string> vertical_types(const Tree& t, const ModalTable& table) {
  std::vector<std::string> out(t.size());
  for (size_t u = 0; u < t.size(); ++u) {
    std::string key;
    for (int lab : t.nodes[u].labels) key += std::to_string(lab) + ",";
    key += "|";
    for (size_t i = 0; i < table.subformulas.size(); ++i) {
      ModalKind k = table.subformulas[i]->kind;
      if (k == ModalKind::DiaDown || k == ModalKind::DiaUp)
        key += table.bits[i][u] ? '1' : '0';
    }
    out[u] = std::move(key);
  }
  return out;
}

void verify_modal_copy_map(const Tree& before, const Tree& after,
                           const ModalFormula& m, const CopyMap& map) {
  ModalTable tb = eval_modal_table(before, m);
  ModalTable ta = eval_modal_table(after, m);
  for (const auto& [src, images] : map.images) {
    int u = before.node_at(src);
    for (const auto& img : images) {
      int v = after.node_at(img);
      for (size_t i = 0; i < tb.subformulas.size(); ++i)
        if (tb.bits[i][u] != ta.bits[i][v])
          throw std::logic_error("collapse_stutter: subformula value not preserved");
    }
  }
}

}  // namespace

Tree collapse_stutter(const Tree& t, const ModalFormula& m,
                      const ShrinkOptions& opts) {
  if (!is_tl_tree(m))
    throw std::invalid_argument("collapse_stutter: child/parent step modality outside TL_tree");
  Tree cur = t;
  int steps = 0;
  while (true) {
    ModalTable table = eval_modal_table(cur, m);
    std::vector<std::string> vtype = vertical_types(cur, table);

    bool changed = false;
    for (const auto& path : root_to_leaf_node_paths(cur)) {
      size_t i = 0;
      while (i < path.size()) {
        size_t j = i;
        while (j + 1 < path.size() && vtype[path[j + 1]] == vtype[path[i]]) ++j;
        if (j > i) {
          auto [next, map] =
              overwrite(cur, cur.path_of(path[i]), cur.path_of(path[j]));
          if (opts.verify) verify_modal_copy_map(cur, next, m, map);
          cur = std::move(next);
          changed = true;
          ++steps;
          break;
        }
        i = j + 1;
      }
      if (changed) break;
    }
    if (!changed) break;
  }
  if (opts.steps_out) *opts.steps_out = steps;
  return cur;
}

// ---------------------------------------------------------------------------
// Promotion surgery

Tree promote_shrink(const Tree& t, const FoFormula& f, const ShrinkOptions& opts) {
  if (!is_uar(t))
    throw std::invalid_argument("promote_shrink: tree violates the UAR");
  if (!vocabulary_of(f).count(VocabTag::AncOf))
    throw std::invalid_argument("promote_shrink: formula outside V_ancOf");
  ClosureBasis basis = one_var_closure(f);
  if (is_sentence(f) && !eval_fo2(t, f))
    throw std::invalid_argument("promote_shrink: tree does not satisfy the formula");

  Tree cur = t;
  int steps = 0;
  while (true) {
    TypeTable table = compute_type_table(cur, basis);
    bool changed = false;
    for (const auto& path : root_to_leaf_node_paths(cur)) {
      // (b, phi)-interval endpoints: per symbol, maximal runs of constant
      // full type over consecutive b-positions.
      std::set<int> keep;  // indices into path
      for (int sym = 0; sym < static_cast<int>(cur.signature.size()); ++sym) {
        std::vector<int> positions;
        for (size_t i = 0; i < path.size(); ++i)
          if (cur.nodes[path[i]].labels.size() == 1 &&
              cur.nodes[path[i]].labels[0] == sym)
            positions.push_back(static_cast<int>(i));
        size_t i = 0;
        while (i < positions.size()) {
          size_t j = i;
          auto same = [&](int a, int b) {
            for (size_t e = 0; e < basis.size(); ++e)
              if (table.bit(static_cast<int>(e), path[a]) !=
                  table.bit(static_cast<int>(e), path[b]))
                return false;
            return true;
          };
          while (j + 1 < positions.size() && same(positions[j + 1], positions[i])) ++j;
          keep.insert(positions[i]);
          keep.insert(positions[j]);
          i = j + 1;
        }
      }
      if (keep.size() == path.size()) continue;

      // Remove interior path nodes; reattach off-path children to the lowest
      // surviving ancestor, ordered by original preorder.
      std::set<int> removed;
      for (size_t i = 0; i < path.size(); ++i)
        if (!keep.count(static_cast<int>(i))) removed.insert(path[i]);
      assert(!removed.count(0));

      Tree next;
      next.signature = cur.signature;
      std::map<NodePath, std::vector<NodePath>> images;
      std::function<void(int, int)> build = [&](int src, int parent_id) {
        int id = static_cast<int>(next.nodes.size());
        next.nodes.emplace_back();
        next.nodes[id].parent = parent_id;
        next.nodes[id].labels = cur.nodes[src].labels;
        if (parent_id != -1) next.nodes[parent_id].children.push_back(id);
        // Children in original preorder, hoisting across removed path nodes.
        std::vector<int> kids;
        std::function<void(int)> gather = [&](int node) {
          for (int c : cur.nodes[node].children) {
            if (removed.count(c))
              gather(c);
            else
              kids.push_back(c);
          }
        };
        gather(src);
        std::sort(kids.begin(), kids.end());
        for (int c : kids) build(c, id);
      };
      build(0, -1);

      if (opts.verify) {
        CopyMap map;
        // Survivors keep their identity; removed nodes have no image.
        std::function<void(int, NodePath)> assign = [&](int nid, NodePath where) {
          map.images[cur.path_of(nid)] = {where};
          std::vector<int> kids;
          std::function<void(int)> gather = [&](int node) {
            for (int c : cur.nodes[node].children) {
              if (removed.count(c))
                gather(c);
              else
                kids.push_back(c);
            }
          };
          gather(nid);
          std::sort(kids.begin(), kids.end());
          for (size_t k = 0; k < kids.size(); ++k) {
            NodePath sub = where;
            sub.push_back(static_cast<int>(k));
            assign(kids[k], sub);
          }
        };
        assign(0, {});
        for (int r : removed) map.images[cur.path_of(r)] = {};
        verify_copy_map_types(cur, next, basis, map, "promote_shrink");
      }
      cur = std::move(next);
      changed = true;
      ++steps;
      break;
    }
    if (!changed) break;
  }
  if (opts.steps_out) *opts.steps_out = steps;
  return cur;
}

// ---------------------------------------------------------------------------
// Update to DAG

namespace {

void insert_with_ancestors(std::set<NodePath>& w, NodePath p) {
  while (true) {
    w.insert(p);
    if (p.empty()) break;
    p.pop_back();
  }
}

}  // namespace

std::set<NodePath> update_witness_set(const Tree& t, const ClosureBasis& basis,
                                      UpdateVariant variant, uint64_t seed) {
  TypeSets ts = type_sets(t, basis, seed);
  TypeTable table = compute_type_table(t, basis);
  (void)table;
  std::set<NodePath> w;
  int n = static_cast<int>(t.size());

  std::map<int, std::vector<int>> by_type;  // type id -> nodes (preorder)
  for (int u = 0; u < n; ++u) by_type[ts.type_id[u]].push_back(u);

  std::vector<int> basics;
  for (auto& [tau, nodes] : by_type) {
    int pick = nodes.front();
    if (variant == UpdateVariant::AncOf) {
      for (int u : nodes)
        if (t.depth_of(u) > t.depth_of(pick)) pick = u;
    }
    basics.push_back(pick);
    insert_with_ancestors(w, t.path_of(pick));
  }

  if (variant == UpdateVariant::NoAncOf) {
    for (int b : basics)
      for (int c : t.nodes[b].children) w.insert(t.path_of(c));
    return w;
  }

  // AncOf: incomparable global witnesses for every node at or above a basic
  // witness, one per existential subformula.
  std::set<int> anchors;
  for (int b : basics) {
    int cur = b;
    while (cur != -1) {
      anchors.insert(cur);
      cur = t.nodes[cur].parent;
    }
  }
  PairEvaluator ev(t, basis);
  for (int m : anchors) {
    for (size_t e = 0; e < basis.size(); ++e) {
      const FoFormula& entry = basis.entries[e];
      if (entry->kind != FoKind::Exists || free_vars(entry).empty()) continue;
      for (int cand = 0; cand < n; ++cand) {
        PairConfig cfg = pair_config(t, m, cand);
        if (cfg != PairConfig::IncompOther && cfg != PairConfig::NextSib &&
            cfg != PairConfig::RightFar && cfg != PairConfig::PrevSib &&
            cfg != PairConfig::LeftFar)
          continue;
        if (ev.eval(entry->lhs, m, cand)) {
          insert_with_ancestors(w, t.path_of(cand));
          break;
        }
      }
    }
  }
  return w;
}

TreeDag update_to_dag(const Tree& t, const FoFormula& phi, UpdateVariant variant,
                      const ShrinkOptions& opts, UpdateStats* stats) {
  if (!is_sentence(phi))
    throw std::invalid_argument("update_to_dag: formula must be a sentence");
  ClosureBasis basis = one_var_closure(phi);
  if (!eval_fo2(t, phi))
    throw std::invalid_argument("update_to_dag: tree does not satisfy the formula");
  if (variant == UpdateVariant::AncOf && !vocabulary_of(phi).count(VocabTag::AncOf))
    throw std::invalid_argument("update_to_dag: AncOf variant needs a V_ancOf formula");
  if (variant == UpdateVariant::NoAncOf && !vocabulary_of(phi).count(VocabTag::NoAncOf))
    throw std::invalid_argument("update_to_dag: NoAncOf variant needs a V_noAncOf formula");

  std::set<NodePath> w = update_witness_set(t, basis, variant, opts.seed);
  if (stats) stats->witness_set_size = w.size();

  Tree cur = t;
  int steps = 0;
  while (true) {
    TypeSets ts = type_sets(cur, basis, opts.seed);
    std::vector<int> chosen;
    if (opts.schema) chosen = state_abstraction(cur, *opts.schema);
    int n = static_cast<int>(cur.size());

    std::vector<NodePath> paths(n);
    std::vector<char> protected_node(n, 0);
    for (int u = 0; u < n; ++u) {
      paths[u] = cur.path_of(u);
      protected_node[u] = w.count(paths[u]) ? 1 : 0;
    }

    // Subtree precedence keys: (node count, serialization length, bytes).
    std::vector<size_t> sub_count(n, 0);
    std::vector<std::string> sub_text(n);
    for (int u = n - 1; u >= 0; --u) {
      sub_count[u] = 1;
      std::string text = "(";
      bool first = true;
      for (int lab : cur.nodes[u].labels) {
        if (!first) text += ' ';
        text += cur.signature[lab];
        first = false;
      }
      text += " ;";
      for (int c : cur.nodes[u].children) {
        sub_count[u] += sub_count[c];
        text += ' ';
        text += sub_text[c];
      }
      text += ')';
      sub_text[u] = std::move(text);
    }
    auto sub_less = [&](int a, int b) {
      if (sub_count[a] != sub_count[b]) return sub_count[a] < sub_count[b];
      if (sub_text[a].size() != sub_text[b].size())
        return sub_text[a].size() < sub_text[b].size();
      return sub_text[a] < sub_text[b];
    };

    auto qualifies = [&](int node, int other) {
      if (protected_node[node] || protected_node[other]) return false;
      if (ts.type_id[node] != ts.type_id[other]) return false;
      if (opts.schema && chosen[node] != chosen[other]) return false;
      if (variant == UpdateVariant::NoAncOf) {
        int pn = cur.nodes[node].parent, po = cur.nodes[other].parent;
        if (pn == -1 || po == -1) return false;
        if (ts.type_id[pn] != ts.type_id[po]) return false;
      } else {
        if (ts.anc_types[node] != ts.anc_types[other]) return false;
        if (ts.selected_desc_types[node] != ts.selected_desc_types[other]) return false;
      }
      return sub_less(other, node);
    };

    int pick_n = -1, pick_other = -1;
    for (int node = 0; node < n && pick_n < 0; ++node) {
      // Precedence-minimal partner for the first replaceable node.
      for (int other = 0; other < n; ++other) {
        if (other == node || !qualifies(node, other)) continue;
        if (pick_other < 0 || sub_less(other, pick_other)) pick_other = other;
        pick_n = node;
      }
    }
    if (pick_n < 0) break;

    auto [next, map] = overwrite(cur, paths[pick_n], paths[pick_other]);
    if (subtree_order(next, cur) != std::strong_ordering::less)
      throw std::logic_error("update_to_dag: step did not decrease the tree order");
    if (opts.verify || cur.size() <= 60)
      verify_copy_map_types(cur, next, basis, map, "update_to_dag");
    cur = std::move(next);
    ++steps;
  }

  if (stats) stats->steps = steps;
  TreeDag d = to_dag(cur);
  if (!eval_fo2_dag(d, phi))
    throw std::logic_error("update_to_dag: result no longer satisfies the formula");
  if (opts.schema) {
    AutomatonRun run = run_automaton(cur, *opts.schema);
    if (!run.accepted)
      throw std::logic_error("update_to_dag: result rejected by the schema");
  }
  return d;
}

}  // namespace fo2tree
