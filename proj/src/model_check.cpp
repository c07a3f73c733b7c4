#include "fo2tree/model_check.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_map>

namespace fo2tree {

PhiType TypeTable::type_of(int node) const {
  PhiType t;
  t.bits.reserve(bits.size());
  for (const auto& row : bits) t.bits.push_back(row[node]);
  return t;
}

// ---------------------------------------------------------------------------
// Structural relations

namespace {

struct TreeRel {
  const Tree* t;
  std::vector<int> pre, post, parent, sib_index;

  explicit TreeRel(const Tree& tree) : t(&tree) {
    int n = static_cast<int>(tree.size());
    pre.assign(n, 0);
    post.assign(n, 0);
    parent.assign(n, -1);
    sib_index.assign(n, 0);
    int clock = 0;
    std::function<void(int)> dfs = [&](int u) {
      pre[u] = clock++;
      const auto& ch = tree.nodes[u].children;
      for (size_t i = 0; i < ch.size(); ++i) {
        parent[ch[i]] = u;
        sib_index[ch[i]] = static_cast<int>(i);
        dfs(ch[i]);
      }
      post[u] = clock++;
    };
    if (n > 0) dfs(0);
  }

  bool anc(int u, int v) const {  // proper
    return u != v && pre[u] < pre[v] && post[v] < post[u];
  }

  PairConfig config(int u, int v) const {
    if (u == v) return PairConfig::Equal;
    if (parent[u] == v) return PairConfig::Parent;
    if (anc(v, u)) return PairConfig::AncestorFar;
    if (parent[v] == u) return PairConfig::Child;
    if (anc(u, v)) return PairConfig::DescendantFar;
    if (parent[u] != -1 && parent[u] == parent[v]) {
      int du = sib_index[u], dv = sib_index[v];
      if (dv == du + 1) return PairConfig::NextSib;
      if (dv > du) return PairConfig::RightFar;
      if (dv == du - 1) return PairConfig::PrevSib;
      return PairConfig::LeftFar;
    }
    return PairConfig::IncompOther;
  }
};

}  // namespace

PairConfig pair_config(const Tree& t, int u, int v) {
  return TreeRel(t).config(u, v);
}

// ---------------------------------------------------------------------------
// Compiled basis entries
//
// Every subformula with two free variables is a boolean combination of
// two-variable atoms and one-variable subformulas, so a quantified basis
// entry compiles to an instruction tree whose leaves are either atoms decided
// by the pair configuration or basis lookups on the x / y side.

namespace {

struct Body {
  enum Op : uint8_t {
    CTrue,
    CFalse,
    EqAtom,     // x = y
    BinAtom,    // rel with args_xy telling whether written (x, y)
    BasisX,
    BasisY,
    BasisG,     // closed subformula
    BNot,
    BAnd,
    BOr,
    BImplies,
    BIff,
  };
  Op op;
  BinRel rel = BinRel::ParentOf;
  bool args_xy = true;
  int basis_index = -1;
  int a = -1, b = -1;  // children, indices into the pool
};

struct CompiledEntry {
  enum Kind : uint8_t { Pred, ConstTrue, ConstFalse, Bool, Quant } kind;
  // Pred
  std::string pred;
  // Bool
  FoKind bool_op = FoKind::And;
  int op_a = -1, op_b = -1;  // basis indices
  // Quant
  bool exists = true;
  bool closed = false;  // witness feeds the x slot when the entry is closed
  int body_root = -1;
  std::vector<Body> pool;
};

bool bin_atom_truth(BinRel rel, bool args_xy, PairConfig c) {
  auto flip = [](PairConfig k) {
    switch (k) {
      case PairConfig::Parent: return PairConfig::Child;
      case PairConfig::Child: return PairConfig::Parent;
      case PairConfig::AncestorFar: return PairConfig::DescendantFar;
      case PairConfig::DescendantFar: return PairConfig::AncestorFar;
      case PairConfig::NextSib: return PairConfig::PrevSib;
      case PairConfig::PrevSib: return PairConfig::NextSib;
      case PairConfig::RightFar: return PairConfig::LeftFar;
      case PairConfig::LeftFar: return PairConfig::RightFar;
      default: return k;
    }
  };
  // Evaluate the atom rel(x, y); for rel(y, x) flip the configuration.
  PairConfig k = args_xy ? c : flip(c);
  switch (rel) {
    case BinRel::ParentOf:
      return k == PairConfig::Child;
    case BinRel::AncOf:
      return k == PairConfig::Child || k == PairConfig::DescendantFar;
    case BinRel::LeftSibOf:
      return k == PairConfig::NextSib;
    case BinRel::LeftOf:
      return k == PairConfig::NextSib || k == PairConfig::RightFar;
  }
  return false;
}

int compile_body(const FoFormula& f, const ClosureBasis& basis,
                 std::vector<Body>& pool) {
  std::set<Var> fv = free_vars(f);
  if (fv.size() <= 1) {
    // Closed quantified parts always bind x canonically, so a plain variable
    // swap does not reach the basis form; normalize properly.
    Body b;
    b.op = fv.empty() ? Body::BasisG
         : *fv.begin() == Var::X ? Body::BasisX
                                 : Body::BasisY;
    b.basis_index = basis.index_of(canon_one_var(f));
    if (b.basis_index < 0)
      throw std::logic_error("compile_body: subformula missing from basis");
    pool.push_back(b);
    return static_cast<int>(pool.size() - 1);
  }
  switch (f->kind) {
    case FoKind::Eq: {
      Body b;
      b.op = Body::EqAtom;
      pool.push_back(b);
      return static_cast<int>(pool.size() - 1);
    }
    case FoKind::Bin: {
      Body b;
      b.op = Body::BinAtom;
      b.rel = f->rel;
      b.args_xy = f->v1 == Var::X;
      pool.push_back(b);
      return static_cast<int>(pool.size() - 1);
    }
    case FoKind::Not: {
      int a = compile_body(f->lhs, basis, pool);
      Body b;
      b.op = Body::BNot;
      b.a = a;
      pool.push_back(b);
      return static_cast<int>(pool.size() - 1);
    }
    case FoKind::And:
    case FoKind::Or:
    case FoKind::Implies:
    case FoKind::Iff: {
      int a = compile_body(f->lhs, basis, pool);
      int b2 = compile_body(f->rhs, basis, pool);
      Body b;
      b.op = f->kind == FoKind::And   ? Body::BAnd
           : f->kind == FoKind::Or    ? Body::BOr
           : f->kind == FoKind::Implies ? Body::BImplies
                                        : Body::BIff;
      b.a = a;
      b.b = b2;
      pool.push_back(b);
      return static_cast<int>(pool.size() - 1);
    }
    default:
      throw std::logic_error("compile_body: quantifier with two free variables");
  }
}

// Bit access used by both evaluators.
struct BitsRef {
  const char* data = nullptr;
  size_t len = 0;
  bool get(int i) const {
    assert(data && static_cast<size_t>(i) < len);
    return data[i] != 0 && data[i] != '0';
  }
};

bool eval_body(const std::vector<Body>& pool, int idx, const BitsRef& xbits,
               const BitsRef& ybits, PairConfig cfg) {
  const Body& b = pool[idx];
  switch (b.op) {
    case Body::CTrue: return true;
    case Body::CFalse: return false;
    case Body::EqAtom: return cfg == PairConfig::Equal;
    case Body::BinAtom: return bin_atom_truth(b.rel, b.args_xy, cfg);
    case Body::BasisX: return xbits.get(b.basis_index);
    case Body::BasisY:
      return cfg == PairConfig::Equal ? xbits.get(b.basis_index)
                                      : ybits.get(b.basis_index);
    case Body::BasisG: return xbits.get(b.basis_index);
    case Body::BNot: return !eval_body(pool, b.a, xbits, ybits, cfg);
    case Body::BAnd:
      return eval_body(pool, b.a, xbits, ybits, cfg) &&
             eval_body(pool, b.b, xbits, ybits, cfg);
    case Body::BOr:
      return eval_body(pool, b.a, xbits, ybits, cfg) ||
             eval_body(pool, b.b, xbits, ybits, cfg);
    case Body::BImplies:
      return !eval_body(pool, b.a, xbits, ybits, cfg) ||
             eval_body(pool, b.b, xbits, ybits, cfg);
    case Body::BIff:
      return eval_body(pool, b.a, xbits, ybits, cfg) ==
             eval_body(pool, b.b, xbits, ybits, cfg);
  }
  return false;
}

std::vector<CompiledEntry> compile_entries(const ClosureBasis& basis) {
  std::vector<CompiledEntry> out;
  out.reserve(basis.size());
  for (const auto& e : basis.entries) {
    CompiledEntry c{};
    switch (e->kind) {
      case FoKind::Pred:
        c.kind = CompiledEntry::Pred;
        c.pred = e->pred;
        break;
      case FoKind::Eq:
        c.kind = e->v1 == e->v2 ? CompiledEntry::ConstTrue : CompiledEntry::Bool;
        if (c.kind != CompiledEntry::ConstTrue)
          throw std::logic_error("one-variable equality with two variables");
        break;
      case FoKind::Bin:
        if (e->v1 != e->v2)
          throw std::logic_error("one-variable binary atom with two variables");
        c.kind = CompiledEntry::ConstFalse;  // the axis relations are irreflexive
        break;
      case FoKind::Not:
        c.kind = CompiledEntry::Bool;
        c.bool_op = FoKind::Not;
        c.op_a = basis.index_of(e->lhs);
        break;
      case FoKind::And:
      case FoKind::Or:
      case FoKind::Implies:
      case FoKind::Iff:
        c.kind = CompiledEntry::Bool;
        c.bool_op = e->kind;
        c.op_a = basis.index_of(e->lhs);
        c.op_b = basis.index_of(e->rhs);
        break;
      case FoKind::Exists:
      case FoKind::Forall: {
        c.kind = CompiledEntry::Quant;
        c.exists = e->kind == FoKind::Exists;
        c.closed = free_vars(e).empty();
        c.body_root = compile_body(e->lhs, basis, c.pool);
        break;
      }
    }
    if (c.kind == CompiledEntry::Bool &&
        (c.op_a < 0 || (e->rhs && c.op_b < 0)))
      throw std::logic_error("boolean entry operand missing from basis");
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tree evaluation

namespace {

std::vector<std::vector<char>> type_table_bits(const Tree& t,
                                               const ClosureBasis& basis,
                                               const std::vector<CompiledEntry>& comp,
                                               const TreeRel& rel) {
  int n = static_cast<int>(t.size());
  std::vector<std::vector<char>> bits(basis.size(), std::vector<char>(n, 0));
  std::vector<std::string> node_bits(n);  // growing bit prefix per node

  for (size_t i = 0; i < basis.size(); ++i) {
    const CompiledEntry& c = comp[i];
    switch (c.kind) {
      case CompiledEntry::Pred: {
        int p = t.pred_index(c.pred);
        for (int u = 0; u < n; ++u)
          bits[i][u] = (p >= 0 && t.has_label(u, p)) ? 1 : 0;
        break;
      }
      case CompiledEntry::ConstTrue:
        for (int u = 0; u < n; ++u) bits[i][u] = 1;
        break;
      case CompiledEntry::ConstFalse:
        break;
      case CompiledEntry::Bool: {
        for (int u = 0; u < n; ++u) {
          bool a = bits[c.op_a][u];
          bool value = false;
          switch (c.bool_op) {
            case FoKind::Not: value = !a; break;
            case FoKind::And: value = a && bits[c.op_b][u]; break;
            case FoKind::Or: value = a || bits[c.op_b][u]; break;
            case FoKind::Implies: value = !a || bits[c.op_b][u]; break;
            case FoKind::Iff: value = a == static_cast<bool>(bits[c.op_b][u]); break;
            default: break;
          }
          bits[i][u] = value ? 1 : 0;
        }
        break;
      }
      case CompiledEntry::Quant: {
        if (c.closed) {
          bool value = !c.exists;
          for (int w = 0; w < n && value != c.exists; ++w) {
            BitsRef wb{node_bits[w].data(), node_bits[w].size()};
            bool r = eval_body(c.pool, c.body_root, wb, wb, PairConfig::Equal);
            if (c.exists ? r : !r) value = c.exists;
          }
          for (int u = 0; u < n; ++u) bits[i][u] = value ? 1 : 0;
        } else {
          for (int u = 0; u < n; ++u) {
            BitsRef ub{node_bits[u].data(), node_bits[u].size()};
            bool value = !c.exists;
            for (int v = 0; v < n && value != c.exists; ++v) {
              BitsRef vb{node_bits[v].data(), node_bits[v].size()};
              bool r = eval_body(c.pool, c.body_root, ub, vb, rel.config(u, v));
              if (c.exists ? r : !r) value = c.exists;
            }
            bits[i][u] = value ? 1 : 0;
          }
        }
        break;
      }
    }
    for (int u = 0; u < n; ++u) node_bits[u].push_back(bits[i][u] ? '1' : '0');
  }
  return bits;
}

}  // namespace

TypeTable compute_type_table(const Tree& t, const ClosureBasis& basis) {
  TreeRel rel(t);
  auto comp = compile_entries(basis);
  TypeTable table;
  table.bits = type_table_bits(t, basis, comp, rel);
  return table;
}

bool eval_fo2(const Tree& t, const FoFormula& f, const Assignment& a) {
  std::set<Var> fv = free_vars(f);
  if (fv.count(Var::X) && !a.x)
    throw std::invalid_argument("eval_fo2: unbound free variable x");
  if (fv.count(Var::Y) && !a.y)
    throw std::invalid_argument("eval_fo2: unbound free variable y");

  ClosureBasis basis = one_var_closure(f);
  TypeTable table = compute_type_table(t, basis);

  if (fv.empty()) {
    int idx = basis.index_of(canon_one_var(f));
    return table.bit(idx, 0);
  }
  if (fv.size() == 1) {
    const NodePath& p = *fv.begin() == Var::X ? *a.x : *a.y;
    int node = t.node_at(p);
    int idx = basis.index_of(canon_one_var(f));
    return table.bit(idx, node);
  }
  // Two free variables: compile f itself as a pair body.
  std::vector<Body> pool;
  int root = compile_body(f, basis, pool);
  int u = t.node_at(*a.x);
  int v = t.node_at(*a.y);
  TreeRel rel(t);
  std::vector<std::string> cols(t.size());
  for (size_t node = 0; node < t.size(); ++node)
    for (size_t i = 0; i < basis.size(); ++i)
      cols[node].push_back(table.bit(static_cast<int>(i), static_cast<int>(node)) ? '1' : '0');
  BitsRef ub{cols[u].data(), cols[u].size()};
  BitsRef vb{cols[v].data(), cols[v].size()};
  return eval_body(pool, root, ub, vb, rel.config(u, v));
}

PhiType phi_type(const Tree& t, const NodePath& n, const ClosureBasis& basis) {
  TypeTable table = compute_type_table(t, basis);
  return table.type_of(t.node_at(n));
}

// ---------------------------------------------------------------------------
// Type set abstractions

TypeSets type_sets(const Tree& t, const ClosureBasis& basis,
                   uint64_t witness_selection) {
  TreeRel rel(t);
  auto comp = compile_entries(basis);
  auto bits = type_table_bits(t, basis, comp, rel);
  int n = static_cast<int>(t.size());

  TypeSets out;
  out.type_id.assign(n, -1);
  out.anc_types.assign(n, {});
  out.desc_types.assign(n, {});
  out.incomp_types.assign(n, {});
  out.selected_desc_types.assign(n, {});

  std::map<TypeBits, int> intern;
  std::vector<std::string> cols(n);
  for (int u = 0; u < n; ++u) {
    TypeBits tb;
    for (size_t i = 0; i < basis.size(); ++i) {
      tb.push_back(bits[i][u]);
      cols[u].push_back(bits[i][u] ? '1' : '0');
    }
    auto [it, fresh] = intern.try_emplace(tb, static_cast<int>(intern.size()));
    if (fresh) out.distinct_types.push_back(PhiType{tb});
    out.type_id[u] = it->second;
  }

  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      if (u == v) continue;
      if (rel.anc(v, u)) out.anc_types[u].insert(out.type_id[v]);
      else if (rel.anc(u, v)) out.desc_types[u].insert(out.type_id[v]);
      else out.incomp_types[u].insert(out.type_id[v]);
    }

  // Selected descendant types: a witness below m serving an ancestor type.
  for (int m = 0; m < n; ++m) {
    for (int tau : out.anc_types[m]) {
      std::string tau_bits;
      for (char b : out.distinct_types[tau].bits) tau_bits.push_back(b ? '1' : '0');
      BitsRef taub{tau_bits.data(), tau_bits.size()};
      for (size_t e = 0; e < basis.size(); ++e) {
        const CompiledEntry& c = comp[e];
        if (c.kind != CompiledEntry::Quant || !c.exists || c.closed) continue;
        std::vector<int> candidates;
        for (int w = 0; w < n; ++w) {
          if (!rel.anc(m, w)) continue;
          BitsRef wb{cols[w].data(), cols[w].size()};
          if (eval_body(c.pool, c.body_root, taub, wb, PairConfig::DescendantFar))
            candidates.push_back(w);
        }
        if (!candidates.empty()) {
          int pick = candidates[witness_selection % candidates.size()];
          out.selected_desc_types[m].insert(out.type_id[pick]);
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Path diagnostics

int interval_profile(const Tree& t, const NodePath& leaf, const FoFormula& psi,
                     const std::string& a) {
  if (!is_uar(t))
    throw std::invalid_argument("interval_profile: tree violates the UAR");
  if (!vocabulary_of(psi).count(VocabTag::AncOf))
    throw std::invalid_argument("interval_profile: formula outside V_ancOf");
  if (free_vars(psi).size() > 1)
    throw std::invalid_argument("interval_profile: formula needs one free variable");

  ClosureBasis basis = one_var_closure(psi);
  TypeTable table = compute_type_table(t, basis);
  int psi_idx = basis.index_of(canon_one_var(psi));

  std::vector<int> path_nodes;
  int cur = 0;
  path_nodes.push_back(cur);
  for (int idx : leaf) {
    cur = t.nodes[cur].children.at(idx);
    path_nodes.push_back(cur);
  }
  if (!t.nodes[cur].children.empty())
    throw std::invalid_argument("interval_profile: path does not end at a leaf");

  int pred = t.pred_index(a);
  int intervals = 0;
  bool prev_in = false;
  for (int node : path_nodes) {
    bool is_a = pred >= 0 && t.has_label(node, pred);
    if (!is_a) continue;  // a-intervals only count a-positions
    bool in = table.bit(psi_idx, node);
    if (in && !prev_in) ++intervals;
    prev_in = in;
  }
  return intervals;
}

std::vector<std::pair<ModalFormula, int>> vertical_type_changes(
    const Tree& t, const NodePath& leaf, const ModalFormula& m) {
  for (const auto& sub : modal_subformulas(m))
    if (sub->kind == ModalKind::NextChild || sub->kind == ModalKind::NextParent)
      throw std::invalid_argument(
          "vertical_type_changes: child/parent step modality outside TL_tree");

  ModalTable table = eval_modal_table(t, m);
  std::vector<int> path_nodes;
  int cur = 0;
  path_nodes.push_back(cur);
  for (int idx : leaf) {
    cur = t.nodes[cur].children.at(idx);
    path_nodes.push_back(cur);
  }

  std::vector<std::pair<ModalFormula, int>> out;
  for (size_t i = 0; i < table.subformulas.size(); ++i) {
    const auto& sub = table.subformulas[i];
    if (sub->kind != ModalKind::DiaDown && sub->kind != ModalKind::DiaUp) continue;
    int changes = 0;
    for (size_t k = 1; k < path_nodes.size(); ++k)
      if (table.bits[i][path_nodes[k]] != table.bits[i][path_nodes[k - 1]]) ++changes;
    out.emplace_back(sub, changes);
  }
  return out;
}

// ---------------------------------------------------------------------------
// DAG evaluation: stratified occurrence classes
//
// A class is a DAG entry together with a summary of everything outside its
// subtree, phrased in the type bits computed so far: the parent's bits, the
// bits of strict ancestors above the parent, sibling bits (adjacent / far,
// both directions) and the bits of incomparable non-siblings. Round i
// refines the classes of round i-1 with bit i. Witness searches enumerate
// the same candidate groups the pair configurations distinguish, so no
// unfolding ever happens.

namespace {

struct DagEnv {
  bool has_parent = false;
  std::string parent;
  std::set<std::string> anc_above;
  std::set<std::string> inc;
  bool has_left = false, has_right = false;
  std::string left_imm, right_imm;
  std::set<std::string> left_far, right_far;

  std::string key() const {
    std::string k;
    auto add_set = [&k](const std::set<std::string>& s) {
      k += '{';
      for (const auto& x : s) {
        k += x;
        k += ',';
      }
      k += '}';
    };
    k += has_parent ? "P" + parent : "-";
    add_set(anc_above);
    add_set(inc);
    k += has_left ? "L" + left_imm : "-";
    add_set(left_far);
    k += has_right ? "R" + right_imm : "-";
    add_set(right_far);
    return k;
  }
};

struct DagCls {
  int entry = -1;
  int prev = -1;
  std::string bits;                       // PT_{<=round}
  std::vector<int> children;              // class ids, same round
  std::set<std::string> realized_strict;  // strict-descendant bit strings
};

struct DagRound {
  std::vector<DagCls> classes;
  std::unordered_map<std::string, int> memo;  // entry|envkey -> class id
};

constexpr size_t kDagClassBudget = 2000000;

class DagEvaluator {
 public:
  DagEvaluator(const TreeDag& dag, const ClosureBasis& basis)
      : d_(dag), basis_(basis), comp_(compile_entries(basis)) {}

  bool sentence_bit(int sentence_index) {
    // Round -1: classes indexed by entry, no bits yet.
    DagRound base;
    base.classes.resize(d_.entries.size());
    for (size_t e = 0; e < d_.entries.size(); ++e) {
      DagCls c;
      c.entry = static_cast<int>(e);
      c.children = d_.entries[e].children;
      if (!d_.entries[e].children.empty()) c.realized_strict.insert("");
      base.classes[e] = std::move(c);
    }
    // realized_strict at round -1 is just nonemptiness of the descendant set;
    // recompute transitively (an entry with children has descendants).
    prev_ = std::move(base);

    int root_class = -1;
    for (round_ = 0; round_ < static_cast<int>(basis_.size()); ++round_) {
      cur_ = DagRound{};
      DagEnv env;
      root_class = build(d_.root, env, round_ == 0 ? d_.root : 0);
      prev_ = std::move(cur_);
    }
    return prev_.classes[root_class].bits[sentence_index] == '1';
  }

 private:
  const TreeDag& d_;
  const ClosureBasis& basis_;
  std::vector<CompiledEntry> comp_;
  DagRound prev_, cur_;
  int round_ = 0;
  size_t total_classes_ = 0;

  bool quant_value(const CompiledEntry& c, const std::string& own,
                   const DagEnv& env, const DagCls& prev_cls) {
    bool value = !c.exists;
    BitsRef xb{own.data(), own.size()};
    auto probe = [&](const std::string& ybits, PairConfig cfg) {
      if (value == c.exists) return;
      BitsRef yb{ybits.data(), ybits.size()};
      bool r = c.closed
                   ? eval_body(c.pool, c.body_root, yb, yb, PairConfig::Equal)
                   : eval_body(c.pool, c.body_root, xb, yb, cfg);
      if (c.exists ? r : !r) value = c.exists;
    };

    probe(own, PairConfig::Equal);
    if (env.has_parent) probe(env.parent, PairConfig::Parent);
    for (const auto& b : env.anc_above) probe(b, PairConfig::AncestorFar);
    for (int ch : prev_cls.children) {
      probe(prev_.classes[ch].bits, PairConfig::Child);
      for (const auto& b : prev_.classes[ch].realized_strict)
        probe(b, PairConfig::DescendantFar);
    }
    if (env.has_right) probe(env.right_imm, PairConfig::NextSib);
    for (const auto& b : env.right_far) probe(b, PairConfig::RightFar);
    if (env.has_left) probe(env.left_imm, PairConfig::PrevSib);
    for (const auto& b : env.left_far) probe(b, PairConfig::LeftFar);
    for (const auto& b : env.inc) probe(b, PairConfig::IncompOther);
    return value;
  }

  int build(int entry, const DagEnv& env, int prev_class) {
    std::string memo_key = std::to_string(entry) + '|' + env.key();
    auto it = cur_.memo.find(memo_key);
    if (it != cur_.memo.end()) return it->second;
    if (++total_classes_ > kDagClassBudget)
      throw std::length_error("eval_fo2_dag: class budget exceeded");

    const DagCls& prev_cls = prev_.classes[prev_class];
    const std::string& own = prev_cls.bits;  // PT_{<round}

    bool bit = false;
    const CompiledEntry& c = comp_[round_];
    switch (c.kind) {
      case CompiledEntry::Pred: {
        const auto& labs = d_.entries[entry].labels;
        auto sit = std::lower_bound(d_.signature.begin(), d_.signature.end(), c.pred);
        if (sit != d_.signature.end() && *sit == c.pred) {
          int p = static_cast<int>(sit - d_.signature.begin());
          bit = std::binary_search(labs.begin(), labs.end(), p);
        }
        break;
      }
      case CompiledEntry::ConstTrue: bit = true; break;
      case CompiledEntry::ConstFalse: bit = false; break;
      case CompiledEntry::Bool: {
        bool a = own[c.op_a] == '1';
        switch (c.bool_op) {
          case FoKind::Not: bit = !a; break;
          case FoKind::And: bit = a && own[c.op_b] == '1'; break;
          case FoKind::Or: bit = a || own[c.op_b] == '1'; break;
          case FoKind::Implies: bit = !a || own[c.op_b] == '1'; break;
          case FoKind::Iff: bit = a == (own[c.op_b] == '1'); break;
          default: break;
        }
        break;
      }
      case CompiledEntry::Quant:
        bit = quant_value(c, own, env, prev_cls);
        break;
    }

    int id = static_cast<int>(cur_.classes.size());
    cur_.classes.emplace_back();
    cur_.memo[memo_key] = id;
    {
      DagCls& me = cur_.classes[id];
      me.entry = entry;
      me.prev = prev_class;
      me.bits = own + (bit ? '1' : '0');
    }

    // Children: environments phrased in PT_{<round} bits of the previous
    // round, then recurse within this round.
    const auto& child_entries = d_.entries[entry].children;
    std::vector<int> child_ids(child_entries.size(), -1);
    for (size_t j = 0; j < child_entries.size(); ++j) {
      DagEnv ce;
      ce.has_parent = true;
      ce.parent = own;
      ce.anc_above = env.anc_above;
      if (env.has_parent) ce.anc_above.insert(env.parent);

      ce.inc = env.inc;
      if (env.has_left) ce.inc.insert(env.left_imm);
      if (env.has_right) ce.inc.insert(env.right_imm);
      ce.inc.insert(env.left_far.begin(), env.left_far.end());
      ce.inc.insert(env.right_far.begin(), env.right_far.end());
      for (size_t k = 0; k < child_entries.size(); ++k) {
        if (k == j) continue;
        const DagCls& sib = prev_.classes[prev_cls.children[k]];
        ce.inc.insert(sib.realized_strict.begin(), sib.realized_strict.end());
      }

      if (j > 0) {
        ce.has_left = true;
        ce.left_imm = prev_.classes[prev_cls.children[j - 1]].bits;
        for (size_t k = 0; k + 1 < j; ++k)
          ce.left_far.insert(prev_.classes[prev_cls.children[k]].bits);
      }
      if (j + 1 < child_entries.size()) {
        ce.has_right = true;
        ce.right_imm = prev_.classes[prev_cls.children[j + 1]].bits;
        for (size_t k = j + 2; k < child_entries.size(); ++k)
          ce.right_far.insert(prev_.classes[prev_cls.children[k]].bits);
      }

      child_ids[j] = build(child_entries[j], ce, prev_cls.children[j]);
    }

    DagCls& me = cur_.classes[id];
    me.children = child_ids;
    for (int ch : child_ids) {
      const DagCls& cc = cur_.classes[ch];
      me.realized_strict.insert(cc.bits);
      me.realized_strict.insert(cc.realized_strict.begin(),
                                cc.realized_strict.end());
    }
    return id;
  }
};

}  // namespace

bool eval_fo2_dag(const TreeDag& d, const FoFormula& f) {
  if (!is_sentence(f))
    throw std::invalid_argument("eval_fo2_dag: formula must be a sentence");
  ClosureBasis basis = one_var_closure(f);
  int idx = basis.index_of(canon_one_var(f));
  DagEvaluator ev(d, basis);
  return ev.sentence_bit(idx);
}

// ---------------------------------------------------------------------------
// PairEvaluator

struct PairEvaluator::Impl {
  Tree tree;
  ClosureBasis basis;
  TreeRel rel;
  std::vector<std::vector<char>> bits;
  std::vector<std::string> cols;
  mutable std::unordered_map<const FoNode*, std::pair<std::vector<Body>, int>> compiled;

  Impl(const Tree& t, const ClosureBasis& b)
      : tree(t), basis(b), rel(tree) {
    auto comp = compile_entries(basis);
    bits = type_table_bits(tree, basis, comp, rel);
    cols.resize(tree.size());
    for (size_t u = 0; u < tree.size(); ++u)
      for (size_t i = 0; i < basis.size(); ++i)
        cols[u].push_back(bits[i][u] ? '1' : '0');
  }
};

PairEvaluator::PairEvaluator(const Tree& t, const ClosureBasis& basis)
    : impl_(std::make_unique<Impl>(t, basis)) {}
PairEvaluator::~PairEvaluator() = default;
PairEvaluator::PairEvaluator(PairEvaluator&&) noexcept = default;

bool PairEvaluator::eval(const FoFormula& body, int u, int v) const {
  auto it = impl_->compiled.find(body.get());
  if (it == impl_->compiled.end()) {
    std::vector<Body> pool;
    int root = compile_body(body, impl_->basis, pool);
    it = impl_->compiled.emplace(body.get(), std::make_pair(std::move(pool), root)).first;
  }
  BitsRef ub{impl_->cols[u].data(), impl_->cols[u].size()};
  BitsRef vb{impl_->cols[v].data(), impl_->cols[v].size()};
  return eval_body(it->second.first, it->second.second, ub, vb,
                   impl_->rel.config(u, v));
}

bool PairEvaluator::entry_bit(int entry, int node) const {
  return impl_->bits[entry][node] != 0;
}

}  // namespace fo2tree
