#include "fo2tree/solver.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <functional>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "fo2tree/model_check.hpp"

namespace fo2tree {

// ---------------------------------------------------------------------------
// Bounds

Bounds depth_bound(size_t basis_size, const BoundContext& ctx) {
  if (basis_size < 1) throw std::invalid_argument("depth_bound: basis_size must be >= 1");
  constexpr unsigned long long kCeil = 1ULL << 62;
  Bounds b;

  auto generic = [&]() -> std::pair<unsigned long long, bool> {
    if (basis_size >= 31) return {kCeil, true};
    unsigned long long t = 1ULL << basis_size;
    // (3T + 1) * T + 1: three monotone type-set components, each stable
    // interval carrying at most T types.
    if (t > (kCeil - 1) / (3 * t + 1)) return {kCeil, true};
    return {(3 * t + 1) * t + 1, false};
  };

  auto [gdepth, gsat] = generic();
  if (ctx.vocabulary == VocabTag::AncOf && ctx.uar) {
    unsigned long long s = ctx.signature_size;
    unsigned long long f = ctx.formula_size;
    unsigned long long d = 2 * s * f * f + 2;
    b.depth = std::min(d, kCeil);
    b.branching = gdepth;
    b.saturated = gsat || d > kCeil;
  } else {
    b.depth = gdepth;
    b.branching = gdepth;
    b.saturated = gsat;
  }
  return b;
}

// ---------------------------------------------------------------------------
// Modal closure for the search

namespace {

struct ModalClosure {
  struct Item {
    ModalKind kind;
    int a = -1;       // operand index (lhs)
    int b = -1;       // rhs for And / Or
    int atom = -1;    // signature index for atoms
    std::string atom_name;
  };
  std::vector<Item> items;  // children-first
  int top = -1;
  std::vector<std::string> signature;  // sorted label names
  std::vector<int> atom_items;         // item index per signature entry (-1 if unused)
  std::vector<int> next_child, dia_down, next_parent, dia_up;
  std::vector<int> next_right, dia_right, next_left, dia_left;
  // Producer maps: for a bit whose value a child (or right sibling) inherits,
  // the bits of the parent (or previous sibling) that determine it. Demands
  // discovered below a committed node route through these.
  std::vector<std::vector<int>> parent_feed, prev_feed;
  bool has_ns = false;
};

ModalClosure build_closure(const ModalFormula& m,
                           const std::vector<std::string>& extra_signature) {
  ModalClosure cl;
  auto subs = modal_subformulas(m);
  std::unordered_map<const ModalNode*, int> idx;
  std::set<std::string> sig(extra_signature.begin(), extra_signature.end());
  for (const auto& s : subs)
    if (s->kind == ModalKind::Atom) sig.insert(s->atom);
  cl.signature.assign(sig.begin(), sig.end());
  cl.atom_items.assign(cl.signature.size(), -1);
  // Signature symbols the formula never mentions still label witness nodes;
  // give each one a free atom bit.
  std::set<std::string> mentioned;
  for (const auto& s : subs)
    if (s->kind == ModalKind::Atom) mentioned.insert(s->atom);
  for (size_t si = 0; si < cl.signature.size(); ++si) {
    if (mentioned.count(cl.signature[si])) continue;
    ModalClosure::Item it;
    it.kind = ModalKind::Atom;
    it.atom = static_cast<int>(si);
    it.atom_name = cl.signature[si];
    cl.atom_items[si] = static_cast<int>(cl.items.size());
    cl.items.push_back(std::move(it));
  }

  for (const auto& s : subs) {
    ModalClosure::Item it;
    it.kind = s->kind;
    if (s->lhs) it.a = idx.at(s->lhs.get());
    if (s->rhs) it.b = idx.at(s->rhs.get());
    if (s->kind == ModalKind::Atom) {
      it.atom_name = s->atom;
      it.atom = static_cast<int>(
          std::lower_bound(cl.signature.begin(), cl.signature.end(), s->atom) -
          cl.signature.begin());
    }
    int id = static_cast<int>(cl.items.size());
    idx[s.get()] = id;
    cl.items.push_back(std::move(it));
    switch (s->kind) {
      case ModalKind::NextChild: cl.next_child.push_back(id); break;
      case ModalKind::DiaDown: cl.dia_down.push_back(id); break;
      case ModalKind::NextParent: cl.next_parent.push_back(id); break;
      case ModalKind::DiaUp: cl.dia_up.push_back(id); break;
      case ModalKind::NextRight: cl.next_right.push_back(id); break;
      case ModalKind::DiaRight: cl.dia_right.push_back(id); break;
      case ModalKind::NextLeft: cl.next_left.push_back(id); break;
      case ModalKind::DiaLeft: cl.dia_left.push_back(id); break;
      case ModalKind::Atom:
        cl.atom_items[it.atom] = id;
        break;
      default: break;
    }
  }
  cl.top = static_cast<int>(cl.items.size()) - 1;
  cl.has_ns = !cl.next_right.empty() || !cl.dia_right.empty() ||
              !cl.next_left.empty() || !cl.dia_left.empty();
  cl.parent_feed.assign(cl.items.size(), {});
  cl.prev_feed.assign(cl.items.size(), {});
  for (int j : cl.dia_up) {
    cl.parent_feed[j].push_back(cl.items[j].a);
    cl.parent_feed[j].push_back(j);
  }
  for (int j : cl.next_parent) cl.parent_feed[j].push_back(cl.items[j].a);
  for (int i : cl.next_child) cl.parent_feed[cl.items[i].a].push_back(i);
  for (int i : cl.dia_down) {
    cl.parent_feed[cl.items[i].a].push_back(i);
    cl.parent_feed[i].push_back(i);
  }
  for (int j : cl.next_left) cl.prev_feed[j].push_back(cl.items[j].a);
  for (int j : cl.dia_left) {
    cl.prev_feed[j].push_back(cl.items[j].a);
    cl.prev_feed[j].push_back(j);
  }
  for (int i : cl.next_right) cl.prev_feed[cl.items[i].a].push_back(i);
  for (int i : cl.dia_right) {
    cl.prev_feed[cl.items[i].a].push_back(i);
    cl.prev_feed[i].push_back(i);
  }
  return cl;
}

// Clause: at least one (index, value) must hold.
using Clause = std::vector<std::pair<int, bool>>;

struct SearchLimits {
  unsigned long long node_budget;
  std::chrono::steady_clock::time_point deadline;
  unsigned long long created = 0;
  bool clipped = false;

  std::map<unsigned long long, unsigned long long> depth_hist;
  unsigned long long cur_depth = 0;

  bool charge() {
    if (clipped) return false;
    if (getenv("FO2_WSTAT")) depth_hist[cur_depth]++;
    if (++created > node_budget ||
        (created % 512 == 0 && std::chrono::steady_clock::now() > deadline)) {
      clipped = true;
      return false;
    }
    return true;
  }
};

// Enumerates total truth assignments over the closure consistent with the
// boolean structure, the forced bits and the clauses. Deterministic order:
// label atoms first (lexicographic), then remaining bits in closure order.
class TypeGen {
 public:
  // Constraint-driven assignment enumeration: branch only on bits taking part
  // in an unresolved constraint (or listed as always-branch); everything else
  // defaults to false. Claims a candidate never needed stay silent, which
  // keeps the candidate count proportional to the genuinely contested
  // structure instead of the closure size. Assignments carry implication
  // reasons; a conflict reports the externally forced and defaulted bits it
  // depends on, so callers can widen and retry.
  TypeGen(const ModalClosure& cl, std::vector<int8_t> forced,
          std::vector<Clause> clauses, bool labels_true_first,
          std::vector<int> always_branch = {}, std::set<int>* demands = nullptr)
      : cl_(cl), vals_(std::move(forced)), initial_(vals_),
        clauses_(std::move(clauses)), labels_true_first_(labels_true_first),
        always_branch_(std::move(always_branch)), demands_(demands) {}

  // Calls fn for each assignment; fn returning true stops and returns true.
  bool enumerate(SearchLimits& limits, const std::function<bool(const std::string&)>& fn) {
    State st;
    st.v = vals_;
    st.reason.assign(vals_.size(), kUnset);
    for (size_t i = 0; i < vals_.size(); ++i)
      if (vals_[i] != -1) st.reason[i] = kInitial;
    if (!propagate(st)) return false;
    bool found = rec(st, limits, fn);
    if (!found && !limits.clipped && demands_) {
      // Clause literals already falsified at the top of this slot were never
      // available to any candidate; their sources are demands.
      for (const auto& clause : clauses_)
        for (auto [i, want] : clause)
          if (st.v[i] != -1 && st.v[i] != static_cast<int8_t>(want)) report(st, {i});
    }
    return found;
  }

 private:
  static constexpr int kUnset = -1;
  static constexpr int kInitial = -2;
  static constexpr int kBranch = -3;
  static constexpr int kDefault = -4;

  struct State {
    std::vector<int8_t> v;
    std::vector<int> reason;  // kInitial/kBranch/kDefault or implying item id
                              // (clause c encoded as items.size() + c)
  };

  const ModalClosure& cl_;
  std::vector<int8_t> vals_;
  std::vector<int8_t> initial_;
  std::vector<Clause> clauses_;
  bool labels_true_first_;
  std::vector<int> always_branch_;
  std::set<int>* demands_;

  // Walks the implication graph from the conflict participants and records
  // every external or defaulted source as a demand.
  void report(const State& st, std::initializer_list<int> sites) {
    if (!demands_) return;
    std::vector<int> stack(sites);
    std::set<int> seen;
    while (!stack.empty()) {
      int b = stack.back();
      stack.pop_back();
      if (b < 0 || seen.count(b)) continue;
      seen.insert(b);
      int r = st.reason[b];
      if (r == kInitial || r == kDefault) {
        demands_->insert(b);
        continue;
      }
      if (r == kBranch || r == kUnset) continue;
      if (r >= static_cast<int>(cl_.items.size())) {
        const Clause& cls = clauses_[r - cl_.items.size()];
        for (auto [i, want] : cls) stack.push_back(i);
        continue;
      }
      const auto& it = cl_.items[r];
      stack.push_back(r);
      if (it.a >= 0) stack.push_back(it.a);
      if (it.b >= 0) stack.push_back(it.b);
    }
  }

  bool assign(State& st, int i, bool val, int why) {
    if (st.v[i] != -1) {
      if (st.v[i] != static_cast<int8_t>(val)) {
        report(st, {i, why >= 0 ? why : i});
        return false;
      }
      return true;
    }
    st.v[i] = val;
    st.reason[i] = why;
    return true;
  }

  bool propagate(State& st) {
    auto& v = st.v;
    bool changed = true;
    while (changed) {
      changed = false;
      for (size_t i = 0; i < cl_.items.size(); ++i) {
        const auto& it = cl_.items[i];
        int ii = static_cast<int>(i);
        switch (it.kind) {
          case ModalKind::True:
            if (v[i] == 0) { report(st, {ii}); return false; }
            if (v[i] == -1) { v[i] = 1; st.reason[i] = ii; changed = true; }
            break;
          case ModalKind::False:
            if (v[i] == 1) { report(st, {ii}); return false; }
            if (v[i] == -1) { v[i] = 0; st.reason[i] = ii; changed = true; }
            break;
          case ModalKind::Not: {
            int8_t a = v[it.a];
            if (a != -1 && v[i] == -1) {
              v[i] = !a; st.reason[i] = ii; changed = true;
            } else if (v[i] != -1 && a == -1) {
              v[it.a] = !v[i]; st.reason[it.a] = ii; changed = true;
            } else if (a != -1 && v[i] != -1 && v[i] == a) {
              report(st, {ii, it.a});
              return false;
            }
            break;
          }
          case ModalKind::And: {
            int8_t a = v[it.a], b = v[it.b];
            if (v[i] == 1) {
              if (!assign(st, it.a, true, ii) || !assign(st, it.b, true, ii)) return false;
              if (a == -1 || b == -1) changed = true;
            } else if (v[i] == 0) {
              if (a == 1 && b == 1) { report(st, {ii, it.a, it.b}); return false; }
              if (a == 1 && b == -1) { v[it.b] = 0; st.reason[it.b] = ii; changed = true; }
              if (b == 1 && a == -1) { v[it.a] = 0; st.reason[it.a] = ii; changed = true; }
            } else {
              if (a == 1 && b == 1) { v[i] = 1; st.reason[i] = ii; changed = true; }
              else if (a == 0 || b == 0) { v[i] = 0; st.reason[i] = ii; changed = true; }
            }
            break;
          }
          case ModalKind::Or: {
            int8_t a = v[it.a], b = v[it.b];
            if (v[i] == 0) {
              if (!assign(st, it.a, false, ii) || !assign(st, it.b, false, ii)) return false;
              if (a == -1 || b == -1) changed = true;
            } else if (v[i] == 1) {
              if (a == 0 && b == 0) { report(st, {ii, it.a, it.b}); return false; }
              if (a == 0 && b == -1) { v[it.b] = 1; st.reason[it.b] = ii; changed = true; }
              if (b == 0 && a == -1) { v[it.a] = 1; st.reason[it.a] = ii; changed = true; }
            } else {
              if (a == 1 || b == 1) { v[i] = 1; st.reason[i] = ii; changed = true; }
              else if (a == 0 && b == 0) { v[i] = 0; st.reason[i] = ii; changed = true; }
            }
            break;
          }
          default:
            break;  // atoms and modal bits are free
        }
      }
      // Clause unit propagation.
      for (size_t c = 0; c < clauses_.size(); ++c) {
        const Clause& clause = clauses_[c];
        int unassigned = -1;
        bool last_want = false;
        bool satisfied = false;
        int open = 0;
        for (auto [i, want] : clause) {
          if (v[i] == -1) {
            ++open;
            unassigned = i;
            last_want = want;
          } else if (v[i] == static_cast<int8_t>(want)) {
            satisfied = true;
            break;
          }
        }
        if (satisfied) continue;
        if (open == 0) {
          if (demands_) {
            std::vector<int> sites;
            for (auto [i, want] : clause) sites.push_back(i);
            std::set<int> seen;
            for (int i : sites) report(st, {i});
          }
          return false;
        }
        if (open == 1) {
          if (!assign(st, unassigned, last_want,
                      static_cast<int>(cl_.items.size() + c)))
            return false;
          changed = true;
        }
      }
    }
    return true;
  }

  // A bit participating in an unresolved constraint (with the value that
  // resolves it preferred), or -1 when defaults complete the assignment.
  std::pair<int, bool> pick_branch_var(const State& st) const {
    const auto& v = st.v;
    for (size_t i = 0; i < cl_.items.size(); ++i) {
      const auto& it = cl_.items[i];
      if (it.kind == ModalKind::And && v[i] == 0 && v[it.a] == -1 && v[it.b] == -1)
        return {it.a, false};
      if (it.kind == ModalKind::Or && v[i] == 1 && v[it.a] == -1 && v[it.b] == -1)
        return {it.a, true};
    }
    for (const auto& clause : clauses_) {
      bool satisfied = false;
      int open = 0, first_open = -1;
      bool first_want = true;
      for (auto [i, want] : clause) {
        if (v[i] == -1) {
          if (first_open < 0) {
            first_open = i;
            first_want = want;
          }
          ++open;
        } else if (v[i] == static_cast<int8_t>(want)) {
          satisfied = true;
          break;
        }
      }
      if (!satisfied && open >= 2) return {first_open, first_want};
    }
    for (int b : always_branch_)
      if (v[b] == -1)
        return {b, cl_.items[b].kind == ModalKind::Atom ? labels_true_first_ : true};
    return {-1, false};
  }

  bool rec(State& st, SearchLimits& limits,
           const std::function<bool(const std::string&)>& fn) {
    auto [var, pref] = pick_branch_var(st);
    if (var < 0) {
      State done = st;
      for (size_t i = 0; i < cl_.items.size(); ++i) {
        const auto& it = cl_.items[i];
        bool leaf = it.kind == ModalKind::Atom || is_modal_operator(it.kind);
        if (leaf && done.v[i] == -1) {
          done.v[i] = 0;
          done.reason[i] = kDefault;
        }
      }
      if (!propagate(done)) return false;
      if (!limits.charge()) return false;
      std::string bits(done.v.size(), '0');
      for (size_t i = 0; i < done.v.size(); ++i) bits[i] = done.v[i] == 1 ? '1' : '0';
      return fn(bits);
    }
    for (bool val : {pref, !pref}) {
      State copy = st;
      copy.v[var] = val;
      copy.reason[var] = kBranch;
      if (propagate(copy) && rec(copy, limits, fn)) return true;
      if (limits.clipped) return false;
    }
    return false;
  }
};

// ---------------------------------------------------------------------------
// Bounded search

struct BuiltNode {
  std::vector<int> labels;
  std::vector<BuiltNode> kids;
  std::set<int> states;

  unsigned long long height() const {
    unsigned long long h = 1;
    for (const auto& k : kids) h = std::max(h, 1 + k.height());
    return h;
  }
};

class BranchSearch {
 public:
  BranchSearch(const ModalClosure& cl, unsigned long long depth,
               unsigned long long branching, const SolveOptions& opts)
      : cl_(cl), depth_(std::max(1ULL, depth)),
        branching_(std::max(1ULL, branching)), opts_(opts) {
    if (opts.rank) branching_ = std::min<unsigned long long>(branching_, *opts.rank);
    if (opts.schema) branching_ = std::min<unsigned long long>(branching_, opts.schema->rank);
    uar_ = opts.uar || opts.schema != nullptr;
    limits_.node_budget = opts.node_budget;
    limits_.deadline = std::chrono::steady_clock::now() +
                       std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                           std::chrono::duration<double>(opts.time_budget_seconds));
    if (opts.schema) {
      schema_symbol_.assign(cl.signature.size(), -1);
      for (size_t s = 0; s < cl.signature.size(); ++s)
        schema_symbol_[s] = opts.schema->symbol_index(cl.signature[s]);
    }
    prune_free_children_ = !cl.has_ns && !opts.schema;
  }

  Verdict run() {
    Verdict v;
    v.depth_explored = depth_;
    v.branching_explored = branching_;

    std::vector<int8_t> forced(cl_.items.size(), -1);
    bool ok = true;
    ok = ok && force(forced, cl_.top, true);
    for (int i : cl_.next_parent) ok = ok && force(forced, i, false);
    for (int i : cl_.dia_up) ok = ok && force(forced, i, false);
    for (int i : cl_.next_left) ok = ok && force(forced, i, false);
    for (int i : cl_.dia_left) ok = ok && force(forced, i, false);
    for (int i : cl_.next_right) ok = ok && force(forced, i, false);
    for (int i : cl_.dia_right) ok = ok && force(forced, i, false);

    std::optional<BuiltNode> found;
    if (ok) {
      std::set<int> root_demands;  // unroutable: the root has no producers
      slot_enumerate(forced, base_clauses(), root_demands, root_demands,
                     [&](const std::string& type, std::set<int>& demands) {
        auto r = build_subtree(type, depth_, &demands);
        if (r) {
          if (opts_.schema) {
            bool accepted = false;
            for (int q : r->states)
              if (opts_.schema->accepting.count(q)) accepted = true;
            if (!accepted) return false;
          }
          found = std::move(r);
          return true;
        }
        return false;
      });
    }

    if (getenv("FO2_WSTAT")) {
      fprintf(stderr, "depth histogram:\n");
      for (auto [d, c] : limits_.depth_hist) fprintf(stderr, "  depth_left=%llu: %llu\n", d, c);
    }
    v.nodes_created = limits_.created;
    if (found) {
      v.status = SolveStatus::Sat;
      Tree t;
      t.signature = cl_.signature;
      attach(*found, -1, t);
      v.witness = to_dag(t);
      return v;
    }
    v.depth_cut = depth_cut_;
    v.branching_cut = branching_cut_;
    if (limits_.clipped) {
      v.status = SolveStatus::BoundedUnsat;
      v.complete = false;
    } else {
      v.status = SolveStatus::Unsat;
      v.complete = true;  // relative to the given bounds
    }
    return v;
  }

 private:
  const ModalClosure& cl_;
  unsigned long long depth_, branching_;
  SolveOptions opts_;
  bool uar_ = false;
  bool prune_free_children_ = false;
  bool depth_cut_ = false;
  bool branching_cut_ = false;
  SearchLimits limits_;
  std::vector<int> schema_symbol_;
  // Feasibility is monotone in the remaining depth, so one ceiling per type
  // covers every smaller budget; replaying the recorded demands keeps the
  // widening loops informed on memo hits.
  struct FailInfo {
    unsigned long long below = 0;
    std::set<int> demands;
  };
  std::unordered_map<std::string, FailInfo> failed_below_;
  // A finished subtree is valid wherever its root type fits and the depth
  // budget covers its height.
  std::unordered_map<std::string, BuiltNode> built_;
  // Types on the current root-to-leaf construction branch. A child repeating
  // an ancestor type is never needed: grafting the deeper subtree at the
  // ancestor gives a smaller witness with identical root claims.
  std::set<std::string> branch_types_;

  static bool force(std::vector<int8_t>& v, int i, bool val) {
    if (v[i] != -1) return v[i] == static_cast<int8_t>(val);
    v[i] = val;
    return true;
  }

  // Conflict-driven widening loop for one enumeration slot. Candidates start
  // lazy; demands raised against this slot's free bits widen the branch set
  // and retry; demands against inherited bits route to the producing side
  // (the parent's type or the previous sibling's type). The callback receives
  // a sink for demands its subtree raises against the candidate.
  bool slot_enumerate(const std::vector<int8_t>& forced, std::vector<Clause> clauses,
                      std::set<int>& up_parent, std::set<int>& up_prev,
                      const std::function<bool(const std::string&, std::set<int>&)>& fn) {
    std::set<int> widen;
    while (true) {
      std::set<int> raised;
      TypeGen gen(cl_, forced, clauses, uar_,
                  std::vector<int>(widen.begin(), widen.end()), &raised);
      bool found = gen.enumerate(
          limits_, [&](const std::string& type) { return fn(type, raised); });
      if (found) return true;
      if (limits_.clipped) return false;
      bool grew = false;
      for (int d : raised) {
        if (forced[d] != -1) {
          for (int pbit : cl_.parent_feed[d]) up_parent.insert(pbit);
          for (int pbit : cl_.prev_feed[d]) up_prev.insert(pbit);
        } else if (!grew && !widen.count(d)) {
          // One new bit per round keeps the candidate space directed.
          widen.insert(d);
          grew = true;
        }
      }
      if (!grew) return false;
    }
  }

  std::vector<Clause> base_clauses() const {
    std::vector<Clause> clauses;
    if (uar_) {
      Clause at_least;
      for (int a : cl_.atom_items)
        if (a >= 0) at_least.push_back({a, true});
      clauses.push_back(std::move(at_least));
      for (size_t i = 0; i < cl_.atom_items.size(); ++i)
        for (size_t j = i + 1; j < cl_.atom_items.size(); ++j)
          if (cl_.atom_items[i] >= 0 && cl_.atom_items[j] >= 0)
            clauses.push_back({{cl_.atom_items[i], false}, {cl_.atom_items[j], false}});
    }
    if (opts_.schema) {
      for (size_t s = 0; s < cl_.signature.size(); ++s)
        if (schema_symbol_[s] < 0 && cl_.atom_items[s] >= 0)
          clauses.push_back({{cl_.atom_items[s], false}});
    }
    return clauses;
  }

  std::vector<int> labels_of(const std::string& type) const {
    std::vector<int> labels;
    for (size_t s = 0; s < cl_.signature.size(); ++s) {
      int item = cl_.atom_items[s];
      if (item >= 0 && type[item] == '1') labels.push_back(static_cast<int>(s));
    }
    return labels;
  }

  // Forced bits for a child of `parent`, following `prev` (empty for the
  // first child).
  bool child_forced(const std::string& parent, const std::string& prev,
                    std::vector<int8_t>& out, std::vector<Clause>& clauses) const {
    out.assign(cl_.items.size(), -1);
    for (int i : cl_.next_parent)
      if (!force(out, i, parent[cl_.items[i].a] == '1')) return false;
    for (int i : cl_.dia_up)
      if (!force(out, i, parent[cl_.items[i].a] == '1' || parent[i] == '1')) return false;
    for (int i : cl_.next_child)
      if (parent[i] == '0' && !force(out, cl_.items[i].a, false)) return false;
    for (int i : cl_.dia_down)
      if (parent[i] == '0') {
        if (!force(out, cl_.items[i].a, false)) return false;
        if (!force(out, i, false)) return false;
      }
    if (prev.empty()) {
      for (int i : cl_.next_left)
        if (!force(out, i, false)) return false;
      for (int i : cl_.dia_left)
        if (!force(out, i, false)) return false;
    } else {
      for (int i : cl_.next_left)
        if (!force(out, i, prev[cl_.items[i].a] == '1')) return false;
      for (int i : cl_.dia_left)
        if (!force(out, i, prev[cl_.items[i].a] == '1' || prev[i] == '1')) return false;
      for (int i : cl_.next_right)
        if (!force(out, cl_.items[i].a, prev[i] == '1')) return false;
      for (int i : cl_.dia_right) {
        if (prev[i] == '1') {
          clauses.push_back({{cl_.items[i].a, true}, {i, true}});
        } else {
          if (!force(out, cl_.items[i].a, false)) return false;
          if (!force(out, i, false)) return false;
        }
      }
    }
    return true;
  }

  std::set<int> leaf_states(const std::string& type) const {
    std::set<int> states;
    if (!opts_.schema) return states;
    std::vector<int> labels = labels_of(type);
    if (labels.size() != 1) return states;
    int sym = schema_symbol_[labels[0]];
    if (sym < 0) return states;
    auto it = opts_.schema->transitions.find({sym, {}});
    if (it != opts_.schema->transitions.end()) states = it->second;
    return states;
  }

  std::set<int> combine_states(const std::string& type,
                               const std::vector<BuiltNode>& kids) const {
    std::set<int> states;
    if (!opts_.schema) return states;
    std::vector<int> labels = labels_of(type);
    if (labels.size() != 1) return states;
    int sym = schema_symbol_[labels[0]];
    if (sym < 0) return states;
    std::vector<int> tuple(kids.size());
    std::function<void(size_t)> rec = [&](size_t k) {
      if (k == kids.size()) {
        auto it = opts_.schema->transitions.find({sym, tuple});
        if (it != opts_.schema->transitions.end())
          states.insert(it->second.begin(), it->second.end());
        return;
      }
      for (int q : kids[k].states) {
        tuple[k] = q;
        rec(k + 1);
      }
    };
    rec(0);
    return states;
  }

  std::optional<BuiltNode> build_subtree(const std::string& type,
                                         unsigned long long depth_left,
                                         std::set<int>* type_demands) {
    auto hit = built_.find(type);
    if (hit != built_.end() && hit->second.height() <= depth_left)
      return hit->second;
    auto memo = failed_below_.find(type);
    if (memo != failed_below_.end() && depth_left <= memo->second.below) {
      if (type_demands)
        type_demands->insert(memo->second.demands.begin(), memo->second.demands.end());
      return std::nullopt;
    }

    std::vector<int> pend_next, pend_even;  // closure item indices
    for (int i : cl_.next_child)
      if (type[i] == '1') pend_next.push_back(i);
    for (int i : cl_.dia_down)
      if (type[i] == '1') pend_even.push_back(i);

    limits_.cur_depth = depth_left;
    std::set<int> demands;
    std::optional<BuiltNode> result;
    if (pend_next.empty() && pend_even.empty() && !opts_.schema) {
      result = BuiltNode{labels_of(type), {}, {}};
    } else if (pend_next.empty() && pend_even.empty() && opts_.schema) {
      std::set<int> st = leaf_states(type);
      if (!st.empty()) result = BuiltNode{labels_of(type), {}, std::move(st)};
      // A leaf without states may still work as an internal node.
      if (!result && depth_left >= 2) result = grow_children(type, depth_left, demands);
    } else if (depth_left >= 2) {
      bool on_branch = branch_types_.count(type) > 0;
      branch_types_.insert(type);
      result = grow_children(type, depth_left, demands);
      if (!on_branch) branch_types_.erase(type);
    } else {
      depth_cut_ = true;  // pending obligations with no room to extend
    }

    if (!result) {
      if (type_demands) type_demands->insert(demands.begin(), demands.end());
      if (!limits_.clipped) {
        auto [it, fresh] = failed_below_.try_emplace(type, FailInfo{depth_left, demands});
        if (!fresh) {
          if (it->second.below < depth_left) it->second.below = depth_left;
          it->second.demands.insert(demands.begin(), demands.end());
        }
      }
    } else {
      built_.try_emplace(type, *result);
    }
    return result;
  }

  std::optional<BuiltNode> grow_children(const std::string& type,
                                         unsigned long long depth_left,
                                         std::set<int>& type_demands) {
    std::vector<int> pend_next, pend_even;
    for (int i : cl_.next_child)
      if (type[i] == '1') pend_next.push_back(i);
    for (int i : cl_.dia_down)
      if (type[i] == '1') pend_even.push_back(i);

    std::vector<BuiltNode> kids;
    std::vector<std::string> kid_types;
    std::optional<BuiltNode> done;

    // prev_raised: the widening sink of the previous sibling's slot; demands
    // this slot raises against sibling-inherited bits land there.
    std::function<bool(std::set<int>*)> extend = [&](std::set<int>* prev_raised) -> bool {
      // Close if possible.
      bool obligations_met = true;
      for (int i : pend_next) {
        bool ok = false;
        for (const auto& kt : kid_types)
          if (kt[cl_.items[i].a] == '1') { ok = true; break; }
        if (!ok) { obligations_met = false; break; }
      }
      if (obligations_met)
        for (int i : pend_even) {
          bool ok = false;
          for (const auto& kt : kid_types)
            if (kt[cl_.items[i].a] == '1' || kt[i] == '1') { ok = true; break; }
          if (!ok) { obligations_met = false; break; }
        }
      bool last_ok = true;
      if (!kid_types.empty()) {
        const std::string& last = kid_types.back();
        for (int i : cl_.next_right)
          if (last[i] == '1') { last_ok = false; break; }
        if (last_ok)
          for (int i : cl_.dia_right)
            if (last[i] == '1') { last_ok = false; break; }
      }
      if (obligations_met && last_ok && !kid_types.empty()) {
        if (!opts_.schema) {
          done = BuiltNode{labels_of(type), kids, {}};
          return true;
        }
        std::set<int> st = combine_states(type, kids);
        if (!st.empty()) {
          done = BuiltNode{labels_of(type), kids, std::move(st)};
          return true;
        }
      }

      // Add one more child.
      bool must_extend = !obligations_met || !last_ok;
      if (kid_types.size() >= branching_ || depth_left < 2) {
        if (must_extend) {
          if (kid_types.size() >= branching_) branching_cut_ = true;
          if (depth_left < 2) depth_cut_ = true;
        }
        return false;
      }
      if (!must_extend && prune_free_children_) return false;

      std::vector<int> unserved_next, unserved_even;
      for (int i : pend_next) {
        bool ok = false;
        for (const auto& kt : kid_types)
          if (kt[cl_.items[i].a] == '1') { ok = true; break; }
        if (!ok) unserved_next.push_back(i);
      }
      for (int i : pend_even) {
        bool ok = false;
        for (const auto& kt : kid_types)
          if (kt[cl_.items[i].a] == '1' || kt[i] == '1') { ok = true; break; }
        if (!ok) unserved_even.push_back(i);
      }

      Clause serving;
      for (int i : unserved_next) serving.push_back({cl_.items[i].a, true});
      for (int i : unserved_even) {
        serving.push_back({cl_.items[i].a, true});
        serving.push_back({i, true});
      }

      std::vector<int8_t> forced;
      std::vector<Clause> clauses = base_clauses();
      if (!child_forced(type, kid_types.empty() ? std::string() : kid_types.back(),
                        forced, clauses))
        return false;

      std::set<int> local_prev;  // first child: no previous sibling
      std::set<int>& up_prev = prev_raised ? *prev_raised : local_prev;
      auto try_candidates = [&](std::vector<int8_t> f2, std::vector<Clause> c2) {
        return slot_enumerate(f2, std::move(c2), type_demands, up_prev,
                              [&](const std::string& kt, std::set<int>& raised) {
          if (!opts_.schema && branch_types_.count(kt)) return false;
          auto sub = build_subtree(kt, depth_left - 1, &raised);
          if (!sub) return false;
          kids.push_back(std::move(*sub));
          kid_types.push_back(kt);
          bool ok = extend(&raised);
          if (!ok) {
            kids.pop_back();
            kid_types.pop_back();
          }
          return ok;
        });
      };

      if (!serving.empty()) {
        // Serving candidates first: the new child helps an unserved
        // obligation directly or by deferral.
        std::vector<Clause> with = clauses;
        with.push_back(serving);
        if (try_candidates(forced, std::move(with))) return true;
        if (limits_.clipped) return false;
        // With independent children (no sibling modalities, no schema) a
        // non-serving child never helps; otherwise it may carry sibling
        // context, so enumerate the non-serving completions as well.
        if (prune_free_children_) return false;
        std::vector<int8_t> without = forced;
        for (auto [bit, want] : serving) {
          if (without[bit] == 1) return false;  // already served differently
          without[bit] = 0;
        }
        return try_candidates(std::move(without), std::move(clauses));
      }
      return try_candidates(std::move(forced), std::move(clauses));
    };

    if (extend(nullptr)) return done;
    return std::nullopt;
  }

  void attach(const BuiltNode& b, int parent, Tree& t) const {
    int id = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    t.nodes[id].parent = parent;
    t.nodes[id].labels = b.labels;
    if (parent != -1) t.nodes[parent].children.push_back(id);
    for (const auto& k : b.kids) attach(k, id, t);
  }
};

}  // namespace

Verdict solve_bounded(const ModalFormula& m, unsigned long long depth,
                      unsigned long long branching, const SolveOptions& opts) {
  ModalFormula shared = modal_intern(m);
  ModalClosure cl = build_closure(shared, opts.extra_signature);
  BranchSearch search(cl, depth, branching, opts);
  Verdict v = search.run();
  if (v.status == SolveStatus::Sat) {
    Tree witness = unfold(*v.witness);
    if (!eval_modal_at_root(witness, shared))
      throw std::logic_error("solve_bounded: witness fails the modal re-check");
  }
  return v;
}

// ---------------------------------------------------------------------------
// decide

Verdict decide(const FoFormula& f, const SolveOptions& opts) {
  if (!is_sentence(f)) throw std::invalid_argument("decide: formula must be a sentence");
  if (!vocabulary_of(f).count(opts.vocabulary))
    throw std::invalid_argument("decide: formula uses atoms outside the selected vocabulary");

  ClosureBasis basis = one_var_closure(f);
  std::vector<std::string> sig = predicates_of(f);
  for (const auto& s : opts.extra_signature) sig.push_back(s);
  if (opts.schema)
    for (const auto& s : opts.schema->alphabet) sig.push_back(s);
  std::sort(sig.begin(), sig.end());
  sig.erase(std::unique(sig.begin(), sig.end()), sig.end());

  BoundContext ctx;
  ctx.vocabulary = opts.vocabulary;
  ctx.uar = opts.uar || opts.schema != nullptr;
  ctx.signature_size = sig.size();
  ctx.formula_size = formula_size(f);
  Bounds bounds = depth_bound(basis.size(), ctx);

  unsigned long long depth = opts.depth_limit.value_or(bounds.depth);
  unsigned long long branching = opts.branching_limit.value_or(bounds.branching);
  bool bounds_cover_theory =
      !bounds.saturated && depth >= bounds.depth && branching >= bounds.branching;

  ModalFormula m = fo2_to_modal(f);
  SolveOptions inner = opts;
  inner.uar = ctx.uar;
  inner.extra_signature = sig;

  // Iterative deepening: shallow witnesses surface before the search can
  // wander, and a refutation that never touches its limits already covers
  // every larger bound.
  auto overall_deadline =
      std::chrono::steady_clock::now() +
      std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(opts.time_budget_seconds));
  Verdict v;
  unsigned long long step = 2;
  while (true) {
    unsigned long long d = std::min(step, depth);
    unsigned long long b = std::min(step, branching);
    bool last = d >= depth && b >= branching;
    SolveOptions it = inner;
    it.time_budget_seconds = std::max(
        0.0, std::chrono::duration<double>(overall_deadline -
                                           std::chrono::steady_clock::now())
                 .count());
    v = solve_bounded(m, d, b, it);
    if (v.status == SolveStatus::Sat) break;
    if (v.status == SolveStatus::Unsat && !v.depth_cut && !v.branching_cut) break;
    if (last || v.status == SolveStatus::BoundedUnsat) break;
    step *= 2;
  }
  v.depth_explored = std::min(step, depth);
  v.branching_explored = std::min(step, branching);

  if (v.status == SolveStatus::Sat) {
    Tree witness = unfold(*v.witness);
    if (!eval_fo2(witness, f))
      throw std::logic_error("decide: witness fails the re-check");
    if (!eval_fo2_dag(*v.witness, f))
      throw std::logic_error("decide: witness DAG fails the re-check");
    if (ctx.uar && !is_uar(witness))
      throw std::logic_error("decide: witness violates the UAR");
    if (opts.rank)
      for (const auto& node : witness.nodes)
        if (static_cast<int>(node.children.size()) > *opts.rank)
          throw std::logic_error("decide: witness violates the rank");
    if (opts.schema && !run_automaton(witness, *opts.schema).accepted)
      throw std::logic_error("decide: witness rejected by the schema");
    return v;
  }
  // A refutation that never touched the depth or branching limits is
  // complete for every larger bound.
  if (v.status == SolveStatus::Unsat && !bounds_cover_theory &&
      (v.depth_cut || v.branching_cut)) {
    v.status = SolveStatus::BoundedUnsat;
    v.complete = false;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Brute force enumeration

namespace {

struct ShapeGen {
  int rank_limit;
  std::map<std::pair<int, int>, std::vector<Tree>> memo;  // (nodes, depth) -> shapes

  // All shapes with exactly n nodes and at most d levels (unlabelled).
  const std::vector<Tree>& shapes(int n, int d) {
    auto key = std::make_pair(n, d);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    std::vector<Tree> out;
    if (n >= 1 && d >= 1) {
      if (n == 1) {
        Tree t;
        t.nodes.emplace_back();
        out.push_back(std::move(t));
      } else {
        // Ordered compositions of n-1 into child subtree sizes.
        std::vector<int> parts;
        std::function<void(int)> split = [&](int remaining) {
          if (remaining == 0) {
            if (rank_limit > 0 && static_cast<int>(parts.size()) > rank_limit) return;
            // Cross product of child shapes.
            std::vector<Tree> acc{Tree{}};
            acc[0].nodes.emplace_back();
            for (int part : parts) {
              std::vector<Tree> next_acc;
              for (const Tree& prefix : acc)
                for (const Tree& child : shapes(part, d - 1)) {
                  Tree merged = prefix;
                  int offset = static_cast<int>(merged.nodes.size());
                  for (const auto& node : child.nodes) {
                    Tree::Node copy = node;
                    copy.parent = node.parent == -1 ? 0 : node.parent + offset;
                    for (auto& c : copy.children) c += offset;
                    merged.nodes.push_back(std::move(copy));
                  }
                  merged.nodes[0].children.push_back(offset);
                  next_acc.push_back(std::move(merged));
                }
              acc = std::move(next_acc);
            }
            for (auto& t : acc) out.push_back(std::move(t));
            return;
          }
          if (rank_limit > 0 && static_cast<int>(parts.size()) >= rank_limit) return;
          for (int part = 1; part <= remaining; ++part) {
            parts.push_back(part);
            split(remaining - part);
            parts.pop_back();
          }
        };
        if (d >= 2) split(n - 1);
      }
    }
    return memo.emplace(key, std::move(out)).first->second;
  }
};

}  // namespace

void enumerate_trees(const std::vector<std::string>& signature, int max_nodes,
                     int max_depth, bool uar, std::optional<int> rank,
                     const std::function<bool(const Tree&)>& visit) {
  std::vector<std::string> sig = signature;
  std::sort(sig.begin(), sig.end());
  sig.erase(std::unique(sig.begin(), sig.end()), sig.end());
  int nsig = static_cast<int>(sig.size());
  if (uar && nsig == 0) return;

  ShapeGen gen{rank.value_or(0), {}};
  for (int n = 1; n <= max_nodes; ++n) {
    for (const Tree& shape : gen.shapes(n, max_depth)) {
      Tree t = shape;
      t.signature = sig;
      // Enumerate labelings node by node.
      std::function<bool(int)> assign = [&](int node) -> bool {
        if (node == n) return visit(t);
        if (uar) {
          for (int s = 0; s < nsig; ++s) {
            t.nodes[node].labels = {s};
            if (assign(node + 1)) return true;
          }
        } else {
          unsigned long long combos = 1ULL << nsig;
          for (unsigned long long mask = 0; mask < combos; ++mask) {
            t.nodes[node].labels.clear();
            for (int s = 0; s < nsig; ++s)
              if (mask & (1ULL << s)) t.nodes[node].labels.push_back(s);
            if (assign(node + 1)) return true;
          }
        }
        return false;
      };
      if (assign(0)) return;
    }
  }
}

std::optional<Tree> brute_force(const FoFormula& f, int max_nodes, int max_depth,
                                const SolveOptions& opts) {
  constexpr int kGuard = 8;
  if (max_nodes > kGuard)
    throw std::invalid_argument("brute_force: max_nodes exceeds the guard");
  if (!is_sentence(f))
    throw std::invalid_argument("brute_force: formula must be a sentence");

  std::vector<std::string> sig = predicates_of(f);
  for (const auto& s : opts.extra_signature) sig.push_back(s);
  if (opts.schema)
    for (const auto& s : opts.schema->alphabet) sig.push_back(s);

  bool uar = opts.uar || opts.schema != nullptr;
  ClosureBasis basis = one_var_closure(f);
  int sentence_idx = basis.index_of(canon_one_var(f));
  std::optional<Tree> found;
  enumerate_trees(sig, max_nodes, max_depth, uar, opts.rank, [&](const Tree& t) {
    if (opts.schema && !run_automaton(t, *opts.schema).accepted) return false;
    TypeTable table = compute_type_table(t, basis);
    if (table.bit(sentence_idx, 0)) {
      found = t;
      return true;
    }
    return false;
  });
  return found;
}

}  // namespace fo2tree
