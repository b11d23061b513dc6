#include "cqlin/structure.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "cqlin/errors.hpp"

namespace cqlin {

std::vector<std::pair<std::size_t, std::size_t>> JoinTree::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < parent.size(); ++i) {
    if (parent[i]) out.emplace_back(i, *parent[i]);
  }
  return out;
}

std::optional<std::size_t> JoinTree::root() const {
  for (std::size_t i = 0; i < parent.size(); ++i) {
    if (!parent[i]) return i;
  }
  return std::nullopt;
}

Hypergraph hypergraph_of(const ConjunctiveQuery& q, JoinTreeMode mode) {
  Hypergraph h;
  for (const Atom& a : q.atoms()) {
    std::vector<Symbol> vars;
    for (Symbol v : a.args) {
      if (mode == JoinTreeMode::Weak && q.is_answer_var(v)) continue;
      if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
    }
    h.push_back(std::move(vars));
  }
  return h;
}

std::optional<JoinTree> gyo_join_tree(const Hypergraph& h) {
  const std::size_t n = h.size();
  JoinTree tree;
  tree.parent.assign(n, std::nullopt);
  if (n == 0) return tree;
  std::vector<bool> alive(n, true);
  std::unordered_map<Symbol, std::size_t> occurrences;
  for (const auto& e : h) {
    for (Symbol v : e) ++occurrences[v];
  }
  auto covers = [&](std::size_t f, const std::vector<Symbol>& shared) {
    return std::all_of(shared.begin(), shared.end(),
                       [&](Symbol v) { return std::find(h[f].begin(), h[f].end(), v) != h[f].end(); });
  };
  for (std::size_t remaining = n; remaining > 1; --remaining) {
    bool removed = false;
    for (std::size_t e = 0; e < n && !removed; ++e) {
      if (!alive[e]) continue;
      std::vector<Symbol> shared;
      for (Symbol v : h[e]) {
        if (occurrences[v] > 1) shared.push_back(v);
      }
      for (std::size_t f = 0; f < n; ++f) {
        if (f == e || !alive[f] || !covers(f, shared)) continue;
        tree.parent[e] = f;
        alive[e] = false;
        for (Symbol v : h[e]) --occurrences[v];
        removed = true;
        break;
      }
    }
    if (!removed) return std::nullopt;
  }
  return tree;
}

std::optional<JoinTree> gyo_join_tree(const ConjunctiveQuery& q, JoinTreeMode mode) {
  auto tree = gyo_join_tree(hypergraph_of(q, mode));
  if (tree) tree->mode = mode;
  return tree;
}

bool is_join_tree(const Hypergraph& h, std::span<const std::pair<std::size_t, std::size_t>> tree_edges) {
  const std::size_t n = h.size();
  if (n == 0) return tree_edges.empty();
  if (tree_edges.size() != n - 1) return false;
  std::vector<std::vector<std::size_t>> adj(n);
  for (auto [a, b] : tree_edges) {
    if (a >= n || b >= n || a == b) return false;
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  // Connected over nodes satisfying keep, starting from the first such node.
  auto connected = [&](const std::vector<bool>& keep) {
    std::size_t start = n;
    std::size_t total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (keep[i]) {
        ++total;
        if (start == n) start = i;
      }
    }
    if (total == 0) return true;
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{start};
    seen[start] = true;
    std::size_t reached = 0;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      ++reached;
      for (std::size_t w : adj[u]) {
        if (keep[w] && !seen[w]) {
          seen[w] = true;
          stack.push_back(w);
        }
      }
    }
    return reached == total;
  };
  if (!connected(std::vector<bool>(n, true))) return false;
  std::set<Symbol> vars;
  for (const auto& e : h) vars.insert(e.begin(), e.end());
  for (Symbol v : vars) {
    std::vector<bool> keep(n);
    for (std::size_t i = 0; i < n; ++i) keep[i] = std::find(h[i].begin(), h[i].end(), v) != h[i].end();
    if (!connected(keep)) return false;
  }
  return true;
}

FreeConnexResult is_free_connex(const ConjunctiveQuery& q) {
  Hypergraph h = hypergraph_of(q);
  h.push_back(q.answer_vars());
  FreeConnexResult r;
  r.witness = gyo_join_tree(h);
  r.free_connex = r.witness.has_value();
  return r;
}

namespace {

bool share_atom(const ConjunctiveQuery& q, Symbol a, Symbol b) {
  for (const Atom& atom : q.atoms()) {
    const bool has_a = std::find(atom.args.begin(), atom.args.end(), a) != atom.args.end();
    const bool has_b = std::find(atom.args.begin(), atom.args.end(), b) != atom.args.end();
    if (has_a && has_b) return true;
  }
  return false;
}

}  // namespace

std::optional<Trio> find_disruptive_trio(const ConjunctiveQuery& q, std::span<const Symbol> order) {
  for (std::size_t k = 2; k < order.size(); ++k) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        if (share_atom(q, order[i], order[j])) continue;
        if (share_atom(q, order[i], order[k]) && share_atom(q, order[j], order[k])) {
          return Trio{order[i], order[j], order[k]};
        }
      }
    }
  }
  return std::nullopt;
}

bool is_self_join_free(const ConjunctiveQuery& q) {
  std::unordered_set<Symbol> seen;
  for (const Atom& a : q.atoms()) {
    if (!seen.insert(a.relation).second) return false;
  }
  return true;
}

bool is_connected(const ConjunctiveQuery& q) {
  const auto& atoms = q.atoms();
  const std::size_t n = atoms.size();
  if (n <= 1) return true;
  std::vector<std::size_t> comp(n);
  for (std::size_t i = 0; i < n; ++i) comp[i] = i;
  auto find = [&](std::size_t x) {
    while (comp[x] != x) x = comp[x] = comp[comp[x]];
    return x;
  };
  std::unordered_map<Symbol, std::size_t> first;
  for (std::size_t i = 0; i < n; ++i) {
    for (Symbol v : atoms[i].args) {
      auto [it, inserted] = first.emplace(v, i);
      if (!inserted) comp[find(i)] = find(it->second);
    }
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (find(i) != find(0)) return false;
  }
  return true;
}

StructureReport analyze(const ConjunctiveQuery& q, std::optional<std::vector<Symbol>> order) {
  StructureReport r;
  r.join_tree = gyo_join_tree(q, JoinTreeMode::Full);
  r.weak_join_tree = gyo_join_tree(q, JoinTreeMode::Weak);
  auto fc = is_free_connex(q);
  r.acyclic = r.join_tree.has_value();
  r.weakly_acyclic = r.weak_join_tree.has_value();
  r.free_connex = fc.free_connex;
  r.free_connex_tree = fc.witness;
  r.self_join_free = is_self_join_free(q);
  r.full = q.is_full();
  r.connected = is_connected(q);
  if (order) {
    std::set<Symbol> seen;
    for (Symbol v : *order) {
      if (!q.is_answer_var(v)) throw DomainError("order variable " + v.name() + " is not an answer variable");
      if (!seen.insert(v).second) throw DomainError("order lists " + v.name() + " twice");
    }
    r.disruptive_trio = find_disruptive_trio(q, *order);
  }
  return r;
}

bool is_frontier_guarded(const Tgd& tgd) {
  if (tgd.body.empty()) return true;
  const auto frontier = tgd.frontier();
  return std::any_of(tgd.body.begin(), tgd.body.end(), [&](const Atom& a) {
    return std::all_of(frontier.begin(), frontier.end(),
                       [&](Symbol v) { return std::find(a.args.begin(), a.args.end(), v) != a.args.end(); });
  });
}

namespace {

bool is_role_inclusion(const Tgd& t) {
  if (t.body.size() != 1 || t.head.size() != 1) return false;
  const Atom& b = t.body[0];
  const Atom& h = t.head[0];
  return b.args.size() == 2 && b.args == h.args && b.args[0] != b.args[1];
}

}  // namespace

TgdSetProfile profile_tgds(const TgdSet& tgds) {
  TgdSetProfile p;
  std::map<Symbol, std::set<Symbol>> succ;
  std::set<Symbol> relations;
  for (const Tgd& t : tgds) {
    p.full = p.full && t.is_full();
    p.frontier_guarded = p.frontier_guarded && is_frontier_guarded(t);
    p.max_frontier = std::max(p.max_frontier, t.frontier().size());
    p.role_inclusions_only = p.role_inclusions_only && is_role_inclusion(t);
    for (const Atom& h : t.head) {
      p.max_head_arity = std::max(p.max_head_arity, h.args.size());
      p.unary_heads_only = p.unary_heads_only && h.args.size() == 1;
      relations.insert(h.relation);
      for (const Atom& b : t.body) {
        succ[b.relation].insert(h.relation);
        relations.insert(b.relation);
      }
    }
  }
  // Reachability by search from every relation; sets are small.
  std::map<Symbol, std::set<Symbol>> reach;
  for (Symbol r : relations) {
    std::set<Symbol>& seen = reach[r];
    std::vector<Symbol> stack(succ[r].begin(), succ[r].end());
    while (!stack.empty()) {
      Symbol s = stack.back();
      stack.pop_back();
      if (!seen.insert(s).second) continue;
      for (Symbol n : succ[s]) stack.push_back(n);
    }
  }
  for (Symbol r : relations) {
    if (reach[r].count(r)) p.non_recursive = false;
    for (Symbol s : reach[r]) {
      if (s != r) p.order.emplace_back(r, s);
    }
  }
  std::sort(p.order.begin(), p.order.end(), [](const auto& a, const auto& b) {
    return std::make_pair(a.first.name(), a.second.name()) < std::make_pair(b.first.name(), b.second.name());
  });
  if (!p.non_recursive) p.order.clear();
  return p;
}

}  // namespace cqlin
