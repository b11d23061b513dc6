#include "relational.hpp"

#include <algorithm>
#include <unordered_map>

#include "cqlin/errors.hpp"

namespace cqlin::detail {

std::vector<std::uint32_t> positions_of(const std::vector<Symbol>& vars, const std::vector<Symbol>& subset) {
  std::vector<std::uint32_t> out;
  out.reserve(subset.size());
  for (Symbol v : subset) {
    out.push_back(static_cast<std::uint32_t>(std::find(vars.begin(), vars.end(), v) - vars.begin()));
  }
  return out;
}

std::vector<Symbol> shared_vars(const std::vector<Symbol>& a, const std::vector<Symbol>& b) {
  std::vector<Symbol> out;
  for (Symbol v : a) {
    if (std::find(b.begin(), b.end(), v) != b.end()) out.push_back(v);
  }
  return out;
}

bool subset_of(const std::vector<Symbol>& a, const std::vector<Symbol>& b) {
  return std::all_of(a.begin(), a.end(), [&](Symbol v) { return std::find(b.begin(), b.end(), v) != b.end(); });
}

NodeRel atom_relation(const Atom& atom, const Database& db, const std::map<Symbol, Value>& fixed, std::uint64_t& steps) {
  std::vector<Symbol> vars;
  for (Symbol v : atom.args) {
    if (!fixed.count(v) && std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
  }
  NodeRel out(vars);
  const RowSet* rows = db.rows(atom.relation);
  if (rows == nullptr) return out;
  if (rows->width() != atom.args.size()) throw ArityError(atom.relation.name(), rows->width(), atom.args.size());
  // Per argument: fixed value, or the first position of its variable.
  std::vector<Value> want(atom.args.size());
  std::vector<std::uint32_t> first(atom.args.size());
  for (std::uint32_t p = 0; p < atom.args.size(); ++p) {
    auto it = fixed.find(atom.args[p]);
    if (it != fixed.end()) want[p] = it->second;
    first[p] = static_cast<std::uint32_t>(std::find(atom.args.begin(), atom.args.end(), atom.args[p]) - atom.args.begin());
  }
  const auto out_pos = positions_of(atom.args, vars);
  Tuple t(vars.size());
  out.rows.reserve(rows->size());
  for (std::uint32_t id = 0; id < rows->size(); ++id) {
    ++steps;
    const auto row = rows->row(id);
    bool ok = true;
    for (std::uint32_t p = 0; p < row.size() && ok; ++p) {
      ok = want[p].id != 0 ? row[p] == want[p] : row[p] == row[first[p]];
    }
    if (!ok) continue;
    for (std::size_t k = 0; k < out_pos.size(); ++k) t[k] = row[out_pos[k]];
    out.rows.insert(t);
  }
  return out;
}

RowSet key_set(const NodeRel& rel, const std::vector<std::uint32_t>& positions, std::uint64_t& steps) {
  RowSet keys(positions.size());
  Tuple k(positions.size());
  for (std::uint32_t id = 0; id < rel.rows.size(); ++id) {
    ++steps;
    const auto row = rel.rows.row(id);
    for (std::size_t i = 0; i < positions.size(); ++i) k[i] = row[positions[i]];
    keys.insert(k);
  }
  return keys;
}

void semijoin(NodeRel& target, const NodeRel& filter, std::uint64_t& steps) {
  const auto shared = shared_vars(target.vars, filter.vars);
  if (shared.empty()) {
    ++steps;
    if (filter.rows.empty()) target.rows.clear();
    return;
  }
  const RowSet keys = key_set(filter, positions_of(filter.vars, shared), steps);
  const auto tpos = positions_of(target.vars, shared);
  RowSet kept(target.vars.size());
  Tuple k(shared.size());
  bool dropped = false;
  for (std::uint32_t id = 0; id < target.rows.size(); ++id) {
    ++steps;
    const auto row = target.rows.row(id);
    for (std::size_t i = 0; i < tpos.size(); ++i) k[i] = row[tpos[i]];
    if (keys.contains(k)) {
      kept.insert(row);
    } else {
      dropped = true;
    }
  }
  if (dropped) target.rows = std::move(kept);
}

NodeRel project(const NodeRel& rel, const std::vector<Symbol>& vars, std::uint64_t& steps) {
  NodeRel out(vars);
  const auto pos = positions_of(rel.vars, vars);
  Tuple t(vars.size());
  for (std::uint32_t id = 0; id < rel.rows.size(); ++id) {
    ++steps;
    const auto row = rel.rows.row(id);
    for (std::size_t i = 0; i < pos.size(); ++i) t[i] = row[pos[i]];
    out.rows.insert(t);
  }
  return out;
}

NodeRel join(const NodeRel& a, const NodeRel& b, const std::vector<Symbol>& keep, std::uint64_t& steps) {
  const auto shared = shared_vars(a.vars, b.vars);
  const auto bkey = positions_of(b.vars, shared);
  const auto akey = positions_of(a.vars, shared);
  // Hash b on the shared variables.
  RowSet keys(shared.size());
  std::vector<std::vector<std::uint32_t>> buckets;
  Tuple k(shared.size());
  for (std::uint32_t id = 0; id < b.rows.size(); ++id) {
    ++steps;
    const auto row = b.rows.row(id);
    for (std::size_t i = 0; i < bkey.size(); ++i) k[i] = row[bkey[i]];
    auto [kid, inserted] = keys.insert(k);
    if (inserted) buckets.emplace_back();
    buckets[kid].push_back(id);
  }
  // Output columns taken from a when present there, else from b.
  std::vector<std::pair<bool, std::uint32_t>> source;
  for (Symbol v : keep) {
    auto it = std::find(a.vars.begin(), a.vars.end(), v);
    if (it != a.vars.end()) {
      source.emplace_back(true, static_cast<std::uint32_t>(it - a.vars.begin()));
    } else {
      source.emplace_back(false, positions_of(b.vars, {v}).front());
    }
  }
  NodeRel out(keep);
  Tuple t(keep.size());
  for (std::uint32_t id = 0; id < a.rows.size(); ++id) {
    ++steps;
    const auto arow = a.rows.row(id);
    for (std::size_t i = 0; i < akey.size(); ++i) k[i] = arow[akey[i]];
    auto kid = keys.find(k);
    if (!kid) continue;
    for (std::uint32_t bid : buckets[*kid]) {
      ++steps;
      const auto brow = b.rows.row(bid);
      for (std::size_t i = 0; i < source.size(); ++i) t[i] = source[i].first ? arow[source[i].second] : brow[source[i].second];
      out.rows.insert(t);
    }
  }
  return out;
}

std::vector<std::size_t> post_order(const JoinTree& tree) {
  const std::size_t n = tree.size();
  std::vector<std::vector<std::size_t>> children(n);
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < n; ++i) {
    if (tree.parent[i]) {
      children[*tree.parent[i]].push_back(i);
    } else {
      roots.push_back(i);
    }
  }
  std::vector<std::size_t> order;
  std::vector<std::pair<std::size_t, bool>> stack;
  for (auto it = roots.rbegin(); it != roots.rend(); ++it) stack.emplace_back(*it, false);
  while (!stack.empty()) {
    auto [u, expanded] = stack.back();
    stack.pop_back();
    if (expanded) {
      order.push_back(u);
      continue;
    }
    stack.emplace_back(u, true);
    for (auto it = children[u].rbegin(); it != children[u].rend(); ++it) stack.emplace_back(*it, false);
  }
  return order;
}

void full_reduce(std::vector<NodeRel>& nodes, const JoinTree& tree, std::uint64_t& steps) {
  const auto order = post_order(tree);
  for (std::size_t u : order) {
    if (tree.parent[u]) semijoin(nodes[*tree.parent[u]], nodes[u], steps);
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (tree.parent[*it]) semijoin(nodes[*it], nodes[*tree.parent[*it]], steps);
  }
}

Elimination eliminate(std::vector<NodeRel> nodes, const std::set<Symbol>& protect, std::uint64_t& steps) {
  std::vector<bool> alive(nodes.size(), true);
  for (bool changed = true; changed;) {
    changed = false;
    std::map<Symbol, std::size_t> occurrences;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!alive[i]) continue;
      for (Symbol v : nodes[i].vars) ++occurrences[v];
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!alive[i]) continue;
      std::vector<Symbol> kept;
      for (Symbol v : nodes[i].vars) {
        if (protect.count(v) || occurrences[v] > 1) kept.push_back(v);
      }
      if (kept.size() != nodes[i].vars.size()) {
        nodes[i] = project(nodes[i], kept, steps);
        changed = true;
      }
    }
    for (std::size_t i = 0; i < nodes.size() && !changed; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        if (j == i || !alive[j] || !subset_of(nodes[i].vars, nodes[j].vars)) continue;
        semijoin(nodes[j], nodes[i], steps);
        alive[i] = false;
        changed = true;
        break;
      }
    }
  }
  Elimination out;
  out.success = true;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!alive[i]) continue;
    for (Symbol v : nodes[i].vars) {
      if (!protect.count(v)) out.success = false;
    }
    out.nodes.push_back(std::move(nodes[i]));
  }
  return out;
}

NodeRel materialize(std::vector<NodeRel> nodes, const std::vector<Symbol>& out_vars, std::uint64_t& steps) {
  if (nodes.empty()) {
    NodeRel unit(out_vars);
    if (out_vars.empty()) unit.rows.insert(Tuple{});
    return unit;
  }
  auto needed_after = [&](const std::vector<bool>& used) {
    std::vector<Symbol> out = out_vars;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (used[i]) continue;
      for (Symbol v : nodes[i].vars) {
        if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
      }
    }
    return out;
  };
  std::vector<bool> used(nodes.size(), false);
  std::size_t start = 0;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (nodes[i].rows.size() < nodes[start].rows.size()) start = i;
  }
  used[start] = true;
  auto keep_of = [&](const std::vector<Symbol>& have) {
    const auto needed = needed_after(used);
    std::vector<Symbol> keep;
    for (Symbol v : have) {
      if (std::find(needed.begin(), needed.end(), v) != needed.end()) keep.push_back(v);
    }
    return keep;
  };
  NodeRel current = project(nodes[start], keep_of(nodes[start].vars), steps);
  for (std::size_t round = 1; round < nodes.size(); ++round) {
    if (current.rows.empty()) break;
    std::size_t best = nodes.size();
    std::size_t best_shared = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (used[i]) continue;
      const std::size_t s = shared_vars(current.vars, nodes[i].vars).size();
      if (best == nodes.size() || s > best_shared ||
          (s == best_shared && nodes[i].rows.size() < nodes[best].rows.size())) {
        best = i;
        best_shared = s;
      }
    }
    used[best] = true;
    std::vector<Symbol> have = current.vars;
    for (Symbol v : nodes[best].vars) {
      if (std::find(have.begin(), have.end(), v) == have.end()) have.push_back(v);
    }
    current = join(current, nodes[best], keep_of(have), steps);
  }
  if (current.rows.empty()) return NodeRel(out_vars);
  return project(current, out_vars, steps);
}

}  // namespace cqlin::detail
