#include "cqlin/json.hpp"

namespace cqlin {

using nlohmann::json;

json verdict_json(const Verdict& v) {
  json out;
  out["status"] = to_string(v.status);
  out["theorem"] = v.theorem;
  out["companion"] = v.companion ? json(to_string(*v.companion)) : json(nullptr);
  out["hypothesis"] = v.hypothesis ? json(to_string(*v.hypothesis)) : json(nullptr);
  out["engine_plan"] = v.engine_plan;
  out["notes"] = v.notes;
  return out;
}

namespace {

json tree_json(const std::optional<JoinTree>& t) {
  if (!t) return nullptr;
  json edges = json::array();
  for (auto [child, parent] : t->edges()) edges.push_back({child, parent});
  return edges;
}

}  // namespace

json structure_json(const StructureReport& r, const ConjunctiveQuery& q) {
  json out;
  out["query"] = to_string(q);
  out["acyclic"] = r.acyclic;
  out["weakly_acyclic"] = r.weakly_acyclic;
  out["free_connex"] = r.free_connex;
  out["self_join_free"] = r.self_join_free;
  out["full"] = r.full;
  out["connected"] = r.connected;
  out["disruptive_trio"] = r.disruptive_trio ? json::array({r.disruptive_trio->first.name(),
                                                            r.disruptive_trio->second.name(),
                                                            r.disruptive_trio->third.name()})
                                             : json(nullptr);
  out["join_tree"] = tree_json(r.join_tree);
  out["weak_join_tree"] = tree_json(r.weak_join_tree);
  out["free_connex_tree"] = tree_json(r.free_connex_tree);
  return out;
}

json profile_json(const TgdSetProfile& p) {
  json out;
  out["non_recursive"] = p.non_recursive;
  out["full"] = p.full;
  out["frontier_guarded"] = p.frontier_guarded;
  out["chase_terminating"] = p.chase_terminating();
  out["max_head_arity"] = p.max_head_arity;
  out["max_frontier"] = p.max_frontier;
  out["role_inclusions_only"] = p.role_inclusions_only;
  out["unary_heads_only"] = p.unary_heads_only;
  json order = json::array();
  for (auto [a, b] : p.order) order.push_back({a.name(), b.name()});
  out["order"] = order;
  return out;
}

}  // namespace cqlin
