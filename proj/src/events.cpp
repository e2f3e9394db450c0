#include "tmk/events.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

namespace tmk {

const EventDef& attach_event(const StaticModel& model,
                             std::vector<EventDef>& registry, std::string name,
                             const std::vector<MemberRef>& members,
                             std::optional<std::string> description) {
  if (members.empty()) {
    throw BuildError(BuildErrc::empty_members,
                     "event '" + name + "' has no members");
  }
  if (find_event(registry, name)) {
    throw BuildError(BuildErrc::duplicate_event_name,
                     "event '" + name + "' already exists");
  }
  EventDef def;
  def.id = EventId{static_cast<std::uint32_t>(registry.size() + 1)};
  def.name = std::move(name);
  def.description = std::move(description);
  for (const MemberRef& m : members) {
    if (std::holds_alternative<StageId>(m)) {
      StageId s = std::get<StageId>(m);
      if (!model.has_stage(s)) {
        throw BuildError(BuildErrc::unknown_ref,
                         "event '" + def.name + "' references a stage that "
                         "does not exist");
      }
      def.stages.insert(s);
    } else {
      ArcId a = std::get<ArcId>(m);
      if (!model.arcs().count(a)) {
        throw BuildError(BuildErrc::unknown_ref,
                         "event '" + def.name + "' references an arc that "
                         "does not exist");
      }
      def.arcs.insert(a);
    }
  }
  registry.push_back(std::move(def));
  return registry.back();
}

const EventDef* find_event(const std::vector<EventDef>& events,
                           std::string_view name) {
  for (const EventDef& e : events) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

namespace {

// Stages in scope for an event's connectedness: members plus arc endpoints.
std::set<StageId> scope_stages(const StaticModel& model, const EventDef& e) {
  std::set<StageId> scope = e.stages;
  for (ArcId a : e.arcs) {
    const ArcEdge& arc = model.arc(a);
    if (model.has_stage(arc.src)) scope.insert(arc.src);
    if (model.has_stage(arc.dst)) scope.insert(arc.dst);
  }
  return scope;
}

bool weakly_connected(const StaticModel& model, const EventDef& e) {
  std::set<StageId> scope = scope_stages(model, e);
  if (scope.size() <= 1) return true;
  std::map<StageId, StageId> parent;
  for (StageId s : scope) parent[s] = s;
  std::function<StageId(StageId)> find = [&](StageId x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (ArcId a : e.arcs) {
    const ArcEdge& arc = model.arc(a);
    if (!model.has_stage(arc.src) || !model.has_stage(arc.dst)) continue;
    StageId ra = find(arc.src);
    StageId rb = find(arc.dst);
    if (ra != rb) parent[ra] = rb;
  }
  StageId first = find(*scope.begin());
  return std::all_of(scope.begin(), scope.end(),
                     [&](StageId s) { return find(s) == first; });
}

std::string join_paths(const std::vector<std::string>& paths) {
  std::string out;
  for (const std::string& p : paths) {
    if (!out.empty()) out += ", ";
    out += p;
  }
  return out;
}

}  // namespace

std::vector<Diagnostic> check_decomposition(const StaticModel& model,
                                            const std::vector<EventDef>& events) {
  std::vector<Diagnostic> out;

  for (const EventDef& e : events) {
    if (!weakly_connected(model, e)) {
      out.push_back({Severity::warning, "W-EVT-DISCONNECTED", e.name,
                     "event members do not form a weakly connected "
                     "sub-diagram",
                     std::nullopt});
    }
    if (e.arcs.empty() && e.stages.size() == 1 &&
        model.stage(*e.stages.begin()).kind != StageKind::create) {
      out.push_back({Severity::warning, "W-EVT-TRIVIAL", e.name,
                     "event is a single " +
                         std::string(stage_kind_name(
                             model.stage(*e.stages.begin()).kind)) +
                         " stage",
                     std::nullopt});
    }
  }

  // Coverage and overlap are measured over explicit stage members only.
  std::map<StageId, int> times_covered;
  for (const auto& [id, s] : model.stages()) times_covered[id] = 0;
  for (const EventDef& e : events) {
    for (StageId s : e.stages) {
      if (times_covered.count(s)) ++times_covered[s];
    }
  }
  std::vector<std::string> uncovered, shared;
  for (const auto& [id, n] : times_covered) {
    if (n == 0) uncovered.push_back(model.stage_path(id));
    if (n >= 2) shared.push_back(model.stage_path(id));
  }
  std::sort(uncovered.begin(), uncovered.end());
  std::sort(shared.begin(), shared.end());
  if (!uncovered.empty()) {
    out.push_back({Severity::warning, "W-EVT-COVERAGE", "decomposition",
                   "stages in no event: " + join_paths(uncovered),
                   std::nullopt});
  }
  if (!shared.empty()) {
    out.push_back({Severity::info, "I-EVT-OVERLAP", "decomposition",
                   "stages in more than one event: " + join_paths(shared),
                   std::nullopt});
  }

  sort_diagnostics(out);
  return out;
}

StaticModel induced_subdiagram(const StaticModel& model, const EventDef& event) {
  StaticModel out(model.profile());

  std::set<StageId> keep_stages = scope_stages(model, event);
  std::set<ThimacId> keep_thimacs;
  for (StageId s : keep_stages) {
    for (ThimacId t : model.ancestor_chain(model.stage(s).owner)) {
      keep_thimacs.insert(t);
    }
  }

  // Copy kept thimacs in declaration order so paths are preserved.
  std::map<ThimacId, ThimacId> thimac_map;
  std::function<void(const std::vector<ThimacId>&, std::optional<ThimacId>)>
      copy_level = [&](const std::vector<ThimacId>& level,
                       std::optional<ThimacId> new_parent) {
        for (ThimacId t : level) {
          if (!keep_thimacs.count(t)) continue;
          const Thimac& src = model.thimac(t);
          ThimacId copied = out.add_thimac(src.name, new_parent, src.attributes);
          thimac_map[t] = copied;
          copy_level(src.children, copied);
        }
      };
  copy_level(model.roots(), std::nullopt);

  std::map<StageId, StageId> stage_map;
  for (StageId s : keep_stages) {
    const StageNode& node = model.stage(s);
    stage_map[s] = out.add_stage(thimac_map.at(node.owner), node.kind, node.note);
  }
  for (ArcId a : event.arcs) {
    const ArcEdge& arc = model.arc(a);
    out.add_arc(arc.kind, stage_map.at(arc.src), stage_map.at(arc.dst),
                arc.label);
  }
  return out;
}

BehaviorGraph build_behavior(const std::vector<EventDef>& events,
                             const std::vector<BehaviorEdgeSpec>& edges,
                             std::vector<Diagnostic>* diags) {
  BehaviorGraph graph;
  std::set<EventId> nodes;
  std::set<std::tuple<EventId, EventId, std::optional<std::string>>> seen;
  for (const BehaviorEdgeSpec& spec : edges) {
    const EventDef* from = find_event(events, spec.from);
    const EventDef* to = find_event(events, spec.to);
    if (!from || !to) {
      throw BuildError(BuildErrc::unknown_event_name,
                       "behavior references unknown event '" +
                           (from ? spec.to : spec.from) + "'");
    }
    if (!seen.insert({from->id, to->id, spec.label}).second) {
      throw BuildError(BuildErrc::duplicate_edge,
                       "behavior edge " + spec.from + " -> " + spec.to +
                           " already exists");
    }
    graph.edges.push_back({from->id, to->id, spec.label});
    nodes.insert(from->id);
    nodes.insert(to->id);
  }
  graph.nodes.assign(nodes.begin(), nodes.end());

  if (diags) {
    for (const auto& scc : strongly_connected_components(graph)) {
      bool cyclic = scc.size() > 1;
      if (scc.size() == 1) {
        for (const BehaviorEdge& e : graph.edges) {
          if (e.from == scc[0] && e.to == scc[0]) cyclic = true;
        }
      }
      if (cyclic) {
        std::vector<std::string> names;
        for (EventId id : scc) {
          for (const EventDef& e : events) {
            if (e.id == id) names.push_back(e.name);
          }
        }
        std::sort(names.begin(), names.end());
        diags->push_back({Severity::info, "I-BEHAVIOR-CYCLE", names.front(),
                          "behavior graph contains a cycle through " +
                              join_paths(names),
                          std::nullopt});
      }
    }
  }
  return graph;
}

std::vector<EventId> initial_events(const BehaviorGraph& graph) {
  std::set<EventId> targets;
  for (const BehaviorEdge& e : graph.edges) targets.insert(e.to);
  std::vector<EventId> out;
  for (EventId n : graph.nodes) {
    if (!targets.count(n)) out.push_back(n);
  }
  return out;
}

std::vector<std::vector<EventId>> strongly_connected_components(
    const BehaviorGraph& graph) {
  std::map<EventId, std::vector<EventId>> adj;
  for (EventId n : graph.nodes) adj[n];
  for (const BehaviorEdge& e : graph.edges) adj[e.from].push_back(e.to);

  std::map<EventId, int> index, lowlink;
  std::map<EventId, bool> on_stack;
  std::vector<EventId> stack;
  std::vector<std::vector<EventId>> result;
  int counter = 0;

  std::function<void(EventId)> strongconnect = [&](EventId v) {
    index[v] = lowlink[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (EventId w : adj[v]) {
      if (!index.count(w)) {
        strongconnect(w);
        lowlink[v] = std::min(lowlink[v], lowlink[w]);
      } else if (on_stack[w]) {
        lowlink[v] = std::min(lowlink[v], index[w]);
      }
    }
    if (lowlink[v] == index[v]) {
      std::vector<EventId> scc;
      while (true) {
        EventId w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        scc.push_back(w);
        if (w == v) break;
      }
      std::sort(scc.begin(), scc.end());
      result.push_back(std::move(scc));
    }
  };
  for (EventId n : graph.nodes) {
    if (!index.count(n)) strongconnect(n);
  }
  std::sort(result.begin(), result.end());
  return result;
}

}  // namespace tmk
