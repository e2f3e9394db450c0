#pragma once

#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "tmk/diagnostics.hpp"
#include "tmk/model.hpp"

namespace tmk {

/// An event: a sub-diagram of the static model (the "time injected" reading
/// happens in the simulator). Members are stage and arc ids of the model.
/// An arc member does not make its endpoints members, but they are in scope
/// for connectedness checks and induced sub-diagrams.
struct EventDef {
  EventId id;
  std::string name;
  std::optional<std::string> description;
  std::set<StageId> stages;
  std::set<ArcId> arcs;
};

using MemberRef = std::variant<StageId, ArcId>;

/// Appends a new event to `registry`.
/// Throws BuildError{unknown_ref | duplicate_event_name | empty_members}.
const EventDef& attach_event(const StaticModel& model,
                             std::vector<EventDef>& registry, std::string name,
                             const std::vector<MemberRef>& members,
                             std::optional<std::string> description = std::nullopt);

const EventDef* find_event(const std::vector<EventDef>& events,
                           std::string_view name);

/// Decomposition quality checks:
///   W-EVT-DISCONNECTED  event's member-induced subgraph is not weakly connected
///   W-EVT-TRIVIAL       event is a single non-create stage
///   W-EVT-COVERAGE      stages of the model in no event (coverage is over
///                       stages only, not arcs)
///   I-EVT-OVERLAP       stages that are members of two or more events
/// Output is sorted and independent of event declaration order.
std::vector<Diagnostic> check_decomposition(const StaticModel& model,
                                            const std::vector<EventDef>& events);

/// Fresh model holding the event's member stages and arcs, every arc-endpoint
/// stage, and the minimal thimac ancestor chains that own them.
StaticModel induced_subdiagram(const StaticModel& model, const EventDef& event);

struct BehaviorEdge {
  EventId from;
  EventId to;
  std::optional<std::string> label;
};

/// Chronology of events. Nodes are the events referenced by at least one
/// edge; cycles are permitted.
struct BehaviorGraph {
  std::vector<EventId> nodes;  // sorted, unique
  std::vector<BehaviorEdge> edges;
};

struct BehaviorEdgeSpec {
  std::string from;
  std::string to;
  std::optional<std::string> label;
};

/// Resolves edge specs against `events` by name.
/// Throws BuildError{unknown_event_name | duplicate_edge}. Cycles are legal;
/// when present an I-BEHAVIOR-CYCLE info diagnostic is appended to `diags`
/// (if given).
BehaviorGraph build_behavior(const std::vector<EventDef>& events,
                             const std::vector<BehaviorEdgeSpec>& edges,
                             std::vector<Diagnostic>* diags = nullptr);

/// Nodes with no incoming edge.
std::vector<EventId> initial_events(const BehaviorGraph& graph);

/// Tarjan components in deterministic order; members sorted.
std::vector<std::vector<EventId>> strongly_connected_components(
    const BehaviorGraph& graph);

}  // namespace tmk
