#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmk/diagnostics.hpp"
#include "tmk/events.hpp"
#include "tmk/model.hpp"

namespace tmk {

struct Scenario {
  struct Injection {
    int tick = 0;
    std::string stage;  // path of a create or transfer stage
    std::string thing;  // label of the injected thing
  };

  std::vector<Injection> injections;
  /// Stage path -> ordered labels consumed one per visit; when the list is
  /// exhausted the default rule (lexicographically least destination path)
  /// applies again.
  std::map<std::string, std::vector<std::string>> choices;
  int max_ticks = 1000;
};

enum class SimErrc { invalid_scenario, validation_failed };

struct SimError : std::runtime_error {
  SimError(SimErrc errc, const std::string& what)
      : std::runtime_error(what), code(errc) {}
  SimErrc code;
};

/// Parses the scenario JSON format; throws SimError{invalid_scenario}.
Scenario scenario_from_json(const std::string& text);

enum class RecordKind { inject, spawn, move, trigger, terminate, event };

const char* record_kind_name(RecordKind k);

struct TraceRecord {
  int tick = 0;
  RecordKind kind = RecordKind::inject;
  std::optional<int> token;
  std::optional<ArcId> arc;
  std::optional<StageId> stage;
  std::optional<EventId> event;
};

struct Trace {
  std::vector<TraceRecord> records;       // ticks non-decreasing
  std::map<EventId, int> first_activation;
};

/// Deterministic micro-step run. Per tick: trigger spawns scheduled for the
/// tick materialize, injections fire, every token alive at the start of the
/// tick advances along exactly one outgoing flow arc (terminating if there is
/// none), then triggers fire for each arrival, then event activations are
/// recorded. Trigger spawns materialize at tick+1; a trigger labeled "stop"
/// spawns nothing and instead terminates all tokens resident in the target
/// stage's machine subtree.
/// Throws SimError{validation_failed} when the model has validation errors
/// and SimError{invalid_scenario} for unresolvable paths, injections at
/// stages that are not create/transfer, empty or unmatched choice labels.
Trace run_scenario(const StaticModel& model, const std::vector<EventDef>& events,
                   const Scenario& scenario);

/// One JSON object per line, keys in the fixed order
/// (tick, kind, token, arc, stage, event); absent fields omitted. Stable
/// byte-for-byte across runs.
std::string trace_to_jsonl(const Trace& trace, const StaticModel& model,
                           const std::vector<EventDef>& events);

/// Chronology conformance. For every behavior edge (A, B) that is not inside
/// a strongly connected component:
///   E-BEHAVIOR-ORDER  A and B activated but first(A) > first(B)
///   E-BEHAVIOR-SKIP   B activated, A never, and every path from an initial
///                     event to B passes through A
std::vector<Diagnostic> check_trace_conformance(const Trace& trace,
                                                const BehaviorGraph& behavior,
                                                const std::vector<EventDef>& events);

}  // namespace tmk
