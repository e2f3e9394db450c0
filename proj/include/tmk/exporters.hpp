#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmk/dsl.hpp"
#include "tmk/events.hpp"
#include "tmk/model.hpp"

namespace tmk {

enum class DotFlavor { model, components, behavior };

struct ExportOptions {
  DotFlavor flavor = DotFlavor::model;
  bool include_labels = true;
};

/// Graphviz output, byte-stable:
///   model      thimacs as nested clusters, stages as boxes labeled by kind,
///              flow arcs solid, trigger arcs dashed
///   components top-level components as plain nodes (no clusters) with the
///              relations between them, trigger-only relations dashed
///   behavior   events as ellipses, initial events double-ringed
std::string to_dot(const StaticModel& model, const std::vector<EventDef>& events,
                   const std::optional<BehaviorGraph>& behavior,
                   const ExportOptions& options);

struct SchemaError : std::runtime_error {
  SchemaError(std::string where, const std::string& what)
      : std::runtime_error(what), pointer(std::move(where)) {}
  /// JSON-pointer-style location of the violation, e.g. "/thimacs/3/path".
  std::string pointer;
};

struct Document {
  StaticModel model;
  std::vector<EventDef> events;
  std::optional<BehaviorGraph> behavior;
};

/// Version-1 interchange schema; ids are flattened to stable path strings and
/// output key order is fixed so files diff cleanly.
std::string to_json(const StaticModel& model, const std::vector<EventDef>& events,
                    const std::optional<BehaviorGraph>& behavior);

/// Inverse of to_json for valid documents. Schema violations throw
/// SchemaError with a JSON-pointer-style location. Arc endpoints and thimac
/// parents that fail to resolve load as unresolved references for the
/// validator to flag; duplicate stage kinds load for the validator to
/// re-check.
Document from_json(const std::string& text);

}  // namespace tmk
