#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tmk/diagnostics.hpp"
#include "tmk/events.hpp"
#include "tmk/model.hpp"

namespace tmk {

/// Result of parsing one textual model. `model` is present iff there are no
/// error-severity diagnostics; `events` and `behavior` are populated only
/// when `model` is.
struct ParseResult {
  std::optional<StaticModel> model;
  std::vector<EventDef> events;
  std::optional<BehaviorGraph> behavior;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return model.has_value(); }
};

/// Total parse: never throws on malformed input; every error carries a span.
/// A malformed item produces one error diagnostic and parsing continues with
/// the next item.
ParseResult parse_model(std::string_view source, Profile profile,
                        std::string file = "<input>");

/// Canonical text: thimacs in declaration order with two-space indentation,
/// stages in kind order, arcs sorted by (kind, src, dst), events in
/// declaration order with sorted members, behavior edges sorted. LF endings.
std::string format_model(const StaticModel& model,
                         const std::vector<EventDef>& events = {},
                         const std::optional<BehaviorGraph>& behavior = std::nullopt);

/// Escapes a string for DSL/DOT/JSON-style double-quoted literals.
std::string quote_string(std::string_view raw);

/// Structural equality up to ids: same thimac tree (names, attributes, stage
/// kinds and notes), same arc multiset by (kind, src path, dst path, label),
/// same event list by (name, description, member paths), same behavior edge
/// set by (from, to, label). Sibling and event order are significant.
bool documents_equal(const StaticModel& a, const std::vector<EventDef>& ea,
                     const std::optional<BehaviorGraph>& ba,
                     const StaticModel& b, const std::vector<EventDef>& eb,
                     const std::optional<BehaviorGraph>& bb);

}  // namespace tmk
