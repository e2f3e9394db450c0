#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tmk/diagnostics.hpp"

namespace tmk {

template <class Tag>
struct Id {
  std::uint32_t value = 0;

  explicit operator bool() const { return value != 0; }
  friend auto operator<=>(const Id&, const Id&) = default;
};

using ThimacId = Id<struct ThimacIdTag>;
using StageId = Id<struct StageIdTag>;
using ArcId = Id<struct ArcIdTag>;
using EventId = Id<struct EventIdTag>;

enum class Profile { strict, lenient, extended };

const char* profile_name(Profile p);
std::optional<Profile> profile_from_name(std::string_view name);

/// The five base stages plus the two extended-profile stages. The enum order
/// is also the canonical declaration order used by the formatter.
enum class StageKind { create, process, release, transfer, receive, arrive, accept };

inline constexpr int kStageKindCount = 7;

const char* stage_kind_name(StageKind k);
std::optional<StageKind> stage_kind_from_name(std::string_view name);
bool stage_kind_in_profile(StageKind k, Profile p);

enum class ArcKind { flow, trigger };

const char* arc_kind_name(ArcKind k);

struct Attribute {
  std::string name;
  std::string value;

  friend bool operator==(const Attribute&, const Attribute&) = default;
};

/// A thing/machine node. Child order and attribute order are significant
/// (they are declaration order and survive round-trips).
struct Thimac {
  ThimacId id;
  std::string name;
  std::optional<ThimacId> parent;
  std::vector<Attribute> attributes;
  std::vector<StageId> stages;
  std::vector<ThimacId> children;
};

struct StageNode {
  StageId id;
  ThimacId owner;
  StageKind kind = StageKind::create;
  std::optional<std::string> note;
};

struct ArcEdge {
  ArcId id;
  ArcKind kind = ArcKind::flow;
  StageId src;
  StageId dst;
  std::optional<std::string> label;
};

/// Error codes thrown by the model-building operations.
enum class BuildErrc {
  invalid_name,
  duplicate_sibling_name,
  unknown_parent,
  duplicate_kind,
  unknown_owner,
  kind_not_in_profile,
  unknown_endpoint,
  self_arc,
  duplicate_arc,
  unknown_ref,
  duplicate_event_name,
  empty_members,
  unknown_event_name,
  duplicate_edge,
};

const char* build_errc_name(BuildErrc c);

struct BuildError : std::runtime_error {
  BuildError(BuildErrc errc, const std::string& what)
      : std::runtime_error(what), code(errc) {}
  BuildErrc code;
};

/// Names usable for thimacs and attributes: identifier-shaped and not one of
/// the DSL keywords or stage kinds (keeps path addressing and the textual
/// form unambiguous).
bool is_valid_name(std::string_view name);

class StaticModel {
 public:
  StaticModel() = default;
  explicit StaticModel(Profile profile) : profile_(profile) {}

  Profile profile() const { return profile_; }

  // -- construction ---------------------------------------------------------

  /// Throws BuildError{invalid_name | duplicate_sibling_name | unknown_parent}.
  ThimacId add_thimac(std::string name, std::optional<ThimacId> parent,
                      std::vector<Attribute> attributes = {});

  /// Throws BuildError{unknown_owner | duplicate_kind | kind_not_in_profile}.
  StageId add_stage(ThimacId owner, StageKind kind,
                    std::optional<std::string> note = std::nullopt);

  /// Throws BuildError{unknown_endpoint | self_arc | duplicate_arc}.
  /// Flow legality against the stage-kind matrix is deliberately not checked
  /// here; that is the validator's job.
  ArcId add_arc(ArcKind kind, StageId src, StageId dst,
                std::optional<std::string> label = std::nullopt);

  // -- unchecked construction (deserializers only) --------------------------
  // These bypass the builder invariants so that hand-edited serialized input
  // can be loaded and then diagnosed by the validator.

  /// Skips the parent-existence check so a child whose parent reference is a
  /// minted unresolved id can still be stored (and later flagged).
  ThimacId add_thimac_unchecked(std::string name, std::optional<ThimacId> parent,
                                std::vector<Attribute> attributes = {});
  StageId add_stage_unchecked(ThimacId owner, StageKind kind,
                              std::optional<std::string> note = std::nullopt);
  ArcId add_arc_unchecked(ArcKind kind, StageId src, StageId dst,
                          std::optional<std::string> label = std::nullopt);
  /// Mints a stage id that resolves nowhere, remembering the path text it was
  /// supposed to name.
  StageId note_unresolved_stage(std::string path);
  ThimacId note_unresolved_thimac(std::string path);

  // -- access ---------------------------------------------------------------

  const std::map<ThimacId, Thimac>& thimacs() const { return thimacs_; }
  const std::map<StageId, StageNode>& stages() const { return stages_; }
  const std::map<ArcId, ArcEdge>& arcs() const { return arcs_; }
  const std::vector<ThimacId>& roots() const { return roots_; }
  const std::map<StageId, std::string>& unresolved_stages() const {
    return unresolved_stages_;
  }
  const std::map<ThimacId, std::string>& unresolved_thimacs() const {
    return unresolved_thimacs_;
  }

  bool has_thimac(ThimacId id) const { return thimacs_.count(id) != 0; }
  bool has_stage(StageId id) const { return stages_.count(id) != 0; }
  const Thimac& thimac(ThimacId id) const;
  const StageNode& stage(StageId id) const;
  const ArcEdge& arc(ArcId id) const;

  // -- path addressing ------------------------------------------------------

  std::optional<ThimacId> find_child(std::optional<ThimacId> parent,
                                     std::string_view name) const;
  std::optional<StageId> find_stage(ThimacId owner, StageKind kind) const;
  std::optional<ThimacId> resolve_thimac(std::string_view dotted) const;
  /// Resolves "A.B.kind" to the kind stage of thimac A.B.
  std::optional<StageId> resolve_stage(std::string_view dotted) const;

  std::string thimac_path(ThimacId id) const;
  std::string stage_path(StageId id) const;
  /// Path rendering for diagnostics; tolerates unresolved ids.
  std::string stage_ref(StageId id) const;
  std::string arc_ref(ArcId id) const;

  /// True when `maybe_ancestor` equals or contains `t`.
  bool in_subtree(ThimacId t, ThimacId maybe_ancestor) const;
  /// Chain of thimics from root down to `t` (inclusive).
  std::vector<ThimacId> ancestor_chain(ThimacId t) const;

  // -- source spans (populated by the DSL parser, diagnostics only) ---------

  void set_span(ThimacId id, SourceSpan s) { thimac_spans_[id] = std::move(s); }
  void set_span(StageId id, SourceSpan s) { stage_spans_[id] = std::move(s); }
  void set_span(ArcId id, SourceSpan s) { arc_spans_[id] = std::move(s); }
  std::optional<SourceSpan> span_of(ThimacId id) const;
  std::optional<SourceSpan> span_of(StageId id) const;
  std::optional<SourceSpan> span_of(ArcId id) const;

 private:
  ThimacId next_thimac_id_();
  StageId next_stage_id_();
  ArcId next_arc_id_();

  Profile profile_ = Profile::strict;
  std::map<ThimacId, Thimac> thimacs_;
  std::map<StageId, StageNode> stages_;
  std::map<ArcId, ArcEdge> arcs_;
  std::vector<ThimacId> roots_;
  std::map<StageId, std::string> unresolved_stages_;
  std::map<ThimacId, std::string> unresolved_thimacs_;
  std::map<ThimacId, SourceSpan> thimac_spans_;
  std::map<StageId, SourceSpan> stage_spans_;
  std::map<ArcId, SourceSpan> arc_spans_;
  std::uint32_t thimac_counter_ = 0;
  std::uint32_t stage_counter_ = 0;
  std::uint32_t arc_counter_ = 0;
};

/// Machine-eliminated view: thimacs that own stages (directly or below) and
/// the sibling-level relations induced by arcs between their subtrees.
struct ComponentEdge {
  ThimacId a;
  ThimacId b;
  bool via_flow = false;
  bool via_trigger = false;
};

struct ComponentView {
  std::vector<ThimacId> nodes;      // sorted by path
  std::vector<ComponentEdge> edges; // unordered pairs, sorted by (path a, path b)
};

/// Deterministic and idempotent; never lists stage ids; an arc between a
/// stage and one owned by a descendant machine induces no edge.
ComponentView extract_components(const StaticModel& model);

}  // namespace tmk
