#include "tmk/model.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <sstream>

namespace tmk {
namespace {

constexpr std::array<const char*, 3> kProfileNames = {"strict", "lenient",
                                                      "extended"};
constexpr std::array<const char*, kStageKindCount> kStageKindNames = {
    "create", "process", "release", "transfer", "receive", "arrive", "accept"};

// Words with grammatical meaning in the textual form; not usable as names.
constexpr std::array<const char*, 9> kKeywords = {
    "thimac", "attr", "stage", "flow", "trigger", "label", "event", "behavior",
    "arc"};

}  // namespace

const char* profile_name(Profile p) {
  return kProfileNames[static_cast<int>(p)];
}

std::optional<Profile> profile_from_name(std::string_view name) {
  for (int i = 0; i < static_cast<int>(kProfileNames.size()); ++i) {
    if (name == kProfileNames[i]) return static_cast<Profile>(i);
  }
  return std::nullopt;
}

const char* stage_kind_name(StageKind k) {
  return kStageKindNames[static_cast<int>(k)];
}

std::optional<StageKind> stage_kind_from_name(std::string_view name) {
  for (int i = 0; i < kStageKindCount; ++i) {
    if (name == kStageKindNames[i]) return static_cast<StageKind>(i);
  }
  return std::nullopt;
}

bool stage_kind_in_profile(StageKind k, Profile p) {
  if (k == StageKind::arrive || k == StageKind::accept) {
    return p == Profile::extended;
  }
  return true;
}

const char* arc_kind_name(ArcKind k) {
  return k == ArcKind::flow ? "flow" : "trigger";
}

const char* build_errc_name(BuildErrc c) {
  switch (c) {
    case BuildErrc::invalid_name: return "invalid-name";
    case BuildErrc::duplicate_sibling_name: return "duplicate-sibling-name";
    case BuildErrc::unknown_parent: return "unknown-parent";
    case BuildErrc::duplicate_kind: return "duplicate-kind";
    case BuildErrc::unknown_owner: return "unknown-owner";
    case BuildErrc::kind_not_in_profile: return "kind-not-in-profile";
    case BuildErrc::unknown_endpoint: return "unknown-endpoint";
    case BuildErrc::self_arc: return "self-arc";
    case BuildErrc::duplicate_arc: return "duplicate-arc";
    case BuildErrc::unknown_ref: return "unknown-ref";
    case BuildErrc::duplicate_event_name: return "duplicate-event-name";
    case BuildErrc::empty_members: return "empty-members";
    case BuildErrc::unknown_event_name: return "unknown-event-name";
    case BuildErrc::duplicate_edge: return "duplicate-edge";
  }
  return "?";
}

bool is_valid_name(std::string_view name) {
  if (name.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(name[0])) && name[0] != '_') {
    return false;
  }
  for (char c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  for (const char* kw : kKeywords) {
    if (name == kw) return false;
  }
  return !stage_kind_from_name(name).has_value();
}

ThimacId StaticModel::next_thimac_id_() { return ThimacId{++thimac_counter_}; }
StageId StaticModel::next_stage_id_() { return StageId{++stage_counter_}; }
ArcId StaticModel::next_arc_id_() { return ArcId{++arc_counter_}; }

ThimacId StaticModel::add_thimac(std::string name,
                                 std::optional<ThimacId> parent,
                                 std::vector<Attribute> attributes) {
  if (!is_valid_name(name)) {
    throw BuildError(BuildErrc::invalid_name,
                     "'" + name + "' is not a legal thimac name");
  }
  if (parent && !has_thimac(*parent)) {
    throw BuildError(BuildErrc::unknown_parent,
                     "parent of '" + name + "' does not exist");
  }
  if (find_child(parent, name)) {
    throw BuildError(BuildErrc::duplicate_sibling_name,
                     "sibling named '" + name + "' already exists");
  }
  for (const Attribute& a : attributes) {
    if (!is_valid_name(a.name)) {
      throw BuildError(BuildErrc::invalid_name,
                       "'" + a.name + "' is not a legal attribute name");
    }
  }
  ThimacId id = next_thimac_id_();
  Thimac t;
  t.id = id;
  t.name = std::move(name);
  t.parent = parent;
  t.attributes = std::move(attributes);
  thimacs_.emplace(id, std::move(t));
  if (parent) {
    thimacs_.at(*parent).children.push_back(id);
  } else {
    roots_.push_back(id);
  }
  return id;
}

ThimacId StaticModel::add_thimac_unchecked(std::string name,
                                           std::optional<ThimacId> parent,
                                           std::vector<Attribute> attributes) {
  ThimacId id = next_thimac_id_();
  Thimac t;
  t.id = id;
  t.name = std::move(name);
  t.parent = parent;
  t.attributes = std::move(attributes);
  thimacs_.emplace(id, std::move(t));
  if (!parent) {
    roots_.push_back(id);
  } else if (has_thimac(*parent)) {
    thimacs_.at(*parent).children.push_back(id);
  }
  return id;
}

StageId StaticModel::add_stage(ThimacId owner, StageKind kind,
                               std::optional<std::string> note) {
  if (!has_thimac(owner)) {
    throw BuildError(BuildErrc::unknown_owner, "owner thimac does not exist");
  }
  if (!stage_kind_in_profile(kind, profile_)) {
    throw BuildError(BuildErrc::kind_not_in_profile,
                     std::string("stage kind '") + stage_kind_name(kind) +
                         "' requires the extended profile");
  }
  if (find_stage(owner, kind)) {
    throw BuildError(BuildErrc::duplicate_kind,
                     "'" + thimac_path(owner) + "' already has a " +
                         stage_kind_name(kind) + " stage");
  }
  return add_stage_unchecked(owner, kind, std::move(note));
}

StageId StaticModel::add_stage_unchecked(ThimacId owner, StageKind kind,
                                         std::optional<std::string> note) {
  StageId id = next_stage_id_();
  StageNode s;
  s.id = id;
  s.owner = owner;
  s.kind = kind;
  s.note = std::move(note);
  stages_.emplace(id, std::move(s));
  if (has_thimac(owner)) thimacs_.at(owner).stages.push_back(id);
  return id;
}

ArcId StaticModel::add_arc(ArcKind kind, StageId src, StageId dst,
                           std::optional<std::string> label) {
  if (!has_stage(src) || !has_stage(dst)) {
    throw BuildError(BuildErrc::unknown_endpoint,
                     "arc endpoint does not exist");
  }
  if (src == dst) {
    throw BuildError(BuildErrc::self_arc,
                     "arc source and destination are the same stage");
  }
  for (const auto& [id, a] : arcs_) {
    if (a.kind == kind && a.src == src && a.dst == dst) {
      throw BuildError(BuildErrc::duplicate_arc,
                       std::string(arc_kind_name(kind)) + " " +
                           stage_ref(src) + "->" + stage_ref(dst) +
                           " already exists");
    }
  }
  return add_arc_unchecked(kind, src, dst, std::move(label));
}

ArcId StaticModel::add_arc_unchecked(ArcKind kind, StageId src, StageId dst,
                                     std::optional<std::string> label) {
  ArcId id = next_arc_id_();
  ArcEdge a;
  a.id = id;
  a.kind = kind;
  a.src = src;
  a.dst = dst;
  a.label = std::move(label);
  arcs_.emplace(id, std::move(a));
  return id;
}

StageId StaticModel::note_unresolved_stage(std::string path) {
  StageId id = next_stage_id_();
  unresolved_stages_.emplace(id, std::move(path));
  return id;
}

ThimacId StaticModel::note_unresolved_thimac(std::string path) {
  ThimacId id = next_thimac_id_();
  unresolved_thimacs_.emplace(id, std::move(path));
  return id;
}

const Thimac& StaticModel::thimac(ThimacId id) const { return thimacs_.at(id); }
const StageNode& StaticModel::stage(StageId id) const { return stages_.at(id); }
const ArcEdge& StaticModel::arc(ArcId id) const { return arcs_.at(id); }

std::optional<ThimacId> StaticModel::find_child(std::optional<ThimacId> parent,
                                                std::string_view name) const {
  const std::vector<ThimacId>* siblings = &roots_;
  if (parent) {
    if (!has_thimac(*parent)) return std::nullopt;
    siblings = &thimacs_.at(*parent).children;
  }
  for (ThimacId c : *siblings) {
    if (thimacs_.at(c).name == name) return c;
  }
  return std::nullopt;
}

std::optional<StageId> StaticModel::find_stage(ThimacId owner,
                                               StageKind kind) const {
  if (!has_thimac(owner)) return std::nullopt;
  for (StageId s : thimacs_.at(owner).stages) {
    if (stages_.at(s).kind == kind) return s;
  }
  return std::nullopt;
}

namespace {

std::vector<std::string_view> split_path(std::string_view dotted) {
  std::vector<std::string_view> parts;
  size_t start = 0;
  while (start <= dotted.size()) {
    size_t dot = dotted.find('.', start);
    if (dot == std::string_view::npos) {
      parts.push_back(dotted.substr(start));
      break;
    }
    parts.push_back(dotted.substr(start, dot - start));
    start = dot + 1;
  }
  return parts;
}

}  // namespace

std::optional<ThimacId> StaticModel::resolve_thimac(
    std::string_view dotted) const {
  std::optional<ThimacId> cur;
  for (std::string_view part : split_path(dotted)) {
    cur = find_child(cur, part);
    if (!cur) return std::nullopt;
  }
  return cur;
}

std::optional<StageId> StaticModel::resolve_stage(
    std::string_view dotted) const {
  size_t dot = dotted.rfind('.');
  if (dot == std::string_view::npos) return std::nullopt;
  auto kind = stage_kind_from_name(dotted.substr(dot + 1));
  if (!kind) return std::nullopt;
  auto owner = resolve_thimac(dotted.substr(0, dot));
  if (!owner) return std::nullopt;
  return find_stage(*owner, *kind);
}

std::string StaticModel::thimac_path(ThimacId id) const {
  if (!has_thimac(id)) {
    auto it = unresolved_thimacs_.find(id);
    return it != unresolved_thimacs_.end() ? it->second
                                           : "#" + std::to_string(id.value);
  }
  std::vector<std::string_view> parts;
  std::optional<ThimacId> cur = id;
  while (cur) {
    if (!has_thimac(*cur)) {
      // Broken parent chain; prefix with the unresolved reference.
      std::string head = thimac_path(*cur);
      std::string tail;
      for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
        tail += '.';
        tail += *it;
      }
      return head + tail;
    }
    const Thimac& t = thimacs_.at(*cur);
    parts.push_back(t.name);
    cur = t.parent;
  }
  std::string path;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (!path.empty()) path += '.';
    path += *it;
  }
  return path;
}

std::string StaticModel::stage_path(StageId id) const {
  const StageNode& s = stages_.at(id);
  return thimac_path(s.owner) + "." + stage_kind_name(s.kind);
}

std::string StaticModel::stage_ref(StageId id) const {
  if (has_stage(id)) return stage_path(id);
  auto it = unresolved_stages_.find(id);
  return it != unresolved_stages_.end() ? it->second
                                        : "#" + std::to_string(id.value);
}

std::string StaticModel::arc_ref(ArcId id) const {
  const ArcEdge& a = arcs_.at(id);
  return std::string(arc_kind_name(a.kind)) + " " + stage_ref(a.src) + "->" +
         stage_ref(a.dst);
}

bool StaticModel::in_subtree(ThimacId t, ThimacId maybe_ancestor) const {
  std::optional<ThimacId> cur = t;
  while (cur) {
    if (*cur == maybe_ancestor) return true;
    if (!has_thimac(*cur)) break;
    cur = thimacs_.at(*cur).parent;
  }
  return false;
}

std::vector<ThimacId> StaticModel::ancestor_chain(ThimacId t) const {
  std::vector<ThimacId> chain;
  std::optional<ThimacId> cur = t;
  while (cur && has_thimac(*cur)) {
    chain.push_back(*cur);
    cur = thimacs_.at(*cur).parent;
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

std::optional<SourceSpan> StaticModel::span_of(ThimacId id) const {
  auto it = thimac_spans_.find(id);
  if (it == thimac_spans_.end()) return std::nullopt;
  return it->second;
}

std::optional<SourceSpan> StaticModel::span_of(StageId id) const {
  auto it = stage_spans_.find(id);
  if (it == stage_spans_.end()) return std::nullopt;
  return it->second;
}

std::optional<SourceSpan> StaticModel::span_of(ArcId id) const {
  auto it = arc_spans_.find(id);
  if (it == arc_spans_.end()) return std::nullopt;
  return it->second;
}

ComponentView extract_components(const StaticModel& model) {
  // A thimac qualifies when it owns a stage or contains a thimac that does.
  std::set<ThimacId> qualifying;
  for (const auto& [sid, s] : model.stages()) {
    for (ThimacId t : model.ancestor_chain(s.owner)) qualifying.insert(t);
  }

  ComponentView view;
  for (ThimacId t : qualifying) view.nodes.push_back(t);
  std::sort(view.nodes.begin(), view.nodes.end(),
            [&](ThimacId a, ThimacId b) {
              return model.thimac_path(a) < model.thimac_path(b);
            });

  // Lift each arc to the nearest distinct sibling-level ancestors of its
  // endpoint owners. Arcs within one owner chain induce no edge.
  std::map<std::pair<ThimacId, ThimacId>, ComponentEdge> edges;
  for (const auto& [aid, a] : model.arcs()) {
    if (!model.has_stage(a.src) || !model.has_stage(a.dst)) continue;
    std::vector<ThimacId> src_chain =
        model.ancestor_chain(model.stage(a.src).owner);
    std::vector<ThimacId> dst_chain =
        model.ancestor_chain(model.stage(a.dst).owner);
    size_t i = 0;
    while (i < src_chain.size() && i < dst_chain.size() &&
           src_chain[i] == dst_chain[i]) {
      ++i;
    }
    if (i >= src_chain.size() || i >= dst_chain.size()) continue;
    ThimacId x = src_chain[i];
    ThimacId y = dst_chain[i];
    if (model.thimac_path(y) < model.thimac_path(x)) std::swap(x, y);
    ComponentEdge& e = edges[{x, y}];
    e.a = x;
    e.b = y;
    if (a.kind == ArcKind::flow) e.via_flow = true;
    if (a.kind == ArcKind::trigger) e.via_trigger = true;
  }
  for (auto& [key, e] : edges) view.edges.push_back(e);
  std::sort(view.edges.begin(), view.edges.end(),
            [&](const ComponentEdge& l, const ComponentEdge& r) {
              return std::make_pair(model.thimac_path(l.a),
                                    model.thimac_path(l.b)) <
                     std::make_pair(model.thimac_path(r.a),
                                    model.thimac_path(r.b));
            });
  return view;
}

}  // namespace tmk
