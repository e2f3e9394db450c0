#include "tmk/exporters.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "json.hpp"

namespace tmk {
namespace {

std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

void dot_thimac(const StaticModel& model, ThimacId id, int depth,
                std::string& out) {
  std::string indent(static_cast<size_t>(depth) * 2, ' ');
  const Thimac& t = model.thimac(id);
  std::string path = model.thimac_path(id);
  out += indent + "subgraph " + dot_quote("cluster_" + path) + " {\n";
  out += indent + "  label=" + dot_quote(t.name) + ";\n";
  std::vector<StageKind> kinds;
  for (StageId s : t.stages) kinds.push_back(model.stage(s).kind);
  std::sort(kinds.begin(), kinds.end());
  for (StageKind k : kinds) {
    out += indent + "  " + dot_quote(path + "." + stage_kind_name(k)) +
           " [shape=box, label=" + dot_quote(stage_kind_name(k)) + "];\n";
  }
  std::vector<ThimacId> children = t.children;
  std::sort(children.begin(), children.end(), [&](ThimacId a, ThimacId b) {
    return model.thimac(a).name < model.thimac(b).name;
  });
  for (ThimacId c : children) dot_thimac(model, c, depth + 1, out);
  out += indent + "}\n";
}

std::string dot_model(const StaticModel& model, const ExportOptions& options) {
  std::string out = "digraph model {\n";
  std::vector<ThimacId> roots = model.roots();
  std::sort(roots.begin(), roots.end(), [&](ThimacId a, ThimacId b) {
    return model.thimac(a).name < model.thimac(b).name;
  });
  for (ThimacId r : roots) dot_thimac(model, r, 1, out);

  std::vector<std::tuple<int, std::string, std::string, const ArcEdge*>> arcs;
  for (const auto& [id, a] : model.arcs()) {
    arcs.emplace_back(static_cast<int>(a.kind), model.stage_ref(a.src),
                      model.stage_ref(a.dst), &a);
  }
  std::sort(arcs.begin(), arcs.end(),
            [](const auto& l, const auto& r) {
              return std::tie(std::get<0>(l), std::get<1>(l), std::get<2>(l)) <
                     std::tie(std::get<0>(r), std::get<1>(r), std::get<2>(r));
            });
  for (const auto& [kind, src, dst, arc] : arcs) {
    out += "  " + dot_quote(src) + " -> " + dot_quote(dst);
    std::vector<std::string> attrs;
    if (arc->kind == ArcKind::trigger) attrs.push_back("style=dashed");
    if (options.include_labels && arc->label) {
      attrs.push_back("label=" + dot_quote(*arc->label));
    }
    if (!attrs.empty()) {
      out += " [";
      for (size_t i = 0; i < attrs.size(); ++i) {
        if (i > 0) out += ", ";
        out += attrs[i];
      }
      out += "]";
    }
    out += ";\n";
  }
  out += "}\n";
  return out;
}

std::string dot_components(const StaticModel& model) {
  ComponentView view = extract_components(model);
  std::string out = "graph components {\n";
  std::set<ThimacId> top;
  for (ThimacId id : view.nodes) {
    if (!model.thimac(id).parent) {
      top.insert(id);
      out += "  " + dot_quote(model.thimac(id).name) + ";\n";
    }
  }
  for (const ComponentEdge& e : view.edges) {
    if (!top.count(e.a) || !top.count(e.b)) continue;
    out += "  " + dot_quote(model.thimac(e.a).name) + " -- " +
           dot_quote(model.thimac(e.b).name);
    if (e.via_trigger && !e.via_flow) out += " [style=dashed]";
    out += ";\n";
  }
  out += "}\n";
  return out;
}

std::string dot_behavior(const std::vector<EventDef>& events,
                         const std::optional<BehaviorGraph>& behavior,
                         const ExportOptions& options) {
  std::string out = "digraph behavior {\n";
  if (!behavior) {
    out += "}\n";
    return out;
  }
  std::map<EventId, std::string> names;
  for (const EventDef& e : events) names[e.id] = e.name;
  auto name_of = [&](EventId id) {
    auto it = names.find(id);
    return it == names.end() ? "#" + std::to_string(id.value) : it->second;
  };
  std::set<EventId> initial;
  for (EventId id : initial_events(*behavior)) initial.insert(id);
  for (EventId id : behavior->nodes) {
    out += "  " + dot_quote(name_of(id)) + " [shape=ellipse";
    if (initial.count(id)) out += ", peripheries=2";
    out += "];\n";
  }
  std::vector<std::tuple<std::string, std::string, std::string, bool>> edges;
  for (const BehaviorEdge& e : behavior->edges) {
    edges.emplace_back(name_of(e.from), name_of(e.to), e.label.value_or(""),
                       e.label.has_value());
  }
  std::sort(edges.begin(), edges.end());
  for (const auto& [from, to, label, has_label] : edges) {
    out += "  " + dot_quote(from) + " -> " + dot_quote(to);
    if (options.include_labels && has_label) {
      out += " [label=" + dot_quote(label) + "]";
    }
    out += ";\n";
  }
  out += "}\n";
  return out;
}

}  // namespace

std::string to_dot(const StaticModel& model, const std::vector<EventDef>& events,
                   const std::optional<BehaviorGraph>& behavior,
                   const ExportOptions& options) {
  switch (options.flavor) {
    case DotFlavor::model: return dot_model(model, options);
    case DotFlavor::components: return dot_components(model);
    case DotFlavor::behavior: return dot_behavior(events, behavior, options);
  }
  return "";
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

using Json = nlohmann::ordered_json;

void collect_thimacs(const StaticModel& model, ThimacId id, Json& out) {
  const Thimac& t = model.thimac(id);
  Json entry;
  entry["path"] = model.thimac_path(id);
  entry["attributes"] = Json::array();
  for (const Attribute& a : t.attributes) {
    entry["attributes"].push_back({{"name", a.name}, {"value", a.value}});
  }
  entry["stages"] = Json::array();
  for (StageId s : t.stages) {
    Json stage;
    stage["kind"] = stage_kind_name(model.stage(s).kind);
    if (model.stage(s).note) stage["note"] = *model.stage(s).note;
    entry["stages"].push_back(std::move(stage));
  }
  out.push_back(std::move(entry));
  for (ThimacId c : t.children) collect_thimacs(model, c, out);
}

}  // namespace

std::string to_json(const StaticModel& model, const std::vector<EventDef>& events,
                    const std::optional<BehaviorGraph>& behavior) {
  Json doc;
  doc["version"] = 1;
  doc["profile"] = profile_name(model.profile());
  doc["thimacs"] = Json::array();
  for (ThimacId r : model.roots()) collect_thimacs(model, r, doc["thimacs"]);

  doc["arcs"] = Json::array();
  for (const auto& [id, a] : model.arcs()) {
    Json arc;
    arc["kind"] = arc_kind_name(a.kind);
    arc["src"] = model.stage_ref(a.src);
    arc["dst"] = model.stage_ref(a.dst);
    if (a.label) arc["label"] = *a.label;
    doc["arcs"].push_back(std::move(arc));
  }

  doc["events"] = Json::array();
  for (const EventDef& e : events) {
    Json ev;
    ev["name"] = e.name;
    if (e.description) ev["description"] = *e.description;
    ev["stages"] = Json::array();
    std::vector<std::string> stage_paths;
    for (StageId s : e.stages) stage_paths.push_back(model.stage_path(s));
    std::sort(stage_paths.begin(), stage_paths.end());
    for (const std::string& p : stage_paths) ev["stages"].push_back(p);
    ev["arcs"] = Json::array();
    std::vector<std::tuple<int, std::string, std::string>> arcs;
    for (ArcId a : e.arcs) {
      const ArcEdge& arc = model.arc(a);
      arcs.emplace_back(static_cast<int>(arc.kind), model.stage_ref(arc.src),
                        model.stage_ref(arc.dst));
    }
    std::sort(arcs.begin(), arcs.end());
    for (const auto& [kind, src, dst] : arcs) {
      ev["arcs"].push_back({{"kind", arc_kind_name(static_cast<ArcKind>(kind))},
                            {"src", src},
                            {"dst", dst}});
    }
    doc["events"].push_back(std::move(ev));
  }

  if (behavior) {
    Json edges = Json::array();
    for (const BehaviorEdge& e : behavior->edges) {
      std::map<EventId, std::string> names;
      for (const EventDef& ev : events) names[ev.id] = ev.name;
      Json edge;
      edge["from"] = names.at(e.from);
      edge["to"] = names.at(e.to);
      if (e.label) edge["label"] = *e.label;
      edges.push_back(std::move(edge));
    }
    doc["behavior"] = {{"edges", std::move(edges)}};
  }

  return doc.dump(2) + "\n";
}

namespace {

[[noreturn]] void schema_fail(const std::string& pointer,
                              const std::string& message) {
  throw SchemaError(pointer, message + " (at " + pointer + ")");
}

const Json& require(const Json& obj, const std::string& pointer,
                    const char* key, Json::value_t type,
                    const char* type_name) {
  if (!obj.contains(key)) {
    schema_fail(pointer + "/" + key, std::string("missing '") + key + "'");
  }
  const Json& value = obj.at(key);
  bool ok = value.type() == type ||
            (type == Json::value_t::number_integer &&
             value.type() == Json::value_t::number_unsigned);
  if (!ok) {
    schema_fail(pointer + "/" + key,
                std::string("'") + key + "' must be " + type_name);
  }
  return value;
}

void reject_unknown(const Json& obj, const std::string& pointer,
                    std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) {
      if (key == a) {
        ok = true;
        break;
      }
    }
    if (!ok) schema_fail(pointer + "/" + key, "unknown key '" + key + "'");
  }
}

std::vector<std::string> split_dotted(const std::string& path) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t dot = path.find('.', start);
    if (dot == std::string::npos) {
      out.push_back(path.substr(start));
      return out;
    }
    out.push_back(path.substr(start, dot - start));
    start = dot + 1;
  }
}

}  // namespace

Document from_json(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    schema_fail("", std::string("not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) schema_fail("", "the document must be an object");
  reject_unknown(doc, "",
                 {"version", "profile", "thimacs", "arcs", "events",
                  "behavior"});

  const Json& version = require(doc, "", "version",
                                Json::value_t::number_integer, "an integer");
  if (version.get<int>() != 1) {
    schema_fail("/version", "unsupported version " + version.dump());
  }
  const Json& profile_value =
      require(doc, "", "profile", Json::value_t::string, "a string");
  auto profile = profile_from_name(profile_value.get<std::string>());
  if (!profile) {
    schema_fail("/profile", "unknown profile " + profile_value.dump());
  }

  Document result;
  result.model = StaticModel(*profile);
  StaticModel& model = result.model;

  std::map<std::string, ThimacId> thimac_by_path;
  std::map<std::string, ThimacId> phantom_thimacs;
  std::map<std::string, StageId> stage_by_path;

  if (doc.contains("thimacs")) {
    const Json& thimacs = doc.at("thimacs");
    if (!thimacs.is_array()) schema_fail("/thimacs", "'thimacs' must be an array");
    for (size_t i = 0; i < thimacs.size(); ++i) {
      std::string ptr = "/thimacs/" + std::to_string(i);
      const Json& entry = thimacs[i];
      if (!entry.is_object()) schema_fail(ptr, "each thimac must be an object");
      reject_unknown(entry, ptr, {"path", "attributes", "stages"});
      std::string path =
          require(entry, ptr, "path", Json::value_t::string, "a string")
              .get<std::string>();
      std::vector<std::string> segments = split_dotted(path);
      for (const std::string& seg : segments) {
        if (!is_valid_name(seg)) {
          schema_fail(ptr + "/path", "'" + seg + "' is not a legal name");
        }
      }
      if (thimac_by_path.count(path)) {
        schema_fail(ptr + "/path", "duplicate thimac path '" + path + "'");
      }
      std::vector<Attribute> attrs;
      if (entry.contains("attributes")) {
        const Json& list = entry.at("attributes");
        if (!list.is_array()) {
          schema_fail(ptr + "/attributes", "'attributes' must be an array");
        }
        for (size_t j = 0; j < list.size(); ++j) {
          std::string aptr = ptr + "/attributes/" + std::to_string(j);
          const Json& attr = list[j];
          if (!attr.is_object()) schema_fail(aptr, "each attribute must be an object");
          reject_unknown(attr, aptr, {"name", "value"});
          std::string name =
              require(attr, aptr, "name", Json::value_t::string, "a string")
                  .get<std::string>();
          std::string value =
              require(attr, aptr, "value", Json::value_t::string, "a string")
                  .get<std::string>();
          if (!is_valid_name(name)) {
            schema_fail(aptr + "/name", "'" + name + "' is not a legal name");
          }
          attrs.push_back({std::move(name), std::move(value)});
        }
      }

      std::optional<ThimacId> parent;
      if (segments.size() > 1) {
        std::string parent_path =
            path.substr(0, path.size() - segments.back().size() - 1);
        auto found = thimac_by_path.find(parent_path);
        if (found != thimac_by_path.end()) {
          parent = found->second;
        } else {
          // Keep the entry loadable; the validator reports the dangling
          // parent reference.
          auto [it, inserted] = phantom_thimacs.try_emplace(parent_path);
          if (inserted) it->second = model.note_unresolved_thimac(parent_path);
          parent = it->second;
        }
      }
      ThimacId id;
      if (!parent || model.has_thimac(*parent)) {
        try {
          id = model.add_thimac(segments.back(), parent, std::move(attrs));
        } catch (const BuildError& e) {
          schema_fail(ptr + "/path", e.what());
        }
      } else {
        id = model.add_thimac_unchecked(segments.back(), parent,
                                        std::move(attrs));
      }
      thimac_by_path.emplace(path, id);

      if (entry.contains("stages")) {
        const Json& list = entry.at("stages");
        if (!list.is_array()) {
          schema_fail(ptr + "/stages", "'stages' must be an array");
        }
        for (size_t j = 0; j < list.size(); ++j) {
          std::string sptr = ptr + "/stages/" + std::to_string(j);
          const Json& stage = list[j];
          if (!stage.is_object()) schema_fail(sptr, "each stage must be an object");
          reject_unknown(stage, sptr, {"kind", "note"});
          std::string kind_name =
              require(stage, sptr, "kind", Json::value_t::string, "a string")
                  .get<std::string>();
          auto kind = stage_kind_from_name(kind_name);
          if (!kind) {
            schema_fail(sptr + "/kind", "unknown stage kind '" + kind_name + "'");
          }
          if (!stage_kind_in_profile(*kind, *profile)) {
            schema_fail(sptr + "/kind", "stage kind '" + kind_name +
                                            "' is not available in the " +
                                            profile_name(*profile) +
                                            " profile");
          }
          std::optional<std::string> note;
          if (stage.contains("note")) {
            if (!stage.at("note").is_string()) {
              schema_fail(sptr + "/note", "'note' must be a string");
            }
            note = stage.at("note").get<std::string>();
          }
          // Duplicate kinds are stored as-is so the validator can report
          // them; path lookup keeps the first.
          StageId sid = model.add_stage_unchecked(id, *kind, std::move(note));
          stage_by_path.try_emplace(path + "." + kind_name, sid);
        }
      }
    }
  }

  std::map<std::string, StageId> phantom_stages;
  auto stage_for = [&](const std::string& path) {
    auto found = stage_by_path.find(path);
    if (found != stage_by_path.end()) return found->second;
    auto [it, inserted] = phantom_stages.try_emplace(path);
    if (inserted) it->second = model.note_unresolved_stage(path);
    return it->second;
  };

  std::map<std::tuple<int, std::string, std::string>, ArcId> arc_by_key;
  if (doc.contains("arcs")) {
    const Json& arcs = doc.at("arcs");
    if (!arcs.is_array()) schema_fail("/arcs", "'arcs' must be an array");
    for (size_t i = 0; i < arcs.size(); ++i) {
      std::string ptr = "/arcs/" + std::to_string(i);
      const Json& entry = arcs[i];
      if (!entry.is_object()) schema_fail(ptr, "each arc must be an object");
      reject_unknown(entry, ptr, {"kind", "src", "dst", "label"});
      std::string kind_name =
          require(entry, ptr, "kind", Json::value_t::string, "a string")
              .get<std::string>();
      ArcKind kind;
      if (kind_name == "flow") {
        kind = ArcKind::flow;
      } else if (kind_name == "trigger") {
        kind = ArcKind::trigger;
      } else {
        schema_fail(ptr + "/kind", "arc kind must be 'flow' or 'trigger'");
      }
      std::string src =
          require(entry, ptr, "src", Json::value_t::string, "a string")
              .get<std::string>();
      std::string dst =
          require(entry, ptr, "dst", Json::value_t::string, "a string")
              .get<std::string>();
      if (src == dst) {
        schema_fail(ptr, "arc source and destination are the same stage");
      }
      std::optional<std::string> label;
      if (entry.contains("label")) {
        if (!entry.at("label").is_string()) {
          schema_fail(ptr + "/label", "'label' must be a string");
        }
        label = entry.at("label").get<std::string>();
      }
      auto key = std::make_tuple(static_cast<int>(kind), src, dst);
      if (arc_by_key.count(key)) {
        schema_fail(ptr, "duplicate " + kind_name + " arc " + src + "->" + dst);
      }
      ArcId id = model.add_arc_unchecked(kind, stage_for(src), stage_for(dst),
                                         std::move(label));
      arc_by_key.emplace(key, id);
    }
  }

  if (doc.contains("events")) {
    const Json& events = doc.at("events");
    if (!events.is_array()) schema_fail("/events", "'events' must be an array");
    for (size_t i = 0; i < events.size(); ++i) {
      std::string ptr = "/events/" + std::to_string(i);
      const Json& entry = events[i];
      if (!entry.is_object()) schema_fail(ptr, "each event must be an object");
      reject_unknown(entry, ptr, {"name", "description", "stages", "arcs"});
      std::string name =
          require(entry, ptr, "name", Json::value_t::string, "a string")
              .get<std::string>();
      std::optional<std::string> description;
      if (entry.contains("description")) {
        if (!entry.at("description").is_string()) {
          schema_fail(ptr + "/description", "'description' must be a string");
        }
        description = entry.at("description").get<std::string>();
      }
      std::vector<MemberRef> members;
      if (entry.contains("stages")) {
        const Json& list = entry.at("stages");
        if (!list.is_array()) {
          schema_fail(ptr + "/stages", "'stages' must be an array");
        }
        for (size_t j = 0; j < list.size(); ++j) {
          std::string sptr = ptr + "/stages/" + std::to_string(j);
          if (!list[j].is_string()) schema_fail(sptr, "stage refs must be strings");
          std::string path = list[j].get<std::string>();
          auto found = stage_by_path.find(path);
          if (found == stage_by_path.end()) {
            schema_fail(sptr, "event references unknown stage '" + path + "'");
          }
          members.push_back(found->second);
        }
      }
      if (entry.contains("arcs")) {
        const Json& list = entry.at("arcs");
        if (!list.is_array()) schema_fail(ptr + "/arcs", "'arcs' must be an array");
        for (size_t j = 0; j < list.size(); ++j) {
          std::string aptr = ptr + "/arcs/" + std::to_string(j);
          const Json& arc = list[j];
          if (!arc.is_object()) schema_fail(aptr, "each arc ref must be an object");
          reject_unknown(arc, aptr, {"kind", "src", "dst"});
          std::string kind_name =
              require(arc, aptr, "kind", Json::value_t::string, "a string")
                  .get<std::string>();
          int kind;
          if (kind_name == "flow") {
            kind = static_cast<int>(ArcKind::flow);
          } else if (kind_name == "trigger") {
            kind = static_cast<int>(ArcKind::trigger);
          } else {
            schema_fail(aptr + "/kind", "arc kind must be 'flow' or 'trigger'");
          }
          std::string src =
              require(arc, aptr, "src", Json::value_t::string, "a string")
                  .get<std::string>();
          std::string dst =
              require(arc, aptr, "dst", Json::value_t::string, "a string")
                  .get<std::string>();
          auto found = arc_by_key.find({kind, src, dst});
          if (found == arc_by_key.end()) {
            schema_fail(aptr, "event references unknown " + kind_name +
                                  " arc " + src + "->" + dst);
          }
          members.push_back(found->second);
        }
      }
      try {
        attach_event(model, result.events, name, members, description);
      } catch (const BuildError& e) {
        schema_fail(ptr, e.what());
      }
    }
  }

  if (doc.contains("behavior")) {
    const Json& behavior = doc.at("behavior");
    if (!behavior.is_object()) {
      schema_fail("/behavior", "'behavior' must be an object");
    }
    reject_unknown(behavior, "/behavior", {"edges"});
    std::vector<BehaviorEdgeSpec> specs;
    if (behavior.contains("edges")) {
      const Json& edges = behavior.at("edges");
      if (!edges.is_array()) {
        schema_fail("/behavior/edges", "'edges' must be an array");
      }
      for (size_t i = 0; i < edges.size(); ++i) {
        std::string ptr = "/behavior/edges/" + std::to_string(i);
        const Json& edge = edges[i];
        if (!edge.is_object()) schema_fail(ptr, "each edge must be an object");
        reject_unknown(edge, ptr, {"from", "to", "label"});
        BehaviorEdgeSpec spec;
        spec.from = require(edge, ptr, "from", Json::value_t::string, "a string")
                        .get<std::string>();
        spec.to = require(edge, ptr, "to", Json::value_t::string, "a string")
                      .get<std::string>();
        if (edge.contains("label")) {
          if (!edge.at("label").is_string()) {
            schema_fail(ptr + "/label", "'label' must be a string");
          }
          spec.label = edge.at("label").get<std::string>();
        }
        specs.push_back(std::move(spec));
      }
    }
    try {
      result.behavior = build_behavior(result.events, specs, nullptr);
    } catch (const BuildError& e) {
      schema_fail("/behavior/edges", e.what());
    }
  }

  return result;
}

}  // namespace tmk
