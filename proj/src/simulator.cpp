#include "tmk/simulator.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>

#include "tmk/validator.hpp"
#include "json.hpp"

namespace tmk {

namespace {

std::string json_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
        break;
    }
  }
  return out;
}

}  // namespace

const char* record_kind_name(RecordKind kind) {
  switch (kind) {
    case RecordKind::inject: return "inject";
    case RecordKind::spawn: return "spawn";
    case RecordKind::move: return "move";
    case RecordKind::trigger: return "trigger";
    case RecordKind::terminate: return "terminate";
    case RecordKind::event: return "event";
  }
  return "?";
}

Scenario scenario_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SimError(SimErrc::invalid_scenario,
                   std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    throw SimError(SimErrc::invalid_scenario, "scenario must be an object");
  }
  Scenario scenario;
  for (const auto& [key, value] : doc.items()) {
    if (key == "injections") {
      if (!value.is_array()) {
        throw SimError(SimErrc::invalid_scenario,
                       "'injections' must be an array");
      }
      for (const auto& item : value) {
        if (!item.is_object() || !item.contains("tick") ||
            !item.contains("stage") || !item["tick"].is_number_integer() ||
            !item["stage"].is_string()) {
          throw SimError(SimErrc::invalid_scenario,
                         "each injection needs an integer 'tick' and a "
                         "string 'stage'");
        }
        Scenario::Injection inj;
        inj.tick = item["tick"].get<int>();
        inj.stage = item["stage"].get<std::string>();
        if (inj.tick < 0) {
          throw SimError(SimErrc::invalid_scenario,
                         "injection ticks must be non-negative");
        }
        if (item.contains("thing")) {
          if (!item["thing"].is_string()) {
            throw SimError(SimErrc::invalid_scenario,
                           "injection 'thing' must be a string");
          }
          inj.thing = item["thing"].get<std::string>();
        }
        for (const auto& [k, v] : item.items()) {
          if (k != "tick" && k != "stage" && k != "thing") {
            throw SimError(SimErrc::invalid_scenario,
                           "unknown injection key '" + k + "'");
          }
        }
        scenario.injections.push_back(std::move(inj));
      }
    } else if (key == "choices") {
      if (!value.is_object()) {
        throw SimError(SimErrc::invalid_scenario,
                       "'choices' must map stage paths to label lists");
      }
      for (const auto& [stage, labels] : value.items()) {
        if (!labels.is_array()) {
          throw SimError(SimErrc::invalid_scenario,
                         "choice lists must be arrays of labels");
        }
        std::vector<std::string> list;
        for (const auto& l : labels) {
          if (!l.is_string()) {
            throw SimError(SimErrc::invalid_scenario,
                           "choice labels must be strings");
          }
          list.push_back(l.get<std::string>());
        }
        scenario.choices[stage] = std::move(list);
      }
    } else if (key == "max_ticks") {
      if (!value.is_number_integer() || value.get<int>() < 1) {
        throw SimError(SimErrc::invalid_scenario,
                       "'max_ticks' must be a positive integer");
      }
      scenario.max_ticks = value.get<int>();
    } else {
      throw SimError(SimErrc::invalid_scenario,
                     "unknown scenario key '" + key + "'");
    }
  }
  return scenario;
}

namespace {

struct LiveToken {
  int id = 0;
  StageId stage;
};

struct PendingSpawn {
  int tick = 0;
  StageId stage;
};

// Outgoing flow arcs of a stage, sorted by destination path so that the
// fallback choice (and label ties) resolve deterministically.
std::vector<const ArcEdge*> outgoing_flows(const StaticModel& model,
                                           StageId src) {
  std::vector<const ArcEdge*> out;
  for (const auto& [id, arc] : model.arcs()) {
    if (arc.kind == ArcKind::flow && arc.src == src) out.push_back(&arc);
  }
  std::sort(out.begin(), out.end(),
            [&](const ArcEdge* a, const ArcEdge* b) {
              return model.stage_path(a->dst) < model.stage_path(b->dst);
            });
  return out;
}

}  // namespace

Trace run_scenario(const StaticModel& model, const std::vector<EventDef>& events,
                   const Scenario& scenario) {
  {
    std::vector<Diagnostic> diags = validate_model(model);
    if (has_errors(diags)) {
      std::string msg = "the model does not validate:";
      for (const Diagnostic& d : diags) {
        if (d.severity == Severity::error) msg += "\n  " + render_diagnostic(d);
      }
      throw SimError(SimErrc::validation_failed, msg);
    }
  }

  // Resolve scenario references before anything runs.
  struct ResolvedInjection {
    int tick;
    StageId stage;
  };
  std::vector<ResolvedInjection> injections;
  for (const Scenario::Injection& inj : scenario.injections) {
    auto stage = model.resolve_stage(inj.stage);
    if (!stage) {
      throw SimError(SimErrc::invalid_scenario,
                     "injection targets unknown stage '" + inj.stage + "'");
    }
    StageKind kind = model.stage(*stage).kind;
    if (kind != StageKind::create && kind != StageKind::transfer) {
      throw SimError(SimErrc::invalid_scenario,
                     "injection stage '" + inj.stage +
                         "' must be a create or transfer stage");
    }
    injections.push_back({inj.tick, *stage});
  }
  struct ChoiceState {
    std::vector<std::string> labels;
    size_t next = 0;
  };
  std::map<StageId, ChoiceState> choices;
  for (const auto& [path, labels] : scenario.choices) {
    auto stage = model.resolve_stage(path);
    if (!stage) {
      throw SimError(SimErrc::invalid_scenario,
                     "choice list targets unknown stage '" + path + "'");
    }
    choices[*stage].labels = labels;
  }

  // Trigger arcs grouped by source stage.
  std::map<StageId, std::vector<const ArcEdge*>> triggers_from;
  for (const auto& [id, arc] : model.arcs()) {
    if (arc.kind == ArcKind::trigger) triggers_from[arc.src].push_back(&arc);
  }

  // Per-event membership lookups for activation detection.
  struct EventNeeds {
    EventId id;
    std::set<ArcId> arcs;
    std::set<StageId> create_stages;
    std::set<StageId> receive_stages;
  };
  std::vector<EventNeeds> needs;
  for (const EventDef& e : events) {
    EventNeeds n;
    n.id = e.id;
    n.arcs = e.arcs;
    for (StageId s : e.stages) {
      StageKind k = model.stage(s).kind;
      if (k == StageKind::create) n.create_stages.insert(s);
      if (k == StageKind::receive) n.receive_stages.insert(s);
    }
    needs.push_back(std::move(n));
  }
  std::map<EventId, std::string> event_names;
  for (const EventDef& e : events) event_names[e.id] = e.name;

  Trace trace;
  std::map<int, LiveToken> live;
  std::deque<PendingSpawn> pending;
  int next_token = 1;

  auto last_injection_tick = [&]() {
    int last = -1;
    for (const ResolvedInjection& inj : injections) {
      last = std::max(last, inj.tick);
    }
    return last;
  }();

  for (int tick = 0; tick < scenario.max_ticks; ++tick) {
    // Token ids present before this tick's materializations advance below.
    std::vector<int> movers;
    for (const auto& [id, tok] : live) movers.push_back(id);

    std::set<ArcId> moved_arcs;       // flow arcs that carried a token
    std::set<ArcId> fired_arcs;       // trigger arcs that fired
    std::set<StageId> fed_stages;     // inject/spawn targets
    std::set<StageId> arrival_stages; // every stage that received a token
    std::vector<StageId> arrivals;    // one entry per arriving token

    auto place_token = [&](StageId stage, RecordKind kind) {
      int id = next_token++;
      live[id] = {id, stage};
      TraceRecord rec;
      rec.tick = tick;
      rec.kind = kind;
      rec.token = id;
      rec.stage = stage;
      trace.records.push_back(rec);
      fed_stages.insert(stage);
      arrival_stages.insert(stage);
      arrivals.push_back(stage);
    };

    // (a) materialize spawns scheduled for this tick
    while (!pending.empty() && pending.front().tick == tick) {
      place_token(pending.front().stage, RecordKind::spawn);
      pending.pop_front();
    }

    // (b) injections due this tick, in declaration order
    for (const ResolvedInjection& inj : injections) {
      if (inj.tick == tick) place_token(inj.stage, RecordKind::inject);
    }

    // (c) advance every token that was live when the tick began
    for (int id : movers) {
      auto it = live.find(id);
      if (it == live.end()) continue;
      StageId at = it->second.stage;
      std::vector<const ArcEdge*> outs = outgoing_flows(model, at);
      if (outs.empty()) {
        TraceRecord rec;
        rec.tick = tick;
        rec.kind = RecordKind::terminate;
        rec.token = id;
        rec.stage = at;
        trace.records.push_back(rec);
        live.erase(it);
        continue;
      }
      const ArcEdge* chosen = nullptr;
      auto choice = choices.find(at);
      if (choice != choices.end() &&
          choice->second.next < choice->second.labels.size()) {
        const std::string& want = choice->second.labels[choice->second.next++];
        for (const ArcEdge* arc : outs) {
          if (arc->label && *arc->label == want) {
            chosen = arc;
            break;
          }
        }
        if (!chosen) {
          throw SimError(SimErrc::invalid_scenario,
                         "no outgoing flow labelled '" + want + "' at '" +
                             model.stage_path(at) + "'");
        }
      } else {
        chosen = outs.front();
      }
      TraceRecord rec;
      rec.tick = tick;
      rec.kind = RecordKind::move;
      rec.token = id;
      rec.arc = chosen->id;
      trace.records.push_back(rec);
      it->second.stage = chosen->dst;
      moved_arcs.insert(chosen->id);
      arrival_stages.insert(chosen->dst);
      arrivals.push_back(chosen->dst);
    }

    // (d) triggers fire once per arrival at their source stage
    struct Firing {
      const ArcEdge* arc;
      std::string dst_path;
      std::string src_path;
    };
    std::vector<Firing> firings;
    for (StageId s : arrivals) {
      auto it = triggers_from.find(s);
      if (it == triggers_from.end()) continue;
      for (const ArcEdge* arc : it->second) {
        firings.push_back(
            {arc, model.stage_path(arc->dst), model.stage_path(arc->src)});
      }
    }
    std::sort(firings.begin(), firings.end(),
              [](const Firing& a, const Firing& b) {
                return std::tie(a.dst_path, a.src_path) <
                       std::tie(b.dst_path, b.src_path);
              });
    for (const Firing& f : firings) {
      TraceRecord rec;
      rec.tick = tick;
      rec.kind = RecordKind::trigger;
      rec.arc = f.arc->id;
      trace.records.push_back(rec);
      fired_arcs.insert(f.arc->id);
      if (f.arc->label && *f.arc->label == "stop") {
        // A stop trigger halts the destination thimac: every token inside
        // the destination stage's owner subtree terminates now.
        ThimacId owner = model.stage(f.arc->dst).owner;
        std::vector<int> victims;
        for (const auto& [id, tok] : live) {
          if (model.in_subtree(model.stage(tok.stage).owner, owner)) {
            victims.push_back(id);
          }
        }
        for (int id : victims) {
          TraceRecord t;
          t.tick = tick;
          t.kind = RecordKind::terminate;
          t.token = id;
          t.stage = live[id].stage;
          trace.records.push_back(t);
          live.erase(id);
        }
      } else {
        pending.push_back({tick + 1, f.arc->dst});
      }
    }
    std::stable_sort(pending.begin(), pending.end(),
                     [](const PendingSpawn& a, const PendingSpawn& b) {
                       return a.tick < b.tick;
                     });

    // (e) event activations for this tick, in event order
    for (const EventNeeds& n : needs) {
      bool active = false;
      for (ArcId a : n.arcs) {
        if (moved_arcs.count(a) || fired_arcs.count(a)) {
          active = true;
          break;
        }
      }
      if (!active) {
        for (StageId s : n.create_stages) {
          if (fed_stages.count(s)) {
            active = true;
            break;
          }
        }
      }
      if (!active) {
        for (StageId s : n.receive_stages) {
          if (arrival_stages.count(s)) {
            active = true;
            break;
          }
        }
      }
      if (!active) continue;
      TraceRecord rec;
      rec.tick = tick;
      rec.kind = RecordKind::event;
      rec.event = n.id;
      trace.records.push_back(rec);
      auto it = trace.first_activation.find(n.id);
      if (it == trace.first_activation.end()) {
        trace.first_activation[n.id] = tick;
      }
    }

    bool future_injections = tick < last_injection_tick;
    if (live.empty() && pending.empty() && !future_injections) break;
  }

  return trace;
}

std::string trace_to_jsonl(const Trace& trace, const StaticModel& model,
                           const std::vector<EventDef>& events) {
  std::map<EventId, std::string> event_names;
  for (const EventDef& e : events) event_names[e.id] = e.name;
  std::string out;
  for (const TraceRecord& rec : trace.records) {
    out += "{\"tick\":" + std::to_string(rec.tick);
    out += ",\"kind\":\"";
    out += record_kind_name(rec.kind);
    out += "\"";
    if (rec.token) {
      out += ",\"token\":" + std::to_string(*rec.token);
    }
    if (rec.arc) {
      out += ",\"arc\":\"" + json_escape(model.arc_ref(*rec.arc)) + "\"";
    }
    if (rec.stage) {
      out += ",\"stage\":\"" + json_escape(model.stage_path(*rec.stage)) + "\"";
    }
    if (rec.event) {
      out += ",\"event\":\"" + json_escape(event_names.at(*rec.event)) + "\"";
    }
    out += "}\n";
  }
  return out;
}

std::vector<Diagnostic> check_trace_conformance(
    const Trace& trace, const BehaviorGraph& behavior,
    const std::vector<EventDef>& events) {
  std::map<EventId, std::string> names;
  for (const EventDef& e : events) names[e.id] = e.name;
  auto name_of = [&](EventId id) {
    auto it = names.find(id);
    return it == names.end() ? "#" + std::to_string(id.value) : it->second;
  };

  // Edges inside a strongly connected component describe a repeatable loop,
  // not a one-shot ordering, so they are exempt from order checking.
  std::map<EventId, size_t> comp;
  {
    auto sccs = strongly_connected_components(behavior);
    for (size_t i = 0; i < sccs.size(); ++i) {
      for (EventId id : sccs[i]) comp[id] = i;
    }
  }

  std::vector<Diagnostic> out;
  const auto& first = trace.first_activation;
  auto activated = [&](EventId id) { return first.count(id) != 0; };

  std::vector<EventId> initials = initial_events(behavior);

  for (const BehaviorEdge& edge : behavior.edges) {
    if (comp.count(edge.from) && comp.count(edge.to) &&
        comp.at(edge.from) == comp.at(edge.to)) {
      continue;
    }
    if (activated(edge.from) && activated(edge.to)) {
      int fa = first.at(edge.from);
      int fb = first.at(edge.to);
      if (fa > fb) {
        out.push_back({Severity::error, "E-BEHAVIOR-ORDER",
                       name_of(edge.from) + "->" + name_of(edge.to),
                       "'" + name_of(edge.to) + "' first activated at tick " +
                           std::to_string(fb) + ", before '" +
                           name_of(edge.from) + "' at tick " +
                           std::to_string(fa),
                       std::nullopt});
      }
    } else if (activated(edge.to) && !activated(edge.from)) {
      // The upstream event never ran.  That is only a violation when every
      // chronology path into the downstream event passes through it.
      std::map<EventId, std::vector<EventId>> adj;
      for (const BehaviorEdge& e : behavior.edges) {
        if (e.from == edge.from || e.to == edge.from) continue;
        adj[e.from].push_back(e.to);
      }
      std::set<EventId> seen;
      std::vector<EventId> queue;
      for (EventId n : initials) {
        if (n != edge.from && seen.insert(n).second) queue.push_back(n);
      }
      while (!queue.empty()) {
        EventId n = queue.back();
        queue.pop_back();
        for (EventId m : adj[n]) {
          if (seen.insert(m).second) queue.push_back(m);
        }
      }
      if (!seen.count(edge.to)) {
        out.push_back({Severity::error, "E-BEHAVIOR-SKIP",
                       name_of(edge.from) + "->" + name_of(edge.to),
                       "'" + name_of(edge.to) + "' activated at tick " +
                           std::to_string(first.at(edge.to)) + " but '" +
                           name_of(edge.from) + "' never activated",
                       std::nullopt});
      }
    }
  }
  sort_diagnostics(out);
  return out;
}

}  // namespace tmk
