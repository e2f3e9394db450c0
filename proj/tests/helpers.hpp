#pragma once

// Shared test utilities: fixture loading, a compact builder shorthand, and a
// seeded generator of random well-formed documents for round-trip properties.

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "tmk/dsl.hpp"
#include "tmk/events.hpp"
#include "tmk/model.hpp"
#include "tmk/simulator.hpp"

namespace tmtest {

inline std::string fixture_path(const std::string& name) {
  return std::string(TM_FIXTURE_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline tmk::ParseResult parse_fixture(const std::string& name,
                                      tmk::Profile profile = tmk::Profile::strict) {
  return tmk::parse_model(read_file(fixture_path(name)), profile, name);
}

/// Renders every diagnostic on its own line (for CHECK messages).
inline std::string render_all(const std::vector<tmk::Diagnostic>& diags) {
  std::string out;
  for (const auto& d : diags) out += tmk::render_diagnostic(d) + "\n";
  return out;
}

// -- trace bookkeeping ---------------------------------------------------------

/// Replays a trace's records and checks, at the end of every tick, that
///   live tokens + terminated tokens == injected tokens + spawned tokens.
/// Returns the first offending tick, or nullopt when the balance holds
/// throughout. Also fails (returning the tick) if a record moves or
/// terminates a token that is not currently live, or re-places a live one.
inline std::optional<int> conservation_violation(const tmk::Trace& trace) {
  std::set<int> live;
  long injected = 0, spawned = 0, terminated = 0;
  size_t i = 0;
  const auto& recs = trace.records;
  while (i < recs.size()) {
    int tick = recs[i].tick;
    bool bad = false;
    for (; i < recs.size() && recs[i].tick == tick; ++i) {
      const tmk::TraceRecord& r = recs[i];
      switch (r.kind) {
        case tmk::RecordKind::inject:
        case tmk::RecordKind::spawn:
          if (!r.token || !live.insert(*r.token).second) bad = true;
          (r.kind == tmk::RecordKind::inject ? injected : spawned)++;
          break;
        case tmk::RecordKind::move:
          if (!r.token || !live.count(*r.token)) bad = true;
          break;
        case tmk::RecordKind::terminate:
          if (!r.token || !live.erase(*r.token)) bad = true;
          ++terminated;
          break;
        case tmk::RecordKind::trigger:
        case tmk::RecordKind::event:
          break;
      }
    }
    if (bad ||
        static_cast<long>(live.size()) + terminated != injected + spawned) {
      return tick;
    }
  }
  return std::nullopt;
}

// -- generated documents ------------------------------------------------------

struct GeneratedDoc {
  tmk::StaticModel model;
  std::vector<tmk::EventDef> events;
  std::optional<tmk::BehaviorGraph> behavior;
};

/// Builds a random document through the checked model-building API, so every
/// output satisfies the builder invariants by construction. Arc legality and
/// other validator rules are deliberately not enforced: serialization must
/// round-trip diagnosable models too. Stage notes are never generated because
/// the textual form has no syntax for them.
class DocumentGenerator {
 public:
  explicit DocumentGenerator(std::uint32_t seed) : rng_(seed) {}

  GeneratedDoc next(int max_thimacs = 30) {
    static const tmk::Profile profiles[] = {
        tmk::Profile::strict, tmk::Profile::lenient, tmk::Profile::extended};
    tmk::Profile profile = profiles[pick_(0, 2)];
    GeneratedDoc doc{tmk::StaticModel(profile), {}, std::nullopt};
    tmk::StaticModel& m = doc.model;

    // Thimac forest, depth-capped.
    int n_thimacs = pick_(1, max_thimacs);
    std::vector<tmk::ThimacId> ids;
    std::map<tmk::ThimacId, int> depth;
    for (int i = 0; i < n_thimacs; ++i) {
      std::optional<tmk::ThimacId> parent;
      if (!ids.empty() && chance_(70)) {
        tmk::ThimacId candidate = ids[pick_(0, int(ids.size()) - 1)];
        if (depth[candidate] < 4) parent = candidate;
      }
      tmk::ThimacId id =
          m.add_thimac(fresh_name_(m, parent), parent, random_attributes_());
      depth[id] = parent ? depth[*parent] + 1 : 0;
      ids.push_back(id);
    }

    // Stages: a random subset of the profile's kinds per thimac.
    std::vector<tmk::StageId> stages;
    std::vector<tmk::StageKind> kinds = {
        tmk::StageKind::create, tmk::StageKind::process, tmk::StageKind::release,
        tmk::StageKind::transfer, tmk::StageKind::receive};
    if (profile == tmk::Profile::extended) {
      kinds.push_back(tmk::StageKind::arrive);
      kinds.push_back(tmk::StageKind::accept);
    }
    for (tmk::ThimacId t : ids) {
      std::vector<tmk::StageKind> pool = kinds;
      std::shuffle(pool.begin(), pool.end(), rng_);
      int k = pick_(0, int(pool.size()));
      for (int i = 0; i < k; ++i) stages.push_back(m.add_stage(t, pool[i]));
    }

    // Arcs between random distinct stages; duplicates and self arcs skipped.
    if (stages.size() >= 2) {
      int want = pick_(0, int(stages.size()) * 2);
      std::set<std::tuple<int, std::uint32_t, std::uint32_t>> seen;
      for (int i = 0; i < want; ++i) {
        tmk::StageId src = stages[pick_(0, int(stages.size()) - 1)];
        tmk::StageId dst = stages[pick_(0, int(stages.size()) - 1)];
        tmk::ArcKind kind = chance_(75) ? tmk::ArcKind::flow : tmk::ArcKind::trigger;
        if (src == dst) continue;
        if (!seen.insert({int(kind), src.value, dst.value}).second) continue;
        m.add_arc(kind, src, dst, random_label_());
      }
    }

    // Events: member stages plus arc members closed over (src, dst) pairs,
    // matching what the textual arc-member syntax can express.
    std::vector<tmk::ArcId> arc_ids;
    for (const auto& [id, a] : m.arcs()) arc_ids.push_back(id);
    if (!stages.empty()) {
      int n_events = pick_(0, 8);
      for (int i = 0; i < n_events; ++i) {
        std::vector<tmk::MemberRef> members;
        int n_stage_members = pick_(1, std::min<int>(6, int(stages.size())));
        std::set<tmk::StageId> chosen;
        for (int j = 0; j < n_stage_members; ++j) {
          chosen.insert(stages[pick_(0, int(stages.size()) - 1)]);
        }
        for (tmk::StageId s : chosen) members.push_back(s);
        if (!arc_ids.empty()) {
          int n_arc_members = pick_(0, std::min<int>(4, int(arc_ids.size())));
          std::set<tmk::ArcId> closure;
          for (int j = 0; j < n_arc_members; ++j) {
            const tmk::ArcEdge& picked = m.arc(arc_ids[pick_(0, int(arc_ids.size()) - 1)]);
            for (const auto& [id, a] : m.arcs()) {
              if (a.src == picked.src && a.dst == picked.dst) closure.insert(id);
            }
          }
          for (tmk::ArcId a : closure) members.push_back(a);
        }
        tmk::attach_event(m, doc.events, "E" + std::to_string(i + 1), members,
                          random_description_());
      }
    }

    // Behavior: random edges over the generated events, duplicates skipped.
    if (doc.events.size() >= 2 && chance_(60)) {
      std::vector<tmk::BehaviorEdgeSpec> specs;
      std::set<std::tuple<std::string, std::string, std::string>> seen;
      int want = pick_(1, 7);
      for (int i = 0; i < want; ++i) {
        const std::string& from =
            doc.events[pick_(0, int(doc.events.size()) - 1)].name;
        const std::string& to =
            doc.events[pick_(0, int(doc.events.size()) - 1)].name;
        std::optional<std::string> label = random_label_();
        if (!seen.insert({from, to, label.value_or("\x01none")}).second) continue;
        specs.push_back({from, to, label});
      }
      if (!specs.empty()) doc.behavior = tmk::build_behavior(doc.events, specs);
    }
    return doc;
  }

 private:
  int pick_(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }
  bool chance_(int percent) { return pick_(1, 100) <= percent; }

  std::string fresh_name_(const tmk::StaticModel& m,
                          std::optional<tmk::ThimacId> parent) {
    static const char* bases[] = {"Alpha", "Beta",  "Gamma", "Delta", "Pump",
                                  "Valve", "Core",  "Hub",   "Link",  "Node",
                                  "Unit",  "Cell",  "Gate",  "Port",  "Mixer"};
    for (;;) {
      std::string name = bases[pick_(0, 14)];
      if (chance_(50)) name += std::to_string(pick_(0, 99));
      if (!m.find_child(parent, name)) return name;
    }
  }

  std::vector<tmk::Attribute> random_attributes_() {
    static const char* names[] = {"color", "size", "role", "mode", "owner_tag"};
    static const char* values[] = {"plain",
                                   "",
                                   "with \"quotes\"",
                                   "line\nbreak",
                                   "tab\there",
                                   "back\\slash",
                                   "caf\xc3\xa9"};
    std::vector<tmk::Attribute> attrs;
    int n = pick_(0, 3);
    for (int i = 0; i < n; ++i) {
      attrs.push_back({names[pick_(0, 4)], values[pick_(0, 6)]});
    }
    return attrs;
  }

  std::optional<std::string> random_label_() {
    static const char* labels[] = {"go", "stop", "left", "right", "", "a b"};
    if (!chance_(30)) return std::nullopt;
    return std::string(labels[pick_(0, 5)]);
  }

  std::optional<std::string> random_description_() {
    static const char* descs[] = {"a step", "the \"big\" one", "", "two\nlines"};
    if (!chance_(50)) return std::nullopt;
    return std::string(descs[pick_(0, 3)]);
  }

  std::mt19937 rng_;
};

}  // namespace tmtest
