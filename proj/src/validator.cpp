#include "tmk/validator.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace tmk {

LegalityMatrix LegalityMatrix::for_profile(Profile p) {
  LegalityMatrix m;
  auto same = [&m](StageKind s, StageKind d) {
    m.allow_[static_cast<int>(s)][static_cast<int>(d)][0] = true;
  };
  auto cross = [&m](StageKind s, StageKind d) {
    m.allow_[static_cast<int>(s)][static_cast<int>(d)][1] = true;
  };

  using K = StageKind;
  same(K::receive, K::process);
  same(K::receive, K::release);
  same(K::process, K::release);
  same(K::create, K::process);
  same(K::create, K::release);
  same(K::release, K::transfer);
  same(K::transfer, K::receive);
  cross(K::transfer, K::transfer);
  if (p == Profile::extended) {
    same(K::transfer, K::arrive);
    same(K::arrive, K::accept);
    same(K::accept, K::process);
    same(K::accept, K::release);
  }
  return m;
}

bool LegalityMatrix::is_legal(StageKind src, StageKind dst,
                              bool cross_machine) const {
  return allow_[static_cast<int>(src)][static_cast<int>(dst)]
               [cross_machine ? 1 : 0];
}

bool is_legal_flow(const LegalityMatrix& m, StageKind src, StageKind dst,
                   bool cross_machine) {
  return m.is_legal(src, dst, cross_machine);
}

const std::vector<RuleInfo>& rule_catalog() {
  static const std::vector<RuleInfo> catalog = {
      {"E-DUP-STAGE", Severity::error,
       "a machine declares more than one stage of the same kind"},
      {"E-FLOW-ILLEGAL", Severity::error,
       "a flow arc joins stage kinds outside the legality matrix"},
      {"E-TRIG-SRC", Severity::error,
       "a trigger arc starts at a stage that is not process or create"},
      {"W-TRIG-FLOW", Severity::warning,
       "a flow arc and a trigger arc join the same stage pair"},
      {"E-DANGLING", Severity::error,
       "an arc endpoint or parent reference does not resolve"},
      {"W-ISOLATED", Severity::warning, "a stage has no incident arcs"},
      {"W-UNREACHABLE-CREATE-FREE", Severity::warning,
       "a connected component has no create stage and no externally fed "
       "transfer"},
  };
  return catalog;
}

namespace {

struct Emitter {
  const StaticModel& model;
  Profile profile;
  std::vector<Diagnostic> out;

  void add(Severity sev, std::string code, std::string subject,
           std::string message, std::optional<SourceSpan> span = std::nullopt) {
    out.push_back({sev, std::move(code), std::move(subject), std::move(message),
                   std::move(span)});
  }
};

// Lenient demotes flow/trigger legality to warnings and isolation to info.
Severity flow_severity(Profile p) {
  return p == Profile::lenient ? Severity::warning : Severity::error;
}

Severity isolated_severity(Profile p) {
  return p == Profile::lenient ? Severity::info : Severity::warning;
}

void check_dangling(Emitter& e) {
  for (const auto& [id, t] : e.model.thimacs()) {
    if (t.parent && !e.model.has_thimac(*t.parent)) {
      e.add(Severity::error, "E-DANGLING", e.model.thimac_path(id),
            "parent reference '" + e.model.thimac_path(*t.parent) +
                "' does not resolve",
            e.model.span_of(id));
    }
  }
  for (const auto& [id, a] : e.model.arcs()) {
    if (!e.model.has_stage(a.src) || !e.model.has_stage(a.dst)) {
      std::string missing = !e.model.has_stage(a.src)
                                ? e.model.stage_ref(a.src)
                                : e.model.stage_ref(a.dst);
      e.add(Severity::error, "E-DANGLING", e.model.arc_ref(id),
            "arc endpoint '" + missing + "' does not resolve",
            e.model.span_of(id));
    }
  }
}

void check_duplicate_stages(Emitter& e) {
  for (const auto& [id, t] : e.model.thimacs()) {
    std::map<StageKind, int> counts;
    for (StageId s : t.stages) ++counts[e.model.stage(s).kind];
    for (const auto& [kind, n] : counts) {
      if (n > 1) {
        e.add(Severity::error, "E-DUP-STAGE",
              e.model.thimac_path(id) + "." + stage_kind_name(kind),
              "machine declares " + std::to_string(n) + " stages of kind '" +
                  stage_kind_name(kind) + "'",
              e.model.span_of(id));
      }
    }
  }
}

void check_arcs(Emitter& e) {
  LegalityMatrix matrix = LegalityMatrix::for_profile(e.profile);
  for (const auto& [id, a] : e.model.arcs()) {
    if (!e.model.has_stage(a.src) || !e.model.has_stage(a.dst)) continue;
    const StageNode& src = e.model.stage(a.src);
    const StageNode& dst = e.model.stage(a.dst);
    if (a.kind == ArcKind::flow) {
      bool cross = src.owner != dst.owner;
      if (!matrix.is_legal(src.kind, dst.kind, cross)) {
        e.add(flow_severity(e.profile), "E-FLOW-ILLEGAL", e.model.arc_ref(id),
              std::string("flow from ") + stage_kind_name(src.kind) + " to " +
                  stage_kind_name(dst.kind) +
                  (cross ? " across machines" : " within one machine") +
                  " is not in the legality matrix",
              e.model.span_of(id));
      }
    } else {
      if (src.kind != StageKind::process && src.kind != StageKind::create) {
        e.add(flow_severity(e.profile), "E-TRIG-SRC", e.model.arc_ref(id),
              std::string("trigger source must be a process or create stage, "
                          "not ") +
                  stage_kind_name(src.kind),
              e.model.span_of(id));
      }
    }
  }

  // Flow and trigger on the same ordered stage pair.
  std::set<std::pair<StageId, StageId>> flow_pairs;
  for (const auto& [id, a] : e.model.arcs()) {
    if (a.kind == ArcKind::flow) flow_pairs.insert({a.src, a.dst});
  }
  for (const auto& [id, a] : e.model.arcs()) {
    if (a.kind == ArcKind::trigger && flow_pairs.count({a.src, a.dst})) {
      e.add(Severity::warning, "W-TRIG-FLOW", e.model.arc_ref(id),
            "a flow arc joins the same stage pair as this trigger",
            e.model.span_of(id));
    }
  }
}

// In the extended profile a machine that declares arrive or accept must not
// also declare receive (the long input path replaces the short one).
void check_extended_receive(Emitter& e) {
  if (e.profile != Profile::extended) return;
  for (const auto& [id, t] : e.model.thimacs()) {
    bool has_receive = false, has_long_path = false;
    StageId receive_stage;
    for (StageId s : t.stages) {
      StageKind k = e.model.stage(s).kind;
      if (k == StageKind::receive) {
        has_receive = true;
        receive_stage = s;
      }
      if (k == StageKind::arrive || k == StageKind::accept) {
        has_long_path = true;
      }
    }
    if (has_receive && has_long_path) {
      e.add(Severity::error, "E-FLOW-ILLEGAL",
            e.model.stage_path(receive_stage),
            "machine declares arrive or accept and may not also declare "
            "receive",
            e.model.span_of(receive_stage));
    }
  }
}

void check_isolated(Emitter& e) {
  std::set<StageId> touched;
  for (const auto& [id, a] : e.model.arcs()) {
    touched.insert(a.src);
    touched.insert(a.dst);
  }
  for (const auto& [id, s] : e.model.stages()) {
    if (!touched.count(id)) {
      e.add(isolated_severity(e.profile), "W-ISOLATED", e.model.stage_path(id),
            "stage has no incident arcs", e.model.span_of(id));
    }
  }
}

// Weakly connected components over flow arcs. A component can be fed by a
// create stage, by a transfer no internal flow feeds (an entry boundary), or
// by a trigger arriving from outside the component; anything else can never
// hold a thing.
void check_unreachable(Emitter& e) {
  std::map<StageId, StageId> parent;
  auto find = [&](StageId x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& [id, s] : e.model.stages()) parent[id] = id;
  auto unite = [&](StageId a, StageId b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[a] = b;
  };
  std::set<StageId> has_inbound_flow;
  for (const auto& [id, a] : e.model.arcs()) {
    if (a.kind != ArcKind::flow) continue;
    if (!e.model.has_stage(a.src) || !e.model.has_stage(a.dst)) continue;
    unite(a.src, a.dst);
    has_inbound_flow.insert(a.dst);
  }

  std::map<StageId, std::vector<StageId>> components;
  for (const auto& [id, s] : e.model.stages()) {
    components[find(id)].push_back(id);
  }

  std::set<StageId> trigger_fed;
  for (const auto& [id, a] : e.model.arcs()) {
    if (a.kind != ArcKind::trigger) continue;
    if (!e.model.has_stage(a.src) || !e.model.has_stage(a.dst)) continue;
    if (find(a.src) != find(a.dst)) trigger_fed.insert(a.dst);
  }

  for (const auto& [root, members] : components) {
    bool sourced = false;
    for (StageId s : members) {
      StageKind k = e.model.stage(s).kind;
      if (k == StageKind::create) sourced = true;
      if (k == StageKind::transfer && !has_inbound_flow.count(s)) {
        sourced = true;
      }
      if (trigger_fed.count(s)) sourced = true;
    }
    if (sourced) continue;
    std::vector<std::string> paths;
    for (StageId s : members) paths.push_back(e.model.stage_path(s));
    std::sort(paths.begin(), paths.end());
    e.add(Severity::warning, "W-UNREACHABLE-CREATE-FREE", paths.front(),
          "component of " + std::to_string(members.size()) +
              " stage(s) has no create stage and no externally fed transfer");
  }
}

}  // namespace

std::vector<Diagnostic> validate_model(const StaticModel& model) {
  Emitter e{model, model.profile(), {}};
  check_dangling(e);
  check_duplicate_stages(e);
  check_arcs(e);
  check_extended_receive(e);
  check_isolated(e);
  check_unreachable(e);
  sort_diagnostics(e.out);
  return e.out;
}

}  // namespace tmk
