#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "tmk/dsl.hpp"
#include "tmk/events.hpp"
#include "tmk/model.hpp"

using namespace tmk;

namespace {

// A small two-machine model shared by the cases below:
//   Plant { create, process, release, transfer }  with a child Valve { create }
//   Tank  { transfer, receive, process }
struct Rig {
  StaticModel model{Profile::strict};
  ThimacId plant, valve, tank;
  std::map<std::string, StageId> stage;
  std::map<std::string, ArcId> arc;

  Rig() {
    plant = model.add_thimac("Plant", std::nullopt,
                             {{"role", "produces batches"}});
    valve = model.add_thimac("Valve", plant);
    tank = model.add_thimac("Tank", std::nullopt);
    auto add = [&](ThimacId owner, StageKind k, const char* key) {
      stage[key] = model.add_stage(owner, k);
    };
    add(plant, StageKind::create, "P.c");
    add(plant, StageKind::process, "P.p");
    add(plant, StageKind::release, "P.r");
    add(plant, StageKind::transfer, "P.t");
    add(valve, StageKind::create, "V.c");
    add(tank, StageKind::transfer, "T.t");
    add(tank, StageKind::receive, "T.rc");
    add(tank, StageKind::process, "T.p");
    auto join = [&](ArcKind k, const char* a, const char* b, const char* key) {
      arc[key] = model.add_arc(k, stage[a], stage[b]);
    };
    join(ArcKind::flow, "P.c", "P.p", "c->p");
    join(ArcKind::flow, "P.p", "P.r", "p->r");
    join(ArcKind::flow, "P.r", "P.t", "r->t");
    join(ArcKind::flow, "P.t", "T.t", "t->t");
    join(ArcKind::flow, "T.t", "T.rc", "t->rc");
    join(ArcKind::flow, "T.rc", "T.p", "rc->p");
    join(ArcKind::trigger, "P.p", "V.c", "p~>v");
  }
};

BehaviorGraph graph_of(const std::vector<std::pair<int, int>>& edges,
                       int nodes) {
  BehaviorGraph g;
  for (int i = 1; i <= nodes; ++i) {
    g.nodes.push_back(EventId{static_cast<std::uint32_t>(i)});
  }
  for (auto [a, b] : edges) {
    g.edges.push_back({EventId{static_cast<std::uint32_t>(a)},
                       EventId{static_cast<std::uint32_t>(b)}, std::nullopt});
  }
  return g;
}

// Reference partition: u and v share a component iff each reaches the other.
std::set<std::set<std::uint32_t>> scc_oracle(const BehaviorGraph& g) {
  std::set<std::uint32_t> nodes;
  for (EventId n : g.nodes) nodes.insert(n.value);
  auto reaches = [&](std::uint32_t from, std::uint32_t to) {
    std::set<std::uint32_t> seen{from};
    std::vector<std::uint32_t> work{from};
    while (!work.empty()) {
      std::uint32_t at = work.back();
      work.pop_back();
      if (at == to) return true;
      for (const BehaviorEdge& e : g.edges) {
        if (e.from.value == at && seen.insert(e.to.value).second) {
          work.push_back(e.to.value);
        }
      }
    }
    return false;
  };
  std::set<std::set<std::uint32_t>> out;
  for (std::uint32_t u : nodes) {
    std::set<std::uint32_t> comp;
    for (std::uint32_t v : nodes) {
      if (reaches(u, v) && reaches(v, u)) comp.insert(v);
    }
    out.insert(comp);
  }
  return out;
}

std::set<std::set<std::uint32_t>> as_partition(
    const std::vector<std::vector<EventId>>& sccs) {
  std::set<std::set<std::uint32_t>> out;
  for (const auto& scc : sccs) {
    std::set<std::uint32_t> comp;
    for (EventId id : scc) comp.insert(id.value);
    out.insert(comp);
  }
  return out;
}

const Diagnostic* find_code(const std::vector<Diagnostic>& diags,
                            const std::string& code) {
  for (const Diagnostic& d : diags) {
    if (d.code == code) return &d;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("attach_event validates members and assigns sequential ids") {
  Rig rig;
  std::vector<EventDef> registry;

  const EventDef& e1 = attach_event(rig.model, registry, "E1",
                                    {rig.stage["P.c"], rig.arc["c->p"]},
                                    "first batch step");
  CHECK(e1.id.value == 1);
  CHECK(e1.name == "E1");
  CHECK(e1.description == "first batch step");
  CHECK(e1.stages == std::set<StageId>{rig.stage["P.c"]});
  CHECK(e1.arcs == std::set<ArcId>{rig.arc["c->p"]});

  // Repeated members collapse; ids keep counting up.
  const EventDef& e2 = attach_event(
      rig.model, registry, "E2",
      {rig.stage["P.p"], rig.stage["P.p"], rig.arc["p->r"], rig.arc["p->r"]},
      std::nullopt);
  CHECK(e2.id.value == 2);
  CHECK(e2.stages.size() == 1);
  CHECK(e2.arcs.size() == 1);
  CHECK_FALSE(e2.description.has_value());

  CHECK(find_event(registry, "E2") == &registry[1]);
  CHECK(find_event(registry, "E9") == nullptr);

  auto errc_of = [&](auto&& fn) {
    try {
      fn();
    } catch (const BuildError& err) {
      return err.code;
    }
    return BuildErrc{};
  };
  CHECK(errc_of([&] {
          attach_event(rig.model, registry, "E3", {});
        }) == BuildErrc::empty_members);
  CHECK(errc_of([&] {
          attach_event(rig.model, registry, "E1", {rig.stage["P.r"]});
        }) == BuildErrc::duplicate_event_name);
  CHECK(errc_of([&] {
          attach_event(rig.model, registry, "E3", {StageId{999}});
        }) == BuildErrc::unknown_ref);
  CHECK(errc_of([&] {
          attach_event(rig.model, registry, "E3", {ArcId{999}});
        }) == BuildErrc::unknown_ref);
  // Failed attaches must not have grown the registry.
  CHECK(registry.size() == 2);
}

TEST_CASE("decomposition checks flag each defect once") {
  Rig rig;
  std::vector<EventDef> events;

  SUBCASE("disconnected members") {
    attach_event(rig.model, events, "E1",
                 {rig.stage["P.c"], rig.stage["T.p"]});
    std::vector<Diagnostic> diags = check_decomposition(rig.model, events);
    const Diagnostic* d = find_code(diags, "W-EVT-DISCONNECTED");
    REQUIRE(d != nullptr);
    CHECK(d->severity == Severity::warning);
    CHECK(d->subject == "E1");
    CHECK(d->message ==
          "event members do not form a weakly connected sub-diagram");
  }
  SUBCASE("an arc member connects its endpoints") {
    attach_event(rig.model, events, "E1",
                 {rig.stage["P.c"], rig.stage["P.p"], rig.arc["c->p"]});
    for (const Diagnostic& d : check_decomposition(rig.model, events)) {
      CHECK(d.code != "W-EVT-DISCONNECTED");
    }
  }
  SUBCASE("arc endpoints join the connectivity scope implicitly") {
    // The arc P.p -> P.r plus the lone stage P.c is disconnected even
    // though the event has only one explicit stage member.
    attach_event(rig.model, events, "E1",
                 {rig.stage["P.c"], rig.arc["p->r"]});
    std::vector<Diagnostic> diags = check_decomposition(rig.model, events);
    CHECK(find_code(diags, "W-EVT-DISCONNECTED") != nullptr);
  }
  SUBCASE("trivial single-stage events") {
    attach_event(rig.model, events, "E1", {rig.stage["T.p"]});
    std::vector<Diagnostic> diags = check_decomposition(rig.model, events);
    const Diagnostic* d = find_code(diags, "W-EVT-TRIVIAL");
    REQUIRE(d != nullptr);
    CHECK(d->subject == "E1");
    CHECK(d->message == "event is a single process stage");
  }
  SUBCASE("a single create stage is not trivial") {
    // Creation alone is a meaningful event; coverage is the only complaint.
    attach_event(rig.model, events, "E1", {rig.stage["P.c"]});
    for (const Diagnostic& d : check_decomposition(rig.model, events)) {
      CHECK(d.code != "W-EVT-TRIVIAL");
    }
  }
  SUBCASE("coverage lists every unassigned stage in path order") {
    attach_event(rig.model, events, "E1",
                 {rig.stage["P.c"], rig.stage["P.p"], rig.arc["c->p"]});
    attach_event(rig.model, events, "E2",
                 {rig.stage["P.r"], rig.stage["P.t"], rig.arc["r->t"]});
    attach_event(rig.model, events, "E3",
                 {rig.stage["T.t"], rig.stage["T.rc"], rig.arc["t->rc"]});
    std::vector<Diagnostic> diags = check_decomposition(rig.model, events);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].code == "W-EVT-COVERAGE");
    CHECK(diags[0].subject == "decomposition");
    CHECK(diags[0].message ==
          "stages in no event: Plant.Valve.create, Tank.process");
  }
  SUBCASE("overlap is information, not a warning") {
    attach_event(rig.model, events, "E1",
                 {rig.stage["P.c"], rig.stage["P.p"], rig.arc["c->p"]});
    attach_event(rig.model, events, "E2",
                 {rig.stage["P.p"], rig.stage["P.r"], rig.arc["p->r"]});
    std::vector<Diagnostic> diags = check_decomposition(rig.model, events);
    bool saw_overlap = false;
    for (const Diagnostic& d : diags) {
      if (d.code == "I-EVT-OVERLAP") {
        saw_overlap = true;
        CHECK(d.severity == Severity::info);
        CHECK(d.message == "stages in more than one event: Plant.process");
      }
    }
    CHECK(saw_overlap);
  }
  SUBCASE("a complete partition is silent") {
    attach_event(rig.model, events, "E1",
                 {rig.stage["P.c"], rig.stage["P.p"], rig.stage["V.c"],
                  rig.arc["c->p"], rig.arc["p~>v"]});
    attach_event(rig.model, events, "E2",
                 {rig.stage["P.r"], rig.stage["P.t"], rig.stage["T.t"],
                  rig.arc["r->t"], rig.arc["t->t"]});
    attach_event(rig.model, events, "E3",
                 {rig.stage["T.rc"], rig.stage["T.p"], rig.arc["rc->p"]});
    CHECK(check_decomposition(rig.model, events).empty());
  }
}

TEST_CASE("induced sub-diagrams carry exactly the event's scope") {
  Rig rig;
  std::vector<EventDef> events;
  attach_event(rig.model, events, "E1",
               {rig.stage["P.p"], rig.stage["V.c"], rig.arc["p~>v"],
                rig.arc["p->r"]});

  StaticModel sub = induced_subdiagram(rig.model, events[0]);
  CHECK(sub.profile() == rig.model.profile());

  // Scope: P.p, V.c (members) plus P.r (endpoint of the p->r arc member).
  std::vector<std::string> paths;
  for (const auto& [id, s] : sub.stages()) paths.push_back(sub.stage_path(id));
  std::sort(paths.begin(), paths.end());
  CHECK(paths == std::vector<std::string>{"Plant.Valve.create",
                                          "Plant.process", "Plant.release"});

  // Only the two member arcs come across.
  CHECK(sub.arcs().size() == 2);
  int flows = 0, triggers = 0;
  for (const auto& [id, a] : sub.arcs()) {
    (a.kind == ArcKind::flow ? flows : triggers)++;
  }
  CHECK(flows == 1);
  CHECK(triggers == 1);

  // Ancestors of kept stages survive, with their attributes; Tank does not.
  auto plant = sub.resolve_thimac("Plant");
  REQUIRE(plant.has_value());
  REQUIRE(sub.thimac(*plant).attributes.size() == 1);
  CHECK(sub.thimac(*plant).attributes[0].value == "produces batches");
  CHECK(sub.resolve_thimac("Plant.Valve").has_value());
  CHECK_FALSE(sub.resolve_thimac("Tank").has_value());

  // The copy is self-contained: mutating it leaves the original intact.
  CHECK(rig.model.stages().size() == 8);
  CHECK(rig.model.arcs().size() == 7);
}

TEST_CASE("build_behavior wires names to ids and rejects bad specs") {
  Rig rig;
  std::vector<EventDef> events;
  attach_event(rig.model, events, "E1", {rig.stage["P.c"]});
  attach_event(rig.model, events, "E2", {rig.stage["P.p"]});
  attach_event(rig.model, events, "E3", {rig.stage["P.r"]});

  BehaviorGraph g = build_behavior(
      events, {{"E1", "E2", std::nullopt}, {"E2", "E3", "go"}}, nullptr);
  REQUIRE(g.edges.size() == 2);
  CHECK(g.edges[0].from == events[0].id);
  CHECK(g.edges[0].to == events[1].id);
  CHECK(g.edges[1].label == "go");
  CHECK(g.nodes == std::vector<EventId>{events[0].id, events[1].id,
                                        events[2].id});

  CHECK_THROWS_WITH_AS(
      build_behavior(events, {{"E1", "E9", std::nullopt}}, nullptr),
      "behavior references unknown event 'E9'", BuildError);
  CHECK_THROWS_WITH_AS(
      build_behavior(events, {{"E9", "E1", std::nullopt}}, nullptr),
      "behavior references unknown event 'E9'", BuildError);
  CHECK_THROWS_WITH_AS(
      build_behavior(
          events,
          {{"E1", "E2", std::nullopt}, {"E1", "E2", std::nullopt}},
          nullptr),
      "behavior edge E1 -> E2 already exists", BuildError);

  // The same ordered pair under different labels is two distinct edges.
  BehaviorGraph two = build_behavior(
      events, {{"E1", "E2", "a"}, {"E1", "E2", "b"}}, nullptr);
  CHECK(two.edges.size() == 2);
  // An event that no edge touches is not a node of the graph.
  CHECK(two.nodes.size() == 2);
}

TEST_CASE("cycle reports name every participating event") {
  Rig rig;
  std::vector<EventDef> events;
  attach_event(rig.model, events, "E1", {rig.stage["P.c"]});
  attach_event(rig.model, events, "E2", {rig.stage["P.p"]});
  attach_event(rig.model, events, "E3", {rig.stage["P.r"]});

  SUBCASE("acyclic graphs stay quiet") {
    std::vector<Diagnostic> diags;
    build_behavior(events, {{"E1", "E2", std::nullopt},
                            {"E2", "E3", std::nullopt},
                            {"E1", "E3", std::nullopt}},
                   &diags);
    CHECK(diags.empty());
  }
  SUBCASE("a two-cycle is one report") {
    std::vector<Diagnostic> diags;
    build_behavior(events, {{"E2", "E3", std::nullopt},
                            {"E3", "E2", std::nullopt},
                            {"E1", "E2", std::nullopt}},
                   &diags);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].severity == Severity::info);
    CHECK(diags[0].code == "I-BEHAVIOR-CYCLE");
    CHECK(diags[0].subject == "E2");
    CHECK(diags[0].message ==
          "behavior graph contains a cycle through E2, E3");
  }
  SUBCASE("a self-loop is a cycle") {
    std::vector<Diagnostic> diags;
    build_behavior(events, {{"E1", "E1", std::nullopt}}, &diags);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].message == "behavior graph contains a cycle through E1");
  }
}

TEST_CASE("initial events are exactly the nodes nothing points at") {
  BehaviorGraph g = graph_of({{1, 2}, {2, 3}, {4, 3}}, 4);
  std::vector<EventId> init = initial_events(g);
  REQUIRE(init.size() == 2);
  CHECK(init[0].value == 1);
  CHECK(init[1].value == 4);

  CHECK(initial_events(graph_of({}, 0)).empty());
  // A cycle with no entry point has no initial events.
  CHECK(initial_events(graph_of({{1, 2}, {2, 1}}, 2)).empty());
}

TEST_CASE("strongly connected components match a reachability oracle") {
  SUBCASE("fixed shapes") {
    // Two interleaved cycles plus a tail.
    BehaviorGraph g =
        graph_of({{1, 2}, {2, 3}, {3, 1}, {3, 4}, {4, 5}, {5, 4}, {5, 6}}, 6);
    auto sccs = strongly_connected_components(g);
    CHECK(as_partition(sccs) == scc_oracle(g));
    // Components also come back reverse-topologically sorted by construction
    // of the algorithm; spot-check membership instead of order.
    CHECK(sccs.size() == 3);
  }
  SUBCASE("random graphs") {
    std::mt19937 rng(20260813);
    for (int round = 0; round < 40; ++round) {
      CAPTURE(round);
      int n = 1 + static_cast<int>(rng() % 8);
      std::vector<std::pair<int, int>> edges;
      int m = static_cast<int>(rng() % (2 * static_cast<unsigned>(n) + 1));
      for (int i = 0; i < m; ++i) {
        edges.push_back({1 + static_cast<int>(rng() % n),
                         1 + static_cast<int>(rng() % n)});
      }
      BehaviorGraph g = graph_of(edges, n);
      CHECK(as_partition(strongly_connected_components(g)) == scc_oracle(g));
    }
  }
}

TEST_CASE("the corpus decompositions are complete and quiet") {
  ParseResult window = tmtest::parse_fixture("window.tm");
  REQUIRE(window.ok());
  CHECK(window.events.size() == 15);
  CHECK(check_decomposition(*window.model, window.events).empty());
  REQUIRE(window.behavior.has_value());
  {
    std::vector<std::string> names;
    for (EventId id : initial_events(*window.behavior)) {
      for (const EventDef& e : window.events) {
        if (e.id == id) names.push_back(e.name);
      }
    }
    std::sort(names.begin(), names.end());
    CHECK(names == std::vector<std::string>{"E1", "E5"});
  }

  ParseResult nao = tmtest::parse_fixture("nao.tm");
  REQUIRE(nao.ok());
  CHECK(nao.events.size() == 20);
  CHECK(check_decomposition(*nao.model, nao.events).empty());
  REQUIRE(nao.behavior.has_value());
  {
    std::vector<std::string> names;
    for (EventId id : initial_events(*nao.behavior)) {
      for (const EventDef& e : nao.events) {
        if (e.id == id) names.push_back(e.name);
      }
    }
    CHECK(names == std::vector<std::string>{"E1"});
    // Every component is a singleton: the chronology is a DAG.
    for (const auto& scc : strongly_connected_components(*nao.behavior)) {
      CHECK(scc.size() == 1);
    }
  }
}
