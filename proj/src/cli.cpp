#include "tmk/cli.hpp"

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "tmk/dsl.hpp"
#include "tmk/events.hpp"
#include "tmk/exporters.hpp"
#include "tmk/model.hpp"
#include "tmk/simulator.hpp"
#include "tmk/validator.hpp"

namespace tmk {
namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;   // validation / conformance / fmt --check
constexpr int kUsage = 2;    // bad invocation, unreadable input, bad schema

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool write_output(const std::string& text, const std::string& out_path,
                  std::ostream& out, std::ostream& err) {
  if (out_path.empty()) {
    out << text;
    return true;
  }
  std::ofstream file(out_path, std::ios::binary);
  if (!file) {
    err << "cannot write '" << out_path << "'\n";
    return false;
  }
  file << text;
  return true;
}

struct Loaded {
  StaticModel model;
  std::vector<EventDef> events;
  std::optional<BehaviorGraph> behavior;
  std::vector<Diagnostic> notes;  // parse-time info diagnostics
};

/// Loads a .tm or .json document. On failure prints to `diag_out`/err and
/// returns the exit code instead.
std::variant<Loaded, int> load_document(const std::string& path,
                                        Profile profile,
                                        std::ostream& diag_out,
                                        std::ostream& err) {
  auto text = read_file(path);
  if (!text) {
    err << "cannot read '" << path << "'\n";
    return kUsage;
  }
  if (ends_with(path, ".json")) {
    try {
      Document doc = from_json(*text);
      return Loaded{std::move(doc.model), std::move(doc.events),
                    std::move(doc.behavior), {}};
    } catch (const SchemaError& e) {
      err << "schema error: " << e.what() << "\n";
      return kUsage;
    }
  }
  ParseResult result = parse_model(*text, profile, path);
  if (!result.model) {
    std::vector<Diagnostic> diags = result.diagnostics;
    sort_diagnostics(diags);
    for (const Diagnostic& d : diags) diag_out << render_diagnostic(d) << "\n";
    return kFailed;
  }
  return Loaded{std::move(*result.model), std::move(result.events),
                std::move(result.behavior), std::move(result.diagnostics)};
}

int run_check(const std::string& path, Profile profile, std::ostream& out,
              std::ostream& err) {
  auto loaded = load_document(path, profile, out, err);
  if (std::holds_alternative<int>(loaded)) return std::get<int>(loaded);
  Loaded& doc = std::get<Loaded>(loaded);

  std::vector<Diagnostic> diags = doc.notes;
  std::vector<Diagnostic> validation =
      validate_model(doc.model);
  diags.insert(diags.end(), validation.begin(), validation.end());
  if (!doc.events.empty()) {
    std::vector<Diagnostic> decomposition =
        check_decomposition(doc.model, doc.events);
    diags.insert(diags.end(), decomposition.begin(), decomposition.end());
  }
  sort_diagnostics(diags);
  for (const Diagnostic& d : diags) out << render_diagnostic(d) << "\n";
  return has_errors(diags) ? kFailed : kOk;
}

int run_components(const std::string& path, Profile profile, std::ostream& out,
                   std::ostream& err) {
  auto loaded = load_document(path, profile, err, err);
  if (std::holds_alternative<int>(loaded)) return std::get<int>(loaded);
  Loaded& doc = std::get<Loaded>(loaded);

  ComponentView view = extract_components(doc.model);
  for (ThimacId id : view.nodes) {
    out << "component " << doc.model.thimac_path(id) << "\n";
  }
  for (const ComponentEdge& e : view.edges) {
    const char* via = e.via_flow && e.via_trigger ? "flow+trigger"
                      : e.via_flow               ? "flow"
                                                 : "trigger";
    out << "edge " << doc.model.thimac_path(e.a) << " -- "
        << doc.model.thimac_path(e.b) << " " << via << "\n";
  }
  return kOk;
}

int run_events(const std::string& path, Profile profile, std::ostream& out,
               std::ostream& err) {
  auto loaded = load_document(path, profile, err, err);
  if (std::holds_alternative<int>(loaded)) return std::get<int>(loaded);
  Loaded& doc = std::get<Loaded>(loaded);

  for (const EventDef& e : doc.events) {
    out << e.name << ": " << e.stages.size() << " stages, " << e.arcs.size()
        << " arcs";
    if (e.description) out << " (" << *e.description << ")";
    out << "\n";
  }
  std::vector<Diagnostic> diags = check_decomposition(doc.model, doc.events);
  for (const Diagnostic& d : diags) out << render_diagnostic(d) << "\n";
  return has_errors(diags) ? kFailed : kOk;
}

int run_simulate(const std::string& path, Profile profile,
                 const std::string& scenario_path, bool behavior_check,
                 const std::string& out_path, std::ostream& out,
                 std::ostream& err) {
  auto loaded = load_document(path, profile, err, err);
  if (std::holds_alternative<int>(loaded)) return std::get<int>(loaded);
  Loaded& doc = std::get<Loaded>(loaded);

  auto scenario_text = read_file(scenario_path);
  if (!scenario_text) {
    err << "cannot read '" << scenario_path << "'\n";
    return kUsage;
  }
  Trace trace;
  try {
    Scenario scenario = scenario_from_json(*scenario_text);
    trace = run_scenario(doc.model, doc.events, scenario);
  } catch (const SimError& e) {
    err << e.what() << "\n";
    return e.code == SimErrc::validation_failed ? kFailed : kUsage;
  }
  if (!write_output(trace_to_jsonl(trace, doc.model, doc.events), out_path,
                    out, err)) {
    return kUsage;
  }
  if (behavior_check) {
    if (!doc.behavior) {
      err << "the document declares no behavior to check against\n";
      return kUsage;
    }
    std::vector<Diagnostic> diags =
        check_trace_conformance(trace, *doc.behavior, doc.events);
    for (const Diagnostic& d : diags) err << render_diagnostic(d) << "\n";
    if (has_errors(diags)) return kFailed;
  }
  return kOk;
}

int run_export(const std::string& path, Profile profile,
               const std::string& flavor, bool labels,
               const std::string& out_path, std::ostream& out,
               std::ostream& err) {
  auto loaded = load_document(path, profile, err, err);
  if (std::holds_alternative<int>(loaded)) return std::get<int>(loaded);
  Loaded& doc = std::get<Loaded>(loaded);

  std::string rendered;
  if (flavor == "json") {
    rendered = to_json(doc.model, doc.events, doc.behavior);
  } else {
    ExportOptions options;
    options.include_labels = labels;
    options.flavor = flavor == "model-dot"        ? DotFlavor::model
                     : flavor == "components-dot" ? DotFlavor::components
                                                  : DotFlavor::behavior;
    rendered = to_dot(doc.model, doc.events, doc.behavior, options);
  }
  return write_output(rendered, out_path, out, err) ? kOk : kUsage;
}

int run_fmt(const std::string& path, Profile profile, bool check,
            const std::string& out_path, std::ostream& out, std::ostream& err) {
  if (ends_with(path, ".json")) {
    err << "fmt only accepts the textual form\n";
    return kUsage;
  }
  auto text = read_file(path);
  if (!text) {
    err << "cannot read '" << path << "'\n";
    return kUsage;
  }
  ParseResult result = parse_model(*text, profile, path);
  if (!result.model) {
    std::vector<Diagnostic> diags = result.diagnostics;
    sort_diagnostics(diags);
    for (const Diagnostic& d : diags) err << render_diagnostic(d) << "\n";
    return kFailed;
  }
  std::string canonical =
      format_model(*result.model, result.events, result.behavior);
  if (check) {
    if (canonical == *text) return kOk;
    err << "would reformat '" << path << "'\n";
    return kFailed;
  }
  return write_output(canonical, out_path, out, err) ? kOk : kUsage;
}

}  // namespace

int run_cli(const std::vector<std::string>& argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"thinging-machine model toolkit"};
  app.name("tm");
  app.require_subcommand(1);

  static const std::vector<std::string> kProfiles = {"strict", "lenient",
                                                     "extended"};

  struct CommonArgs {
    std::string input;
    std::string profile = "strict";
  };
  auto add_common = [&](CLI::App* sub) {
    auto args = std::make_shared<CommonArgs>();
    sub->add_option("input", args->input, "model file (.tm or .json)")
        ->required();
    sub->add_option("--profile", args->profile,
                    "stage-kind profile for .tm input")
        ->check(CLI::IsMember(kProfiles))
        ->envname("TM_PROFILE");
    return args;
  };

  CLI::App* check = app.add_subcommand("check", "validate a model");
  auto check_args = add_common(check);

  CLI::App* components =
      app.add_subcommand("components", "print the machine-eliminated view");
  auto components_args = add_common(components);

  CLI::App* events =
      app.add_subcommand("events", "list events and decomposition findings");
  auto events_args = add_common(events);

  CLI::App* simulate = app.add_subcommand("simulate", "run a scenario");
  auto simulate_args = add_common(simulate);
  std::string scenario_path;
  bool behavior_check = false;
  std::string simulate_out;
  simulate->add_option("--scenario", scenario_path, "scenario JSON file")
      ->required();
  simulate->add_flag("--behavior-check", behavior_check,
                     "check the trace against the declared chronology");
  simulate->add_option("--out", simulate_out, "write the trace here");

  CLI::App* exporter = app.add_subcommand("export", "render a model");
  auto export_args = add_common(exporter);
  std::string flavor;
  std::string export_out;
  bool labels = true;
  exporter
      ->add_option("--flavor", flavor,
                   "model-dot | components-dot | behavior-dot | json")
      ->required()
      ->check(CLI::IsMember(
          {"model-dot", "components-dot", "behavior-dot", "json"}));
  exporter->add_option("--out", export_out, "write the rendering here");
  exporter->add_flag("!--no-labels", labels, "omit arc labels");

  CLI::App* fmt = app.add_subcommand("fmt", "canonically format a model");
  auto fmt_args = add_common(fmt);
  bool fmt_check = false;
  std::string fmt_out;
  fmt->add_flag("--check", fmt_check, "exit 1 when not canonically formatted");
  fmt->add_option("--out", fmt_out, "write the formatted model here");

  std::vector<const char*> cargv;
  cargv.push_back("tm");
  for (const std::string& a : argv) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kUsage;
  }

  auto profile_of = [&](const CommonArgs& args) {
    return *profile_from_name(args.profile);
  };

  if (app.got_subcommand(check)) {
    return run_check(check_args->input, profile_of(*check_args), out, err);
  }
  if (app.got_subcommand(components)) {
    return run_components(components_args->input, profile_of(*components_args),
                          out, err);
  }
  if (app.got_subcommand(events)) {
    return run_events(events_args->input, profile_of(*events_args), out, err);
  }
  if (app.got_subcommand(simulate)) {
    return run_simulate(simulate_args->input, profile_of(*simulate_args),
                        scenario_path, behavior_check, simulate_out, out, err);
  }
  if (app.got_subcommand(exporter)) {
    return run_export(export_args->input, profile_of(*export_args), flavor,
                      labels, export_out, out, err);
  }
  if (app.got_subcommand(fmt)) {
    return run_fmt(fmt_args->input, profile_of(*fmt_args), fmt_check, fmt_out,
                   out, err);
  }
  err << "no subcommand selected\n";
  return kUsage;
}

}  // namespace tmk
