#pragma once

#include <compare>
#include <optional>
#include <string>
#include <vector>

namespace tmk {

enum class Severity { error, warning, info };

const char* severity_name(Severity s);

/// Location of a construct in a source file. Lines and columns are 1-based.
struct SourceSpan {
  std::string file;
  int line = 1;
  int column = 1;
  int length = 0;

  friend auto operator<=>(const SourceSpan&, const SourceSpan&) = default;
};

/// A single finding. `subject` is the path-like rendering of the offending
/// element (thimac path, stage path, "flow A.x->B.y", event name, ...).
struct Diagnostic {
  Severity severity = Severity::error;
  std::string code;
  std::string subject;
  std::string message;
  std::optional<SourceSpan> span;
};

/// One line per diagnostic: `SEVERITY CODE subject: message (file:line:col)`.
std::string render_diagnostic(const Diagnostic& d);

/// Orders by (severity, code, subject); stable input order breaks ties.
void sort_diagnostics(std::vector<Diagnostic>& diags);

bool has_errors(const std::vector<Diagnostic>& diags);
int count_severity(const std::vector<Diagnostic>& diags, Severity s);

}  // namespace tmk
