#include "tmk/diagnostics.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

namespace tmk {

const char* severity_name(Severity s) {
  switch (s) {
    case Severity::error: return "ERROR";
    case Severity::warning: return "WARNING";
    case Severity::info: return "INFO";
  }
  return "?";
}

std::string render_diagnostic(const Diagnostic& d) {
  std::ostringstream os;
  os << severity_name(d.severity) << ' ' << d.code << ' ' << d.subject << ": "
     << d.message;
  if (d.span) {
    os << " (" << d.span->file << ':' << d.span->line << ':' << d.span->column
       << ')';
  }
  return os.str();
}

void sort_diagnostics(std::vector<Diagnostic>& diags) {
  std::stable_sort(diags.begin(), diags.end(),
                   [](const Diagnostic& a, const Diagnostic& b) {
                     return std::tie(a.severity, a.code, a.subject) <
                            std::tie(b.severity, b.code, b.subject);
                   });
}

bool has_errors(const std::vector<Diagnostic>& diags) {
  return std::any_of(diags.begin(), diags.end(), [](const Diagnostic& d) {
    return d.severity == Severity::error;
  });
}

int count_severity(const std::vector<Diagnostic>& diags, Severity s) {
  return static_cast<int>(std::count_if(
      diags.begin(), diags.end(),
      [s](const Diagnostic& d) { return d.severity == s; }));
}

}  // namespace tmk
