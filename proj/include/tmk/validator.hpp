#pragma once

#include <array>
#include <string>
#include <vector>

#include "tmk/diagnostics.hpp"
#include "tmk/model.hpp"

namespace tmk {

/// Stage-kind legality for flow arcs, per profile. Same-machine and
/// cross-machine transitions have separate tables.
class LegalityMatrix {
 public:
  static LegalityMatrix for_profile(Profile p);

  bool is_legal(StageKind src, StageKind dst, bool cross_machine) const;

 private:
  // [src][dst][cross]
  std::array<std::array<std::array<bool, 2>, kStageKindCount>, kStageKindCount>
      allow_{};
};

bool is_legal_flow(const LegalityMatrix& m, StageKind src, StageKind dst,
                   bool cross_machine);

struct RuleInfo {
  std::string code;
  Severity strict_severity;
  std::string title;
};

/// The complete catalog of diagnostic codes validate_model can emit.
const std::vector<RuleInfo>& rule_catalog();

/// Structural rule check; returns diagnostics sorted by (severity, code,
/// subject). Empty result iff the model is well-formed under its profile.
std::vector<Diagnostic> validate_model(const StaticModel& model);

}  // namespace tmk
