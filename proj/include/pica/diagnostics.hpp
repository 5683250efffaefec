#pragma once

#include <string>
#include <vector>

namespace pica {

struct DiagnosticResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct DiagnosticsOptions {
  unsigned seed = 7;
  // Test hook: a check name whose analytic value gets biased before the
  // comparison, to prove failures are detected and named.
  std::string inject_bug;
};

// Runs every invariant suite once: finite-difference checks of all analytic
// gradients, the compositing oracle, graph audits, and projection audits.
std::vector<DiagnosticResult> run_diagnostics(const DiagnosticsOptions& options = {});

// Pass/fail table; returns true when every check passed.
bool print_diagnostics(const std::vector<DiagnosticResult>& results, std::ostream& out);

}  // namespace pica
