#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lqrlab {

struct AcceptanceResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;  ///< measured values and the pinned tolerances
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::vector<int> only;  ///< criterion ids to run; empty runs all
  bool quick = false;     ///< smaller sample counts for smoke runs (not the criteria)
};

/// Runs the acceptance criteria in order. Never throws for a failing
/// criterion; an unexpected exception marks that criterion failed.
std::vector<AcceptanceResult> run_acceptance(const AcceptanceOptions& options = {});

/// One line per criterion: "[PASS] 3 derivative-oracle (1.2 s): detail".
void print_acceptance(const std::vector<AcceptanceResult>& results, std::ostream& out);

}  // namespace lqrlab
