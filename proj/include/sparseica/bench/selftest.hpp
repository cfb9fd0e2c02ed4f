#pragma once

// Fast invariant checks over every module, for `sparseica selftest`.

#include <string>
#include <vector>

namespace sparseica::bench {

struct SelftestCase {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<SelftestCase> run_selftest();

}  // namespace sparseica::bench
