#pragma once

#include <string>
#include <vector>

namespace twistray {

// One acceptance criterion outcome. The suite prints one line per entry;
// the test binary asserts each `pass`.
struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Runs the full acceptance suite (ten criteria, fixed tolerances).
std::vector<CheckResult> run_acceptance();

}  // namespace twistray
