// Acceptance suite: one check per criterion, one printed line each. The
// same checks back the CLI `selftest` subcommand.

#include "doctest.h"

#include <cstdio>

#include "twistray/selftest.hpp"

TEST_CASE("acceptance criteria") {
    const auto results = twistray::run_acceptance();
    REQUIRE(results.size() == 10);
    for (const auto& r : results) {
        std::printf("%s  %-26s (%s)\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.c_str());
        CHECK_MESSAGE(r.pass, r.name, ": ", r.detail);
    }
}
