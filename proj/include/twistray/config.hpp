#pragma once

#include <memory>
#include <optional>
#include <string>

#include "twistray/inversion.hpp"
#include "twistray/ray.hpp"
#include "twistray/smgrid.hpp"
#include "twistray/transform.hpp"

namespace twistray {

// Parsed run configuration. The JSON schema is strict: unknown keys are
// rejected at every level, tolerances must be positive, grid sizes >= 8.
struct RunConfig {
    std::shared_ptr<Chart> chart;
    LambdaPtr lambda;
    TraceOptions trace;
    GridSpec grid;

    // rays section
    int ray_boundary_count = 50;
    int ray_fiber_count = 40;
    int ray_census = 10000;
    std::uint64_t seed = 1;
    double glancing_margin = 0.05;

    std::optional<Integrand> integrand;

    // inversion section
    BasisSpec basis;
    RayFan fan;
    Regularization regularization;

    std::vector<std::string> pestov_test_functions;

    std::string output_dir = "out";
};

RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& json_text);

}  // namespace twistray
