#pragma once

#include <memory>
#include <string>

#include "heatpot/multistep.hpp"
#include "heatpot/problems.hpp"
#include "heatpot/stepper.hpp"

namespace heatpot {

/// One experiment definition, serialized as sectioned key = value text.
/// parse(emit(parse(text))) reproduces parse(text) exactly; unknown keys
/// and sections are rejected.
struct RunConfig {
    // [run]
    std::string problem = "forced_heat";
    std::string scheme = "am2";
    double dt = 1e-3;
    double t_final = 0.1;
    double eps = 1e-9;
    int order = 8;
    int max_level = 12;
    std::string helmholtz_backend = "spectral";
    std::string adapt_metric = "l2grid"; // l2grid | tail
    int helmholtz_grid_cap = 1024;
    int workers = 1;
    unsigned long seed = 0;

    // [problem]
    ProblemParams params;

    // [output]
    std::string output_dir = "out";
    int snapshot_every = 0;
    int resample_resolution = 256;
    bool profile = false;

    static RunConfig parse(const std::string& text);
    static RunConfig load_file(const std::string& path);
    std::string emit() const;

    StepperOptions stepper_options() const;
    MultistepScheme make_scheme() const;
    std::unique_ptr<Problem> build_problem() const;
    void validate() const;
};

} // namespace heatpot
