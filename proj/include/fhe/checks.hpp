#pragma once

#include <string>
#include <vector>

#include "fhe/adiabatic.hpp"
#include "fhe/flow.hpp"

namespace fhe {

struct CheckResult {
    std::string id;
    double measured = 0.0;
    double bound = 0.0;
    bool pass = false;
    std::string note;
};

struct CheckList {
    std::vector<CheckResult> results;
    void add(const std::string& id, double measured, double bound, const std::string& note = "");
    // pass when measured lies in [lo, hi]
    void add_range(const std::string& id, double measured, double lo, double hi,
                   const std::string& note = "");
    bool all_pass() const;
};

// Invariant suites per module. n_fields controls how many seeded random
// fields the identity suites draw (acceptance uses 20).
CheckList geometry_checks(uint64_t seed, int n_fields = 5);
CheckList bundle_checks(uint64_t seed, int n_fields = 5);
CheckList projection_checks(uint64_t seed, int n_fields = 5);
CheckList moment_map_checks(uint64_t seed);
CheckList flow_checks(uint64_t seed);
CheckList adiabatic_checks(uint64_t seed);

CheckList run_all_checks(uint64_t seed, int n_fields = 5);

}  // namespace fhe
