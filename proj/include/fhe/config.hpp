#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fhe/grid.hpp"

namespace fhe {

// Run configuration, read from a sectioned key = value text file:
//
//   [grid]
//   fibre_n   = 16
//   base_kind = torus        # torus | annulus
//   base_n    = 16 16        # annulus: radial angular
//   k         = 1.0
//
//   [run]
//   preset  = nilpotent_constant
//   lambda  = 1.0
//   ...
struct RunConfig {
    GridSpec grid;
    std::string preset = "diagonal_zero";
    std::string custom_matrix;  // JSON r x r nested [re, im] pairs; preset "custom_constant"
    std::string initial = "identity";
    double init_amplitude = 0.01;
    double lambda = 1.0;
    double dt = 0.0;
    double t_end = 1.0;
    double tol = 1e-8;
    std::string scheme = "rk4";  // rk4 | semi_implicit
    std::vector<double> k_list{16.0, 32.0, 64.0, 128.0};
    double eps = 0.5, eps_h = 0.4, delta = 0.5;
    uint64_t seed = 12345;
    std::string out_dir = "out";
    double holo_tol = 1e-8;

    static RunConfig from_file(const std::string& path);
    static RunConfig from_text(const std::string& text);
    std::string to_text() const;
    void validate() const;  // throws ConfigError
};

}  // namespace fhe
