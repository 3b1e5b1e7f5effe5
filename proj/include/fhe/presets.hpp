#pragma once

#include <string>

#include "fhe/flow.hpp"

namespace fhe {

// Named deformation presets (rank 2). Profiles are kept in separable form so
// the flow's deformation term can reuse precomputed fibre moments.
//
//   diagonal_zero      a = 0
//   nilpotent_constant aV = N dzbar, N = [[0,1],[0,0]]
//   annulus_mixed      aV = (N + eps e^{2 pi i w} N^T) dzbar together with a
//                      horizontal component aH = eps_H (0.3 + e^{2 pi i w}) aV dwbar
//                      (aH commutes with aV pointwise, so dbar_0 + s alpha is
//                      integrable for every s)
//   vertical_wave      aV = N e^{2 pi i w} dzbar
//   fibre_modulated    aV = (1 + delta cos(2 pi x1)) N dzbar  (z-dependent,
//                      integrable, not gauge-fixed)
struct DeformationPreset {
    DeformationData a;           // first order vertical deformation
    MatrixField aH;              // horizontal profile of the full path (often 0)
    std::string name;
    double integ_tol = 1e-8;

    // dbar_s = dbar_0 + s (aV + aH)
    DolbeaultData dolbeault(double s) const;
    std::function<DolbeaultData(double)> path() const;
};

DeformationPreset make_preset(const std::string& name, const ProductGrid& g,
                              double eps = 0.5, double eps_h = 0.4, double delta = 0.5);

Eigen::MatrixXcd nilpotent_matrix();  // [[0,1],[0,0]]

// Trace-free Hermitian commutant oracle: real dimension of
// { X = X^dag, tr X = 0 : [X, A(b)] = 0 for all base points }.
int hermitian_tracefree_commutant_dim(const MatrixField& aV);

// Full complex commutant dimension of {aV(b)} over all points.
int commutant_dim(const MatrixField& aV);

}  // namespace fhe
