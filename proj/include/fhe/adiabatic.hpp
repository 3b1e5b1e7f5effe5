#pragma once

#include "fhe/presets.hpp"

namespace fhe {

struct AdiabaticReport {
    std::vector<double> k_list;
    std::vector<double> defects;
    double slope = 0.0;
    bool exact_cancellation = false;
};

// Defect of the adiabatic expansion under the coupling s^2 = lambda / k:
//   || p(i Lambda_k F_s) - p(i Lambda_V F_0) - k^{-1}(p(i Lambda_H F_0) - i lambda nu(a)) ||_inf
// per k, with the log-log slope over the sweep.
AdiabaticReport adiabatic_defect(const MetricData& h, const DeformationPreset& preset,
                                 double lambda, const std::vector<double>& k_list);

// Linearised operator of the family Hermite-Einstein equation on the
// discretized trace-free Hermitian holomorphic sections, assembled as the
// Gram form <L s, t> = <nabla_H s, nabla_H t> + <[A_V, s], [A_V, t]> and
// mass-orthonormalized.
struct LOperator {
    Eigen::MatrixXd matrix;  // symmetric operator matrix
    Eigen::VectorXd eigenvalues;
    int kernel_dim = 0;
    double symmetry_defect = 0.0;  // relative, before symmetrization
    double kernel_tol = 1e-6;
};
LOperator l_operator(const MetricData& h, const HoloFrame& fr, const DeformationData& a,
                     double kernel_tol = 1e-6);

// Second-order approximate solution data: gauge
// f_{k,2} = exp(phi2) exp(k^{-1} tau2) exp(k^{-1/2} tau1). The tau1 stage
// cancels the s-linear vertical term dbar_V^*-type term that a deformation
// which is not gauge-fixed leaves at order k^{-1/2}; it vanishes identically
// for gauge-fixed (fibre-constant) deformations.
struct R2Solution {
    BaseField phi2;      // rank-1 real scalar
    MatrixField tau2;    // h-Hermitian, fibrewise orthogonal to the frame
    MatrixField tau1;    // h-Hermitian, order k^{-1/2} gauge stage
    double gamma0 = 0.0;
    double gamma2 = 0.0;
    double psi_h_norm = 0.0;   // family HE residual of the input (must be < tol)
    double psi1_h_norm = 0.0;  // frame component of the k^{-1/2} term (must be ~0)
};

// Requires the family Hermite-Einstein equation to hold at h (the H0
// component of the k^{-1} term vanishes below psi_h_tol), else throws. The
// horizontal profile aH rides along the path s (aV + aH) like in
// DeformationPreset::dolbeault.
R2Solution approx_solution_r2(const MetricData& h, const DeformationData& a,
                              const MatrixField& aH, double lambda, double psi_h_tol = 1e-6);

// || i Lambda_k F_{f . dbar_s} - (gamma0 + k^{-1} gamma2) id ||_inf over the
// interior, with either corrector optionally ablated.
double r2_residual(const MetricData& h, const DeformationPreset& preset, const R2Solution& sol,
                   double lambda, double k, bool use_phi = true, bool use_tau = true);

struct TotalSpaceParams {
    double t_end = 0.02;
    double dt = 0.0;  // 0: auto
    double c_stab = 0.4;
    int record_every = 10;
};

struct TotalSpaceReport {
    std::vector<double> t;
    std::vector<double> monitor;  // sup interior |i Lambda_k F - c_k id|
    bool monotone = true;
    double worst_increase = 0.0;
    double initial_monitor = 0.0, final_monitor = 0.0;
    double c_k = 0.0;
    double dt_used = 0.0;
};

// Donaldson's Hermite-Einstein flow on the total space with omega_k:
// d sigma/dt = -2 sigma (i Lambda_k F_{h sigma, dbar_s} - c_k id) for a full
// (not fibrewise-holomorphic) positive Hermitian sigma. On the annulus the
// radial boundary rows are pinned.
TotalSpaceReport total_space_he_flow(const MatrixField& sigma_init, const DolbeaultData& d_s,
                                     double k, const TotalSpaceParams& prm);

}  // namespace fhe
