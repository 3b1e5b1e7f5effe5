#pragma once

#include <functional>

#include "fhe/projection.hpp"

namespace fhe {

// First-order vertical deformation a = aV dzbar with bookkeeping.
struct DeformationData {
    MatrixField aV;  // tagged Dzb
    bool gauge_fixed = false;
    int commutant_dim = -1;  // dim of the full matrix commutant of {aV(b)}, set by presets
    std::optional<SeparableDeformation> sep;

    static DeformationData zero(const ProductGrid& g, int rank);
    const ProductGrid& grid() const { return aV.grid(); }
    int rank() const { return aV.rank(); }
};

// Symplectic pairing at base point pb: both (0,1) arguments are embedded as
// real forms alpha~ = alpha - alpha^{*h} and paired with
// Omega(alpha~, beta~) = -int_X Lambda tr(alpha~ ^ beta~) omega^n.
double omega_pair(const MetricData& h, const MatrixField& alpha, const MatrixField& beta,
                  long pb);

// [xi, aV] pointwise, xi a constant matrix.
MatrixField infinitesimal_action(const Eigen::MatrixXcd& xi, const DeformationData& a);

// Moment map value: per base point the h-skew-Hermitian holomorphic matrix nu
// solving the Gram system <nu, xi_i> = -1/2 Omega([xi_i, a], a) over a basis
// of the h-skew-Hermitian holomorphic endomorphisms, with
// <xi,eta> = -int_X tr(xi eta) omega^n.
BaseField nu(const MetricData& h, const HoloFrame& fr, const DeformationData& a);

// Fast evaluator for fibre-constant metrics and separable deformations:
// precomputes the fibre moments of the profile products once, then evaluates
// i nu_{h sigma}(a) per metric in O(base points).
class NuEvaluator {
  public:
    NuEvaluator(const ProductGrid& g, const DeformationData& a);
    // returns i*nu_{h0 sigma}(a) as a base field (h-Hermitian, trace-free)
    BaseField i_nu(const BaseField& sigma) const;
    bool trivial() const { return nterms_ == 0; }

  private:
    const ProductGrid* grid_;
    int rank_, nterms_;
    std::vector<Eigen::MatrixXcd> mats_;
    std::vector<BaseField> moments_;  // moments_[c*nterms_+c'] = int_X f_c conj(f_c') (scalar)
};

struct ExpansionReport {
    std::vector<double> s_values;
    std::vector<double> defects;
    double slope = 0.0;        // log-log fit across s_values (0 if defects at rounding level)
    bool exact_cancellation = false;
};

// Defect of the order-s^2 expansion: for each s, assemble dbar_s from the
// path, and measure || p_h(i Lambda_V F_{h, dbar_s}) + s^2 i nu_h(a) ||_inf.
// `path` must return an integrable Dolbeault operator for each listed s with
// derivative a at s = 0.
ExpansionReport expansion_defect(const MetricData& h, const HoloFrame& fr,
                                 const DeformationData& a,
                                 const std::function<DolbeaultData(double)>& path,
                                 const std::vector<double>& s_list);

// Linear path s -> dbar_0 + s a.
std::function<DolbeaultData(double)> linear_path(const DeformationData& a);

// Fibre average of the vertical deformation per base point: the harmonic
// representative of its first-order class on the trivial fibre bundle (the
// z-dependent remainder is dbar_V-exact). The moment map of a deformation
// class is the moment map of this representative.
DeformationData fibre_average(const DeformationData& a);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace fhe
