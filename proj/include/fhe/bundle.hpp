#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "fhe/calculus.hpp"
#include "fhe/field.hpp"

namespace fhe {

// Hermitian metric h = h0 * sigma against the flat reference h0 = identity.
struct MetricData {
    MatrixField sigma;

    static MetricData identity(const ProductGrid& g, int rank) {
        return {identity_field(g, rank)};
    }
    static MetricData from_base(const BaseField& s) { return {s.extend()}; }

    int rank() const { return sigma.rank(); }
    // throws DomainError unless sigma is Hermitian (1e-12) and positive
    void validate() const;
};

// Optional separable form a = sum_c f_c(z,w) M_c with scalar profiles f_c;
// lets the deformation term of the flow reuse precomputed fibre moments.
struct SeparableDeformation {
    std::vector<MatrixField> profiles;  // rank-1 scalar fields
    std::vector<Eigen::MatrixXcd> mats;
};

// Dolbeault operator dbar = dbar_0 + alpha on the trivial product bundle,
// alpha = aV dzbar + aH dwbar.
struct DolbeaultData {
    MatrixField aV;  // tagged Dzb
    MatrixField aH;  // tagged Dwb
    bool gauge_fixed = false;  // dbar_V^* aV = 0 (z-constant aV on this testbed)
    // accepted integrability defect; radial finite differences make it grid-
    // dependent for w-dependent profiles on the annulus
    double integ_tol = 1e-8;
    std::optional<SeparableDeformation> sep_v;  // separable form of aV, if known

    static DolbeaultData trivial(const ProductGrid& g, int rank);
    int rank() const { return aV.rank(); }
    const ProductGrid& grid() const { return aV.grid(); }
};

// sup-norm of the (0,2) component of (dbar_0 + alpha)^2.
double integrability_defect(const DolbeaultData& d);

// h-adjoint of an endomorphism-valued field: sigma^{-1} M^dag sigma, with the
// form label conjugated (dzbar <-> dz, dwbar <-> dw).
MatrixField h_adjoint(const MetricData& h, const MatrixField& f);

// Chern connection coefficients. nabla^{0,1} = dbar_0 + alpha (coefficients
// live in the DolbeaultData); nabla^{1,0} = d_0 + sigma^{-1} d_0 sigma - alpha^{*h}.
struct Connection {
    MatrixField Az, Aw;    // (1,0) coefficients
    MatrixField Azb, Awb;  // (0,1) coefficients (= aV, aH)
};
Connection chern_connection(const MetricData& h, const DolbeaultData& d);

// Full curvature F = dA + A ^ A of the Chern connection, by component.
struct CurvatureData {
    OneOneForm oneone;
    MatrixField f02;  // dzbar ^ dwbar component
};
CurvatureData curvature(const MetricData& h, const DolbeaultData& d);

// i Lambda_mode F_{h,dbar}; Hermitian with respect to h.
MatrixField contracted_curvature(const MetricData& h, const DolbeaultData& d, ContractMode mode);

enum class LapKind { Full, OneZero, ZeroOne };
enum class ConnAction { Bundle, End };

// Laplacians Delta^{1,0} = i Lambda nabla^{0,1} nabla^{1,0} and
// Delta^{0,1} = -i Lambda nabla^{1,0} nabla^{0,1} on scalar-degree fields,
// with the connection acting either on E-sections (left multiplication) or on
// End-sections (commutator).
MatrixField laplacian(const MetricData& h, const DolbeaultData& d, LapKind kind,
                      ContractMode mode, const MatrixField& s,
                      ConnAction action = ConnAction::End);

// Covariant derivative components (used by identity tests and the L-operator).
MatrixField conn_apply(const Connection& conn, const MatrixField& s, CDir dir, ConnAction action);

struct EinsteinConstants {
    double c_V = 0.0, c_H = 0.0;
    double c_k(double k) const { return c_V + c_H / k; }
};
EinsteinConstants einstein_constants(const DolbeaultData& d, const MetricData& h);

// g . dbar = g o dbar o g^{-1}; throws DomainError on singular g.
DolbeaultData gauge_transform(const MatrixField& g, const DolbeaultData& d);

// Pointwise Hermitian square root of the metric as a gauge field.
MatrixField metric_sqrt_field(const MetricData& h);

}  // namespace fhe
