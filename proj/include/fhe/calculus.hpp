#pragma once

#include <cstdint>
#include <random>

#include "fhe/field.hpp"

namespace fhe {

// Complex coordinate directions on the product: z = x1 + i x2 on the fibre,
// w = x + i y on the base.
enum class CDir { Z, Zbar, W, Wbar };

// Apply a real axis-operator (d1 or d2 of an Axis) along one of the four grid
// axes to every matrix entry.
MatrixField apply_axis(const MatrixField& f, int axis_index, const Eigen::MatrixXd& op);
BaseField apply_base_axis(const BaseField& f, int base_axis, const Eigen::MatrixXd& op);

// Complex derivative, d_z = (d_x1 - i d_x2)/2 etc. Exact on resolved Fourier
// modes in periodic directions.
MatrixField deriv(const MatrixField& f, CDir dir);
BaseField base_deriv(const BaseField& f, CDir dir);  // W or Wbar only

enum class ContractMode { V, H, K };

// Contraction of a (1,1)-form against the product Kahler structure.
// Normalization: Lambda(phi dz^dzbar) = -2i phi, so Lambda_V omega_X = 1.
// Mode K gives Lambda_V + k^{-1} Lambda_H with k from the grid.
struct OneOneForm {
    MatrixField zz;  // dz ^ dzbar component
    MatrixField zw;  // dz ^ dwbar
    MatrixField wz;  // dw ^ dzbar
    MatrixField ww;  // dw ^ dwbar
};
MatrixField contract(const OneOneForm& F, ContractMode mode);
// mode K against an explicit k (for k-sweeps on a fixed grid)
MatrixField contract(const OneOneForm& F, ContractMode mode, double k);

// Fibre integral against omega_X^n (per base point) and total integral.
BaseField fibre_integral(const MatrixField& f);
Eigen::MatrixXcd total_integral(const MatrixField& f);
Eigen::MatrixXcd base_integral(const BaseField& f);

// Squared L^2(omega_k) norm. Scalar fields carry the k^m volume factor;
// tagged 1-form components additionally carry the pointwise form weight
// (|dz|^2 = 2 vertical, |dw|^2 = 2/k horizontal).
double lp_norm_sq(const MatrixField& f, double k);
inline double lp_norm(const MatrixField& f, double k) { return std::sqrt(lp_norm_sq(f, k)); }

// Complex L^2(omega_k) pairing with the same weights; tags of f and g must
// match. 1-form pairs combine per-component.
cd l2_inner(const MatrixField& f, const MatrixField& g, double k);

// Fibrewise complex L^2 pairing (flat reference metric), one value per base
// point; used by projections and monitors.
BaseField fibre_l2_inner(const MatrixField& f, const MatrixField& g);

// Seeded random fields for identity tests. Periodic axes are synthesized from
// Fourier modes with |m| <= bandwidth (the top third of the spectrum stays
// empty at the default bandwidth = n/3); the annulus radial axis uses the
// low cosine modes cos(j pi y), j <= bandwidth_radial.
class RandomFields {
  public:
    explicit RandomFields(uint64_t seed) : rng_(seed) {}

    MatrixField field(const ProductGrid& g, int rank, int bandwidth = -1);
    MatrixField hermitian_field(const ProductGrid& g, int rank, int bandwidth = -1);
    // exp of a scaled random Hermitian field: positive, bounded conditioning
    MatrixField positive_field(const ProductGrid& g, int rank, double amplitude,
                               int bandwidth = -1);
    // identity + scaled Hermitian field: positive and exactly band-limited
    MatrixField positive_bandlimited(const ProductGrid& g, int rank, double margin,
                                     int bandwidth);
    BaseField base_field(const ProductGrid& g, int rank, int bandwidth = -1);
    BaseField base_hermitian(const ProductGrid& g, int rank, int bandwidth = -1);
    Eigen::MatrixXcd matrix(int rank);
    Eigen::MatrixXcd hermitian_matrix(int rank);

  private:
    std::mt19937_64 rng_;
    double unit();
};

}  // namespace fhe
