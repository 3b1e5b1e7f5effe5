#pragma once

#include <vector>

#include "fhe/bundle.hpp"

namespace fhe {

// Per-base-point basis of the fibrewise holomorphic endomorphisms
// H^0(X, End E_b). On the trivial testbed this is the r^2 elementary
// matrices at every b (constant_in_z path); the general path stores
// z-dependent basis fields from a fibrewise kernel solve.
class HoloFrame {
  public:
    static HoloFrame trivial(const ProductGrid& g, int rank, double tol = 1e-8);
    // Dense fibrewise kernel solve of the vertical Laplacian of d0 at every
    // base point; throws AssumptionError if the kernel dimension varies.
    static HoloFrame solve(const DolbeaultData& d0, double tol);

    const ProductGrid& grid() const { return *grid_; }
    int rank() const { return rank_; }
    int dim() const { return dim_; }
    double tol() const { return tol_; }
    bool constant_in_z() const { return constant_in_z_; }

    // basis element i at base point pb, fibre point pf
    Eigen::MatrixXcd basis(long pb, int i, long pf) const;

  private:
    const ProductGrid* grid_ = nullptr;
    int rank_ = 0, dim_ = 0;
    double tol_ = 1e-8;
    bool constant_in_z_ = true;
    // constant path: [pb][i] matrices; general path: [pb][i][pf] entries
    std::vector<Eigen::MatrixXcd> const_basis_;
    std::vector<cd> general_basis_;
};

// Per-base-point coefficients against a HoloFrame.
struct SectionF {
    const HoloFrame* frame = nullptr;
    Eigen::MatrixXcd coeffs;  // n_base x dim

    MatrixField reconstruct() const;
    // For constant-in-z frames only: the matrix value per base point.
    BaseField to_base() const;
    double max_abs() const { return coeffs.cwiseAbs().maxCoeff(); }
};

SectionF section_from_base(const HoloFrame& fr, const BaseField& m);

struct GramReport {
    double max_condition = 0.0;
};

// Fibrewise L^2(h)-orthogonal projection onto the frame span. Cholesky Gram
// solve per base point with condition monitoring (cond > 1e10 raises).
SectionF pi(const MetricData& h, const HoloFrame& fr, const MatrixField& f,
            GramReport* report = nullptr);

// Trace-free part of pi: p(f) = pi(f) - (tr pi(f)/r) id.
SectionF p(const MetricData& h, const HoloFrame& fr, const MatrixField& f,
           GramReport* report = nullptr);

// h-Hermitian / h-skew-Hermitian split of a section (metric must be
// fibre-constant, i.e. vertically holomorphic).
void split_hs(const MetricData& h, const HoloFrame& fr, const SectionF& s, SectionF& herm,
              SectionF& skew);

// Chern connection of the induced L^2 metric on the frame bundle:
// (nabla s)(dir) = pi_h((nabla_H s~)(dir)), dir in {W, Wbar}.
SectionF nabla_F(const MetricData& h, const HoloFrame& fr, const SectionF& s, CDir dir);

// Induced L^2-Hermitian pairing h_F(s,t) per base point.
BaseField frame_metric_pair(const MetricData& h, const HoloFrame& fr, const SectionF& s,
                            const SectionF& t);

// Squared distance between two fibre-constant positive metrics in the space
// of vertically Hermite-Einstein metrics: integral over B of the fibrewise
// homogeneous-space distance (sum of squared log generalized eigenvalues).
double distance_sq(const BaseField& sigma1, const BaseField& sigma2);

}  // namespace fhe
