#pragma once

#include <Eigen/Dense>
#include <cassert>
#include <complex>
#include <vector>

#include "fhe/grid.hpp"

namespace fhe {

using cd = std::complex<double>;

// Form-degree metadata for grid-indexed matrix fields. A (1,1)-form is kept
// as its four labelled component fields rather than a single tagged object.
enum class Degree {
    Scalar,   // (0,0)
    Dz,       // dz component of a (1,0)-form
    Dw,
    Dzb,      // dzbar component of a (0,1)-form
    Dwb,
    TwoForm,  // a labelled component of a 2-form (used for defect checks)
};

// Grid-indexed r x r complex matrices over the full product grid.
class MatrixField {
  public:
    MatrixField() = default;
    MatrixField(const ProductGrid& g, int rank, Degree tag = Degree::Scalar)
        : grid_(&g), rank_(rank), tag_(tag), a_(g.n_points() * rank * rank, cd(0, 0)) {}

    const ProductGrid& grid() const { return *grid_; }
    int rank() const { return rank_; }
    Degree tag() const { return tag_; }
    void set_tag(Degree t) { tag_ = t; }
    long n_points() const { return grid_->n_points(); }

    Eigen::Map<Eigen::MatrixXcd> at(long p) {
        return {a_.data() + p * rank_ * rank_, rank_, rank_};
    }
    Eigen::Map<const Eigen::MatrixXcd> at(long p) const {
        return {a_.data() + p * rank_ * rank_, rank_, rank_};
    }
    cd* data() { return a_.data(); }
    const cd* data() const { return a_.data(); }

    MatrixField& operator+=(const MatrixField& o);
    MatrixField& operator-=(const MatrixField& o);
    MatrixField& operator*=(cd c);
    friend MatrixField operator+(MatrixField l, const MatrixField& r) { return l += r; }
    friend MatrixField operator-(MatrixField l, const MatrixField& r) { return l -= r; }
    friend MatrixField operator*(cd c, MatrixField f) { return f *= c; }

    double max_abs() const;  // sup over points of the Frobenius norm

  private:
    const ProductGrid* grid_ = nullptr;
    int rank_ = 0;
    Degree tag_ = Degree::Scalar;
    std::vector<cd> a_;
};

// Matrices indexed by base points only (sections of base bundles, monitors).
class BaseField {
  public:
    BaseField() = default;
    BaseField(const ProductGrid& g, int rank)
        : grid_(&g), rank_(rank), a_(g.n_base() * rank * rank, cd(0, 0)) {}

    const ProductGrid& grid() const { return *grid_; }
    int rank() const { return rank_; }
    long n_points() const { return grid_->n_base(); }

    Eigen::Map<Eigen::MatrixXcd> at(long pb) {
        return {a_.data() + pb * rank_ * rank_, rank_, rank_};
    }
    Eigen::Map<const Eigen::MatrixXcd> at(long pb) const {
        return {a_.data() + pb * rank_ * rank_, rank_, rank_};
    }

    BaseField& operator+=(const BaseField& o);
    BaseField& operator-=(const BaseField& o);
    BaseField& operator*=(cd c);
    friend BaseField operator+(BaseField l, const BaseField& r) { return l += r; }
    friend BaseField operator-(BaseField l, const BaseField& r) { return l -= r; }
    friend BaseField operator*(cd c, BaseField f) { return f *= c; }

    double max_abs(bool interior_only = false) const;

    // Broadcast to a z-constant field on the full grid.
    MatrixField extend(Degree tag = Degree::Scalar) const;

  private:
    const ProductGrid* grid_ = nullptr;
    int rank_ = 0;
    std::vector<cd> a_;
};

MatrixField constant_field(const ProductGrid& g, const Eigen::MatrixXcd& m,
                           Degree tag = Degree::Scalar);
BaseField constant_base_field(const ProductGrid& g, const Eigen::MatrixXcd& m);
MatrixField identity_field(const ProductGrid& g, int rank);

// Pointwise algebra helpers.
MatrixField mul(const MatrixField& a, const MatrixField& b);
MatrixField adjoint(const MatrixField& a);          // pointwise conjugate transpose
MatrixField commutator(const MatrixField& a, const MatrixField& b);
void hermitize(BaseField& f);                       // f <- (f + f^dag)/2

// Hermitian matrix functions via eigendecomposition (eigenvalue floor guards
// the inverse square root paths).
Eigen::MatrixXcd herm_sqrt(const Eigen::MatrixXcd& m, double floor = 1e-13);
Eigen::MatrixXcd herm_inv_sqrt(const Eigen::MatrixXcd& m, double floor = 1e-13);
Eigen::MatrixXcd herm_exp(const Eigen::MatrixXcd& m);
Eigen::MatrixXcd herm_log(const Eigen::MatrixXcd& m, double floor = 1e-300);
double herm_min_eig(const Eigen::MatrixXcd& m);

BaseField base_exp(const BaseField& u);
BaseField base_log(const BaseField& s);

}  // namespace fhe
