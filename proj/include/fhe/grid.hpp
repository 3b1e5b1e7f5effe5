#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace fhe {

enum class BaseKind { Torus, Annulus };

// One real grid direction with its differentiation and quadrature data.
// Periodic directions use dense spectral differentiation matrices (exact on
// resolved Fourier modes, Nyquist mode of D1 zeroed as usual); the annulus
// radial direction uses 4th-order centered stencils with 4th-order one-sided
// closures and trapezoidal weights.
struct Axis {
    int n = 0;
    bool periodic = true;
    Eigen::VectorXd coord;    // grid points in [0,1]
    Eigen::VectorXd weights;  // quadrature weights, sum == 1 exactly
    Eigen::MatrixXd d1;       // first derivative
    Eigen::MatrixXd d2;       // second derivative
    // Energy variant of d1: on periodic axes the Nyquist mode is kept (as
    // e^{+i pi n x}), so d1e^H W d1e = -W d2 exactly and Gram forms built
    // from it have no spurious Nyquist kernel. Radial: equal to d1.
    Eigen::MatrixXcd d1e;

    static Axis make_periodic(int n);
    static Axis make_radial(int n);
};

struct GridSpec {
    int fibre_n = 16;               // points per real fibre direction
    BaseKind base_kind = BaseKind::Torus;
    int base_n0 = 16;               // torus: first direction; annulus: radial
    int base_n1 = 16;               // torus: second direction; annulus: angular
    double k = 1.0;                 // adiabatic parameter in omega_k = omega_X + k omega_B
};

// Discretized X x B with X the unit-square torus (coordinate z = x1 + i x2)
// and B either a unit-square torus or the annulus [0,1] x S^1 with coordinate
// w = x + iy, x angular (periodic), y radial (Dirichlet ends). Unit cells, so
// vol(X) = vol(B) = 1 with omega = (i/2) dz ^ dzbar per factor.
class ProductGrid {
  public:
    explicit ProductGrid(const GridSpec& spec);

    const GridSpec& spec() const { return spec_; }
    BaseKind base_kind() const { return spec_.base_kind; }
    double k() const { return spec_.k; }

    // axes: 0 = fibre x1, 1 = fibre x2, 2 = base x (angular on annulus),
    // 3 = base y (radial on annulus).
    const Axis& axis(int a) const { return axes_[a]; }

    long n_points() const { return np_total_; }
    long n_fibre() const { return np_fibre_; }
    long n_base() const { return np_base_; }

    long index(int i1, int i2, int j1, int j2) const {
        return ((static_cast<long>(i1) * axes_[1].n + i2) * axes_[2].n + j1) * axes_[3].n + j2;
    }
    long base_index(int j1, int j2) const { return static_cast<long>(j1) * axes_[3].n + j2; }

    double fibre_weight(long pf) const { return wf_[pf]; }    // pf in [0, n_fibre)
    double base_weight(long pb) const { return wb_[pb]; }     // pb in [0, n_base)
    double point_weight(long p) const { return wf_[p / np_base_] * wb_[p % np_base_]; }

    // Coordinates of a base point.
    double base_x(long pb) const { return axes_[2].coord[static_cast<int>(pb / axes_[3].n)]; }
    double base_y(long pb) const { return axes_[3].coord[static_cast<int>(pb % axes_[3].n)]; }
    double fibre_x1(long pf) const { return axes_[0].coord[static_cast<int>(pf / axes_[1].n)]; }
    double fibre_x2(long pf) const { return axes_[1].coord[static_cast<int>(pf % axes_[1].n)]; }

    bool base_boundary(long pb) const {
        if (spec_.base_kind != BaseKind::Annulus) return false;
        int j2 = static_cast<int>(pb % axes_[3].n);
        return j2 == 0 || j2 == axes_[3].n - 1;
    }
    bool has_boundary() const { return spec_.base_kind == BaseKind::Annulus; }

  private:
    GridSpec spec_;
    Axis axes_[4];
    long np_total_ = 0, np_fibre_ = 0, np_base_ = 0;
    std::vector<double> wf_, wb_;
};

}  // namespace fhe
