#include "fhe/grid.hpp"

#include <cmath>

#include "fhe/errors.hpp"

namespace fhe {

namespace {
constexpr double kTwoPi = 2.0 * M_PI;
}

Axis Axis::make_periodic(int n) {
    Axis ax;
    ax.n = n;
    ax.periodic = true;
    ax.coord.resize(n);
    ax.weights = Eigen::VectorXd::Constant(n, 1.0 / n);
    for (int j = 0; j < n; ++j) ax.coord[j] = static_cast<double>(j) / n;

    // Dense spectral differentiation on [0,1). Built from the DFT sum so the
    // matrices are exact on every resolved mode; D1 drops the Nyquist mode,
    // D2 keeps it (cosine representation).
    ax.d1 = Eigen::MatrixXd::Zero(n, n);
    ax.d2 = Eigen::MatrixXd::Zero(n, n);
    ax.d1e = Eigen::MatrixXcd::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        for (int l = 0; l < n; ++l) {
            double dx = ax.coord[j] - ax.coord[l];
            double s1 = 0.0, s2 = 0.0;
            std::complex<double> se(0.0, 0.0);
            for (int m = 1; m <= n / 2; ++m) {
                double km = kTwoPi * m;
                bool nyquist = (2 * m == n);
                if (!nyquist) s1 += -2.0 * km * std::sin(km * dx);
                s2 += (nyquist ? -1.0 : -2.0) * km * km * std::cos(km * dx);
                se += std::complex<double>(0.0, km) * std::exp(std::complex<double>(0.0, km * dx));
                if (!nyquist)
                    se += std::complex<double>(0.0, -km) *
                          std::exp(std::complex<double>(0.0, -km * dx));
            }
            ax.d1(j, l) = s1 / n;
            ax.d2(j, l) = s2 / n;
            ax.d1e(j, l) = se / static_cast<double>(n);
        }
    }
    // pin the zero mode: constants differentiate to exactly zero
    for (int j = 0; j < n; ++j) {
        ax.d1(j, j) -= ax.d1.row(j).sum();
        ax.d2(j, j) -= ax.d2.row(j).sum();
        ax.d1e(j, j) -= ax.d1e.row(j).sum();
    }
    return ax;
}

Axis Axis::make_radial(int n) {
    Axis ax;
    ax.n = n;
    ax.periodic = false;
    ax.coord.resize(n);
    double h = 1.0 / (n - 1);
    for (int j = 0; j < n; ++j) ax.coord[j] = j * h;
    ax.weights = Eigen::VectorXd::Constant(n, h);
    ax.weights[0] = ax.weights[n - 1] = 0.5 * h;

    ax.d1 = Eigen::MatrixXd::Zero(n, n);
    ax.d2 = Eigen::MatrixXd::Zero(n, n);
    // 4th-order centered stencils with 4th-order one-sided closures.
    // (d1e is set to d1 after assembly below.)
    auto row1 = [&](int j, std::initializer_list<double> c, int start) {
        int o = start;
        for (double v : c) ax.d1(j, o++) = v / (12.0 * h);
    };
    auto row2 = [&](int j, std::initializer_list<double> c, int start) {
        int o = start;
        for (double v : c) ax.d2(j, o++) = v / (12.0 * h * h);
    };
    for (int j = 0; j < n; ++j) {
        if (j >= 2 && j <= n - 3) {
            row1(j, {1.0, -8.0, 0.0, 8.0, -1.0}, j - 2);
            row2(j, {-1.0, 16.0, -30.0, 16.0, -1.0}, j - 2);
        }
    }
    row1(0, {-25.0, 48.0, -36.0, 16.0, -3.0}, 0);
    row1(1, {-3.0, -10.0, 18.0, -6.0, 1.0}, 0);
    row1(n - 2, {-1.0, 6.0, -18.0, 10.0, 3.0}, n - 5);
    row1(n - 1, {3.0, -16.0, 36.0, -48.0, 25.0}, n - 5);
    if (n >= 6) {
        row2(0, {45.0, -154.0, 214.0, -156.0, 61.0, -10.0}, 0);
        row2(1, {10.0, -15.0, -4.0, 14.0, -6.0, 1.0}, 0);
        row2(n - 2, {1.0, -6.0, 14.0, -4.0, -15.0, 10.0}, n - 6);
        row2(n - 1, {-10.0, 61.0, -156.0, 214.0, -154.0, 45.0}, n - 6);
    } else {
        // 5-point closures (one order lower; only reachable at the minimum
        // admissible radial resolution).
        row2(0, {35.0, -104.0, 114.0, -56.0, 11.0}, 0);
        row2(1, {11.0, -20.0, 6.0, 4.0, -1.0}, 0);
        row2(n - 2, {-1.0, 4.0, 6.0, -20.0, 11.0}, n - 5);
        row2(n - 1, {11.0, -56.0, 114.0, -104.0, 35.0}, n - 5);
    }
    ax.d1e = ax.d1.cast<std::complex<double>>();
    return ax;
}

ProductGrid::ProductGrid(const GridSpec& spec) : spec_(spec) {
    auto check_periodic = [](int n, const char* what) {
        if (n < 4 || n % 2 != 0)
            throw ConfigError(std::string(what) + " resolution must be even and >= 4, got " +
                              std::to_string(n));
    };
    check_periodic(spec.fibre_n, "fibre");
    if (spec.k <= 0.0) throw ConfigError("adiabatic parameter k must be positive");

    axes_[0] = Axis::make_periodic(spec.fibre_n);
    axes_[1] = Axis::make_periodic(spec.fibre_n);
    if (spec.base_kind == BaseKind::Torus) {
        check_periodic(spec.base_n0, "base");
        check_periodic(spec.base_n1, "base");
        axes_[2] = Axis::make_periodic(spec.base_n0);
        axes_[3] = Axis::make_periodic(spec.base_n1);
    } else {
        // base_n0 = radial count, base_n1 = angular count; internally the
        // angular direction is axis 2 (Re w) and radial is axis 3 (Im w).
        if (spec.base_n0 < 5)
            throw ConfigError("annulus radial resolution must be >= 5, got " +
                              std::to_string(spec.base_n0));
        check_periodic(spec.base_n1, "annulus angular");
        axes_[2] = Axis::make_periodic(spec.base_n1);
        axes_[3] = Axis::make_radial(spec.base_n0);
    }

    np_fibre_ = static_cast<long>(axes_[0].n) * axes_[1].n;
    np_base_ = static_cast<long>(axes_[2].n) * axes_[3].n;
    np_total_ = np_fibre_ * np_base_;

    wf_.resize(np_fibre_);
    for (int i1 = 0; i1 < axes_[0].n; ++i1)
        for (int i2 = 0; i2 < axes_[1].n; ++i2)
            wf_[static_cast<long>(i1) * axes_[1].n + i2] = axes_[0].weights[i1] * axes_[1].weights[i2];
    wb_.resize(np_base_);
    for (int j1 = 0; j1 < axes_[2].n; ++j1)
        for (int j2 = 0; j2 < axes_[3].n; ++j2)
            wb_[static_cast<long>(j1) * axes_[3].n + j2] = axes_[2].weights[j1] * axes_[3].weights[j2];
}

}  // namespace fhe
