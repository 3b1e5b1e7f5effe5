#include "fhe/presets.hpp"

#include <cmath>

#include "fhe/errors.hpp"

namespace fhe {

Eigen::MatrixXcd nilpotent_matrix() {
    Eigen::MatrixXcd n = Eigen::MatrixXcd::Zero(2, 2);
    n(0, 1) = 1.0;
    return n;
}

DolbeaultData DeformationPreset::dolbeault(double s) const {
    DolbeaultData d = DolbeaultData::trivial(a.grid(), a.rank());
    d.aV = cd(s, 0.0) * a.aV;
    d.aV.set_tag(Degree::Dzb);
    d.aH = cd(s, 0.0) * aH;
    d.aH.set_tag(Degree::Dwb);
    d.gauge_fixed = a.gauge_fixed;
    d.integ_tol = integ_tol;
    d.sep_v = a.sep;
    return d;
}

std::function<DolbeaultData(double)> DeformationPreset::path() const {
    return [ps = *this](double s) { return ps.dolbeault(s); };
}

namespace {

MatrixField scalar_profile(const ProductGrid& g, const std::function<cd(double, double, double, double)>& f) {
    MatrixField out(g, 1);
    for (long pf = 0; pf < g.n_fibre(); ++pf) {
        double x1 = g.fibre_x1(pf), x2 = g.fibre_x2(pf);
        for (long pb = 0; pb < g.n_base(); ++pb)
            out.at(pf * g.n_base() + pb)(0, 0) = f(x1, x2, g.base_x(pb), g.base_y(pb));
    }
    return out;
}

MatrixField assemble_sep(const ProductGrid& g, const SeparableDeformation& sep, Degree tag) {
    int r = sep.mats.empty() ? 2 : static_cast<int>(sep.mats[0].rows());
    MatrixField out(g, r, tag);
    for (size_t c = 0; c < sep.mats.size(); ++c)
        for (long p = 0; p < g.n_points(); ++p)
            out.at(p) += sep.profiles[c].at(p)(0, 0) * sep.mats[c];
    return out;
}

}  // namespace

DeformationPreset make_preset(const std::string& name, const ProductGrid& g, double eps,
                              double eps_h, double delta) {
    const cd ii(0.0, 1.0);
    DeformationPreset ps;
    ps.name = name;
    Eigen::MatrixXcd N = nilpotent_matrix();

    SeparableDeformation sep;
    ps.aH = MatrixField(g, 2, Degree::Dwb);

    if (name == "diagonal_zero") {
        ps.a = DeformationData::zero(g, 2);
        return ps;
    }
    if ((name == "annulus_mixed" || name == "vertical_wave") && !g.has_boundary())
        throw ConfigError("preset '" + name + "' uses e^{2 pi i w}, which is periodic only on the annulus base");
    if (name == "annulus_mixed" || name == "vertical_wave") {
        // radial finite-difference truncation of e^{-2 pi y} profiles
        double h = 1.0 / (g.axis(3).n - 1);
        ps.integ_tol = 500.0 * h * h * h * h;
    }
    if (name == "nilpotent_constant") {
        sep.profiles.push_back(scalar_profile(g, [](double, double, double, double) { return cd(1, 0); }));
        sep.mats.push_back(N);
        ps.a.gauge_fixed = true;
    } else if (name == "annulus_mixed") {
        auto wave = [ii](double, double, double bx, double by) {
            return std::exp(ii * 2.0 * M_PI * (bx + ii * by));
        };
        sep.profiles.push_back(scalar_profile(g, [](double, double, double, double) { return cd(1, 0); }));
        sep.mats.push_back(N);
        sep.profiles.push_back(scalar_profile(g, [&](double a1, double a2, double bx, double by) {
            return eps * wave(a1, a2, bx, by);
        }));
        sep.mats.push_back(N.transpose().eval());
        ps.a.gauge_fixed = true;
    } else if (name == "vertical_wave") {
        sep.profiles.push_back(scalar_profile(g, [ii](double, double, double bx, double by) {
            return std::exp(ii * 2.0 * M_PI * (bx + ii * by));
        }));
        sep.mats.push_back(N);
        ps.a.gauge_fixed = true;
    } else if (name == "fibre_modulated") {
        sep.profiles.push_back(scalar_profile(g, [delta](double x1, double, double, double) {
            return cd(1.0 + delta * std::cos(2.0 * M_PI * x1), 0.0);
        }));
        sep.mats.push_back(N);
        ps.a.gauge_fixed = false;  // dbar_V^* aV != 0 for z-dependent profiles
    } else {
        throw ConfigError("unknown deformation preset '" + name + "'");
    }

    ps.a.aV = assemble_sep(g, sep, Degree::Dzb);
    ps.a.sep = sep;
    ps.a.commutant_dim = commutant_dim(ps.a.aV);

    if (name == "annulus_mixed") {
        // horizontal component in the pointwise commutant of aV
        MatrixField gfac = scalar_profile(g, [&](double, double, double bx, double by) {
            return eps_h * (0.3 + std::exp(ii * 2.0 * M_PI * (bx + ii * by)));
        });
        for (long p = 0; p < g.n_points(); ++p)
            ps.aH.at(p) = gfac.at(p)(0, 0) * ps.a.aV.at(p);
    }
    return ps;
}

namespace {

// nullspace dimension of the stacked linear maps X -> [X, A(b)] on a given
// real-linear parametrization of X
int nullspace_dim(const MatrixField& aV, const std::vector<Eigen::MatrixXcd>& basis) {
    const ProductGrid& g = aV.grid();
    const int r = aV.rank();
    const int nb = static_cast<int>(basis.size());
    // sample rows over all base points at fibre point 0 plus a coarse fibre
    // sample (profiles are smooth; kernels are intersections over points)
    std::vector<long> pts;
    for (long pb = 0; pb < g.n_base(); ++pb) pts.push_back(pb);
    for (long pf = 0; pf < g.n_fibre(); pf += std::max<long>(1, g.n_fibre() / 8))
        pts.push_back(pf * g.n_base());
    Eigen::MatrixXd M(static_cast<long>(pts.size()) * 2 * r * r, nb);
    long row = 0;
    for (long p : pts) {
        Eigen::MatrixXcd A = aV.at(p);
        for (int i = 0; i < nb; ++i) {
            Eigen::MatrixXcd c = basis[i] * A - A * basis[i];
            for (int q = 0; q < r * r; ++q) {
                M(row + 2 * q, i) = c.data()[q].real();
                M(row + 2 * q + 1, i) = c.data()[q].imag();
            }
        }
        row += 2 * r * r;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    int dim = 0;
    double smax = svd.singularValues().size() ? svd.singularValues().maxCoeff() : 0.0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] < 1e-10 * (1.0 + smax)) ++dim;
    return dim;
}

}  // namespace

int hermitian_tracefree_commutant_dim(const MatrixField& aV) {
    const int r = aV.rank();
    std::vector<Eigen::MatrixXcd> basis;
    const cd ii(0.0, 1.0);
    for (int i = 0; i < r; ++i)
        for (int j = i + 1; j < r; ++j) {
            Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(r, r);
            m(i, j) = 1.0;
            m(j, i) = 1.0;
            basis.push_back(m);
            m(i, j) = -ii;
            m(j, i) = ii;
            basis.push_back(m);
        }
    for (int i = 0; i + 1 < r; ++i) {
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(r, r);
        m(i, i) = 1.0;
        m(i + 1, i + 1) = -1.0;
        basis.push_back(m);
    }
    return nullspace_dim(aV, basis);
}

int commutant_dim(const MatrixField& aV) {
    const int r = aV.rank();
    std::vector<Eigen::MatrixXcd> basis;
    const cd ii(0.0, 1.0);
    for (int q = 0; q < r * r; ++q) {
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(r, r);
        m.data()[q] = 1.0;
        basis.push_back(m);
        m.data()[q] = ii;
        basis.push_back(m);
    }
    // complex dimension = real nullspace dim / 2
    return nullspace_dim(aV, basis) / 2;
}

}  // namespace fhe
