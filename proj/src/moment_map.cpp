#include "fhe/moment_map.hpp"

#include <cmath>

#include "fhe/errors.hpp"

namespace fhe {

DeformationData DeformationData::zero(const ProductGrid& g, int rank) {
    DeformationData a;
    a.aV = MatrixField(g, rank, Degree::Dzb);
    a.gauge_fixed = true;
    a.commutant_dim = rank * rank;
    a.sep = SeparableDeformation{};
    return a;
}

double omega_pair(const MetricData& h, const MatrixField& alpha, const MatrixField& beta,
                  long pb) {
    // Omega(a~, b~) = 2i int_X tr(A B^{*h} - A^{*h} B) omega^n at the fibre
    // over pb, A, B the (0,1) endomorphism parts.
    const ProductGrid& g = alpha.grid();
    cd acc(0.0, 0.0);
    for (long pf = 0; pf < g.n_fibre(); ++pf) {
        long p = pf * g.n_base() + pb;
        Eigen::MatrixXcd s = h.sigma.at(p);
        Eigen::MatrixXcd si = s.inverse();
        Eigen::MatrixXcd A = alpha.at(p), B = beta.at(p);
        Eigen::MatrixXcd Bs = si * B.adjoint() * s;
        Eigen::MatrixXcd As = si * A.adjoint() * s;
        acc += g.fibre_weight(pf) * ((A * Bs).trace() - (As * B).trace());
    }
    cd v = cd(0.0, 2.0) * acc;
    return v.real();
}

MatrixField infinitesimal_action(const Eigen::MatrixXcd& xi, const DeformationData& a) {
    MatrixField out(a.grid(), a.rank(), Degree::Dzb);
    for (long p = 0; p < out.n_points(); ++p) out.at(p) = xi * a.aV.at(p) - a.aV.at(p) * xi;
    return out;
}

namespace {

// basis of the skew-Hermitian constant matrices u(r)
std::vector<Eigen::MatrixXcd> skew_basis(int r) {
    std::vector<Eigen::MatrixXcd> out;
    const cd ii(0.0, 1.0);
    for (int i = 0; i < r; ++i) {
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(r, r);
        m(i, i) = ii;
        out.push_back(m);
    }
    for (int i = 0; i < r; ++i)
        for (int j = i + 1; j < r; ++j) {
            Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(r, r);
            m(i, j) = 1.0;
            m(j, i) = -1.0;
            out.push_back(m);
            m(i, j) = ii;
            m(j, i) = ii;
            out.push_back(m);
        }
    return out;
}

}  // namespace

BaseField nu(const MetricData& h, const HoloFrame& fr, const DeformationData& a) {
    const ProductGrid& g = fr.grid();
    const int r = fr.rank();
    auto eta = skew_basis(r);
    const int dim = static_cast<int>(eta.size());
    BaseField out(g, r);
    for (long pb = 0; pb < g.n_base(); ++pb) {
        // h-skew-Hermitian holomorphic basis xi_i = sigma^{-1/2} eta_i sigma^{1/2}
        Eigen::MatrixXcd s = h.sigma.at(pb);  // fibre-constant metric, pf = 0 slice
        Eigen::MatrixXcd sh = herm_sqrt(s), shi = herm_inv_sqrt(s);
        std::vector<Eigen::MatrixXcd> xi(dim);
        for (int i = 0; i < dim; ++i) xi[i] = shi * eta[i] * sh;

        Eigen::MatrixXd K(dim, dim);
        Eigen::VectorXd rhs(dim);
        for (int i = 0; i < dim; ++i) {
            for (int j = 0; j < dim; ++j) K(i, j) = -((xi[i] * xi[j]).trace()).real();
            MatrixField xa = infinitesimal_action(xi[i], a);
            rhs[i] = -0.5 * omega_pair(h, xa, a.aV, pb);
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(K);
        if (ldlt.info() != Eigen::Success)
            throw NumericalError("nu: Gram system singular at base point " + std::to_string(pb));
        Eigen::VectorXd c = ldlt.solve(rhs);
        Eigen::MatrixXcd v = Eigen::MatrixXcd::Zero(r, r);
        for (int i = 0; i < dim; ++i) v += c[i] * xi[i];
        out.at(pb) = v;
    }
    return out;
}

NuEvaluator::NuEvaluator(const ProductGrid& g, const DeformationData& a)
    : grid_(&g), rank_(a.rank()) {
    if (!a.sep)
        throw ConfigError("NuEvaluator requires a separable deformation representation");
    const auto& sep = *a.sep;
    nterms_ = static_cast<int>(sep.mats.size());
    mats_ = sep.mats;
    moments_.reserve(static_cast<size_t>(nterms_) * nterms_);
    for (int c = 0; c < nterms_; ++c)
        for (int cp = 0; cp < nterms_; ++cp) {
            BaseField m(g, 1);
            for (long pf = 0; pf < g.n_fibre(); ++pf) {
                const double w = g.fibre_weight(pf);
                for (long pb = 0; pb < g.n_base(); ++pb) {
                    long p = pf * g.n_base() + pb;
                    m.at(pb)(0, 0) += w * sep.profiles[c].at(p)(0, 0) *
                                      std::conj(sep.profiles[cp].at(p)(0, 0));
                }
            }
            moments_.push_back(std::move(m));
        }
}

BaseField NuEvaluator::i_nu(const BaseField& sigma) const {
    // i nu = -2 T, T(b) = int_X [aV, aV^{* h sigma}] omega^n; the trace of T
    // vanishes identically (commutators), so no trace correction is needed.
    const ProductGrid& g = *grid_;
    BaseField out(g, rank_);
    for (long pb = 0; pb < g.n_base(); ++pb) {
        Eigen::MatrixXcd s = sigma.at(pb);
        Eigen::MatrixXcd si = s.inverse();
        Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(rank_, rank_);
        for (int c = 0; c < nterms_; ++c)
            for (int cp = 0; cp < nterms_; ++cp) {
                Eigen::MatrixXcd Mstar = si * mats_[cp].adjoint() * s;
                cd gcc = moments_[c * nterms_ + cp].at(pb)(0, 0);
                T += gcc * (mats_[c] * Mstar - Mstar * mats_[c]);
            }
        out.at(pb) = -2.0 * T;
    }
    return out;
}

ExpansionReport expansion_defect(const MetricData& h, const HoloFrame& fr,
                                 const DeformationData& a,
                                 const std::function<DolbeaultData(double)>& path,
                                 const std::vector<double>& s_list) {
    BaseField nu_val = nu(h, fr, a);
    ExpansionReport rep;
    rep.s_values = s_list;
    double scale = 0.0;
    for (double s : s_list) {
        DolbeaultData ds = path(s);
        double integ = integrability_defect(ds);
        if (integ > ds.integ_tol)
            throw DomainError("expansion_defect: path is non-integrable at s = " +
                              std::to_string(s) + " (defect " + std::to_string(integ) + ")");
        MatrixField ivf = contracted_curvature(h, ds, ContractMode::V);
        BaseField lhs = p(h, fr, ivf).to_base();
        scale = std::max(scale, lhs.max_abs());
        for (long pb = 0; pb < lhs.n_points(); ++pb)
            lhs.at(pb) += s * s * cd(0.0, 1.0) * nu_val.at(pb);
        rep.defects.push_back(lhs.max_abs());
    }
    double floor_level = 1e-11 * (1.0 + scale);
    bool all_tiny = true;
    for (double d : rep.defects) all_tiny = all_tiny && d < floor_level;
    rep.exact_cancellation = all_tiny;
    if (!all_tiny) rep.slope = loglog_slope(rep.s_values, rep.defects);
    return rep;
}

std::function<DolbeaultData(double)> linear_path(const DeformationData& a) {
    return [&a](double s) {
        DolbeaultData d = DolbeaultData::trivial(a.grid(), a.rank());
        d.aV = cd(s, 0.0) * a.aV;
        d.aV.set_tag(Degree::Dzb);
        d.gauge_fixed = a.gauge_fixed;
        return d;
    };
}

DeformationData fibre_average(const DeformationData& a) {
    const ProductGrid& g = a.grid();
    DeformationData out;
    out.aV = MatrixField(g, a.rank(), Degree::Dzb);
    BaseField avg(g, a.rank());
    for (long pf = 0; pf < g.n_fibre(); ++pf) {
        double w = g.fibre_weight(pf);
        for (long pb = 0; pb < g.n_base(); ++pb) avg.at(pb) += w * a.aV.at(pf * g.n_base() + pb);
    }
    for (long p = 0; p < g.n_points(); ++p) out.aV.at(p) = avg.at(p % g.n_base());
    out.gauge_fixed = true;
    out.commutant_dim = a.commutant_dim;
    if (a.sep) {
        SeparableDeformation sep;
        for (size_t c = 0; c < a.sep->mats.size(); ++c) {
            BaseField pavg(g, 1);
            for (long pf = 0; pf < g.n_fibre(); ++pf) {
                double w = g.fibre_weight(pf);
                for (long pb = 0; pb < g.n_base(); ++pb)
                    pavg.at(pb)(0, 0) += w * a.sep->profiles[c].at(pf * g.n_base() + pb)(0, 0);
            }
            MatrixField prof(g, 1);
            for (long p = 0; p < g.n_points(); ++p)
                prof.at(p)(0, 0) = pavg.at(p % g.n_base())(0, 0);
            sep.profiles.push_back(std::move(prof));
            sep.mats.push_back(a.sep->mats[c]);
        }
        out.sep = sep;
    }
    return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const int n = static_cast<int>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        double lx = std::log(x[i]), ly = std::log(std::max(y[i], 1e-300));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace fhe
