#include "fhe/checks.hpp"

#include <cmath>

#include "fhe/errors.hpp"

namespace fhe {

void CheckList::add(const std::string& id, double measured, double bound,
                    const std::string& note) {
    results.push_back({id, measured, bound, measured <= bound, note});
}

void CheckList::add_range(const std::string& id, double measured, double lo, double hi,
                          const std::string& note) {
    CheckResult r{id, measured, hi, measured >= lo && measured <= hi, note};
    results.push_back(r);
}

bool CheckList::all_pass() const {
    for (const auto& r : results)
        if (!r.pass) return false;
    return true;
}

namespace {

const cd ii(0.0, 1.0);

GridSpec torus_spec(int nf = 16, int nb = 16, double k = 4.0) {
    GridSpec s;
    s.fibre_n = nf;
    s.base_kind = BaseKind::Torus;
    s.base_n0 = nb;
    s.base_n1 = nb;
    s.k = k;
    return s;
}

MatrixField mode_field(const ProductGrid& g, int rank, int m1, int m2, int m3, int m4) {
    MatrixField f(g, rank);
    for (long pf = 0; pf < g.n_fibre(); ++pf)
        for (long pb = 0; pb < g.n_base(); ++pb) {
            double ph = m1 * g.fibre_x1(pf) + m2 * g.fibre_x2(pf) + m3 * g.base_x(pb) +
                        m4 * g.base_y(pb);
            f.at(pf * g.n_base() + pb) =
                std::exp(cd(0.0, 2.0 * M_PI * ph)) * Eigen::MatrixXcd::Identity(rank, rank);
        }
    return f;
}

// testbed Dolbeault data on the torus: constant vertical part plus a
// commuting w-dependent horizontal part, integrable for every scale
DolbeaultData torus_testbed_dolbeault(const ProductGrid& g, double sv, double sh) {
    DolbeaultData d = DolbeaultData::trivial(g, 2);
    Eigen::MatrixXcd N = Eigen::MatrixXcd::Zero(2, 2);
    N(0, 1) = 1.0;
    for (long p = 0; p < g.n_points(); ++p) {
        long pb = p % g.n_base();
        d.aV.at(p) = sv * N;
        cd f = std::exp(ii * 2.0 * M_PI * g.base_x(pb)) + 0.5 * std::exp(-ii * 2.0 * M_PI * g.base_y(pb));
        d.aH.at(p) = sh * f * (0.4 * Eigen::MatrixXcd::Identity(2, 2) + N);
    }
    d.gauge_fixed = true;
    return d;
}

double rel(double err, double scale) { return err / (1.0 + scale); }

// L^2(h, omega_k) pairing of E-valued fields batched as matrices,
// <f, g>_h = int w_form tr(g^dag sigma f) k dV, with the 1-form weights of
// l2_inner
cd h_pair(const MetricData& h, const MatrixField& f, const MatrixField& g_, double k) {
    const ProductGrid& g = f.grid();
    double wf = 1.0;
    switch (f.tag()) {
        case Degree::Dz:
        case Degree::Dzb: wf = 2.0; break;
        case Degree::Dw:
        case Degree::Dwb: wf = 2.0 / k; break;
        default: break;
    }
    cd s(0, 0);
    for (long p = 0; p < g.n_points(); ++p)
        s += g.point_weight(p) * (g_.at(p).adjoint() * h.sigma.at(p) * f.at(p)).trace();
    return wf * k * s;
}

// metric compatibility residual of one direction pair
double metric_compat_dir(const MetricData& h, const Connection& conn, const MatrixField& s,
                         const MatrixField& t, CDir hol, CDir antihol) {
    // d_hol h(s,t) = h(nabla_hol s, t) + h(s, nabla_antihol t)
    const ProductGrid& g = s.grid();
    MatrixField hst(g, s.rank());
    for (long p = 0; p < g.n_points(); ++p)
        hst.at(p) = t.at(p).adjoint() * h.sigma.at(p) * s.at(p);
    MatrixField lhs = deriv(hst, hol);
    MatrixField ds = conn_apply(conn, s, hol, ConnAction::Bundle);
    MatrixField dt = conn_apply(conn, t, antihol, ConnAction::Bundle);
    double worst = 0.0;
    for (long p = 0; p < g.n_points(); ++p) {
        Eigen::MatrixXcd rhs =
            t.at(p).adjoint() * h.sigma.at(p) * ds.at(p) + dt.at(p).adjoint() * h.sigma.at(p) * s.at(p);
        worst = std::max(worst, (lhs.at(p) - rhs).norm());
    }
    return worst;
}

}  // namespace

CheckList geometry_checks(uint64_t seed, int n_fields) {
    CheckList out;
    ProductGrid g(torus_spec());
    RandomFields rng(seed);
    const double k = g.k();

    {  // contraction split and normalization
        double worst = 0.0, scale = 0.0;
        for (int q = 0; q < n_fields; ++q) {
            OneOneForm F{rng.field(g, 2), rng.field(g, 2), rng.field(g, 2), rng.field(g, 2)};
            MatrixField lhs = contract(F, ContractMode::K);
            MatrixField rhs = contract(F, ContractMode::V) +
                              cd(1.0 / k, 0.0) * contract(F, ContractMode::H);
            worst = std::max(worst, (lhs - rhs).max_abs());
            scale = std::max(scale, lhs.max_abs());
        }
        out.add("geometry/contraction-split", rel(worst, scale), 1e-14);

        OneOneForm wx{constant_field(g, cd(0, 0.5) * Eigen::MatrixXcd::Identity(2, 2)),
                      MatrixField(g, 2), MatrixField(g, 2), MatrixField(g, 2)};
        OneOneForm wb{MatrixField(g, 2), MatrixField(g, 2), MatrixField(g, 2),
                      constant_field(g, cd(0, 0.5) * Eigen::MatrixXcd::Identity(2, 2))};
        double e1 = (contract(wx, ContractMode::V) - identity_field(g, 2)).max_abs();
        double e2 = contract(wx, ContractMode::H).max_abs();
        double e3 = contract(wb, ContractMode::V).max_abs();
        double e4 = (contract(wb, ContractMode::H) - identity_field(g, 2)).max_abs();
        out.add("geometry/contraction-normalization", std::max({e1, e2, e3, e4}), 1e-14);
    }

    {  // spectral differentiation is exact on resolved modes
        double worst = 0.0;
        for (int m = 1; m <= g.axis(0).n / 4; ++m) {
            MatrixField f = mode_field(g, 2, m, -m, m, m);
            MatrixField dz = deriv(f, CDir::Z);
            MatrixField dw = deriv(f, CDir::Wbar);
            // d_z e^{2 pi i(m x1 - m x2)} = pi i (m - i(-m) ... ) handled via
            // the analytic coefficient below
            cd cz = 0.5 * (cd(0, 2 * M_PI * m) - ii * cd(0, -2 * M_PI * m));
            cd cw = 0.5 * (cd(0, 2 * M_PI * m) + ii * cd(0, 2 * M_PI * m));
            MatrixField ez = f, ew = f;
            ez *= cz;
            ew *= cw;
            ez.set_tag(Degree::Dz);
            ew.set_tag(Degree::Dwb);
            worst = std::max(worst, (dz - ez).max_abs() / std::max(1e-30, ez.max_abs()));
            worst = std::max(worst, (dw - ew).max_abs() / std::max(1e-30, ew.max_abs()));
        }
        out.add("geometry/deriv-fourier-exactness", worst, 1e-12);
    }

    {  // quadrature of pure modes
        double worst = 0.0;
        worst = std::max(worst, total_integral(mode_field(g, 2, 1, 0, 0, 0)).norm());
        worst = std::max(worst, total_integral(mode_field(g, 2, 0, 3, -2, 1)).norm());
        worst = std::max(worst, fibre_integral(mode_field(g, 2, 2, 1, 0, 0)).max_abs());
        out.add("geometry/quadrature-pure-mode", worst, 1e-14);
    }

    {  // L^2(omega_k) scaling in k
        double worst = 0.0;
        for (int q = 0; q < std::max(20, n_fields); ++q) {
            MatrixField f = rng.field(g, 2);
            double base = lp_norm_sq(f, 1.0);
            MatrixField fw = f;
            fw.set_tag(Degree::Dwb);
            double base_w = lp_norm_sq(fw, 1.0);
            for (double kk : {2.0, 4.0, 8.0}) {
                worst = std::max(worst, std::abs(lp_norm_sq(f, kk) / base - kk) / kk);
                worst = std::max(worst, std::abs(lp_norm_sq(fw, kk) / base_w - 1.0));
            }
        }
        out.add("geometry/norm-scaling", worst, 1e-10);
    }
    return out;
}

CheckList bundle_checks(uint64_t seed, int n_fields) {
    CheckList out;
    ProductGrid g(torus_spec(16, 16, 4.0));
    RandomFields rng(seed + 1);
    // Two test metrics: an exactly band-limited one (products of sigma with
    // band-limited sections stay resolved, so the sigma^{-1}-free identities
    // are exact on the grid) and an exponential one whose inverse chains have
    // factorially decaying spectral tails.
    MetricData h_poly{rng.positive_bandlimited(g, 2, 0.35, 2)};
    MetricData h{rng.positive_field(g, 2, 0.08, 1)};
    DolbeaultData d = torus_testbed_dolbeault(g, 0.35, 0.3);
    Connection conn = chern_connection(h, d);
    Connection conn_poly = chern_connection(h_poly, d);

    out.add("bundle/integrability-defect", integrability_defect(d), 1e-12);

    {  // metric compatibility
        double worst = 0.0;
        for (int q = 0; q < n_fields; ++q) {
            MatrixField s = rng.field(g, 2, 2);
            MatrixField t = rng.field(g, 2, 2);
            double scale = 1.0 + s.max_abs() * t.max_abs() * h_poly.sigma.max_abs();
            worst = std::max(worst,
                             metric_compat_dir(h_poly, conn_poly, s, t, CDir::Z, CDir::Zbar) / scale);
            worst = std::max(worst,
                             metric_compat_dir(h_poly, conn_poly, s, t, CDir::W, CDir::Wbar) / scale);
        }
        out.add("bundle/metric-compatibility", worst, 1e-9);
    }

    {  // adjoint identities for both operators, modes V/H/K
        double worst = 0.0;
        for (int q = 0; q < n_fields; ++q) {
            MatrixField s = rng.field(g, 2, 2);
            MatrixField tz = rng.field(g, 2, 2), tw = rng.field(g, 2, 2);
            tz.set_tag(Degree::Dz);
            tw.set_tag(Degree::Dw);
            const double k = g.k();
            // <nabla^{1,0} s, tau>_{h, omega_k}
            MatrixField dsz = conn_apply(conn_poly, s, CDir::Z, ConnAction::Bundle);
            MatrixField dsw = conn_apply(conn_poly, s, CDir::W, ConnAction::Bundle);
            dsz.set_tag(Degree::Dz);
            dsw.set_tag(Degree::Dw);
            cd lhs = h_pair(h_poly, dsz, tz, k) + h_pair(h_poly, dsw, tw, k);
            // i[Lambda_k, nabla^{0,1}] tau = -2 nabla_zbar tau_z - (2/k) nabla_wbar tau_w
            MatrixField az = conn_apply(conn_poly, tz, CDir::Zbar, ConnAction::Bundle);
            MatrixField aw = conn_apply(conn_poly, tw, CDir::Wbar, ConnAction::Bundle);
            MatrixField adj = cd(-2.0, 0.0) * az + cd(-2.0 / k, 0.0) * aw;
            adj.set_tag(Degree::Scalar);
            cd rhs = h_pair(h_poly, adj, s, k);
            rhs = std::conj(rhs);  // <s, adj>_h
            worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));

            // (0,1) analogue: <nabla^{0,1} s, tau> = <s, -i[Lambda, nabla^{1,0}] tau>
            MatrixField tzb = rng.field(g, 2, 2), twb = rng.field(g, 2, 2);
            tzb.set_tag(Degree::Dzb);
            twb.set_tag(Degree::Dwb);
            MatrixField dszb = conn_apply(conn_poly, s, CDir::Zbar, ConnAction::Bundle);
            MatrixField dswb = conn_apply(conn_poly, s, CDir::Wbar, ConnAction::Bundle);
            dszb.set_tag(Degree::Dzb);
            dswb.set_tag(Degree::Dwb);
            cd lhs2 = h_pair(h_poly, dszb, tzb, k) + h_pair(h_poly, dswb, twb, k);
            MatrixField bz = conn_apply(conn_poly, tzb, CDir::Z, ConnAction::Bundle);
            MatrixField bw = conn_apply(conn_poly, twb, CDir::W, ConnAction::Bundle);
            MatrixField adj2 = cd(-2.0, 0.0) * bz + cd(-2.0 / k, 0.0) * bw;
            adj2.set_tag(Degree::Scalar);
            cd rhs2 = h_pair(h_poly, adj2, s, k);
            rhs2 = std::conj(rhs2);
            worst = std::max(worst, std::abs(lhs2 - rhs2) / (1.0 + std::abs(lhs2)));
        }
        out.add("bundle/adjoint-identities", worst, 1e-8);
    }

    {  // nabla^{0,1}(sigma^*) = (nabla^{1,0} sigma)^*
        double worst = 0.0;
        for (int q = 0; q < n_fields; ++q) {
            MatrixField s = rng.field(g, 2, 2);
            MatrixField sstar = h_adjoint(h, s);
            MatrixField l_z = conn_apply(conn, sstar, CDir::Zbar, ConnAction::End);
            MatrixField l_w = conn_apply(conn, sstar, CDir::Wbar, ConnAction::End);
            MatrixField r_z = conn_apply(conn, s, CDir::Z, ConnAction::End);
            MatrixField r_w = conn_apply(conn, s, CDir::W, ConnAction::End);
            r_z.set_tag(Degree::Dz);
            r_w.set_tag(Degree::Dw);
            MatrixField rs_z = h_adjoint(h, r_z);
            MatrixField rs_w = h_adjoint(h, r_w);
            double scale = 1.0 + r_z.max_abs() + r_w.max_abs();
            worst = std::max(worst, (l_z - rs_z).max_abs() / scale);
            worst = std::max(worst, (l_w - rs_w).max_abs() / scale);
        }
        out.add("bundle/grad-of-adjoint", worst, 1e-10);
    }

    {  // Laplacian relations
        double worst_diff = 0.0, worst_adj = 0.0;
        for (int q = 0; q < n_fields; ++q) {
            MatrixField s = rng.field(g, 2, 2);
            for (ContractMode mode : {ContractMode::V, ContractMode::H, ContractMode::K}) {
                MatrixField l10 = laplacian(h, d, LapKind::OneZero, mode, s);
                MatrixField l01 = laplacian(h, d, LapKind::ZeroOne, mode, s);
                MatrixField ilf = contracted_curvature(h, d, mode);
                MatrixField comm = commutator(ilf, s);
                double scale = 1.0 + l10.max_abs() + l01.max_abs();
                worst_diff = std::max(worst_diff, ((l10 - l01) - comm).max_abs() / scale);
            }
            // <Delta^{1,0} s, t>_h = <nabla^{1,0} s, nabla^{1,0} t>_h (mode V, k = 1)
            MatrixField t = rng.field(g, 2, 2);
            MatrixField l10 = laplacian(h, d, LapKind::OneZero, ContractMode::V, s,
                                        ConnAction::Bundle);
            MatrixField ds_ = conn_apply(conn, s, CDir::Z, ConnAction::Bundle);
            MatrixField dt_ = conn_apply(conn, t, CDir::Z, ConnAction::Bundle);
            ds_.set_tag(Degree::Dz);
            dt_.set_tag(Degree::Dz);
            cd a = h_pair(h, l10, t, 1.0);
            cd b = h_pair(h, ds_, dt_, 1.0);
            worst_adj = std::max(worst_adj, std::abs(a - b) / (1.0 + std::abs(a)));
        }
        out.add("bundle/laplacian-difference-commutator", worst_diff, 1e-10);
        out.add("bundle/laplacian-adjointness", worst_adj, 1e-8);
    }

    {  // vertically flat reference: Delta_V = 2 Delta_V^{1,0} on End sections
        MetricData hz = MetricData::from_base(
            [&] {
                RandomFields r2(seed + 7);
                BaseField u = r2.base_hermitian(g, 2, 1);
                for (long pb = 0; pb < g.n_base(); ++pb) u.at(pb) *= cd(0.2, 0.0);
                return base_exp(u);
            }());
        DolbeaultData d0 = DolbeaultData::trivial(g, 2);
        double worst = 0.0;
        for (int q = 0; q < n_fields; ++q) {
            MatrixField s = rng.field(g, 2, 2);
            MatrixField full = laplacian(hz, d0, LapKind::Full, ContractMode::V, s);
            MatrixField l10 = laplacian(hz, d0, LapKind::OneZero, ContractMode::V, s);
            MatrixField l01 = laplacian(hz, d0, LapKind::ZeroOne, ContractMode::V, s);
            double scale = 1.0 + full.max_abs();
            worst = std::max(worst, (full - cd(2, 0) * l10).max_abs() / scale);
            worst = std::max(worst, (full - cd(2, 0) * l01).max_abs() / scale);
        }
        out.add("bundle/vertically-flat-laplacian-halving", worst, 1e-9);
    }

    {  // linearisation of sigma -> i Lambda F in both pictures, with an
       // h-Hermitian direction dir = sigma^{-1/2} H sigma^{1/2}
        MatrixField H = rng.hermitian_field(g, 2, 1);
        MatrixField dir(g, 2), sh(g, 2), shi(g, 2);
        for (long p = 0; p < g.n_points(); ++p) {
            sh.at(p) = herm_sqrt(h.sigma.at(p));
            shi.at(p) = herm_inv_sqrt(h.sigma.at(p));
            dir.at(p) = shi.at(p) * H.at(p) * sh.at(p);
        }
        MatrixField base_v = contracted_curvature(h, d, ContractMode::V);
        MatrixField lin_metric = laplacian(h, d, LapKind::OneZero, ContractMode::V, dir);
        MatrixField lin_gauge = laplacian(h, d, LapKind::Full, ContractMode::V, dir);
        std::vector<double> ts{1e-2, 1e-3, 1e-4}, e_metric, e_gauge;
        for (double t : ts) {
            MatrixField expd(g, 2);  // exp(t dir), h-Hermitian positive
            for (long p = 0; p < g.n_points(); ++p)
                expd.at(p) = shi.at(p) * herm_exp(t * H.at(p)) * sh.at(p);
            // metric picture: h exp(t dir)
            MetricData ht{mul(h.sigma, expd)};
            MatrixField fd = contracted_curvature(ht, d, ContractMode::V) - base_v;
            fd *= cd(1.0 / t, 0.0);
            e_metric.push_back((fd - lin_metric).max_abs());
            // gauge picture: exp(t dir) . dbar
            DolbeaultData dg = gauge_transform(expd, d);
            MatrixField fd2 = contracted_curvature(h, dg, ContractMode::V) - base_v;
            fd2 *= cd(1.0 / t, 0.0);
            e_gauge.push_back((fd2 - lin_gauge).max_abs());
        }
        double s1 = std::log(e_metric[0] / e_metric[1]) / std::log(ts[0] / ts[1]);
        double s2 = std::log(e_metric[1] / e_metric[2]) / std::log(ts[1] / ts[2]);
        double s3 = std::log(e_gauge[0] / e_gauge[1]) / std::log(ts[0] / ts[1]);
        double s4 = std::log(e_gauge[1] / e_gauge[2]) / std::log(ts[1] / ts[2]);
        out.add_range("bundle/linearisation-metric-slope", 0.5 * (s1 + s2), 0.9, 1.1);
        out.add_range("bundle/linearisation-gauge-slope", 0.5 * (s3 + s4), 0.9, 1.1);
    }

    {  // integrable curvature has no (0,2) part; contracted curvature Hermitian
        CurvatureData F = curvature(h, d);
        out.add("bundle/f02-vanishing", rel(F.f02.max_abs(), F.oneone.zz.max_abs()), 1e-10);
        double worst = 0.0;
        for (ContractMode mode : {ContractMode::V, ContractMode::H, ContractMode::K}) {
            MatrixField c = contracted_curvature(h, d, mode);
            MatrixField cs = h_adjoint(h, c);
            worst = std::max(worst, rel((c - cs).max_abs(), c.max_abs()));
        }
        out.add("bundle/contracted-curvature-hermitian", worst, 1e-10);
    }

    {  // conjugation between the metric and gauge pictures
        double worst = 0.0;
        RandomFields r3(seed + 11);
        for (int q = 0; q < 10; ++q) {
            MatrixField sig = r3.positive_field(g, 2, 0.15, 1);
            MatrixField shalf(g, 2), shalf_i(g, 2);
            for (long p = 0; p < g.n_points(); ++p) {
                shalf.at(p) = herm_sqrt(sig.at(p));
                shalf_i.at(p) = herm_inv_sqrt(sig.at(p));
            }
            CurvatureData lhs = curvature(MetricData{sig}, d);
            CurvatureData rhs = curvature(MetricData::identity(g, 2), gauge_transform(shalf, d));
            auto cmp = [&](const MatrixField& L, const MatrixField& R) {
                MatrixField conj_ = mul(mul(shalf_i, R), shalf);
                worst = std::max(worst, rel((L - conj_).max_abs(), L.max_abs()));
            };
            cmp(lhs.oneone.zz, rhs.oneone.zz);
            cmp(lhs.oneone.zw, rhs.oneone.zw);
            cmp(lhs.oneone.wz, rhs.oneone.wz);
            cmp(lhs.oneone.ww, rhs.oneone.ww);
        }
        out.add("bundle/conjugation-identity", worst, 1e-10);
    }

    {  // Einstein constants: flat reference and the k-closure
        DolbeaultData d0 = DolbeaultData::trivial(g, 2);
        EinsteinConstants c0 = einstein_constants(d0, MetricData::identity(g, 2));
        out.add("bundle/einstein-flat", std::abs(c0.c_V) + std::abs(c0.c_H), 1e-14);
        EinsteinConstants c1 = einstein_constants(d, h);
        double closure = std::abs(c1.c_k(4.0) - (c1.c_V + 0.25 * c1.c_H));
        out.add("bundle/einstein-k-closure", closure, 1e-15);
    }
    return out;
}

CheckList projection_checks(uint64_t seed, int n_fields) {
    CheckList out;
    ProductGrid g(torus_spec());
    RandomFields rng(seed + 2);
    HoloFrame fr = HoloFrame::trivial(g, 2);
    MetricData h{rng.positive_field(g, 2, 0.15, 1)};

    {  // idempotence and fibrewise self-adjointness in Re L^2(h)
        double worst_idem = 0.0, worst_adj = 0.0;
        for (int q = 0; q < n_fields; ++q) {
            MatrixField f = rng.field(g, 2, 2);
            MatrixField gfield = rng.field(g, 2, 2);
            SectionF pf_ = pi(h, fr, f);
            SectionF ppf = pi(h, fr, pf_.reconstruct());
            worst_idem = std::max(worst_idem, (pf_.coeffs - ppf.coeffs).cwiseAbs().maxCoeff());
            // Re<pi f, g>_h = Re<f, pi g>_h per base point
            MatrixField pfr = pf_.reconstruct();
            MatrixField pgr = pi(h, fr, gfield).reconstruct();
            MatrixField gstar = h_adjoint(h, gfield);
            BaseField l(g, 1), r(g, 1);
            MatrixField t1 = mul(pfr, gstar);
            MatrixField t2 = mul(f, h_adjoint(h, pgr));
            for (long pfi = 0; pfi < g.n_fibre(); ++pfi) {
                double w = g.fibre_weight(pfi);
                for (long pb = 0; pb < g.n_base(); ++pb) {
                    l.at(pb)(0, 0) += w * t1.at(pfi * g.n_base() + pb).trace();
                    r.at(pb)(0, 0) += w * t2.at(pfi * g.n_base() + pb).trace();
                }
            }
            double scale = 1.0 + l.max_abs();
            for (long pb = 0; pb < g.n_base(); ++pb)
                worst_adj = std::max(
                    worst_adj, std::abs(l.at(pb)(0, 0).real() - r.at(pb)(0, 0).real()) / scale);
        }
        out.add("projection/pi-idempotent", worst_idem, 1e-12);
        out.add("projection/pi-self-adjoint", worst_adj, 1e-10);
    }

    {  // Hermitian/skew split behaviour and trace of p
        double worst_split = 0.0, worst_tr = 0.0, worst_orth = 0.0;
        RandomFields r2(seed + 3);
        BaseField u = r2.base_hermitian(g, 2, 1);
        for (long pb = 0; pb < g.n_base(); ++pb) u.at(pb) *= cd(0.3, 0.0);
        MetricData hz = MetricData::from_base(base_exp(u));  // fibre-constant metric
        for (int q = 0; q < n_fields; ++q) {
            MatrixField f = r2.field(g, 2, 2);
            MatrixField fs = h_adjoint(hz, f);
            MatrixField fherm = cd(0.5, 0.0) * (f + fs);
            MatrixField fskew = cd(0.5, 0.0) * (f - fs);
            MatrixField ph = pi(hz, fr, fherm).reconstruct();
            MatrixField ps = pi(hz, fr, fskew).reconstruct();
            worst_split = std::max(worst_split, (ph - h_adjoint(hz, ph)).max_abs());
            worst_split = std::max(worst_split, (ps + h_adjoint(hz, ps)).max_abs());
            // H and S parts orthogonal in the real fibrewise L^2(h)
            MatrixField t = mul(ph, h_adjoint(hz, ps));
            BaseField reip(g, 1);
            for (long pfi = 0; pfi < g.n_fibre(); ++pfi)
                for (long pb = 0; pb < g.n_base(); ++pb)
                    reip.at(pb)(0, 0) += g.fibre_weight(pfi) * t.at(pfi * g.n_base() + pb).trace();
            for (long pb = 0; pb < g.n_base(); ++pb)
                worst_orth = std::max(worst_orth, std::abs(reip.at(pb)(0, 0).real()));
            SectionF pp = p(hz, fr, f);
            BaseField pb_ = pp.to_base();
            for (long pb = 0; pb < g.n_base(); ++pb)
                worst_tr = std::max(worst_tr, std::abs(pb_.at(pb).trace()));
        }
        out.add("projection/pi-preserves-herm-skew", worst_split, 1e-10);
        out.add("projection/herm-skew-orthogonal", worst_orth, 1e-12);
        out.add("projection/p-trace-free", worst_tr, 1e-12);
    }

    {  // conjugation rule for the projection under metric change
        RandomFields r4(seed + 4);
        BaseField u = r4.base_hermitian(g, 2, 1);
        for (long pb = 0; pb < g.n_base(); ++pb) u.at(pb) *= cd(0.3, 0.0);
        BaseField sig = base_exp(u);
        MetricData hs = MetricData::from_base(sig);
        MetricData h0 = MetricData::identity(g, 2);
        double worst = 0.0;
        for (int q = 0; q < n_fields; ++q) {
            MatrixField alpha = r4.field(g, 2, 2);
            MatrixField lhs = pi(hs, fr, alpha).reconstruct();
            MatrixField conj_in(g, 2);
            for (long p4 = 0; p4 < g.n_points(); ++p4) {
                long pb = p4 % g.n_base();
                Eigen::MatrixXcd sh = herm_sqrt(sig.at(pb)), shi = herm_inv_sqrt(sig.at(pb));
                conj_in.at(p4) = sh * alpha.at(p4) * shi;
            }
            MatrixField mid = pi(h0, fr, conj_in).reconstruct();
            double scale = 1.0 + lhs.max_abs();
            for (long p4 = 0; p4 < g.n_points(); ++p4) {
                long pb = p4 % g.n_base();
                Eigen::MatrixXcd sh = herm_sqrt(sig.at(pb)), shi = herm_inv_sqrt(sig.at(pb));
                Eigen::MatrixXcd r_ = shi * mid.at(p4) * sh;
                worst = std::max(worst, (lhs.at(p4) - r_).norm() / scale);
            }
        }
        out.add("projection/pi-conjugation-rule", worst, 1e-9);
    }

    {  // frame connection is metric-compatible (finer base grid keeps the
       // sigma^{-1}-chain spectral tails of the pairing below the bound)
        ProductGrid g32(torus_spec(4, 32, 1.0));
        HoloFrame fr32 = HoloFrame::trivial(g32, 2);
        RandomFields r5(seed + 5);
        BaseField u = r5.base_hermitian(g32, 2, 1);
        for (long pb = 0; pb < g32.n_base(); ++pb) u.at(pb) *= cd(0.25, 0.0);
        MetricData hz = MetricData::from_base(base_exp(u));
        double worst = 0.0;
        for (int q = 0; q < n_fields; ++q) {
            SectionF s = section_from_base(fr32, r5.base_field(g32, 2, 2));
            SectionF t = section_from_base(fr32, r5.base_field(g32, 2, 2));
            BaseField pair = frame_metric_pair(hz, fr32, s, t);
            BaseField dpair = base_deriv(pair, CDir::W);
            SectionF ns = nabla_F(hz, fr32, s, CDir::W);
            SectionF nt = nabla_F(hz, fr32, t, CDir::Wbar);
            BaseField r1 = frame_metric_pair(hz, fr32, ns, t);
            BaseField r2 = frame_metric_pair(hz, fr32, s, nt);
            double scale = 1.0 + pair.max_abs();
            for (long pb = 0; pb < g32.n_base(); ++pb)
                worst = std::max(worst,
                                 std::abs(dpair.at(pb)(0, 0) - r1.at(pb)(0, 0) - r2.at(pb)(0, 0)) /
                                     scale);
        }
        out.add("projection/frame-connection-compatible", worst, 1e-9);
    }

    {  // homogeneous distance vs geodesic endpoints
        RandomFields r6(seed + 6);
        BaseField u1 = r6.base_hermitian(g, 2);
        BaseField hh = r6.base_hermitian(g, 2);
        for (long pb = 0; pb < g.n_base(); ++pb) {
            u1.at(pb) *= cd(0.3, 0.0);
            hh.at(pb) *= cd(0.4, 0.0);
        }
        BaseField s1 = base_exp(u1);
        BaseField s2(g, 2);
        double expected = 0.0;
        for (long pb = 0; pb < g.n_base(); ++pb) {
            Eigen::MatrixXcd sh = herm_sqrt(s1.at(pb));
            s2.at(pb) = sh * herm_exp(hh.at(pb)) * sh;
            expected += g.base_weight(pb) * (hh.at(pb) * hh.at(pb)).trace().real();
        }
        double got = distance_sq(s1, s2);
        out.add("projection/distance-geodesic", std::abs(got - expected) / (1.0 + expected), 1e-9);
    }
    return out;
}

CheckList moment_map_checks(uint64_t seed) {
    CheckList out;
    ProductGrid g(torus_spec());
    RandomFields rng(seed + 8);
    HoloFrame fr = HoloFrame::trivial(g, 2);
    MetricData h0 = MetricData::identity(g, 2);
    Eigen::MatrixXcd N = nilpotent_matrix();

    DeformationPreset nil = make_preset("nilpotent_constant", g);
    DeformationPreset fib = make_preset("fibre_modulated", g);

    {  // Omega: antisymmetry, J-invariance, positivity
        double worst_a = 0.0, worst_j = 0.0;
        double min_pos = 1e300;
        for (int q = 0; q < 6; ++q) {
            MatrixField al = rng.field(g, 2);
            MatrixField be = rng.field(g, 2);
            al.set_tag(Degree::Dzb);
            be.set_tag(Degree::Dzb);
            double o1 = omega_pair(h0, al, be, 0);
            double o2 = omega_pair(h0, be, al, 0);
            worst_a = std::max(worst_a, std::abs(o1 + o2) / (1.0 + std::abs(o1)));
            MatrixField ja = ii * al, jb = ii * be;
            worst_j = std::max(worst_j,
                               std::abs(omega_pair(h0, ja, jb, 0) - o1) / (1.0 + std::abs(o1)));
            min_pos = std::min(min_pos, omega_pair(h0, al, ja, 0));
        }
        out.add("moment-map/omega-antisymmetric", worst_a, 1e-12);
        out.add("moment-map/omega-J-invariant", worst_j, 1e-12);
        out.add("moment-map/omega-positive", min_pos > 0 ? 0.0 : 1.0, 0.5,
                "Omega(alpha, J alpha) > 0");
    }

    {  // nu values: skew-Hermitian, trace-free, quadratic, frozen constant-N value
        for (const DeformationPreset* ps : {&nil, &fib}) {
            BaseField v = nu(h0, fr, ps->a);
            double worst_skew = 0.0, worst_tr = 0.0;
            for (long pb = 0; pb < g.n_base(); ++pb) {
                worst_skew = std::max(worst_skew,
                                      (v.at(pb) + v.at(pb).adjoint().eval()).norm());
                worst_tr = std::max(worst_tr, std::abs(v.at(pb).trace()));
            }
            out.add("moment-map/nu-skew[" + ps->name + "]", worst_skew, 1e-10);
            out.add("moment-map/nu-trace[" + ps->name + "]", worst_tr, 1e-10);
        }
        BaseField v1 = nu(h0, fr, nil.a);
        Eigen::MatrixXcd expect = 2.0 * ii * (N * N.adjoint() - N.adjoint() * N);
        double worst = 0.0;
        for (long pb = 0; pb < g.n_base(); ++pb)
            worst = std::max(worst, (v1.at(pb) - expect).norm());
        out.add("moment-map/nu-constant-N-value", worst, 1e-12,
                "i nu = -2 diag(1,-1) for aV = N dzbar");

        DeformationData a3 = nil.a;
        a3.aV = cd(3.0, 0.0) * a3.aV;
        a3.aV.set_tag(Degree::Dzb);
        a3.sep.reset();
        BaseField v3 = nu(h0, fr, a3);
        double worst_q = 0.0;
        for (long pb = 0; pb < g.n_base(); ++pb)
            worst_q = std::max(worst_q, (v3.at(pb) - 9.0 * v1.at(pb)).norm());
        out.add("moment-map/nu-quadratic-scaling", worst_q, 1e-12);
    }

    {  // unitary equivariance
        Eigen::MatrixXcd Uh = rng.hermitian_matrix(2);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Uh);
        Eigen::VectorXcd ph(2);
        for (int i = 0; i < 2; ++i) ph[i] = std::exp(ii * es.eigenvalues()[i]);
        Eigen::MatrixXcd U = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
        DeformationData au = fib.a;
        au.sep.reset();
        for (long p4 = 0; p4 < g.n_points(); ++p4)
            au.aV.at(p4) = U * fib.a.aV.at(p4) * U.adjoint();
        BaseField lhs = nu(h0, fr, au);
        BaseField rhs = nu(h0, fr, fib.a);
        double worst = 0.0;
        for (long pb = 0; pb < g.n_base(); ++pb)
            worst = std::max(worst, (lhs.at(pb) - U * rhs.at(pb) * U.adjoint()).norm());
        out.add("moment-map/nu-equivariance", worst, 1e-9);
    }

    {  // transformation under a fibre-constant metric change
        RandomFields r2(seed + 9);
        BaseField u = r2.base_hermitian(g, 2, 1);
        for (long pb = 0; pb < g.n_base(); ++pb) u.at(pb) *= cd(0.3, 0.0);
        BaseField sig = base_exp(u);
        BaseField lhs = nu(MetricData::from_base(sig), fr, fib.a);
        DeformationData conj_a = fib.a;
        conj_a.sep.reset();
        for (long p4 = 0; p4 < g.n_points(); ++p4) {
            long pb = p4 % g.n_base();
            conj_a.aV.at(p4) =
                herm_sqrt(sig.at(pb)) * fib.a.aV.at(p4) * herm_inv_sqrt(sig.at(pb));
        }
        BaseField mid = nu(MetricData::identity(g, 2), fr, conj_a);
        double worst = 0.0;
        for (long pb = 0; pb < g.n_base(); ++pb) {
            Eigen::MatrixXcd sh = herm_sqrt(sig.at(pb)), shi = herm_inv_sqrt(sig.at(pb));
            worst = std::max(worst, (lhs.at(pb) - shi * mid.at(pb) * sh).norm());
        }
        out.add("moment-map/nu-transformation-rule", worst, 1e-9);

        // and the two evaluation routes agree at the deformed metric
        NuEvaluator ev(g, fib.a);
        BaseField fast = ev.i_nu(sig);
        double worst2 = 0.0;
        for (long pb = 0; pb < g.n_base(); ++pb)
            worst2 = std::max(worst2, (fast.at(pb) - ii * lhs.at(pb)).norm());
        out.add("moment-map/nu-evaluator-vs-gram", worst2, 1e-10);
    }

    {  // expansion: exactness, negative control, cubic path
        ExpansionReport r1 = expansion_defect(h0, fr, nil.a, nil.path(), {0.1, 0.05});
        out.add("moment-map/expansion-constant-N",
                *std::max_element(r1.defects.begin(), r1.defects.end()), 1e-12);
        ExpansionReport rf = expansion_defect(h0, fr, fib.a, fib.path(), {0.1, 0.05});
        out.add("moment-map/expansion-fibre-modulated",
                *std::max_element(rf.defects.begin(), rf.defects.end()), 1e-12);

        // negative control: flip the sign of nu by hand; quadratic term uncancelled
        BaseField nv = nu(h0, fr, nil.a);
        std::vector<double> ss{0.2, 0.1, 0.05, 0.025}, defs;
        for (double s : ss) {
            MatrixField ivf = contracted_curvature(h0, nil.dolbeault(s), ContractMode::V);
            BaseField lhs = p(h0, fr, ivf).to_base();
            for (long pb = 0; pb < g.n_base(); ++pb)
                lhs.at(pb) -= s * s * ii * nv.at(pb);  // wrong sign on purpose
            defs.push_back(lhs.max_abs());
        }
        out.add_range("moment-map/expansion-negative-control-slope", loglog_slope(ss, defs), 1.95,
                      2.05);

        // curved path alpha(s) = s a + s^2 b with [a, b] != 0
        Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(2, 2);
        B(1, 0) = 1.0;
        B(0, 0) = 0.3;
        auto curved = [&](double s) {
            DolbeaultData dd = DolbeaultData::trivial(g, 2);
            for (long p4 = 0; p4 < g.n_points(); ++p4) dd.aV.at(p4) = s * N + s * s * B;
            dd.aV.set_tag(Degree::Dzb);
            return dd;
        };
        ExpansionReport rc = expansion_defect(h0, fr, nil.a, curved, {0.02, 0.01, 0.005});
        out.add_range("moment-map/expansion-cubic-path-slope", rc.slope, 2.8, 3.2);
    }
    return out;
}

CheckList flow_checks(uint64_t seed) {
    CheckList out;
    ProductGrid g(torus_spec());
    RandomFields rng(seed + 12);

    {  // stationary point of the flat problem
        FamilyFlow flow(g, DeformationData::zero(g, 2), 1.0);
        FlowState st;
        st.u = BaseField(g, 2);
        flow.step_rk4(st, 1e-3);
        out.add("flow/stationary-fixed-point", st.u.max_abs(), 1e-14);
    }

    {  // eta basics
        BaseField s1 = constant_base_field(g, Eigen::MatrixXcd::Identity(2, 2));
        Eigen::MatrixXcd d2 = Eigen::MatrixXcd::Zero(2, 2);
        d2(0, 0) = std::exp(1.0);
        d2(1, 1) = std::exp(-1.0);
        BaseField s2 = constant_base_field(g, d2);
        BaseField e12 = eta(s1, s2), e21 = eta(s2, s1), e11 = eta(s1, s1);
        double expect = 2.0 * (std::exp(1.0) + std::exp(-1.0) - 2.0);
        out.add("flow/eta-example", std::abs(e12.at(0)(0, 0).real() - expect), 1e-12,
                "eta(id, diag(e,1/e)) = 2(e + 1/e - 2)");
        out.add("flow/eta-symmetric", (e12 - e21).max_abs(), 1e-12);
        out.add("flow/eta-zero", e11.max_abs(), 1e-12);
    }

    {  // theta at the nilpotent deformation
        DeformationPreset nil = make_preset("nilpotent_constant", g);
        FamilyFlow flow(g, nil.a, 1.0);
        BaseField id_sigma = constant_base_field(g, Eigen::MatrixXcd::Identity(2, 2));
        BaseField th = flow.theta(id_sigma);
        double worst = 0.0;
        for (long pb = 0; pb < g.n_base(); ++pb)
            worst = std::max(worst, std::abs(th.at(pb)(0, 0).real() - 8.0));
        out.add("flow/theta-nilpotent-value", worst, 1e-10, "tr((2 diag(1,-1))^2) = 8");
    }

    {  // determinism: identical runs are bit-identical
        DeformationPreset nil = make_preset("nilpotent_constant", g);
        FamilyFlow flow(g, nil.a, 1.0);
        BaseField u0 = rng.base_hermitian(g, 2, 2);
        for (long pb = 0; pb < g.n_base(); ++pb) u0.at(pb) *= cd(0.01, 0.0);
        FlowParams prm;
        prm.dt = 1e-4;
        prm.t_end = 50e-4;
        prm.stop_on_tol = false;
        FlowReport r1 = flow.run(prm, u0);
        FlowReport r2 = flow.run(prm, u0);
        double diff = 0.0;
        for (long pb = 0; pb < g.n_base(); ++pb)
            diff = std::max(diff, (r1.u_final.at(pb) - r2.u_final.at(pb)).norm());
        out.add("flow/deterministic-replay", diff, 0.0);
        out.add("flow/det-conservation-short", r1.max_det_drift, 1e-8);
        out.add("flow/monotone-short", r1.worst_increase, 1e-8 * (1.0 + r1.sup_theta.front()));
    }
    return out;
}

CheckList adiabatic_checks(uint64_t seed) {
    CheckList out;
    (void)seed;

    {  // L-operator kernels against the commutant oracle, three presets
        GridSpec ts = torus_spec(8, 8, 1.0);
        ProductGrid gt(ts);
        GridSpec as = ts;
        as.base_kind = BaseKind::Annulus;
        as.base_n0 = 9;
        as.base_n1 = 8;
        ProductGrid ga(as);
        MetricData h_t = MetricData::identity(gt, 2);
        MetricData h_a = MetricData::identity(ga, 2);
        HoloFrame fr_t = HoloFrame::trivial(gt, 2);
        HoloFrame fr_a = HoloFrame::trivial(ga, 2);

        struct Case {
            std::string name;
            const ProductGrid* g;
            const MetricData* h;
            const HoloFrame* fr;
        };
        for (const auto& c : {Case{"diagonal_zero", &gt, &h_t, &fr_t},
                              Case{"nilpotent_constant", &gt, &h_t, &fr_t},
                              Case{"annulus_mixed", &ga, &h_a, &fr_a}}) {
            DeformationPreset ps = make_preset(c.name, *c.g);
            LOperator L = l_operator(*c.h, *c.fr, ps.a);
            int oracle = hermitian_tracefree_commutant_dim(ps.a.aV);
            out.add("adiabatic/L-symmetry[" + c.name + "]", L.symmetry_defect, 1e-10);
            out.add("adiabatic/L-min-eigenvalue[" + c.name + "]", -L.eigenvalues.minCoeff(), 1e-8);
            out.add("adiabatic/L-kernel-vs-commutant[" + c.name + "]",
                    std::abs(L.kernel_dim - oracle), 0.5,
                    "kernel " + std::to_string(L.kernel_dim) + ", oracle " + std::to_string(oracle));
        }
    }

    {  // adiabatic defect: exact cancellation for a = 0
        GridSpec as = torus_spec(8, 8, 1.0);
        as.base_kind = BaseKind::Annulus;
        as.base_n0 = 9;
        as.base_n1 = 8;
        ProductGrid ga(as);
        DeformationPreset z = make_preset("diagonal_zero", ga);
        AdiabaticReport rep = adiabatic_defect(MetricData::identity(ga, 2), z, 1.0, {16, 32});
        out.add("adiabatic/defect-zero-deformation",
                *std::max_element(rep.defects.begin(), rep.defects.end()), 1e-13);
    }
    return out;
}

CheckList run_all_checks(uint64_t seed, int n_fields) {
    CheckList all;
    for (CheckList part :
         {geometry_checks(seed, n_fields), bundle_checks(seed, n_fields),
          projection_checks(seed, n_fields), moment_map_checks(seed), flow_checks(seed),
          adiabatic_checks(seed)})
        for (auto& r : part.results) all.results.push_back(std::move(r));
    return all;
}

}  // namespace fhe
