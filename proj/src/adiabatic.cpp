#include "fhe/adiabatic.hpp"

#include <cmath>

#include "fhe/errors.hpp"

namespace fhe {

AdiabaticReport adiabatic_defect(const MetricData& h, const DeformationPreset& preset,
                                 double lambda, const std::vector<double>& k_list) {
    const ProductGrid& g = preset.a.grid();
    HoloFrame fr = HoloFrame::trivial(g, preset.a.rank());
    const bool interior = g.has_boundary();

    CurvatureData F0 = curvature(h, DolbeaultData::trivial(g, preset.a.rank()));
    MatrixField iv0 = cd(0, 1) * contract(F0.oneone, ContractMode::V);
    MatrixField ih0 = cd(0, 1) * contract(F0.oneone, ContractMode::H);
    iv0.set_tag(Degree::Scalar);
    ih0.set_tag(Degree::Scalar);
    BaseField pv0 = p(h, fr, iv0).to_base();
    BaseField ph0 = p(h, fr, ih0).to_base();
    BaseField inu = cd(0, 1) * nu(h, fr, preset.a);

    AdiabaticReport rep;
    rep.k_list = k_list;
    double scale = 0.0;
    for (double k : k_list) {
        double s = std::sqrt(lambda / k);
        DolbeaultData ds = preset.dolbeault(s);
        if (integrability_defect(ds) > ds.integ_tol)
            throw DomainError("adiabatic path non-integrable at k = " + std::to_string(k));
        CurvatureData Fs = curvature(h, ds);
        MatrixField ik = cd(0, 1) * contract(Fs.oneone, ContractMode::K, k);
        ik.set_tag(Degree::Scalar);
        BaseField pk = p(h, fr, ik).to_base();
        BaseField defect(g, preset.a.rank());
        for (long pb = 0; pb < g.n_base(); ++pb)
            defect.at(pb) = pk.at(pb) - pv0.at(pb) -
                            (1.0 / k) * (ph0.at(pb) - lambda * inu.at(pb));
        rep.defects.push_back(defect.max_abs(interior));
        scale = std::max(scale, pk.max_abs(interior) + (1.0 / k) * lambda * inu.max_abs(interior));
    }
    double floor_level = 1e-13 * (1.0 + scale);
    bool tiny = true;
    for (double d : rep.defects) tiny = tiny && d < floor_level;
    rep.exact_cancellation = tiny;
    if (!tiny) {
        // slope in k of a decaying defect: fit log d = -q log k + c, report q
        rep.slope = -loglog_slope(rep.k_list, rep.defects);
    }
    return rep;
}

namespace {

// orthonormal trace-free Hermitian basis, tr(T_a T_b) = delta_ab
std::vector<Eigen::MatrixXcd> tracefree_hermitian_basis(int r) {
    std::vector<Eigen::MatrixXcd> out;
    const cd ii(0.0, 1.0);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < r; ++i)
        for (int j = i + 1; j < r; ++j) {
            Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(r, r);
            m(i, j) = inv_sqrt2;
            m(j, i) = inv_sqrt2;
            out.push_back(m);
            m(i, j) = -ii * inv_sqrt2;
            m(j, i) = ii * inv_sqrt2;
            out.push_back(m);
        }
    for (int d = 1; d < r; ++d) {
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(r, r);
        double nrm = 1.0 / std::sqrt(static_cast<double>(d * (d + 1)));
        for (int i = 0; i < d; ++i) m(i, i) = nrm;
        m(d, d) = -static_cast<double>(d) * nrm;
        out.push_back(m);
    }
    return out;
}

}  // namespace

LOperator l_operator(const MetricData& h, const HoloFrame& fr, const DeformationData& a,
                     double kernel_tol) {
    const ProductGrid& g = fr.grid();
    const int r = fr.rank();
    auto T = tracefree_hermitian_basis(r);
    const int na = static_cast<int>(T.size());
    const long nb = g.n_base();
    const long ndof = nb * na;

    // connection coefficient A_w of the End connection at h (fibre-constant)
    DolbeaultData d0 = DolbeaultData::trivial(g, r);
    Connection conn = chern_connection(h, d0);
    BaseField Aw(g, r);
    for (long pb = 0; pb < nb; ++pb) Aw.at(pb) = conn.Aw.at(pb);  // pf = 0 slice

    // Horizontal Gram. nabla_w(e_{pb,a}) = (Dw delta_pb) T_a + delta_pb [Aw, T_a]
    // with Dw the scalar d_w operator on the base, so the Gram factors through
    // S = Dw^H W Dw and small commutator traces. The energy derivative d1e
    // keeps the Nyquist modes, so the Gram kernel is exactly the constants.
    const int n2 = g.axis(2).n, n3 = g.axis(3).n;
    Eigen::MatrixXcd Dw = Eigen::MatrixXcd::Zero(nb, nb);
    for (int j1 = 0; j1 < n2; ++j1)
        for (int j2 = 0; j2 < n3; ++j2) {
            long row = g.base_index(j1, j2);
            for (int l = 0; l < n2; ++l) Dw(row, g.base_index(l, j2)) += 0.5 * g.axis(2).d1e(j1, l);
            for (int l = 0; l < n3; ++l)
                Dw(row, g.base_index(j1, l)) += cd(0.0, -0.5) * g.axis(3).d1e(j2, l);
        }
    Eigen::VectorXd wb(nb);
    for (long pb = 0; pb < nb; ++pb) wb[pb] = g.base_weight(pb);
    Eigen::MatrixXcd S = Dw.adjoint() * wb.asDiagonal() * Dw;

    std::vector<Eigen::MatrixXcd> C(static_cast<size_t>(nb) * na);
    bool has_conn = false;
    for (long pb = 0; pb < nb; ++pb)
        for (int aa = 0; aa < na; ++aa) {
            C[pb * na + aa] = Aw.at(pb) * T[aa] - T[aa] * Aw.at(pb);
            has_conn = has_conn || C[pb * na + aa].norm() > 1e-14;
        }

    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(ndof, ndof);
    for (long pb = 0; pb < nb; ++pb)
        for (long qb = 0; qb < nb; ++qb) {
            double sre = S(pb, qb).real();
            for (int aa = 0; aa < na; ++aa) Q(pb * na + aa, qb * na + aa) += 4.0 * sre;
        }
    if (has_conn) {
        for (long pb = 0; pb < nb; ++pb)
            for (long qb = 0; qb < nb; ++qb) {
                cd dqp = Dw(qb, pb);  // coefficient of delta_pb in (Dw delta_pb)(qb)
                cd dpq = Dw(pb, qb);
                if (dqp == cd(0, 0) && dpq == cd(0, 0)) continue;
                for (int aa = 0; aa < na; ++aa)
                    for (int bb = 0; bb < na; ++bb) {
                        cd cross1 = wb[qb] * dqp * (C[qb * na + bb].adjoint() * T[aa]).trace();
                        cd cross2 =
                            wb[pb] * std::conj(dpq) * (T[bb].adjoint() * C[pb * na + aa]).trace();
                        Q(pb * na + aa, qb * na + bb) += 4.0 * (cross1 + cross2).real();
                    }
            }
        for (long pb = 0; pb < nb; ++pb)
            for (int aa = 0; aa < na; ++aa)
                for (int bb = 0; bb < na; ++bb) {
                    cd v = wb[pb] * (C[pb * na + bb].adjoint() * C[pb * na + aa]).trace();
                    Q(pb * na + aa, pb * na + bb) += 4.0 * v.real();
                }
    }

    // Vertical zeroth-order part, diagonal over base points:
    // V[(pb,a),(pb,a')] = 4 Re w_pb int_X tr([aV,T_a] [aV,T_a']^dag) omega^n
    for (long pb = 0; pb < nb; ++pb) {
        Eigen::MatrixXd V = Eigen::MatrixXd::Zero(na, na);
        for (long pf = 0; pf < g.n_fibre(); ++pf) {
            Eigen::MatrixXcd A = a.aV.at(pf * nb + pb);
            if (A.norm() == 0.0) continue;
            double wf = g.fibre_weight(pf);
            std::vector<Eigen::MatrixXcd> ca(na);
            for (int aa = 0; aa < na; ++aa) ca[aa] = A * T[aa] - T[aa] * A;
            for (int aa = 0; aa < na; ++aa)
                for (int bb = 0; bb < na; ++bb)
                    V(aa, bb) += wf * ((ca[aa] * ca[bb].adjoint()).trace()).real();
        }
        double wb = g.base_weight(pb);
        for (int aa = 0; aa < na; ++aa)
            for (int bb = 0; bb < na; ++bb) Q(pb * na + aa, pb * na + bb) += 4.0 * wb * V(aa, bb);
    }

    LOperator L;
    double qmax = Q.cwiseAbs().maxCoeff();
    L.symmetry_defect = (Q - Q.transpose()).cwiseAbs().maxCoeff() / (1.0 + qmax);
    Eigen::MatrixXd Qs = 0.5 * (Q + Q.transpose());

    // mass-orthonormalize: basis elements have L^2 norm sqrt(w_pb)
    Eigen::VectorXd minv(ndof);
    for (long pb = 0; pb < nb; ++pb)
        for (int aa = 0; aa < na; ++aa) minv[pb * na + aa] = 1.0 / std::sqrt(g.base_weight(pb));
    L.matrix = minv.asDiagonal() * Qs * minv.asDiagonal();
    L.matrix = 0.5 * (L.matrix + L.matrix.transpose().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L.matrix);
    L.eigenvalues = es.eigenvalues();
    L.kernel_tol = kernel_tol;
    L.kernel_dim = 0;
    for (int i = 0; i < L.eigenvalues.size(); ++i)
        if (std::abs(L.eigenvalues[i]) < kernel_tol) ++L.kernel_dim;
    return L;
}

namespace {

// exp of an h-Hermitian endomorphism: sigma^{-1/2} exp(sigma^{1/2} X sigma^{-1/2}) sigma^{1/2}
MatrixField exp_h_hermitian(const MetricData& h, const MatrixField& X) {
    MatrixField out(X.grid(), X.rank());
    for (long p = 0; p < X.n_points(); ++p) {
        Eigen::MatrixXcd sh = herm_sqrt(h.sigma.at(p));
        Eigen::MatrixXcd shi = herm_inv_sqrt(h.sigma.at(p));
        Eigen::MatrixXcd Y = sh * X.at(p) * shi;
        out.at(p) = shi * herm_exp(0.5 * (Y + Y.adjoint().eval())) * sh;
    }
    return out;
}

// fibrewise L^2(h) projection of a single fibre slice onto the constant
// matrices (the trivial frame span); metric must be fibre-constant
void project_out_frame(const ProductGrid& g, const Eigen::MatrixXcd& sigma_b,
                       std::vector<Eigen::MatrixXcd>& slice) {
    const int r = static_cast<int>(sigma_b.rows());
    Eigen::MatrixXcd si = sigma_b.inverse();
    // Gram of elementary matrices: G[(ij),(kl)] = tr(E_ij sigma^{-1} E_kl^dag sigma)
    // moments: m_kl = int tr(f sigma^{-1} E_kl^dag sigma)
    Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(r * r, r * r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j)
            for (int kk = 0; kk < r; ++kk)
                for (int l = 0; l < r; ++l) {
                    Eigen::MatrixXcd Ekl = Eigen::MatrixXcd::Zero(r, r);
                    Ekl(kk, l) = 1.0;
                    Eigen::MatrixXcd Eij = Eigen::MatrixXcd::Zero(r, r);
                    Eij(i, j) = 1.0;
                    G(kk * r + l, i * r + j) = (Eij * si * Ekl.adjoint() * sigma_b).trace();
                }
    Eigen::VectorXcd mom = Eigen::VectorXcd::Zero(r * r);
    Eigen::MatrixXcd avg = Eigen::MatrixXcd::Zero(r, r);
    for (long pf = 0; pf < g.n_fibre(); ++pf) avg += g.fibre_weight(pf) * slice[pf];
    for (int kk = 0; kk < r; ++kk)
        for (int l = 0; l < r; ++l) {
            Eigen::MatrixXcd Ekl = Eigen::MatrixXcd::Zero(r, r);
            Ekl(kk, l) = 1.0;
            mom[kk * r + l] = (avg * si * Ekl.adjoint() * sigma_b).trace();
        }
    Eigen::VectorXcd c = G.fullPivLu().solve(mom);
    Eigen::MatrixXcd proj = Eigen::MatrixXcd::Zero(r, r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) proj(i, j) = c[i * r + j];
    for (long pf = 0; pf < g.n_fibre(); ++pf) slice[pf] -= proj;
}

}  // namespace

namespace {

// Fibrewise CG solve of Delta_V x = rhs on the orthogonal complement of the
// frame (flat vertical Laplacian; fibre-constant metric for the projection).
MatrixField solve_vertical_complement(const ProductGrid& g, const MetricData& h,
                                      const MatrixField& rhs_field) {
    const int r = rhs_field.rank();
    MatrixField out(g, r);
    const Eigen::MatrixXd& d2a = g.axis(0).d2;
    const Eigen::MatrixXd& d2b = g.axis(1).d2;
    const int n0 = g.axis(0).n, n1 = g.axis(1).n;
    auto apply_lap = [&](const std::vector<Eigen::MatrixXcd>& x,
                         std::vector<Eigen::MatrixXcd>& y) {
        // y = -(d2_x1 + d2_x2) x entrywise on the fibre slice
        for (int i1 = 0; i1 < n0; ++i1)
            for (int i2 = 0; i2 < n1; ++i2) {
                Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(r, r);
                for (int l = 0; l < n0; ++l) acc += d2a(i1, l) * x[l * n1 + i2];
                for (int l = 0; l < n1; ++l) acc += d2b(i2, l) * x[i1 * n1 + l];
                y[i1 * n1 + i2] = -acc;
            }
    };
    auto dot = [&](const std::vector<Eigen::MatrixXcd>& x,
                   const std::vector<Eigen::MatrixXcd>& y) {
        cd s(0, 0);
        for (long pf = 0; pf < g.n_fibre(); ++pf)
            s += g.fibre_weight(pf) * (y[pf].adjoint() * x[pf]).trace();
        return s.real();
    };
    std::vector<Eigen::MatrixXcd> x(g.n_fibre()), b(g.n_fibre()), rres(g.n_fibre()),
        pdir(g.n_fibre()), Ap(g.n_fibre());
    for (long pb = 0; pb < g.n_base(); ++pb) {
        Eigen::MatrixXcd sigma_b = h.sigma.at(pb);
        for (long pf = 0; pf < g.n_fibre(); ++pf) {
            b[pf] = rhs_field.at(pf * g.n_base() + pb);
            x[pf].setZero(r, r);
        }
        project_out_frame(g, sigma_b, b);
        rres = b;
        pdir = rres;
        double rs = dot(rres, rres);
        double rhs_norm = std::sqrt(rs);
        if (rhs_norm > 0) {
            for (int it = 0; it < 500; ++it) {
                apply_lap(pdir, Ap);
                project_out_frame(g, sigma_b, Ap);
                double alpha = rs / dot(Ap, pdir);
                for (long pf = 0; pf < g.n_fibre(); ++pf) {
                    x[pf] += alpha * pdir[pf];
                    rres[pf] -= alpha * Ap[pf];
                }
                double rs_new = dot(rres, rres);
                if (std::sqrt(rs_new) < 1e-13 * rhs_norm) break;
                for (long pf = 0; pf < g.n_fibre(); ++pf)
                    pdir[pf] = rres[pf] + (rs_new / rs) * pdir[pf];
                rs = rs_new;
            }
            project_out_frame(g, sigma_b, x);
        }
        for (long pf = 0; pf < g.n_fibre(); ++pf) out.at(pf * g.n_base() + pb) = x[pf];
    }
    return out;
}

}  // namespace

R2Solution approx_solution_r2(const MetricData& h, const DeformationData& a,
                              const MatrixField& aH, double lambda, double psi_h_tol) {
    const ProductGrid& g = a.grid();
    const int r = a.rank();
    HoloFrame fr = HoloFrame::trivial(g, r);
    DolbeaultData d0 = DolbeaultData::trivial(g, r);
    R2Solution sol;

    auto make_path = [&](double s) {
        DolbeaultData d = DolbeaultData::trivial(g, r);
        d.aV = cd(s, 0.0) * a.aV;
        d.aV.set_tag(Degree::Dzb);
        d.aH = cd(s, 0.0) * aH;
        d.aH.set_tag(Degree::Dwb);
        return d;
    };

    // The vertical contracted curvature is exactly quadratic in s along the
    // path; split it into its linear and quadratic coefficients.
    MatrixField e0 = contracted_curvature(h, make_path(0.0), ContractMode::V);
    MatrixField ep = contracted_curvature(h, make_path(1.0), ContractMode::V);
    MatrixField em = contracted_curvature(h, make_path(-1.0), ContractMode::V);
    MatrixField lin = cd(0.5, 0) * (ep - em);
    MatrixField quad = cd(0.5, 0) * (ep + em) - e0;

    // tau1 kills the k^{-1/2} vertical term sqrt(lambda) * lin, which lies in
    // the frame complement (its frame part vanishes for gauge-fixed
    // deformations, and by fibre parity for the modulated presets).
    MatrixField psi1 = cd(std::sqrt(lambda), 0) * lin;
    SectionF pi_psi1 = pi(h, fr, psi1);
    sol.psi1_h_norm = pi_psi1.to_base().max_abs(g.has_boundary());
    MatrixField psi1_r = psi1 - pi_psi1.reconstruct();
    double psi1_scale = psi1_r.max_abs();
    MatrixField neg_psi1 = cd(-1.0, 0) * psi1_r;
    sol.tau1 = (psi1_scale > 1e-13) ? solve_vertical_complement(g, h, neg_psi1)
                                    : MatrixField(g, r);
    if (sol.psi1_h_norm > 1e-6 * (1.0 + psi1.max_abs()))
        throw DomainError(
            "approximate solution obstructed: the k^{-1/2} vertical term has a holomorphic "
            "component (" +
            std::to_string(sol.psi1_h_norm) + "); the deformation is too far from gauge-fixed");

    // k^{-1} coefficient of i Lambda_k F along the tau1-corrected path. With
    // tau1 = 0 it is lambda * quad + i Lambda_H F_0 exactly; otherwise the
    // epsilon^2 coefficient is extracted by a 4th-order difference in the
    // combined parameter epsilon = k^{-1/2}.
    CurvatureData F0 = curvature(h, d0);
    MatrixField psi2 = cd(0, 1) * contract(F0.oneone, ContractMode::H);
    psi2.set_tag(Degree::Scalar);
    if (psi1_scale > 1e-13) {
        auto vterm = [&](double eps) {
            MatrixField gauge = exp_h_hermitian(h, cd(eps, 0) * sol.tau1);
            DolbeaultData dg = gauge_transform(gauge, make_path(std::sqrt(lambda) * eps));
            return contracted_curvature(h, dg, ContractMode::V);
        };
        const double eps0 = 0.05;
        MatrixField v1 = vterm(eps0), vm1 = vterm(-eps0), v2 = vterm(2 * eps0),
                    vm2 = vterm(-2 * eps0);
        MatrixField v2coef =
            cd(16.0, 0) * (v1 + vm1) - (v2 + vm2) - cd(30.0, 0) * e0;
        v2coef *= cd(1.0 / (24.0 * eps0 * eps0), 0);
        psi2 += v2coef;
    } else {
        psi2 += cd(lambda, 0) * quad;
    }

    SectionF pi_psi = pi(h, fr, psi2);
    SectionF p_psi = p(h, fr, psi2);
    sol.psi_h_norm = p_psi.to_base().max_abs(g.has_boundary());
    if (sol.psi_h_norm > psi_h_tol)
        throw DomainError(
            "approximate solution obstructed: the family Hermite-Einstein equation does not hold "
            "at the input metric (residual " +
            std::to_string(sol.psi_h_norm) + ")");

    // scalar component
    BaseField psi_b(g, 1);
    {
        BaseField pi_base = pi_psi.to_base();
        for (long pb = 0; pb < g.n_base(); ++pb)
            psi_b.at(pb)(0, 0) = pi_base.at(pb).trace().real() / r;
    }

    // R component and tau2
    MatrixField psi_r = psi2 - pi_psi.reconstruct();
    MatrixField neg_psi_r = cd(-1.0, 0) * psi_r;
    sol.tau2 = solve_vertical_complement(g, h, neg_psi_r);

    // phi2: Delta_B phi2 = -psi_B + gamma2 (Dirichlet on the annulus, mean-zero
    // constant on the torus)
    sol.phi2 = BaseField(g, 1);
    {
        const long nb = g.n_base();
        const int n2 = g.axis(2).n, n3 = g.axis(3).n;
        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(nb, nb);  // D2x + D2y
        for (int j1 = 0; j1 < n2; ++j1)
            for (int j2 = 0; j2 < n3; ++j2) {
                long row = g.base_index(j1, j2);
                for (int l = 0; l < n2; ++l) L(row, g.base_index(l, j2)) += g.axis(2).d2(j1, l);
                for (int l = 0; l < n3; ++l) L(row, g.base_index(j1, l)) += g.axis(3).d2(j2, l);
            }
        Eigen::VectorXd rhs(nb);
        for (long pb = 0; pb < nb; ++pb) rhs[pb] = psi_b.at(pb)(0, 0).real();
        if (g.has_boundary()) {
            sol.gamma2 = 0.0;
            for (long pb = 0; pb < nb; ++pb)
                if (g.base_boundary(pb)) {
                    L.row(pb).setZero();
                    L(pb, pb) = 1.0;
                    rhs[pb] = 0.0;
                }
            Eigen::VectorXd phi = L.partialPivLu().solve(rhs);  // (D2x+D2y) phi = psi_B
            for (long pb = 0; pb < nb; ++pb) sol.phi2.at(pb)(0, 0) = phi[pb];
        } else {
            double mean = 0.0;
            for (long pb = 0; pb < nb; ++pb) mean += g.base_weight(pb) * rhs[pb];
            sol.gamma2 = mean;
            for (long pb = 0; pb < nb; ++pb) rhs[pb] -= mean;
            // least-squares solution of the singular periodic problem
            Eigen::VectorXd phi = L.completeOrthogonalDecomposition().solve(rhs);
            for (long pb = 0; pb < nb; ++pb) sol.phi2.at(pb)(0, 0) = phi[pb];
        }
    }

    EinsteinConstants ec = einstein_constants(d0, h);
    sol.gamma0 = ec.c_V;
    return sol;
}

double r2_residual(const MetricData& h, const DeformationPreset& preset, const R2Solution& sol,
                   double lambda, double k, bool use_phi, bool use_tau) {
    const ProductGrid& g = preset.a.grid();
    const int r = preset.a.rank();
    double s = std::sqrt(lambda / k);
    DolbeaultData ds = preset.dolbeault(s);

    // f_{k,2} = exp(phi2) exp(k^{-1} tau2) exp(k^{-1/2} tau1)
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(r, r);
    MatrixField phi_part(g, r), tau2_part(g, r), tau1_part(g, r);
    for (long p4 = 0; p4 < g.n_points(); ++p4) {
        phi_part.at(p4) = use_phi ? (sol.phi2.at(p4 % g.n_base())(0, 0).real() * id).eval()
                                  : Eigen::MatrixXcd::Zero(r, r).eval();
        tau2_part.at(p4) = use_tau ? ((1.0 / k) * sol.tau2.at(p4)).eval()
                                   : Eigen::MatrixXcd::Zero(r, r).eval();
        tau1_part.at(p4) = (1.0 / std::sqrt(k)) * sol.tau1.at(p4);
    }
    MatrixField g_phi = exp_h_hermitian(h, phi_part);
    MatrixField g_tau2 = exp_h_hermitian(h, tau2_part);
    MatrixField g_tau1 = exp_h_hermitian(h, tau1_part);
    MatrixField gauge = mul(mul(g_phi, g_tau2), g_tau1);
    DolbeaultData dg = gauge_transform(gauge, ds);
    CurvatureData F = curvature(h, dg);
    MatrixField res = cd(0, 1) * contract(F.oneone, ContractMode::K, k);
    res.set_tag(Degree::Scalar);
    double level = sol.gamma0 + sol.gamma2 / k;
    double worst = 0.0;
    for (long p4 = 0; p4 < g.n_points(); ++p4) {
        if (g.has_boundary() && g.base_boundary(p4 % g.n_base())) continue;
        worst = std::max(worst, (res.at(p4) - level * id).norm());
    }
    return worst;
}

TotalSpaceReport total_space_he_flow(const MatrixField& sigma_init, const DolbeaultData& d_s,
                                     double k, const TotalSpaceParams& prm) {
    const ProductGrid& g = sigma_init.grid();
    const int r = sigma_init.rank();
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(r, r);

    EinsteinConstants ec = einstein_constants(d_s, MetricData{sigma_init});
    const double ck = ec.c_V + ec.c_H / k;

    TotalSpaceReport rep;
    rep.c_k = ck;

    auto vertical_radius = [&]() {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e0(g.axis(0).d2);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e1(g.axis(1).d2);
        return 0.5 * (e0.eigenvalues().cwiseAbs().maxCoeff() +
                      e1.eigenvalues().cwiseAbs().maxCoeff());
    };
    double rho = 2.0 * (vertical_radius() + horizontal_laplacian_radius(g) / k);
    double dt = prm.dt > 0 ? prm.dt : prm.c_stab / rho;
    rep.dt_used = dt;

    MatrixField sigma = sigma_init;
    auto herm_all = [&](MatrixField& f) {
        for (long p4 = 0; p4 < f.n_points(); ++p4) {
            Eigen::MatrixXcd m = f.at(p4);
            f.at(p4) = 0.5 * (m + m.adjoint().eval());
        }
    };
    auto residual_field = [&](const MatrixField& s) {
        CurvatureData F = curvature(MetricData{s}, d_s);
        MatrixField res = cd(0, 1) * contract(F.oneone, ContractMode::K, k);
        res.set_tag(Degree::Scalar);
        for (long p4 = 0; p4 < res.n_points(); ++p4) res.at(p4) -= ck * id;
        return res;
    };
    auto sup_interior = [&](const MatrixField& f) {
        double m = 0.0;
        for (long p4 = 0; p4 < f.n_points(); ++p4) {
            if (g.has_boundary() && g.base_boundary(p4 % g.n_base())) continue;
            m = std::max(m, f.at(p4).norm());
        }
        return m;
    };
    auto rhs = [&](const MatrixField& s) {
        MatrixField res = residual_field(s);
        MatrixField out(g, r);
        for (long p4 = 0; p4 < g.n_points(); ++p4) {
            if (g.has_boundary() && g.base_boundary(p4 % g.n_base())) continue;
            out.at(p4) = -2.0 * s.at(p4) * res.at(p4);
        }
        herm_all(out);
        return out;
    };

    long nsteps = static_cast<long>(std::ceil(prm.t_end / dt - 1e-12));
    double t = 0.0;
    double prev = -1.0;
    auto record = [&](double tt, const MatrixField& s) {
        double m = sup_interior(residual_field(s));
        rep.t.push_back(tt);
        rep.monitor.push_back(m);
        if (prev >= 0.0) {
            double inc = m - prev;
            rep.worst_increase = std::max(rep.worst_increase, inc);
            if (inc > 1e-8 * (1.0 + prev)) rep.monotone = false;
        }
        prev = m;
        return m;
    };
    rep.initial_monitor = record(0.0, sigma);
    for (long n = 0; n < nsteps; ++n) {
        MatrixField k1 = rhs(sigma);
        MatrixField s1 = sigma;
        for (long p4 = 0; p4 < g.n_points(); ++p4) s1.at(p4) += 0.5 * dt * k1.at(p4);
        MatrixField k2 = rhs(s1);
        MatrixField s2 = sigma;
        for (long p4 = 0; p4 < g.n_points(); ++p4) s2.at(p4) += 0.5 * dt * k2.at(p4);
        MatrixField k3 = rhs(s2);
        MatrixField s3 = sigma;
        for (long p4 = 0; p4 < g.n_points(); ++p4) s3.at(p4) += dt * k3.at(p4);
        MatrixField k4 = rhs(s3);
        for (long p4 = 0; p4 < g.n_points(); ++p4)
            sigma.at(p4) +=
                (dt / 6.0) * (k1.at(p4) + 2.0 * k2.at(p4) + 2.0 * k3.at(p4) + k4.at(p4));
        herm_all(sigma);
        t += dt;
        for (long p4 = 0; p4 < g.n_points(); ++p4)
            if (!sigma.at(p4).allFinite())
                throw NumericalError("total-space flow blow-up at t = " + std::to_string(t));
        if ((n + 1) % prm.record_every == 0 || n + 1 == nsteps) record(t, sigma);
    }
    rep.final_monitor = rep.monitor.back();
    return rep;
}

}  // namespace fhe
