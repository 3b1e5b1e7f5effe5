// Acceptance suite: one pass/fail line per criterion, grouped so each group
// stays well under the five-minute budget. Usage: acceptance <group>
// with group in {identities, nu, flow, dirichlet, adiabatic, loperator,
// total_space} or "all".

#include <cmath>
#include <cstring>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "fhe/adiabatic.hpp"
#include "fhe/checks.hpp"

using namespace fhe;

namespace {

int g_failures = 0;

void record(const std::string& id, bool pass, double measured, const std::string& detail) {
    if (!pass) ++g_failures;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << std::left << std::setw(46) << id
              << std::scientific << std::setprecision(3) << " measured " << measured << "  ("
              << detail << ")\n";
}

std::string sci(double v) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(2) << v;
    return os.str();
}

void record_bound(const std::string& id, double measured, double bound) {
    record(id, measured <= bound, measured, "bound " + sci(bound));
}

void record_range(const std::string& id, double measured, double lo, double hi) {
    record(id, measured >= lo && measured <= hi, measured,
           "range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

constexpr uint64_t kSeed = 20240817;

GridSpec default_torus() {
    GridSpec s;
    s.fibre_n = 16;
    s.base_n0 = 16;
    s.base_n1 = 16;
    return s;
}

GridSpec default_annulus() {
    GridSpec s;
    s.fibre_n = 16;
    s.base_kind = BaseKind::Annulus;
    s.base_n0 = 33;
    s.base_n1 = 16;
    return s;
}

double pick(const CheckList& cl, const std::string& id) {
    for (const auto& r : cl.results)
        if (r.id == id) return r.measured;
    throw std::runtime_error("missing check " + id);
}

// criteria 1-3: identity suites at 20 seeded fields
void group_identities() {
    CheckList b = bundle_checks(kSeed, 20);
    record_bound("criterion-01/metric-compatibility", pick(b, "bundle/metric-compatibility"),
                 1e-8);
    record_bound("criterion-01/adjoint-identities", pick(b, "bundle/adjoint-identities"), 1e-8);
    record_bound("criterion-01/laplacian-difference",
                 pick(b, "bundle/laplacian-difference-commutator"), 1e-8);
    record_bound("criterion-01/laplacian-adjointness", pick(b, "bundle/laplacian-adjointness"),
                 1e-8);
    record_bound("criterion-01/grad-of-adjoint", pick(b, "bundle/grad-of-adjoint"), 1e-8);
    record_bound("criterion-02/conjugation-identity", pick(b, "bundle/conjugation-identity"),
                 1e-10);
    record_range("criterion-03/linearisation-metric", pick(b, "bundle/linearisation-metric-slope"),
                 0.9, 1.1);
    record_range("criterion-03/linearisation-gauge", pick(b, "bundle/linearisation-gauge-slope"),
                 0.9, 1.1);
}

// criterion 4: the nu suite plus the pairing-vs-expansion cross validation
void group_nu() {
    CheckList m = moment_map_checks(kSeed);
    record_bound("criterion-04/nu-skew", std::max(pick(m, "moment-map/nu-skew[nilpotent_constant]"),
                                                  pick(m, "moment-map/nu-skew[fibre_modulated]")),
                 1e-10);
    record_bound("criterion-04/nu-trace",
                 std::max(pick(m, "moment-map/nu-trace[nilpotent_constant]"),
                          pick(m, "moment-map/nu-trace[fibre_modulated]")),
                 1e-10);
    record_bound("criterion-04/nu-quadratic-scaling", pick(m, "moment-map/nu-quadratic-scaling"),
                 1e-12);
    record_bound("criterion-04/nu-equivariance", pick(m, "moment-map/nu-equivariance"), 1e-9);
    record_bound("criterion-04/nu-transformation", pick(m, "moment-map/nu-transformation-rule"),
                 1e-9);
    record_bound("criterion-04/expansion-constant-N", pick(m, "moment-map/expansion-constant-N"),
                 1e-12);

    // pairing-nu vs expansion-extracted nu on two presets
    ProductGrid g(default_torus());
    HoloFrame fr = HoloFrame::trivial(g, 2);
    MetricData h0 = MetricData::identity(g, 2);
    double worst = 0.0;
    for (const char* name : {"nilpotent_constant", "fibre_modulated"}) {
        DeformationPreset ps = make_preset(name, g);
        BaseField inu = cd(0, 1) * nu(h0, fr, ps.a);
        const double s = 0.05;
        MatrixField ivf = contracted_curvature(h0, ps.dolbeault(s), ContractMode::V);
        BaseField extracted = p(h0, fr, ivf).to_base();  // = -s^2 i nu exactly
        for (long pb = 0; pb < g.n_base(); ++pb)
            worst = std::max(worst,
                             (extracted.at(pb) * cd(-1.0 / (s * s), 0) - inu.at(pb)).norm());
    }
    record_bound("criterion-04/pairing-vs-expansion", worst, 1e-8);
}

// criteria 5-8: monotonicity, heat and ODE oracles, eta contraction
void group_flow() {
    ProductGrid g(default_torus());
    const double dt = 1.5e-4;
    const long nsteps = 500;

    {  // criterion 5 run A: a = 0, random small Hermitian start
        RandomFields rng(kSeed + 100);
        BaseField u0 = rng.base_hermitian(g, 2, 1);
        for (long pb = 0; pb < g.n_base(); ++pb) u0.at(pb) *= cd(0.01, 0.0);
        FamilyFlow fl(g, DeformationData::zero(g, 2), 1.0);
        FlowParams prm;
        prm.dt = dt;
        prm.t_end = nsteps * dt;
        prm.stop_on_tol = false;
        prm.snapshot_every = 10;
        FlowReport rep = fl.run(prm, u0);
        record("criterion-05/monotone-sup-theta[a=0]", rep.monotone, rep.worst_increase,
               "per-step increase vs 1e-8 (1 + sup theta)");
        record_bound("criterion-05/det-drift[a=0]", rep.max_det_drift, 1e-8);
        record_bound("criterion-10/subsolution-defect[a=0]", rep.live_subsolution_defect, 1e-5);
    }

    {  // criterion 5 run B: constant nilpotent deformation
        DeformationPreset nil = make_preset("nilpotent_constant", g);
        FamilyFlow fl(g, nil.a, 1.0);
        RandomFields rng(kSeed + 101);
        BaseField u0 = rng.base_hermitian(g, 2, 1);
        for (long pb = 0; pb < g.n_base(); ++pb) u0.at(pb) *= cd(0.01, 0.0);
        FlowParams prm;
        prm.dt = dt;
        prm.t_end = nsteps * dt;
        prm.stop_on_tol = false;
        FlowReport rep = fl.run(prm, u0);
        record("criterion-05/monotone-sup-theta[a=N]", rep.monotone, rep.worst_increase,
               "per-step increase vs 1e-8 (1 + sup theta)");
        record_bound("criterion-05/det-drift[a=N]", rep.max_det_drift, 1e-8);
        record_bound("criterion-10/subsolution-defect[a=N]", rep.live_subsolution_defect, 1e-5);
    }

    {  // criterion 6: slowest-mode decay rate 4 pi^2 within 0.5% at dt = 1e-4
        FamilyFlow fl(g, DeformationData::zero(g, 2), 1.0);
        BaseField u0(g, 2);
        for (long pb = 0; pb < g.n_base(); ++pb) {
            double c = 5e-4 * std::cos(2 * M_PI * g.base_y(pb));
            u0.at(pb) = c * Eigen::Vector2cd(1, -1).asDiagonal().toDenseMatrix();
        }
        FlowParams prm;
        prm.dt = 1e-4;
        prm.t_end = 0.05;
        prm.stop_on_tol = false;
        FlowReport rep = fl.run(prm, u0);
        // theta = |P|^2 decays at twice the rate of u; fit ln sup_theta
        double t0 = rep.t.front(), t1 = rep.t.back();
        double rate_theta = std::log(rep.sup_theta.front() / rep.sup_theta.back()) / (t1 - t0);
        double rate_u = 0.5 * rate_theta;
        record_range("criterion-06/heat-decay-rate", rate_u / (4.0 * M_PI * M_PI), 0.995, 1.005);
    }

    {  // criterion 7: B-constant closed form over t in [0, 0.5] at dt = 1e-4
        DeformationPreset nil = make_preset("nilpotent_constant", g);
        FamilyFlow fl(g, nil.a, 1.0);
        FlowParams prm;
        prm.dt = 1e-4;
        prm.t_end = 0.5;
        prm.stop_on_tol = false;
        prm.store_u_snapshots = true;
        prm.snapshot_every = 100;
        FlowReport rep = fl.run(prm, BaseField(g, 2));
        double worst = 0.0;
        for (size_t q = 1; q < rep.u_snapshots.size(); ++q) {
            double t = rep.snapshot_t[q];
            double phi_exact = -0.5 * std::log(1.0 + 8.0 * t);
            double phi = rep.u_snapshots[q].at(0)(0, 0).real();
            worst = std::max(worst, std::abs(phi - phi_exact) / std::abs(phi_exact));
        }
        record_bound("criterion-07/ode-oracle-rel-error", worst, 1e-5);
    }

    {  // criterion 8: eta between two distinct runs never increases
        DeformationPreset nil = make_preset("nilpotent_constant", g);
        FamilyFlow fl(g, nil.a, 1.0);
        RandomFields rng(kSeed + 102);
        BaseField ua = rng.base_hermitian(g, 2, 2), ub = rng.base_hermitian(g, 2, 2);
        for (long pb = 0; pb < g.n_base(); ++pb) {
            ua.at(pb) *= cd(0.05, 0.0);
            ub.at(pb) *= cd(0.05, 0.0);
        }
        FlowParams prm;
        prm.dt = dt;
        prm.t_end = 400 * dt;
        prm.stop_on_tol = false;
        prm.store_u_snapshots = true;
        prm.snapshot_every = 1;
        FlowReport ra = fl.run(prm, ua);
        FlowReport rb = fl.run(prm, ub);
        double worst_inc = 0.0, prev = -1.0;
        for (size_t q = 0; q < ra.u_snapshots.size(); ++q) {
            BaseField e = eta(base_exp(ra.u_snapshots[q]), base_exp(rb.u_snapshots[q]));
            double sup = e.max_abs();
            if (prev >= 0) worst_inc = std::max(worst_inc, sup - prev);
            prev = sup;
        }
        record_bound("criterion-08/eta-contraction", worst_inc, 1e-8);
    }
}

// criterion 9 and the Dirichlet part of criterion 10
void group_dirichlet() {
    ProductGrid g(default_annulus());
    const double lambda1 = dirichlet_lambda1_full(g);

    {  // a = 0: rate oracle
        FamilyFlow fl(g, DeformationData::zero(g, 2), 1.0);
        BaseField u0(g, 2);
        for (long pb = 0; pb < g.n_base(); ++pb) {
            double c = 0.05 * std::sin(M_PI * g.base_y(pb));
            u0.at(pb) = c * Eigen::Vector2cd(1, -1).asDiagonal().toDenseMatrix();
        }
        FlowParams prm;
        prm.tol = 1e-8;
        prm.t_end = 4.0;
        DirichletReport rep = dirichlet_solve(fl, prm, u0);
        record("criterion-09/converged[a=0]", rep.flow.converged, rep.flow.final_residual,
               "terminal residual vs 1e-8");
        record("criterion-09/tail-fit-r2[a=0]", rep.flow.fit.valid && rep.flow.fit.r2 > 0.999,
               rep.flow.fit.r2, "R^2 vs 0.999");
        record_range("criterion-09/rate-vs-eigenvalue", rep.mu_theta / (2.0 * lambda1), 0.95,
                     1.05);
        record_bound("criterion-10/subsolution-defect[dirichlet,a=0]",
                     rep.flow.live_subsolution_defect, 1e-5);
    }

    {  // annulus_mixed: existence and exponential tail
        DeformationPreset mix = make_preset("annulus_mixed", g);
        FamilyFlow fl(g, mix.a, 0.5);
        FlowParams prm;
        prm.lambda = 0.5;
        prm.tol = 1e-8;
        prm.t_end = 6.0;
        DirichletReport rep = dirichlet_solve(fl, prm, BaseField(g, 2));
        record("criterion-09/converged[annulus_mixed]", rep.flow.converged,
               rep.flow.final_residual, "terminal residual vs 1e-8");
        record("criterion-09/tail-fit-r2[annulus_mixed]",
               rep.flow.fit.valid && rep.flow.fit.r2 > 0.999, rep.flow.fit.r2, "R^2 vs 0.999");
        record("criterion-09/positive-rate[annulus_mixed]", rep.mu_theta > 0.0, rep.mu_theta,
               "fitted decay rate");
        record_bound("criterion-10/subsolution-defect[dirichlet,mixed]",
                     rep.flow.live_subsolution_defect, 1e-5);
    }
}

// criteria 11-12
void group_adiabatic() {
    ProductGrid g(default_annulus());
    MetricData h0 = MetricData::identity(g, 2);
    std::vector<double> ks{16, 32, 64, 128};

    {  // criterion 11
        DeformationPreset mix = make_preset("annulus_mixed", g);
        AdiabaticReport rep = adiabatic_defect(h0, mix, 1.0, ks);
        record_range("criterion-11/defect-slope[annulus_mixed]", rep.slope, 1.45, 2.1);
        DeformationPreset z = make_preset("diagonal_zero", g);
        AdiabaticReport rz = adiabatic_defect(h0, z, 1.0, ks);
        record_bound("criterion-11/defect[a=0]",
                     *std::max_element(rz.defects.begin(), rz.defects.end()), 1e-13);
    }

    {  // criterion 12: family-HE-solved background, correctors and ablations
        DeformationPreset fib = make_preset("fibre_modulated", g);
        FamilyFlow fl(g, fibre_average(fib.a), 1.0);
        BaseField u0(g, 2);
        for (long pb = 0; pb < g.n_base(); ++pb) {
            double q = 0.35 * std::sin(M_PI * g.base_y(pb));
            u0.at(pb) = q * Eigen::MatrixXcd::Identity(2, 2);
        }
        FlowParams prm;
        prm.tol = 1e-9;
        prm.t_end = 6.0;
        DirichletReport pre = dirichlet_solve(fl, prm, u0);
        MetricData hn = MetricData::from_base(base_exp(pre.flow.u_final));
        R2Solution sol = approx_solution_r2(hn, fib.a, fib.aH, 1.0, 1e-4);
        std::vector<double> rfull, rnophi, rnotau;
        for (double k : ks) {
            rfull.push_back(r2_residual(hn, fib, sol, 1.0, k, true, true));
            rnophi.push_back(r2_residual(hn, fib, sol, 1.0, k, false, true));
            rnotau.push_back(r2_residual(hn, fib, sol, 1.0, k, true, false));
        }
        double s_full = -loglog_slope(ks, rfull);
        double s_nophi = -loglog_slope(ks, rnophi);
        double s_notau = -loglog_slope(ks, rnotau);
        record("criterion-12/residual-slope", s_full >= 1.45, s_full, "slope vs 1.45");
        record_bound("criterion-12/ablate-phi2-slope", s_nophi, 1.05);
        record_bound("criterion-12/ablate-tau2-slope", s_notau, 1.05);
    }
}

// criterion 13
void group_loperator() {
    ProductGrid gt(default_torus());
    ProductGrid ga(default_annulus());
    HoloFrame ft = HoloFrame::trivial(gt, 2);
    HoloFrame fa = HoloFrame::trivial(ga, 2);
    MetricData ht = MetricData::identity(gt, 2);
    MetricData ha = MetricData::identity(ga, 2);

    struct Case {
        const char* name;
        const ProductGrid* g;
        const MetricData* h;
        const HoloFrame* fr;
        int expected;
    } cases[] = {{"diagonal_zero", &gt, &ht, &ft, 3},
                 {"nilpotent_constant", &gt, &ht, &ft, 0},
                 {"annulus_mixed", &ga, &ha, &fa, 0}};
    for (const auto& c : cases) {
        DeformationPreset ps = make_preset(c.name, *c.g);
        int oracle = hermitian_tracefree_commutant_dim(ps.a.aV);
        LOperator L = l_operator(*c.h, *c.fr, ps.a);
        std::string tag = std::string("criterion-13/") + c.name;
        record_bound(tag + "/symmetry", L.symmetry_defect, 1e-10);
        record(tag + "/min-eigenvalue", L.eigenvalues.minCoeff() >= -1e-8,
               L.eigenvalues.minCoeff(), "vs -1e-8");
        record(tag + "/kernel", L.kernel_dim == oracle && oracle == c.expected,
               static_cast<double>(L.kernel_dim),
               "oracle " + std::to_string(oracle) + ", expected " + std::to_string(c.expected));
    }
}

// criterion 14: total-space Donaldson flow at a self-contained smaller grid
void group_total_space() {
    GridSpec s;
    s.fibre_n = 8;
    s.base_kind = BaseKind::Annulus;
    s.base_n0 = 17;
    s.base_n1 = 8;
    ProductGrid g(s);
    DeformationPreset fib = make_preset("fibre_modulated", g);

    // family-HE background and second-order correctors
    FamilyFlow fl(g, fibre_average(fib.a), 1.0);
    BaseField u0(g, 2);
    for (long pb = 0; pb < g.n_base(); ++pb) {
        double q = 0.35 * std::sin(M_PI * g.base_y(pb));
        u0.at(pb) = q * Eigen::MatrixXcd::Identity(2, 2);
    }
    FlowParams prm;
    prm.tol = 1e-9;
    prm.t_end = 6.0;
    DirichletReport pre = dirichlet_solve(fl, prm, u0);
    BaseField sig_inf = base_exp(pre.flow.u_final);
    MetricData hn = MetricData::from_base(sig_inf);
    R2Solution sol = approx_solution_r2(hn, fib.a, fib.aH, 1.0, 1e-4);

    TotalSpaceParams tprm;
    tprm.t_end = 0.02;

    bool all_monotone = true;
    bool corrected_beats_identity = true;
    double prev_corr = -1.0;
    bool decreasing_in_k = true;
    for (double k : {16.0, 32.0, 64.0}) {
        DolbeaultData ds = fib.dolbeault(std::sqrt(1.0 / k));
        // identity initial data relative to the family-HE background
        MatrixField sigma_id = sig_inf.extend();
        TotalSpaceReport rid = total_space_he_flow(sigma_id, ds, k, tprm);
        // second-order corrected initial data: metric side of the gauge,
        // sigma = S^{1/2} exp(2 S^{1/2} X S^{-1/2}) S^{1/2}, X = phi2 + tau2/k + tau1/sqrt(k)
        MatrixField sigma_corr(g, 2);
        for (long p = 0; p < g.n_points(); ++p) {
            long pb = p % g.n_base();
            Eigen::MatrixXcd S = sig_inf.at(pb);
            Eigen::MatrixXcd sh = herm_sqrt(S), shi = herm_inv_sqrt(S);
            Eigen::MatrixXcd X = sol.phi2.at(pb)(0, 0).real() *
                                     Eigen::MatrixXcd::Identity(2, 2) +
                                 (1.0 / k) * sol.tau2.at(p) + (1.0 / std::sqrt(k)) * sol.tau1.at(p);
            Eigen::MatrixXcd Y = sh * X * shi;
            sigma_corr.at(p) = sh * herm_exp(Y + Y.adjoint().eval()) * sh;
        }
        TotalSpaceReport rc = total_space_he_flow(sigma_corr, ds, k, tprm);
        all_monotone = all_monotone && rid.monotone && rc.monotone;
        corrected_beats_identity = corrected_beats_identity && rc.final_monitor < rid.final_monitor;
        if (prev_corr >= 0) decreasing_in_k = decreasing_in_k && rc.final_monitor < prev_corr;
        prev_corr = rc.final_monitor;
        std::cout << "    k = " << std::defaultfloat << k << ": identity-init residual "
                  << std::scientific << std::setprecision(3) << rid.final_monitor
                  << ", corrected-init " << rc.final_monitor << "\n";
    }
    record("criterion-14/monitor-non-increasing", all_monotone, all_monotone ? 0.0 : 1.0,
           "per-run monitor");
    record("criterion-14/corrected-beats-identity", corrected_beats_identity,
           corrected_beats_identity ? 0.0 : 1.0, "for every k in {16,32,64}");
    record("criterion-14/residual-decreases-in-k", decreasing_in_k, decreasing_in_k ? 0.0 : 1.0,
           "corrected data across the sweep");
}

}  // namespace

int main(int argc, char** argv) {
    std::string group = argc > 1 ? argv[1] : "all";
    auto want = [&](const char* name) { return group == "all" || group == name; };
    try {
        if (want("identities")) group_identities();
        if (want("nu")) group_nu();
        if (want("flow")) group_flow();
        if (want("dirichlet")) group_dirichlet();
        if (want("adiabatic")) group_adiabatic();
        if (want("loperator")) group_loperator();
        if (want("total_space")) group_total_space();
    } catch (const std::exception& e) {
        std::cerr << "acceptance group '" << group << "' aborted: " << e.what() << "\n";
        return 1;
    }
    if (g_failures) std::cout << g_failures << " criteria FAILED\n";
    return g_failures == 0 ? 0 : 1;
}
