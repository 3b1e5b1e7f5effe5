#include <cmath>

#include "doctest.h"
#include "fhe/errors.hpp"
#include "fhe/flow.hpp"
#include "fhe/presets.hpp"

using namespace fhe;

namespace {
GridSpec torus_base(int nb = 16) {
    GridSpec s;
    s.fibre_n = 8;
    s.base_n0 = nb;
    s.base_n1 = nb;
    return s;
}
}  // namespace

TEST_CASE("P operator closed forms") {
    ProductGrid g(torus_base());
    // flat problem at the identity
    FamilyFlow flat(g, DeformationData::zero(g, 2), 1.0);
    BaseField id_sigma = constant_base_field(g, Eigen::MatrixXcd::Identity(2, 2));
    CHECK(flat.P(id_sigma).max_abs() < 1e-14);

    // diagonal sigma = diag(e^phi, e^-phi): P = Delta_B^{1,0} phi diag(1,-1)
    BaseField sig(g, 2);
    for (long pb = 0; pb < g.n_base(); ++pb) {
        double phi = 0.2 * std::cos(2 * M_PI * g.base_y(pb));
        sig.at(pb) = Eigen::Vector2cd(std::exp(phi), std::exp(-phi)).asDiagonal();
    }
    BaseField pval = flat.P(sig);
    double worst = 0.0;
    for (long pb = 0; pb < g.n_base(); ++pb) {
        double phi = 0.2 * std::cos(2 * M_PI * g.base_y(pb));
        double lap10 = 0.5 * 4 * M_PI * M_PI * phi;  // Delta^{1,0} e-value on the mode
        Eigen::MatrixXcd expect = lap10 * Eigen::Vector2cd(1, -1).asDiagonal().toDenseMatrix();
        worst = std::max(worst, (pval.at(pb) - expect).norm());
    }
    CHECK(worst < 1e-10);

    // deformed problem at the identity: P = -i lambda nu = 2 lambda diag(1,-1)
    DeformationPreset nil = make_preset("nilpotent_constant", g);
    FamilyFlow fl(g, nil.a, 1.0);
    BaseField p0 = fl.P(id_sigma);
    for (long pb = 0; pb < g.n_base(); ++pb) {
        CHECK(std::abs(p0.at(pb)(0, 0).real() - 2.0) < 1e-13);
        CHECK(std::abs(p0.at(pb)(1, 1).real() + 2.0) < 1e-13);
    }
    CHECK(p0.max_abs() == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-13));
}

TEST_CASE("single heat step matches the mode decay rate") {
    ProductGrid g(torus_base());
    FamilyFlow flat(g, DeformationData::zero(g, 2), 1.0);
    double eps = 1e-3, dt = 1e-4;
    BaseField u0(g, 2);
    for (long pb = 0; pb < g.n_base(); ++pb) {
        double c = eps * std::cos(2 * M_PI * g.base_y(pb));
        u0.at(pb) = c * Eigen::Vector2cd(1, -1).asDiagonal().toDenseMatrix();
    }
    FlowState st;
    st.u = u0;
    flat.step_rk4(st, dt);
    double decay = std::exp(-4.0 * M_PI * M_PI * dt);
    double worst = 0.0;
    for (long pb = 0; pb < g.n_base(); ++pb)
        worst = std::max(worst, (st.u.at(pb) - decay * u0.at(pb)).norm());
    CHECK(worst < 1e-11);  // O(dt^5) local error plus O(eps^2) nonlinearity
}

TEST_CASE("B-constant deformed run follows the closed-form ODE") {
    ProductGrid g(torus_base(8));
    DeformationPreset nil = make_preset("nilpotent_constant", g);
    double lambda = 1.0;
    FamilyFlow fl(g, nil.a, lambda);
    FlowParams prm;
    prm.dt = 1e-3;
    prm.t_end = 0.2;
    prm.stop_on_tol = false;
    BaseField u0(g, 2);
    FlowReport rep = fl.run(prm, u0);
    // e^{-2 phi(t)} = 1 + 8 lambda t with sigma = diag(e^phi, e^-phi)
    double t = rep.t.back();
    double phi_exact = -0.5 * std::log(1.0 + 8.0 * lambda * t);
    double worst = 0.0;
    for (long pb = 0; pb < g.n_base(); ++pb)
        worst = std::max(worst, std::abs(rep.u_final.at(pb)(0, 0).real() - phi_exact));
    CHECK(worst < 1e-9);
    CHECK(rep.max_det_drift < 1e-10);
    CHECK(rep.monotone);
}

TEST_CASE("flow_run edge cases") {
    ProductGrid g(torus_base(8));
    FamilyFlow flat(g, DeformationData::zero(g, 2), 1.0);
    BaseField u0(g, 2);
    FlowParams prm;
    prm.t_end = 0.0;
    FlowReport rep = flat.run(prm, u0);
    CHECK(rep.steps == 0);
    CHECK(rep.t.size() == 1);  // initial monitors only

    // blow-up detection with an absurd step size
    DeformationPreset nil = make_preset("nilpotent_constant", g);
    FamilyFlow fl(g, nil.a, 1.0);
    RandomFields rng(41);
    BaseField ur = rng.base_hermitian(g, 2, 2);
    FlowParams bad;
    bad.dt = 50.0;
    bad.t_end = 500.0;
    bad.stop_on_tol = false;
    CHECK_THROWS(fl.run(bad, ur));
}

TEST_CASE("eta and theta behaviour") {
    ProductGrid g(torus_base(8));
    RandomFields rng(43);
    BaseField s1 = base_exp(rng.base_hermitian(g, 2, 1));
    BaseField s2 = base_exp(rng.base_hermitian(g, 2, 1));
    BaseField e = eta(s1, s2);
    for (long pb = 0; pb < g.n_base(); ++pb) CHECK(e.at(pb)(0, 0).real() > -1e-12);
    CHECK(eta(s1, s1).max_abs() < 1e-12);

    DeformationPreset nil = make_preset("nilpotent_constant", g);
    FamilyFlow fl(g, nil.a, 1.0);
    BaseField th = fl.theta(s1);
    for (long pb = 0; pb < g.n_base(); ++pb) CHECK(th.at(pb)(0, 0).real() >= 0.0);
}

TEST_CASE("snapshot subsolution defect on the pure heat run") {
    GridSpec s;
    s.fibre_n = 4;
    s.base_n0 = 16;
    s.base_n1 = 16;
    ProductGrid g(s);
    FamilyFlow flat(g, DeformationData::zero(g, 2), 1.0);
    BaseField u0(g, 2);
    for (long pb = 0; pb < g.n_base(); ++pb) {
        double c = 1e-2 * std::cos(2 * M_PI * g.base_y(pb));
        u0.at(pb) = c * Eigen::Vector2cd(1, -1).asDiagonal().toDenseMatrix();
    }
    FlowParams prm;
    prm.dt = 1e-4;
    prm.t_end = 0.05;
    prm.stop_on_tol = false;
    prm.snapshot_every = 10;
    FlowReport rep = flat.run(prm, u0);
    CHECK(subsolution_defect(rep.snapshot_t, rep.theta_snapshots) <= 1e-6);
    CHECK(rep.live_subsolution_defect <= 1e-6);
    // a stationary run has zero defect
    FlowReport stat = flat.run(prm, BaseField(g, 2));
    CHECK(subsolution_defect(stat.snapshot_t, stat.theta_snapshots) == 0.0);
}

TEST_CASE("semi-implicit scheme relaxes the heat problem") {
    ProductGrid g(torus_base(8));
    FamilyFlow flat(g, DeformationData::zero(g, 2), 1.0);
    BaseField u0(g, 2);
    for (long pb = 0; pb < g.n_base(); ++pb) {
        double c = 0.01 * std::cos(2 * M_PI * g.base_y(pb));
        u0.at(pb) = c * Eigen::Vector2cd(1, -1).asDiagonal().toDenseMatrix();
    }
    FlowParams prm;
    prm.scheme = Scheme::SemiImplicit;
    prm.dt = 2e-3;  // far above the explicit stability bound
    prm.t_end = 0.6;
    prm.tol = 1e-9;
    FlowReport rep = flat.run(prm, u0);
    CHECK(rep.final_residual < 1e-6);
    CHECK(rep.sup_theta.back() < 1e-3 * rep.sup_theta.front());
}

TEST_CASE("Dirichlet boundary data compatibility") {
    GridSpec s;
    s.fibre_n = 8;
    s.base_kind = BaseKind::Annulus;
    s.base_n0 = 9;
    s.base_n1 = 8;
    ProductGrid g(s);
    DeformationData zero = DeformationData::zero(g, 2);
    FamilyFlow fl(g, zero, 1.0);
    BaseField ub(g, 2);  // boundary data: identity metric
    fl.set_dirichlet(ub);
    BaseField u0(g, 2);
    for (long pb = 0; pb < g.n_base(); ++pb)
        u0.at(pb) = 0.1 * Eigen::MatrixXcd::Identity(2, 2);  // nonzero on the boundary
    FlowParams prm;
    prm.t_end = 1e-3;
    CHECK_THROWS_AS(fl.run(prm, u0), DomainError);

    // torus base cannot take Dirichlet data
    ProductGrid gt(torus_base(8));
    FamilyFlow ft(gt, DeformationData::zero(gt, 2), 1.0);
    BaseField ubt(gt, 2);
    CHECK_THROWS_AS(ft.set_dirichlet(ubt), ConfigError);
}
