#include <cmath>

#include "doctest.h"
#include "fhe/errors.hpp"
#include "fhe/presets.hpp"
#include "fhe/projection.hpp"

using namespace fhe;

namespace {
GridSpec small_grid(int nf = 6, int nb = 4) {
    GridSpec s;
    s.fibre_n = nf;
    s.base_n0 = nb;
    s.base_n1 = nb;
    return s;
}
}  // namespace

TEST_CASE("trivial frames") {
    ProductGrid g(small_grid());
    HoloFrame fr2 = HoloFrame::trivial(g, 2);
    CHECK(fr2.dim() == 4);
    HoloFrame fr1 = HoloFrame::trivial(g, 1);
    CHECK(fr1.dim() == 1);
    CHECK(fr2.basis(0, 1, 0)(0, 1) == cd(1, 0));
}

TEST_CASE("fibrewise kernel solve finds the commutant of a deformed structure") {
    ProductGrid g(small_grid(6, 4));
    // undeformed: all constants
    HoloFrame fr0 = HoloFrame::solve(DolbeaultData::trivial(g, 2), 1e-8);
    CHECK(fr0.dim() == 4);

    // dbar_0 + N dzbar: kernel = commutant of N = span{I, N}
    DolbeaultData dN = DolbeaultData::trivial(g, 2);
    for (long p = 0; p < g.n_points(); ++p) dN.aV.at(p) = nilpotent_matrix();
    HoloFrame frN = HoloFrame::solve(dN, 1e-8);
    CHECK(frN.dim() == 2);
    // kernel elements commute with N and are z-constant
    for (int i = 0; i < frN.dim(); ++i) {
        Eigen::MatrixXcd v0 = frN.basis(0, i, 0);
        double worst = 0.0;
        for (long pf = 0; pf < g.n_fibre(); ++pf) {
            Eigen::MatrixXcd v = frN.basis(0, i, pf);
            worst = std::max(worst, (v - v0).norm());
            worst = std::max(worst, (v * nilpotent_matrix() - nilpotent_matrix() * v).norm());
        }
        CHECK(worst < 1e-7);
    }

    // kernel dimension jumping over the base is an assumption violation
    DolbeaultData jump = DolbeaultData::trivial(g, 2);
    for (long p = 0; p < g.n_points(); ++p) {
        long pb = p % g.n_base();
        double mu = (pb == 0) ? 0.0 : 1.0;
        jump.aV.at(p) = mu * nilpotent_matrix();
    }
    CHECK_THROWS_AS(HoloFrame::solve(jump, 1e-8), AssumptionError);
}

TEST_CASE("projection examples") {
    GridSpec s;
    s.fibre_n = 16;
    s.base_n0 = 8;
    s.base_n1 = 8;
    ProductGrid g(s);
    HoloFrame fr = HoloFrame::trivial(g, 2);
    MetricData h0 = MetricData::identity(g, 2);
    RandomFields rng(11);

    // fields already in the span are reproduced
    BaseField m = rng.base_field(g, 2, 2);
    SectionF sec = section_from_base(fr, m);
    SectionF back = pi(h0, fr, sec.reconstruct());
    CHECK((back.coeffs - sec.coeffs).cwiseAbs().maxCoeff() < 1e-12);

    // zero fibre mean projects to zero
    MatrixField wave(g, 2);
    Eigen::MatrixXcd M = rng.matrix(2);
    for (long p = 0; p < g.n_points(); ++p)
        wave.at(p) = std::exp(cd(0, 2 * M_PI * g.fibre_x1(p / g.n_base()))) * M;
    CHECK(pi(h0, fr, wave).max_abs() < 1e-14);

    // pi(f)^dag = pi(f^dag) for the flat metric
    MatrixField f = rng.field(g, 2, 3);
    BaseField a = pi(h0, fr, f).to_base();
    BaseField b = pi(h0, fr, adjoint(f)).to_base();
    double worst = 0.0;
    for (long pb = 0; pb < g.n_base(); ++pb)
        worst = std::max(worst, (a.at(pb).adjoint() - b.at(pb)).norm());
    CHECK(worst < 1e-13);

    // p: identity projects to zero; holomorphic trace-free fields are fixed
    CHECK(p(h0, fr, identity_field(g, 2)).max_abs() < 1e-14);
    Eigen::MatrixXcd T = Eigen::Vector2cd(1, -1).asDiagonal();
    MatrixField tf = constant_field(g, 0.18 * T);  // 2 s^2 diag(1,-1) at s = 0.3
    BaseField ptf = p(h0, fr, tf).to_base();
    worst = 0.0;
    for (long pb = 0; pb < g.n_base(); ++pb)
        worst = std::max(worst, (ptf.at(pb) - 0.18 * T).norm());
    CHECK(worst < 1e-14);
}

TEST_CASE("Hermitian/skew split of sections") {
    ProductGrid g(small_grid(6, 4));
    HoloFrame fr = HoloFrame::trivial(g, 2);
    RandomFields rng(13);
    BaseField u = rng.base_hermitian(g, 2, 1);
    for (long pb = 0; pb < g.n_base(); ++pb) u.at(pb) *= cd(0.3, 0.0);
    MetricData h = MetricData::from_base(base_exp(u));

    BaseField hm = rng.base_hermitian(g, 2);  // plain Hermitian = h-Hermitian iff h = I
    // build an h-Hermitian matrix field per point
    BaseField hherm(g, 2);
    for (long pb = 0; pb < g.n_base(); ++pb) {
        Eigen::MatrixXcd sh = herm_sqrt(h.sigma.at(pb)), shi = herm_inv_sqrt(h.sigma.at(pb));
        hherm.at(pb) = shi * hm.at(pb) * sh;
    }
    SectionF sec = section_from_base(fr, hherm);
    SectionF hp, sp;
    split_hs(h, fr, sec, hp, sp);
    CHECK((hp.coeffs - sec.coeffs).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(sp.coeffs.cwiseAbs().maxCoeff() < 1e-12);

    BaseField skew(g, 2);
    for (long pb = 0; pb < g.n_base(); ++pb) skew.at(pb) = cd(0, 1) * hherm.at(pb);
    SectionF sec2 = section_from_base(fr, skew);
    split_hs(h, fr, sec2, hp, sp);
    CHECK(hp.coeffs.cwiseAbs().maxCoeff() < 1e-12);
    CHECK((sp.coeffs - sec2.coeffs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("frame connection reduces to the spectral derivative in the flat case") {
    GridSpec s;
    s.fibre_n = 4;
    s.base_n0 = 16;
    s.base_n1 = 16;
    ProductGrid g(s);
    HoloFrame fr = HoloFrame::trivial(g, 2);
    MetricData h0 = MetricData::identity(g, 2);
    BaseField m(g, 2);
    for (long pb = 0; pb < g.n_base(); ++pb)
        m.at(pb) = std::exp(cd(0, 2 * M_PI * g.base_y(pb))) * Eigen::MatrixXcd::Identity(2, 2);
    SectionF sec = section_from_base(fr, m);
    SectionF der = nabla_F(h0, fr, sec, CDir::W);
    BaseField oracle = base_deriv(m, CDir::W);
    SectionF oracle_sec = section_from_base(fr, oracle);
    CHECK((der.coeffs - oracle_sec.coeffs).cwiseAbs().maxCoeff() < 1e-10);

    RandomFields rng(23);
    SectionF cst = section_from_base(fr, constant_base_field(g, rng.matrix(2)));
    SectionF dcst = nabla_F(h0, fr, cst, CDir::W);
    CHECK(dcst.max_abs() < 1e-13);
}

TEST_CASE("ill-conditioned Gram systems fail loudly") {
    ProductGrid g(small_grid(6, 4));
    HoloFrame fr = HoloFrame::trivial(g, 2);
    MatrixField sig(g, 2);
    for (long p = 0; p < g.n_points(); ++p)
        sig.at(p) = Eigen::Vector2cd(1e7, 1e-7).asDiagonal();
    RandomFields rng(17);
    MatrixField f = rng.field(g, 2, 1);
    CHECK_THROWS_AS(pi(MetricData{sig}, fr, f), NumericalError);
}

TEST_CASE("homogeneous distance against the geodesic formula") {
    ProductGrid g(small_grid(6, 6));
    RandomFields rng(19);
    BaseField u1 = rng.base_hermitian(g, 2);
    BaseField hh = rng.base_hermitian(g, 2);
    for (long pb = 0; pb < g.n_base(); ++pb) {
        u1.at(pb) *= cd(0.4, 0.0);
        hh.at(pb) *= cd(0.5, 0.0);
    }
    BaseField s1 = base_exp(u1), s2(g, 2);
    double expected = 0.0;
    for (long pb = 0; pb < g.n_base(); ++pb) {
        Eigen::MatrixXcd sh = herm_sqrt(s1.at(pb));
        s2.at(pb) = sh * herm_exp(hh.at(pb)) * sh;
        expected += g.base_weight(pb) * (hh.at(pb) * hh.at(pb)).trace().real();
    }
    CHECK(distance_sq(s1, s2) == doctest::Approx(expected).epsilon(1e-10));
    CHECK(distance_sq(s1, s1) < 1e-14);
}
