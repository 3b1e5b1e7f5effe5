#include <cmath>

#include "doctest.h"
#include "fhe/errors.hpp"
#include "fhe/moment_map.hpp"
#include "fhe/presets.hpp"

using namespace fhe;

namespace {
GridSpec torus16() {
    GridSpec s;
    s.fibre_n = 16;
    s.base_n0 = 8;
    s.base_n1 = 8;
    return s;
}
}  // namespace

TEST_CASE("symplectic pairing basics") {
    ProductGrid g(torus16());
    MetricData h0 = MetricData::identity(g, 2);
    RandomFields rng(31);
    MatrixField al = rng.field(g, 2, 2);
    MatrixField be = rng.field(g, 2, 2);
    al.set_tag(Degree::Dzb);
    be.set_tag(Degree::Dzb);
    double o = omega_pair(h0, al, be, 3);
    CHECK(std::abs(omega_pair(h0, al, al, 3)) < 1e-13 * (1 + std::abs(o)));
    MatrixField al2 = cd(2, 0) * al;
    CHECK(omega_pair(h0, al2, be, 3) == doctest::Approx(2 * o).epsilon(1e-12));
    CHECK(omega_pair(h0, al, cd(0, 1) * al, 3) > 0.0);  // Kahler positivity
}

TEST_CASE("infinitesimal action") {
    ProductGrid g(torus16());
    DeformationPreset nil = make_preset("nilpotent_constant", g);
    Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(2, 2);
    CHECK(infinitesimal_action(id, nil.a).max_abs() < 1e-15);
    Eigen::MatrixXcd T = Eigen::Vector2cd(1, -1).asDiagonal();
    MatrixField act = infinitesimal_action(T, nil.a);
    double worst = 0.0;
    for (long p = 0; p < g.n_points(); ++p)
        worst = std::max(worst, (act.at(p) - 2.0 * nilpotent_matrix()).norm());
    CHECK(worst < 1e-14);
    CHECK(infinitesimal_action(nilpotent_matrix(), nil.a).max_abs() < 1e-15);
}

TEST_CASE("nu on the constant nilpotent deformation") {
    ProductGrid g(torus16());
    HoloFrame fr = HoloFrame::trivial(g, 2);
    MetricData h0 = MetricData::identity(g, 2);
    DeformationPreset nil = make_preset("nilpotent_constant", g);
    BaseField v = nu(h0, fr, nil.a);
    // i nu = -2 diag(1, -1)
    Eigen::MatrixXcd expect = cd(0, 2) * Eigen::Vector2cd(1, -1).asDiagonal().toDenseMatrix();
    double worst = 0.0;
    for (long pb = 0; pb < g.n_base(); ++pb) worst = std::max(worst, (v.at(pb) - expect).norm());
    CHECK(worst < 1e-13);

    DeformationData zero = DeformationData::zero(g, 2);
    CHECK(nu(h0, fr, zero).max_abs() < 1e-14);
}

TEST_CASE("expansion defect and controls") {
    ProductGrid g(torus16());
    HoloFrame fr = HoloFrame::trivial(g, 2);
    MetricData h0 = MetricData::identity(g, 2);
    DeformationPreset nil = make_preset("nilpotent_constant", g);

    ExpansionReport rep = expansion_defect(h0, fr, nil.a, nil.path(), {0.1, 0.05});
    CHECK(rep.exact_cancellation);
    CHECK(*std::max_element(rep.defects.begin(), rep.defects.end()) < 1e-12);

    DeformationData zero = DeformationData::zero(g, 2);
    ExpansionReport rz = expansion_defect(h0, fr, zero, linear_path(zero), {0.1, 0.05});
    CHECK(*std::max_element(rz.defects.begin(), rz.defects.end()) < 1e-14);

    // a non-integrable path is rejected
    DeformationData bad;
    bad.aV = MatrixField(g, 2, Degree::Dzb);
    for (long p = 0; p < g.n_points(); ++p)
        bad.aV.at(p) = std::cos(2 * M_PI * g.base_x(p % g.n_base())) * nilpotent_matrix();
    CHECK_THROWS_AS(expansion_defect(h0, fr, bad, linear_path(bad), {0.1}), DomainError);
}

TEST_CASE("fibre average extracts the harmonic representative") {
    ProductGrid g(torus16());
    DeformationPreset fib = make_preset("fibre_modulated", g, 0.5, 0.4, 0.5);
    DeformationData avg = fibre_average(fib.a);
    double worst = 0.0;
    for (long p = 0; p < g.n_points(); ++p)
        worst = std::max(worst, (avg.aV.at(p) - nilpotent_matrix()).norm());
    CHECK(worst < 1e-13);
    CHECK(avg.gauge_fixed);
    // separable form is averaged consistently
    REQUIRE(avg.sep.has_value());
    NuEvaluator ev(g, avg);
    BaseField id_sigma = constant_base_field(g, Eigen::MatrixXcd::Identity(2, 2));
    BaseField inu = ev.i_nu(id_sigma);
    Eigen::MatrixXcd expect = -2.0 * Eigen::Vector2cd(1, -1).asDiagonal().toDenseMatrix();
    for (long pb = 0; pb < g.n_base(); ++pb) CHECK((inu.at(pb) - expect).norm() < 1e-13);
}

TEST_CASE("preset bookkeeping") {
    ProductGrid g(torus16());
    DeformationPreset nil = make_preset("nilpotent_constant", g);
    CHECK(nil.a.gauge_fixed);
    CHECK(nil.a.commutant_dim == 2);  // span{I, N}
    DeformationPreset fib = make_preset("fibre_modulated", g);
    CHECK_FALSE(fib.a.gauge_fixed);
    DeformationPreset z = make_preset("diagonal_zero", g);
    CHECK(z.a.commutant_dim == 4);
    CHECK_THROWS_AS(make_preset("annulus_mixed", g), ConfigError);  // torus base
    CHECK_THROWS_AS(make_preset("no_such_preset", g), ConfigError);

    GridSpec as;
    as.fibre_n = 8;
    as.base_kind = BaseKind::Annulus;
    as.base_n0 = 9;
    as.base_n1 = 8;
    ProductGrid ga(as);
    DeformationPreset mix = make_preset("annulus_mixed", ga);
    CHECK(mix.a.commutant_dim == 1);  // scalars only
    CHECK(hermitian_tracefree_commutant_dim(mix.a.aV) == 0);
    // aH commutes with aV pointwise, so the path stays integrable
    CHECK(integrability_defect(mix.dolbeault(0.5)) < mix.integ_tol);
}
