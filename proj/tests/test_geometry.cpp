#include <cmath>

#include "doctest.h"
#include "fhe/calculus.hpp"
#include "fhe/errors.hpp"

using namespace fhe;

namespace {
GridSpec torus16() {
    GridSpec s;
    s.fibre_n = 16;
    s.base_n0 = 16;
    s.base_n1 = 16;
    s.k = 1.0;
    return s;
}
}  // namespace

TEST_CASE("grid construction and quadrature volumes") {
    ProductGrid g(torus16());
    CHECK(g.n_points() == 16L * 16 * 16 * 16);
    double vol = 0.0;
    for (long p = 0; p < g.n_points(); ++p) vol += g.point_weight(p);
    CHECK(vol == doctest::Approx(1.0).epsilon(1e-14));

    GridSpec a;
    a.fibre_n = 8;
    a.base_kind = BaseKind::Annulus;
    a.base_n0 = 33;  // radial
    a.base_n1 = 16;  // angular
    a.k = 4.0;
    ProductGrid ga(a);
    CHECK(ga.n_base() == 33L * 16);
    double bvol = 0.0;
    int boundary_points = 0;
    for (long pb = 0; pb < ga.n_base(); ++pb) {
        bvol += ga.base_weight(pb);
        if (ga.base_boundary(pb)) ++boundary_points;
    }
    CHECK(bvol == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(boundary_points == 2 * 16);
}

TEST_CASE("grid preconditions") {
    GridSpec s = torus16();
    s.fibre_n = 3;
    CHECK_THROWS_AS(ProductGrid{s}, ConfigError);
    s = torus16();
    s.fibre_n = 6;
    s.base_n0 = 7;  // odd periodic
    CHECK_THROWS_AS(ProductGrid{s}, ConfigError);
    s = torus16();
    s.k = 0.0;
    CHECK_THROWS_AS(ProductGrid{s}, ConfigError);
    GridSpec a;
    a.base_kind = BaseKind::Annulus;
    a.base_n0 = 4;  // radial too small
    a.base_n1 = 8;
    CHECK_THROWS_AS(ProductGrid{a}, ConfigError);
}

TEST_CASE("complex derivative matches the symbolic oracle") {
    ProductGrid g(torus16());
    // f = e^{2 pi i x1} I, d_z f = pi i f since d_z = (d_x1 - i d_x2)/2
    MatrixField f(g, 2);
    for (long p = 0; p < g.n_points(); ++p)
        f.at(p) = std::exp(cd(0, 2 * M_PI * g.fibre_x1(p / g.n_base()))) *
                  Eigen::MatrixXcd::Identity(2, 2);
    MatrixField df = deriv(f, CDir::Z);
    double worst = 0.0;
    for (long p = 0; p < g.n_points(); ++p)
        worst = std::max(worst, (df.at(p) - cd(0, M_PI) * f.at(p)).norm());
    CHECK(worst < 1e-11);

    MatrixField c = constant_field(g, Eigen::MatrixXcd::Identity(2, 2));
    for (CDir d : {CDir::Z, CDir::Zbar, CDir::W, CDir::Wbar})
        CHECK(deriv(c, d).max_abs() < 1e-13);

    // mixed partials commute on band-limited fields
    RandomFields rng(3);
    MatrixField s = rng.field(g, 2, 3);
    MatrixField ab = deriv(deriv(s, CDir::Z), CDir::Zbar);
    MatrixField ba = deriv(deriv(s, CDir::Zbar), CDir::Z);
    CHECK((ab - ba).max_abs() < 1e-12 * (1.0 + ab.max_abs()));
}

TEST_CASE("radial derivatives are exact on cubics and 4th order on waves") {
    GridSpec a;
    a.fibre_n = 4;
    a.base_kind = BaseKind::Annulus;
    a.base_n0 = 33;
    a.base_n1 = 8;
    ProductGrid g(a);
    // cubic in the radial coordinate: one-sided closures are exact
    BaseField f(g, 1), fe(g, 1);
    for (long pb = 0; pb < g.n_base(); ++pb) {
        double y = g.base_y(pb);
        f.at(pb)(0, 0) = 1.0 + y + 0.5 * y * y - 2.0 * y * y * y;
        fe.at(pb)(0, 0) = 1.0 + y - 6.0 * y * y;
    }
    BaseField df = apply_base_axis(f, 3, g.axis(3).d1);
    CHECK((df - fe).max_abs() < 1e-11);

    // trig mode: error scales like h^4
    auto wave_err = [](int n) {
        GridSpec s;
        s.fibre_n = 4;
        s.base_kind = BaseKind::Annulus;
        s.base_n0 = n;
        s.base_n1 = 8;
        ProductGrid gg(s);
        BaseField w(gg, 1), we(gg, 1);
        for (long pb = 0; pb < gg.n_base(); ++pb) {
            double y = gg.base_y(pb);
            w.at(pb)(0, 0) = std::sin(2 * M_PI * y);
            we.at(pb)(0, 0) = 2 * M_PI * std::cos(2 * M_PI * y);
        }
        return (apply_base_axis(w, 3, gg.axis(3).d1) - we).max_abs();
    };
    double e33 = wave_err(33), e65 = wave_err(65);
    CHECK(e33 / e65 > 12.0);  // ~16 for 4th order
}

TEST_CASE("contraction normalization and split") {
    ProductGrid g(torus16());
    Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(2, 2);
    OneOneForm wx{constant_field(g, cd(0, 0.5) * id), MatrixField(g, 2), MatrixField(g, 2),
                  MatrixField(g, 2)};
    CHECK((contract(wx, ContractMode::V) - identity_field(g, 2)).max_abs() < 1e-14);
    CHECK(contract(wx, ContractMode::H).max_abs() < 1e-14);

    RandomFields rng(5);
    OneOneForm F{rng.field(g, 2), rng.field(g, 2), rng.field(g, 2), rng.field(g, 2)};
    MatrixField lhs = contract(F, ContractMode::K, 4.0);
    MatrixField rhs = contract(F, ContractMode::V) + cd(0.25, 0) * contract(F, ContractMode::H);
    CHECK((lhs - rhs).max_abs() < 1e-14 * (1 + lhs.max_abs()));
}

TEST_CASE("fibre and total integrals against a 1-D quadrature oracle") {
    ProductGrid g(torus16());
    BaseField one = fibre_integral(identity_field(g, 2));
    for (long pb = 0; pb < g.n_base(); ++pb)
        CHECK((one.at(pb) - Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-14);

    MatrixField wave(g, 2);
    for (long p = 0; p < g.n_points(); ++p)
        wave.at(p) = std::exp(cd(0, 2 * M_PI * g.fibre_x1(p / g.n_base()))) *
                     Eigen::MatrixXcd::Identity(2, 2);
    CHECK(total_integral(wave).norm() < 1e-14);

    // product integrand f(b) g(z): fibre integral = f(b) * (1-D quadrature of g)
    auto gz = [](double x1) { return 1.0 + 0.3 * std::cos(2 * M_PI * x1) * std::cos(2 * M_PI * x1); };
    auto fb = [](double x) { return std::sin(2 * M_PI * x); };
    MatrixField prod(g, 1);
    for (long p = 0; p < g.n_points(); ++p)
        prod.at(p)(0, 0) = fb(g.base_x(p % g.n_base())) * gz(g.fibre_x1(p / g.n_base()));
    double oracle = 0.0;  // independent 1-D sum over the fibre axis
    for (int i = 0; i < g.axis(0).n; ++i) oracle += gz(g.axis(0).coord[i]) / g.axis(0).n;
    BaseField fi = fibre_integral(prod);
    double worst = 0.0;
    for (long pb = 0; pb < g.n_base(); ++pb)
        worst = std::max(worst, std::abs(fi.at(pb)(0, 0) - fb(g.base_x(pb)) * oracle));
    CHECK(worst < 1e-14);
}

TEST_CASE("L2(omega_k) norms and the scaling relations") {
    ProductGrid g(torus16());
    MatrixField id = identity_field(g, 2);
    CHECK(lp_norm_sq(id, 3.0) == doctest::Approx(2.0 * 3.0).epsilon(1e-12));

    RandomFields rng(7);
    MatrixField f = rng.field(g, 2);
    CHECK(lp_norm_sq(f, 4.0) / lp_norm_sq(f, 1.0) == doctest::Approx(4.0).epsilon(1e-12));
    MatrixField fw = f;
    fw.set_tag(Degree::Dwb);
    CHECK(lp_norm_sq(fw, 4.0) / lp_norm_sq(fw, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    MatrixField z(g, 2);
    CHECK(lp_norm(z, 2.0) == 0.0);
}
