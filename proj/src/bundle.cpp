#include "fhe/bundle.hpp"

#include <cmath>

#include "fhe/errors.hpp"

namespace fhe {

void MetricData::validate() const {
    for (long p = 0; p < sigma.n_points(); ++p) {
        Eigen::MatrixXcd m = sigma.at(p);
        if ((m - m.adjoint().eval()).norm() > 1e-12 * (1.0 + m.norm()))
            throw DomainError("metric sigma is not Hermitian at a grid point");
        if (herm_min_eig(m) <= 0.0)
            throw DomainError("metric sigma is not positive definite at a grid point");
    }
}

DolbeaultData DolbeaultData::trivial(const ProductGrid& g, int rank) {
    DolbeaultData d;
    d.aV = MatrixField(g, rank, Degree::Dzb);
    d.aH = MatrixField(g, rank, Degree::Dwb);
    d.gauge_fixed = true;
    SeparableDeformation sep;  // empty sum
    d.sep_v = sep;
    return d;
}

double integrability_defect(const DolbeaultData& d) {
    MatrixField f = deriv(d.aH, CDir::Zbar) - deriv(d.aV, CDir::Wbar) + commutator(d.aV, d.aH);
    return f.max_abs();
}

namespace {
Degree conj_tag(Degree t) {
    switch (t) {
        case Degree::Dz: return Degree::Dzb;
        case Degree::Dzb: return Degree::Dz;
        case Degree::Dw: return Degree::Dwb;
        case Degree::Dwb: return Degree::Dw;
        default: return t;
    }
}
}  // namespace

MatrixField h_adjoint(const MetricData& h, const MatrixField& f) {
    MatrixField out(f.grid(), f.rank(), conj_tag(f.tag()));
    for (long p = 0; p < f.n_points(); ++p) {
        Eigen::MatrixXcd s = h.sigma.at(p);
        out.at(p) = s.inverse() * f.at(p).adjoint() * s;
    }
    return out;
}

Connection chern_connection(const MetricData& h, const DolbeaultData& d) {
    h.validate();
    const ProductGrid& g = h.sigma.grid();
    const int r = h.sigma.rank();
    MatrixField dsz = deriv(h.sigma, CDir::Z);
    MatrixField dsw = deriv(h.sigma, CDir::W);
    Connection conn;
    conn.Az = MatrixField(g, r, Degree::Dz);
    conn.Aw = MatrixField(g, r, Degree::Dw);
    MatrixField avs = h_adjoint(h, d.aV);
    MatrixField ahs = h_adjoint(h, d.aH);
    for (long p = 0; p < g.n_points(); ++p) {
        Eigen::MatrixXcd si = h.sigma.at(p).inverse();
        conn.Az.at(p) = si * dsz.at(p) - avs.at(p);
        conn.Aw.at(p) = si * dsw.at(p) - ahs.at(p);
    }
    conn.Azb = d.aV;
    conn.Awb = d.aH;
    return conn;
}

CurvatureData curvature(const MetricData& h, const DolbeaultData& d) {
    Connection c = chern_connection(h, d);
    CurvatureData F;
    F.oneone.zz = deriv(c.Azb, CDir::Z) - deriv(c.Az, CDir::Zbar) + commutator(c.Az, c.Azb);
    F.oneone.zw = deriv(c.Awb, CDir::Z) - deriv(c.Az, CDir::Wbar) + commutator(c.Az, c.Awb);
    F.oneone.wz = deriv(c.Azb, CDir::W) - deriv(c.Aw, CDir::Zbar) + commutator(c.Aw, c.Azb);
    F.oneone.ww = deriv(c.Awb, CDir::W) - deriv(c.Aw, CDir::Wbar) + commutator(c.Aw, c.Awb);
    F.oneone.zz.set_tag(Degree::TwoForm);
    F.oneone.zw.set_tag(Degree::TwoForm);
    F.oneone.wz.set_tag(Degree::TwoForm);
    F.oneone.ww.set_tag(Degree::TwoForm);
    F.f02 = deriv(c.Awb, CDir::Zbar) - deriv(c.Azb, CDir::Wbar) + commutator(c.Azb, c.Awb);
    F.f02.set_tag(Degree::TwoForm);
    return F;
}

MatrixField contracted_curvature(const MetricData& h, const DolbeaultData& d, ContractMode mode) {
    CurvatureData F = curvature(h, d);
    MatrixField out = cd(0.0, 1.0) * contract(F.oneone, mode);
    out.set_tag(Degree::Scalar);
    return out;
}

MatrixField conn_apply(const Connection& conn, const MatrixField& s, CDir dir, ConnAction action) {
    const MatrixField* A = nullptr;
    switch (dir) {
        case CDir::Z: A = &conn.Az; break;
        case CDir::W: A = &conn.Aw; break;
        case CDir::Zbar: A = &conn.Azb; break;
        case CDir::Wbar: A = &conn.Awb; break;
    }
    MatrixField out = deriv(s, dir);
    if (action == ConnAction::End) {
        for (long p = 0; p < s.n_points(); ++p)
            out.at(p) += A->at(p) * s.at(p) - s.at(p) * A->at(p);
    } else {
        for (long p = 0; p < s.n_points(); ++p) out.at(p) += A->at(p) * s.at(p);
    }
    return out;
}

MatrixField laplacian(const MetricData& h, const DolbeaultData& d, LapKind kind, ContractMode mode,
                      const MatrixField& s, ConnAction action) {
    Connection conn = chern_connection(h, d);
    const double k = s.grid().k();
    auto one_zero = [&](CDir hol, CDir antihol) {
        MatrixField t = conn_apply(conn, s, hol, action);
        MatrixField u = conn_apply(conn, t, antihol, action);
        u *= cd(-2.0, 0.0);
        u.set_tag(Degree::Scalar);
        return u;
    };
    auto zero_one = [&](CDir hol, CDir antihol) {
        MatrixField v = conn_apply(conn, s, antihol, action);
        MatrixField u = conn_apply(conn, v, hol, action);
        u *= cd(-2.0, 0.0);
        u.set_tag(Degree::Scalar);
        return u;
    };
    auto assemble = [&](auto&& part) {
        switch (mode) {
            case ContractMode::V: return part(CDir::Z, CDir::Zbar);
            case ContractMode::H: return part(CDir::W, CDir::Wbar);
            case ContractMode::K: {
                MatrixField v = part(CDir::Z, CDir::Zbar);
                MatrixField hpart = part(CDir::W, CDir::Wbar);
                return v + cd(1.0 / k, 0.0) * hpart;
            }
        }
        throw DomainError("unknown contraction mode");
    };
    switch (kind) {
        case LapKind::OneZero: return assemble(one_zero);
        case LapKind::ZeroOne: return assemble(zero_one);
        case LapKind::Full: {
            MatrixField a = assemble(one_zero);
            MatrixField b = assemble(zero_one);
            return a + b;
        }
    }
    throw DomainError("unknown laplacian kind");
}

EinsteinConstants einstein_constants(const DolbeaultData& d, const MetricData& h) {
    CurvatureData F = curvature(h, d);
    MatrixField iv = cd(0.0, 1.0) * contract(F.oneone, ContractMode::V);
    MatrixField ih = cd(0.0, 1.0) * contract(F.oneone, ContractMode::H);
    iv.set_tag(Degree::Scalar);
    ih.set_tag(Degree::Scalar);
    const double r = static_cast<double>(h.rank());
    EinsteinConstants c;
    c.c_V = total_integral(iv).trace().real() / r;  // unit volume cells
    c.c_H = total_integral(ih).trace().real() / r;
    return c;
}

DolbeaultData gauge_transform(const MatrixField& g, const DolbeaultData& d) {
    const ProductGrid& grid = d.grid();
    std::vector<Eigen::MatrixXcd> ginv(grid.n_points());
    for (long p = 0; p < grid.n_points(); ++p) {
        Eigen::MatrixXcd m = g.at(p);
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(m);
        if (!lu.isInvertible()) throw DomainError("gauge transform is singular at a grid point");
        ginv[p] = lu.inverse();
    }
    MatrixField dgz = deriv(g, CDir::Zbar);
    MatrixField dgw = deriv(g, CDir::Wbar);
    DolbeaultData out;
    out.aV = MatrixField(grid, d.rank(), Degree::Dzb);
    out.aH = MatrixField(grid, d.rank(), Degree::Dwb);
    for (long p = 0; p < grid.n_points(); ++p) {
        out.aV.at(p) = g.at(p) * d.aV.at(p) * ginv[p] - dgz.at(p) * ginv[p];
        out.aH.at(p) = g.at(p) * d.aH.at(p) * ginv[p] - dgw.at(p) * ginv[p];
    }
    out.gauge_fixed = false;
    return out;
}

MatrixField metric_sqrt_field(const MetricData& h) {
    MatrixField out(h.sigma.grid(), h.sigma.rank());
    for (long p = 0; p < out.n_points(); ++p) out.at(p) = herm_sqrt(h.sigma.at(p));
    return out;
}

}  // namespace fhe
