#include "fhe/calculus.hpp"

#include <cmath>

#include "fhe/errors.hpp"

namespace fhe {

namespace {

// Strides of the four grid axes in point index space.
void axis_geometry(const ProductGrid& g, int axis, long& nblocks, long& stride, long& count) {
    long n[4] = {g.axis(0).n, g.axis(1).n, g.axis(2).n, g.axis(3).n};
    count = n[axis];
    stride = 1;
    for (int a = axis + 1; a < 4; ++a) stride *= n[a];
    nblocks = 1;
    for (int a = 0; a < axis; ++a) nblocks *= n[a];
}

Degree deriv_tag(Degree in, CDir dir) {
    if (in != Degree::Scalar) return Degree::TwoForm;
    switch (dir) {
        case CDir::Z: return Degree::Dz;
        case CDir::Zbar: return Degree::Dzb;
        case CDir::W: return Degree::Dw;
        case CDir::Wbar: return Degree::Dwb;
    }
    return in;
}

}  // namespace

MatrixField apply_axis(const MatrixField& f, int axis_index, const Eigen::MatrixXd& op) {
    const ProductGrid& g = f.grid();
    long nblocks, stride, count;
    axis_geometry(g, axis_index, nblocks, stride, count);
    const long e = static_cast<long>(f.rank()) * f.rank();
    MatrixField out(g, f.rank(), f.tag());
    const cd* in = f.data();
    cd* dst = out.data();
    for (long b = 0; b < nblocks; ++b) {
        const long block0 = b * count * stride;
        for (long s = 0; s < stride; ++s) {
            for (long j = 0; j < count; ++j) {
                cd* o = dst + (block0 + j * stride + s) * e;
                for (long l = 0; l < count; ++l) {
                    const double c = op(j, l);
                    if (c == 0.0) continue;
                    const cd* i = in + (block0 + l * stride + s) * e;
                    for (long q = 0; q < e; ++q) o[q] += c * i[q];
                }
            }
        }
    }
    return out;
}

BaseField apply_base_axis(const BaseField& f, int base_axis, const Eigen::MatrixXd& op) {
    const ProductGrid& g = f.grid();
    const long n2 = g.axis(2).n, n3 = g.axis(3).n;
    const long e = static_cast<long>(f.rank()) * f.rank();
    BaseField out(g, f.rank());
    const cd* in = f.at(0).data();
    cd* dst = out.at(0).data();
    if (base_axis == 2) {
        for (long j = 0; j < n2; ++j)
            for (long s = 0; s < n3; ++s) {
                cd* o = dst + (j * n3 + s) * e;
                for (long l = 0; l < n2; ++l) {
                    const double c = op(j, l);
                    if (c == 0.0) continue;
                    const cd* i = in + (l * n3 + s) * e;
                    for (long q = 0; q < e; ++q) o[q] += c * i[q];
                }
            }
    } else {
        for (long s = 0; s < n2; ++s)
            for (long j = 0; j < n3; ++j) {
                cd* o = dst + (s * n3 + j) * e;
                for (long l = 0; l < n3; ++l) {
                    const double c = op(j, l);
                    if (c == 0.0) continue;
                    const cd* i = in + (s * n3 + l) * e;
                    for (long q = 0; q < e; ++q) o[q] += c * i[q];
                }
            }
    }
    return out;
}

MatrixField deriv(const MatrixField& f, CDir dir) {
    const ProductGrid& g = f.grid();
    int a0 = (dir == CDir::Z || dir == CDir::Zbar) ? 0 : 2;
    MatrixField dx = apply_axis(f, a0, g.axis(a0).d1);
    MatrixField dy = apply_axis(f, a0 + 1, g.axis(a0 + 1).d1);
    const cd ii(0.0, 1.0);
    cd cy = (dir == CDir::Z || dir == CDir::W) ? -ii : ii;
    MatrixField out = 0.5 * (dx + cy * dy);
    out.set_tag(deriv_tag(f.tag(), dir));
    return out;
}

BaseField base_deriv(const BaseField& f, CDir dir) {
    const ProductGrid& g = f.grid();
    assert(dir == CDir::W || dir == CDir::Wbar);
    BaseField dx = apply_base_axis(f, 2, g.axis(2).d1);
    BaseField dy = apply_base_axis(f, 3, g.axis(3).d1);
    const cd ii(0.0, 1.0);
    cd cy = (dir == CDir::W) ? -ii : ii;
    return 0.5 * (dx + cy * dy);
}

MatrixField contract(const OneOneForm& F, ContractMode mode) {
    return contract(F, mode, F.zz.grid().k());
}

MatrixField contract(const OneOneForm& F, ContractMode mode, double k) {
    const cd c(0.0, -2.0);  // Lambda(phi dz^dzbar) = -2i phi
    switch (mode) {
        case ContractMode::V: return c * F.zz;
        case ContractMode::H: return c * F.ww;
        case ContractMode::K: {
            MatrixField out = F.zz + cd(1.0 / k, 0.0) * F.ww;
            return c * out;
        }
    }
    throw DomainError("unknown contraction mode");
}

BaseField fibre_integral(const MatrixField& f) {
    const ProductGrid& g = f.grid();
    assert(f.tag() == Degree::Scalar);
    BaseField out(g, f.rank());
    for (long pf = 0; pf < g.n_fibre(); ++pf) {
        const double w = g.fibre_weight(pf);
        for (long pb = 0; pb < g.n_base(); ++pb)
            out.at(pb) += w * f.at(pf * g.n_base() + pb);
    }
    return out;
}

Eigen::MatrixXcd total_integral(const MatrixField& f) {
    const ProductGrid& g = f.grid();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(f.rank(), f.rank());
    for (long p = 0; p < g.n_points(); ++p) out += g.point_weight(p) * f.at(p);
    return out;
}

Eigen::MatrixXcd base_integral(const BaseField& f) {
    const ProductGrid& g = f.grid();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(f.rank(), f.rank());
    for (long pb = 0; pb < g.n_base(); ++pb) out += g.base_weight(pb) * f.at(pb);
    return out;
}

namespace {
double form_weight(Degree tag, double k) {
    switch (tag) {
        case Degree::Scalar: return 1.0;
        case Degree::Dz:
        case Degree::Dzb: return 2.0;
        case Degree::Dw:
        case Degree::Dwb: return 2.0 / k;
        default: throw DomainError("lp_norm/l2_inner: field must be scalar or a 1-form component");
    }
}
}  // namespace

double lp_norm_sq(const MatrixField& f, double k) {
    const ProductGrid& g = f.grid();
    const double wf = form_weight(f.tag(), k) * k;  // k^m volume factor, m = 1
    double s = 0.0;
    for (long p = 0; p < g.n_points(); ++p) s += g.point_weight(p) * f.at(p).squaredNorm();
    return wf * s;
}

cd l2_inner(const MatrixField& f, const MatrixField& g_, double k) {
    const ProductGrid& g = f.grid();
    assert(f.tag() == g_.tag());
    const double wf = form_weight(f.tag(), k) * k;
    cd s(0.0, 0.0);
    for (long p = 0; p < g.n_points(); ++p)
        s += g.point_weight(p) * (g_.at(p).adjoint() * f.at(p)).trace();
    return wf * s;
}

BaseField fibre_l2_inner(const MatrixField& f, const MatrixField& g_) {
    const ProductGrid& g = f.grid();
    BaseField out(g, 1);
    for (long pf = 0; pf < g.n_fibre(); ++pf) {
        const double w = g.fibre_weight(pf);
        for (long pb = 0; pb < g.n_base(); ++pb) {
            long p = pf * g.n_base() + pb;
            out.at(pb)(0, 0) += w * (g_.at(p).adjoint() * f.at(p)).trace();
        }
    }
    return out;
}

double RandomFields::unit() {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng_);
}

Eigen::MatrixXcd RandomFields::matrix(int rank) {
    Eigen::MatrixXcd m(rank, rank);
    for (int i = 0; i < rank; ++i)
        for (int j = 0; j < rank; ++j) m(i, j) = cd(unit(), unit());
    return m;
}

Eigen::MatrixXcd RandomFields::hermitian_matrix(int rank) {
    Eigen::MatrixXcd m = matrix(rank);
    return 0.5 * (m + m.adjoint().eval());
}

namespace {

struct AxisModes {
    // columns: mode functions evaluated at the grid points
    Eigen::MatrixXcd eval;
};

AxisModes axis_modes(const Axis& ax, int bw) {
    AxisModes am;
    if (ax.periodic) {
        int nm = 2 * bw + 1;
        am.eval.resize(ax.n, nm);
        for (int j = 0; j < ax.n; ++j)
            for (int m = -bw; m <= bw; ++m)
                am.eval(j, m + bw) = std::exp(cd(0.0, 2.0 * M_PI * m * ax.coord[j]));
    } else {
        int nm = bw + 1;
        am.eval.resize(ax.n, nm);
        for (int j = 0; j < ax.n; ++j)
            for (int m = 0; m <= bw; ++m) am.eval(j, m) = std::cos(M_PI * m * ax.coord[j]);
    }
    return am;
}

}  // namespace

MatrixField RandomFields::field(const ProductGrid& g, int rank, int bandwidth) {
    AxisModes am[4];
    int nm[4];
    for (int a = 0; a < 4; ++a) {
        const Axis& ax = g.axis(a);
        int bw = bandwidth;
        if (bw < 0) bw = ax.periodic ? ax.n / 3 : 3;
        if (ax.periodic && 2 * bw + 1 > ax.n) bw = (ax.n - 1) / 2;
        if (!ax.periodic && bw > ax.n - 2) bw = ax.n - 2;
        am[a] = axis_modes(ax, bw);
        nm[a] = static_cast<int>(am[a].eval.cols());
    }
    const long e = static_cast<long>(rank) * rank;
    // coefficients on the mode box, then transform axis by axis
    long csize = static_cast<long>(nm[0]) * nm[1] * nm[2] * nm[3] * e;
    std::vector<cd> coef(csize);
    for (auto& c : coef) c = cd(unit(), unit());
    // normalize so typical field magnitude is O(1)
    double scale = 1.0 / std::sqrt(static_cast<double>(csize) / e);
    for (auto& c : coef) c *= scale;

    // shape evolves from (nm0,nm1,nm2,nm3) to (n0,n1,n2,n3)
    long shape[4] = {nm[0], nm[1], nm[2], nm[3]};
    std::vector<cd> cur = std::move(coef);
    for (int a = 0; a < 4; ++a) {
        long nblocks = 1, stride = e;
        for (int b = 0; b < a; ++b) nblocks *= shape[b];
        for (int b = a + 1; b < 4; ++b) stride *= shape[b];
        long count_in = shape[a];
        long count_out = g.axis(a).n;
        std::vector<cd> next(nblocks * count_out * stride, cd(0, 0));
        for (long b = 0; b < nblocks; ++b)
            for (long j = 0; j < count_out; ++j)
                for (long l = 0; l < count_in; ++l) {
                    cd c = am[a].eval(static_cast<int>(j), static_cast<int>(l));
                    const cd* src = cur.data() + (b * count_in + l) * stride;
                    cd* dst = next.data() + (b * count_out + j) * stride;
                    for (long q = 0; q < stride; ++q) dst[q] += c * src[q];
                }
        cur = std::move(next);
        shape[a] = count_out;
    }
    MatrixField out(g, rank);
    std::copy(cur.begin(), cur.end(), out.data());
    return out;
}

MatrixField RandomFields::hermitian_field(const ProductGrid& g, int rank, int bandwidth) {
    MatrixField f = field(g, rank, bandwidth);
    for (long p = 0; p < f.n_points(); ++p) {
        Eigen::MatrixXcd m = f.at(p);
        f.at(p) = 0.5 * (m + m.adjoint().eval());
    }
    return f;
}

MatrixField RandomFields::positive_field(const ProductGrid& g, int rank, double amplitude,
                                         int bandwidth) {
    MatrixField u = hermitian_field(g, rank, bandwidth);
    double m = u.max_abs();
    if (m > 0) u *= cd(amplitude / m, 0.0);
    MatrixField out(g, rank);
    for (long p = 0; p < g.n_points(); ++p) out.at(p) = herm_exp(u.at(p));
    return out;
}

MatrixField RandomFields::positive_bandlimited(const ProductGrid& g, int rank, double margin,
                                               int bandwidth) {
    MatrixField b = hermitian_field(g, rank, bandwidth);
    double m = b.max_abs();
    if (m > 0) b *= cd(margin / m, 0.0);
    for (long p = 0; p < g.n_points(); ++p)
        b.at(p) += Eigen::MatrixXcd::Identity(rank, rank);
    return b;
}

BaseField RandomFields::base_field(const ProductGrid& g, int rank, int bandwidth) {
    // synthesize on the base axes only (reusing the full-grid machinery on a
    // zero-bandwidth fibre would waste the RNG stream)
    AxisModes am[2];
    int nm[2];
    for (int a = 0; a < 2; ++a) {
        const Axis& ax = g.axis(2 + a);
        int bw = bandwidth;
        if (bw < 0) bw = ax.periodic ? ax.n / 3 : 3;
        if (ax.periodic && 2 * bw + 1 > ax.n) bw = (ax.n - 1) / 2;
        if (!ax.periodic && bw > ax.n - 2) bw = ax.n - 2;
        am[a] = axis_modes(ax, bw);
        nm[a] = static_cast<int>(am[a].eval.cols());
    }
    BaseField out(g, rank);
    std::vector<Eigen::MatrixXcd> coef(static_cast<size_t>(nm[0]) * nm[1]);
    for (auto& c : coef) c = matrix(rank) / std::sqrt(static_cast<double>(nm[0] * nm[1]));
    for (int j1 = 0; j1 < g.axis(2).n; ++j1)
        for (int j2 = 0; j2 < g.axis(3).n; ++j2) {
            Eigen::MatrixXcd v = Eigen::MatrixXcd::Zero(rank, rank);
            for (int m1 = 0; m1 < nm[0]; ++m1)
                for (int m2 = 0; m2 < nm[1]; ++m2)
                    v += am[0].eval(j1, m1) * am[1].eval(j2, m2) * coef[m1 * nm[1] + m2];
            out.at(g.base_index(j1, j2)) = v;
        }
    return out;
}

BaseField RandomFields::base_hermitian(const ProductGrid& g, int rank, int bandwidth) {
    BaseField f = base_field(g, rank, bandwidth);
    hermitize(f);
    return f;
}

}  // namespace fhe
